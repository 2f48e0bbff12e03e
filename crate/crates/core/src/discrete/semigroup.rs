//! Semigroup evolution `P_t = e^{tL}` and the bounds built on it.

use serde::Serialize;

use super::{GridMeasure, Generator, IntervalSet};
use crate::capacity::BetaFunction;
use crate::error::{domain, Result};
use crate::numeric::{artanh_sqrt_one_minus_exp, logspace};

/// Convergence target between successive step-doublings, in the weighted 2-norm.
pub const EVOLVE_TOLERANCE: f64 = 1e-8;
const MAX_STEPS: usize = 1 << 26;

/// Result of [`evolve_detailed`].
#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub values: Vec<f64>,
    pub steps: usize,
    /// Weighted 2-norm difference with the previous refinement.
    pub last_change: f64,
}

/// `P_t f` by Crank-Nicolson with step doubling until successive results
/// differ by less than [`EVOLVE_TOLERANCE`].
pub fn evolve(gen: &Generator, f0: &[f64], t: f64) -> Result<Vec<f64>> {
    Ok(evolve_detailed(gen, f0, t)?.values)
}

pub fn evolve_detailed(gen: &Generator, f0: &[f64], t: f64) -> Result<Evolution> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(domain(format!("evolve: t must be finite and >= 0, got {t}")));
    }
    if f0.len() != gen.len() {
        return Err(domain("evolve: function length does not match the grid"));
    }
    if t == 0.0 {
        return Ok(Evolution {
            values: f0.to_vec(),
            steps: 0,
            last_change: 0.0,
        });
    }
    let h = gen.spacing();
    // keeps both Crank-Nicolson factors entrywise non-negative
    let dt_max = (0.5 * h * h).min(1.0 / gen.max_rate());
    let mut steps = ((t / dt_max).ceil() as usize).max(1).next_power_of_two();
    let mut prev = crank_nicolson(gen, f0, t, steps);
    loop {
        steps *= 2;
        let cur = crank_nicolson(gen, f0, t, steps);
        let change = weighted_distance(gen.weights(), &cur, &prev);
        if change < EVOLVE_TOLERANCE || steps >= MAX_STEPS {
            return Ok(Evolution {
                values: cur,
                steps,
                last_change: change,
            });
        }
        prev = cur;
    }
}

fn weighted_distance(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(w)
        .map(|((x, y), w)| (x - y) * (x - y) * w)
        .sum::<f64>()
        .sqrt()
}

fn crank_nicolson(gen: &Generator, f0: &[f64], t: f64, steps: usize) -> Vec<f64> {
    let (lower, diag, upper) = gen.bands();
    let n = f0.len();
    let tau = 0.5 * t / steps as f64;
    // Thomas factorisation of (I - τL), reused for every step
    let mut cprime = vec![0.0; n];
    let mut denom = vec![0.0; n];
    let a = |i: usize| -tau * lower[i];
    let b = |i: usize| 1.0 - tau * diag[i];
    let c = |i: usize| -tau * upper[i];
    denom[0] = b(0);
    cprime[0] = c(0) / denom[0];
    for i in 1..n {
        denom[i] = b(i) - a(i) * cprime[i - 1];
        cprime[i] = c(i) / denom[i];
    }
    let mut u = f0.to_vec();
    let mut rhs = vec![0.0; n];
    for _ in 0..steps {
        for i in 0..n {
            let mut v = (1.0 + tau * diag[i]) * u[i];
            if i > 0 {
                v += tau * lower[i] * u[i - 1];
            }
            if i + 1 < n {
                v += tau * upper[i] * u[i + 1];
            }
            rhs[i] = v;
        }
        rhs[0] /= denom[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - a(i) * rhs[i - 1]) / denom[i];
        }
        u[n - 1] = rhs[n - 1];
        for i in (0..n - 1).rev() {
            u[i] = rhs[i] - cprime[i] * u[i + 1];
        }
    }
    u
}

/// `e^{-2t/β(s)} ∫f² + s(1-e^{-2t/β(s)})(∫|f|)² - ∫(P_t f)²`, with `β` already
/// carrying its constant.
pub fn wang_decay_check(
    gen: &Generator,
    gm: &GridMeasure,
    f: &[f64],
    beta: &BetaFunction,
    s: f64,
    t: f64,
) -> Result<f64> {
    if !(s >= 1.0) {
        return Err(domain(format!("wang_decay_check: s must be >= 1, got {s}")));
    }
    let pt = evolve(gen, f, t)?;
    let decay = (-2.0 * t / beta.value(s)).exp();
    let l1 = gm.moment(f, 1.0);
    let rhs = decay * gm.norm2_sq(f) + s * (1.0 - decay) * l1 * l1;
    Ok(rhs - gm.norm2_sq(&pt))
}

/// Both sides of the semigroup isoperimetric bound for one set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LedouxCheck {
    /// `artanh(√(1-e^{-4Rt}))/(2√R) · μ_s(∂A)`, or `√t μ_s(∂A)` when `R = 0`.
    pub lhs: f64,
    /// `∫f² - ∫(P_t f)²` for the mollified indicator `f` of `A`.
    pub rhs: f64,
    /// Same quantity for the complement.
    pub rhs_complement: f64,
    pub margin: f64,
}

/// Time factor `artanh(√(1-e^{-4Rt}))/(2√R)`, continued by `√t` at `R = 0`.
pub fn ledoux_factor(t: f64, r: f64) -> f64 {
    if r == 0.0 {
        t.sqrt()
    } else {
        artanh_sqrt_one_minus_exp(4.0 * r * t) / (2.0 * r.sqrt())
    }
}

pub fn ledoux_check(gen: &Generator, gm: &GridMeasure, set: &IntervalSet, t: f64, r: f64) -> Result<LedouxCheck> {
    if !(r >= 0.0) {
        return Err(domain(format!("ledoux_check: R must be >= 0, got {r}")));
    }
    if !(t > 0.0) {
        return Err(domain(format!("ledoux_check: t must be > 0, got {t}")));
    }
    let m = gm.measure();
    let lhs = ledoux_factor(t, r) * set.boundary_measure(m);
    let f = set.mollified_indicator(gm);
    let pt = evolve(gen, &f, t)?;
    let rhs = gm.norm2_sq(&f) - gm.norm2_sq(&pt);
    let fc: Vec<f64> = f.iter().map(|v| 1.0 - v).collect();
    let ptc = evolve(gen, &fc, t)?;
    let rhs_complement = gm.norm2_sq(&fc) - gm.norm2_sq(&ptc);
    Ok(LedouxCheck {
        lhs,
        rhs,
        rhs_complement,
        margin: lhs - rhs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IsoBranch {
    /// `(1/3) p / √β(1/(2p))`.
    SmallSet,
    /// Best value of the two-parameter bound over an `(s, t)` grid.
    Optimized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsoBound {
    pub value: f64,
    pub branch: IsoBranch,
    pub s: f64,
    pub t: f64,
}

/// `p (1 - s p) · (1 - e^{-2t/β(s)}) / ledoux_factor(t, R)`.
pub fn iso_two_parameter(beta: &BetaFunction, r: f64, p: f64, s: f64, t: f64) -> f64 {
    p * (1.0 - s * p) * (-(-2.0 * t / beta.value(s)).exp_m1()) / ledoux_factor(t, r)
}

/// Lower bound on `μ_s(∂A)` for sets with `min(μ(A), μ(Aᶜ)) = p`.
pub fn iso_lower_bound(beta: &BetaFunction, r: f64, p: f64) -> Result<IsoBound> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(domain(format!("iso_lower_bound: R must be finite and >= 0, got {r}")));
    }
    if !(p > 0.0 && p <= 0.5) {
        return Err(domain(format!("iso_lower_bound: p must lie in (0, 1/2], got {p}")));
    }
    if beta.vanishes_at_infinity() {
        let limit = if r == 0.0 {
            Some(0.5)
        } else {
            beta.inverse(1.0 / r).map(|s| 0.5f64.min(0.5 / s))
        };
        if let Some(limit) = limit {
            if p <= limit {
                let s = 0.5 / p;
                return Ok(IsoBound {
                    value: p / (3.0 * beta.value(s).sqrt()),
                    branch: IsoBranch::SmallSet,
                    s,
                    t: 0.5 * beta.value(s),
                });
            }
        }
    }
    let s_grid = logspace(1.0, 1.0 / p, 66);
    let t_grid = logspace(1e-6, 1e6, 121);
    let mut best = IsoBound {
        value: 0.0,
        branch: IsoBranch::Optimized,
        s: 1.0,
        t: 1.0,
    };
    for &s in &s_grid[..s_grid.len() - 1] {
        for &t in &t_grid {
            let v = iso_two_parameter(beta, r, p, s, t);
            if v > best.value {
                best = IsoBound {
                    value: v,
                    branch: IsoBranch::Optimized,
                    s,
                    t,
                };
            }
        }
    }
    Ok(best)
}

/// `C(R, β(1))` from the two-parameter bound at `s = 1`, `t = β(1)`.
pub fn cheeger_constant(beta: &BetaFunction, r: f64) -> f64 {
    let t = beta.value(1.0);
    -(-2f64).exp_m1() / ledoux_factor(t, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::BetaRecipe;
    use crate::discrete::discretize;
    use crate::measure1d::{build_measure, Potential, PotentialRecipe};
    use approx::assert_relative_eq;

    fn grid(p: f64, n: usize) -> GridMeasure {
        let m = build_measure(Potential::new(PotentialRecipe::power(p)).unwrap()).unwrap();
        let x = m.truncation();
        discretize(&m, n, (-x, x)).unwrap()
    }

    #[test]
    fn identity_and_constants() {
        let gm = grid(1.0, 200);
        let gen = Generator::new(&gm);
        let f = gm.sample(|x| (-x * x).exp());
        assert_eq!(evolve(&gen, &f, 0.0).unwrap(), f);
        let c = vec![2.5; gm.len()];
        let pc = evolve(&gen, &c, 0.3).unwrap();
        assert!(pc.iter().all(|v| (v - 2.5).abs() < 1e-12));
        assert!(evolve(&gen, &f, -1.0).is_err());
    }

    #[test]
    fn mass_is_conserved() {
        let gm = grid(2.0, 400);
        let gen = Generator::new(&gm);
        let f = gm.sample(|x| if x < 0.3 { 1.0 } else { 0.0 });
        let pf = evolve(&gen, &f, 0.5).unwrap();
        assert!((gm.integrate(&pf) - gm.integrate(&f)).abs() < 1e-12);
        assert!(pf.iter().all(|&v| v >= -1e-14));
    }

    #[test]
    fn iso_small_set_example() {
        let beta = BetaFunction::new(BetaRecipe::InverseLog).unwrap();
        let b = iso_lower_bound(&beta, 0.0, 0.1).unwrap();
        assert_eq!(b.branch, IsoBranch::SmallSet);
        assert_relative_eq!(b.value, 0.1 * 6f64.ln().sqrt() / 3.0, max_relative = 1e-14);
        assert_relative_eq!(b.value, 0.0446, max_relative = 1e-2);
    }

    #[test]
    fn iso_fallback_for_constant_beta() {
        let beta = BetaFunction::new(BetaRecipe::Constant { value: 1.0 }).unwrap();
        let b = iso_lower_bound(&beta, 0.5, 0.1).unwrap();
        assert_eq!(b.branch, IsoBranch::Optimized);
        assert!(b.value > 0.0);
        let small = iso_lower_bound(&beta, 0.0, 1e-3).unwrap();
        let smaller = iso_lower_bound(&beta, 0.0, 1e-4).unwrap();
        assert!((small.value / smaller.value - 10.0).abs() < 0.1);
    }

    #[test]
    fn cheeger_constant_at_zero_curvature() {
        let beta = BetaFunction::new(BetaRecipe::Constant { value: 1.0 }).unwrap();
        assert_relative_eq!(cheeger_constant(&beta, 0.0), 1.0 - (-2f64).exp(), max_relative = 1e-15);
    }
}
