//! Trial-based testers for super-Poincaré, Beckner-type and F-Sobolev
//! inequalities on a grid.

use serde::Serialize;

use super::trials::{search, Trial, TrialFamily};
use super::{dirichlet_energy, FSpec, GridInfo, GridMeasure};
use crate::capacity::{BetaFunction, RateFunction, Verdict};
use crate::error::{domain, Error, Result};
use crate::measure1d::PotentialRecipe;

/// Relative slack on every pass/fail threshold, absorbing O(h) grid effects.
pub const GRID_SLACK: f64 = 0.05;

/// Smallest exponent used for Beckner-type tests; `p → 1` is where the quotient is stiff.
pub const BECKNER_P_MIN: f64 = 1.0 + 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub inequality: String,
    pub measure: PotentialRecipe,
    pub grid: GridInfo,
    pub trial_family: TrialFamily,
    /// Parameters scanned (`s` values or `p` values).
    pub parameters: Vec<f64>,
    /// Constant in front of the energy before the grid slack.
    pub constant: f64,
    pub worst_ratio: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    pub worst_trial: Trial,
    pub worst_parameter: f64,
}

fn quotient(numerator: f64, scale: f64, energy: f64) -> Result<f64> {
    if energy > 0.0 {
        return Ok(numerator / (scale * energy));
    }
    // only constants have zero energy on a connected grid
    if numerator > 1e-14 {
        return Err(Error::Internal(format!(
            "non-constant trial with zero energy (numerator {numerator:e})"
        )));
    }
    Ok(0.0)
}

/// `(∫f² - s(∫|f|)²) / (β(s) E(f))`.
pub fn super_poincare_ratio(gm: &GridMeasure, beta: &BetaFunction, s: f64, f: &[f64]) -> Result<f64> {
    let l1 = gm.moment(f, 1.0);
    quotient(gm.norm2_sq(f) - s * l1 * l1, beta.value(s), dirichlet_energy(gm, f))
}

/// `(∫f² - (∫|f|^p)^{2/p}) / (T(2-p) E(f))`.
pub fn beckner_ratio(gm: &GridMeasure, rate: &RateFunction, p: f64, f: &[f64]) -> Result<f64> {
    let lp = gm.moment(f, p).powf(2.0 / p);
    quotient(gm.norm2_sq(f) - lp, rate.value(2.0 - p), dirichlet_energy(gm, f))
}

/// `∫f² F(f²/∫f²) / E(f)`, using `u F(u) → 0` at `u = 0`.
pub fn fsobolev_ratio(gm: &GridMeasure, fspec: &FSpec, f: &[f64]) -> Result<f64> {
    let n2 = gm.norm2_sq(f);
    if n2 == 0.0 {
        return Ok(0.0);
    }
    let lhs: f64 = f
        .iter()
        .zip(gm.weights())
        .map(|(v, w)| n2 * fspec.weighted(v * v / n2) * w)
        .sum();
    quotient(lhs, 1.0, dirichlet_energy(gm, f))
}

fn max_over<F: Fn(f64) -> Result<f64>>(params: &[f64], ratio: F) -> Result<(f64, f64)> {
    let mut best = (f64::NEG_INFINITY, params[0]);
    for &q in params {
        let r = ratio(q)?;
        if r > best.0 {
            best = (r, q);
        }
    }
    Ok(best)
}

#[allow(clippy::too_many_arguments)]
fn report(
    inequality: &str,
    gm: &GridMeasure,
    family: &TrialFamily,
    parameters: Vec<f64>,
    constant: f64,
    found: super::trials::SearchResult,
) -> InequalityReport {
    let threshold = constant * (1.0 + GRID_SLACK);
    InequalityReport {
        inequality: inequality.into(),
        measure: gm.measure().potential().recipe().clone(),
        grid: gm.info(),
        trial_family: *family,
        parameters,
        constant,
        worst_ratio: found.worst_ratio,
        threshold,
        verdict: if found.worst_ratio <= threshold { Verdict::Pass } else { Verdict::Fail },
        worst_trial: found.worst_trial,
        worst_parameter: found.worst_parameter,
    }
}

/// Worst super-Poincaré ratio against `constant · β(s)` over trials and `s_set`.
pub fn super_poincare_test(
    gm: &GridMeasure,
    beta: &BetaFunction,
    s_set: &[f64],
    family: &TrialFamily,
    constant: f64,
) -> Result<InequalityReport> {
    if s_set.is_empty() || s_set.iter().any(|&s| !(s >= 1.0)) {
        return Err(domain("super_poincare_test: s values must be >= 1"));
    }
    let found = search(gm, family, |f| {
        max_over(s_set, |s| super_poincare_ratio(gm, beta, s, f))
    })?;
    Ok(report("super-poincare", gm, family, s_set.to_vec(), constant, found))
}

/// Worst Beckner-type ratio against `c · T(2-p)` over trials and `p_set`.
pub fn beckner_test(
    gm: &GridMeasure,
    rate: &RateFunction,
    c: f64,
    p_set: &[f64],
    family: &TrialFamily,
) -> Result<InequalityReport> {
    if p_set.is_empty() || p_set.iter().any(|&p| !(p > 1.0 && p < 2.0)) {
        return Err(domain("beckner_test: p values must lie in (1, 2)"));
    }
    let ps: Vec<f64> = p_set.iter().map(|&p| p.max(BECKNER_P_MIN)).collect();
    let found = search(gm, family, |f| max_over(&ps, |p| beckner_ratio(gm, rate, p, f)))?;
    Ok(report("beckner", gm, family, ps.clone(), c, found))
}

/// Worst homogeneous F-Sobolev ratio against `C_F`.
pub fn fsobolev_test(gm: &GridMeasure, fspec: &FSpec, family: &TrialFamily) -> Result<InequalityReport> {
    if fspec.value(1.0) > 0.0 {
        return Err(domain("fsobolev_test: F(1) must be <= 0"));
    }
    let found = search(gm, family, |f| Ok((fsobolev_ratio(gm, fspec, f)?, 1.0)))?;
    Ok(report("f-sobolev", gm, family, vec![], fspec.constant, found))
}

/// `[∫(g-m)² - (s-1)(∫|g-m|)²] - [∫g² - s(∫|g|)²]` with `m` a grid median of `g`.
pub fn rothaus_gap(gm: &GridMeasure, g: &[f64], s: f64) -> f64 {
    let med = gm.median(g);
    let centered: Vec<f64> = g.iter().map(|v| v - med).collect();
    let l1 = gm.moment(g, 1.0);
    let c1 = gm.moment(&centered, 1.0);
    let lhs = gm.norm2_sq(g) - s * l1 * l1;
    let rhs = gm.norm2_sq(&centered) - (s - 1.0) * c1 * c1;
    rhs - lhs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::{discretize, FFunction};
    use crate::measure1d::{build_measure, Potential};

    fn grid(recipe: PotentialRecipe, n: usize) -> GridMeasure {
        let m = build_measure(Potential::new(recipe).unwrap()).unwrap();
        let x = m.truncation();
        discretize(&m, n, (-x, x)).unwrap()
    }

    #[test]
    fn constants_give_nonpositive_ratios() {
        let gm = grid(PotentialRecipe::power(1.0), 200);
        let beta = BetaFunction::new(crate::capacity::BetaRecipe::Constant { value: 1.0 }).unwrap();
        let c = vec![1.7; gm.len()];
        for s in [1.0, 2.0, 100.0] {
            assert!(super_poincare_ratio(&gm, &beta, s, &c).unwrap() <= 0.0);
        }
        let rate = RateFunction::constant(1.0).unwrap();
        assert_eq!(beckner_ratio(&gm, &rate, 1.5, &c).unwrap(), 0.0);
        let f = FSpec::new(FFunction::Log, 2.0).unwrap();
        assert_eq!(fsobolev_ratio(&gm, &f, &c).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_log_sobolev_passes() {
        let gm = grid(PotentialRecipe::Power { p: 2.0, scale: 0.5 }, 1000);
        let f = FSpec::new(FFunction::Log, 2.0).unwrap();
        let r = fsobolev_test(&gm, &f, &TrialFamily::new(7, 200)).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        assert!(r.worst_ratio > 0.5);
    }

    #[test]
    fn rothaus_gap_is_nonnegative() {
        let gm = grid(PotentialRecipe::power(1.5), 300);
        let g = gm.sample(|x| (3.0 * x).sin() + 0.4 * x);
        for s in [1.0, 3.0, 50.0] {
            assert!(rothaus_gap(&gm, &g, s) >= -1e-12);
        }
    }
}
