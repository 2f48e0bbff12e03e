//! Exact isoperimetric profiles of symmetric log-concave line measures,
//! the comparison function `L_Φ` and their asymptotic ratio.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::measure1d::{LineMeasure, Potential};
use crate::numeric::min_of;

fn check_probability(t: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(domain(format!("{what}: t must lie in [0,1], got {t}")));
    }
    Ok(())
}

/// `I(t) = ρ(H⁻¹(min(t, 1-t)))`. Refuses measures not flagged symmetric log-concave.
pub fn profile_at(m: &LineMeasure, t: f64) -> Result<f64> {
    check_probability(t, "profile_at")?;
    if !m.is_symmetric_log_concave() {
        return Err(Error::NotLogConcave(
            "the potential is not certified monotone and convex".into(),
        ));
    }
    if t == 0.0 || t == 1.0 {
        return Ok(0.0);
    }
    let u = t.min(1.0 - t);
    Ok(m.density(m.upper_quantile(u)))
}

/// `L_Φ(t) = min(t,1-t) · Φ'∘Φ⁻¹(log 1/min(t,1-t))` with the right derivative.
pub fn l_at(potential: &Potential, t: f64) -> Result<f64> {
    check_probability(t, "l_at")?;
    let base = potential.value(0.0);
    if base >= std::f64::consts::LN_2 {
        return Err(domain(format!(
            "l_at: requires phi(0) < log 2, got phi(0) = {base}"
        )));
    }
    if t == 0.0 || t == 1.0 {
        return Ok(0.0);
    }
    let u = t.min(1.0 - t);
    Ok(u * potential.slope_at_level(-u.ln()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioRow {
    pub t: f64,
    pub profile: f64,
    pub denominator: f64,
    pub ratio: f64,
}

/// Ratio `I(t) / (t Φ'∘Φ⁻¹(log 1/t))` along a decreasing grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioScan {
    pub rows: Vec<RatioRow>,
    /// `|ratio - 1|` never increases as `t` decreases along the grid.
    pub monotone_approach: bool,
    /// Smallest and largest ratio: `k₁ L ≤ I ≤ k₂ L` on the grid.
    pub k_min: f64,
    pub k_max: f64,
}

pub fn asymptotic_ratio_scan(m: &LineMeasure, t_grid: &[f64]) -> Result<RatioScan> {
    let rows = t_grid
        .par_iter()
        .map(|&t| {
            if !(t > 0.0 && t < 1.0) {
                return Err(domain(format!("asymptotic_ratio_scan: t must lie in (0,1), got {t}")));
            }
            let profile = profile_at(m, t)?;
            let u = t.min(1.0 - t);
            let denominator = u * m.potential().slope_at_level(-u.ln());
            Ok(RatioRow {
                t,
                profile,
                denominator,
                ratio: profile / denominator,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ordered: Vec<&RatioRow> = rows.iter().collect();
    ordered.sort_by(|a, b| b.t.total_cmp(&a.t));
    let monotone_approach = ordered
        .windows(2)
        .all(|w| (w[1].ratio - 1.0).abs() <= (w[0].ratio - 1.0).abs() + 1e-12);
    let k_min = min_of(rows.iter().map(|r| r.ratio));
    let k_max = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(RatioScan {
        rows,
        monotone_approach,
        k_min,
        k_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileRow {
    pub t: f64,
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub ratio: f64,
}

/// Profile, comparison function and their ratio on a grid of masses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileTable {
    pub rows: Vec<ProfileRow>,
}

impl ProfileTable {
    pub fn build(m: &LineMeasure, t_grid: &[f64]) -> Result<Self> {
        let rows = t_grid
            .par_iter()
            .map(|&t| {
                if !(t > 0.0 && t < 1.0) {
                    return Err(domain(format!("profile table: t must lie in (0,1), got {t}")));
                }
                let i = profile_at(m, t)?;
                let l = l_at(m.potential(), t)?;
                Ok(ProfileRow {
                    t,
                    i,
                    l,
                    ratio: i / l,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ProfileTable { rows })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,I,L,ratio\n");
        for r in &self.rows {
            out.push_str(&format!("{:e},{:e},{:e},{:e}\n", r.t, r.i, r.l, r.ratio));
        }
        out
    }
}

/// `inf_t I_{m1}(t) / I_{m2}(t)` over the grid.
pub fn domination_constant(m1: &LineMeasure, m2: &LineMeasure, t_grid: &[f64]) -> Result<f64> {
    let ratios = t_grid
        .par_iter()
        .map(|&t| {
            if !(t > 0.0 && t < 1.0) {
                return Err(domain(format!("domination_constant: t must lie in (0,1), got {t}")));
            }
            Ok(profile_at(m1, t)? / profile_at(m2, t)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(min_of(ratios))
}

/// The three doubling properties of a convex potential with concave square root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoublingCheck {
    pub x: f64,
    /// `Φ⁻¹(x/2) ≥ Φ⁻¹(x)/2`.
    pub inverse_half: bool,
    /// `Φ(2x) ≤ 4Φ(x)`.
    pub value_double: bool,
    /// `Φ'(x/2) ≥ Φ'(x)/2`.
    pub derivative_half: bool,
}

impl DoublingCheck {
    pub fn all(&self) -> bool {
        self.inverse_half && self.value_double && self.derivative_half
    }
}

/// Evaluates the doubling properties at `x > 0`, allowing a relative rounding slack of 1e-12.
pub fn doubling_properties(potential: &Potential, x: f64) -> Result<DoublingCheck> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(domain(format!("doubling_properties: x must be positive, got {x}")));
    }
    let slack = 1e-12;
    let ih = potential.inverse(0.5 * x);
    let i1 = 0.5 * potential.inverse(x);
    let v2 = potential.value(2.0 * x);
    let v1 = 4.0 * potential.value(x);
    let dh = potential.derivative(0.5 * x);
    let d1 = 0.5 * potential.derivative(x);
    Ok(DoublingCheck {
        x,
        inverse_half: ih >= i1 * (1.0 - slack),
        value_double: v2 <= v1 * (1.0 + slack),
        derivative_half: dh >= d1 * (1.0 - slack),
    })
}
