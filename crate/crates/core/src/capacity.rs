//! Capacities of half-lines, Hardy-type constants `B±(T)`, rate functions
//! `T` and `β`, and capacity-measure checks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrete::fspec::FSpec;
use crate::error::{domain, Error, Result};
use crate::measure1d::{LineMeasure, Potential, PotentialRecipe};
use crate::numeric::{golden_max, integrate_with_breaks, logspace, min_of, Tolerance};

/// Values above this are reported as divergent.
pub const DIVERGENCE_SENTINEL: f64 = 1e12;

const E_MINUS_ONE: f64 = std::f64::consts::E - 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Machine-readable outcome of a grid check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport<R> {
    pub check: String,
    pub grid: Vec<f64>,
    pub worst_margin: f64,
    pub verdict: Verdict,
    pub rows: Vec<R>,
}

/// Construction recipe of a rate function `T` on `(0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rate", rename_all = "kebab-case")]
pub enum RateRecipe {
    /// `T ≡ value`.
    Constant { value: f64 },
    /// `T_p(x) = x^{2(1-1/p)} / p²`.
    PowerFamily { p: f64 },
    /// `T(x) = [1 / Φ'∘Φ⁻¹(1/x)]²`.
    FromPotential { potential: PotentialRecipe },
}

#[derive(Debug, Clone, PartialEq)]
enum RateKind {
    Constant(f64),
    Power(f64),
    Potential(Potential),
}

/// Monotonicity certificates of a rate function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateCertificate {
    pub non_decreasing: bool,
    pub ratio_non_increasing: bool,
}

impl RateCertificate {
    pub fn holds(&self) -> bool {
        self.non_decreasing && self.ratio_non_increasing
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RateRecipe", into = "RateRecipe")]
pub struct RateFunction {
    recipe: RateRecipe,
    kind: RateKind,
}

impl TryFrom<RateRecipe> for RateFunction {
    type Error = Error;
    fn try_from(recipe: RateRecipe) -> Result<Self> {
        RateFunction::new(recipe)
    }
}

impl From<RateFunction> for RateRecipe {
    fn from(r: RateFunction) -> Self {
        r.recipe
    }
}

impl RateFunction {
    pub fn new(recipe: RateRecipe) -> Result<Self> {
        let kind = match &recipe {
            RateRecipe::Constant { value } => {
                if !(value.is_finite() && *value >= 0.0) {
                    return Err(domain(format!("constant rate must be finite and >= 0, got {value}")));
                }
                RateKind::Constant(*value)
            }
            RateRecipe::PowerFamily { p } => {
                if !(*p >= 1.0 && p.is_finite()) {
                    return Err(domain(format!("power-family rate: p must be >= 1, got {p}")));
                }
                RateKind::Power(*p)
            }
            RateRecipe::FromPotential { potential } => RateKind::Potential(Potential::new(potential.clone())?),
        };
        Ok(RateFunction { recipe, kind })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(RateRecipe::Constant { value })
    }

    pub fn power_family(p: f64) -> Result<Self> {
        Self::new(RateRecipe::PowerFamily { p })
    }

    pub fn recipe(&self) -> &RateRecipe {
        &self.recipe
    }

    /// `T(x)` for `x ∈ (0, 1]`; arguments above 1 are clamped to 1.
    pub fn value(&self, x: f64) -> f64 {
        let x = x.min(1.0);
        match &self.kind {
            RateKind::Constant(c) => *c,
            RateKind::Power(p) => x.powf(2.0 * (1.0 - 1.0 / p)) / (p * p),
            RateKind::Potential(pot) => {
                let d = pot.slope_at_level(1.0 / x);
                1.0 / (d * d)
            }
        }
    }

    /// `lim_{x→0⁺} T(x)`.
    pub fn limit_at_zero(&self) -> f64 {
        match &self.kind {
            RateKind::Constant(c) => *c,
            RateKind::Power(p) => {
                if *p == 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            RateKind::Potential(pot) => {
                if pot.derivative_unbounded() {
                    0.0
                } else {
                    self.value(1e-300)
                }
            }
        }
    }

    /// Checks monotonicity of `T` and `T(x)/x` on a 1000-point log grid over `[1e-8, 1]`.
    pub fn certificate(&self) -> RateCertificate {
        let grid = logspace(1e-8, 1.0, 1000);
        let vals: Vec<f64> = grid.iter().map(|&x| self.value(x)).collect();
        let tol = 1e-10;
        let non_decreasing = vals.windows(2).all(|w| w[1] >= w[0] * (1.0 - tol));
        let ratio_non_increasing = grid
            .windows(2)
            .zip(vals.windows(2))
            .all(|(x, v)| v[1] / x[1] <= v[0] / x[0] * (1.0 + tol));
        RateCertificate {
            non_decreasing,
            ratio_non_increasing,
        }
    }
}

/// Construction recipe of a function `β` on `[1, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "beta", rename_all = "kebab-case")]
pub enum BetaRecipe {
    Constant {
        value: f64,
    },
    /// `β(s) = T(1/log(1+s))` for `s ≥ e-1`, `T(1)` below.
    FromRate {
        rate: RateRecipe,
    },
    /// `β(s) = [1/Φ'∘Φ⁻¹(log(1+s))]²` for `s ≥ e-1`, `[1/Φ'∘Φ⁻¹(1)]²` below.
    FromPotential {
        potential: PotentialRecipe,
    },
    /// `β(s) = 1/log(1+s)`.
    InverseLog,
    /// `β(s) = 1/(1 + F₊(s))`.
    OnePlusFPlus {
        #[serde(rename = "F")]
        f: FSpec,
    },
    /// `β(s) = factor · inner(s)`.
    Scaled {
        factor: f64,
        inner: Box<BetaRecipe>,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum BetaKind {
    Constant(f64),
    FromRate(RateFunction),
    FromPotential(Potential),
    InverseLog,
    OnePlusF(FSpec),
    Scaled(f64, Box<BetaFunction>),
}

/// Certificates required by the sandwich bounds on `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaCertificate {
    pub non_increasing: bool,
    /// `s β(s)` is non-decreasing on `[2, ∞)`.
    pub s_beta_non_decreasing: bool,
}

impl BetaCertificate {
    pub fn holds(&self) -> bool {
        self.non_increasing && self.s_beta_non_decreasing
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BetaRecipe", into = "BetaRecipe")]
pub struct BetaFunction {
    recipe: BetaRecipe,
    kind: BetaKind,
}

impl TryFrom<BetaRecipe> for BetaFunction {
    type Error = Error;
    fn try_from(recipe: BetaRecipe) -> Result<Self> {
        BetaFunction::new(recipe)
    }
}

impl From<BetaFunction> for BetaRecipe {
    fn from(b: BetaFunction) -> Self {
        b.recipe
    }
}

impl BetaFunction {
    pub fn new(recipe: BetaRecipe) -> Result<Self> {
        let kind = match &recipe {
            BetaRecipe::Constant { value } => {
                if !(value.is_finite() && *value > 0.0) {
                    return Err(domain(format!("constant beta must be finite and > 0, got {value}")));
                }
                BetaKind::Constant(*value)
            }
            BetaRecipe::FromRate { rate } => BetaKind::FromRate(RateFunction::new(rate.clone())?),
            BetaRecipe::FromPotential { potential } => {
                let pot = Potential::new(potential.clone())?;
                let d = pot.slope_at_level(1.0);
                if !(d > 0.0) {
                    return Err(Error::Certificate(
                        "beta from potential: phi'(phi^{-1}(1)) = 0, the rate is degenerate".into(),
                    ));
                }
                BetaKind::FromPotential(pot)
            }
            BetaRecipe::InverseLog => BetaKind::InverseLog,
            BetaRecipe::OnePlusFPlus { f } => BetaKind::OnePlusF(*f),
            BetaRecipe::Scaled { factor, inner } => {
                if !(factor.is_finite() && *factor > 0.0) {
                    return Err(domain(format!("beta scale factor must be > 0, got {factor}")));
                }
                BetaKind::Scaled(*factor, Box::new(BetaFunction::new((**inner).clone())?))
            }
        };
        Ok(BetaFunction { recipe, kind })
    }

    /// `β(s) = T(1/log(1+s))` with the constant branch `T(1)` on `[1, e-1]`.
    pub fn from_rate(rate: &RateFunction) -> Self {
        BetaFunction {
            recipe: BetaRecipe::FromRate {
                rate: rate.recipe().clone(),
            },
            kind: BetaKind::FromRate(rate.clone()),
        }
    }

    pub fn from_potential(potential: &Potential) -> Result<Self> {
        Self::new(BetaRecipe::FromPotential {
            potential: potential.recipe().clone(),
        })
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(BetaRecipe::Scaled {
            factor,
            inner: Box::new(self.recipe.clone()),
        })
    }

    pub fn recipe(&self) -> &BetaRecipe {
        &self.recipe
    }

    /// `β(s)`; arguments below 1 are evaluated at 1.
    pub fn value(&self, s: f64) -> f64 {
        let s = s.max(1.0);
        match &self.kind {
            BetaKind::Constant(c) => *c,
            BetaKind::FromRate(rate) => {
                if s >= E_MINUS_ONE {
                    rate.value(1.0 / s.ln_1p())
                } else {
                    rate.value(1.0)
                }
            }
            BetaKind::FromPotential(pot) => {
                let level = if s >= E_MINUS_ONE { s.ln_1p() } else { 1.0 };
                let d = pot.slope_at_level(level);
                1.0 / (d * d)
            }
            BetaKind::InverseLog => 1.0 / s.ln_1p(),
            BetaKind::OnePlusF(f) => 1.0 / (1.0 + f.positive_part(s)),
            BetaKind::Scaled(c, inner) => c * inner.value(s),
        }
    }

    /// `lim_{s→∞} β(s)`.
    pub fn limit_at_infinity(&self) -> f64 {
        match &self.kind {
            BetaKind::Constant(c) => *c,
            BetaKind::FromRate(rate) => rate.limit_at_zero(),
            BetaKind::FromPotential(pot) => {
                if pot.derivative_unbounded() {
                    0.0
                } else {
                    self.value(1e300)
                }
            }
            BetaKind::InverseLog => 0.0,
            BetaKind::OnePlusF(f) => {
                if f.unbounded() {
                    0.0
                } else {
                    self.value(1e300)
                }
            }
            BetaKind::Scaled(c, inner) => c * inner.limit_at_infinity(),
        }
    }

    pub fn vanishes_at_infinity(&self) -> bool {
        self.limit_at_infinity() == 0.0
    }

    /// Generalised inverse `inf{s ≥ 1 : β(s) ≤ y}`, or `None` if `β > y` up to `s = 1e12`.
    pub fn inverse(&self, y: f64) -> Option<f64> {
        if self.value(1.0) <= y {
            return Some(1.0);
        }
        if self.value(DIVERGENCE_SENTINEL) > y {
            return None;
        }
        let u = crate::numeric::bisect(
            |u| if self.value(u.exp()) <= y { 1.0 } else { -1.0 },
            0.0,
            DIVERGENCE_SENTINEL.ln(),
            1e-13,
        );
        Some(u.exp())
    }

    /// Checks both monotonicity conditions on a log grid over `[1, 1e12]`.
    pub fn certificate(&self) -> BetaCertificate {
        let grid = logspace(1.0, DIVERGENCE_SENTINEL, 1000);
        let vals: Vec<f64> = grid.iter().map(|&s| self.value(s)).collect();
        let tol = 1e-10;
        let non_increasing = vals.windows(2).all(|w| w[1] <= w[0] * (1.0 + tol));
        let s_beta_non_decreasing = grid
            .windows(2)
            .zip(vals.windows(2))
            .filter(|(s, _)| s[0] >= 2.0)
            .all(|(s, v)| s[1] * v[1] >= s[0] * v[0] * (1.0 - tol));
        BetaCertificate {
            non_increasing,
            s_beta_non_decreasing,
        }
    }
}

/// `(∫_x^0 1/ρ)⁻¹` for `x < 0` and the mirror formula for `x > 0`; infinite at the median.
pub fn capacity_halfline(m: &LineMeasure, x: f64) -> f64 {
    if x == m.median() {
        return f64::INFINITY;
    }
    let a = x.abs();
    let pot = m.potential();
    let va = pot.value(a);
    // ∫_0^a e^{Φ(u)} du = e^{Φ(a)} ∫_0^a e^{Φ(u)-Φ(a)} du
    let j = integrate_with_breaks(
        |u| (pot.value(u) - va).exp(),
        0.0,
        a,
        &pot.kinks(),
        Tolerance::relative(1e-13),
    )
    .value;
    (-va).exp() / (m.normalization() * j)
}

/// `∫_0^a 1/ρ` for `a ≥ 0`, scaled by `e^{-Φ(a)}` to stay finite.
fn scaled_inverse_density_integral(m: &LineMeasure, a: f64) -> f64 {
    let pot = m.potential();
    let va = pot.value(a);
    m.normalization()
        * integrate_with_breaks(
            |u| (pot.value(u) - va).exp(),
            0.0,
            a,
            &pot.kinks(),
            Tolerance::relative(1e-13),
        )
        .value
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardySide {
    /// `B` on this side, infinite when the supremum diverges.
    pub value: f64,
    /// Tail mass where the supremum is attained.
    pub argmax_mass: f64,
    pub divergent: bool,
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardyConstants {
    pub minus: HardySide,
    pub plus: HardySide,
}

impl HardyConstants {
    pub fn max(&self) -> f64 {
        self.minus.value.max(self.plus.value)
    }
}

/// Grid of tail masses for Hardy suprema.
pub const HARDY_GRID_POINTS: usize = 512;
pub const HARDY_MIN_MASS: f64 = 1e-10;

fn hardy_side(m: &LineMeasure, rate: &RateFunction, lower: bool, points: usize) -> HardySide {
    let pot = m.potential();
    // x ↦ μ(tail beyond x) · T(1/log(1+1/μ))⁻¹ · ∫_m^x 1/ρ, parametrised by the tail mass
    let integrand = |t: f64| -> f64 {
        if t >= 0.5 {
            return 0.0;
        }
        let a = m.upper_quantile(t);
        let (mass, x) = if lower { (m.lower_tail(-a), -a) } else { (m.upper_tail(a), a) };
        let scaled = scaled_inverse_density_integral(m, x.abs());
        let tr = rate.value(1.0 / (1.0 / mass).ln_1p());
        if tr == 0.0 {
            return f64::INFINITY;
        }
        mass * pot.value(x).exp() * scaled / tr
    };
    let grid = logspace(HARDY_MIN_MASS, 0.5, points.max(16));
    let vals: Vec<f64> = grid.par_iter().map(|&t| integrand(t)).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return HardySide {
            value: f64::INFINITY,
            argmax_mass: 0.0,
            divergent: true,
            diagnostic: Some("rate function vanishes on the grid".into()),
        };
    }
    // first index of the maximum (order-independent)
    let (k, _) = vals
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bk, bv), (i, &v)| if v > bv { (i, v) } else { (bk, bv) });
    let decade = grid.iter().position(|&t| t >= 10.0 * HARDY_MIN_MASS).unwrap_or(1);
    let growth = vals[0] / vals[decade] - 1.0;
    if k <= 1 && growth > 0.01 {
        return HardySide {
            value: f64::INFINITY,
            argmax_mass: grid[0],
            divergent: true,
            diagnostic: Some(format!(
                "supremand grows by {:.2}% over the last decade of tail masses",
                100.0 * growth
            )),
        };
    }
    let lo = grid[k.saturating_sub(1)].ln();
    let hi = grid[(k + 1).min(grid.len() - 1)].ln();
    let (u, refined) = golden_max(|u| integrand(u.exp()), lo, hi, 1e-10);
    let (value, argmax_mass) = if refined > vals[k] { (refined, u.exp()) } else { (vals[k], grid[k]) };
    if value > DIVERGENCE_SENTINEL {
        return HardySide {
            value: f64::INFINITY,
            argmax_mass,
            divergent: true,
            diagnostic: Some(format!("supremum exceeds {DIVERGENCE_SENTINEL:e}")),
        };
    }
    HardySide {
        value,
        argmax_mass,
        divergent: false,
        diagnostic: None,
    }
}

/// `B₋(T)` and `B₊(T)` by a quantile-spaced scan with golden-section refinement.
pub fn hardy_constants(m: &LineMeasure, rate: &RateFunction) -> HardyConstants {
    hardy_constants_on(m, rate, HARDY_GRID_POINTS)
}

/// [`hardy_constants`] on a scan of `points` tail masses (at least 16).
pub fn hardy_constants_on(m: &LineMeasure, rate: &RateFunction, points: usize) -> HardyConstants {
    HardyConstants {
        minus: hardy_side(m, rate, true, points),
        plus: hardy_side(m, rate, false, points),
    }
}

/// Certified interval `[B/6, 20B]` for the optimal Beckner constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BecknerInterval {
    pub b: f64,
    pub lower: f64,
    pub upper: f64,
    /// False when `B` diverges: no Beckner inequality with this rate.
    pub finite: bool,
}

impl BecknerInterval {
    pub fn from_hardy(h: &HardyConstants) -> Self {
        let b = h.max();
        if !b.is_finite() {
            return BecknerInterval {
                b,
                lower: f64::INFINITY,
                upper: f64::INFINITY,
                finite: false,
            };
        }
        BecknerInterval {
            b,
            lower: b / 6.0,
            upper: 20.0 * b,
            finite: true,
        }
    }
}

pub fn beckner_constant_interval(m: &LineMeasure, rate: &RateFunction) -> BecknerInterval {
    BecknerInterval::from_hardy(&hardy_constants(m, rate))
}

/// `Q_A (1 - (1 + (K - Q_total)/Q_A)^{(a-1)/a})`.
pub fn supa_closed_form(q_total: f64, q_a: f64, k: f64, a: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(domain(format!("supa: a must lie in (0,1), got {a}")));
    }
    if !(q_a > 0.0 && q_a <= q_total) {
        return Err(domain(format!("supa: need 0 < Q_A <= Q_total, got Q_A={q_a}, Q_total={q_total}")));
    }
    if !(k > q_total) {
        return Err(domain(format!("supa: need K > Q_total, got K={k}, Q_total={q_total}")));
    }
    let exponent = (a - 1.0) / a;
    Ok(q_a * -((exponent * ((k - q_total) / q_a).ln_1p()).exp_m1()))
}

/// The middle term of the sandwich and its two bounds at `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sandwich {
    pub a: f64,
    pub lower: f64,
    pub sup: f64,
    pub upper: f64,
    pub argmax_s: f64,
    pub holds: bool,
}

/// `sup_{s≥1} a/(1+(s-1)a) / β(s)` on a log grid containing `1/a`, refined by golden section.
pub fn beta_sandwich(beta: &BetaFunction, a: f64) -> Result<Sandwich> {
    if !(a > 0.0 && a < 0.5) {
        return Err(domain(format!("sandwich: a must lie in (0,1/2), got {a}")));
    }
    let term = |s: f64| a / (1.0 + (s - 1.0) * a) / beta.value(s);
    let mut grid = logspace(1.0, DIVERGENCE_SENTINEL, 2000);
    grid.push(1.0 / a);
    grid.sort_by(f64::total_cmp);
    let vals: Vec<f64> = grid.iter().map(|&s| term(s)).collect();
    let (k, best) = vals
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bk, bv), (i, &v)| if v > bv { (i, v) } else { (bk, bv) });
    let lo = grid[k.saturating_sub(1)].ln();
    let hi = grid[(k + 1).min(grid.len() - 1)].ln();
    let (u, refined) = golden_max(|u| term(u.exp()), lo, hi, 1e-12);
    let (sup, argmax_s) = if refined > best { (refined, u.exp()) } else { (best, grid[k]) };
    let base = a / beta.value(1.0 / a);
    let lower = 0.5 * base;
    let upper = 2.0 * base;
    let slack = 1e-9;
    Ok(Sandwich {
        a,
        lower,
        sup,
        upper,
        argmax_s,
        holds: lower <= sup * (1.0 + slack) && sup <= upper * (1.0 + slack),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityRow {
    pub t: f64,
    pub capacity: f64,
    /// `t / β(1/t)`.
    pub required: f64,
    /// `sup_s (1/β(s)) t/(1+(s-1)t)`.
    pub required_sup: f64,
    /// `capacity / required`.
    pub margin: f64,
    /// `capacity / required_sup`.
    pub margin_sup: f64,
}

/// Checks `capa((-∞, H⁻¹(t)]) ≥ t/β(1/t)` and the supremum form on a grid of masses.
pub fn capacity_measure_check(
    m: &LineMeasure,
    beta: &BetaFunction,
    t_grid: &[f64],
) -> Result<CheckReport<CapacityRow>> {
    let rows = t_grid
        .par_iter()
        .map(|&t| {
            if !(t > 0.0 && t < 0.5) {
                return Err(domain(format!("capacity check: t must lie in (0,1/2), got {t}")));
            }
            let x = -m.upper_quantile(t);
            let capacity = capacity_halfline(m, x);
            let required = t / beta.value(1.0 / t);
            let required_sup = beta_sandwich(beta, t)?.sup;
            Ok(CapacityRow {
                t,
                capacity,
                required,
                required_sup,
                margin: capacity / required,
                margin_sup: capacity / required_sup,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let worst_margin = min_of(rows.iter().map(|r| r.margin.min(r.margin_sup)));
    Ok(CheckReport {
        check: "capacity-measure".into(),
        grid: t_grid.to_vec(),
        worst_margin,
        verdict: if worst_margin >= 1.0 { Verdict::Pass } else { Verdict::Fail },
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplaceRow {
    pub x: f64,
    /// `|V'|² T(1/(V + log|V'|))`.
    pub value: f64,
    /// `|V''| / V'²`.
    pub curvature_ratio: f64,
}

/// Scans the tail-side sufficient condition `|V'|² T(1/(V+log|V'|)) ≥ C > 0`.
pub fn laplace_sufficient_check(m: &LineMeasure, rate: &RateFunction) -> CheckReport<LaplaceRow> {
    let pot = m.potential();
    let x0 = m.upper_quantile(1e-3);
    let grid = crate::numeric::linspace(x0, m.truncation(), 200);
    let rows: Vec<LaplaceRow> = grid
        .iter()
        .map(|&x| {
            let v = pot.value(x);
            let d = pot.derivative(x);
            let arg = 1.0 / (v + d.abs().ln());
            let arg = if arg > 0.0 && arg <= 1.0 { arg } else { 1.0 };
            LaplaceRow {
                x,
                value: d * d * rate.value(arg),
                curvature_ratio: pot.second_derivative(x).abs() / (d * d),
            }
        })
        .collect();
    let worst_margin = min_of(rows.iter().map(|r| r.value));
    let far = &rows[rows.len() / 2..];
    let derivative_vanishes = grid.iter().any(|&x| !(pot.derivative(x) > 0.0));
    let laplace_regime = far.iter().all(|r| r.curvature_ratio <= 0.25);
    let verdict = if derivative_vanishes || !laplace_regime {
        Verdict::Inconclusive
    } else if worst_margin > 1e-12 {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    CheckReport {
        check: "laplace-sufficient".into(),
        grid,
        worst_margin,
        verdict,
        rows,
    }
}
