//! Even potentials `Φ: ℝ⁺ → ℝ⁺` and the probability measures
//! `dμ_Φ(x) = Z⁻¹ e^{-Φ(|x|)} dx` they define on the line.
//!
//! A [`LineMeasure`] caches the upper-tail masses `S(x) = μ([x, ∞))` on a
//! uniform knot grid over `[0, X]` and refines each query with a single
//! short quadrature panel, so tail masses keep full relative precision down
//! to the truncation bound and beyond.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{domain, Error, Result};
use crate::numeric::{integrate_with_breaks, linspace, Tolerance};

fn unit_scale() -> f64 {
    1.0
}

fn is_unit(x: &f64) -> bool {
    *x == 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GammaKeyword {
    /// `γ = e^{α/(2-p)}`.
    #[default]
    Auto,
}

/// Shift inside the logarithm of the power-log family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    Value(f64),
    Keyword(GammaKeyword),
}

impl Default for GammaSpec {
    fn default() -> Self {
        GammaSpec::Keyword(GammaKeyword::Auto)
    }
}

/// Construction recipe of a potential; this is the measure definition file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum PotentialRecipe {
    /// `Φ(x) = scale · x^p`.
    Power {
        p: f64,
        #[serde(default = "unit_scale", skip_serializing_if = "is_unit")]
        scale: f64,
    },
    /// `Φ(x) = x^p (log(γ + x))^α`.
    PowerLog {
        p: f64,
        alpha: f64,
        #[serde(default)]
        gamma: GammaSpec,
    },
    /// `Φ(x) = x^α + log(1 + x sin²x)` for `x ≥ ε`, with an even polynomial
    /// `c₀ + c₂x² + c₄x⁴` on `[0, ε]` matching value, slope and curvature at `ε`
    /// (or `c₂x² + c₄x⁴ + c₆x⁶` when that would make `c₀` negative).
    NonconvexExample { alpha: f64, eps: f64 },
    /// Piecewise-linear `Φ` through the points `(x[i], phi[i])`, continued
    /// linearly beyond the last node.
    Table { x: Vec<f64>, phi: Vec<f64> },
}

const FAMILIES: &str = "power, power-log, nonconvex-example, table";

impl PotentialRecipe {
    pub fn power(p: f64) -> Self {
        PotentialRecipe::Power { p, scale: 1.0 }
    }

    /// Parses a measure definition, naming the offending field on failure.
    pub fn from_json_value(value: &Value) -> std::result::Result<Self, String> {
        let obj = value
            .as_object()
            .ok_or_else(|| "measure: expected a JSON object".to_string())?;
        let family = match obj.get("family") {
            None => return Err(format!("measure.family: missing (expected one of {FAMILIES})")),
            Some(Value::String(s)) => s.as_str(),
            Some(other) => return Err(format!("measure.family: expected a string, got {other}")),
        };
        if !matches!(family, "power" | "power-log" | "nonconvex-example" | "table") {
            return Err(format!(
                "measure.family: unknown family '{family}' (expected one of {FAMILIES})"
            ));
        }
        if let Some(Value::String(g)) = obj.get("gamma") {
            if g != "auto" {
                return Err(format!("measure.gamma: expected a number or \"auto\", got \"{g}\""));
            }
        }
        serde_json::from_value(value.clone()).map_err(|e| format!("measure ({family}): {e}"))
    }

    pub fn from_json_str(text: &str) -> std::result::Result<Self, String> {
        let value: Value = serde_json::from_str(text).map_err(|e| format!("measure: {e}"))?;
        Self::from_json_value(&value)
    }
}

/// Shape certificates evaluated on a test grid at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeFlags {
    pub monotone: bool,
    pub convex: bool,
    pub sqrt_concave: bool,
    /// `Φ` is C² on `[smooth_from, ∞)`.
    pub smooth_from: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Power { p: f64, scale: f64 },
    /// `ln_gamma` is stored so that `"auto"` stays finite as `p → 2`.
    PowerLog { p: f64, alpha: f64, ln_gamma: f64 },
    Nonconvex { alpha: f64, eps: f64, c: [f64; 4] },
    Table { x: Vec<f64>, phi: Vec<f64>, slope: Vec<f64> },
}

/// A potential with evaluation, right derivative, curvature and inverse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialRecipe", into = "PotentialRecipe")]
pub struct Potential {
    recipe: PotentialRecipe,
    shape: Shape,
    flags: ShapeFlags,
}

impl TryFrom<PotentialRecipe> for Potential {
    type Error = Error;
    fn try_from(recipe: PotentialRecipe) -> Result<Self> {
        Potential::new(recipe)
    }
}

impl From<Potential> for PotentialRecipe {
    fn from(p: Potential) -> Self {
        p.recipe
    }
}

fn nonconvex_tail(alpha: f64, x: f64) -> (f64, f64, f64) {
    let s = x.sin();
    let s2 = s * s;
    let sin2x = (2.0 * x).sin();
    let d = 1.0 + x * s2;
    let n = s2 + x * sin2x;
    let dn = 2.0 * sin2x + 2.0 * x * (2.0 * x).cos();
    let v = x.powf(alpha) + d.ln();
    let v1 = alpha * x.powf(alpha - 1.0) + n / d;
    let v2 = alpha * (alpha - 1.0) * x.powf(alpha - 2.0) + (dn * d - n * n) / (d * d);
    (v, v1, v2)
}

impl Potential {
    pub fn new(recipe: PotentialRecipe) -> Result<Self> {
        let shape = match &recipe {
            PotentialRecipe::Power { p, scale } => {
                if !(p.is_finite() && *p >= 1.0) {
                    return Err(Error::InvalidPotential(format!("power: p must be >= 1, got {p}")));
                }
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::InvalidPotential(format!("power: scale must be > 0, got {scale}")));
                }
                Shape::Power { p: *p, scale: *scale }
            }
            PotentialRecipe::PowerLog { p, alpha, gamma } => {
                if !(p.is_finite() && *p >= 1.0) {
                    return Err(Error::InvalidPotential(format!("power-log: p must be >= 1, got {p}")));
                }
                if !(alpha.is_finite() && *alpha >= 0.0) {
                    return Err(Error::InvalidPotential(format!(
                        "power-log: alpha must be >= 0, got {alpha}"
                    )));
                }
                let ln_gamma = match gamma {
                    GammaSpec::Value(g) => {
                        if !(g.is_finite() && *g >= 1.0) {
                            return Err(Error::InvalidPotential(format!(
                                "power-log: gamma must be finite and >= 1, got {g}"
                            )));
                        }
                        g.ln()
                    }
                    GammaSpec::Keyword(GammaKeyword::Auto) => {
                        if *alpha == 0.0 {
                            0.0
                        } else if *p >= 2.0 {
                            return Err(Error::InvalidPotential(
                                "power-log: gamma \"auto\" is infinite for p >= 2 with alpha > 0; give gamma explicitly"
                                    .into(),
                            ));
                        } else {
                            alpha / (2.0 - p)
                        }
                    }
                };
                Shape::PowerLog {
                    p: *p,
                    alpha: *alpha,
                    ln_gamma,
                }
            }
            PotentialRecipe::NonconvexExample { alpha, eps } => {
                if !(*alpha > 1.0 && *alpha < 2.0) {
                    return Err(Error::InvalidPotential(format!(
                        "nonconvex-example: alpha must lie in (1,2), got {alpha}"
                    )));
                }
                if !(eps.is_finite() && *eps > 0.0) {
                    return Err(Error::InvalidPotential(format!(
                        "nonconvex-example: eps must be > 0, got {eps}"
                    )));
                }
                let (v0, v1, v2) = nonconvex_tail(*alpha, *eps);
                let e = *eps;
                let c4 = (v2 - v1 / e) / (8.0 * e * e);
                let c2 = (v1 - 4.0 * c4 * e.powi(3)) / (2.0 * e);
                let c0 = v0 - c2 * e * e - c4 * e.powi(4);
                let (c0, c2, c4, c6) = if c0 >= 0.0 {
                    (c0, c2, c4, 0.0)
                } else {
                    // pin phi(0) = 0 and add an x^6 term to keep three matching conditions
                    let rows = [
                        [e * e, e.powi(4), e.powi(6), v0],
                        [2.0 * e, 4.0 * e.powi(3), 6.0 * e.powi(5), v1],
                        [2.0, 12.0 * e * e, 30.0 * e.powi(4), v2],
                    ];
                    let [c2, c4, c6] = solve3(rows);
                    (0.0, c2, c4, c6)
                };
                Shape::Nonconvex {
                    alpha: *alpha,
                    eps: e,
                    c: [c0, c2, c4, c6],
                }
            }
            PotentialRecipe::Table { x, phi } => {
                if x.len() != phi.len() || x.len() < 2 {
                    return Err(Error::InvalidPotential(
                        "table: x and phi must have the same length >= 2".into(),
                    ));
                }
                if x[0] != 0.0 {
                    return Err(Error::InvalidPotential("table: x must start at 0".into()));
                }
                if x.iter().chain(phi.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidPotential("table: non-finite entry".into()));
                }
                if x.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidPotential("table: x must be strictly increasing".into()));
                }
                if phi[0] < 0.0 {
                    return Err(Error::InvalidPotential("table: phi(0) must be >= 0".into()));
                }
                if let Some(i) = phi.windows(2).position(|w| w[1] < w[0]) {
                    return Err(Error::InvalidPotential(format!(
                        "table: phi is not monotone (decreases between x={} and x={})",
                        x[i],
                        x[i + 1]
                    )));
                }
                let slope: Vec<f64> = x
                    .windows(2)
                    .zip(phi.windows(2))
                    .map(|(xs, ps)| (ps[1] - ps[0]) / (xs[1] - xs[0]))
                    .collect();
                if *slope.last().unwrap() <= 0.0 {
                    return Err(Error::InvalidPotential(
                        "table: last slope must be > 0, otherwise e^{-phi} is not integrable".into(),
                    ));
                }
                Shape::Table {
                    x: x.clone(),
                    phi: phi.clone(),
                    slope,
                }
            }
        };
        let mut pot = Potential {
            recipe,
            shape,
            flags: ShapeFlags {
                monotone: true,
                convex: true,
                sqrt_concave: true,
                smooth_from: 0.0,
            },
        };
        pot.flags = pot.certify();
        Ok(pot)
    }

    pub fn from_recipe(recipe: PotentialRecipe) -> Result<Self> {
        Self::new(recipe)
    }

    pub fn recipe(&self) -> &PotentialRecipe {
        &self.recipe
    }

    pub fn flags(&self) -> ShapeFlags {
        self.flags
    }

    /// Resolved `γ` for the power-log family.
    pub fn gamma(&self) -> Option<f64> {
        match self.shape {
            Shape::PowerLog { ln_gamma, .. } => Some(ln_gamma.exp()),
            _ => None,
        }
    }

    /// `Φ(|x|)`.
    pub fn value(&self, x: f64) -> f64 {
        let x = x.abs();
        match &self.shape {
            Shape::Power { p, scale } => scale * x.powf(*p),
            Shape::PowerLog { p, alpha, ln_gamma } => {
                if *alpha == 0.0 {
                    x.powf(*p)
                } else {
                    x.powf(*p) * log_gamma_plus(*ln_gamma, x).powf(*alpha)
                }
            }
            Shape::Nonconvex { alpha, eps, c } => {
                if x >= *eps {
                    nonconvex_tail(*alpha, x).0
                } else {
                    let x2 = x * x;
                    c[0] + x2 * (c[1] + x2 * (c[2] + x2 * c[3]))
                }
            }
            Shape::Table { x: xs, phi, slope } => {
                let i = segment(xs, x);
                phi[i] + slope[i] * (x - xs[i])
            }
        }
    }

    /// Right derivative `Φ'(x)` for `x >= 0`.
    pub fn derivative(&self, x: f64) -> f64 {
        let x = x.abs();
        match &self.shape {
            Shape::Power { p, scale } => {
                if x == 0.0 {
                    if *p == 1.0 {
                        *scale
                    } else {
                        0.0
                    }
                } else {
                    scale * p * x.powf(p - 1.0)
                }
            }
            Shape::PowerLog { p, alpha, ln_gamma } => {
                let lead = if x == 0.0 {
                    if *p == 1.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    p * x.powf(p - 1.0)
                };
                if *alpha == 0.0 {
                    return lead;
                }
                let l = log_gamma_plus(*ln_gamma, x);
                let mut d = lead * l.powf(*alpha);
                if x > 0.0 {
                    // 1/(γ + x) = e^{-l}
                    d += alpha * x.powf(*p) * l.powf(alpha - 1.0) * (-l).exp();
                }
                d
            }
            Shape::Nonconvex { alpha, eps, c } => {
                if x >= *eps {
                    nonconvex_tail(*alpha, x).1
                } else {
                    let x2 = x * x;
                    x * (2.0 * c[1] + x2 * (4.0 * c[2] + 6.0 * c[3] * x2))
                }
            }
            Shape::Table { x: xs, slope, .. } => slope[segment(xs, x)],
        }
    }

    /// `Φ''(x)`; central differences of `Φ'` where no closed form is wired in.
    pub fn second_derivative(&self, x: f64) -> f64 {
        let x = x.abs();
        match &self.shape {
            Shape::Power { p, scale } => {
                if *p == 1.0 {
                    0.0
                } else if x == 0.0 {
                    if *p < 2.0 {
                        f64::INFINITY
                    } else if *p == 2.0 {
                        2.0 * scale
                    } else {
                        0.0
                    }
                } else {
                    scale * p * (p - 1.0) * x.powf(p - 2.0)
                }
            }
            Shape::Nonconvex { alpha, eps, c } => {
                if x >= *eps {
                    nonconvex_tail(*alpha, x).2
                } else {
                    let x2 = x * x;
                    2.0 * c[1] + x2 * (12.0 * c[2] + 30.0 * c[3] * x2)
                }
            }
            Shape::Table { .. } => 0.0,
            Shape::PowerLog { .. } => {
                let h = 1e-5 * x.max(1.0);
                let lo = (x - h).max(0.0);
                (self.derivative(x + h) - self.derivative(lo)) / (x + h - lo)
            }
        }
    }

    /// Generalised inverse: the smallest `x >= 0` with `Φ(x) >= u`
    /// (a crossing point when `Φ` is not monotone).
    pub fn inverse(&self, u: f64) -> f64 {
        let base = self.value(0.0);
        if u <= base {
            return 0.0;
        }
        match &self.shape {
            Shape::Power { p, scale } => (u / scale).powf(1.0 / p),
            Shape::Table { x: xs, phi, slope } => {
                let last = xs.len() - 1;
                if u >= phi[last] {
                    return xs[last] + (u - phi[last]) / slope[last - 1];
                }
                // first node whose value reaches u
                let j = phi.partition_point(|&v| v < u);
                let i = j - 1;
                xs[i] + (u - phi[i]) / slope[i]
            }
            _ => {
                let mut hi = 1.0;
                while self.value(hi) < u {
                    hi *= 2.0;
                    if hi > 1e300 {
                        return f64::INFINITY;
                    }
                }
                let mut lo = 0.0;
                let mut x = 0.5 * hi;
                for _ in 0..200 {
                    let g = self.value(x) - u;
                    if g == 0.0 {
                        return x;
                    }
                    if g > 0.0 {
                        hi = x;
                    } else {
                        lo = x;
                    }
                    let d = self.derivative(x);
                    let mut next = if d > 0.0 { x - g / d } else { f64::NAN };
                    if !(next > lo && next < hi) {
                        next = 0.5 * (lo + hi);
                    }
                    if (next - x).abs() <= 1e-15 * x.max(1.0) || hi - lo <= 1e-15 * hi.max(1.0) {
                        return next;
                    }
                    x = next;
                }
                x
            }
        }
    }

    /// `Φ' ∘ Φ⁻¹(u)`.
    pub fn slope_at_level(&self, u: f64) -> f64 {
        self.derivative(self.inverse(u))
    }

    /// Whether `Φ'(x) → ∞` as `x → ∞`.
    pub fn derivative_unbounded(&self) -> bool {
        match &self.shape {
            Shape::Power { p, .. } => *p > 1.0,
            Shape::PowerLog { p, alpha, .. } => *p > 1.0 || *alpha > 0.0,
            Shape::Nonconvex { .. } => true,
            Shape::Table { .. } => false,
        }
    }

    /// Points where `Φ` is not smooth; used as quadrature breakpoints.
    pub fn kinks(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Table { x, .. } => x.clone(),
            Shape::Nonconvex { eps, .. } => vec![0.0, *eps],
            _ => vec![0.0],
        }
    }

    /// A convex minorant `(Ψ, Ψ')` of `Φ` in the tail; it dominates the tail
    /// mass and drives the truncation bound.
    pub fn tail_envelope(&self, x: f64) -> (f64, f64) {
        match &self.shape {
            Shape::Nonconvex { alpha, .. } => (x.powf(*alpha), alpha * x.powf(alpha - 1.0)),
            _ => (self.value(x), self.derivative(x)),
        }
    }

    fn certify(&self) -> ShapeFlags {
        if let Shape::Power { p, .. } = self.shape {
            return ShapeFlags {
                monotone: true,
                convex: p >= 1.0,
                sqrt_concave: p <= 2.0,
                smooth_from: if p == 1.0 || p >= 2.0 { 0.0 } else { f64::MIN_POSITIVE },
            };
        }
        let smooth_from = match &self.shape {
            Shape::Table { x, .. } => *x.last().unwrap(),
            Shape::Nonconvex { .. } => 0.0,
            _ => 0.0,
        };
        let top = self.value(0.0) + 100.0;
        let mut xmax = 1.0;
        while self.value(xmax) < top && xmax < 1e12 {
            xmax *= 2.0;
        }
        let xs = linspace(0.0, xmax, 4001);
        let vals: Vec<f64> = xs.iter().map(|&x| self.value(x)).collect();
        let monotone = vals.windows(2).all(|w| w[1] >= w[0]);
        let slopes: Vec<f64> = vals.windows(2).map(|w| w[1] - w[0]).collect();
        let scale = slopes.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        let tol = 1e-9 * scale.max(1e-300);
        let convex = slopes.windows(2).all(|w| w[1] >= w[0] - tol);
        let roots: Vec<f64> = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
        let rslopes: Vec<f64> = roots.windows(2).map(|w| w[1] - w[0]).collect();
        let rscale = rslopes.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        let rtol = 1e-9 * rscale.max(1e-300);
        let start = xs.iter().position(|&x| x >= smooth_from).unwrap_or(0);
        let sqrt_concave = rslopes[start.min(rslopes.len() - 1)..]
            .windows(2)
            .all(|w| w[1] <= w[0] + rtol);
        ShapeFlags {
            monotone,
            convex,
            sqrt_concave,
            smooth_from,
        }
    }
}

/// Cramer's rule for an augmented 3x4 system.
fn solve3(m: [[f64; 4]; 3]) -> [f64; 3] {
    let det = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let column = |j: usize| {
        let mut a = [[0.0; 3]; 3];
        for i in 0..3 {
            for k in 0..3 {
                a[i][k] = if k == j { m[i][3] } else { m[i][k] };
            }
        }
        a
    };
    let base = [
        [m[0][0], m[0][1], m[0][2]],
        [m[1][0], m[1][1], m[1][2]],
        [m[2][0], m[2][1], m[2][2]],
    ];
    let d = det(base);
    [det(column(0)) / d, det(column(1)) / d, det(column(2)) / d]
}

fn segment(xs: &[f64], x: f64) -> usize {
    let j = xs.partition_point(|&v| v <= x);
    j.saturating_sub(1).min(xs.len() - 2)
}

/// `ln(γ + x)` from `ln γ` without forming `γ`.
fn log_gamma_plus(ln_gamma: f64, x: f64) -> f64 {
    if ln_gamma > x.max(1.0).ln() {
        ln_gamma + (x * (-ln_gamma).exp()).ln_1p()
    } else {
        (ln_gamma.exp() + x).ln()
    }
}

/// Numerical knobs for [`build_measure_with`].
#[derive(Debug, Clone, Copy)]
pub struct MeasureOptions {
    /// Truncation bound `X` solves `tail_equivalent(-X) = tail_target`.
    pub tail_target: f64,
    /// Number of cached tail-mass panels on `[0, X]`.
    pub knots: usize,
    /// Multiplier applied to the solved truncation bound.
    pub truncation_factor: f64,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        MeasureOptions {
            tail_target: 1e-13,
            knots: 512,
            truncation_factor: 1.0,
        }
    }
}

/// Normalised even measure `Z⁻¹ e^{-Φ(|x|)} dx`. Immutable after construction.
#[derive(Debug, Clone)]
pub struct LineMeasure {
    potential: Potential,
    normalization: f64,
    truncation: f64,
    knot_step: f64,
    knot_tails: Vec<f64>,
}

const PANEL_TOL: Tolerance = Tolerance {
    abs: 0.0,
    rel: 1e-14,
    max_panels: 2000,
};

pub fn build_measure(potential: Potential) -> Result<LineMeasure> {
    build_measure_with(potential, MeasureOptions::default())
}

pub fn build_measure_with(potential: Potential, opts: MeasureOptions) -> Result<LineMeasure> {
    if !(opts.tail_target > 0.0 && opts.tail_target < 0.5) || opts.knots < 8 {
        return Err(domain("measure options: tail_target in (0, 1/2) and knots >= 8 required"));
    }
    let base = potential.value(0.0);
    let kinks = potential.kinks();
    // Far cut-off for the provisional normalisation.
    let mut far = 1.0;
    while potential.tail_envelope(far).0 - base < 60.0 {
        far *= 2.0;
        if far > 1e15 {
            return Err(Error::InvalidPotential(
                "e^{-phi} is not integrable (phi does not grow)".into(),
            ));
        }
    }
    let z0 = 2.0
        * integrate_with_breaks(|x| (-(potential.value(x) - base)).exp(), 0.0, far, &kinks, PANEL_TOL)
            .value
        * (-base).exp();
    if !(z0.is_finite() && z0 > 0.0) {
        return Err(Error::InvalidPotential(format!("normalisation is not finite and positive: {z0}")));
    }

    let envelope_tail = |x: f64| {
        let (v, d) = potential.tail_envelope(x);
        if d <= 0.0 {
            f64::INFINITY
        } else {
            (-v).exp() / (z0 * d)
        }
    };
    // Largest crossing of the envelope tail equivalent with the target.
    let scan = linspace(0.0, far, 401);
    let last_above = scan
        .iter()
        .rposition(|&x| envelope_tail(x) > opts.tail_target)
        .unwrap_or(0);
    let truncation = if last_above + 1 >= scan.len() {
        far
    } else {
        crate::numeric::bisect(
            |x| envelope_tail(x) - opts.tail_target,
            scan[last_above],
            scan[last_above + 1],
            1e-13,
        )
    } * opts.truncation_factor;

    if let Shape::Table { x, .. } = &potential.shape {
        let last = *x.last().unwrap();
        if last < truncation / opts.truncation_factor {
            return Err(Error::InvalidPotential(format!(
                "table: grid ends at x={last} before the truncation bound X={truncation:.6} \
                 (tail equivalent there exceeds {:e})",
                opts.tail_target
            )));
        }
    }

    let n = opts.knots;
    let step = truncation / n as f64;
    let mut unnorm = vec![0.0; n + 1];
    unnorm[n] = scaled_tail(&potential, truncation);
    for k in (0..n).rev() {
        let a = k as f64 * step;
        let b = (k + 1) as f64 * step;
        let panel = integrate_with_breaks(|x| (-potential.value(x)).exp(), a, b, &kinks, PANEL_TOL).value;
        unnorm[k] = unnorm[k + 1] + panel;
    }
    let normalization = 2.0 * unnorm[0];
    let knot_tails = unnorm.iter().map(|s| s / normalization).collect();
    Ok(LineMeasure {
        potential,
        normalization,
        truncation,
        knot_step: step,
        knot_tails,
    })
}

/// `∫_x^∞ e^{-Φ}` computed as `e^{-Φ(x)} ∫ e^{-(Φ(u)-Φ(x))} du`.
fn scaled_tail(potential: &Potential, x: f64) -> f64 {
    let vx = potential.value(x);
    let d = potential.derivative(x).max(1e-3);
    let mut len = 1.0 / d;
    let mut guard = 0;
    while potential.value(x + len) - vx < 60.0 && guard < 200 {
        len *= 2.0;
        guard += 1;
    }
    let j = integrate_with_breaks(
        |u| (-(potential.value(u) - vx)).exp(),
        x,
        x + len,
        &potential.kinks(),
        PANEL_TOL,
    )
    .value;
    (-vx).exp() * j
}

impl LineMeasure {
    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    /// `Z = ∫ e^{-Φ(|x|)} dx`.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// Truncation bound `X`.
    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    /// Every supported potential is even, so the median is the origin.
    pub fn median(&self) -> f64 {
        0.0
    }

    pub fn is_symmetric_log_concave(&self) -> bool {
        let f = self.potential.flags();
        f.monotone && f.convex
    }

    pub fn density(&self, x: f64) -> f64 {
        (-self.potential.value(x)).exp() / self.normalization
    }

    /// `μ([x, ∞))` for `x >= 0`, unclamped and relatively precise.
    pub fn upper_tail(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        if x >= self.truncation {
            return scaled_tail(&self.potential, x) / self.normalization;
        }
        let n = self.knot_tails.len() - 1;
        let k = ((x / self.knot_step).floor() as usize).min(n - 1);
        let right = (k + 1) as f64 * self.knot_step;
        let local = integrate_with_breaks(
            |u| (-self.potential.value(u)).exp(),
            x,
            right,
            &self.potential.kinks(),
            PANEL_TOL,
        )
        .value;
        self.knot_tails[k + 1] + local / self.normalization
    }

    /// `μ((-∞, y])` without clamping to the truncation window.
    pub fn lower_tail(&self, y: f64) -> f64 {
        if y <= 0.0 {
            self.upper_tail(-y)
        } else {
            1.0 - self.upper_tail(y)
        }
    }

    /// Mass of `[a, b]`, computed from whichever tails avoid cancellation.
    pub fn interval_mass(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        if b <= 0.0 {
            (self.upper_tail(-b) - self.upper_tail(-a)).max(0.0)
        } else if a >= 0.0 {
            (self.upper_tail(a) - self.upper_tail(b)).max(0.0)
        } else {
            1.0 - self.upper_tail(-a) - self.upper_tail(b)
        }
    }

    /// Distribution function `H`, clamped to `{0, 1}` outside `[-X, X]`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < -self.truncation {
            0.0
        } else if x > self.truncation {
            1.0
        } else {
            self.lower_tail(x)
        }
    }

    /// `H⁻¹(t)` for `t ∈ (0, 1)`.
    pub fn quantile(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t < 1.0) {
            return Err(domain(format!("quantile: t must lie in (0,1), got {t}")));
        }
        if t == 0.5 {
            return Ok(0.0);
        }
        if t < 0.5 {
            Ok(-self.upper_quantile(t))
        } else {
            Ok(self.upper_quantile(1.0 - t))
        }
    }

    /// The `x >= 0` with `μ([x, ∞)) = s`, for `s ∈ (0, 1/2]`.
    pub fn upper_quantile(&self, s: f64) -> f64 {
        if s >= 0.5 {
            return 0.0;
        }
        let n = self.knot_tails.len() - 1;
        let (mut lo, mut hi) = if s >= self.knot_tails[n] {
            // knot_tails is decreasing: first knot whose tail drops below s
            let j = self.knot_tails.partition_point(|&v| v >= s).max(1);
            let (mut lo, mut hi) = ((j - 1) as f64 * self.knot_step, j.min(n) as f64 * self.knot_step);
            // cached knot tails may disagree with upper_tail in the last bits
            while lo > 0.0 && self.upper_tail(lo) < s {
                lo = (lo - self.knot_step).max(0.0);
            }
            while hi < self.truncation && self.upper_tail(hi) >= s {
                hi = (hi + self.knot_step).min(self.truncation);
            }
            (lo, hi)
        } else {
            let mut lo = self.truncation;
            let mut hi = 2.0 * self.truncation;
            while self.upper_tail(hi) >= s {
                lo = hi;
                hi *= 2.0;
                if hi > 1e300 {
                    return f64::INFINITY;
                }
            }
            (lo, hi)
        };
        let target = s.ln();
        let mut x = 0.5 * (lo + hi);
        for _ in 0..100 {
            let tail = self.upper_tail(x);
            let g = tail.ln() - target;
            if g.abs() < 1e-15 {
                return x;
            }
            if g > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let rho = self.density(x);
            let mut next = if rho > 0.0 { x + g * tail / rho } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-15 * x.max(1.0) {
                return next;
            }
            x = next;
        }
        x
    }

    /// `e^{-Φ(|y|)} / (Z Φ'(|y|))`, the asymptotic equivalent of `H(y)` as `y → -∞`.
    pub fn tail_equivalent(&self, y: f64) -> Result<f64> {
        if !(y < 0.0) {
            return Err(domain(format!("tail_equivalent: y must be negative, got {y}")));
        }
        let d = self.potential.derivative(-y);
        if !(d > 0.0) {
            return Err(Error::SingularDerivative { x: -y });
        }
        Ok((-self.potential.value(y)).exp() / (self.normalization * d))
    }
}
