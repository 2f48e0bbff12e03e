//! Grid discretisation of line measures, the reversible nearest-neighbour
//! generator, semigroup evolution and trial-based inequality testers.

pub mod fspec;
pub mod inequalities;
pub mod semigroup;
pub mod trials;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure1d::LineMeasure;
use crate::numeric::{integrate_with_breaks, Tolerance};

pub use fspec::{FFunction, FSpec};

/// Uniform grid `x_0 < … < x_N` with weights `w_i ≈ μ([x_i - h/2, x_i + h/2])`.
#[derive(Debug, Clone)]
pub struct GridMeasure {
    measure: LineMeasure,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    h: f64,
    window: (f64, f64),
    renormalization: f64,
}

/// Grid description carried by reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridInfo {
    #[serde(rename = "N")]
    pub n: usize,
    pub window: (f64, f64),
}

/// Discretises `m` on `N` equal cells of `window`, i.e. on `N + 1` nodes.
pub fn discretize(m: &LineMeasure, n: usize, window: (f64, f64)) -> Result<GridMeasure> {
    let (a, b) = window;
    if n < 16 {
        return Err(Error::Grid(format!("need at least 16 cells, got {n}")));
    }
    let x = m.truncation();
    let slack = 1e-12 * x;
    if !(a < b) || a < -x - slack || b > x + slack {
        return Err(Error::Grid(format!(
            "window [{a}, {b}] must be a non-empty subset of the truncation window [-{x}, {x}]"
        )));
    }
    let h = (b - a) / n as f64;
    let nodes: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    let kinks = m.potential().kinks();
    let mut breaks: Vec<f64> = kinks.iter().flat_map(|&k| [k, -k]).collect();
    breaks.dedup();
    let tol = Tolerance {
        abs: 0.0,
        rel: 1e-13,
        max_panels: 200,
    };
    let raw: Vec<f64> = nodes
        .iter()
        .map(|&xi| {
            let lo = (xi - 0.5 * h).max(a);
            let hi = (xi + 0.5 * h).min(b);
            integrate_with_breaks(|u| m.density(u), lo, hi, &breaks, tol).value
        })
        .collect();
    let total: f64 = raw.iter().sum();
    if raw.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::Grid("window reaches where the density underflows".into()));
    }
    Ok(GridMeasure {
        measure: m.clone(),
        weights: raw.iter().map(|w| w / total).collect(),
        nodes,
        h,
        window,
        renormalization: total,
    })
}

impl GridMeasure {
    pub fn measure(&self) -> &LineMeasure {
        &self.measure
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Raw mass captured before renormalisation.
    pub fn renormalization(&self) -> f64 {
        self.renormalization
    }

    pub fn info(&self) -> GridInfo {
        GridInfo {
            n: self.nodes.len() - 1,
            window: self.window,
        }
    }

    /// Samples `f` at the nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }

    /// `∫ f dμ` on the grid.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// `∫ |f|^q dμ` on the grid.
    pub fn moment(&self, f: &[f64], q: f64) -> f64 {
        f.iter().zip(&self.weights).map(|(v, w)| v.abs().powf(q) * w).sum()
    }

    pub fn norm2_sq(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weights).map(|(v, w)| v * v * w).sum()
    }

    /// Edge weight `√(w_i w_{i+1})` between nodes `i` and `i+1`.
    pub fn edge_weight(&self, i: usize) -> f64 {
        (self.weights[i] * self.weights[i + 1]).sqrt()
    }

    /// Smallest node value `m` with grid mass of `{f <= m}` at least 1/2.
    pub fn median(&self, f: &[f64]) -> f64 {
        let mut order: Vec<usize> = (0..f.len()).collect();
        order.sort_by(|&i, &j| f[i].total_cmp(&f[j]).then(i.cmp(&j)));
        let mut acc = 0.0;
        for &i in &order {
            acc += self.weights[i];
            if acc >= 0.5 {
                return f[i];
            }
        }
        f[*order.last().unwrap()]
    }
}

/// `Σ ((f_{i+1} - f_i)/h)² √(w_i w_{i+1})`.
pub fn dirichlet_energy(gm: &GridMeasure, f: &[f64]) -> f64 {
    let h2 = gm.h * gm.h;
    f.windows(2)
        .enumerate()
        .map(|(i, w)| {
            let d = w[1] - w[0];
            d * d / h2 * gm.edge_weight(i)
        })
        .sum()
}

/// Tridiagonal generator reversible with respect to the grid weights, with
/// reflecting (Neumann) ends.
#[derive(Debug, Clone)]
pub struct Generator {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    weights: Vec<f64>,
    h: f64,
    curvature: f64,
}

impl Generator {
    pub fn new(gm: &GridMeasure) -> Self {
        let n = gm.len();
        let h2 = gm.h * gm.h;
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut diag = vec![0.0; n];
        for i in 0..n - 1 {
            let c = gm.edge_weight(i) / h2;
            upper[i] = c / gm.weights[i];
            lower[i + 1] = c / gm.weights[i + 1];
        }
        for i in 0..n {
            diag[i] = -(lower[i] + upper[i]);
        }
        let pot = gm.measure.potential();
        let min_curv = gm
            .nodes
            .iter()
            .map(|&x| pot.second_derivative(x))
            .fold(f64::INFINITY, f64::min);
        Generator {
            lower,
            diag,
            upper,
            weights: gm.weights.clone(),
            h: gm.h,
            curvature: (-min_curv).max(0.0),
        }
    }

    /// `R = max(0, -min V'')` over the nodes.
    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Entry `L_{ij}` for `|i - j| <= 1`, zero otherwise.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if j == i + 1 {
            self.upper[i]
        } else if i == j + 1 {
            self.lower[i]
        } else {
            0.0
        }
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * f[i];
                if i > 0 {
                    v += self.lower[i] * f[i - 1];
                }
                if i + 1 < n {
                    v += self.upper[i] * f[i + 1];
                }
                v
            })
            .collect()
    }

    /// Largest total jump rate `max_i |L_ii|`.
    pub fn max_rate(&self) -> f64 {
        self.diag.iter().fold(0.0f64, |m, d| m.max(-d))
    }

    pub(crate) fn bands(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.lower, &self.diag, &self.upper)
    }

    /// Weights of the reversible measure.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// `-⟨f, Lf⟩` in the weighted inner product.
    pub fn quadratic_form(&self, f: &[f64]) -> f64 {
        -self.apply(f).iter().zip(f).zip(&self.weights).map(|((lf, v), w)| lf * v * w).sum::<f64>()
    }
}

/// A finite union of closed intervals, possibly unbounded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalSet {
    pub intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { intervals: vec![] }
    }

    /// Sorts and merges overlapping pieces; drops empty ones.
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Self {
        intervals.retain(|(a, b)| a < b);
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (a, b) in intervals {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        IntervalSet { intervals: merged }
    }

    pub fn half_line_left(c: f64) -> Self {
        IntervalSet::new(vec![(f64::NEG_INFINITY, c)])
    }

    /// Finite endpoints, each a boundary point.
    pub fn endpoints(&self) -> Vec<f64> {
        self.intervals
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .filter(|x| x.is_finite())
            .collect()
    }

    /// Exact boundary measure `Σ ρ(endpoint)`.
    pub fn boundary_measure(&self, m: &LineMeasure) -> f64 {
        self.endpoints().iter().map(|&x| m.density(x)).sum()
    }

    pub fn mass(&self, m: &LineMeasure) -> f64 {
        self.intervals.iter().map(|&(a, b)| m.interval_mass(a, b)).sum()
    }

    /// Indicator averaged over each grid cell (a one-cell linear ramp at each endpoint).
    pub fn mollified_indicator(&self, gm: &GridMeasure) -> Vec<f64> {
        let h = gm.spacing();
        gm.nodes()
            .iter()
            .map(|&x| {
                let (lo, hi) = (x - 0.5 * h, x + 0.5 * h);
                let covered: f64 = self
                    .intervals
                    .iter()
                    .map(|&(a, b)| (hi.min(b) - lo.max(a)).max(0.0))
                    .sum();
                (covered / h).min(1.0)
            })
            .collect()
    }

    pub fn complement(&self) -> Self {
        let mut out = Vec::new();
        let mut cursor = f64::NEG_INFINITY;
        for &(a, b) in &self.intervals {
            if a > cursor {
                out.push((cursor, a));
            }
            cursor = b;
        }
        if cursor < f64::INFINITY {
            out.push((cursor, f64::INFINITY));
        }
        IntervalSet::new(out)
    }
}
