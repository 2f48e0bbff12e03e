use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// The function `F` of a homogeneous F-Sobolev inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "f", rename_all = "kebab-case")]
pub enum FFunction {
    /// `F(u) = log u`; the inequality is then log-Sobolev.
    Log,
    /// `F(u) = log(1+u)^κ - log(2)^κ`.
    LogPower { kappa: f64 },
}

/// `F` together with the constant `C_F` the tester compares against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FSpec {
    #[serde(flatten)]
    pub function: FFunction,
    pub constant: f64,
}

impl FSpec {
    pub fn new(function: FFunction, constant: f64) -> Result<Self> {
        if let FFunction::LogPower { kappa } = function {
            if !(kappa > 0.0 && kappa.is_finite()) {
                return Err(domain(format!("log-power F: kappa must be > 0, got {kappa}")));
            }
        }
        if !(constant >= 0.0) {
            return Err(domain(format!("F-Sobolev constant must be >= 0, got {constant}")));
        }
        Ok(FSpec { function, constant })
    }

    /// `F(u)` for `u > 0`.
    pub fn value(&self, u: f64) -> f64 {
        match self.function {
            FFunction::Log => u.ln(),
            FFunction::LogPower { kappa } => u.ln_1p().powf(kappa) - std::f64::consts::LN_2.powf(kappa),
        }
    }

    /// `u F(u)`, continued by 0 at `u = 0`.
    pub fn weighted(&self, u: f64) -> f64 {
        if u == 0.0 {
            0.0
        } else {
            u * self.value(u)
        }
    }

    /// `F₊(s) = max(F(s), 0)`.
    pub fn positive_part(&self, s: f64) -> f64 {
        self.value(s).max(0.0)
    }

    /// Both built-in forms are unbounded above.
    pub fn unbounded(&self) -> bool {
        true
    }

    /// `F` is non-decreasing and `F(1) <= 0` on a test grid.
    pub fn certified(&self) -> bool {
        let grid = crate::numeric::logspace(1e-8, 1e8, 400);
        self.value(1.0) <= 0.0 && grid.windows(2).all(|w| self.value(w[1]) >= self.value(w[0]))
    }
}
