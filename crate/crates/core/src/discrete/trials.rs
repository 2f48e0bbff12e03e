//! Seeded, parametric trial functions for inequality testing, and the search
//! driver that maximises a ratio over them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GridMeasure;
use crate::error::Result;

/// One trial function, described by its parameters so reports can name it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Trial {
    /// `offset + exp(-((x - center)/width)²)`.
    Bump { center: f64, width: f64, offset: f64 },
    /// Indicator of `[center, ∞)` (or `(-∞, center]`) with a linear ramp of the given width.
    Step { center: f64, width: f64, rising: bool },
    /// `Σ c_k (x/scale)^k` clipped to `[-clip, clip]`.
    Polynomial { coeffs: [f64; 5], scale: f64, clip: f64 },
}

impl Trial {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Trial::Bump { center, width, offset } => {
                let z = (x - center) / width;
                offset + (-z * z).exp()
            }
            Trial::Step { center, width, rising } => {
                let up = ((x - center) / width + 0.5).clamp(0.0, 1.0);
                if rising {
                    up
                } else {
                    1.0 - up
                }
            }
            Trial::Polynomial { coeffs, scale, clip } => {
                let z = x / scale;
                let v = coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c);
                v.clamp(-clip, clip)
            }
        }
    }

    pub fn sample(&self, gm: &GridMeasure) -> Vec<f64> {
        gm.sample(|x| self.eval(x))
    }

    fn perturb(&self, rng: &mut ChaCha8Rng, h: f64, window: (f64, f64)) -> Trial {
        let jitter = |rng: &mut ChaCha8Rng, scale: f64| scale * (2.0 * rng.gen::<f64>() - 1.0);
        let (a, b) = window;
        match *self {
            Trial::Bump { center, width, offset } => Trial::Bump {
                center: (center + jitter(rng, 0.3 * width)).clamp(a, b),
                width: (width * jitter(rng, 0.3).exp()).clamp(h, b - a),
                offset: offset + jitter(rng, 0.1),
            },
            Trial::Step { center, width, rising } => Trial::Step {
                center: (center + jitter(rng, 0.3 * width)).clamp(a, b),
                width: (width * jitter(rng, 0.3).exp()).clamp(h, b - a),
                rising,
            },
            Trial::Polynomial { coeffs, scale, clip } => {
                let mut c = coeffs;
                for v in c.iter_mut() {
                    *v += jitter(rng, 0.1);
                }
                Trial::Polynomial {
                    coeffs: c,
                    scale,
                    clip: (clip * jitter(rng, 0.2).exp()).max(0.1),
                }
            }
        }
    }
}

/// Declared, reproducible trial family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialFamily {
    pub seed: u64,
    pub bumps: usize,
    pub steps: usize,
    pub polynomials: usize,
    /// Number of worst trials refined by local random search.
    pub adversarial_seeds: usize,
    /// Perturbations tried per refined trial.
    pub adversarial_rounds: usize,
}

impl TrialFamily {
    /// `total` trials split 40% bumps, 40% steps, 20% polynomials.
    pub fn new(seed: u64, total: usize) -> Self {
        let bumps = total * 2 / 5;
        let steps = total * 2 / 5;
        TrialFamily {
            seed,
            bumps,
            steps,
            polynomials: total - bumps - steps,
            adversarial_seeds: 8,
            adversarial_rounds: 40,
        }
    }

    pub fn total(&self) -> usize {
        self.bumps + self.steps + self.polynomials
    }

    /// Draws the base trials for a grid.
    pub fn generate(&self, gm: &GridMeasure) -> Vec<Trial> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (a, b) = gm.window();
        let h = gm.spacing();
        let m = gm.measure();
        let spread = m.upper_quantile(0.01).max(h);
        let location = |rng: &mut ChaCha8Rng| -> f64 {
            let x = if rng.gen::<bool>() {
                // bulk: a uniformly drawn quantile
                let u: f64 = rng.gen_range(1e-6..1.0 - 1e-6);
                m.quantile(u).unwrap_or(0.0)
            } else {
                // tails: log-uniform tail mass on a random side
                let mass = (rng.gen_range((1e-10f64).ln()..(0.5f64).ln())).exp();
                let x = m.upper_quantile(mass);
                if rng.gen::<bool>() {
                    x
                } else {
                    -x
                }
            };
            x.clamp(a, b)
        };
        // widths do not depend on h, so refined grids see the same functions
        let w_min = h.max(1e-3 * (b - a));
        let width = |rng: &mut ChaCha8Rng| -> f64 { rng.gen_range(w_min.ln()..(0.5 * (b - a)).ln()).exp() };
        let mut out = Vec::with_capacity(self.total());
        for _ in 0..self.bumps {
            let center = location(&mut rng);
            let w = width(&mut rng);
            let offset = if rng.gen::<f64>() < 0.4 { rng.gen_range(-1.0..1.0) } else { 0.0 };
            out.push(Trial::Bump {
                center,
                width: w,
                offset,
            });
        }
        for _ in 0..self.steps {
            let center = location(&mut rng);
            let w = width(&mut rng).min(0.25 * (b - a));
            out.push(Trial::Step {
                center,
                width: w,
                rising: rng.gen(),
            });
        }
        for _ in 0..self.polynomials {
            let degree = rng.gen_range(1..=4usize);
            let mut coeffs = [0.0; 5];
            for c in coeffs.iter_mut().take(degree + 1) {
                *c = rng.gen_range(-1.0..1.0);
            }
            out.push(Trial::Polynomial {
                coeffs,
                scale: spread,
                clip: rng.gen_range(1.0..10.0),
            });
        }
        out
    }
}

/// Outcome of a ratio search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchResult {
    pub worst_ratio: f64,
    pub worst_trial: Trial,
    /// Parameter (`s`, `p`, ...) at which the worst ratio occurred.
    pub worst_parameter: f64,
    pub evaluated: usize,
}

fn first_max(values: &[(f64, f64)]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if v.0 > values[best].0 {
            best = i;
        }
    }
    best
}

/// Maximises `objective(f) -> (ratio, parameter)` over the family, then refines
/// the worst trials by seeded local search. Deterministic for a given seed.
pub fn search<F>(gm: &GridMeasure, family: &TrialFamily, objective: F) -> Result<SearchResult>
where
    F: Fn(&[f64]) -> Result<(f64, f64)> + Sync,
{
    let base = family.generate(gm);
    let scores = base
        .par_iter()
        .map(|t| objective(&t.sample(gm)))
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..base.len()).collect();
    order.sort_by(|&i, &j| scores[j].0.total_cmp(&scores[i].0).then(i.cmp(&j)));
    let h = gm.spacing();
    let window = gm.window();
    let refined = order
        .iter()
        .take(family.adversarial_seeds)
        .enumerate()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(k, &i)| {
            let mut rng = ChaCha8Rng::seed_from_u64(family.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(k as u64 + 1)));
            let mut best = (base[i], scores[i]);
            for _ in 0..family.adversarial_rounds {
                let cand = best.0.perturb(&mut rng, h, window);
                let score = objective(&cand.sample(gm))?;
                if score.0 > best.1 .0 {
                    best = (cand, score);
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut all_trials = base.clone();
    let mut all_scores = scores;
    for (t, s) in refined {
        all_trials.push(t);
        all_scores.push(s);
    }
    let k = first_max(&all_scores);
    Ok(SearchResult {
        worst_ratio: all_scores[k].0,
        worst_trial: all_trials[k],
        worst_parameter: all_scores[k].1,
        evaluated: base.len() + family.adversarial_seeds.min(base.len()) * family.adversarial_rounds,
    })
}
