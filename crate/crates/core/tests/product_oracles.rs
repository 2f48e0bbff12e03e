use std::f64::consts::FRAC_PI_2;

use isoperim_core::measure1d::{build_measure, GammaSpec};
use isoperim_core::product2d::{
    boundary_measure_2d, compare_candidates, domination_report, match_mass, set_measure_2d, CandidateSet2D,
    ShapeFamily,
};
use isoperim_core::{LineMeasure, Potential, PotentialRecipe};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn measure(recipe: PotentialRecipe) -> LineMeasure {
    build_measure(Potential::new(recipe).unwrap()).unwrap()
}

const EXP_BALL_RADIUS: f64 = 0.660_698_084_134;
const EXP_BALL_BOUNDARY: f64 = 0.449_028_233_464;

/// Fraction of exponential-product samples with radius in `[r-δ, r+δ]` divided by `2δ`.
fn monte_carlo_shell(r: f64, delta: f64, samples: u64) -> f64 {
    let chunks = 200u64;
    let per = samples / chunks;
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ c);
            let mut laplace = || {
                let u: f64 = rng.gen();
                let e = -(1.0 - u).ln();
                if rng.gen::<bool>() {
                    e
                } else {
                    -e
                }
            };
            let (lo, hi) = ((r - delta).powi(2), (r + delta).powi(2));
            let mut n = 0u64;
            for _ in 0..per {
                let (x, y) = (laplace(), laplace());
                let q = x * x + y * y;
                if q >= lo && q < hi {
                    n += 1;
                }
            }
            n
        })
        .sum();
    hits as f64 / (per * chunks) as f64 / (2.0 * delta)
}

#[test]
fn exponential_ball_at_mass_one_fifth() {
    let m = measure(PotentialRecipe::power(1.0));
    let ball = match_mass(&m, ShapeFamily::Ball, 0.2).unwrap();
    let r = ball.parameter();
    assert!((r - EXP_BALL_RADIUS).abs() < 1e-9);
    let b = boundary_measure_2d(&m, &ball).unwrap();
    assert!((b - EXP_BALL_BOUNDARY).abs() < 1e-4, "{b}");
    let mc = monte_carlo_shell(r, 0.005, 100_000_000);
    assert!((mc / b - 1.0).abs() < 0.005, "monte carlo {mc} vs {b}");
}

#[test]
fn exponential_square_closed_form() {
    let m = measure(PotentialRecipe::power(1.0));
    let a = std::f64::consts::LN_2;
    let sq = CandidateSet2D::Square { a };
    assert!((set_measure_2d(&m, &sq).unwrap() - 0.25).abs() < 1e-12);
    // four sides, each ρ(a)·μ([-a,a]) = (1/4)(1/2)
    assert!((boundary_measure_2d(&m, &sq).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn gaussian_halfplane_is_the_minimum_of_the_four_families() {
    let m = measure(PotentialRecipe::Power { p: 2.0, scale: 0.5 });
    for mass in [0.1, 0.2, 0.3, 0.5] {
        let c = compare_candidates(&m, mass, None, &[FRAC_PI_2 / 3.0, FRAC_PI_2 / 2.0]).unwrap();
        assert!(c.skipped.is_empty());
        assert!((c.min_boundary / c.halfplane_boundary - 1.0).abs() < 1e-3, "{c:?}");
        for r in &c.rows {
            assert!(r.ratio_to_halfplane >= 1.0 - 1e-3);
        }
    }
}

#[test]
fn exponential_candidates_dominate_k_times_l() {
    let m = measure(PotentialRecipe::power(1.0));
    let c = compare_candidates(&m, 0.2, None, &[0.3, FRAC_PI_2 / 2.0, 1.2]).unwrap();
    assert!((c.l_value - 0.2).abs() < 1e-15);
    assert!(c.dominates);
    assert!((c.k - 1.0).abs() < 1e-9, "{}", c.k);
    let supplied = compare_candidates(&m, 0.2, Some(0.9), &[0.3]).unwrap();
    assert!(supplied.dominates && supplied.k_supplied);
}

#[test]
fn halfplane_at_half_mass_is_density_at_origin() {
    let m = measure(PotentialRecipe::power(1.5));
    for mass in [0.49, 0.499, 0.5] {
        let c = compare_candidates(&m, mass, None, &[]).unwrap();
        assert!((c.halfplane_boundary - m.density(m.quantile(mass).unwrap())).abs() < 1e-9);
    }
    let c = compare_candidates(&m, 0.5, None, &[]).unwrap();
    assert!((c.halfplane_boundary - m.density(0.0)).abs() < 1e-9);
}

#[test]
fn domination_transfer_is_reported() {
    let a = measure(PotentialRecipe::power(2.0));
    let b = measure(PotentialRecipe::power(1.0));
    let grid: Vec<f64> = (1..=20).map(|k| 0.5 * k as f64 / 20.0).collect();
    let report = domination_report(&a, &b, &[0.1, 0.3], &grid, &[0.5]).unwrap();
    assert!(report.c > 0.0);
    assert_eq!(report.rows.len(), 2 * 4);
    assert!(report.all_consistent, "{report:?}");
}

fn factor_recipe() -> impl Strategy<Value = PotentialRecipe> {
    prop_oneof![
        (1.0f64..=2.0).prop_map(PotentialRecipe::power),
        (1.0f64..1.8, 0.0f64..2.0).prop_map(|(p, alpha)| PotentialRecipe::PowerLog {
            p,
            alpha,
            gamma: GammaSpec::default(),
        }),
        (1.2f64..1.9).prop_map(|alpha| PotentialRecipe::NonconvexExample { alpha, eps: 0.5 }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn coordinate_halfplane_factorizes(recipe in factor_recipe(), t in 1e-6f64..0.999_999) {
        let m = measure(recipe);
        let c = m.quantile(t).unwrap();
        let set = CandidateSet2D::CoordinateHalfPlane { c };
        prop_assert!((set_measure_2d(&m, &set).unwrap() - t).abs() < 1e-9);
        let b = boundary_measure_2d(&m, &set).unwrap();
        prop_assert!((b - m.density(c)).abs() < 1e-6);
    }

    #[test]
    fn vertical_halfplane_is_the_coordinate_halfplane(p in 1.0f64..2.0, t in 0.01f64..0.99) {
        let m = measure(PotentialRecipe::power(p));
        let c = m.quantile(t).unwrap();
        let rot = CandidateSet2D::RotatedHalfPlane { theta: FRAC_PI_2, c };
        let coord = CandidateSet2D::CoordinateHalfPlane { c };
        prop_assert!((boundary_measure_2d(&m, &rot).unwrap() - boundary_measure_2d(&m, &coord).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn every_candidate_is_above_the_empirical_k(p in 1.0f64..2.0, mass in 0.02f64..0.5) {
        let m = measure(PotentialRecipe::power(p));
        let c = compare_candidates(&m, mass, None, &[0.4, 1.0]).unwrap();
        prop_assert!(c.dominates);
        for r in &c.rows {
            prop_assert!((r.mass - mass).abs() < 1e-9);
        }
    }
}
