use approx::assert_relative_eq;
use isoperim_core::measure1d::{build_measure, build_measure_with, GammaSpec, MeasureOptions};
use isoperim_core::{LineMeasure, Potential, PotentialRecipe};
use proptest::prelude::*;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use statrs::function::gamma::gamma;

fn measure(recipe: PotentialRecipe) -> LineMeasure {
    build_measure(Potential::new(recipe).unwrap()).unwrap()
}

/// Composite Simpson rule, independent of the library quadrature.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn power_normalization_matches_gamma_function() {
    for p in [1.0, 1.25, 1.5, 1.75, 2.0] {
        let m = measure(PotentialRecipe::power(p));
        assert_relative_eq!(m.normalization(), 2.0 * gamma(1.0 + 1.0 / p), max_relative = 1e-12);
    }
}

#[test]
fn standard_gaussian_matches_statrs() {
    let m = measure(PotentialRecipe::Power { p: 2.0, scale: 0.5 });
    let g = Normal::new(0.0, 1.0).unwrap();
    for x in [-6.0, -3.0, -1.0, -0.2, 0.0, 0.7, 2.5, 5.0] {
        assert_relative_eq!(m.density(x), g.pdf(x), max_relative = 1e-12);
        // statrs' erfc is good to about 1e-11 absolute
        assert!((m.cdf(x) - g.cdf(x)).abs() < 1e-10, "cdf at {x}");
    }
    // high-precision reference values
    for (x, h) in [
        (-3.0, 0.001_349_898_031_630_094_5),
        (-1.0, 0.158_655_253_931_457_05),
        (2.5, 0.993_790_334_674_223_86),
    ] {
        assert_relative_eq!(m.cdf(x), h, max_relative = 1e-14);
    }
    for t in [1e-12, 1e-6, 0.01, 0.3, 0.5, 0.9] {
        assert!((m.quantile(t).unwrap() - g.inverse_cdf(t)).abs() < 1e-7 * (1.0 + g.inverse_cdf(t).abs()));
    }
}

#[test]
fn exponential_cdf_and_quantile_closed_forms() {
    let m = measure(PotentialRecipe::power(1.0));
    assert_eq!(m.cdf(0.0), 0.5);
    assert_relative_eq!(m.cdf(0.5f64.ln()), 0.25, max_relative = 1e-13);
    assert_relative_eq!(m.quantile(0.25).unwrap(), 0.5f64.ln(), max_relative = 1e-12);
    assert!(m.cdf(-m.truncation()) <= 1e-12);
    for x in [-3.0, -1.0, 0.0, 1.0, 3.0] {
        assert!((m.quantile(m.cdf(x)).unwrap() - x).abs() < 1e-8);
    }
}

#[test]
fn tail_equivalent_examples() {
    let e = measure(PotentialRecipe::power(1.0));
    assert_relative_eq!(e.tail_equivalent(-10.0).unwrap(), (-10f64).exp() / 2.0, max_relative = 1e-13);
    let g = measure(PotentialRecipe::power(2.0));
    let expected = (-25f64).exp() / (2.0 * 5.0 * std::f64::consts::PI.sqrt());
    assert_relative_eq!(g.tail_equivalent(-5.0).unwrap(), expected, max_relative = 1e-12);
    let m = measure(PotentialRecipe::power(1.5));
    let r = m.lower_tail(-15.0) / m.tail_equivalent(-15.0).unwrap();
    assert!((r - 1.0).abs() < 0.05, "{r}");
}

#[test]
fn power_log_density_integrates_to_one_by_simpson() {
    let m = measure(PotentialRecipe::PowerLog {
        p: 1.5,
        alpha: 1.0,
        gamma: GammaSpec::default(),
    });
    let x = m.truncation();
    let left = simpson(|u| m.density(u), -x, 0.0, 200_000);
    let right = simpson(|u| m.density(u), 0.0, x, 200_000);
    assert!((left + right - 1.0).abs() < 1e-10);
}

#[test]
fn tail_equivalent_sandwich_where_tail_is_small() {
    for recipe in [
        PotentialRecipe::power(1.0),
        PotentialRecipe::power(1.5),
        PotentialRecipe::power(2.0),
        PotentialRecipe::PowerLog {
            p: 1.2,
            alpha: 0.5,
            gamma: GammaSpec::default(),
        },
    ] {
        let m = measure(recipe);
        for s in [1e-4, 1e-6, 1e-9] {
            let y = -m.upper_quantile(s);
            let r = m.lower_tail(y) / m.tail_equivalent(y).unwrap();
            assert!((0.5..=2.0).contains(&r), "{r} at {y}");
        }
    }
}

#[test]
fn doubled_truncation_leaves_the_measure_unchanged() {
    let pot = Potential::new(PotentialRecipe::power(1.5)).unwrap();
    let a = build_measure(pot.clone()).unwrap();
    let b = build_measure_with(
        pot,
        MeasureOptions {
            truncation_factor: 2.0,
            ..MeasureOptions::default()
        },
    )
    .unwrap();
    assert_relative_eq!(a.normalization(), b.normalization(), max_relative = 1e-12);
    for t in [1e-8, 1e-3, 0.2] {
        assert_relative_eq!(a.upper_quantile(t), b.upper_quantile(t), max_relative = 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn normalization_for_random_parameters(p in 1.0f64..2.0, alpha in 0.0f64..2.0) {
        let m = measure(PotentialRecipe::PowerLog { p, alpha, gamma: GammaSpec::default() });
        let x = m.truncation();
        let total = m.interval_mass(-x, x);
        prop_assert!((total - 1.0).abs() < 1e-10);
        let oracle = simpson(|u| m.density(u), 0.0, x, 100_000);
        prop_assert!((2.0 * oracle - 1.0).abs() < 1e-8, "simpson {}", 2.0 * oracle);
    }

    #[test]
    fn quantile_cdf_inverse_pair(p in 1.0f64..2.0, t in 1e-9f64..0.999_999_999) {
        let m = measure(PotentialRecipe::power(p));
        let x = m.quantile(t).unwrap();
        prop_assert!((m.cdf(x) - t).abs() <= 1e-10 * t.max(1e-3));
    }

    #[test]
    fn density_is_symmetric(p in 1.0f64..2.0, x in 0.0f64..10.0) {
        let m = measure(PotentialRecipe::power(p));
        prop_assert_eq!(m.density(x), m.density(-x));
        prop_assert!((m.cdf(x) + m.cdf(-x) - 1.0).abs() < 1e-14);
    }
}
