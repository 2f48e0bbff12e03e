//! One function per subcommand: parse parameters, compute, write artifacts.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use isoperim_core::capacity::{
    beta_sandwich, capacity_measure_check, hardy_constants_on, laplace_sufficient_check, BecknerInterval,
    BetaFunction, BetaRecipe, RateFunction, RateRecipe, Verdict,
};
use isoperim_core::discrete::inequalities::{
    beckner_test, fsobolev_test, super_poincare_test, InequalityReport, GRID_SLACK,
};
use isoperim_core::discrete::semigroup::{evolve, ledoux_check, wang_decay_check};
use isoperim_core::discrete::trials::TrialFamily;
use isoperim_core::discrete::{discretize, FSpec, Generator, GridMeasure, IntervalSet};
use isoperim_core::numeric::{linspace, logspace};
use isoperim_core::product2d::compare_candidates;
use isoperim_core::profile::{asymptotic_ratio_scan, ProfileTable};
use isoperim_core::{build_measure, LineMeasure, Potential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::plot::{emit_plotdata, PlotSeries, PlotSpec};
use crate::{usage, write_file, CliError, Command, Format, Outcome, RunConfig};

/// Absolute tolerance of the semigroup identities.
const IDENTITY_TOL: f64 = 1e-8;
/// Largest admissible excess of `∫|P_t f|` over `∫|f|`.
const CONTRACTION_TOL: f64 = 1e-12;
/// Grid tolerance on the semigroup isoperimetric margin.
const LEDOUX_TOL: f64 = 1e-3;
/// Grid tolerance on the decay margin.
const WANG_TOL: f64 = 1e-6;

pub(crate) fn dispatch(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    match cfg.command {
        Command::Profile => profile(cfg, out),
        Command::Hardy => hardy(cfg, out),
        Command::Beta => beta(cfg, out),
        Command::VerifySpi => verify_spi(cfg, out),
        Command::VerifyBeckner => verify_beckner(cfg, out),
        Command::VerifyFsobolev => verify_fsobolev(cfg, out),
        Command::Semigroup => semigroup(cfg, out),
        Command::Product => product(cfg, out),
    }
}

fn params<P: DeserializeOwned>(cfg: &RunConfig) -> Result<P, CliError> {
    serde_json::from_value(cfg.params.clone()).map_err(|e| usage(format!("params ({}): {e}", cfg.command)))
}

fn potential(cfg: &RunConfig) -> Result<Potential, CliError> {
    Potential::new(cfg.measure.clone()).map_err(|e| usage(format!("measure: {e}")))
}

fn measure(cfg: &RunConfig) -> Result<LineMeasure, CliError> {
    build_measure(potential(cfg)?).map_err(|e| usage(format!("measure: {e}")))
}

fn field<E: std::fmt::Display>(name: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| usage(format!("params.{name}: {e}"))
}

fn require(ok: bool, name: &str, what: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(usage(format!("params.{name}: {what}")))
    }
}

fn grid(m: &LineMeasure, n: usize, window: Option<[f64; 2]>) -> Result<GridMeasure, CliError> {
    require((16..=200_000).contains(&n), "N", "must lie in [16, 200000]")?;
    let x = m.truncation();
    let (a, b) = window.map(|[a, b]| (a, b)).unwrap_or((-x, x));
    discretize(m, n, (a, b)).map_err(field("window"))
}

fn finite_list(values: &[f64], name: &str) -> Result<(), CliError> {
    require(!values.is_empty(), name, "must not be empty")?;
    require(values.iter().all(|v| v.is_finite()), name, "values must be finite")
}

/// Writes the report in the configured format and wraps it in the JSON envelope.
fn write_report<P: Serialize>(
    cfg: &RunConfig,
    out: &Path,
    params: &P,
    passed: bool,
    csv: String,
    result: Value,
) -> Result<PathBuf, CliError> {
    let path = out.join(format!("{}.{}", cfg.command, cfg.format.extension()));
    let text = match cfg.format {
        Format::Csv => csv,
        Format::Json => {
            let doc = json!({
                "command": cfg.command,
                "seed": cfg.seed,
                "measure": cfg.measure,
                "params": params,
                "passed": passed,
                "result": result,
            });
            let mut s = serde_json::to_string_pretty(&doc).map_err(|e| usage(format!("report: {e}")))?;
            s.push('\n');
            s
        }
    };
    write_file(&path, &text)
}

fn verdict_word(passed: bool) -> &'static str {
    if passed {
        "pass"
    } else {
        "FAIL"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ProfileParams {
    t_min: f64,
    t_max: f64,
    points: usize,
    spacing: Spacing,
}

impl Default for ProfileParams {
    fn default() -> Self {
        ProfileParams {
            t_min: 1e-4,
            t_max: 0.5,
            points: 500,
            spacing: Spacing::Log,
        }
    }
}

fn profile(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let p: ProfileParams = params(cfg)?;
    require(p.t_min > 0.0 && p.t_min < 1.0, "t_min", "must lie in (0, 1)")?;
    require(p.t_max > p.t_min && p.t_max < 1.0, "t_max", "must lie in (t_min, 1)")?;
    require((2..=1_000_000).contains(&p.points), "points", "must lie in [2, 1000000]")?;
    let m = measure(cfg)?;
    let t_grid = match p.spacing {
        Spacing::Log => logspace(p.t_min, p.t_max, p.points),
        Spacing::Linear => linspace(p.t_min, p.t_max, p.points),
    };
    let table = ProfileTable::build(&m, &t_grid).map_err(|e| usage(format!("measure: {e}")))?;
    let scan = asymptotic_ratio_scan(&m, &t_grid).map_err(|e| usage(format!("measure: {e}")))?;
    let result = json!({
        "rows": table.rows,
        "k_min": scan.k_min,
        "k_max": scan.k_max,
        "monotone_approach": scan.monotone_approach,
    });
    let mut artifacts = vec![write_report(cfg, out, &p, true, table.to_csv(), result)?];
    let profile_series = PlotSeries {
        name: "I".into(),
        points: table.rows.iter().map(|r| (r.t, r.i)).collect(),
    };
    artifacts.extend(emit_plotdata(
        &[profile_series],
        &PlotSpec {
            stem: "profile".into(),
            title: "isoperimetric profile".into(),
            x_label: "t".into(),
            y_label: "I(t)".into(),
            log_x: false,
        },
        out,
    )?);
    let ratio_series = PlotSeries {
        name: "I/L".into(),
        points: scan.rows.iter().map(|r| (r.t, r.ratio)).collect(),
    };
    artifacts.extend(emit_plotdata(
        &[ratio_series],
        &PlotSpec {
            stem: "profile-ratio".into(),
            title: "profile over comparison function".into(),
            x_label: "t".into(),
            y_label: "I(t)/L(t)".into(),
            log_x: true,
        },
        out,
    )?);
    Ok(Outcome {
        command: cfg.command,
        passed: true,
        summary: vec![format!(
            "profile: {} rows, I/L in [{:.6}, {:.6}]",
            table.rows.len(),
            scan.k_min,
            scan.k_max
        )],
        artifacts,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct HardyParams {
    rate: Option<RateRecipe>,
    points: usize,
}

impl Default for HardyParams {
    fn default() -> Self {
        HardyParams { rate: None, points: 512 }
    }
}

fn rate_or_default(cfg: &RunConfig, rate: &Option<RateRecipe>) -> Result<RateFunction, CliError> {
    let recipe = rate.clone().unwrap_or_else(|| RateRecipe::FromPotential {
        potential: cfg.measure.clone(),
    });
    RateFunction::new(recipe).map_err(field("rate"))
}

fn hardy(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let mut p: HardyParams = params(cfg)?;
    require((16..=100_000).contains(&p.points), "points", "must lie in [16, 100000]")?;
    let m = measure(cfg)?;
    let rate = rate_or_default(cfg, &p.rate)?;
    p.rate = Some(rate.recipe().clone());
    let h = hardy_constants_on(&m, &rate, p.points);
    let interval = BecknerInterval::from_hardy(&h);
    let laplace = laplace_sufficient_check(&m, &rate);
    let passed = interval.finite;
    let mut csv = String::from("quantity,value\n");
    for (k, v) in [
        ("B_minus", h.minus.value),
        ("B_plus", h.plus.value),
        ("B", interval.b),
        ("beckner_lower", interval.lower),
        ("beckner_upper", interval.upper),
        ("laplace_worst_margin", laplace.worst_margin),
    ] {
        let _ = writeln!(csv, "{k},{v:e}");
    }
    let _ = writeln!(csv, "finite,{}", interval.finite);
    let result = json!({
        "hardy": h,
        "beckner_interval": interval,
        "laplace": { "verdict": laplace.verdict, "worst_margin": laplace.worst_margin },
    });
    let artifacts = vec![write_report(cfg, out, &p, passed, csv, result)?];
    let mut summary = vec![format!(
        "hardy: B- = {:.9}, B+ = {:.9}, Beckner constant in [{:.9}, {:.9}] -> {}",
        h.minus.value,
        h.plus.value,
        interval.lower,
        interval.upper,
        verdict_word(passed)
    )];
    for side in [&h.minus, &h.plus] {
        if let Some(d) = &side.diagnostic {
            summary.push(format!("hardy: {d}"));
        }
    }
    Ok(Outcome {
        command: cfg.command,
        passed,
        summary,
        artifacts,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct BetaParams {
    beta: Option<BetaRecipe>,
    s_min: f64,
    s_max: f64,
    points: usize,
    sandwich_points: usize,
    capacity: bool,
    capacity_points: usize,
    /// The capacity check compares against `capacity_constant · β`.
    capacity_constant: f64,
}

impl Default for BetaParams {
    fn default() -> Self {
        BetaParams {
            beta: None,
            s_min: 1.0,
            s_max: 1e6,
            points: 60,
            sandwich_points: 50,
            capacity: false,
            capacity_points: 40,
            capacity_constant: 1.0,
        }
    }
}

fn beta_or_default(cfg: &RunConfig, beta: &Option<BetaRecipe>) -> Result<BetaFunction, CliError> {
    let recipe = beta.clone().unwrap_or_else(|| BetaRecipe::FromPotential {
        potential: cfg.measure.clone(),
    });
    BetaFunction::new(recipe).map_err(field("beta"))
}

#[derive(Debug, Clone, Copy, Serialize)]
struct BetaRow {
    s: f64,
    beta: f64,
}

fn beta(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let mut p: BetaParams = params(cfg)?;
    require(p.s_min >= 1.0 && p.s_min.is_finite(), "s_min", "must be finite and >= 1")?;
    require(p.s_max > p.s_min && p.s_max.is_finite(), "s_max", "must be finite and > s_min")?;
    require((2..=100_000).contains(&p.points), "points", "must lie in [2, 100000]")?;
    require((1..=10_000).contains(&p.sandwich_points), "sandwich_points", "must lie in [1, 10000]")?;
    require((1..=10_000).contains(&p.capacity_points), "capacity_points", "must lie in [1, 10000]")?;
    require(
        p.capacity_constant > 0.0 && p.capacity_constant.is_finite(),
        "capacity_constant",
        "must be positive",
    )?;
    let beta = beta_or_default(cfg, &p.beta)?;
    p.beta = Some(beta.recipe().clone());
    let rows: Vec<BetaRow> = logspace(p.s_min, p.s_max, p.points)
        .into_iter()
        .map(|s| BetaRow { s, beta: beta.value(s) })
        .collect();
    let a_grid = logspace(1e-9, 0.49, p.sandwich_points);
    let sandwich = a_grid
        .par_iter()
        .map(|&a| beta_sandwich(&beta, a))
        .collect::<Result<Vec<_>, _>>()
        .map_err(field("beta"))?;
    let sandwich_holds = sandwich.iter().all(|s| s.holds);
    let certificate = beta.certificate();
    let capacity = if p.capacity {
        let m = measure(cfg)?;
        let t_grid = logspace(1e-8, 0.49, p.capacity_points);
        let scaled = beta.scaled(p.capacity_constant).map_err(field("capacity_constant"))?;
        Some(capacity_measure_check(&m, &scaled, &t_grid).map_err(|e| usage(format!("measure: {e}")))?)
    } else {
        None
    };
    let capacity_ok = capacity.as_ref().is_none_or(|c| c.verdict == Verdict::Pass);
    let passed = sandwich_holds && certificate.holds() && capacity_ok;
    let mut csv = String::from("s,beta\n");
    for r in &rows {
        let _ = writeln!(csv, "{:e},{:e}", r.s, r.beta);
    }
    let result = json!({
        "rows": rows,
        "certificate": certificate,
        "sandwich_holds": sandwich_holds,
        "sandwich": sandwich,
        "capacity": capacity,
    });
    let mut artifacts = vec![write_report(cfg, out, &p, passed, csv, result)?];
    artifacts.extend(emit_plotdata(
        &[PlotSeries {
            name: "beta".into(),
            points: rows.iter().map(|r| (r.s, r.beta)).collect(),
        }],
        &PlotSpec {
            stem: "beta".into(),
            title: "super-Poincare rate function".into(),
            x_label: "s".into(),
            y_label: "beta(s)".into(),
            log_x: true,
        },
        out,
    )?);
    let mut summary = vec![format!(
        "beta: sandwich [1/2, 2] at {} masses {}, certificate {}",
        sandwich.len(),
        if sandwich_holds { "holds" } else { "FAILS" },
        if certificate.holds() { "holds" } else { "FAILS" }
    )];
    if let Some(c) = &capacity {
        summary.push(format!(
            "beta: capacity-measure worst margin {:.6} -> {}",
            c.worst_margin,
            verdict_word(c.verdict == Verdict::Pass)
        ));
    }
    Ok(Outcome {
        command: cfg.command,
        passed,
        summary,
        artifacts,
    })
}

fn inequality_csv(r: &InequalityReport, seed: u64) -> String {
    format!(
        "inequality,N,trials,seed,constant,grid_slack,threshold,worst_ratio,worst_parameter,verdict\n\
         {},{},{},{},{:e},{:e},{:e},{:e},{:e},{}\n",
        r.inequality,
        r.grid.n,
        r.trial_family.total(),
        seed,
        r.constant,
        GRID_SLACK,
        r.threshold,
        r.worst_ratio,
        r.worst_parameter,
        if r.verdict == Verdict::Pass { "pass" } else { "fail" }
    )
}

fn inequality_outcome<P: Serialize>(
    cfg: &RunConfig,
    out: &Path,
    p: &P,
    report: InequalityReport,
) -> Result<Outcome, CliError> {
    let passed = report.verdict == Verdict::Pass;
    let summary = vec![format!(
        "{}: worst ratio {:.6} vs threshold {:.6} = {} x (1 + {}) -> {}",
        cfg.command,
        report.worst_ratio,
        report.threshold,
        report.constant,
        GRID_SLACK,
        verdict_word(passed)
    )];
    let csv = inequality_csv(&report, cfg.seed);
    let result = serde_json::to_value(&report).map_err(|e| usage(format!("report: {e}")))?;
    let artifacts = vec![write_report(cfg, out, p, passed, csv, result)?];
    Ok(Outcome {
        command: cfg.command,
        passed,
        summary,
        artifacts,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SpiParams {
    beta: Option<BetaRecipe>,
    constant: f64,
    s: Vec<f64>,
    #[serde(rename = "N")]
    n: usize,
    trials: usize,
    window: Option<[f64; 2]>,
}

impl Default for SpiParams {
    fn default() -> Self {
        SpiParams {
            beta: None,
            constant: 8.0,
            s: vec![1.0, 2.0, 10.0, 100.0, 1e3, 1e4, 1e6],
            n: 2000,
            trials: 500,
            window: None,
        }
    }
}

fn check_trials(trials: usize) -> Result<(), CliError> {
    require((1..=1_000_000).contains(&trials), "trials", "must lie in [1, 1000000]")
}

fn verify_spi(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let mut p: SpiParams = params(cfg)?;
    require(p.constant > 0.0 && p.constant.is_finite(), "constant", "must be positive")?;
    finite_list(&p.s, "s")?;
    check_trials(p.trials)?;
    let beta = beta_or_default(cfg, &p.beta)?;
    p.beta = Some(beta.recipe().clone());
    let m = measure(cfg)?;
    let gm = grid(&m, p.n, p.window)?;
    let family = TrialFamily::new(cfg.seed, p.trials);
    let report = super_poincare_test(&gm, &beta, &p.s, &family, p.constant).map_err(field("s"))?;
    inequality_outcome(cfg, out, &p, report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct BecknerParams {
    rate: Option<RateRecipe>,
    c: Option<f64>,
    p: Vec<f64>,
    #[serde(rename = "N")]
    n: usize,
    trials: usize,
    window: Option<[f64; 2]>,
}

impl Default for BecknerParams {
    fn default() -> Self {
        BecknerParams {
            rate: None,
            c: None,
            p: vec![1.001, 1.25, 1.5, 1.75, 1.999],
            n: 1000,
            trials: 300,
            window: None,
        }
    }
}

fn verify_beckner(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let mut p: BecknerParams = params(cfg)?;
    finite_list(&p.p, "p")?;
    check_trials(p.trials)?;
    let m = measure(cfg)?;
    let rate = rate_or_default(cfg, &p.rate)?;
    p.rate = Some(rate.recipe().clone());
    let c = match p.c {
        Some(c) => {
            require(c > 0.0 && c.is_finite(), "c", "must be positive")?;
            c
        }
        None => {
            // the certified upper end of the Beckner interval
            let h = hardy_constants_on(&m, &rate, isoperim_core::capacity::HARDY_GRID_POINTS);
            let interval = BecknerInterval::from_hardy(&h);
            require(
                interval.finite,
                "c",
                "the Hardy constant of this rate diverges, so no default exists; supply c",
            )?;
            interval.upper
        }
    };
    p.c = Some(c);
    let gm = grid(&m, p.n, p.window)?;
    let family = TrialFamily::new(cfg.seed, p.trials);
    let report = beckner_test(&gm, &rate, c, &p.p, &family).map_err(field("p"))?;
    inequality_outcome(cfg, out, &p, report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FSobolevParams {
    #[serde(rename = "F")]
    f: Option<FSpec>,
    #[serde(rename = "N")]
    n: usize,
    trials: usize,
    window: Option<[f64; 2]>,
}

impl Default for FSobolevParams {
    fn default() -> Self {
        FSobolevParams {
            f: None,
            n: 2000,
            trials: 1000,
            window: None,
        }
    }
}

fn verify_fsobolev(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let p: FSobolevParams = params(cfg)?;
    let fspec = p
        .f
        .ok_or_else(|| usage("params.F: missing (e.g. {\"f\": \"log\", \"constant\": 2})"))?;
    let fspec = FSpec::new(fspec.function, fspec.constant).map_err(field("F"))?;
    check_trials(p.trials)?;
    let m = measure(cfg)?;
    let gm = grid(&m, p.n, p.window)?;
    let family = TrialFamily::new(cfg.seed, p.trials);
    let report = fsobolev_test(&gm, &fspec, &family).map_err(field("F"))?;
    inequality_outcome(cfg, out, &p, report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SemigroupParams {
    #[serde(rename = "N")]
    n: usize,
    intervals: usize,
    t: Vec<f64>,
    ledoux_t: Vec<f64>,
    reach: Option<f64>,
    curvature: Option<f64>,
    beta: Option<BetaRecipe>,
    wang_constant: f64,
    wang_s: Vec<f64>,
}

impl Default for SemigroupParams {
    fn default() -> Self {
        SemigroupParams {
            n: 400,
            intervals: 20,
            t: vec![0.01, 0.1, 1.0],
            ledoux_t: vec![0.01, 0.1],
            reach: None,
            curvature: None,
            beta: None,
            wang_constant: 8.0,
            wang_s: vec![2.0, 10.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum CheckKind {
    /// `|∫P_t f - ∫f|`.
    Mass,
    /// `∫|P_t f| - ∫|f|`.
    Contraction,
    /// `|∫f P_{2t}f - ∫(P_t f)²|`.
    Symmetry,
    /// Semigroup isoperimetric margin.
    Ledoux,
    /// Decay margin under `constant · β`.
    Wang,
}

#[derive(Debug, Clone, Copy, Serialize)]
struct SemigroupRow {
    kind: CheckKind,
    a: f64,
    b: f64,
    t: f64,
    s: Option<f64>,
    value: f64,
    /// Upper bound for error rows, lower bound for margin rows.
    bound: f64,
    ok: bool,
}

fn semigroup(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let mut p: SemigroupParams = params(cfg)?;
    require((1..=10_000).contains(&p.intervals), "intervals", "must lie in [1, 10000]")?;
    require(p.t.iter().all(|&t| t > 0.0 && t <= 1e4), "t", "values must lie in (0, 1e4]")?;
    require(
        p.ledoux_t.iter().all(|&t| t > 0.0 && t <= 1e4),
        "ledoux_t",
        "values must lie in (0, 1e4]",
    )?;
    require(p.wang_s.iter().all(|&s| s >= 1.0 && s.is_finite()), "wang_s", "values must be >= 1")?;
    require(
        p.wang_constant > 0.0 && p.wang_constant.is_finite(),
        "wang_constant",
        "must be positive",
    )?;
    let m = measure(cfg)?;
    let gm = grid(&m, p.n, None)?;
    let gen = Generator::new(&gm);
    let x = m.truncation();
    let reach = p.reach.unwrap_or_else(|| m.upper_quantile(1e-3).min(x));
    require(reach > 0.0 && reach <= x, "reach", "must lie in (0, truncation]")?;
    p.reach = Some(reach);
    let r = p.curvature.unwrap_or_else(|| gen.curvature());
    require(r >= 0.0 && r.is_finite(), "curvature", "must be finite and >= 0")?;
    p.curvature = Some(r);
    // the decay check needs a β; measures without one skip it
    let wang_beta = match &p.beta {
        Some(recipe) => Some(BetaFunction::new(recipe.clone()).map_err(field("beta"))?),
        None => BetaFunction::from_potential(m.potential()).ok(),
    };
    let wang_beta = wang_beta
        .map(|b| b.scaled(p.wang_constant).map_err(field("wang_constant")))
        .transpose()?;
    p.beta = wang_beta.as_ref().map(|b| match b.recipe() {
        BetaRecipe::Scaled { inner, .. } => (**inner).clone(),
        other => other.clone(),
    });

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sets: Vec<(f64, f64)> = (0..p.intervals)
        .map(|_| {
            let u: f64 = rng.gen_range(-reach..reach);
            let v: f64 = rng.gen_range(-reach..reach);
            (u.min(v), u.max(v))
        })
        .collect();
    let per_set = sets
        .par_iter()
        .map(|&(a, b)| -> Result<Vec<SemigroupRow>, CliError> {
            let set = IntervalSet::new(vec![(a, b)]);
            let f = set.mollified_indicator(&gm);
            let evolve_at = |t: f64| evolve(&gen, &f, t).map_err(field("t"));
            let row = |kind, t, s, value: f64, bound: f64, upper: bool| SemigroupRow {
                kind,
                a,
                b,
                t,
                s,
                value,
                bound,
                ok: if upper { value <= bound } else { value >= bound },
            };
            let mut rows = Vec::new();
            for &t in &p.t {
                let pt = evolve_at(t)?;
                let p2t = evolve_at(2.0 * t)?;
                let mass = (gm.integrate(&pt) - gm.integrate(&f)).abs();
                let l1 = gm.moment(&pt, 1.0) - gm.moment(&f, 1.0);
                let cross: f64 = f.iter().zip(&p2t).zip(gm.weights()).map(|((u, v), w)| u * v * w).sum();
                let sym = (cross - gm.norm2_sq(&pt)).abs();
                rows.push(row(CheckKind::Mass, t, None, mass, IDENTITY_TOL, true));
                rows.push(row(CheckKind::Contraction, t, None, l1, CONTRACTION_TOL, true));
                rows.push(row(CheckKind::Symmetry, t, None, sym, IDENTITY_TOL, true));
            }
            for &t in &p.ledoux_t {
                let c = ledoux_check(&gen, &gm, &set, t, r).map_err(field("ledoux_t"))?;
                rows.push(row(CheckKind::Ledoux, t, None, c.margin, -LEDOUX_TOL, false));
            }
            if let Some(beta) = &wang_beta {
                for &s in &p.wang_s {
                    let t = 0.5 * beta.value(s);
                    let margin = wang_decay_check(&gen, &gm, &f, beta, s, t).map_err(field("wang_s"))?;
                    rows.push(row(CheckKind::Wang, t, Some(s), margin, -WANG_TOL, false));
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<SemigroupRow> = per_set.into_iter().flatten().collect();
    let passed = rows.iter().all(|r| r.ok);
    let mut csv = String::from("kind,a,b,t,s,value,bound,ok\n");
    for r in &rows {
        let kind = serde_json::to_value(r.kind).ok().and_then(|v| v.as_str().map(String::from));
        let s = r.s.map(|s| format!("{s:e}")).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{:e},{:e},{:e},{},{:e},{:e},{}",
            kind.unwrap_or_default(),
            r.a,
            r.b,
            r.t,
            s,
            r.value,
            r.bound,
            r.ok
        );
    }
    let worst = |kind: CheckKind| -> Option<f64> {
        let vals = rows.iter().filter(|r| r.kind == kind).map(|r| r.value);
        match kind {
            CheckKind::Ledoux | CheckKind::Wang => vals.reduce(f64::min),
            _ => vals.reduce(f64::max),
        }
    };
    let mut summary = Vec::new();
    for kind in [
        CheckKind::Mass,
        CheckKind::Contraction,
        CheckKind::Symmetry,
        CheckKind::Ledoux,
        CheckKind::Wang,
    ] {
        if let Some(w) = worst(kind) {
            let failed = rows.iter().filter(|r| r.kind == kind && !r.ok).count();
            summary.push(format!("semigroup: {kind:?} worst {w:e}, {failed} violations"));
        }
    }
    summary.push(format!("semigroup: curvature R = {r:e} -> {}", verdict_word(passed)));
    let result = json!({ "curvature": r, "rows": rows });
    let artifacts = vec![write_report(cfg, out, &p, passed, csv, result)?];
    Ok(Outcome {
        command: cfg.command,
        passed,
        summary,
        artifacts,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ProductParams {
    mass: Vec<f64>,
    angles: Vec<f64>,
    #[serde(rename = "K")]
    k: Option<f64>,
}

impl Default for ProductParams {
    fn default() -> Self {
        ProductParams {
            mass: vec![0.1, 0.2, 0.3, 0.5],
            angles: vec![PI / 8.0, PI / 4.0, 3.0 * PI / 8.0],
            k: None,
        }
    }
}

fn product(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let p: ProductParams = params(cfg)?;
    finite_list(&p.mass, "mass")?;
    require(p.angles.iter().all(|a| a.is_finite()), "angles", "values must be finite")?;
    let m = measure(cfg)?;
    let comparisons = p
        .mass
        .iter()
        .map(|&mass| compare_candidates(&m, mass, p.k, &p.angles))
        .collect::<Result<Vec<_>, _>>()
        .map_err(field("mass"))?;
    let passed = comparisons.iter().all(|c| c.dominates);
    let mut csv = String::from("target,shape,parameter,mass,boundary,ratio_to_halfplane\n");
    let mut summary = Vec::new();
    let mut series: Vec<PlotSeries> = Vec::new();
    for c in &comparisons {
        for r in &c.rows {
            let _ = writeln!(
                csv,
                "{:e},{},{:e},{:e},{:e},{:e}",
                c.mass, r.shape, r.parameter, r.mass, r.boundary, r.ratio_to_halfplane
            );
            match series.iter_mut().find(|s| s.name == r.shape) {
                Some(s) => s.points.push((c.mass, r.boundary)),
                None => series.push(PlotSeries {
                    name: r.shape.clone(),
                    points: vec![(c.mass, r.boundary)],
                }),
            }
        }
        summary.push(format!(
            "product: mass {} best {} (half-plane/best {:.6}), K = {:.6}{}, {} skipped",
            c.mass,
            c.best_shape,
            c.halfplane_over_best,
            c.k,
            if c.k_supplied { " (supplied)" } else { "" },
            c.skipped.len()
        ));
    }
    summary.push(format!("product: K·L domination -> {}", verdict_word(passed)));
    let result = json!({ "comparisons": comparisons });
    let mut artifacts = vec![write_report(cfg, out, &p, passed, csv, result)?];
    artifacts.extend(emit_plotdata(
        &series,
        &PlotSpec {
            stem: "product".into(),
            title: "boundary measure of candidate sets".into(),
            x_label: "mass".into(),
            y_label: "boundary".into(),
            log_x: false,
        },
        out,
    )?);
    Ok(Outcome {
        command: cfg.command,
        passed,
        summary,
        artifacts,
    })
}
