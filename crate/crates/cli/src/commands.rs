//! Command implementations behind the CLI subcommands.

use serde::Deserialize;
use serde_json::{json, Value};

use blochlab_core::evolve::{
    box_evolve, default_lr_samples, light_cone_scan, lr_bound_check, BoxSpec, LightConePlan,
};
use blochlab_core::floquet::hermitian_bands;
use blochlab_core::perturb::{eta2_oracle, eta3_oracle, rs_expand, verify_low_order};
use blochlab_core::velocity::{
    predicted_leading_constant, sweep_and_fit, velocity_report, ThetaGrid,
};
use blochlab_core::verify;

use crate::config::{parse_grid, RawConfig};
use crate::output::{fmt_float, OutputWriter};
use crate::AppError;

fn default_theta_points() -> usize {
    64
}

fn require_positive(name: &str, value: f64) -> Result<(), AppError> {
    if !(value.is_finite() && value > 0.0) {
        return Err(AppError::Config(format!("{name} must be positive, got {value}")));
    }
    Ok(())
}

// ---------------------------------------------------------------- bands

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandsTask {
    pub mu: f64,
    #[serde(default = "default_theta_points")]
    pub theta_points: usize,
}

/// θ-grid scan of the sorted band functions, one CSV row per node.
pub fn cmd_bands(cfg: &RawConfig, out: &mut OutputWriter) -> Result<(), AppError> {
    let model = cfg.build_model()?;
    let task: BandsTask = cfg.task()?;
    require_positive("mu", task.mu)?;
    let grid = ThetaGrid::uniform(model.dims(), task.theta_points);
    let mut csv = String::new();
    let headers: Vec<String> = (1..=model.dims())
        .map(|j| format!("theta_{j}"))
        .chain((1..=model.cell_size()).map(|n| format!("lambda_{n}")))
        .collect();
    csv.push_str(&headers.join(","));
    csv.push('\n');
    for theta in grid.nodes() {
        let bands = hermitian_bands(&model, task.mu, &theta)?;
        let row: Vec<String> = theta
            .iter()
            .map(|t| fmt_float(*t))
            .chain(bands.energies().iter().map(|e| fmt_float(*e)))
            .collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    out.write_text("bands.csv", &csv)?;
    out.diagnostic("theta_points", json!(task.theta_points));
    Ok(())
}

// -------------------------------------------------------------- perturb

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbTask {
    pub order: usize,
}

/// Exact series expansion, its JSON dump, the closed-form oracle
/// comparison, and the low-order structure report.
pub fn cmd_perturb(cfg: &RawConfig, out: &mut OutputWriter) -> Result<(), AppError> {
    let model = cfg.build_model()?;
    let task: PerturbTask = cfg.task()?;
    let expansion = rs_expand(&model, task.order)?;
    out.write_json("expansion.json", &expansion.to_json())?;

    let oracle_ok = if task.order >= 3 {
        let mut ok = true;
        for n in 0..model.cell_size() {
            ok &= expansion.eta(n, 2) == &eta2_oracle(&model, n)?;
            ok &= expansion.eta(n, 3) == &eta3_oracle(&model, n)?;
        }
        Some(ok)
    } else {
        None
    };
    let report = verify_low_order(&expansion);
    let checks: Vec<Value> = report
        .checks
        .iter()
        .map(|c| {
            json!({
                "name": c.name,
                "n": c.n,
                "r": c.r,
                "j": c.j,
                "ok": c.ok,
                "detail": c.detail,
            })
        })
        .collect();
    out.write_json(
        "low_order.json",
        &json!({
            "passed": report.passed(),
            "dual_oracle_exact": oracle_ok,

            "checks": checks,
        }),
    )?;
    if !report.passed() || oracle_ok == Some(false) {
        return Err(AppError::Numerical(
            blochlab_core::Error::InvariantViolation {
                n: 0,
                r: 0,
                j: 0,
                detail: "low-order verification failed, see low_order.json".into(),
            },
        ));
    }
    Ok(())
}

// ------------------------------------------------------------- velocity

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocityTask {
    pub mu: f64,
    #[serde(default = "default_theta_points")]
    pub theta_points: usize,
}

pub fn cmd_velocity(cfg: &RawConfig, out: &mut OutputWriter) -> Result<(), AppError> {
    let model = cfg.build_model()?;
    let task: VelocityTask = cfg.task()?;
    require_positive("mu", task.mu)?;
    let grid = ThetaGrid::uniform(model.dims(), task.theta_points);
    let report = velocity_report(&model, task.mu, &grid)?;
    out.diagnostic("theta_grid_reached", json!(report.grid.counts));
    let (c_pred, c_pred_delta0) = predicted_leading_constant(&model);
    out.write_json(
        "velocity.json",
        &json!({
            "mu": report_float(task.mu),
            "gi_norms": report.gi_norms.iter().map(|x| report_float(*x)).collect::<Vec<_>>(),
            "v_asy": report_float(report.v_asy),
            "v_asy_delta0": report_float(report.v_asy_delta0),
            "argmax_band": report.argmax_band,
            "argmax_theta": report.argmax_theta.iter().map(|x| report_float(*x)).collect::<Vec<_>>(),
            "grid": report.grid.counts,
            "degenerate_flag": report.degenerate_flag,
            "predicted_constant": report_float(c_pred),
            "predicted_constant_delta0": report_float(c_pred_delta0),
        }),
    )?;
    Ok(())
}

/// JSON numbers lose the 17-digit guarantee in some consumers; persist
/// velocities as strings with the canonical formatting.
fn report_float(x: f64) -> String {
    fmt_float(x)
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepTask {
    pub mu_grid: String,
    #[serde(default = "default_theta_points")]
    pub theta_points: usize,
}

/// Coupling sweep: per-μ velocity CSV plus the power-law fit summary.
pub fn cmd_sweep(cfg: &RawConfig, out: &mut OutputWriter) -> Result<(), AppError> {
    let model = cfg.build_model()?;
    let task: SweepTask = cfg.task()?;
    let mus = parse_grid(&task.mu_grid)?;
    for &mu in &mus {
        require_positive("mu", mu)?;
    }
    let grid = ThetaGrid::uniform(model.dims(), task.theta_points);
    let sweep = sweep_and_fit(&model, &mus, &grid)?;
    out.diagnostic(
        "theta_grid_reached",
        json!(sweep.reports.iter().map(|r| r.grid.counts.clone()).collect::<Vec<_>>()),
    );

    let mut csv = String::new();
    let headers: Vec<String> = std::iter::once("mu".to_string())
        .chain((1..=model.dims()).map(|j| format!("gi_norm_{j}")))
        .chain(["v_asy".to_string(), "v_asy_delta0".to_string()])
        .collect();
    csv.push_str(&headers.join(","));
    csv.push('\n');
    for (mu, report) in sweep.mus.iter().zip(&sweep.reports) {
        let row: Vec<String> = std::iter::once(fmt_float(*mu))
            .chain(report.gi_norms.iter().map(|g| fmt_float(*g)))
            .chain([fmt_float(report.v_asy), fmt_float(report.v_asy_delta0)])
            .collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    out.write_text("sweep.csv", &csv)?;

    let fit_json = |f: &blochlab_core::fit::PowerLawFit| {
        json!({
            "slope": report_float(f.exponent),
            "intercept": report_float(f.log_amplitude),
            "amplitude": report_float(f.amplitude),
            "r2": report_float(f.r2),
        })
    };
    out.write_json(
        "fit.json",
        &json!({
            "slope": report_float(sweep.fit_v_asy.exponent),
            "intercept": report_float(sweep.fit_v_asy.log_amplitude),
            "r2": report_float(sweep.fit_v_asy.r2),
            "predicted_slope": report_float(sweep.predicted_exponent),
            "predicted_constant": report_float(sweep.predicted_constant),
            "predicted_constant_delta0": report_float(sweep.predicted_constant_delta0),
            "delta0": fit_json(&sweep.fit_delta0),
            "gi": sweep.fit_gi.iter().map(fit_json).collect::<Vec<_>>(),
            "poor_fit": sweep.poor_fit,
        }),
    )?;
    Ok(())
}

// --------------------------------------------------------------- evolve

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveTask {
    pub mu: f64,
    pub t: f64,
    pub window: Vec<i64>,
    #[serde(default)]
    pub half_width: Option<Vec<i64>>,
    #[serde(default)]
    pub source: Option<Vec<i64>>,
}

/// Certified box evolution; amplitudes over the analysis window as CSV.
pub fn cmd_evolve(cfg: &RawConfig, out: &mut OutputWriter) -> Result<(), AppError> {
    let model = cfg.build_model()?;
    let task: EvolveTask = cfg.task()?;
    require_positive("mu", task.mu)?;
    if !(task.t.is_finite() && task.t >= 0.0) {
        return Err(AppError::Config(format!("t must be nonnegative, got {}", task.t)));
    }
    let spec = match task.half_width {
        Some(h) => BoxSpec::new(h, task.window.clone())?,
        None => BoxSpec::with_free_speed_margin(task.window.clone(), model.dims(), task.t),
    };
    let source = task.source.unwrap_or_else(|| vec![0; model.dims()]);
    let field = box_evolve(&model, task.mu, task.t, &spec, &source)?;

    let mut csv = String::new();
    let headers: Vec<String> = (1..=model.dims())
        .map(|j| format!("n_{j}"))
        .chain(["re".to_string(), "im".to_string(), "abs".to_string()])
        .collect();
    csv.push_str(&headers.join(","));
    csv.push('\n');
    for (site, amp) in field.sites() {
        let row: Vec<String> = site
            .iter()
            .map(|s| s.to_string())
            .chain([fmt_float(amp.re), fmt_float(amp.im), fmt_float(amp.norm())])
            .collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    out.write_text("amplitudes.csv", &csv)?;
    out.diagnostic("window_mass", json!(report_float(field.total_mass())));
    out.diagnostic("box_half_width", json!(spec.half_width));
    out.diagnostic("box_certified", json!(true));
    Ok(())
}

// ------------------------------------------------------------ lightcone

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightconeTask {
    pub mu_grid: String,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_front_target")]
    pub front_target: i64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_eta() -> f64 {
    1e-6
}

fn default_front_target() -> i64 {
    40
}

fn default_samples() -> usize {
    24
}

/// Light-cone scans per coupling, front traces as CSV, velocities and
/// (given ≥ 4 couplings) the exponent fit as JSON.
pub fn cmd_lightcone(cfg: &RawConfig, out: &mut OutputWriter) -> Result<(), AppError> {
    let model = cfg.build_model()?;
    let task: LightconeTask = cfg.task()?;
    let mus = parse_grid(&task.mu_grid)?;
    for &mu in &mus {
        require_positive("mu", mu)?;
    }
    require_positive("eta", task.eta)?;
    if task.front_target <= 0 {
        return Err(AppError::Config("front_target must be positive".into()));
    }
    let source = vec![0i64; model.dims()];

    let mut velocities = Vec::new();
    let mut r2s = Vec::new();
    let mut flags = Vec::new();
    for (i, &mu) in mus.iter().enumerate() {
        let plan = LightConePlan::auto(&model, mu, task.front_target, task.samples);
        let scan = light_cone_scan(&model, mu, &plan.times, task.eta, &plan.spec, &source)?;
        let mut csv = String::from("t,r\n");
        for (t, r) in &scan.trace.samples {
            csv.push_str(&format!("{},{r}\n", fmt_float(*t)));
        }
        out.write_text(&format!("front_{i}.csv"), &csv)?;
        velocities.push(scan.velocity);
        r2s.push(scan.r2);
        flags.push(scan.nonlinear_flag);
    }

    let mut summary = json!({
        "mus": mus.iter().map(|m| report_float(*m)).collect::<Vec<_>>(),
        "eta": report_float(task.eta),
        "front_velocities": velocities.iter().map(|v| report_float(*v)).collect::<Vec<_>>(),
        "r2": r2s.iter().map(|v| report_float(*v)).collect::<Vec<_>>(),
        "nonlinear_flags": flags,
    });
    if mus.len() >= 4 {
        let fit = blochlab_core::fit::power_law_fit(&mus, &velocities)?;
        summary["exponent"] = json!(report_float(fit.exponent));
        summary["exponent_r2"] = json!(report_float(fit.r2));
        summary["predicted_exponent"] =
            json!(report_float(-((model.min_period() as f64) - 1.0)));
    }
    out.write_json("lightcone.json", &summary)?;
    Ok(())
}

// -------------------------------------------------------------- lrcheck

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrcheckTask {
    pub mu_grid: String,
    pub rho0: f64,
    #[serde(default = "default_max_distance")]
    pub max_distance: i64,
    #[serde(default = "default_n_times")]
    pub n_times: usize,
}

fn default_max_distance() -> i64 {
    12
}

fn default_n_times() -> usize {
    5
}

/// Envelope constants of the exponential bound per coupling, plus their
/// spread across the grid.
pub fn cmd_lrcheck(cfg: &RawConfig, out: &mut OutputWriter) -> Result<(), AppError> {
    let model = cfg.build_model()?;
    let task: LrcheckTask = cfg.task()?;
    require_positive("rho0", task.rho0)?;
    let mus = parse_grid(&task.mu_grid)?;
    for &mu in &mus {
        require_positive("mu", mu)?;
    }
    let mut rows = Vec::new();
    let mut c1s = Vec::new();
    for &mu in &mus {
        let samples = default_lr_samples(&model, mu, task.max_distance, task.n_times);
        let report = lr_bound_check(&model, mu, task.rho0, &samples)?;
        c1s.push(report.c1);
        rows.push(json!({
            "mu": report_float(mu),
            "c": report_float(report.c),
            "c1": report_float(report.c1),
            "max_violation": report_float(report.max_violation),
            "used_samples": report.used_samples,
            "skipped_samples": report.skipped_samples,
        }));
    }
    let cmax = c1s.iter().cloned().fold(f64::MIN, f64::max);
    let cmin = c1s.iter().cloned().fold(f64::MAX, f64::min);
    out.write_json(
        "lrcheck.json",
        &json!({
            "rho0": report_float(task.rho0),
            "per_mu": rows,
            "c1_spread": report_float(if cmin > 0.0 { cmax / cmin } else { f64::INFINITY }),
        }),
    )?;
    Ok(())
}

// --------------------------------------------------------------- verify

/// Run the built-in invariant suite; one line per check.
pub fn cmd_verify(out: Option<&mut OutputWriter>) -> Result<bool, AppError> {
    let report = verify::run_all();
    for check in &report.checks {
        let mark = if check.passed { "ok  " } else { "FAIL" };
        println!("{mark} {} — {}", check.name, check.detail);
    }
    let passed = report.passed();
    println!(
        "{}: {} checks, {} failed",
        if passed { "PASS" } else { "FAIL" },
        report.checks.len(),
        report.checks.iter().filter(|c| !c.passed).count()
    );
    if let Some(out) = out {
        let checks: Vec<Value> = report
            .checks
            .iter()
            .map(|c| json!({ "name": c.name, "passed": c.passed, "detail": c.detail }))
            .collect();
        out.write_json("verify.json", &json!({ "passed": passed, "checks": checks }))?;
    }
    Ok(passed)
}
