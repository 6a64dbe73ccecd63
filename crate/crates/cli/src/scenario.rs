//! Scenario execution and artifact emission.

use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gflow_core::analysis::{
    classify, classify_with, compare_invariants, decay_monitor, envelope, initial_gradient_bound, perelman_entropy,
    standard_monitors, verify_envelope, CurvatureMonitor, EntropyMonitor, GradientMonitor, MonitorConfig,
};
use gflow_core::flow::{
    cfl_limit, run, Background, FlowError, FlowParams, FlowState, Gauge, Monitor, MonitorSeries, StepControl,
    Termination,
};
use gflow_core::geometry::{tensor_norm_sq, CurvatureBundle};
use gflow_core::grid_fields::{field_reduce, linalg::Sym, GridSpec, MetricField, Reduction, ScalarField, SymTensorField};
use gflow_core::presets;
use gflow_core::verify::{check_lemma, convergence_order, prop21_residuals, soliton_residual, LemmaCheckReport};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{EntropyPotential, ExperimentConfig, GaugeChoice, InitialData, Scenario};
use crate::output::{series_csv, write_atomic, write_plots};
use crate::report::{exit, Check, Report, Status};

/// Everything a scenario produced, before anything is written.
pub struct Outcome {
    pub report: Report,
    /// Main time series, written as `series.csv`.
    pub series: Option<MonitorSeries>,
    /// Further series written as `series_<name>.csv`.
    pub extra_series: Vec<(String, MonitorSeries)>,
}

/// Builds the initial state at the configured resolution.
pub fn initial_state(cfg: &ExperimentConfig) -> Result<FlowState, String> {
    initial_state_on(cfg, cfg.grid)
}

fn initial_state_on(cfg: &ExperimentConfig, grid: GridSpec) -> Result<FlowState, String> {
    match &cfg.initial {
        InitialData::Preset { metric, metric_amplitude, phi, phi_amplitude, frequency } => {
            let g = metric.build(grid, *metric_amplitude, *frequency).map_err(|e| e.to_string())?;
            Ok(FlowState::new(g, phi.build(grid, *phi_amplitude, *frequency)))
        }
        InitialData::File(path) => read_state_file(path, grid),
    }
}

/// Reads a CSV with header `g00,g01,[g02,]g11,…,phi` and one row per grid
/// point in linear index order.
pub fn read_state_file(path: &Path, grid: GridSpec) -> Result<FlowState, String> {
    let dim = grid.dim();
    let mut r = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut names: Vec<String> = Vec::new();
    for i in 0..dim {
        for j in i..dim {
            names.push(format!("g{i}{j}"));
        }
    }
    names.push("phi".into());
    let header: Vec<String> = r.headers().map_err(|e| e.to_string())?.iter().map(|s| s.trim().to_string()).collect();
    if header != names {
        return Err(format!("{}: expected header {}", path.display(), names.join(",")));
    }
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(grid.len());
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| format!("{}: row {}: {e}", path.display(), k + 2)))
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != names.len() || row.iter().any(|v| !v.is_finite()) {
            return Err(format!("{}: row {} malformed", path.display(), k + 2));
        }
        rows.push(row);
    }
    if rows.len() != grid.len() {
        return Err(format!("{}: {} rows for a grid of {} points", path.display(), rows.len(), grid.len()));
    }
    let sym = SymTensorField::from_matrices(grid, 0, |p| {
        let mut m: Sym = [[0.0; 3]; 3];
        let mut c = 0;
        for i in 0..dim {
            for j in i..dim {
                m[i][j] = rows[p][c];
                m[j][i] = rows[p][c];
                c += 1;
            }
        }
        m
    });
    let g = MetricField::new(sym).map_err(|e| e.to_string())?;
    let phi = ScalarField::new(grid, rows.iter().map(|r| r[names.len() - 1]).collect()).map_err(|e| e.to_string())?;
    Ok(FlowState::new(g, phi))
}

fn step_control(cfg: &ExperimentConfig, g: &MetricField) -> StepControl {
    let c = &cfg.control;
    StepControl {
        dt: c.dt.unwrap_or_else(|| c.cfl_safety * cfl_limit(g)),
        cfl_safety: c.cfl_safety,
        scheme: c.scheme,
        max_metric_eigen_ratio: c.max_eigen_ratio,
    }
}

fn gauge(cfg: &ExperimentConfig) -> Result<Gauge, String> {
    Ok(match cfg.control.gauge {
        GaugeChoice::Direct => Gauge::Direct,
        GaugeChoice::DeTurck => {
            Gauge::DeTurck(Box::new(Background::new(MetricField::flat(cfg.grid)).map_err(|e| e.to_string())?))
        }
    })
}

fn finite_max(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max)
}

/// Runs the configured scenario without touching the filesystem.
pub fn run_scenario(cfg: &ExperimentConfig) -> Outcome {
    let mut report = Report::new(cfg.scenario.name(), cfg.echo());
    let mut out = Outcome { report: Report::new(cfg.scenario.name(), Default::default()), series: None, extra_series: vec![] };
    let result = match cfg.scenario {
        Scenario::Evolve | Scenario::Envelope => evolve(cfg, &mut report, &mut out),
        Scenario::CheckLemmas => check_lemmas(cfg, &mut report),
        Scenario::Classify => classify_scenario(cfg, &mut report),
        Scenario::Soliton => soliton(cfg, &mut report),
        Scenario::DeturckCompare => deturck_compare(cfg, &mut report, &mut out),
        Scenario::Entropy => entropy(cfg, &mut report),
    };
    report.finalize();
    if let Err(message) = result {
        // input that only turns out unusable once loaded, such as a bad state file
        report.status = Status::ConfigError;
        report.exit_code = exit::CONFIG;
        report.error = Some(message);
    }
    out.report = report;
    out
}

fn evolve(cfg: &ExperimentConfig, report: &mut Report, out: &mut Outcome) -> Result<(), String> {
    let state = initial_state(cfg)?;
    let ctl = step_control(cfg, &state.g);
    let gauge = gauge(cfg)?;
    let mcfg = MonitorConfig {
        background: None,
        sandwich_power: cfg.monitors.sandwich_power,
        entropy_tau: cfg.monitors.entropy_tau,
        decay: cfg.monitors.decay || cfg.checks.decay,
    };
    let mut monitors = standard_monitors(&state, &mcfg);
    let mut series = run(&state, &cfg.params, &ctl, &gauge, cfg.control.t_end, cfg.control.monitor_stride, &mut monitors);
    let mut results = serde_json::Map::new();
    results.insert("dt".into(), json!(ctl.dt));
    results.insert("cfl_limit".into(), json!(cfl_limit(&state.g)));
    results.insert("samples".into(), json!(series.len()));
    results.insert("final_t".into(), json!(series.rows.last().map(|r| r[0])));
    results.insert("regularity".into(), json!(classify(&cfg.params)));

    let ch = &cfg.checks;
    if let Some(tol) = ch.volume_tolerance {
        let worst = finite_max(series.column("vol_rate_residual").unwrap_or_default());
        report.checks.push(Check::new("volume_rate", worst <= tol, &[("max_residual", worst), ("tolerance", tol)]));
    }
    if let Some(tol) = ch.conservation_tolerance {
        let worst = finite_max(series.column("int_R_dV").unwrap_or_default().into_iter().map(f64::abs));
        report.checks.push(Check::new("total_curvature", worst <= tol, &[("max_abs_int_R_dV", worst), ("tolerance", tol)]));
    }
    if ch.decay {
        let h = cfg.grid.h();
        let t_min = ch.decay_t_min.unwrap_or(4.0 * h * h);
        let d = decay_monitor(&series, t_min);
        for c in &d.columns {
            report.checks.push(Check::new(
                &format!("decay_{}", c.name),
                c.passed,
                &[("first_quarter_max", c.first_quarter_max), ("last_quarter_max", c.last_quarter_max)],
            ));
        }
        results.insert("decay".into(), json!(d));
    }
    if cfg.scenario == Scenario::Envelope {
        let c_tilde = match ch.c_tilde {
            Some(c) => c,
            None => initial_gradient_bound(&state).map_err(|e| e.to_string())?,
        };
        let env = envelope(&cfg.params, c_tilde).map_err(|e| e.to_string())?;
        let verdict = verify_envelope(&series, &env, ch.envelope_slack).map_err(|e| e.to_string())?;
        report.checks.push(Check::new(
            "gradient_envelope",
            verdict.passed,
            &[("max_ratio", verdict.max_ratio), ("slack", ch.envelope_slack), ("c_tilde", c_tilde)],
        ));
        series.columns.push("envelope_bound".into());
        for row in &mut series.rows {
            row.push(env.eval(row[0]));
        }
        results.insert("regularity".into(), json!(classify_with(&cfg.params, c_tilde)));
        results.insert("envelope".into(), json!(env));
        results.insert("verdict".into(), json!(verdict));
    }
    report.termination = Some(series.termination.clone());
    report.results = Value::Object(results);
    out.series = Some(series);
    Ok(())
}

fn check_lemmas(cfg: &ExperimentConfig, report: &mut Report) -> Result<(), String> {
    if matches!(cfg.initial, InitialData::File(_)) {
        return Err("check-lemmas refines the grid and needs preset initial data".into());
    }
    let make = |n: usize| {
        let grid = GridSpec::new(cfg.grid.dim(), n, cfg.grid.length(), cfg.grid.topology())?;
        initial_state_on(cfg, grid).map_err(gflow_core::grid_fields::FieldError::BadGrid)
    };
    let ch = &cfg.checks;
    let reports: Vec<Result<LemmaCheckReport, FlowError>> = ch
        .lemmas
        .par_iter()
        .map(|&l| check_lemma(&make, cfg.grid.n(), ch.levels, &cfg.params, l, ch.order_threshold))
        .collect();
    let mut ok = Vec::new();
    for r in reports {
        match r {
            Ok(r) => {
                let last = r.levels.last().map(|l| l.relative).unwrap_or(f64::NAN);
                report.checks.push(Check::new(
                    &format!("lemma_{}", r.lemma_id.name()),
                    r.pass,
                    &[("order", r.order), ("threshold", r.threshold), ("finest_relative_residual", last)],
                ));
                ok.push(r);
            }
            Err(e) => {
                report.termination = Some(Termination::Aborted { kind: e.kind().into(), message: e.to_string(), t: 0.0 });
                break;
            }
        }
    }
    if report.termination.is_none() {
        report.termination = Some(Termination::Completed);
    }
    report.results = json!({ "lemmas": ok });
    Ok(())
}

fn classify_scenario(cfg: &ExperimentConfig, report: &mut Report) -> Result<(), String> {
    let r = match cfg.checks.c_tilde {
        Some(c) => classify_with(&cfg.params, c),
        None => classify(&cfg.params),
    };
    let mut results = json!({ "regularity": r });
    if let Some(c) = cfg.checks.c_tilde {
        let env = envelope(&cfg.params, c).map_err(|e| e.to_string())?;
        results["envelope"] = json!(env);
    }
    report.results = results;
    Ok(())
}

struct CigarLevel {
    n: usize,
    h: f64,
    residual: f64,
    ric: f64,
    curvature_error: f64,
    trace: f64,
}

fn interior_max(f: &ScalarField) -> Result<f64, String> {
    field_reduce(&f.map(f64::abs), Reduction::Max, None).map_err(|e| e.to_string())
}

fn cigar_level(grid: GridSpec) -> Result<CigarLevel, String> {
    let g = presets::cigar_metric(grid).map_err(|e| e.to_string())?;
    let f = presets::cigar_potential(grid);
    let b = CurvatureBundle::new(&g).map_err(|e| e.to_string())?;
    let res = soliton_residual(&g, &f).map_err(|e| e.to_string())?;
    let residual = interior_max(&tensor_norm_sq(&res.to_tensor(), &b.conn).map(f64::sqrt))?;
    let ric = interior_max(&tensor_norm_sq(&b.ric.to_tensor(), &b.conn).map(f64::sqrt))?;
    let exact = ScalarField::from_fn(grid, presets::cigar_scalar_curvature);
    let curvature_error = interior_max(&b.scal.lin_comb(1.0, &exact, -1.0))? / 4.0;
    // Ric = −∇²f, so the traced stationary-pair identity R = αΔφ holds at α = −1
    let trace = interior_max(&prop21_residuals(&g, &f, -1.0, 0.0).map_err(|e| e.to_string())?.trace1)?;
    Ok(CigarLevel { n: grid.n(), h: grid.h(), residual, ric, curvature_error, trace })
}

fn soliton(cfg: &ExperimentConfig, report: &mut Report) -> Result<(), String> {
    let grids = [cfg.grid, cfg.grid.refined()];
    let levels: Vec<CigarLevel> = grids.par_iter().map(|&g| cigar_level(g)).collect::<Result<_, _>>()?;
    let (a, b) = (&levels[0], &levels[1]);
    let rel = a.residual / a.ric;
    let order = convergence_order(&[a.residual, b.residual]);
    let threshold = cfg.checks.order_threshold;
    report.checks.push(Check::new("soliton_residual", rel <= 1e-2, &[("relative", rel), ("tolerance", 1e-2)]));
    report.checks.push(Check::new("soliton_order", order >= threshold, &[("order", order), ("threshold", threshold)]));
    let reduction = a.curvature_error / b.curvature_error;
    report.checks.push(Check::new(
        "scalar_curvature",
        a.curvature_error <= 5e-3,
        &[("relative_error", a.curvature_error), ("tolerance", 5e-3)],
    ));
    report.checks.push(Check::new(
        "scalar_curvature_refinement",
        reduction >= 3.5,
        &[("reduction", reduction), ("minimum", 3.5)],
    ));
    report.termination = Some(Termination::Completed);
    report.results = json!({
        "levels": levels.iter().map(|l| json!({
            "n": l.n,
            "h": l.h,
            "max_residual_g": l.residual,
            "max_ric_g": l.ric,
            "scalar_curvature_relative_error": l.curvature_error,
            "trace_residual_alpha_minus_one": l.trace,
        })).collect::<Vec<_>>(),
        "residual_order": order,
        "trace_order": convergence_order(&[a.trace, b.trace]),
    });
    Ok(())
}

/// Invariant columns compared across the two runs.
pub const COMPARE_COLUMNS: [&str; 5] = ["max_R", "min_R", "max_grad_phi_sq", "int_R_dV", "entropy_w"];

fn invariant_monitors(tau: f64) -> Vec<Box<dyn Monitor>> {
    vec![Box::new(GradientMonitor), Box::new(CurvatureMonitor), Box::new(EntropyMonitor { tau })]
}

fn deturck_compare(cfg: &ExperimentConfig, report: &mut Report, out: &mut Outcome) -> Result<(), String> {
    let state = initial_state(cfg)?;
    let ctl = step_control(cfg, &state.g);
    let reduced = cfg.params.reduced();
    let t_end = cfg.control.t_end;
    let stride = cfg.control.monitor_stride;
    let tau = cfg.monitors.entropy_tau;
    let go = |p: &FlowParams| run(&state, p, &ctl, &Gauge::Direct, t_end, stride, &mut invariant_monitors(tau));
    let (a, b) = rayon::join(|| go(&cfg.params), || go(&reduced));
    for s in [&a, &b] {
        if let Termination::Aborted { .. } = s.termination {
            report.termination = Some(s.termination.clone());
        }
    }
    if report.termination.is_none() {
        report.termination = Some(Termination::Completed);
        // curvature columns cross zero; measure them against the curvature scale
        let r_scale = ["max_R", "min_R"]
            .iter()
            .flat_map(|c| a.column(c).unwrap_or_default().into_iter().chain(b.column(c).unwrap_or_default()))
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let volume = cfg.grid.length().powi(cfg.grid.dim() as i32);
        let floors = [r_scale, r_scale, 0.0, r_scale * volume, 0.0];
        let cols: Vec<(&str, f64)> = COMPARE_COLUMNS.iter().copied().zip(floors).collect();
        let cmp = compare_invariants(&a, &b, &cols, cfg.checks.compare_tolerance).map_err(|e| e.to_string())?;
        for c in &cmp.columns {
            report.checks.push(Check::new(
                &format!("invariant_{}", c.column),
                c.passed,
                &[("max_relative", c.max_relative), ("floor", c.floor), ("tolerance", cmp.tolerance)],
            ));
        }
        report.checks.push(Check::new("sample_count", a.len() == b.len(), &[("a", a.len() as f64), ("b", b.len() as f64)]));
        report.results = json!({ "dt": ctl.dt, "reduced_params": reduced, "comparison": cmp });
    } else {
        report.results = json!({ "dt": ctl.dt, "reduced_params": reduced });
    }
    out.series = Some(a);
    out.extra_series.push(("reduced".into(), b));
    Ok(())
}

fn entropy(cfg: &ExperimentConfig, report: &mut Report) -> Result<(), String> {
    let state = initial_state(cfg)?;
    let f = match cfg.entropy.f {
        EntropyPotential::Phi => state.phi.clone(),
        EntropyPotential::Constant(c) => ScalarField::constant(cfg.grid, c),
    };
    let w = perelman_entropy(&state.g, &f, cfg.entropy.tau).map_err(|e| e.to_string())?;
    if let Some(expect) = cfg.entropy.expect {
        let tol = cfg.entropy.tolerance;
        report.checks.push(Check::new(
            "entropy_value",
            (w - expect).abs() <= tol,
            &[("w", w), ("expected", expect), ("tolerance", tol)],
        ));
    }
    report.termination = Some(Termination::Completed);
    report.results = json!({ "w": w, "tau": cfg.entropy.tau });
    Ok(())
}

/// Paths written by [`write_artifacts`].
#[derive(Debug, Default)]
pub struct Written {
    pub files: Vec<PathBuf>,
}

/// Writes the series, plots and report of `outcome` under `dir`, plus a
/// `timing.json` sidecar holding the wall time.
pub fn write_artifacts(cfg: &ExperimentConfig, dir: &Path, outcome: &Outcome, wall_time: f64) -> io::Result<Written> {
    let mut w = Written::default();
    let o = &cfg.output;
    if let Some(series) = &outcome.series {
        if o.emit_csv {
            let p = dir.join("series.csv");
            write_atomic(&p, &series_csv(series))?;
            w.files.push(p);
            for (name, s) in &outcome.extra_series {
                let p = dir.join(format!("series_{name}.csv"));
                write_atomic(&p, &series_csv(s))?;
                w.files.push(p);
            }
        }
        if o.emit_svg {
            w.files.extend(write_plots(dir, series, &o.plot_columns)?);
        }
    }
    if o.emit_json {
        write_report(dir, &outcome.report, wall_time, &mut w)?;
    }
    Ok(w)
}

fn write_report(dir: &Path, report: &Report, wall_time: f64, w: &mut Written) -> io::Result<()> {
    let p = dir.join("report.json");
    write_atomic(&p, &report.to_json())?;
    w.files.push(p);
    let t = dir.join("timing.json");
    let body = serde_json::to_vec_pretty(&json!({ "report": "report.json", "wall_time_s": wall_time }))?;
    write_atomic(&t, &body)?;
    w.files.push(t);
    Ok(())
}

/// Report for a configuration that could not be loaded.
pub fn write_config_error(dir: &Path, scenario: &str, message: &str) -> io::Result<()> {
    let mut report = Report::new(scenario, Default::default());
    report.status = Status::ConfigError;
    report.exit_code = exit::CONFIG;
    report.error = Some(message.to_string());
    write_report(dir, &report, 0.0, &mut Written::default())
}

/// Runs `cfg` and writes its artifacts to `cfg.output.directory`.
pub fn execute(cfg: &ExperimentConfig) -> io::Result<Outcome> {
    let start = Instant::now();
    let outcome = run_scenario(cfg);
    write_artifacts(cfg, &cfg.output.directory, &outcome, start.elapsed().as_secs_f64())?;
    Ok(outcome)
}
