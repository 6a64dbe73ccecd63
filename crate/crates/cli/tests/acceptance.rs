//! Acceptance suite. Prints one `[ACCEPT]` line per criterion.
//!
//! Failures are reported but do not fail `cargo test` unless
//! `GFLOW_ACCEPT_STRICT=1` is set.

use std::fs;
use std::time::{Duration, Instant};

use gflow_cli::scenario::write_artifacts;
use gflow_cli::{parse_config_str, run_scenario, Check, Report};
use gflow_core::analysis::{classify, perelman_entropy};
use gflow_core::flow::{deturck_vector, lie_derivative_metric, rhs_deturck, rhs_direct, Background, FlowParams, FlowState};
use gflow_core::geometry::Connection;
use gflow_core::grid_fields::{GridSpec, MetricField, ScalarField};
use gflow_core::presets;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn run(text: &str) -> Report {
    let cfg = parse_config_str(text, None, &[]).unwrap_or_else(|e| panic!("{e}\n{text}"));
    run_scenario(&cfg).report
}

fn check<'a>(r: &'a Report, name: &str) -> &'a Check {
    r.checks.iter().find(|c| c.name == name).unwrap_or_else(|| panic!("no check {name} in {:?}", r.checks))
}

fn value(r: &Report, name: &str, key: &str) -> f64 {
    check(r, name).values[key]
}

fn cigar_curvature() -> Outcome {
    let r = run("[run]\nscenario = \"soliton\"\n[grid]\nn = 129\n");
    let (a, b) = (check(&r, "scalar_curvature"), check(&r, "scalar_curvature_refinement"));
    outcome(
        a.pass && b.pass,
        format!("error/4 = {:.3e} (<= 5e-3), reduction {:.2} (>= 3.5)", a.values["relative_error"], b.values["reduction"]),
    )
}

fn cigar_soliton() -> Outcome {
    let r = run("[run]\nscenario = \"soliton\"\n[grid]\nn = 129\n[checks]\norder_threshold = 1.8\n");
    let (a, b) = (check(&r, "soliton_residual"), check(&r, "soliton_order"));
    outcome(
        a.pass && b.pass,
        format!("|Ric + Hess f|_g / max|Ric|_g = {:.3e} (<= 1e-2), order {:.3} (>= 1.8)", a.values["relative"], b.values["order"]),
    )
}

fn lemma_suite() -> Outcome {
    let mut pass = true;
    let mut worst = f64::INFINITY;
    for p in ["0, 0, 0, 0", "4, 0, 0, 0", "1, 1, 1, 1"] {
        let [a1, a2, b1, b2]: [&str; 4] = p.split(", ").collect::<Vec<_>>().try_into().unwrap();
        let params = format!("[params]\nalpha1 = {a1}.0\nalpha2 = {a2}.0\nbeta1 = {b1}.0\nbeta2 = {b2}.0\n");
        let r2 = run(&format!(
            "[run]\nscenario = \"check-lemmas\"\n[grid]\nn = 32\n{params}[checks]\norder_threshold = 1.8\n"
        ));
        let r3 = run(&format!(
            "[run]\nscenario = \"check-lemmas\"\n[grid]\ndim = 3\nn = 16\n{params}[checks]\nlemmas = [\"riemann\"]\norder_threshold = 1.5\n"
        ));
        for r in [&r2, &r3] {
            pass &= !r.checks.is_empty() && r.all_passed();
            worst = r.checks.iter().map(|c| c.values["order"]).fold(worst, f64::min);
        }
        pass &= r2.checks.len() == 7;
    }
    outcome(pass, format!("7 lemmas x 3 quadruples in 2D, 3D Riemann; lowest order {worst:.3}"))
}

fn envelopes() -> Outcome {
    let base = "[run]\nscenario = \"envelope\"\n[grid]\nn = 64\n[initial]\nmetric = \"bump\"\nphi = \"sin\"\nphi_amplitude = 0.3\n\
                [control]\nt_end = 0.1\n[monitors]\ndecay = false\n[checks]\nenvelope_slack = 1e-3\n";
    let list = run(&format!("{base}[params]\npreset = \"list-flow\"\n"));
    let growth = run(&format!("{base}[params]\nbeta2 = 0.5\n"));
    let (a, b) = (check(&list, "gradient_envelope"), check(&growth, "gradient_envelope"));
    outcome(
        a.pass && b.pass && list.exit_code == 0 && growth.exit_code == 0,
        format!(
            "max ratio to envelope: list {:.6}, growth {:.6} (<= 1.001)",
            a.values["max_ratio"], b.values["max_ratio"]
        ),
    )
}

fn classification() -> Outcome {
    let list = classify(&FlowParams::new(4.0, 0.0, 0.0, 0.0));
    let mixed = classify(&FlowParams::new(1.0, 1.0, 2.0, 0.0));
    let edge = classify(&FlowParams::new(1.0, 1.0, 0.0, 0.0));
    let d_ok = (list.d + 4.0).abs() <= 1e-14 && (mixed.d - 1.25).abs() <= 1e-14;
    let pass = d_ok && list.regular && !mixed.regular && mixed.star_regular && mixed.borderline && edge.borderline;
    outcome(
        pass,
        format!(
            "D(4,0,0,0) = {}, D(1,1,2,0) = {}; (1,1,2,0) regular {} star {} borderline {}; (1,1,0,0) borderline {}",
            list.d, mixed.d, mixed.regular, mixed.star_regular, mixed.borderline, edge.borderline
        ),
    )
}

fn gauge_defect(n: usize) -> f64 {
    let grid = GridSpec::torus(2, n).unwrap();
    let g = presets::bump_metric(grid, 0.05, 1.0).unwrap();
    let flat = MetricField::flat(grid);
    let s = FlowState::new(g.clone(), presets::phi_mix(grid, 0.3, 1.0));
    let params = FlowParams::new(1.0, 0.0, 0.7, 0.3);
    let a = rhs_deturck(&s, &Background::new(flat.clone()).unwrap(), &params).unwrap();
    let b = rhs_direct(&s, &params).unwrap();
    let lie = lie_derivative_metric(&deturck_vector(&g, &flat).unwrap(), &Connection::new(&g).unwrap()).unwrap();
    a.dg.lin_comb(1.0, &b.dg, -1.0).lin_comb(1.0, &lie, -1.0).max_abs()
}

fn gauge_identity() -> Outcome {
    let d = [gauge_defect(16), gauge_defect(32), gauge_defect(64)];
    let ratios = [d[0] / d[1], d[1] / d[2]];
    outcome(
        ratios.iter().all(|&r| r >= 10.0),
        format!("defects {:.2e} {:.2e} {:.2e}, ratios {:.1} {:.1} (>= 10)", d[0], d[1], d[2], ratios[0], ratios[1]),
    )
}

fn reduction_equivalence() -> Outcome {
    let base = "[run]\nscenario = \"deturck-compare\"\n[grid]\nn = 32\n[initial]\nmetric = \"bump\"\nphi = \"mix\"\n\
                [control]\nt_end = 0.05\n[compare]\ntolerance = 0.02\n";
    let r = run(&format!("{base}[params]\nalpha1 = 1.0\nalpha2 = 0.5\nbeta1 = 1.0\nbeta2 = 0.0\n"));
    let control = run(&format!("{base}[params]\nalpha1 = 1.0\nalpha2 = 0.0\nbeta1 = 0.5\nbeta2 = 0.0\n"));
    let cols = ["max_R", "max_grad_phi_sq", "int_R_dV"];
    let dev: Vec<f64> = cols.iter().map(|c| value(&r, &format!("invariant_{c}"), "max_relative")).collect();
    let pass = cols.iter().all(|c| check(&r, &format!("invariant_{c}")).pass) && check(&r, "sample_count").pass;
    let control_dev = control.results["comparison"]["columns"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["max_absolute"].as_f64().unwrap())
        .fold(0.0f64, f64::max);
    outcome(
        pass && control_dev == 0.0,
        format!(
            "max relative deviation R {:.2e}, grad {:.2e}, int R {:.2e} (<= 0.02); control {control_dev:e}",
            dev[0], dev[1], dev[2]
        ),
    )
}

fn bump_run(gauge: &str, checks: &str) -> Report {
    run(&format!(
        "[run]\nscenario = \"evolve\"\n[grid]\nn = 64\n[params]\npreset = \"ricci-flow\"\n[initial]\nmetric = \"bump\"\nphi = \"mix\"\n\
         [control]\nt_end = 0.1\ngauge = \"{gauge}\"\n[monitors]\ndecay = false\n[checks]\n{checks}"
    ))
}

fn volume_form() -> Outcome {
    let a = bump_run("direct", "volume_tolerance = 1e-4\n");
    let b = bump_run("deturck", "volume_tolerance = 1e-4\n");
    let (ca, cb) = (check(&a, "volume_rate"), check(&b, "volume_rate"));
    outcome(
        ca.pass && cb.pass && a.exit_code == 0 && b.exit_code == 0,
        format!("max residual direct {:.2e}, deturck {:.2e} (<= 1e-4)", ca.values["max_residual"], cb.values["max_residual"]),
    )
}

fn conservation() -> Outcome {
    let r = bump_run("direct", "conservation_tolerance = 1e-4\n");
    let c = check(&r, "total_curvature");
    outcome(
        c.pass && r.exit_code == 0,
        format!("max |int R dV| over [0, 0.1] = {:.2e} (<= 1e-4)", c.values["max_abs_int_R_dV"]),
    )
}

fn decay() -> Outcome {
    let r = bump_run("direct", "decay = true\n");
    let mut pass = r.exit_code == 0;
    let mut parts = Vec::new();
    for col in ["t_grad_rm_sq", "t2_grad2_rm_sq"] {
        let c = check(&r, &format!("decay_{col}"));
        let ratio = c.values["last_quarter_max"] / c.values["first_quarter_max"];
        pass &= c.pass;
        parts.push(format!("{col} ratio {ratio:.3}"));
    }
    outcome(pass, format!("{} (<= 1.5)", parts.join(", ")))
}

fn entropy() -> Outcome {
    let grid = GridSpec::torus(2, 32).unwrap();
    let flat = MetricField::flat(grid);
    let w2 = perelman_entropy(&flat, &ScalarField::constant(grid, 2.0), 1.0).unwrap();
    let w3 = perelman_entropy(&flat, &ScalarField::constant(grid, 3.0), 1.0).unwrap();
    let expect = std::f64::consts::PI * (-3.0f64).exp();
    let g = presets::bump_metric(grid, 0.05, 1.0).unwrap();
    let f = presets::phi_mix(grid, 0.3, 1.0);
    let w = perelman_entropy(&g, &f, 0.7).unwrap();
    let gs = MetricField::new(g.shifted(0, 5).shifted(1, 11)).unwrap();
    let ws = perelman_entropy(&gs, &f.shifted(0, 5).shifted(1, 11), 0.7).unwrap();
    let shift = (w - ws).abs();
    // grid shifts permute the quadrature sum; equality holds up to its rounding
    let round_off = 64.0 * f64::EPSILON * w.abs().max(1.0);
    outcome(
        w2.abs() <= 1e-10 && (w3 - expect).abs() <= 1e-10 && shift <= round_off,
        format!("W(f=2) = {w2:e}, W(f=3) - pi e^-3 = {:e}, shift change {shift:e}", w3 - expect),
    )
}

fn determinism() -> Outcome {
    let cfg = parse_config_str(
        "[run]\nscenario = \"evolve\"\n[grid]\nn = 32\n[params]\nalpha1 = 1.0\nalpha2 = 0.5\nbeta1 = 0.5\nbeta2 = 0.2\n[control]\nt_end = 0.05\n",
        None,
        &[],
    )
    .unwrap();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        write_artifacts(&cfg, d.path(), &run_scenario(&cfg), 0.0).unwrap();
    }
    let same = ["series.csv", "report.json"]
        .iter()
        .all(|n| fs::read(dirs[0].path().join(n)).unwrap() == fs::read(dirs[1].path().join(n)).unwrap());
    outcome(same, format!("series.csv and report.json {}", if same { "byte-identical" } else { "differ" }))
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let secs = Duration::from_secs;
    let criteria: [Criterion; 12] = [
        ("cigar scalar curvature", secs(5), cigar_curvature),
        ("cigar soliton identity", secs(5), cigar_soliton),
        ("lemma suite", secs(180), lemma_suite),
        ("gradient-bound envelopes", secs(60), envelopes),
        ("classification goldens", secs(1), classification),
        ("gauge identity", secs(10), gauge_identity),
        ("reduced-flow equivalence", secs(120), reduction_equivalence),
        ("volume-form evolution", secs(30), volume_form),
        ("total curvature conservation", secs(30), conservation),
        ("curvature derivative decay", secs(60), decay),
        ("entropy closed forms", secs(1), entropy),
        ("determinism", secs(60), determinism),
    ];
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (k, (name, budget, f)) in criteria.iter().enumerate() {
        if filter.as_deref().is_some_and(|s| !name.contains(s)) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        let took = start.elapsed();
        let pass = o.pass && took <= *budget;
        failed += usize::from(!pass);
        println!(
            "[ACCEPT] #{} {name}: {} ({}; {:.2}s of {}s)",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("[ACCEPT] {failed} failing");
    if failed > 0 && std::env::var("GFLOW_ACCEPT_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
