use gflow_core::flow::*;
use gflow_core::geometry::*;
use gflow_core::grid_fields::*;
use gflow_core::presets::{self, MetricPreset, PhiPreset};

fn torus(dim: usize, n: usize) -> GridSpec {
    GridSpec::torus(dim, n).unwrap()
}

fn bump_state(n: usize, phi: PhiPreset) -> FlowState {
    let grid = torus(2, n);
    FlowState::new(
        presets::bump_metric(grid, 0.05, 1.0).unwrap(),
        phi.build(grid, presets::PHI_AMPLITUDE, 1.0),
    )
}

fn max_abs_sym(t: &SymTensorField) -> f64 {
    t.max_abs()
}

fn flat_state(n: usize) -> FlowState {
    let grid = torus(2, n);
    FlowState::new(MetricField::flat(grid), ScalarField::zeros(grid))
}

#[test]
fn flat_state_is_stationary() {
    let s = flat_state(16);
    let params = FlowParams::new(1.0, 1.0, 1.0, 1.0);
    let r = rhs_direct(&s, &params).unwrap();
    assert_eq!(max_abs_sym(&r.dg), 0.0);
    assert_eq!(r.dphi.values().iter().fold(0.0f64, |m, v| m.max(v.abs())), 0.0);
    let bg = Background::new(MetricField::flat(*s.g.grid())).unwrap();
    let r = rhs_deturck(&s, &bg, &params).unwrap();
    assert_eq!(max_abs_sym(&r.dg), 0.0);
    let ctl = StepControl::from_cfl(&s.g, 0.2);
    let next = step(&s, &params, &ctl, &Gauge::Direct).unwrap();
    for p in 0..s.g.grid().len() {
        assert!((next.g.at(0, 0, p) - 1.0).abs() < 1e-14);
        assert!(next.phi.at(p).abs() < 1e-14);
    }
    assert!((next.t - ctl.dt).abs() < 1e-18);
}

#[test]
fn eigenfunction_cancels_in_scalar_equation() {
    let grid = torus(2, 128);
    let s = FlowState::new(MetricField::flat(grid), ScalarField::from_fn(grid, |x| x[0].sin()));
    let r = rhs_direct(&s, &FlowParams::new(0.0, 0.0, 0.0, 1.0)).unwrap();
    assert!(r.dphi.values().iter().all(|v| v.abs() < 1e-6));
}

#[test]
fn cigar_rhs_trace_is_minus_scalar_curvature() {
    let grid = GridSpec::new(2, 129, 4.0, Topology::InteriorPatch).unwrap();
    let s = FlowState::new(presets::cigar_metric(grid).unwrap(), ScalarField::zeros(grid));
    let r = rhs_direct(&s, &FlowParams::ricci()).unwrap();
    let half_trace = trace(&r.dg, &invert_metric(&s.g).unwrap()).map(|v| 0.5 * v);
    let mut worst: f64 = 0.0;
    for p in (0..grid.len()).filter(|&p| grid.is_interior(p, r.dg.margin())) {
        let want = -presets::cigar_scalar_curvature(grid.position(p));
        worst = worst.max((half_trace.at(p) - want).abs());
    }
    assert!(worst < 4.0 * 5e-3, "{worst}");
    assert!(max_abs_sym(&r.dg) > 1.0);
}

#[test]
fn deturck_vector_vanishes_for_equal_or_scaled_metrics() {
    let grid = torus(2, 32);
    let g = presets::bump_metric(grid, 0.05, 1.0).unwrap();
    assert_eq!(deturck_vector(&g, &g).unwrap().max_abs(), 0.0);
    let scaled = MetricField::new(g.scaled(3.0)).unwrap();
    assert!(deturck_vector(&scaled, &g).unwrap().max_abs() < 1e-13);
}

#[test]
fn deturck_vector_matches_naive_contraction() {
    let grid = torus(2, 32);
    let g = MetricPreset::Conformal.build(grid, 0.1, 1.0).unwrap();
    let gt = MetricField::flat(grid);
    let v = deturck_vector(&g, &gt).unwrap();
    let gamma = christoffel(&g).unwrap();
    let gi = invert_metric(&g).unwrap();
    for p in (0..grid.len()).step_by(19) {
        for i in 0..2 {
            let mut want = 0.0;
            for k in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        want += g.at(i, k, p) * gi.at(b, c, p) * gamma.at(&[k, b, c], p);
                    }
                }
            }
            assert!((v.at(&[i], p) - want).abs() < 1e-14);
        }
    }
}

fn background_defect(n: usize) -> f64 {
    let grid = torus(2, n);
    let g = presets::bump_metric(grid, 0.05, 1.0).unwrap();
    let s = FlowState::new(g.clone(), ScalarField::zeros(grid));
    let bg = Background::new(g.clone()).unwrap();
    let params = FlowParams::ricci();
    let dt = rhs_deturck(&s, &bg, &params).unwrap();
    let dd = rhs_direct(&s, &params).unwrap();
    dt.dg.lin_comb(1.0, &dd.dg, -1.0).max_abs()
}

#[test]
fn deturck_reduces_to_ricci_term_at_background() {
    // g = g̃ curved: V = 0 and the parabolic form gives −2Ric up to the
    // difference between the compact and composed second-derivative stencils
    let (c, f) = (background_defect(32), background_defect(64));
    assert!(f < 1e-6 && c / f >= 10.0, "{c} {f}");
}

fn gauge_defect(n: usize, background: MetricPreset) -> f64 {
    let grid = torus(2, n);
    let g = presets::bump_metric(grid, 0.05, 1.0).unwrap();
    let gt = match background {
        MetricPreset::Flat => MetricField::flat(grid),
        _ => MetricPreset::Conformal.build(grid, 0.05, 1.0).unwrap(),
    };
    let s = FlowState::new(g.clone(), presets::phi_mix(grid, 0.3, 1.0));
    let params = FlowParams::new(1.0, 0.0, 0.7, 0.3);
    let bg = Background::new(gt.clone()).unwrap();
    let a = rhs_deturck(&s, &bg, &params).unwrap();
    let b = rhs_direct(&s, &params).unwrap();
    let conn = Connection::new(&g).unwrap();
    let lie = lie_derivative_metric(&deturck_vector(&g, &gt).unwrap(), &conn).unwrap();
    a.dg.lin_comb(1.0, &b.dg, -1.0).lin_comb(1.0, &lie, -1.0).max_abs()
}

#[test]
fn gauge_identity_with_flat_background() {
    let (c, f) = (gauge_defect(32, MetricPreset::Flat), gauge_defect(64, MetricPreset::Flat));
    assert!(c / f >= 10.0, "{c} {f}");
}

#[test]
fn gauge_identity_with_curved_background() {
    let (c, f) = (gauge_defect(32, MetricPreset::Conformal), gauge_defect(64, MetricPreset::Conformal));
    assert!(c / f >= 10.0, "{c} {f}");
}

#[test]
fn scalar_equation_in_deturck_gauge_adds_transport() {
    // ∂φ = Δφ + ⟨V, ∇φ⟩ + β₁|∇φ|² + β₂φ
    let grid = torus(2, 64);
    let g = presets::bump_metric(grid, 0.05, 1.0).unwrap();
    let s = FlowState::new(g.clone(), presets::phi_mix(grid, 0.3, 1.0));
    let params = FlowParams::new(0.0, 0.0, 0.5, 0.2);
    let flat = MetricField::flat(grid);
    let a = rhs_deturck(&s, &Background::new(flat.clone()).unwrap(), &params).unwrap();
    let b = rhs_direct(&s, &params).unwrap();
    let v = deturck_vector(&g, &flat).unwrap();
    let grad = gradient(&s.phi).unwrap();
    let gi = invert_metric(&g).unwrap();
    let mut worst: f64 = 0.0;
    for p in 0..grid.len() {
        let mut vdphi = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                vdphi += gi.at(i, j, p) * v.at(&[i], p) * grad.at(&[j], p);
            }
        }
        worst = worst.max((a.dphi.at(p) - b.dphi.at(p) - vdphi).abs());
    }
    assert!(worst < 1e-5, "{worst}");
}

#[test]
fn rk4_local_error_is_fifth_order() {
    let s = bump_state(32, PhiPreset::Sin);
    let params = FlowParams::new(1.0, 0.0, 0.5, 0.0);
    let bg = Gauge::DeTurck(Box::new(Background::new(s.g.clone()).unwrap()));
    let local = |dt: f64| {
        let ctl = StepControl { dt, cfl_safety: 1.0, scheme: Scheme::Rk4, max_metric_eigen_ratio: 1e3 };
        let half = StepControl { dt: dt / 2.0, ..ctl };
        let one = step(&s, &params, &ctl, &bg).unwrap();
        let two = step(&step(&s, &params, &half, &bg).unwrap(), &params, &half, &bg).unwrap();
        one.g.lin_comb(1.0, &two.g, -1.0).max_abs()
    };
    let dt = cfl_limit(&s.g) * 0.8;
    let (a, b) = (local(dt), local(dt / 2.0));
    let order = (a / b).log2();
    assert!(order > 4.5, "{a} {b} {order}");
}

#[test]
fn run_row_count_and_zero_step_run() {
    let s = bump_state(16, PhiPreset::Zero);
    let mut ctl = StepControl::from_cfl(&s.g, 0.2);
    ctl.dt = 1e-3;
    let series = run(&s, &FlowParams::ricci(), &ctl, &Gauge::Direct, 0.0105, 3, &mut []);
    assert!(series.completed());
    // 11 steps, sampled after steps 3, 6, 9 plus the initial row
    assert_eq!(series.len(), 11 / 3 + 1);
    assert_eq!(series.columns, vec!["t"]);
    let empty = run(&s, &FlowParams::ricci(), &ctl, &Gauge::Direct, 0.0, 1, &mut []);
    assert_eq!(empty.len(), 1);
    assert_eq!(empty.rows[0][0], 0.0);
    let ts = series.times();
    assert!(ts.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn oversized_step_is_rejected() {
    let s = bump_state(16, PhiPreset::Zero);
    let mut ctl = StepControl::from_cfl(&s.g, 0.2);
    ctl.dt *= 100.0;
    let series = run(&s, &FlowParams::ricci(), &ctl, &Gauge::Direct, 0.1, 1, &mut []);
    match &series.termination {
        Termination::Aborted { kind, .. } => assert_eq!(kind, "CflViolation"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        step(&s, &FlowParams::ricci(), &ctl, &Gauge::Direct),
        Err(FlowError::CflViolation { .. })
    ));
}

#[test]
fn flows_need_a_periodic_grid() {
    let grid = GridSpec::new(2, 16, 4.0, Topology::InteriorPatch).unwrap();
    let s = FlowState::new(MetricField::flat(grid), ScalarField::zeros(grid));
    let ctl = StepControl::from_cfl(&s.g, 0.2);
    assert!(matches!(step(&s, &FlowParams::ricci(), &ctl, &Gauge::Direct), Err(FlowError::NotPeriodic)));
}

#[test]
fn blow_up_is_reported_not_clamped() {
    // strongly negative β₂ is harmless, but a huge α₁ makes g explode
    let grid = torus(2, 16);
    let s = FlowState::new(MetricField::flat(grid), ScalarField::from_fn(grid, |x| 3.0 * x[0].sin()));
    let params = FlowParams::new(-2000.0, 0.0, 0.0, 0.0);
    let ctl = StepControl::from_cfl(&s.g, 0.5);
    let series = run(&s, &params, &ctl, &Gauge::Direct, 1.0, 1, &mut []);
    match &series.termination {
        Termination::Aborted { kind, .. } => {
            assert!(kind == "PositivityLost" || kind == "CflViolation" || kind == "EigenRatioExceeded", "{kind}")
        }
        other => panic!("{other:?}"),
    }
    assert!(!series.is_empty());
}

struct TotalCurvature;

impl Monitor for TotalCurvature {
    fn columns(&self) -> Vec<String> {
        vec!["int_R_dV".into()]
    }

    fn sample(&mut self, snap: &Snapshot<'_>) -> Result<Vec<f64>, FlowError> {
        let vol = snap.state.g.volume_density();
        Ok(vec![field_reduce(&snap.bundle.scal, Reduction::Integral, Some(&vol))?])
    }
}

#[test]
fn total_curvature_stays_zero_under_ricci_flow() {
    let s = bump_state(64, PhiPreset::Zero);
    let ctl = StepControl::from_cfl(&s.g, 0.2);
    let mut monitors: Vec<Box<dyn Monitor>> = vec![Box::new(TotalCurvature)];
    let series = run(&s, &FlowParams::ricci(), &ctl, &Gauge::Direct, 0.1, 10, &mut monitors);
    assert!(series.completed(), "{:?}", series.termination);
    let col = series.column("int_R_dV").unwrap();
    assert!(col.iter().all(|v| v.abs() < 1e-4), "{col:?}");
}

#[test]
fn volume_form_tracks_predicted_rate() {
    for deturck in [false, true] {
        let s = bump_state(64, PhiPreset::Mix);
        let params = FlowParams::new(1.0, 0.5, 0.5, 0.0);
        let gauge = if deturck {
            Gauge::DeTurck(Box::new(Background::new(MetricField::flat(*s.g.grid())).unwrap()))
        } else {
            Gauge::Direct
        };
        let ctl = StepControl::from_cfl(&s.g, 0.2);
        let mut state = s.clone();
        let mut worst: f64 = 0.0;
        for _ in 0..5 {
            let next = step(&state, &params, &ctl, &gauge).unwrap();
            worst = worst.max(volume_rate_residual(&state, &next, &params, &gauge).unwrap());
            state = next;
        }
        assert!(worst <= 1e-4, "deturck={deturck}: {worst}");
    }
}

#[test]
fn metric_stays_exactly_symmetric() {
    // symmetric storage: nothing to drift, but the step must keep the type
    let s = bump_state(16, PhiPreset::Mix);
    let ctl = StepControl::from_cfl(&s.g, 0.2);
    let next = step(&s, &FlowParams::new(1.0, 1.0, 1.0, 1.0), &ctl, &Gauge::Direct).unwrap();
    let full = next.g.to_tensor();
    assert_eq!(full.comp(&[0, 1]), full.comp(&[1, 0]));
}
