use gflow_core::flow::{rhs_direct, FlowParams, FlowState};
use gflow_core::geometry::{laplacian, CurvatureBundle};
use gflow_core::grid_fields::*;
use gflow_core::presets;
use gflow_core::verify::*;
use proptest::prelude::*;

fn torus(dim: usize, n: usize) -> GridSpec {
    GridSpec::torus(dim, n).unwrap()
}

fn flat_with(n: usize, phi: impl Fn([f64; 3]) -> f64) -> FlowState {
    let grid = torus(2, n);
    FlowState::new(MetricField::flat(grid), ScalarField::from_fn(grid, phi))
}

fn bump(dim: usize, n: usize) -> Result<FlowState, FieldError> {
    let grid = GridSpec::torus(dim, n)?;
    Ok(FlowState::new(
        presets::bump_metric(grid, presets::METRIC_AMPLITUDE, 1.0)?,
        presets::phi_mix(grid, presets::PHI_AMPLITUDE, 1.0),
    ))
}

fn bump2(n: usize) -> Result<FlowState, FieldError> {
    bump(2, n)
}

fn bump3(n: usize) -> Result<FlowState, FieldError> {
    bump(3, n)
}

fn max_scalar(f: &ScalarField) -> f64 {
    field_reduce(&f.map(f64::abs), Reduction::Max, None).unwrap()
}

fn all_rhs_max(state: &FlowState, p: &FlowParams) -> f64 {
    [
        lemma_rhs_gamma(state, p).unwrap().max_abs(),
        lemma_rhs_ricci(state, p).unwrap().max_abs(),
        max_scalar(&lemma_rhs_scalar(state, p).unwrap()),
        lemma_rhs_riemann(state, p).unwrap().max_abs(),
        max_scalar(&lemma_rhs_gradphi_sq(state, p).unwrap()),
        lemma_rhs_hessian(state, p).unwrap().max_abs(),
        lemma_rhs_dphi_dphi(state, p).unwrap().max_abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

#[test]
fn flat_zero_state_has_zero_rates() {
    for dim in [2, 3] {
        let grid = torus(dim, 16);
        let s = FlowState::new(MetricField::flat(grid), ScalarField::zeros(grid));
        assert!(all_rhs_max(&s, &FlowParams::new(1.3, -0.7, 2.1, 0.4)) <= 1e-12);
    }
}

#[test]
fn constant_phi_on_flat_torus_has_zero_rates() {
    let s = flat_with(16, |_| 0.8);
    let p = FlowParams::new(1.0, 1.0, 1.0, 0.0);
    assert!(max_scalar(&lemma_rhs_gradphi_sq(&s, &p).unwrap()) <= 1e-12);
    assert!(lemma_rhs_dphi_dphi(&s, &p).unwrap().max_abs() <= 1e-12);
}

#[test]
fn gamma_rate_of_hessian_flow_is_third_derivative() {
    // flat g, ∂_t g = 2α₂∇²φ: only Γ^0_00 moves, by α₂φ''' = −α₂cos x
    let a2 = 0.7;
    let s = flat_with(64, |x| x[0].sin());
    let r = lemma_rhs_gamma(&s, &FlowParams::new(0.0, a2, 0.0, 0.0)).unwrap();
    let grid = *s.g.grid();
    let mut err = 0.0f64;
    for c in 0..8 {
        let idx = r.multi_index(c);
        for p in 0..grid.len() {
            let want = if c == 0 { -a2 * grid.position(p)[0].cos() } else { 0.0 };
            err = err.max((r.at(&idx[..3], p) - want).abs());
        }
    }
    assert!(err < 1e-5, "{err}");
}

#[test]
fn ricci_rate_of_gradient_flow_matches_linearisation() {
    // δRic for h = 2α₁dφ⊗dφ on flat space with φ = sin x + sin y:
    // δR_00 = ∂_0∂_1 h_01 = 2α₁ sin x sin y, δR_01 = 0
    let a1 = 1.5;
    let s = flat_with(64, |x| x[0].sin() + x[1].sin());
    let r = lemma_rhs_ricci(&s, &FlowParams::new(a1, 0.0, 0.0, 0.0)).unwrap();
    let grid = *s.g.grid();
    let (mut e00, mut e01) = (0.0f64, 0.0f64);
    for p in 0..grid.len() {
        let x = grid.position(p);
        let want = 2.0 * a1 * x[0].sin() * x[1].sin();
        e00 = e00.max((r.at(&[0, 0], p) - want).abs());
        e01 = e01.max(r.at(&[0, 1], p).abs());
    }
    assert!(e00 < 1e-4 && e01 < 1e-4, "{e00} {e01}");
}

#[test]
fn scalar_rate_under_2d_ricci_flow_is_lap_r_plus_r_squared() {
    let errs: Vec<f64> = [32, 64]
        .into_iter()
        .map(|n| {
            let s = bump2(n).unwrap();
            let b = CurvatureBundle::new(&s.g).unwrap();
            let want = laplacian(&b.scal, &b.conn).unwrap().zip_with(&b.scal, |l, r| l + r * r);
            let got = lemma_rhs_scalar(&s, &FlowParams::ricci()).unwrap();
            max_scalar(&got.lin_comb(1.0, &want, -1.0)) / max_scalar(&want)
        })
        .collect();
    // 2D curvature is pure trace, so the reduction is algebraic
    assert!(errs.iter().all(|&e| e < 1e-12), "{errs:?}");
}

#[test]
fn gradient_rate_on_frozen_flat_torus_is_bochner() {
    // Δ|∇φ|² − 2|∇²φ|² for φ = sin x is −2cos²x
    let s = flat_with(64, |x| x[0].sin());
    let r = lemma_rhs_gradphi_sq(&s, &FlowParams::ricci()).unwrap();
    let grid = *s.g.grid();
    let err = (0..grid.len())
        .map(|p| (r.at(p) + 2.0 * grid.position(p)[0].cos().powi(2)).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-4, "{err}");
}

#[test]
fn hessian_rate_of_eigenfunction_is_minus_hessian() {
    let s = flat_with(64, |x| x[0].sin());
    let r = lemma_rhs_hessian(&s, &FlowParams::ricci()).unwrap();
    let grid = *s.g.grid();
    let mut err = 0.0f64;
    for p in 0..grid.len() {
        err = err.max((r.at(&[0, 0], p) - grid.position(p)[0].sin()).abs());
        err = err.max(r.at(&[0, 1], p).abs()).max(r.at(&[1, 1], p).abs());
    }
    assert!(err < 1e-5, "{err}");
}

/// `∂_t(g^ab T_ab) = g^ab ∂_t T_ab − ∂_t g_ab T^ab` on a bump state.
fn trace_defect(n: usize, p: &FlowParams, which: &str) -> f64 {
    let s = bump2(n).unwrap();
    let b = CurvatureBundle::new(&s.g).unwrap();
    let gi = &b.conn.ginv;
    let dg = rhs_direct(&s, p).unwrap().dg;
    let grad = gflow_core::geometry::gradient(&s.phi).unwrap();
    let (rate, target) = match which {
        "ricci" => (lemma_rhs_ricci(&s, p).unwrap(), lemma_rhs_scalar(&s, p).unwrap()),
        "dphi" => (lemma_rhs_dphi_dphi(&s, p).unwrap(), lemma_rhs_gradphi_sq(&s, p).unwrap()),
        _ => unreachable!(),
    };
    let tensor = |a: usize, c: usize, q: usize| match which {
        "ricci" => b.ric.at(a, c, q),
        _ => grad.at(&[a], q) * grad.at(&[c], q),
    };
    let grid = *s.g.grid();
    let mut err = 0.0f64;
    for q in 0..grid.len() {
        let mut v = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                v += gi.at(i, j, q) * rate.at(&[i, j], q);
                for a in 0..2 {
                    for c in 0..2 {
                        v -= gi.at(i, a, q) * gi.at(j, c, q) * dg.at(i, j, q) * tensor(a, c, q);
                    }
                }
            }
        }
        err = err.max((v - target.at(q)).abs());
    }
    err / max_scalar(&target)
}

#[test]
fn ricci_rate_traces_to_scalar_rate() {
    let p = FlowParams::new(1.0, 1.0, 1.0, 1.0);
    let errs = [trace_defect(32, &p, "ricci"), trace_defect(64, &p, "ricci")];
    assert!(errs[1] < 1e-4 && convergence_order(&errs) > 1.8, "{errs:?}");
}

#[test]
fn dphi_dphi_rate_traces_to_gradient_rate() {
    let p = FlowParams::new(1.0, 1.0, 1.0, 1.0);
    let errs = [trace_defect(32, &p, "dphi"), trace_defect(64, &p, "dphi")];
    assert!(errs[1] < 1e-3 && convergence_order(&errs) > 1.8, "{errs:?}");
}

#[test]
fn riemann_rate_in_2d_traces_twice_to_scalar_rate() {
    // ∂_t R = g^il g^jk ∂_t R_ijkl − 2 ∂_t g_ab R^ab
    let p = FlowParams::new(1.0, 1.0, 1.0, 1.0);
    let errs: Vec<f64> = [32, 64]
        .into_iter()
        .map(|n| {
            let s = bump2(n).unwrap();
            let b = CurvatureBundle::new(&s.g).unwrap();
            let gi = &b.conn.ginv;
            let dg = rhs_direct(&s, &p).unwrap().dg;
            let rm = lemma_rhs_riemann(&s, &p).unwrap();
            let target = lemma_rhs_scalar(&s, &p).unwrap();
            let mut err = 0.0f64;
            for q in 0..s.g.grid().len() {
                let mut v = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        for k in 0..2 {
                            for l in 0..2 {
                                v += gi.at(i, l, q) * gi.at(j, k, q) * rm.at(&[i, j, k, l], q);
                                v -= 2.0 * dg.at(i, j, q) * gi.at(i, k, q) * gi.at(j, l, q) * b.ric.at(k, l, q);
                            }
                        }
                    }
                }
                err = err.max((v - target.at(q)).abs());
            }
            err / max_scalar(&target)
        })
        .collect();
    assert!(errs[1] < 1e-4 && convergence_order(&errs) > 1.8, "{errs:?}");
}

#[test]
fn every_lemma_matches_time_differences_in_2d() {
    for p in [FlowParams::ricci(), FlowParams::new(4.0, 0.0, 0.0, 0.0), FlowParams::new(1.0, 1.0, 1.0, 1.0)] {
        for lemma in LemmaId::ALL {
            let r = check_lemma(&bump2, 32, 2, &p, lemma, 1.8).unwrap();
            assert!(r.pass, "{} {:?}: {:?}", lemma.name(), p.as_array(), r);
            assert!(r.levels[1].relative < 1e-3);
        }
    }
}

#[test]
fn riemann_matches_time_differences_in_3d() {
    let r = check_lemma(&bump3, 16, 2, &FlowParams::new(1.0, 1.0, 1.0, 1.0), LemmaId::Riemann, 1.5).unwrap();
    assert!(r.pass, "{r:?}");
    assert_eq!(r.dim, 3);
    assert_eq!(r.levels.iter().map(|l| l.n).collect::<Vec<_>>(), [16, 32]);
}

#[test]
fn harness_resolves_the_coupling_terms() {
    // the α₁ terms of the scalar rate are far above the residual floor
    let p = FlowParams::new(4.0, 0.0, 0.0, 0.0);
    let s = bump2(64).unwrap();
    let good = lemma_residual(&s, &p, LemmaId::Scalar, balanced_dt(s.g.grid())).unwrap();
    let right = lemma_rhs_scalar(&s, &p).unwrap();
    let wrong = lemma_rhs_scalar(&s, &FlowParams::ricci()).unwrap();
    let gap = max_scalar(&wrong.lin_comb(1.0, &right, -1.0)) / max_scalar(&right);
    assert!(good.relative < 1e-4 && gap > 100.0 * good.relative, "{} {gap}", good.relative);
}

fn cigar(n: usize) -> (MetricField, ScalarField) {
    let grid = GridSpec::new(2, n, 4.0, Topology::InteriorPatch).unwrap();
    (presets::cigar_metric(grid).unwrap(), presets::cigar_potential(grid))
}

#[test]
fn cigar_is_a_steady_soliton() {
    let res: Vec<(f64, f64)> = [129, 257]
        .into_iter()
        .map(|n| {
            let (g, f) = cigar(n);
            let ric = CurvatureBundle::new(&g).unwrap().ric.max_abs();
            (soliton_residual(&g, &f).unwrap().max_abs(), ric)
        })
        .collect();
    assert!(res[0].0 <= 1e-2 * res[0].1, "{res:?}");
    assert!(convergence_order(&[res[0].0, res[1].0]) >= 1.8, "{res:?}");
}

#[test]
fn cigar_scalar_curvature_matches_closed_form() {
    let (g, _) = cigar(129);
    let b = CurvatureBundle::new(&g).unwrap();
    let grid = *g.grid();
    let err = (0..grid.len())
        .filter(|&p| grid.is_interior(p, b.scal.margin()))
        .map(|p| (b.scal.at(p) - presets::cigar_scalar_curvature(grid.position(p))).abs())
        .fold(0.0, f64::max);
    assert!(err < 2e-2, "{err}");
}

#[test]
fn cigar_trace_identity_holds_with_reversed_coupling() {
    // Ric = −∇²f, so −Ric + α∇²f vanishes at α = −1
    let errs: Vec<f64> = [65, 129]
        .into_iter()
        .map(|n| {
            let (g, f) = cigar(n);
            let r = prop21_residuals(&g, &f, -1.0, 0.0).unwrap();
            assert!(r.r1.max_abs() < 0.05);
            let scal = CurvatureBundle::new(&g).unwrap().scal;
            max_scalar(&r.trace1) / max_scalar(&scal)
        })
        .collect();
    assert!(errs[1] < 1e-2 && convergence_order(&errs) >= 1.8, "{errs:?}");
    let (g, f) = cigar(65);
    assert!(max_scalar(&prop21_residuals(&g, &f, 1.0, 0.0).unwrap().trace1) > 1.0);
}

#[test]
fn flat_pair_has_zero_residuals() {
    let grid = torus(2, 16);
    let r = prop21_residuals(&MetricField::flat(grid), &ScalarField::zeros(grid), 0.3, -2.0).unwrap();
    assert_eq!(r.r1.max_abs(), 0.0);
    for f in [&r.r2, &r.trace1, &r.trace2] {
        assert_eq!(max_scalar(f), 0.0);
    }
}

#[test]
fn lemma_names_round_trip() {
    for l in LemmaId::ALL {
        assert_eq!(LemmaId::parse(l.name()), Some(l));
        assert_eq!(serde_json::to_string(&l).unwrap(), format!("\"{}\"", l.name()));
    }
    assert_eq!(LemmaId::parse("bogus"), None);
}

#[test]
fn order_estimates() {
    assert!((convergence_order(&[1.0, 0.25, 0.0625]) - 2.0).abs() < 1e-12);
    assert_eq!(convergence_order(&[1.0, 0.5, 0.5]), 0.0);
    assert!(convergence_order(&[1.0]).is_nan());
    assert_eq!(convergence_order(&[1.0, 0.0]), f64::INFINITY);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn flat_zero_rates_for_any_params(a1 in -5.0..5.0f64, a2 in -5.0..5.0f64, b1 in -5.0..5.0f64, b2 in -5.0..5.0f64) {
        let grid = torus(2, 12);
        let s = FlowState::new(MetricField::flat(grid), ScalarField::zeros(grid));
        prop_assert!(all_rhs_max(&s, &FlowParams::new(a1, a2, b1, b2)) <= 1e-12);
    }

    #[test]
    fn rates_are_linear_in_beta2_for_gradient(b2 in -3.0..3.0f64) {
        // only the 2β₂|∇φ|² term depends on β₂
        let s = bump2(16).unwrap();
        let base = lemma_rhs_gradphi_sq(&s, &FlowParams::ricci()).unwrap();
        let with = lemma_rhs_gradphi_sq(&s, &FlowParams::new(0.0, 0.0, 0.0, b2)).unwrap();
        let b = CurvatureBundle::new(&s.g).unwrap();
        let q = gflow_core::geometry::covector_norm_sq(&gflow_core::geometry::gradient(&s.phi).unwrap(), &b.conn.ginv);
        let expect = base.lin_comb(1.0, &q, 2.0 * b2);
        prop_assert!(max_scalar(&with.lin_comb(1.0, &expect, -1.0)) <= 1e-10 * (1.0 + max_scalar(&expect)));
    }
}
