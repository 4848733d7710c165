use domain_grid::{make_domain, BaseSpinorProfile, DomainSpec, GridDomain, GridField, SingularSet};
use experiments::collapse::profile_distance;
use experiments::diagnostics::{differential_inequality, kato_excess, scaling_summary, weitzenbock_dichotomy};
use experiments::fit::shell_sups_at;
use experiments::green::ball_green;
use experiments::oracle::reduced_model_1d;
use experiments::*;
use linalg_solvers::kernel_approx;
use nalgebra::DVector;
use proptest::prelude::*;
use sw_algebra::{moment_map, CaseId, SWCaseData};

fn tube(n: usize, l: f64) -> GridDomain {
    make_domain(&DomainSpec::torus([n, n, 8], [l, l, l * 8.0 / n as f64], SingularSet::Tube { axis: 2 })).unwrap()
}

fn case1() -> SWCaseData {
    SWCaseData::new(CaseId::I)
}

fn gap(lambda0: f64) -> BaseSpinorProfile {
    BaseSpinorProfile::ConstantGap { lambda0 }
}

fn linear(p: &Problem, eps: f64) -> DecayReport {
    run_linear_decay(p, &DecayOptions::new(eps, DecayMode::Inhomogeneous)).unwrap()
}

#[test]
fn vanishing_potential_gives_flat_kernel_profile() {
    let l = 4.0;
    let p = Problem::new(tube(32, l), case1(), gap(0.0)).unwrap();
    let mut opts = DecayOptions::new(0.1, DecayMode::Kernel);
    opts.r_k = Some(6.0 * p.h());
    let rep = run_linear_decay(&p, &opts).unwrap();
    assert!(rep.fit.slope.abs() <= 0.1 / l, "{}", rep.fit.slope);
    assert!(rep.lambda_min.unwrap() < 1e-8);
}

#[test]
fn reduced_model_slope_by_shooting_and_on_the_grid() {
    let shoot = reduced_model_1d(|_| 1.0, 0.1, 2.0, 4000);
    assert!((shoot.fit.slope / -10.0 - 1.0).abs() <= 0.1, "{}", shoot.fit.slope);

    let dom = make_domain(&DomainSpec::torus([96, 8, 8], [4.0, 4.0 / 12.0, 4.0 / 12.0], SingularSet::Plane { axis: 0 }))
        .unwrap();
    let p = Problem::new(dom, case1(), gap(1.0)).unwrap();
    let rep = linear(&p, 0.1);
    assert!((rep.lambda_k - 1.0).abs() < 1e-12);
    assert!((rep.fit.slope / -10.0 - 1.0).abs() <= 0.1, "{}", rep.fit.slope);
    assert!(rep.fit.r2 > 0.99);
}

#[test]
fn tube_slopes_scale_with_gap_over_eps() {
    let dom = tube(48, 2.0);
    let eps = [0.2, 0.1, 0.05];
    let p1 = Problem::new(dom.clone(), case1(), gap(1.0)).unwrap();
    let p2 = Problem::new(dom, case1(), gap(2.0)).unwrap();
    let r1: Vec<DecayReport> = eps.iter().map(|&e| linear(&p1, e)).collect();
    let r2: Vec<DecayReport> = eps.iter().map(|&e| linear(&p2, e)).collect();
    for r in r1.iter().chain(&r2) {
        assert!(r.shell_sup.iter().all(|s| *s >= 0.0));
        let r_max = r.shell_radii.last().copied().unwrap();
        if r.lambda_k / r.eps * r_max >= 5.0 {
            assert!(r.fit.slope < 0.0);
        }
    }
    let s = scaling_summary(&r1);
    assert!(s.regression.r2 > 0.99, "{:?}", s.regression);
    assert!(s.band <= 0.25, "{}", s.band);
    for (a, b) in r1.iter().zip(&r2) {
        let ratio = b.fit.slope / a.fit.slope;
        assert!((ratio / 2.0 - 1.0).abs() <= 0.2, "eps {}: ratio {ratio}", a.eps);
    }
}

#[test]
fn zero_coupling_reproduces_linear_report() {
    let p = Problem::new(tube(32, 2.0), case1(), gap(1.0)).unwrap();
    let lin = linear(&p, 0.1);
    let non = run_nonlinear_decay(&p, &NonlinearOptions::new(0.1, 0.0)).unwrap();
    assert_eq!(non.decay, lin);
    assert_eq!(non.decay.fit.slope.to_bits(), lin.fit.slope.to_bits());
    assert!(non.converged && non.condition_ok);
}

#[test]
fn small_coupling_keeps_slope_and_contracts() {
    let p = Problem::new(tube(48, 2.0), case1(), gap(1.0)).unwrap();
    let lin = linear(&p, 0.1);
    let non = run_nonlinear_decay(&p, &NonlinearOptions::new(0.1, 0.01)).unwrap();
    assert!(non.converged, "{:?}", non.diagnosis);
    assert!(non.condition_ok, "{:?}", non.steps);
    assert!((non.decay.fit.slope / lin.fit.slope - 1.0).abs() <= 0.15);
    for w in non.steps.windows(2) {
        if w[0].update > 1e-12 {
            assert!(w[1].update <= 0.5 * w[0].update, "{:?}", non.steps);
        }
    }
}

#[test]
fn strong_coupling_flags_the_condition() {
    let p = Problem::new(tube(32, 2.0), case1(), gap(1.0)).unwrap();
    let non = run_nonlinear_decay(&p, &NonlinearOptions::new(0.1, 0.1)).unwrap();
    assert!(!non.condition_ok);
    assert!(non.diagnosis.unwrap().contains("condition"));
}

#[test]
fn nonlinear_threshold_must_stay_below_one_eighth() {
    let p = Problem::new(tube(16, 2.0), case1(), gap(1.0)).unwrap();
    let mut opts = NonlinearOptions::new(0.1, 0.01);
    opts.threshold = 0.125;
    assert!(run_nonlinear_decay(&p, &opts).is_err());
}

#[test]
fn profiles_collapse_in_the_three_halves_variable() {
    let rep = run_scale_collapse(&tube(48, 3.0), &case1(), &[0.2, 0.1, 0.05], &CollapseOptions::default()).unwrap();
    assert!(rep.distance <= 0.1, "{}", rep.distance);
    assert!(rep.control_distance > 0.25, "{}", rep.control_distance);
    assert_eq!(rep.profiles.len(), 3);
    assert!(rep.profiles.iter().all(|p| p[0] == 0.0));
}

#[test]
fn identical_eps_runs_have_zero_distance() {
    let rep = run_scale_collapse(&tube(24, 3.0), &case1(), &[0.2, 0.2], &CollapseOptions::default()).unwrap();
    assert_eq!(rep.distance, 0.0);
}

#[test]
fn green_bound_and_cross_solver_agreement() {
    for kappa in [0.0, 0.1] {
        for m in [10.0, 20.0] {
            let g = run_green_comparison(1.0, m, kappa, 3, &GreenOptions::default()).unwrap();
            assert!(g.regime_ok, "{g:?}");
            assert_eq!(g.bound_holds(), Some(true), "{g:?}");
            assert!(g.grid_vs_radial.unwrap() <= 0.03, "{g:?}");
        }
    }
}

#[test]
fn green_regime_violation_is_flagged_not_asserted() {
    let g = run_green_comparison(1.0, 1.0, 5.0, 3, &GreenOptions { cells: 16, ..GreenOptions::default() }).unwrap();
    assert!(!g.regime_ok);
    assert_eq!(g.bound_holds(), None);
}

#[test]
fn green_four_dimensional_comparison_is_radial() {
    let g = run_green_comparison(1.0, 20.0, 0.1, 4, &GreenOptions::default()).unwrap();
    assert!(g.max_ratio_grid.is_none());
    assert_eq!(g.bound_holds(), Some(true), "{g:?}");
}

#[test]
fn harnack_ratio_is_uniform_in_mass() {
    let cells = 64;
    let h = 2.0 / cells as f64;
    let opts = GreenOptions::default();
    let ratios: Vec<f64> = [5.0, 10.0, 20.0]
        .iter()
        .map(|&m| {
            let (dom, g) = ball_green(cells, 1.0, m, &opts.cg).unwrap();
            let radii = dyadic_annuli(0.5, m, 3.0 * h);
            let rep = harnack_ratio(&g, &dom, dom.center_node(), &radii, 4);
            assert!(rep.sectors.iter().all(|s| s.ratio >= 1.0 && s.ratio.is_finite()));
            rep.max_ratio
        })
        .collect();
    let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread <= 2.0, "{ratios:?}");
}

/// Case I spinor with vanishing moment map, scaled to unit L² norm.
fn null_spinor(dom: &GridDomain) -> DVector<f64> {
    let data = case1();
    let mut v = DVector::zeros(data.spinor_dim);
    v[0] = 1.0;
    v[6] = 1.0;
    assert!(moment_map(&data, &v).unwrap().iter().all(|x| x.abs() < 1e-14));
    let vol = dom.cell_volume() * dom.node_count() as f64;
    v / (2.0 * vol).sqrt()
}

fn periodic(n: usize) -> GridDomain {
    make_domain(&DomainSpec::torus([n; 3], [1.0; 3], SingularSet::None)).unwrap()
}

#[test]
fn covariant_constant_spinor_has_only_normalization_residual() {
    let dom = periodic(8);
    let v = null_spinor(&dom) * 1.5;
    let phi = GridField { fiber: 8, values: (0..dom.node_count()).flat_map(|_| v.iter().cloned()).collect() };
    let a = GridField::zeros(dom.node_count(), 3);
    let r = sw_residual_case1(&dom, &phi, &a, 0.1).unwrap();
    assert!(r.dirac < 1e-14 && r.curvature < 1e-14);
    assert!((r.normalization - 0.5).abs() < 1e-12);
}

#[test]
fn curvature_residual_is_quadratic_in_the_spinor() {
    let dom = periodic(8);
    let v = DVector::from_fn(8, |i, _| 0.3 + 0.1 * i as f64);
    let field = |t: f64| GridField {
        fiber: 8,
        values: (0..dom.node_count()).flat_map(|_| (&v * t).iter().cloned().collect::<Vec<_>>()).collect(),
    };
    let a = GridField::zeros(dom.node_count(), 3);
    let r1 = sw_residual_case1(&dom, &field(1.0), &a, 0.1).unwrap().curvature;
    let r3 = sw_residual_case1(&dom, &field(3.0), &a, 0.1).unwrap().curvature;
    assert!(r1 > 0.0);
    assert!((r3 / r1 - 9.0).abs() < 1e-10);
}

/// Φ = exp(J k·x) φ̂ with μ(φ̂) = 0 and A = -k solves the equations exactly;
/// the grid residual is the centered-difference error.
fn plane_wave_residual(n: usize) -> SwResidual {
    let dom = periodic(n);
    let data = case1();
    let j = &data.frame[0];
    let v = null_spinor(&dom);
    let k = [2.0 * std::f64::consts::PI, -2.0 * std::f64::consts::PI, 0.0];
    let mut phi = GridField::zeros(dom.node_count(), 8);
    let mut a = GridField::zeros(dom.node_count(), 3);
    for i in 0..dom.node_count() {
        let x = dom.coord(i);
        let theta: f64 = x.iter().zip(&k).map(|(p, q)| p * q).sum();
        let val = &v * theta.cos() + j * &v * theta.sin();
        phi.at_mut(i).copy_from_slice(val.as_slice());
        a.at_mut(i).copy_from_slice(&[-k[0], -k[1], -k[2]]);
    }
    sw_residual_case1(&dom, &phi, &a, 0.1).unwrap()
}

#[test]
fn plane_wave_residual_is_second_order() {
    let r: Vec<SwResidual> = [8, 16, 32].iter().map(|&n| plane_wave_residual(n)).collect();
    for w in r.windows(2) {
        let ratio = w[0].dirac / w[1].dirac;
        assert!((3.5..=4.5).contains(&ratio), "{ratio}");
        assert!(w[1].curvature < 1e-13 && w[1].normalization < 1e-12);
    }
}

#[test]
fn residual_rejects_wrong_shapes() {
    let dom = periodic(8);
    let phi = GridField::zeros(dom.node_count(), 4);
    let a = GridField::zeros(dom.node_count(), 3);
    assert!(matches!(sw_residual_case1(&dom, &phi, &a, 0.1), Err(ExperimentError::DimensionMismatch(_))));
}

#[test]
fn differential_inequality_improves_under_refinement() {
    let eps = 0.2;
    let levels: Vec<(f64, f64)> = [16, 32]
        .iter()
        .map(|&n| {
            let p = Problem::new(tube(n, 3.0), case1(), BaseSpinorProfile::SqrtDist { c2: 1.0 }).unwrap();
            let base = DecayOptions::new(eps, DecayMode::Kernel).eigen;
            let pair = kernel_approx(&p.Deps(eps).unwrap(), Some(&p.proj_h), &p.kernel_options(&base)).unwrap();
            let (k, _, _) = p.compact_set(p.default_rk(eps));
            let vals = differential_inequality(&p, &pair.q, eps, 0.0, &k);
            assert!(kato_excess(&p, &pair.q) <= 1e-10);
            (vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max), pair.lambda)
        })
        .collect();
    assert!(levels[1].0 < levels[0].0, "{levels:?}");
    assert!(levels[1].0 <= 0.0);
}

#[test]
fn weitzenbock_cross_term_dichotomy() {
    for case in [CaseId::I, CaseId::II] {
        let l = weitzenbock_dichotomy(case, &[8, 16, 32], 2.0).unwrap();
        for w in l.windows(2) {
            let c = w[1].commuting / w[0].commuting;
            assert!((1.0 / 1.5..=1.5).contains(&c), "{case:?} {c}");
            assert!(w[1].violating / w[0].violating >= 1.8, "{case:?}");
        }
    }
    assert!(weitzenbock_dichotomy(CaseId::III, &[4], 2.0).is_err());
}

proptest! {
    #[test]
    fn fit_recovers_exact_lines(a in -5.0f64..5.0, b in -5.0f64..5.0, n in 3usize..30) {
        let x: Vec<f64> = (0..n).map(|i| i as f64 * 0.37).collect();
        let y: Vec<f64> = x.iter().map(|v| a + b * v).collect();
        let f = linear_fit(&x, &y);
        prop_assert!((f.slope - b).abs() < 1e-9 && (f.intercept - a).abs() < 1e-9);
        prop_assert!(f.r2 > 1.0 - 1e-9);
    }

    #[test]
    fn annuli_follow_the_recursion(r0 in 0.1f64..3.0, m in 0.5f64..40.0, floor in 0.001f64..0.05) {
        let r = dyadic_annuli(r0, m, floor);
        prop_assert_eq!(r[0], r0);
        prop_assert!(r.iter().all(|v| *v >= floor));
        for w in r.windows(2) {
            let width = w[0] - w[1];
            prop_assert!(width > 0.0 && width <= 1.0 / m + 1e-12);
            prop_assert!((width - (w[0] / 5.0).min(1.0 / m)).abs() < 1e-12);
        }
    }

    #[test]
    fn profile_distance_is_zero_for_copies_and_shift_invariant(c in -3.0f64..3.0, s in 0.5f64..4.0) {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.25).collect();
        let y: Vec<f64> = x.iter().map(|v| -s * v).collect();
        let shifted: Vec<f64> = y.iter().map(|v| v + c).collect();
        let grid = [1.0, 2.0, 3.0, 4.0];
        let (_, d) = profile_distance(&grid, &[(x.clone(), y), (x, shifted)]).unwrap();
        prop_assert!(d < 1e-12);
    }

    #[test]
    fn shell_sup_bounds_its_shell(vals in prop::collection::vec(0.0f64..10.0, 1..40)) {
        let dist: Vec<f64> = (0..vals.len()).map(|i| 0.05 + 0.13 * i as f64).collect();
        let w = 0.3;
        for (d, s) in shell_sups_at(&dist, &vals, w) {
            let k = (d / w).floor();
            for (di, vi) in dist.iter().zip(&vals) {
                if (di / w).floor() == k {
                    prop_assert!(*vi <= s);
                }
            }
        }
    }
}
