use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;

use clifford_core::{build_clifford, clifford_defect};
use domain_grid::{make_domain, sample_phi0, BaseSpinorProfile, Boundary, DomainSpec, GridDomain, Metric, SingularSet};
use experiments::diagnostics::{scaling_summary, ScalingSummary};
use experiments::green::ball_green;
use experiments::{
    dyadic_annuli, harnack_ratio, run_green_comparison, run_linear_decay, run_nonlinear_decay, run_scale_collapse,
    CollapseOptions, DecayMode, DecayOptions, DecayReport, GreenComparison, GreenOptions, NonlinearOptions,
    NonlinearReport, Problem,
};
use linalg_solvers::{CgOptions, EigenOptions};
use op_assembly::mtx::write_matrix_market;
use op_assembly::{assemble_A, assemble_D, assemble_Deps};
use rayon::prelude::*;
use serde::Serialize;
use sw_algebra::suite::run_identity_suite;
use sw_algebra::SWCaseData;

use crate::config::{DomainKind, ModeKind, ProfileKind, SingularKind};
use crate::output::{out_path, write_csv, write_json, CsvRow};
use crate::{CliError, Command, ExperimentConfig, RunSummary};

pub fn run(cmd: &Command, cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    match cmd {
        Command::VerifyAlgebra { corrupt } => verify_algebra(cfg, *corrupt),
        Command::Decay => decay(cfg),
        Command::NonlinearDecay => nonlinear(cfg),
        Command::ScaleCollapse => collapse(cfg),
        Command::Green => green(cfg),
        Command::Harnack => harnack(cfg),
        Command::ExportMatrix => export_matrix(cfg),
    }
}

pub fn domain_spec(cfg: &ExperimentConfig) -> Result<DomainSpec, CliError> {
    let d = &cfg.domain;
    match d.kind {
        DomainKind::Ball => {
            let metric = if d.kappa == 0.0 { Metric::Flat } else { Metric::Radial { kappa: d.kappa } };
            let cells = *d.cells.first().ok_or_else(|| CliError::Other("[domain] cells is empty".into()))?;
            Ok(DomainSpec::ball(cells, d.radius, metric))
        }
        DomainKind::Torus => {
            let singular = match d.singular {
                SingularKind::Tube => SingularSet::Tube { axis: d.axis },
                SingularKind::Plane => SingularSet::Plane { axis: d.axis },
                SingularKind::Point => SingularSet::Point,
                SingularKind::None => SingularSet::None,
            };
            Ok(DomainSpec {
                dim: d.cells.len(),
                cells: d.cells.clone(),
                lengths: d.lengths.clone(),
                boundary: Boundary::Periodic,
                metric: Metric::Flat,
                singular,
            })
        }
    }
}

pub fn build_domain(cfg: &ExperimentConfig) -> Result<GridDomain, CliError> {
    Ok(make_domain(&domain_spec(cfg)?)?)
}

pub fn profile(cfg: &ExperimentConfig) -> BaseSpinorProfile {
    let p = &cfg.profile;
    match p.kind {
        ProfileKind::ConstantGap => BaseSpinorProfile::ConstantGap { lambda0: p.lambda0 },
        ProfileKind::SqrtDist => BaseSpinorProfile::SqrtDist { c2: p.c2 },
        ProfileKind::SmoothBump => BaseSpinorProfile::SmoothBump { amplitude: p.amplitude },
    }
}

fn eigen_options(cfg: &ExperimentConfig) -> EigenOptions {
    let s = &cfg.solver;
    EigenOptions {
        tol: s.eig_tol,
        max_outer: s.eig_max_outer,
        inner: CgOptions { tol: s.eig_inner_tol, maxit: s.eig_inner_maxit, check_symmetry: false },
        seed: cfg.run.seed,
        accept_unconverged: true,
        ..EigenOptions::default()
    }
}

pub fn decay_options(cfg: &ExperimentConfig, eps: f64, mode: DecayMode) -> DecayOptions {
    let mut o = DecayOptions::new(eps, mode);
    o.cg = CgOptions { tol: cfg.solver.cg_tol, maxit: cfg.solver.cg_maxit, check_symmetry: false };
    o.eigen = eigen_options(cfg);
    o.r_k = cfg.sweep.r_k;
    o
}

fn mode(cfg: &ExperimentConfig) -> DecayMode {
    match cfg.sweep.mode {
        ModeKind::Kernel => DecayMode::Kernel,
        ModeKind::Inhomogeneous => DecayMode::Inhomogeneous,
    }
}

fn summary(files: Vec<std::path::PathBuf>, failures: Vec<String>) -> RunSummary {
    RunSummary { passed: failures.is_empty(), failures, files }
}

#[derive(Debug, Serialize)]
struct CaseChecks {
    case: String,
    draws: usize,
    corrupted: bool,
    checks: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize)]
struct AlgebraReport {
    tolerance: f64,
    total_checks: usize,
    /// Largest defect per identity over all cases.
    max_defect: BTreeMap<String, f64>,
    cases: Vec<CaseChecks>,
}

fn verify_algebra(cfg: &ExperimentConfig, corrupt: bool) -> Result<RunSummary, CliError> {
    let cases: Vec<CaseChecks> = cfg
        .algebra_cases()
        .par_iter()
        .map(|&case| {
            let clean = SWCaseData::new(case);
            let data = if corrupt { clean.corrupted() } else { clean };
            let suite = run_identity_suite(&data, cfg.algebra.draws, cfg.run.seed);
            let mut checks: BTreeMap<String, f64> =
                suite.checks.iter().map(|c| (c.name.to_string(), c.max_defect)).collect();
            let cl = build_clifford(data.base_dim).map(|m| clifford_defect(&m)).unwrap_or(f64::INFINITY);
            checks.insert("clifford_relations".into(), cl);
            CaseChecks { case: case.to_string(), draws: cfg.algebra.draws, corrupted: corrupt, checks }
        })
        .collect();
    let tol = cfg.algebra.tolerance;
    let mut max_defect: BTreeMap<String, f64> = BTreeMap::new();
    let mut failures = Vec::new();
    for c in &cases {
        for (name, d) in &c.checks {
            let e = max_defect.entry(name.clone()).or_insert(0.0);
            *e = e.max(*d);
            if !(*d <= tol) {
                failures.push(format!("case {}: {name} defect {d:e} above {tol:e}", c.case));
            }
        }
    }
    let report = AlgebraReport {
        tolerance: tol,
        total_checks: cases.iter().map(|c| c.checks.len()).sum(),
        max_defect,
        cases,
    };
    let json = write_json(cfg, &report, &failures)?;
    Ok(summary(vec![json], failures))
}

fn csv_rows(reports: &[&DecayReport]) -> Vec<CsvRow> {
    reports
        .iter()
        .flat_map(|r| {
            r.shell_radii.iter().zip(&r.shell_sup).map(|(&rad, &sup)| CsvRow {
                eps: r.eps,
                r: rad,
                shell_sup: sup,
                fit_slope: Some(r.fit.slope),
                fit_r2: Some(r.fit.r2),
            })
        })
        .collect()
}

fn deep_decay_failures(r: &DecayReport, cfg: &ExperimentConfig, failures: &mut Vec<String>) {
    let r_max = r.shell_radii.iter().cloned().fold(0.0, f64::max);
    if r.lambda_k / r.eps * r_max >= 5.0 && !(r.fit.slope < 0.0) {
        failures.push(format!("eps {}: slope {} is not negative in the deep-decay regime", r.eps, r.fit.slope));
    }
    if let Some(l) = r.lambda_min {
        let bound = cfg.thresholds.lambda_c / r.eps;
        if !(l < bound) {
            failures.push(format!("eps {}: lambda_min {l} not below {bound}", r.eps));
        }
    }
}

fn doubled_profile(cfg: &ExperimentConfig) -> Result<BaseSpinorProfile, CliError> {
    match profile(cfg) {
        BaseSpinorProfile::ConstantGap { lambda0 } => Ok(BaseSpinorProfile::ConstantGap { lambda0: 2.0 * lambda0 }),
        BaseSpinorProfile::SqrtDist { c2 } => Ok(BaseSpinorProfile::SqrtDist { c2: 2.0 * c2 }),
        BaseSpinorProfile::SmoothBump { .. } => {
            Err(CliError::Other("double_gap needs a constant_gap or sqrt_dist profile".into()))
        }
    }
}

#[derive(Debug, Serialize)]
struct DecaySweep {
    reports: Vec<DecayReport>,
    /// Slopes against 1/ε and against Λ_K/ε.
    summary: Option<ScalingSummary>,
    doubled: Vec<DecayReport>,
    /// slope(2Λ) / slope(Λ) per ε.
    doubling_ratios: Vec<f64>,
}

fn sweep(p: &Problem, cfg: &ExperimentConfig) -> Result<Vec<DecayReport>, CliError> {
    let m = mode(cfg);
    let out: Vec<_> = cfg.sweep.eps.par_iter().map(|&e| run_linear_decay(p, &decay_options(cfg, e, m))).collect();
    Ok(out.into_iter().collect::<Result<Vec<_>, _>>()?)
}

fn decay(cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    let dom = build_domain(cfg)?;
    let data = SWCaseData::new(cfg.case_id());
    let p = Problem::new(dom.clone(), data.clone(), profile(cfg))?;
    let reports = sweep(&p, cfg)?;
    let mut failures = Vec::new();
    for r in &reports {
        deep_decay_failures(r, cfg, &mut failures);
    }
    let scaling = (reports.len() >= 2).then(|| scaling_summary(&reports));
    if let Some(s) = &scaling {
        if reports.len() >= 3 && !(s.regression.r2 > cfg.thresholds.r2_min) {
            failures.push(format!("slope against 1/eps: R^2 {} not above {}", s.regression.r2, cfg.thresholds.r2_min));
        }
        if !(s.band <= cfg.thresholds.band) {
            failures.push(format!("scaled slopes spread {} beyond band {}", s.band, cfg.thresholds.band));
        }
    }
    let (mut doubled, mut doubling_ratios) = (Vec::new(), Vec::new());
    if cfg.sweep.double_gap {
        let p2 = Problem::new(dom, data, doubled_profile(cfg)?)?;
        doubled = sweep(&p2, cfg)?;
        for (a, b) in reports.iter().zip(&doubled) {
            let ratio = b.fit.slope / a.fit.slope;
            if !((ratio / 2.0 - 1.0).abs() <= cfg.thresholds.doubling_tol) {
                failures.push(format!("eps {}: doubling the gap scaled the slope by {ratio}", a.eps));
            }
            doubling_ratios.push(ratio);
        }
    }
    let rows = csv_rows(&reports.iter().collect::<Vec<_>>());
    let report = DecaySweep { reports, summary: scaling, doubled, doubling_ratios };
    let json = write_json(cfg, &report, &failures)?;
    let csv = write_csv(cfg, &rows)?;
    Ok(summary(vec![json, csv], failures))
}

#[derive(Debug, Serialize)]
struct NonlinearRun {
    eps: f64,
    linear: DecayReport,
    nonlinear: NonlinearReport,
    slope_ratio: f64,
    /// The nonlinear decay report equals the linear one bit for bit.
    identical_to_linear: bool,
}

fn nonlinear(cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    let p = Problem::new(build_domain(cfg)?, SWCaseData::new(cfg.case_id()), profile(cfg))?;
    let runs: Vec<Result<NonlinearRun, CliError>> = cfg
        .sweep
        .eps
        .par_iter()
        .map(|&eps| {
            let base = decay_options(cfg, eps, DecayMode::Inhomogeneous);
            let linear = run_linear_decay(&p, &base)?;
            let opts = NonlinearOptions {
                decay: base,
                coupling: cfg.sweep.coupling,
                picard_tol: cfg.solver.picard_tol,
                max_picard: cfg.solver.max_picard,
                threshold: cfg.thresholds.condition,
            };
            let nonlinear = run_nonlinear_decay(&p, &opts)?;
            Ok(NonlinearRun {
                eps,
                slope_ratio: nonlinear.decay.fit.slope / linear.fit.slope,
                identical_to_linear: nonlinear.decay == linear,
                linear,
                nonlinear,
            })
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut failures = Vec::new();
    for r in &runs {
        deep_decay_failures(&r.nonlinear.decay, cfg, &mut failures);
        if !r.nonlinear.converged || !r.nonlinear.condition_ok {
            failures.push(format!(
                "eps {}: {}",
                r.eps,
                r.nonlinear.diagnosis.clone().unwrap_or_else(|| "Picard iteration failed".into())
            ));
        }
        if !((r.slope_ratio - 1.0).abs() <= cfg.thresholds.slope_tol) {
            failures.push(format!("eps {}: nonlinear/linear slope ratio {}", r.eps, r.slope_ratio));
        }
        if cfg.sweep.coupling == 0.0 && !r.identical_to_linear {
            failures.push(format!("eps {}: zero coupling differs from the linear report", r.eps));
        }
    }
    let rows = csv_rows(&runs.iter().map(|r| &r.nonlinear.decay).collect::<Vec<_>>());
    let json = write_json(cfg, &runs, &failures)?;
    let csv = write_csv(cfg, &rows)?;
    Ok(summary(vec![json, csv], failures))
}

fn collapse(cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    let dom = build_domain(cfg)?;
    let opts = CollapseOptions {
        c2: cfg.profile.c2,
        c1: cfg.collapse.c1,
        s_range: [cfg.collapse.s_min, cfg.collapse.s_max],
        samples: cfg.collapse.samples,
        eigen: eigen_options(cfg),
    };
    let rep = run_scale_collapse(&dom, &SWCaseData::new(cfg.case_id()), &cfg.sweep.eps, &opts)?;
    let t = &cfg.thresholds;
    let mut failures = Vec::new();
    if !(rep.distance <= t.collapse_max) {
        failures.push(format!("profiles against dist^(3/2)/eps differ by {} > {}", rep.distance, t.collapse_max));
    }
    if !(rep.control_distance > t.control_min) {
        failures.push(format!("control against dist/eps collapses ({} <= {})", rep.control_distance, t.control_min));
    }
    for (e, l) in rep.eps.iter().zip(&rep.lambda_min) {
        if !(*l < t.lambda_c / e) {
            failures.push(format!("eps {e}: lambda_min {l} not below {}", t.lambda_c / e));
        }
    }
    let rows: Vec<CsvRow> = rep
        .eps
        .iter()
        .zip(rep.shell_dist.iter().zip(&rep.shell_sup))
        .flat_map(|(&eps, (d, s))| {
            d.iter().zip(s).map(move |(&r, &sup)| CsvRow { eps, r, shell_sup: sup, fit_slope: None, fit_r2: None })
        })
        .collect();
    let json = write_json(cfg, &rep, &failures)?;
    let csv = write_csv(cfg, &rows)?;
    Ok(summary(vec![json, csv], failures))
}

fn green_options(cfg: &ExperimentConfig) -> GreenOptions {
    GreenOptions { cells: cfg.green.cells, ..GreenOptions::default() }
}

fn green(cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    let g = &cfg.green;
    let jobs: Vec<(f64, f64)> = g.kappas.iter().flat_map(|&k| g.masses.iter().map(move |&m| (k, m))).collect();
    let opts = green_options(cfg);
    let results: Vec<Result<GreenComparison, CliError>> = jobs
        .par_iter()
        .map(|&(kappa, m)| Ok(run_green_comparison(g.radius, m, kappa, g.dim, &opts)?))
        .collect();
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let t = &cfg.thresholds;
    let mut failures = Vec::new();
    for r in &results {
        let tag = format!("kappa {} m {}", r.kappa, r.m);
        if r.regime_ok {
            let worst = r.max_ratio_grid.map_or(r.max_ratio_radial, |x| x.max(r.max_ratio_radial));
            if !(worst <= t.ratio_margin) {
                failures.push(format!("{tag}: G / G0(m/2) reaches {worst} > {}", t.ratio_margin));
            }
        } else {
            eprintln!("warning: {tag}: absorption margin {} > 1, bound not asserted", r.absorption_margin);
        }
        if let Some(dev) = r.grid_vs_radial {
            if !(dev <= t.grid_radial_tol) {
                failures.push(format!("{tag}: grid and radial solutions differ by {dev}"));
            }
        }
    }
    let json = write_json(cfg, &results, &failures)?;
    Ok(summary(vec![json], failures))
}

#[derive(Debug, Serialize)]
struct HarnackMass {
    m: f64,
    annuli: Vec<f64>,
    sectors: usize,
    empty_sectors: usize,
    max_ratio: f64,
}

#[derive(Debug, Serialize)]
struct HarnackSweep {
    masses: Vec<HarnackMass>,
    /// max over m of the max ratio divided by the min over m.
    spread: f64,
}

fn harnack(cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    let g = &cfg.green;
    let opts = green_options(cfg);
    let h = 2.0 * g.radius / g.cells as f64;
    let runs: Vec<Result<HarnackMass, CliError>> = g
        .harnack_masses
        .par_iter()
        .map(|&m| {
            let (dom, field) = ball_green(g.cells, g.radius, m, &opts.cg)?;
            let annuli = dyadic_annuli(g.annulus_start * g.radius, m, 3.0 * h);
            let rep = harnack_ratio(&field, &dom, dom.center_node(), &annuli, g.sectors);
            if rep.empty_sectors > 0 {
                eprintln!("warning: m {m}: skipped {} empty sectors", rep.empty_sectors);
            }
            Ok(HarnackMass {
                m,
                annuli,
                sectors: rep.sectors.len(),
                empty_sectors: rep.empty_sectors,
                max_ratio: rep.max_ratio,
            })
        })
        .collect();
    let masses = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    let hi = masses.iter().map(|r| r.max_ratio).fold(0.0, f64::max);
    let lo = masses.iter().map(|r| r.max_ratio).fold(f64::INFINITY, f64::min);
    let spread = if masses.is_empty() { 1.0 } else { hi / lo };
    let mut failures = Vec::new();
    if !(spread <= cfg.thresholds.harnack_spread) {
        failures.push(format!("Harnack ratios vary by {spread} across masses"));
    }
    let json = write_json(cfg, &HarnackSweep { masses, spread }, &failures)?;
    Ok(summary(vec![json], failures))
}

#[derive(Debug, Serialize)]
struct ExportReport {
    file: String,
    eps: Option<f64>,
    h: f64,
    nrows: usize,
    ncols: usize,
    nnz: usize,
}

fn export_matrix(cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    let dom = build_domain(cfg)?;
    let data = SWCaseData::new(cfg.case_id());
    let d = assemble_D(&dom, &data.symbol_model())?;
    let op = match cfg.export.eps {
        None => d,
        Some(eps) => {
            let phi = sample_phi0(&dom, &profile(cfg), &data)?;
            let a = assemble_A(&dom, &data, &phi)?;
            assemble_Deps(&d, &a, eps)?
        }
    };
    let p = &cfg.profile;
    let profile_desc = match p.kind {
        ProfileKind::ConstantGap => format!("constant_gap lambda0={}", p.lambda0),
        ProfileKind::SqrtDist => format!("sqrt_dist c2={}", p.c2),
        ProfileKind::SmoothBump => format!("smooth_bump amplitude={}", p.amplitude),
    };
    let comments = vec![
        match cfg.export.eps {
            Some(e) => format!("eps = {e}"),
            None => "eps = none (D only)".to_string(),
        },
        format!("h = {}", dom.h[0]),
        format!("case = {}", data.case_id),
        format!("profile = {profile_desc}"),
        format!("cells = {:?}", dom.n),
    ];
    let path = out_path(cfg, &cfg.export.file);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    write_matrix_market(&op, BufWriter::new(file), &comments)?;
    let report = ExportReport {
        file: path.to_string_lossy().into_owned(),
        eps: cfg.export.eps,
        h: dom.h[0],
        nrows: op.nrows,
        ncols: op.ncols,
        nnz: op.nnz(),
    };
    let json = write_json(cfg, &report, &[])?;
    Ok(summary(vec![path, json], Vec::new()))
}
