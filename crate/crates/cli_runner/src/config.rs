//! Experiment records: TOML with one level of sections.
//!
//! Every section and key is optional; missing values take the defaults
//! below. Unknown keys are rejected.

use serde::{Deserialize, Serialize};
use sw_algebra::CaseId;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    At { line: usize, msg: String },
    #[error("{0}")]
    General(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Torus,
    Ball,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularKind {
    Tube,
    Plane,
    Point,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    ConstantGap,
    SqrtDist,
    SmoothBump,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    Kernel,
    Inhomogeneous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub out: String,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { seed: 0, out: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainSection {
    pub kind: DomainKind,
    /// Cells per axis (torus); the first entry is used for balls.
    pub cells: Vec<usize>,
    pub lengths: Vec<f64>,
    pub singular: SingularKind,
    pub axis: usize,
    /// Ball radius.
    pub radius: f64,
    /// Ball metric (1 + κr²) g₀.
    pub kappa: f64,
}

impl Default for DomainSection {
    fn default() -> Self {
        Self {
            kind: DomainKind::Torus,
            cells: vec![48, 48, 8],
            lengths: vec![2.0, 2.0, 1.0 / 3.0],
            singular: SingularKind::Tube,
            axis: 2,
            radius: 1.0,
            kappa: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaseSection {
    pub id: String,
}

impl Default for CaseSection {
    fn default() -> Self {
        Self { id: "I".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSection {
    pub kind: ProfileKind,
    pub lambda0: f64,
    pub c2: f64,
    pub amplitude: f64,
}

impl Default for ProfileSection {
    fn default() -> Self {
        Self { kind: ProfileKind::ConstantGap, lambda0: 1.0, c2: 1.0, amplitude: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub eps: Vec<f64>,
    pub mode: ModeKind,
    /// Nonlinear coupling in front of Q₁.
    pub coupling: f64,
    /// Also run every ε with twice the gap.
    pub double_gap: bool,
    /// Overrides R_K = max(6h, 3ε/Λ_K).
    pub r_k: Option<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { eps: vec![0.2, 0.1, 0.05], mode: ModeKind::Inhomogeneous, coupling: 0.01, double_gap: false, r_k: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub cg_tol: f64,
    pub cg_maxit: usize,
    pub eig_tol: f64,
    pub eig_max_outer: usize,
    pub eig_inner_tol: f64,
    pub eig_inner_maxit: usize,
    pub picard_tol: f64,
    pub max_picard: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            cg_tol: 1e-10,
            cg_maxit: 20_000,
            eig_tol: 1e-6,
            eig_max_outer: 60,
            eig_inner_tol: 1e-10,
            eig_inner_maxit: 5_000,
            picard_tol: 1e-6,
            max_picard: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollapseSection {
    /// K_ε = {dist >= c1 ε^{2/3}}.
    pub c1: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub samples: usize,
}

impl Default for CollapseSection {
    fn default() -> Self {
        Self { c1: 1.0, s_min: 1.0, s_max: 4.0, samples: 61 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreenSection {
    pub radius: f64,
    pub masses: Vec<f64>,
    pub kappas: Vec<f64>,
    pub dim: usize,
    pub cells: usize,
    pub harnack_masses: Vec<f64>,
    /// Outer radius of the first annulus, as a fraction of the ball radius.
    pub annulus_start: f64,
    pub sectors: usize,
}

impl Default for GreenSection {
    fn default() -> Self {
        Self {
            radius: 1.0,
            masses: vec![10.0, 20.0],
            kappas: vec![0.0, 0.1],
            dim: 3,
            cells: 64,
            harnack_masses: vec![5.0, 10.0, 20.0],
            annulus_start: 0.5,
            sectors: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgebraSection {
    pub cases: Vec<String>,
    pub draws: usize,
    pub tolerance: f64,
}

impl Default for AlgebraSection {
    fn default() -> Self {
        Self { cases: ["I", "II", "III", "IV"].map(String::from).to_vec(), draws: 1000, tolerance: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportSection {
    /// Without ε only D is exported.
    pub eps: Option<f64>,
    pub file: String,
}

impl Default for ExportSection {
    fn default() -> Self {
        Self { eps: None, file: "operator.mtx".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Bound on ε‖Q₁‖/Λ_K along the Picard iterates; below 1/8.
    pub condition: f64,
    pub r2_min: f64,
    /// Allowed spread of slope·ε/Λ_K around its fitted value.
    pub band: f64,
    pub doubling_tol: f64,
    /// Nonlinear against linear slope.
    pub slope_tol: f64,
    /// Kernel mode requires λ_min < lambda_c/ε.
    pub lambda_c: f64,
    pub collapse_max: f64,
    pub control_min: f64,
    pub ratio_margin: f64,
    pub grid_radial_tol: f64,
    pub harnack_spread: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            condition: 0.1,
            r2_min: 0.99,
            band: 0.25,
            doubling_tol: 0.2,
            slope_tol: 0.15,
            lambda_c: 10.0,
            collapse_max: 0.1,
            control_min: 0.25,
            ratio_margin: 1.0,
            grid_radial_tol: 0.03,
            harnack_spread: 2.0,
        }
    }
}

/// The resolved configuration embedded in every report.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Set from the subcommand.
    #[serde(skip_deserializing)]
    pub experiment: String,
    pub run: RunSection,
    pub domain: DomainSection,
    pub case: CaseSection,
    pub profile: ProfileSection,
    pub sweep: SweepSection,
    pub solver: SolverSection,
    pub collapse: CollapseSection,
    pub green: GreenSection,
    pub algebra: AlgebraSection,
    pub export: ExportSection,
    pub thresholds: Thresholds,
}

fn line_of_offset(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// Line of `key` inside `[section]`, if it is written out.
fn line_of_key(src: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
        } else if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

impl ExperimentConfig {
    pub fn parse(src: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(src).map_err(|e| match e.span() {
            Some(span) => ConfigError::At { line: line_of_offset(src, span.start), msg: e.message().to_string() },
            None => ConfigError::General(e.message().to_string()),
        })?;
        cfg.validate(src)?;
        Ok(cfg)
    }

    fn validate(&self, src: &str) -> Result<(), ConfigError> {
        let fail = |section: &str, key: &str, msg: String| match line_of_key(src, section, key) {
            Some(line) => ConfigError::At { line, msg },
            None => ConfigError::General(format!("[{section}] {key}: {msg}")),
        };
        let positive: [(&str, &str, f64); 17] = [
            ("solver", "cg_tol", self.solver.cg_tol),
            ("solver", "eig_tol", self.solver.eig_tol),
            ("solver", "eig_inner_tol", self.solver.eig_inner_tol),
            ("solver", "picard_tol", self.solver.picard_tol),
            ("algebra", "tolerance", self.algebra.tolerance),
            ("thresholds", "condition", self.thresholds.condition),
            ("thresholds", "r2_min", self.thresholds.r2_min),
            ("thresholds", "band", self.thresholds.band),
            ("thresholds", "doubling_tol", self.thresholds.doubling_tol),
            ("thresholds", "slope_tol", self.thresholds.slope_tol),
            ("thresholds", "lambda_c", self.thresholds.lambda_c),
            ("thresholds", "collapse_max", self.thresholds.collapse_max),
            ("thresholds", "control_min", self.thresholds.control_min),
            ("thresholds", "ratio_margin", self.thresholds.ratio_margin),
            ("thresholds", "grid_radial_tol", self.thresholds.grid_radial_tol),
            ("thresholds", "harnack_spread", self.thresholds.harnack_spread),
            ("green", "radius", self.green.radius),
        ];
        for (section, key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(fail(section, key, format!("{key} must be positive, got {v}")));
            }
        }
        if self.thresholds.condition >= 0.125 {
            return Err(fail("thresholds", "condition", format!("condition bound {} must be below 1/8", self.thresholds.condition)));
        }
        let eps = &self.sweep.eps;
        if let Some(bad) = eps.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(fail("sweep", "eps", format!("eps values must be positive, got {bad}")));
        }
        for (i, a) in eps.iter().enumerate() {
            if eps[i + 1..].contains(a) {
                return Err(fail("sweep", "eps", format!("eps value {a} appears twice")));
            }
        }
        if let Some(e) = self.export.eps {
            if !(e > 0.0 && e.is_finite()) {
                return Err(fail("export", "eps", format!("eps must be positive, got {e}")));
            }
        }
        if let Err(msg) = self.case.id.parse::<CaseId>() {
            return Err(fail("case", "id", msg));
        }
        for c in &self.algebra.cases {
            if let Err(msg) = c.parse::<CaseId>() {
                return Err(fail("algebra", "cases", msg));
            }
        }
        if !(self.collapse.s_min < self.collapse.s_max) {
            return Err(fail("collapse", "s_max", "s_max must exceed s_min".into()));
        }
        if self.green.masses.iter().chain(&self.green.harnack_masses).any(|m| !(*m > 0.0)) {
            return Err(fail("green", "masses", "masses must be positive".into()));
        }
        if self.green.kappas.iter().any(|k| !(*k >= 0.0)) {
            return Err(fail("green", "kappas", "kappa must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn case_id(&self) -> CaseId {
        self.case.id.parse().expect("validated")
    }

    pub fn algebra_cases(&self) -> Vec<CaseId> {
        self.algebra.cases.iter().map(|c| c.parse().expect("validated")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(ExperimentConfig::parse("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn sections_override_defaults() {
        let src = "[sweep]\neps = [0.3, 0.15]\nmode = \"kernel\"\n\n[case]\nid = \"II\"\n";
        let cfg = ExperimentConfig::parse(src).unwrap();
        assert_eq!(cfg.sweep.eps, vec![0.3, 0.15]);
        assert_eq!(cfg.sweep.mode, ModeKind::Kernel);
        assert_eq!(cfg.case_id(), CaseId::II);
    }

    #[test]
    fn syntax_error_reports_its_line() {
        let err = ExperimentConfig::parse("[sweep]\n\neps = [0.1,\n[solver]\n").unwrap_err();
        assert!(matches!(err, ConfigError::At { line, .. } if (3..=4).contains(&line)), "{err}");
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let err = ExperimentConfig::parse("[solver]\ncg_tol = 1e-8\ncg_tolerance = 1e-8\n").unwrap_err();
        assert!(matches!(err, ConfigError::At { line: 3, .. }), "{err}");
    }

    #[test]
    fn invariants_report_the_offending_key() {
        let cases = [
            ("[sweep]\neps = [0.1, 0.1]\n", 2),
            ("[sweep]\neps = [0.1, -0.2]\n", 2),
            ("[run]\nseed = 3\n[solver]\n\ncg_tol = 0.0\n", 5),
            ("[thresholds]\ncondition = 0.2\n", 2),
            ("[case]\nid = \"V\"\n", 2),
        ];
        for (src, want) in cases {
            let err = ExperimentConfig::parse(src).unwrap_err();
            assert_eq!(err, ConfigError::At { line: want, msg: err.to_string().split_once(": ").unwrap().1.into() });
        }
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = ExperimentConfig::parse("[green]\nmasses = [5.0]\n").unwrap();
        let text = toml::to_string(&cfg).unwrap();
        let mut back = ExperimentConfig::parse(&text.replace("experiment = \"\"\n", "")).unwrap();
        back.experiment = cfg.experiment.clone();
        assert_eq!(back, cfg);
    }
}
