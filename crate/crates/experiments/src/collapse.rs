use domain_grid::{BaseSpinorProfile, GridDomain};
use linalg_solvers::{kernel_approx, EigenOptions};
use rayon::prelude::*;
use serde::Serialize;
use sw_algebra::SWCaseData;

use crate::decay::DecayOptions;
use crate::fit::shell_sups_at;
use crate::{DecayMode, ExperimentError, Problem, Result};

#[derive(Debug, Clone)]
pub struct CollapseOptions {
    /// |Φ₀| = c2·√dist.
    pub c2: f64,
    /// K_ε = {dist >= c1 ε^{2/3}}.
    pub c1: f64,
    pub s_range: [f64; 2],
    pub samples: usize,
    pub eigen: EigenOptions,
}

impl Default for CollapseOptions {
    fn default() -> Self {
        Self {
            c2: 1.0,
            c1: 1.0,
            s_range: [1.0, 4.0],
            samples: 61,
            eigen: DecayOptions::new(1.0, DecayMode::Kernel).eigen,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseReport {
    pub eps: Vec<f64>,
    pub s_grid: Vec<f64>,
    /// ln sup|π_𝔥 q| against s = dist^{3/2}/ε, shifted to vanish at s_grid[0].
    pub profiles: Vec<Vec<f64>>,
    /// max over pairs of sup|p_i - p_j| / sup|p_i|.
    pub distance: f64,
    /// The same data against dist/ε.
    /// Grid for the control, clipped to the range every curve covers.
    pub control_grid: Vec<f64>,
    pub control_profiles: Vec<Vec<f64>>,
    pub control_distance: f64,
    pub lambda_min: Vec<f64>,
    /// Per ε: distance of the node attaining each shell sup, and the sup.
    pub shell_dist: Vec<Vec<f64>>,
    pub shell_sup: Vec<Vec<f64>>,
    /// dist(K_ε, 𝒵) = c1 ε^{2/3}.
    pub k_eps: Vec<f64>,
}

fn interp(x: &[f64], y: &[f64], t: f64) -> Option<f64> {
    if t < x[0] || t > *x.last()? {
        return None;
    }
    let k = x.partition_point(|v| *v <= t).clamp(1, x.len() - 1);
    let w = (t - x[k - 1]) / (x[k] - x[k - 1]);
    Some(y[k - 1] * (1.0 - w) + y[k] * w)
}

/// Resample curves on `grid`, shift each to vanish at grid[0], and return
/// them with the largest pairwise sup distance relative to the sup of the
/// first curve of the pair.
pub fn profile_distance(grid: &[f64], curves: &[(Vec<f64>, Vec<f64>)]) -> Result<(Vec<Vec<f64>>, f64)> {
    let mut out = Vec::new();
    for (x, y) in curves {
        let p: Option<Vec<f64>> = grid.iter().map(|&t| interp(x, y, t)).collect();
        let p = p.ok_or(ExperimentError::InsufficientShells { found: x.len(), needed: 2 })?;
        let p0 = p[0];
        out.push(p.into_iter().map(|v| v - p0).collect::<Vec<_>>());
    }
    let mut dist: f64 = 0.0;
    for i in 0..out.len() {
        for j in i + 1..out.len() {
            let num = out[i].iter().zip(&out[j]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let den = out[i].iter().map(|a| a.abs()).fold(0.0, f64::max);
            dist = dist.max(if den > 0.0 { num / den } else { num });
        }
    }
    Ok((out, dist))
}

/// Kernel-mode profiles for the √dist base spinor, compared across ε in the
/// variable s = dist^{3/2}/ε and, as a control, in dist/ε.
pub fn run_scale_collapse(
    domain: &GridDomain,
    data: &SWCaseData,
    eps_list: &[f64],
    opts: &CollapseOptions,
) -> Result<CollapseReport> {
    if eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(ExperimentError::Invalid("eps values must be positive".into()));
    }
    let p = Problem::new(domain.clone(), data.clone(), BaseSpinorProfile::SqrtDist { c2: opts.c2 })?;
    let h = p.h();
    let w = 2.0 * h;
    let runs: Vec<Result<(Vec<f64>, Vec<f64>, f64, Vec<f64>)>> = eps_list
        .par_iter()
        .map(|&eps| {
            let deps = p.Deps(eps)?;
            let eig = p.kernel_options(&opts.eigen);
            let pair = kernel_approx(&deps, Some(&p.proj_h), &eig)?;
            let norms = p.h_norms(&pair.q);
            let shells = shell_sups_at(&p.domain.dist_field, &norms, w);
            let r: Vec<f64> = shells.iter().map(|(d, _)| *d).collect();
            let sups: Vec<f64> = shells.iter().map(|(_, s)| *s).collect();
            let ls: Vec<f64> = sups.iter().map(|s| s.ln()).collect();
            Ok((r, ls, pair.lambda, sups))
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let n = opts.samples.max(2);
    let [a, b] = opts.s_range;
    let grid: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
    let scaled: Vec<(Vec<f64>, Vec<f64>)> = runs
        .iter()
        .zip(eps_list)
        .map(|((r, ls, _, _), e)| (r.iter().map(|v| v.powf(1.5) / e).collect(), ls.clone()))
        .collect();
    let control: Vec<(Vec<f64>, Vec<f64>)> = runs
        .iter()
        .zip(eps_list)
        .map(|((r, ls, _, _), e)| (r.iter().map(|v| v / e).collect(), ls.clone()))
        .collect();
    let (profiles, distance) = profile_distance(&grid, &scaled)?;
    // The control variable need not span s_range on coarse grids; compare
    // it on the part every curve covers.
    let lo = control.iter().map(|(x, _)| x[0]).fold(a, f64::max);
    let hi = control.iter().map(|(x, _)| *x.last().unwrap_or(&0.0)).fold(b, f64::min);
    if !(hi > lo) {
        return Err(ExperimentError::InsufficientShells { found: 0, needed: 2 });
    }
    let control_grid: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let (control_profiles, control_distance) = profile_distance(&control_grid, &control)?;
    Ok(CollapseReport {
        eps: eps_list.to_vec(),
        s_grid: grid,
        profiles,
        distance,
        control_grid,
        control_profiles,
        control_distance,
        lambda_min: runs.iter().map(|r| r.2).collect(),
        shell_dist: runs.iter().map(|r| r.0.clone()).collect(),
        shell_sup: runs.iter().map(|r| r.3.clone()).collect(),
        k_eps: eps_list.iter().map(|e| opts.c1 * e.powf(2.0 / 3.0)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::reduced_model_1d;

    fn oracle_curves(lambda: fn(f64) -> f64, power: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
        [0.2, 0.1, 0.05]
            .iter()
            .map(|&eps| {
                let o = reduced_model_1d(lambda, eps, 2.0, 4000);
                (o.x.iter().map(|x| x.powf(power) / eps).collect(), o.log_decaying)
            })
            .collect()
    }

    #[test]
    fn radial_oracle_collapses_in_three_halves_variable() {
        let grid: Vec<f64> = (0..61).map(|i| 1.0 + 0.05 * i as f64).collect();
        let (_, d) = profile_distance(&grid, &oracle_curves(f64::sqrt, 1.5)).unwrap();
        assert!(d < 1e-6, "{d}");
        let (_, d) = profile_distance(&grid, &oracle_curves(|_| 1.0, 1.5)).unwrap();
        assert!(d > 0.25, "{d}");
    }

    #[test]
    fn identical_curves_have_zero_distance() {
        let c = (vec![0.0, 1.0, 5.0], vec![0.0, -1.0, -3.0]);
        let (_, d) = profile_distance(&[1.0, 2.0, 4.0], &[c.clone(), c]).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn uncovered_range_is_an_error() {
        let c = (vec![0.0, 1.0], vec![0.0, -1.0]);
        assert!(profile_distance(&[1.0, 2.0], &[c]).is_err());
    }
}
