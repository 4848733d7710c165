use std::f64::consts::PI;

use domain_grid::{make_domain, DomainSpec, GridDomain, Metric};
use linalg_solvers::green::green_solve;
use linalg_solvers::radial::{radial_green_ode, RadialOptions};
use linalg_solvers::CgOptions;
use serde::Serialize;

use crate::{ExperimentError, Result};

#[derive(Debug, Clone)]
pub struct GreenOptions {
    /// Cells per axis of the grid solve (n = 3 only).
    pub cells: usize,
    pub cg: CgOptions,
    pub radial: RadialOptions,
}

impl Default for GreenOptions {
    fn default() -> Self {
        Self {
            cells: 64,
            cg: CgOptions { tol: 1e-12, maxit: 50_000, check_symmetry: false },
            radial: RadialOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreenComparison {
    pub n: usize,
    pub m: f64,
    pub kappa: f64,
    pub r0: f64,
    pub h: f64,
    /// max over [3h, R0] of |(Δ₀ - Δ_g) G₀^{m/2}| / ((3m²/4) G₀^{m/2}).
    pub absorption_margin: f64,
    /// The absorption inequality holds, so the comparison bound applies.
    pub regime_ok: bool,
    /// max of G_g / G₀^{m/2} on [3h, 0.9 R0], radial shooting.
    pub max_ratio_radial: f64,
    /// The same over grid nodes (n = 3).
    pub max_ratio_grid: Option<f64>,
    /// max |G_grid / G_radial - 1| on [0.1, 0.8] R0 (n = 3).
    pub grid_vs_radial: Option<f64>,
}

impl GreenComparison {
    /// None when the regime check fails and the bound is not asserted.
    pub fn bound_holds(&self) -> Option<bool> {
        self.regime_ok.then(|| {
            self.max_ratio_radial <= 1.0 && self.max_ratio_grid.is_none_or(|r| r <= 1.0)
        })
    }
}

/// Free-space Green's function of Δ + μ² on flat Rⁿ.
fn free_space(n: usize, mu: f64, opts: &RadialOptions) -> Result<Box<dyn Fn(f64) -> f64>> {
    match n {
        3 => Ok(Box::new(move |r: f64| (-mu * r).exp() / (4.0 * PI * r))),
        4 if mu == 0.0 => Ok(Box::new(|r: f64| 1.0 / (4.0 * PI * PI * r * r))),
        4 => {
            // Dirichlet far enough out that the correction is below e^{-80}.
            let p = radial_green_ode(4, mu, 40.0 / mu + 1.0, 0.0, opts)?;
            Ok(Box::new(move |r: f64| p.eval(r)))
        }
        _ => Err(ExperimentError::Invalid(format!("dimension {n} not supported"))),
    }
}

fn absorption_margin(n: usize, m: f64, kappa: f64, lo: f64, hi: f64) -> f64 {
    let mu = 0.5 * m;
    let nf = n as f64;
    (0..=400)
        .map(|i| {
            let r = lo + (hi - lo) * i as f64 / 400.0;
            // f = e^{-μr} r^{2-n}, in units of f.
            let a = (nf - 2.0) / r + mu;
            let f1 = -a;
            let f2 = a * a + (nf - 2.0) / (r * r);
            let s = 1.0 + kappa * r * r;
            let ds = 2.0 * kappa * r;
            let diff = -(1.0 - 1.0 / s) * (f2 + (nf - 1.0) * f1 / r) + 0.5 * (nf - 2.0) * ds * f1 / (s * s);
            diff.abs() / (0.75 * m * m)
        })
        .fold(0.0, f64::max)
}

/// Compares the Dirichlet Green's function of Δ_g + m² for
/// g = (1 + κr²) g₀ against the flat free-space function with mass m/2.
pub fn run_green_comparison(r0: f64, m: f64, kappa: f64, n: usize, opts: &GreenOptions) -> Result<GreenComparison> {
    if !(m > 0.0) || !(r0 > 0.0) || kappa < 0.0 {
        return Err(ExperimentError::Invalid("need m > 0, R0 > 0 and kappa >= 0".into()));
    }
    let h = 2.0 * r0 / opts.cells as f64;
    let (lo, hi) = (3.0 * h, 0.9 * r0);
    let bound = free_space(n, 0.5 * m, &opts.radial)?;
    let radial = radial_green_ode(n, m, r0, kappa, &opts.radial)?;
    let max_ratio_radial = (0..=400)
        .map(|i| {
            let r = lo + (hi - lo) * i as f64 / 400.0;
            radial.eval(r) / bound(r)
        })
        .fold(0.0, f64::max);
    let margin = absorption_margin(n, m, kappa, lo, r0);
    let (mut max_ratio_grid, mut grid_vs_radial) = (None, None);
    if n == 3 {
        let metric = if kappa == 0.0 { Metric::Flat } else { Metric::Radial { kappa } };
        let dom = make_domain(&DomainSpec::ball(opts.cells, r0, metric))?;
        let sol = green_solve(&dom, m, dom.center_node(), &opts.cg)?;
        let mut ratio: f64 = 0.0;
        let mut dev: f64 = 0.0;
        for i in 0..dom.node_count() {
            let r = dom.radius(i);
            if (lo..=hi).contains(&r) {
                ratio = ratio.max(sol.g[i] / bound(r));
            }
            if (0.1 * r0..=0.8 * r0).contains(&r) {
                dev = dev.max((sol.g[i] / radial.eval(r) - 1.0).abs());
            }
        }
        max_ratio_grid = Some(ratio);
        grid_vs_radial = Some(dev);
    }
    Ok(GreenComparison {
        n,
        m,
        kappa,
        r0,
        h,
        absorption_margin: margin,
        regime_ok: margin <= 1.0,
        max_ratio_radial,
        max_ratio_grid,
        grid_vs_radial,
    })
}

/// r_{k+1} = r_k - min(r_k / 5, 1/M), from R0 down to the last radius
/// not below `floor`.
pub fn dyadic_annuli(r0: f64, m: f64, floor: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = r0;
    if !(r0 > 0.0 && m > 0.0 && floor > 0.0) {
        return out;
    }
    while r >= floor {
        out.push(r);
        r -= (r / 5.0).min(1.0 / m);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorRatio {
    pub annulus: usize,
    pub inner: f64,
    pub outer: f64,
    pub nodes: usize,
    pub diameter: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarnackReport {
    pub sectors: Vec<SectorRatio>,
    /// Largest sup/inf over sectors of diameter at most twice the width.
    pub max_ratio: f64,
    /// Angular bins with no grid node.
    pub empty_sectors: usize,
}

/// sup/inf of `g` over sectors of the annuli between consecutive `radii`
/// around `center`. Each annulus of width w is cut into angular bins of arc
/// length about w (at least `sectors_per_annulus` in azimuth), so sectors
/// are roughly cubes of side w.
pub fn harnack_ratio(
    g: &[f64],
    domain: &GridDomain,
    center: usize,
    radii: &[f64],
    sectors_per_annulus: usize,
) -> HarnackReport {
    let c = domain.coord(center);
    let rel: Vec<(f64, f64, f64)> = (0..domain.node_count())
        .map(|i| {
            let x = domain.coord(i);
            let d: Vec<f64> = x.iter().zip(&c).map(|(a, b)| a - b).collect();
            let r = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            let theta = if r > 0.0 { (d[domain.dim - 1] / r).clamp(-1.0, 1.0).acos() } else { 0.0 };
            let phi = d[1].atan2(d[0]);
            (r, theta, phi)
        })
        .collect();
    let mut sectors = Vec::new();
    let mut empty = 0;
    let mut max_ratio: f64 = 1.0;
    for (k, pair) in radii.windows(2).enumerate() {
        let (outer, inner) = (pair[0].max(pair[1]), pair[0].min(pair[1]));
        let w = outer - inner;
        let mid = 0.5 * (outer + inner);
        let n_theta = ((PI * mid / w).ceil() as usize).max(1);
        let n_phi = ((2.0 * PI * mid / w).ceil() as usize).max(sectors_per_annulus).max(1);
        let mut bins: Vec<Vec<usize>> = vec![Vec::new(); n_theta * n_phi];
        for (i, &(r, th, ph)) in rel.iter().enumerate() {
            if r >= inner && r < outer {
                let a = ((th / PI * n_theta as f64) as usize).min(n_theta - 1);
                let b = (((ph + PI) / (2.0 * PI) * n_phi as f64) as usize).min(n_phi - 1);
                bins[a * n_phi + b].push(i);
            }
        }
        for nodes in bins {
            if nodes.is_empty() {
                empty += 1;
                continue;
            }
            let vals: Vec<f64> = nodes.iter().map(|&i| g[i].abs()).collect();
            let sup = vals.iter().cloned().fold(0.0, f64::max);
            let inf = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let mut diameter: f64 = 0.0;
            for (a, &i) in nodes.iter().enumerate() {
                let xi = domain.coord(i);
                for &j in &nodes[a + 1..] {
                    let xj = domain.coord(j);
                    diameter = diameter.max(xi.iter().zip(&xj).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt());
                }
            }
            let ratio = if inf > 0.0 { sup / inf } else { f64::INFINITY };
            if diameter <= 2.0 * w {
                max_ratio = max_ratio.max(ratio);
            }
            sectors.push(SectorRatio { annulus: k, inner, outer, nodes: nodes.len(), diameter, ratio });
        }
    }
    HarnackReport { sectors, max_ratio, empty_sectors: empty }
}

/// Convenience: the ball solve behind a Harnack measurement.
pub fn ball_green(cells: usize, r0: f64, m: f64, cg: &CgOptions) -> Result<(GridDomain, Vec<f64>)> {
    let dom = make_domain(&DomainSpec::ball(cells, r0, Metric::Flat))?;
    let sol = green_solve(&dom, m, dom.center_node(), cg)?;
    Ok((dom, sol.g))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annuli_first_radii_and_tail() {
        let r = dyadic_annuli(1.0, 10.0, 0.01);
        assert!((r[1] - 0.9).abs() < 1e-12 && (r[2] - 0.8).abs() < 1e-12);
        for w in r.windows(2) {
            assert!(w[1] < w[0] && w[0] - w[1] <= 0.1 + 1e-12);
            if w[0] < 0.5 {
                assert!((w[1] / w[0] - 0.8).abs() < 1e-12);
            }
        }
        assert!(*r.last().unwrap() >= 0.01);
    }

    #[test]
    fn constant_field_has_unit_ratios() {
        let dom = make_domain(&DomainSpec::ball(16, 1.0, Metric::Flat)).unwrap();
        let g = vec![2.5; dom.node_count()];
        let radii = dyadic_annuli(0.9, 5.0, 0.3);
        let rep = harnack_ratio(&g, &dom, dom.center_node(), &radii, 4);
        assert!(!rep.sectors.is_empty());
        assert!(rep.sectors.iter().all(|s| s.ratio == 1.0));
        assert_eq!(rep.max_ratio, 1.0);
    }

    #[test]
    fn flat_absorption_is_exact() {
        assert_eq!(absorption_margin(3, 10.0, 0.0, 0.1, 1.0), 0.0);
        assert!(absorption_margin(3, 10.0, 0.1, 0.1, 1.0) > 0.0);
    }
}
