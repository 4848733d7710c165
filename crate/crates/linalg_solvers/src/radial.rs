//! Radial Green's function of `Δ_g + m²` for `g = (1 + κr²) g0` on a ball.
//!
//! In `t = ln r`, with `s = 1 + κr²`, `a = s^{(n-2)/2}`, `b = s^{n/2}` and
//! flux `y = a r^{n-1} G'`:
//!
//! ```text
//! dG/dt = y / (a r^{n-2}),     dy/dt = m² b rⁿ G.
//! ```
//!
//! The shot starts at `R0` with `G = 0` and integrates inward, which is the
//! stable direction for the decaying solution. The result is scaled so that
//! the total flux `ω_{n-1} y` tends to -1 at the origin.

use std::f64::consts::PI;

use crate::SolverError;

#[derive(Debug, Clone, Copy)]
pub struct RadialOptions {
    pub dt: f64,
    pub r_min: f64,
}

impl Default for RadialOptions {
    fn default() -> Self {
        Self { dt: 1e-3, r_min: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub n: usize,
    pub m: f64,
    pub r0: f64,
    pub kappa: f64,
    t_min: f64,
    dt: f64,
    g: Vec<f64>,
    dg_dt: Vec<f64>,
}

fn sphere_area(n: usize) -> f64 {
    match n {
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        _ => unreachable!("checked by caller"),
    }
}

impl RadialProfile {
    /// G(r); zero for r >= R0. Cubic Hermite interpolation in ln r.
    pub fn eval(&self, r: f64) -> f64 {
        if r >= self.r0 {
            return 0.0;
        }
        let t = r.ln();
        let x = ((t - self.t_min) / self.dt).max(0.0);
        let k = (x.floor() as usize).min(self.g.len() - 2);
        let u = x - k as f64;
        let (g0, g1) = (self.g[k], self.g[k + 1]);
        let (d0, d1) = (self.dg_dt[k] * self.dt, self.dg_dt[k + 1] * self.dt);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * g0
            + (u3 - 2.0 * u2 + u) * d0
            + (-2.0 * u3 + 3.0 * u2) * g1
            + (u3 - u2) * d1
    }

    /// (r, G) samples, ascending in r.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.g
            .iter()
            .enumerate()
            .map(move |(i, &g)| ((self.t_min + i as f64 * self.dt).exp(), g))
    }
}

pub fn radial_green_ode(
    n: usize,
    m: f64,
    r0: f64,
    kappa: f64,
    opts: &RadialOptions,
) -> Result<RadialProfile, SolverError> {
    if n != 3 && n != 4 {
        return Err(SolverError::Invalid(format!("dimension {n} not supported")));
    }
    if !(m >= 0.0) || !(r0 > opts.r_min) || !(opts.dt > 0.0) || !(opts.r_min > 0.0) {
        return Err(SolverError::Invalid("need m >= 0 and R0 > r_min > 0".into()));
    }
    let nf = n as f64;
    let rhs = |t: f64, g: f64, y: f64| -> (f64, f64) {
        let r = t.exp();
        let s = 1.0 + kappa * r * r;
        let a = s.powf(0.5 * (nf - 2.0));
        let b = s.powf(0.5 * nf);
        (y / (a * r.powf(nf - 2.0)), m * m * b * r.powf(nf) * g)
    };
    let t_max = r0.ln();
    let t_min = opts.r_min.ln();
    let steps = ((t_max - t_min) / opts.dt).ceil() as usize;
    let dt = (t_max - t_min) / steps as f64;
    // Samples from the outside in; reversed at the end.
    let mut g_raw = Vec::with_capacity(steps + 1);
    let mut d_raw = Vec::with_capacity(steps + 1);
    let mut rescales = Vec::with_capacity(steps + 1);
    let (mut g, mut y) = (0.0, -1.0);
    let mut count = 0i32;
    const BIG: f64 = 1e150;
    for k in 0..=steps {
        let t = t_max - k as f64 * dt;
        g_raw.push(g);
        d_raw.push(rhs(t, g, y).0);
        rescales.push(count);
        if k == steps {
            break;
        }
        let hstep = -dt;
        let (k1g, k1y) = rhs(t, g, y);
        let (k2g, k2y) = rhs(t + 0.5 * hstep, g + 0.5 * hstep * k1g, y + 0.5 * hstep * k1y);
        let (k3g, k3y) = rhs(t + 0.5 * hstep, g + 0.5 * hstep * k2g, y + 0.5 * hstep * k2y);
        let (k4g, k4y) = rhs(t + hstep, g + hstep * k3g, y + hstep * k3y);
        g += hstep / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g);
        y += hstep / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        if !g.is_finite() || !y.is_finite() {
            return Err(SolverError::NotConverged { what: "radial shooting", residual: f64::NAN, iterations: k });
        }
        if g.abs().max(y.abs()) > BIG {
            g /= BIG;
            y /= BIG;
            count += 1;
        }
    }
    if !(y < 0.0) {
        return Err(SolverError::NotConverged { what: "radial shooting", residual: y, iterations: steps });
    }
    let norm = -1.0 / (sphere_area(n) * y);
    let last = count;
    let fix = |v: f64, c: i32| v * norm * BIG.powi(c - last);
    let mut gs: Vec<f64> = g_raw.iter().zip(&rescales).map(|(&v, &c)| fix(v, c)).collect();
    let mut ds: Vec<f64> = d_raw.iter().zip(&rescales).map(|(&v, &c)| fix(v, c)).collect();
    gs.reverse();
    ds.reverse();
    Ok(RadialProfile { n, m, r0, kappa, t_min, dt, g: gs, dg_dt: ds })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newtonian_potential() {
        let p = radial_green_ode(3, 0.0, 1e8, 0.0, &RadialOptions::default()).unwrap();
        for i in 0..=70 {
            let r = 0.1 + 0.01 * i as f64;
            let want = 1.0 / (4.0 * PI * r);
            assert!((p.eval(r) / want - 1.0).abs() <= 1e-6, "r = {r}");
        }
    }

    #[test]
    fn dirichlet_yukawa() {
        // sinh(m (R0 - r)) / (4 pi r sinh(m R0)) has unit flux and vanishes at R0.
        let (m, r0) = (20.0, 1.0);
        let p = radial_green_ode(3, m, r0, 0.0, &RadialOptions::default()).unwrap();
        for i in 0..=14 {
            let r = 0.1 + 0.05 * i as f64;
            let want = (m * (r0 - r)).sinh() / (4.0 * PI * r * (m * r0).sinh());
            assert!((p.eval(r) / want - 1.0).abs() <= 1e-8, "r = {r}");
        }
    }

    #[test]
    fn yukawa_ratio_approaches_one() {
        let m = 2.0;
        let r = 0.5;
        let mut prev = f64::INFINITY;
        for r0 in [2.0, 4.0, 8.0, 16.0] {
            let p = radial_green_ode(3, m, r0, 0.0, &RadialOptions::default()).unwrap();
            let err = (p.eval(r) * 4.0 * PI * r * (m * r).exp() - 1.0).abs();
            assert!(err < prev || err < 1e-9, "R0 = {r0}: {err}");
            prev = err;
        }
        assert!(prev < 1e-9);
    }

    #[test]
    fn monotone_and_four_dim() {
        for (n, kappa) in [(3, 0.1), (4, 0.0), (4, 0.2)] {
            let p = radial_green_ode(n, 5.0, 1.0, kappa, &RadialOptions::default()).unwrap();
            let v: Vec<f64> = p.samples().map(|s| s.1).collect();
            assert!(v.windows(2).all(|w| w[1] <= w[0]));
        }
        // n = 4, m = 0, R0 large: 1/(4 pi^2 r^2).
        let p = radial_green_ode(4, 0.0, 1e6, 0.0, &RadialOptions::default()).unwrap();
        let r: f64 = 0.3;
        assert!((p.eval(r) * 4.0 * PI * PI * r * r - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(radial_green_ode(5, 1.0, 1.0, 0.0, &RadialOptions::default()).is_err());
        assert!(radial_green_ode(3, -1.0, 1.0, 0.0, &RadialOptions::default()).is_err());
    }
}
