//! The reduced two-component model on a line: `q₁' = -(Λ/ε) q₁`,
//! `q₂' = +(Λ/ε) q₂`, integrated with RK4. The decaying component is the
//! one-dimensional picture of the 𝔥-part of a solution.

use crate::fit::{linear_fit, LinearFit};

#[derive(Debug, Clone)]
pub struct ShootingOracle {
    pub x: Vec<f64>,
    /// ln q₁, starting from q₁(0) = 1.
    pub log_decaying: Vec<f64>,
    /// Fit of ln q₁ against x on [0.1 L, 0.9 L].
    pub fit: LinearFit,
}

pub fn reduced_model_1d<F: Fn(f64) -> f64>(lambda: F, eps: f64, length: f64, steps: usize) -> ShootingOracle {
    let dx = length / steps as f64;
    let rate = |x: f64| -lambda(x) / eps;
    // Integrate ln q₁ directly so that deep decay never underflows.
    let mut x = vec![0.0];
    let mut y = vec![0.0];
    let mut cur = 0.0;
    for k in 0..steps {
        let x0 = k as f64 * dx;
        let k1 = rate(x0);
        let k2 = rate(x0 + 0.5 * dx);
        let k4 = rate(x0 + dx);
        cur += dx / 6.0 * (k1 + 4.0 * k2 + k4);
        x.push(x0 + dx);
        y.push(cur);
    }
    let (fx, fy): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(&y)
        .filter(|(xi, _)| **xi >= 0.1 * length && **xi <= 0.9 * length)
        .map(|(a, b)| (*a, *b))
        .unzip();
    let fit = linear_fit(&fx, &fy);
    ShootingOracle { x, log_decaying: y, fit }
}
