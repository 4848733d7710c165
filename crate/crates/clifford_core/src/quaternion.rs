//! Quaternion arithmetic in the basis (1, i, j, k) and the real 4x4 matrices
//! of left and right multiplication.

use nalgebra::DMatrix;

pub type Quat = [f64; 4];

pub const ONE: Quat = [1.0, 0.0, 0.0, 0.0];
pub const I: Quat = [0.0, 1.0, 0.0, 0.0];
pub const J: Quat = [0.0, 0.0, 1.0, 0.0];
pub const K: Quat = [0.0, 0.0, 0.0, 1.0];

/// The frame (1, i, j, k).
pub const UNITS: [Quat; 4] = [ONE, I, J, K];

pub fn qmul(a: Quat, b: Quat) -> Quat {
    let [a0, a1, a2, a3] = a;
    let [b0, b1, b2, b3] = b;
    [
        a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
        a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
        a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
        a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
    ]
}

pub fn conj(q: Quat) -> Quat {
    [q[0], -q[1], -q[2], -q[3]]
}

/// Matrix of `x -> q x`.
pub fn left_matrix(q: Quat) -> DMatrix<f64> {
    DMatrix::from_fn(4, 4, |r, c| qmul(q, UNITS[c])[r])
}

/// Matrix of `x -> x q`.
pub fn right_matrix(q: Quat) -> DMatrix<f64> {
    DMatrix::from_fn(4, 4, |r, c| qmul(UNITS[c], q)[r])
}
