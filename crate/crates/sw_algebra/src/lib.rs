//! Fiberwise algebra of the generalized Seiberg-Witten equations: moment
//! maps, Clifford multiplication by Lie-algebra valued forms, the
//! degenerate zeroth-order term and its kernel splitting.
//!
//! The full fiber is spinor (+) form, spinor first. With frame matrices
//! `gamma_k = gamma(I_j (x) t_alpha)` the moment map is
//! `mu(phi, psi)_k = <phi, gamma_k psi>`, and the zeroth-order term at a
//! base spinor is
//!
//! ```text
//!       [ 0    B ]        B = [gamma_0 Phi0 | gamma_1 Phi0 | ...]
//!  A =  [ B^T  0 ]
//! ```

pub mod cases;
pub mod suite;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub use cases::{CaseId, Group, SWCaseData};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SwError {
    #[error("{what}: expected length {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("base spinor norm {norm:e} is at or below tolerance {tol:e}; fiber lies on the singular set")]
    DegenerateFiber { norm: f64, tol: f64 },
    #[error("scale parameter must be positive, got {0}")]
    NonPositiveEps(f64),
}

pub type Result<T> = std::result::Result<T, SwError>;

fn check_len(what: &'static str, v: &DVector<f64>, expected: usize) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(SwError::DimensionMismatch {
            what,
            expected,
            got: v.len(),
        })
    }
}

/// Projectors onto the kernel bundle N and its complement H at one fiber.
#[derive(Debug, Clone)]
pub struct FiberSplitting {
    pub proj_n: DMatrix<f64>,
    pub proj_h: DMatrix<f64>,
    pub base_spinor: DVector<f64>,
}

impl FiberSplitting {
    pub fn rank_n(&self) -> usize {
        self.proj_n.trace().round() as usize
    }
}

/// Half the moment map, `mm_k = 1/2 <psi, gamma_k psi>`.
pub fn moment_map(data: &SWCaseData, psi: &DVector<f64>) -> Result<DVector<f64>> {
    check_len("spinor", psi, data.spinor_dim)?;
    Ok(DVector::from_iterator(
        data.form_dim,
        data.frame.iter().map(|g| 0.5 * psi.dot(&(g * psi))),
    ))
}

/// The polarization `mu(phi, psi)_k = <phi, gamma_k psi>`.
pub fn moment_polar(
    data: &SWCaseData,
    phi: &DVector<f64>,
    psi: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_len("spinor phi", phi, data.spinor_dim)?;
    check_len("spinor psi", psi, data.spinor_dim)?;
    Ok(DVector::from_iterator(
        data.form_dim,
        data.frame.iter().map(|g| phi.dot(&(g * psi))),
    ))
}

/// gamma(a) = sum_k a_k gamma_k.
pub fn gamma_matrix(data: &SWCaseData, a: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_len("form", a, data.form_dim)?;
    let mut m = DMatrix::zeros(data.spinor_dim, data.spinor_dim);
    for (x, g) in a.iter().zip(&data.frame) {
        if *x != 0.0 {
            m += g * *x;
        }
    }
    Ok(m)
}

pub fn gamma_action(
    data: &SWCaseData,
    a: &DVector<f64>,
    psi: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_len("spinor", psi, data.spinor_dim)?;
    Ok(gamma_matrix(data, a)? * psi)
}

/// Residuals of the two commutation identities
/// `gamma(cl(xi) a) phi = rho(xi)^T gamma(a) phi` and
/// `mu(rho(xi) phi, psi) = cl(xi)^T mu(phi, psi)`.
/// In dimension 3 the symbols are skew, so these read
/// `rho gamma(a) phi + gamma(cl a) phi = 0` and `cl mu + mu(rho phi, -) = 0`.
pub fn verify_identity_pair(
    data: &SWCaseData,
    xi: &[f64],
    a: &DVector<f64>,
    phi: &DVector<f64>,
    psi: &DVector<f64>,
) -> Result<(f64, f64)> {
    if xi.len() != data.base_dim {
        return Err(SwError::DimensionMismatch {
            what: "covector",
            expected: data.base_dim,
            got: xi.len(),
        });
    }
    check_len("form", a, data.form_dim)?;
    let rho = data.rho_of(xi);
    let cl = data.cl_of(xi);
    let lhs1 = gamma_action(data, &(&cl * a), phi)?;
    let rhs1 = rho.transpose() * gamma_action(data, a, phi)?;
    let lhs2 = moment_polar(data, &(&rho * phi), psi)?;
    let rhs2 = cl.transpose() * moment_polar(data, phi, psi)?;
    Ok(((lhs1 - rhs1).norm(), (lhs2 - rhs2).norm()))
}

/// The block B = [gamma_k phi]_k, spinor_dim x form_dim.
pub fn spinor_block(data: &SWCaseData, phi: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_len("spinor", phi, data.spinor_dim)?;
    let mut b = DMatrix::zeros(data.spinor_dim, data.form_dim);
    for (k, g) in data.frame.iter().enumerate() {
        b.set_column(k, &(g * phi));
    }
    Ok(b)
}

#[allow(non_snake_case)]
pub fn build_A(data: &SWCaseData, phi0: &DVector<f64>) -> Result<DMatrix<f64>> {
    let b = spinor_block(data, phi0)?;
    Ok(assemble_blocks(data, &b, None))
}

fn assemble_blocks(data: &SWCaseData, b: &DMatrix<f64>, w: Option<&DMatrix<f64>>) -> DMatrix<f64> {
    let (s, f) = (data.spinor_dim, data.form_dim);
    let mut m = DMatrix::zeros(s + f, s + f);
    m.view_mut((0, s), (s, f)).copy_from(b);
    m.view_mut((s, 0), (f, s)).copy_from(&b.transpose());
    if let Some(w) = w {
        m.view_mut((s, s), (f, f)).copy_from(w);
    }
    m
}

/// The bracket-wedge block `a' -> *[a' ^ a]` on forms. Zero for abelian
/// cases. In dimension 4 the self-dual part is taken, with
/// `P+ = (1 + *)/2` read off in the basis `e^{0j} + e^{lm}`.
pub fn wedge_block(data: &SWCaseData, a: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_len("form", a, data.form_dim)?;
    let f = data.form_dim;
    let mut w = DMatrix::zeros(f, f);
    if data.group == Group::U1 {
        return Ok(w);
    }
    let at = |j: usize, g: usize| a[j * 3 + g];
    // coefficient of the (row j) output 1-form / self-dual 2-form from the
    // pair of input directions (p, q) with weight s.
    let pairs: Vec<(usize, usize, usize, f64)> = match data.base_dim {
        3 => {
            let mut v = Vec::new();
            for l in 1..4 {
                for p in 1..4 {
                    for q in 1..4 {
                        let e = cases::levi_civita(p - 1, q - 1, l - 1);
                        if e != 0.0 {
                            v.push((l, p, q, e));
                        }
                    }
                }
            }
            v
        }
        _ => {
            let mut v = Vec::new();
            for j in 1..4 {
                let (l, m) = (j % 3 + 1, (j + 1) % 3 + 1);
                for (p, q, s) in [(0, j, 0.5), (j, 0, -0.5), (l, m, 0.5), (m, l, -0.5)] {
                    v.push((j, p, q, s));
                }
            }
            v
        }
    };
    // out_{l,g} += s * [a'_p, a_q]_g = s * sum_{b,d} eps(b,d,g) a'_{p,b} a_{q,d}
    for &(l, p, q, s) in &pairs {
        for b in 0..3 {
            for d in 0..3 {
                for g in 0..3 {
                    let e = cases::levi_civita(b, d, g);
                    if e != 0.0 {
                        w[(l * 3 + g, p * 3 + b)] += s * e * at(q, d);
                    }
                }
            }
        }
    }
    Ok(w)
}

/// The zeroth-order perturbation A_eps of the nonlinear problem: the
/// Clifford and moment-map blocks at eps * phi, plus eps times the
/// bracket-wedge block in the non-abelian cases. Linear in (phi, a).
#[allow(non_snake_case)]
pub fn build_A_eps(
    data: &SWCaseData,
    phi: &DVector<f64>,
    a: &DVector<f64>,
    eps: f64,
) -> Result<DMatrix<f64>> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(SwError::NonPositiveEps(eps));
    }
    let b = spinor_block(data, &(phi * eps))?;
    let w = wedge_block(data, a)? * eps;
    Ok(assemble_blocks(data, &b, Some(&w)))
}

/// max over basis covectors of `|A^T sigma(e^j) - sigma(e^j)^T A|_max`.
pub fn commutation_defect(data: &SWCaseData, a: &DMatrix<f64>) -> f64 {
    let model = data.symbol_model();
    model
        .gamma
        .iter()
        .map(|s| (a.transpose() * s - s.transpose() * a).amax())
        .fold(0.0, f64::max)
}

/// `max(|P_N A|, |A P_N|)` entrywise.
pub fn degeneracy_defect(a: &DMatrix<f64>, split: &FiberSplitting) -> f64 {
    (&split.proj_n * a).amax().max((a * &split.proj_n).amax())
}

fn kernel_projector(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let v_t = svd.v_t.expect("requested V^T");
    let mut p = DMatrix::identity(n, n);
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > rel_tol * smax {
            let r = v_t.row(i);
            p -= r.transpose() * r;
        }
    }
    p
}

/// Splitting N = ker mu(-, Phi0) (+) ker gamma(-) Phi0, with rank decided by
/// singular values above `1e-9 * |B|`.
pub fn splitting_at(data: &SWCaseData, phi0: &DVector<f64>, tol: f64) -> Result<FiberSplitting> {
    check_len("spinor", phi0, data.spinor_dim)?;
    let norm = phi0.norm();
    if norm <= tol {
        return Err(SwError::DegenerateFiber { norm, tol });
    }
    let b = spinor_block(data, phi0)?;
    let (s, f) = (data.spinor_dim, data.form_dim);
    let n = s + f;
    let mut proj_n = DMatrix::zeros(n, n);
    proj_n
        .view_mut((0, 0), (s, s))
        .copy_from(&kernel_projector(&b.transpose(), 1e-9));
    proj_n
        .view_mut((s, s), (f, f))
        .copy_from(&kernel_projector(&b, 1e-9));
    let proj_h = DMatrix::identity(n, n) - &proj_n;
    Ok(FiberSplitting {
        proj_n,
        proj_h,
        base_spinor: phi0.clone(),
    })
}

/// Smallest singular value of A on H: the `dim H` largest singular values
/// of A are those of its restriction to H.
pub fn gap_on_h(a: &DMatrix<f64>, split: &FiberSplitting) -> f64 {
    let dim_h = a.nrows() - split.rank_n();
    if dim_h == 0 {
        return 0.0;
    }
    let mut sv: Vec<f64> = a.singular_values().iter().cloned().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv[dim_h - 1]
}
