//! Fiber data for the four model cases.
//!
//! Index conventions:
//! * Case I spinors are (alpha, beta) in C^2 (+) C^2, stored as
//!   `[Re a1, Im a1, Re a2, Im a2, Re b1, Im b1, Re b2, Im b2]`.
//! * Tensor products with su(2) are stored as `quaternion_index * 3 + lie_index`.
//! * Form fibers put the 0-form (or the first frame direction) first, so
//!   frame element `k = j * lie_dim + alpha` is `I_j (x) t_alpha` with
//!   `I_0 = 1, I_1 = i, I_2 = j, I_3 = k`.

use std::fmt;
use std::str::FromStr;

use clifford_core::quaternion::{conj, left_matrix, right_matrix, I, UNITS};
use clifford_core::CliffordModel;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseId {
    I,
    II,
    III,
    IV,
}

impl CaseId {
    pub const ALL: [CaseId; 4] = [CaseId::I, CaseId::II, CaseId::III, CaseId::IV];
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CaseId::I => "I",
            CaseId::II => "II",
            CaseId::III => "III",
            CaseId::IV => "IV",
        };
        f.write_str(s)
    }
}

impl FromStr for CaseId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "I" | "1" => Ok(CaseId::I),
            "II" | "2" => Ok(CaseId::II),
            "III" | "3" => Ok(CaseId::III),
            "IV" | "4" => Ok(CaseId::IV),
            other => Err(format!("unknown case '{other}' (expected I, II, III or IV)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    U1,
    SU2,
}

#[derive(Debug, Clone)]
pub struct SWCaseData {
    pub case_id: CaseId,
    pub group: Group,
    pub base_dim: usize,
    pub spinor_dim: usize,
    pub form_dim: usize,
    /// Adjoint matrices of the orthonormal Lie basis. U(1) has the single
    /// 1x1 zero matrix.
    pub lie_basis: Vec<DMatrix<f64>>,
    /// `frame[k]` is gamma(I_j (x) t_alpha) acting on the spinor fiber.
    pub frame: Vec<DMatrix<f64>>,
    /// Spinor symbol rho(e^j).
    pub rho: Vec<DMatrix<f64>>,
    /// Form symbol cl(e^j).
    pub cl: Vec<DMatrix<f64>>,
}

fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

fn eye(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n)
}

/// Realification of a complex matrix given by its real and imaginary parts;
/// each entry z becomes the block [[Re z, -Im z], [Im z, Re z]].
pub fn realify(re: &DMatrix<f64>, im: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = re.shape();
    let mut m = DMatrix::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            m[(2 * i, 2 * j)] = re[(i, j)];
            m[(2 * i, 2 * j + 1)] = -im[(i, j)];
            m[(2 * i + 1, 2 * j)] = im[(i, j)];
            m[(2 * i + 1, 2 * j + 1)] = re[(i, j)];
        }
    }
    m
}

/// ad(t_a) with [t_1, t_2] = t_3 cyclically: `ad(t_a)[g][d] = eps(a, d, g)`.
pub fn su2_adjoint() -> Vec<DMatrix<f64>> {
    (0..3)
        .map(|a| DMatrix::from_fn(3, 3, |g, d| levi_civita(a, d, g)))
        .collect()
}

pub fn levi_civita(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Clifford multiplication on Omega^0 (+) Omega^1 of R^3, identified with H:
/// `cl(e^j)(f, a) = (a_j, -f e_j + e_j x a)`.
pub fn form_symbol_3d() -> Vec<DMatrix<f64>> {
    UNITS[1..].iter().map(|&u| -right_matrix(u)).collect()
}

fn case_one() -> SWCaseData {
    let z = DMatrix::zeros(2, 2);
    let i2 = eye(2);
    // Complex 2x2 symbols on W in the frame of the +-i eigenspaces of e^1.
    let sym = [
        (z.clone(), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])),
        (z.clone(), DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])),
        (DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]), z),
    ];
    let rho: Vec<_> = sym
        .iter()
        .map(|(re, im)| realify(&kron(re, &i2), &kron(im, &i2)))
        .collect();
    let j = realify(&DMatrix::zeros(4, 4), &eye(4));
    let mut frame = vec![j.clone()];
    frame.extend(rho.iter().map(|r| &j * r));
    SWCaseData {
        case_id: CaseId::I,
        group: Group::U1,
        base_dim: 3,
        spinor_dim: 8,
        form_dim: 4,
        lie_basis: vec![DMatrix::zeros(1, 1)],
        frame,
        rho,
        cl: form_symbol_3d(),
    }
}

fn case_two() -> SWCaseData {
    let ad = su2_adjoint();
    let i3 = eye(3);
    let cl3 = form_symbol_3d();
    let frame = UNITS
        .iter()
        .flat_map(|&u| ad.iter().map(move |a| kron(&right_matrix(u), a)))
        .collect();
    SWCaseData {
        case_id: CaseId::II,
        group: Group::SU2,
        base_dim: 3,
        spinor_dim: 12,
        form_dim: 12,
        frame,
        rho: cl3.iter().map(|c| kron(&(-c), &i3)).collect(),
        cl: cl3.iter().map(|c| kron(c, &i3)).collect(),
        lie_basis: ad,
    }
}

fn case_three() -> SWCaseData {
    let i2 = eye(2);
    let j = kron(&i2, &left_matrix(I));
    SWCaseData {
        case_id: CaseId::III,
        group: Group::U1,
        base_dim: 4,
        spinor_dim: 8,
        form_dim: 4,
        lie_basis: vec![DMatrix::zeros(1, 1)],
        frame: UNITS
            .iter()
            .map(|&u| &j * kron(&i2, &right_matrix(conj(u))))
            .collect(),
        rho: UNITS
            .iter()
            .map(|&u| kron(&i2, &right_matrix(conj(u))))
            .collect(),
        cl: UNITS.iter().map(|&u| left_matrix(conj(u))).collect(),
    }
}

fn case_four() -> SWCaseData {
    let ad = su2_adjoint();
    let i3 = eye(3);
    let frame = UNITS
        .iter()
        .flat_map(|&u| ad.iter().map(move |a| kron(&right_matrix(conj(u)), a)))
        .collect();
    SWCaseData {
        case_id: CaseId::IV,
        group: Group::SU2,
        base_dim: 4,
        spinor_dim: 12,
        form_dim: 12,
        frame,
        rho: UNITS
            .iter()
            .map(|&u| kron(&right_matrix(conj(u)), &i3))
            .collect(),
        cl: UNITS
            .iter()
            .map(|&u| kron(&left_matrix(conj(u)), &i3))
            .collect(),
        lie_basis: ad,
    }
}

impl SWCaseData {
    pub fn new(case_id: CaseId) -> Self {
        match case_id {
            CaseId::I => case_one(),
            CaseId::II => case_two(),
            CaseId::III => case_three(),
            CaseId::IV => case_four(),
        }
    }

    pub fn fiber_dim(&self) -> usize {
        self.spinor_dim + self.form_dim
    }

    pub fn lie_dim(&self) -> usize {
        self.lie_basis.len()
    }

    /// sigma = rho (+) cl on the full fiber. In dimension 3 this is a
    /// Clifford module; in dimension 4 it is the chiral half S+ -> S-.
    pub fn symbol_model(&self) -> CliffordModel {
        let (s, f) = (self.spinor_dim, self.form_dim);
        let gamma = self
            .rho
            .iter()
            .zip(&self.cl)
            .map(|(r, c)| {
                let mut m = DMatrix::zeros(s + f, s + f);
                m.view_mut((0, 0), (s, s)).copy_from(r);
                m.view_mut((s, s), (f, f)).copy_from(c);
                m
            })
            .collect();
        CliffordModel::from_gammas(gamma, None).expect("square blocks")
    }

    pub fn rho_of(&self, xi: &[f64]) -> DMatrix<f64> {
        combine(&self.rho, xi, self.spinor_dim)
    }

    pub fn cl_of(&self, xi: &[f64]) -> DMatrix<f64> {
        combine(&self.cl, xi, self.form_dim)
    }

    /// A unit spinor in the fixed lift of the zero set of the moment map.
    pub fn lifted_unit_spinor(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.spinor_dim);
        match self.case_id {
            CaseId::I | CaseId::III => {
                // alpha = (1, 0), beta = (0, 1), normalized.
                let s = std::f64::consts::FRAC_1_SQRT_2;
                v[0] = s;
                v[6] = s;
            }
            CaseId::II | CaseId::IV => {
                // t_1 (x) e^1.
                v[3] = 1.0;
            }
        }
        v
    }

    /// Copy of the data with the sign of one frame element flipped, used as a
    /// negative control for the identity checks.
    pub fn corrupted(&self) -> Self {
        let mut d = self.clone();
        let k = d.lie_dim();
        d.frame[k] = -&d.frame[k];
        d
    }
}

fn combine(mats: &[DMatrix<f64>], xi: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for (x, g) in xi.iter().zip(mats) {
        m += g * *x;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use clifford_core::clifford_defect;

    #[test]
    fn three_dim_symbols_are_clifford() {
        for case in [CaseId::I, CaseId::II] {
            let d = SWCaseData::new(case);
            assert_eq!(clifford_defect(&d.symbol_model()), 0.0, "case {case}");
        }
    }

    #[test]
    fn spinor_orientation_is_plus_identity() {
        for case in [CaseId::I, CaseId::II] {
            let d = SWCaseData::new(case);
            let p = &d.rho[0] * &d.rho[1] * &d.rho[2];
            assert_eq!(p, eye(d.spinor_dim));
        }
        let cl = form_symbol_3d();
        assert_eq!(&cl[0] * &cl[1] * &cl[2], -eye(4));
    }

    #[test]
    fn form_symbol_matches_cross_product_formula() {
        let cl = form_symbol_3d();
        for j in 0..3 {
            for c in 0..4 {
                let (f, a) = if c == 0 {
                    (1.0, [0.0; 3])
                } else {
                    let mut a = [0.0; 3];
                    a[c - 1] = 1.0;
                    (0.0, a)
                };
                let mut e = [0.0; 3];
                e[j] = 1.0;
                let cross = [
                    e[1] * a[2] - e[2] * a[1],
                    e[2] * a[0] - e[0] * a[2],
                    e[0] * a[1] - e[1] * a[0],
                ];
                let want = [a[j], -f * e[0] + cross[0], -f * e[1] + cross[1], -f * e[2] + cross[2]];
                for r in 0..4 {
                    assert_eq!(cl[j][(r, c)], want[r]);
                }
            }
        }
    }

    #[test]
    fn four_dim_chiral_symbols() {
        for case in [CaseId::III, CaseId::IV] {
            let d = SWCaseData::new(case);
            for (mats, n) in [(&d.rho, d.spinor_dim), (&d.cl, d.form_dim)] {
                for i in 0..4 {
                    for j in 0..4 {
                        let m = mats[i].transpose() * &mats[j] + mats[j].transpose() * &mats[i];
                        let want = if i == j { eye(n) * 2.0 } else { DMatrix::zeros(n, n) };
                        assert_eq!(m, want);
                    }
                }
            }
        }
    }

    #[test]
    fn su2_brackets() {
        let ad = su2_adjoint();
        let comm = &ad[0] * &ad[1] - &ad[1] * &ad[0];
        assert_eq!(comm, ad[2]);
        let t2 = DVector::from_row_slice(&[0.0, 1.0, 0.0]);
        assert_eq!(&ad[0] * t2, DVector::from_row_slice(&[0.0, 0.0, 1.0]));
    }

    #[test]
    fn frames_are_skew_except_identity_direction() {
        for case in CaseId::ALL {
            let d = SWCaseData::new(case);
            assert_eq!(d.frame.len(), d.form_dim);
            for (k, g) in d.frame.iter().enumerate() {
                let skew = (g + g.transpose()).amax() == 0.0;
                let sym = (g - g.transpose()).amax() == 0.0;
                if k < d.lie_dim() {
                    assert!(skew, "case {case} frame {k}");
                } else {
                    assert!(sym, "case {case} frame {k}");
                }
            }
        }
    }

    #[test]
    fn case_id_round_trip() {
        for c in CaseId::ALL {
            assert_eq!(c.to_string().parse::<CaseId>().unwrap(), c);
        }
        assert!("V".parse::<CaseId>().is_err());
    }
}
