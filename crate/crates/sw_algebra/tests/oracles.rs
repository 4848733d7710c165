//! Independent closed-form oracles for the moment maps and Clifford actions.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sw_algebra::suite::random_vector;
use sw_algebra::*;

fn cross(u: [f64; 3], v: [f64; 3]) -> [f64; 3] {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

/// Lie-algebra coefficient vector of the `j`-th 1-form component.
fn lie(v: &DVector<f64>, j: usize) -> [f64; 3] {
    [v[3 * j], v[3 * j + 1], v[3 * j + 2]]
}

/// Pure 1-form in Omega^1(su2) with 0-form part zero.
fn one_form(rng: &mut ChaCha8Rng) -> DVector<f64> {
    let mut v = random_vector(rng, 12);
    for g in 0..3 {
        v[g] = 0.0;
    }
    v
}

#[test]
fn case_one_closed_form_moment_map() {
    // 1/2 mu = ( (|b|^2 - |a|^2)/2, Re(-conj(a).b), Im(-conj(a).b) ) along i e^j,
    // where conj(a).b is the Hermitian product on C^2.
    let d = SWCaseData::new(CaseId::I);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let p = random_vector(&mut rng, 8);
        let (a1, a2) = ((p[0], p[1]), (p[2], p[3]));
        let (b1, b2) = ((p[4], p[5]), (p[6], p[7]));
        let na = a1.0 * a1.0 + a1.1 * a1.1 + a2.0 * a2.0 + a2.1 * a2.1;
        let nb = b1.0 * b1.0 + b1.1 * b1.1 + b2.0 * b2.0 + b2.1 * b2.1;
        // conj(a) b = (ar - i ai)(br + i bi)
        let re = a1.0 * b1.0 + a1.1 * b1.1 + a2.0 * b2.0 + a2.1 * b2.1;
        let im = a1.0 * b1.1 - a1.1 * b1.0 + a2.0 * b2.1 - a2.1 * b2.0;
        let want = [0.0, 0.5 * (nb - na), -re, -im];
        let got = moment_map(&d, &p).unwrap();
        for k in 0..4 {
            assert!((got[k] - want[k]).abs() < 1e-12, "{got} vs {want:?}");
        }
    }
}

#[test]
fn case_two_moment_map_is_bracket_wedge() {
    // On pure 1-forms: 1/2 mu(Psi, Psi) = -1/2 *[Psi ^ Psi], whose l-th
    // component is -sum_{p<q} eps_{pql} [Psi_p, Psi_q].
    let d = SWCaseData::new(CaseId::II);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let psi = one_form(&mut rng);
        let got = moment_map(&d, &psi).unwrap();
        let p: Vec<[f64; 3]> = (1..4).map(|j| lie(&psi, j)).collect();
        let want = [cross(p[1], p[2]), cross(p[2], p[0]), cross(p[0], p[1])];
        for g in 0..3 {
            assert!(got[g].abs() < 1e-12);
        }
        for l in 0..3 {
            for g in 0..3 {
                assert!((got[3 * (l + 1) + g] + want[l][g]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn case_two_gamma_is_bracket_clifford() {
    // gamma(a) Psi = ( -sum_j [a_j, Psi_j], -*[a ^ Psi] ) for 1-forms a, Psi.
    let d = SWCaseData::new(CaseId::II);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..200 {
        let a = one_form(&mut rng);
        let psi = one_form(&mut rng);
        let got = gamma_action(&d, &a, &psi).unwrap();
        let aa: Vec<[f64; 3]> = (1..4).map(|j| lie(&a, j)).collect();
        let pp: Vec<[f64; 3]> = (1..4).map(|j| lie(&psi, j)).collect();
        let mut want = [[0.0; 3]; 4];
        for j in 0..3 {
            let c = cross(aa[j], pp[j]);
            for g in 0..3 {
                want[0][g] -= c[g];
            }
        }
        for (l, (p, q)) in [(1, 2), (2, 0), (0, 1)].into_iter().enumerate() {
            let c1 = cross(aa[p], pp[q]);
            let c2 = cross(aa[q], pp[p]);
            for g in 0..3 {
                want[l + 1][g] -= c1[g] - c2[g];
            }
        }
        for j in 0..4 {
            for g in 0..3 {
                assert!((got[3 * j + g] - want[j][g]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn polarization_structure() {
    // The 1-form rows are symmetric in (phi, psi); the gauge rows are
    // antisymmetric because the gauge directions act skew-symmetrically.
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for case in CaseId::ALL {
        let d = SWCaseData::new(case);
        for _ in 0..100 {
            let phi = random_vector(&mut rng, d.spinor_dim);
            let psi = random_vector(&mut rng, d.spinor_dim);
            let m1 = moment_polar(&d, &phi, &psi).unwrap();
            let m2 = moment_polar(&d, &psi, &phi).unwrap();
            for k in 0..d.form_dim {
                let want = if k < d.lie_dim() { -m2[k] } else { m2[k] };
                assert!((m1[k] - want).abs() < 1e-12);
            }
            let mm = moment_map(&d, &psi).unwrap();
            let pp = moment_polar(&d, &psi, &psi).unwrap();
            assert!((pp - mm * 2.0).amax() < 1e-12);
        }
    }
}

#[test]
fn identities_over_thousand_fibers() {
    for case in CaseId::ALL {
        let r = suite::run_identity_suite(&SWCaseData::new(case), 1000, 99);
        for c in &r.checks {
            assert!(c.max_defect <= 1e-12, "case {case} {}: {:e}", c.name, c.max_defect);
        }
    }
}

#[test]
fn corrupted_gamma_negative_control() {
    let d = SWCaseData::new(CaseId::I).corrupted();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..50 {
        let xi: Vec<f64> = random_vector(&mut rng, 3).normalize().iter().cloned().collect();
        let a = random_vector(&mut rng, 4).normalize();
        let phi = random_vector(&mut rng, 8).normalize();
        let (d1, _) = verify_identity_pair(&d, &xi, &a, &phi, &phi).unwrap();
        // Flipping gamma(i e^1) changes the identity by 2 a_1 rho(xi) gamma_1 phi
        // against a cl-mixed term; it is generically of unit size.
        assert!(d1 > 0.1 || a[1].abs() < 0.05, "d1 = {d1}");
    }
}

#[test]
fn case_one_eps_blocks_are_differences() {
    let d = SWCaseData::new(CaseId::I);
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..50 {
        let phi0 = random_vector(&mut rng, 8);
        let phi = random_vector(&mut rng, 8);
        let a = random_vector(&mut rng, 4);
        let eps = 0.05;
        let diff = build_A(&d, &(&phi0 + &phi * eps)).unwrap() - build_A(&d, &phi0).unwrap();
        let got = build_A_eps(&d, &phi, &a, eps).unwrap();
        assert!((diff - got).amax() < 1e-13);
    }
}

#[test]
fn case_two_wedge_block_breaks_commutation() {
    // Recorded behavior: the bracket-wedge block is symmetric under the form
    // symbol only up to sign, so A_eps with a != 0 does not satisfy the
    // commutation identity.
    let d = SWCaseData::new(CaseId::II);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let a = random_vector(&mut rng, 12);
    let phi = random_vector(&mut rng, 12);
    let with_wedge = build_A_eps(&d, &phi, &a, 1.0).unwrap();
    let without = build_A_eps(&d, &phi, &DVector::zeros(12), 1.0).unwrap();
    assert!(commutation_defect(&d, &without) < 1e-12);
    assert!(commutation_defect(&d, &with_wedge) > 0.1);
}

fn rank_by_elimination(m: &DMatrix<f64>, tol: f64) -> usize {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let mut rank = 0;
    for c in 0..cols {
        let piv = (rank..rows).max_by(|&i, &j| a[(i, c)].abs().total_cmp(&a[(j, c)].abs()));
        let Some(p) = piv else { break };
        if a[(p, c)].abs() <= tol {
            continue;
        }
        a.swap_rows(p, rank);
        for r in 0..rows {
            if r != rank {
                let f = a[(r, c)] / a[(rank, c)];
                for k in 0..cols {
                    a[(r, k)] -= f * a[(rank, k)];
                }
            }
        }
        rank += 1;
    }
    rank
}

#[test]
fn case_two_form_kernel_rank_by_elimination() {
    let d = SWCaseData::new(CaseId::II);
    let phi0 = d.lifted_unit_spinor();
    let b = spinor_block(&d, &phi0).unwrap();
    assert_eq!(12 - rank_by_elimination(&b, 1e-12), 4);
    let s = splitting_at(&d, &phi0, 1e-9).unwrap();
    let form_rank = s.proj_n.view((12, 12), (12, 12)).trace().round() as usize;
    assert_eq!(form_rank, 4);
}

#[test]
fn case_one_gap_against_eigen_oracle() {
    let d = SWCaseData::new(CaseId::I);
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for _ in 0..20 {
        let phi0 = random_vector(&mut rng, 8);
        let a = build_A(&d, &phi0).unwrap();
        let s = splitting_at(&d, &phi0, 1e-9).unwrap();
        let ph = &s.proj_h;
        let eig = (ph * a.transpose() * &a * ph).symmetric_eigen();
        let lam = eig
            .eigenvalues
            .iter()
            .filter(|&&x| x > 1e-10)
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!((lam.sqrt() - phi0.norm()).abs() < 1e-10);
        assert!((gap_on_h(&a, &s) - phi0.norm()).abs() < 1e-10);
    }
}

#[test]
fn case_two_nilpotent_on_kernel_bundle() {
    let d = SWCaseData::new(CaseId::II);
    let s = splitting_at(&d, &d.lifted_unit_spinor(), 1e-9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..100 {
        let x = &s.proj_n * random_vector(&mut rng, 24);
        let phi_re = x.rows(0, 12).into_owned();
        let a_re = x.rows(12, 12).into_owned();
        assert!(gamma_action(&d, &a_re, &phi_re).unwrap().amax() < 1e-12);
        assert!(moment_polar(&d, &phi_re, &phi_re).unwrap().amax() < 1e-12);
    }
}
