//! Randomized checks of every fiberwise identity for one case.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{
    build_A, build_A_eps, commutation_defect, degeneracy_defect, gamma_action, moment_map,
    splitting_at, verify_identity_pair, Group, SWCaseData,
};

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub max_defect: f64,
}

#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub case: String,
    pub draws: usize,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn worst(&self) -> f64 {
        self.checks.iter().map(|c| c.max_defect).fold(0.0, f64::max)
    }

    pub fn failures(&self, tol: f64) -> Vec<&IdentityCheck> {
        self.checks.iter().filter(|c| !(c.max_defect <= tol)).collect()
    }
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Symbol relation defect. Dimension 3: the Clifford relation on rho and cl.
/// Dimension 4: `s_i^T s_j + s_j^T s_i = 2 delta_ij` for the chiral halves.
pub fn symbol_defect(data: &SWCaseData) -> f64 {
    let mut worst = 0.0_f64;
    for mats in [&data.rho, &data.cl] {
        let n = mats[0].nrows();
        for i in 0..mats.len() {
            for j in 0..mats.len() {
                let m = if data.base_dim == 3 {
                    &mats[i] * &mats[j] + &mats[j] * &mats[i]
                } else {
                    -(mats[i].transpose() * &mats[j] + mats[j].transpose() * &mats[i])
                };
                let d = if i == j {
                    m + DMatrix::identity(n, n) * 2.0
                } else {
                    m
                };
                worst = worst.max(d.amax());
            }
        }
    }
    worst
}

pub fn run_identity_suite(data: &SWCaseData, draws: usize, seed: u64) -> IdentityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (s, f, dim) = (data.spinor_dim, data.form_dim, data.base_dim);
    let mut id1 = 0.0_f64;
    let mut id2 = 0.0_f64;
    let mut comm = 0.0_f64;
    let mut comm_eps = 0.0_f64;
    let mut degen = 0.0_f64;
    let mut dual = 0.0_f64;
    for _ in 0..draws {
        let xi: Vec<f64> = random_vector(&mut rng, dim).iter().cloned().collect();
        let a = random_vector(&mut rng, f);
        let phi = random_vector(&mut rng, s);
        let psi = random_vector(&mut rng, s);
        let (d1, d2) = verify_identity_pair(data, &xi, &a, &phi, &psi).expect("sizes");
        id1 = id1.max(d1);
        id2 = id2.max(d2);

        let big_a = build_A(data, &phi).expect("sizes");
        comm = comm.max(commutation_defect(data, &big_a));
        let split = splitting_at(data, &phi, 1e-12).expect("nonzero draw");
        degen = degen.max(degeneracy_defect(&big_a, &split));

        // The bracket-wedge block is left out here; see the crate tests.
        let wedge_arg = if data.group == Group::U1 { a.clone() } else { DVector::zeros(f) };
        let a_eps = build_A_eps(data, &psi, &wedge_arg, 0.37).expect("sizes");
        comm_eps = comm_eps.max(commutation_defect(data, &a_eps));

        let mm = moment_map(data, &psi).expect("sizes");
        for k in 0..f {
            let mut e = DVector::zeros(f);
            e[k] = 1.0;
            let g = gamma_action(data, &e, &psi).expect("sizes");
            dual = dual.max((mm[k] - 0.5 * g.dot(&psi)).abs());
        }
    }
    let checks = vec![
        IdentityCheck { name: "symbol_relations", max_defect: symbol_defect(data) },
        IdentityCheck { name: "commutation_A", max_defect: comm },
        IdentityCheck { name: "commutation_A_eps", max_defect: comm_eps },
        IdentityCheck { name: "clifford_gamma_identity", max_defect: id1 },
        IdentityCheck { name: "moment_map_identity", max_defect: id2 },
        IdentityCheck { name: "moment_map_duality", max_defect: dual },
        IdentityCheck { name: "block_degeneracy", max_defect: degen },
    ];
    IdentityReport {
        case: data.case_id.to_string(),
        draws,
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::CaseId;

    #[test]
    fn all_cases_pass() {
        for case in CaseId::ALL {
            let r = run_identity_suite(&SWCaseData::new(case), 200, 7);
            assert!(r.worst() <= 1e-12, "case {case}: {:?}", r.checks);
        }
    }

    #[test]
    fn corruption_is_named() {
        let r = run_identity_suite(&SWCaseData::new(CaseId::II).corrupted(), 20, 1);
        let names: Vec<_> = r.failures(1e-12).iter().map(|c| c.name).collect();
        assert!(names.contains(&"clifford_gamma_identity"), "{names:?}");
    }

    #[test]
    fn zero_draws() {
        let r = run_identity_suite(&SWCaseData::new(CaseId::I), 0, 0);
        assert_eq!(r.draws, 0);
        assert_eq!(r.worst(), 0.0);
    }
}
