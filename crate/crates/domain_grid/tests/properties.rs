use domain_grid::*;
use proptest::prelude::*;

proptest! {
    #[test]
    fn tube_distance_matches_formula(half in 4usize..12, l in 0.5f64..8.0, node_frac in 0.0f64..1.0) {
        let n = 2 * half;
        let d = make_domain(&DomainSpec::torus([n; 3], [l; 3], SingularSet::Tube { axis: 2 })).unwrap();
        let node = ((d.node_count() - 1) as f64 * node_frac) as usize;
        let x = d.coord(node);
        let want = (x[0] * x[0] + x[1] * x[1]).sqrt();
        prop_assert!((d.dist_field[node] - want).abs() <= 1e-12);
        prop_assert!(d.dist_field[node] > 0.0);
    }

    #[test]
    fn odd_transverse_counts_are_rejected(half in 4usize..12) {
        let n = 2 * half + 1;
        let tube = DomainSpec::torus([n, n, 8], [1.0; 3], SingularSet::Tube { axis: 2 });
        let rejected = matches!(make_domain(&tube), Err(DomainError::OddTransverseCells { .. }));
        prop_assert!(rejected);
        let along = DomainSpec::torus([8, 8, n], [1.0; 3], SingularSet::Tube { axis: 2 });
        prop_assert!(make_domain(&along).is_ok());
    }

    #[test]
    fn index_round_trip(n0 in 8usize..12, n1 in 8usize..12, n2 in 8usize..12, k in 0usize..1728) {
        let d = make_domain(&DomainSpec::torus([n0, n1, n2], [1.0, 2.0, 3.0], SingularSet::None)).unwrap();
        let node = k % d.node_count();
        prop_assert_eq!(d.node(&d.multi_index(node)), node);
        for axis in 0..3 {
            let f = d.neighbor(node, axis, true).unwrap();
            prop_assert_eq!(d.neighbor(f, axis, false), Some(node));
        }
    }

    #[test]
    fn bump_is_positive(a in 0.0f64..0.99, k in 0usize..512) {
        let d = make_domain(&DomainSpec::torus([8; 3], [2.0; 3], SingularSet::None)).unwrap();
        let m = BaseSpinorProfile::SmoothBump { amplitude: a }.magnitude(&d, k);
        prop_assert!(m > 0.0);
    }
}
