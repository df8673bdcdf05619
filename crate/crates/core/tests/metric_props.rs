use nalgebra::DMatrix;
use proptest::prelude::*;

use liespec::liealg::killing_form;
use liespec::metric::{is_naturally_reductive_split, nr_metric, scale_metric};
use liespec::{berger_metric, milnor_metric, su2, Error, Metric, Subspace};

#[test]
fn round_metric_is_minus_one_eighth_killing() {
    let b = killing_form(&su2());
    let want = b.matrix() * (-1.0 / 8.0);
    assert_eq!(*milnor_metric(1.0, 1.0, 1.0).unwrap().gram(), want);
}

#[test]
fn nr_metric_with_torus_isotropy_is_a_scaled_berger_metric() {
    let alg = su2();
    let k = Subspace::coordinate(3, &[0]).unwrap();
    for (alpha, beta) in [(1.0, 1.0), (1.0, 0.01), (2.5, 7.0)] {
        let h = DMatrix::from_element(1, 1, 8.0 * beta);
        let g = nr_metric(&alg, &k, &h, alpha).unwrap();
        let want = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![8.0 * beta, 8.0 * alpha, 8.0 * alpha]));
        assert!((g.gram() - &want).norm() < 1e-12);
        let m = milnor_metric((8.0 * beta).sqrt(), (8.0 * alpha).sqrt(), (8.0 * alpha).sqrt()).unwrap();
        assert!((g.gram() - m.gram()).norm() < 1e-12);
        let berger = scale_metric(&berger_metric(alpha, beta).unwrap(), 8.0).unwrap();
        assert!((g.gram() - berger.gram()).norm() < 1e-12);
    }
}

#[test]
fn torus_split_is_naturally_reductive_only_for_isotropic_p() {
    let alg = su2();
    let k = Subspace::coordinate(3, &[0]).unwrap();
    let p = Subspace::coordinate(3, &[1, 2]).unwrap();
    let iso = Metric::new(DMatrix::identity(2, 2) * 3.0).unwrap();
    assert!(is_naturally_reductive_split(&alg, &k, &p, &iso).unwrap());
    let aniso = Metric::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0]))).unwrap();
    assert!(!is_naturally_reductive_split(&alg, &k, &p, &aniso).unwrap());
}

#[test]
fn invalid_metrics_are_rejected() {
    assert!(matches!(milnor_metric(0.0, 1.0, 1.0), Err(Error::Input(_))));
    assert!(berger_metric(-1.0, 1.0).is_err());
    assert!(Metric::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0])).is_err());
    assert!(Metric::from_json(r#"{"gram": [[1, 0], [0, -1]]}"#).is_err());
    assert!(scale_metric(&milnor_metric(1.0, 1.0, 1.0).unwrap(), 0.0).is_err());
}

fn spd3() -> impl Strategy<Value = DMatrix<f64>> {
    (prop::array::uniform9(-1.0f64..1.0), 0.05f64..2.0).prop_map(|(a, shift)| {
        let a = DMatrix::from_row_slice(3, 3, &a);
        &a * a.transpose() + DMatrix::identity(3, 3) * shift
    })
}

proptest! {
    #[test]
    fn json_round_trip_preserves_gram(m in spd3()) {
        let g = Metric::new(m).unwrap();
        let back = Metric::from_json(&g.to_json()).unwrap();
        prop_assert_eq!(back.gram(), g.gram());
    }

    #[test]
    fn inverse_and_extreme_eigenvalues_are_consistent(m in spd3()) {
        let g = Metric::new(m.clone()).unwrap();
        prop_assert!((g.gram() * g.inverse() - DMatrix::identity(3, 3)).norm() < 1e-9 * (1.0 + g.lambda_max() / g.lambda_min()));
        let eig = m.symmetric_eigenvalues();
        prop_assert!((eig.min() - g.lambda_min()).abs() < 1e-10 * g.lambda_max());
        prop_assert!((eig.max() - g.lambda_max()).abs() < 1e-10 * g.lambda_max());
    }

    #[test]
    fn scaling_multiplies_the_gram(m in spd3(), c in 0.01f64..100.0) {
        let g = Metric::new(m).unwrap();
        let s = scale_metric(&g, c).unwrap();
        prop_assert!((s.gram() - g.gram() * c).norm() <= 1e-12 * c * g.gram().norm());
        prop_assert!((s.lambda_min() / g.lambda_min() / c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn berger_is_milnor_with_swapped_roles(alpha in 0.01f64..100.0, beta in 0.01f64..100.0) {
        let b = berger_metric(alpha, beta).unwrap();
        let m = milnor_metric(beta.sqrt(), alpha.sqrt(), alpha.sqrt()).unwrap();
        prop_assert!((b.gram() - m.gram()).norm() <= 1e-12 * (alpha + beta));
    }
}
