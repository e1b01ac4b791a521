use manifold_rbf::grassmann::{self, GrassmannMetric, GrassmannPoint};
use manifold_rbf::kernel::{
    cnd_check, gaussian_from_sq_dist, psd_check, squared_distance_matrix, Manifold, Point,
    SearchDomain,
};
use manifold_rbf::linalg::Matrix;
use manifold_rbf::sample::{random_grassmann, random_orthogonal};
use manifold_rbf::SpdMetric;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distances_ignore_the_choice_of_basis(seed in any::<u64>(), r in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_grassmann(&mut rng, 7, r);
        let b = random_grassmann(&mut rng, 7, r);
        let a2 = a.rotate(&random_orthogonal(&mut rng, r)).unwrap();
        let b2 = b.rotate(&random_orthogonal(&mut rng, r)).unwrap();
        for metric in GrassmannMetric::ALL {
            let d1 = grassmann::distance(metric, &a, &b).unwrap();
            let d2 = grassmann::distance(metric, &a2, &b2).unwrap();
            prop_assert!((d1 - d2).abs() < 1e-9, "{metric}: {d1} vs {d2}");
        }
    }

    #[test]
    fn fast_projection_identity(seed in any::<u64>(), r in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_grassmann(&mut rng, 12, r);
        let b = random_grassmann(&mut rng, 12, r);
        let fast = grassmann::projection_dist_sq_fast(&a, &b).unwrap();
        let proj = 0.5 * (a.projector() - b.projector()).norm_squared();
        let sines: f64 = grassmann::principal_angles(&a, &b).unwrap().iter().map(|t| t.sin().powi(2)).sum();
        prop_assert!((fast - proj).abs() < 1e-9);
        prop_assert!((fast - sines).abs() < 1e-9);
    }

    #[test]
    fn principal_angles_lie_in_range(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_grassmann(&mut rng, 6, 3);
        let b = random_grassmann(&mut rng, 6, 3);
        let angles = grassmann::principal_angles(&a, &b).unwrap();
        prop_assert!(angles.iter().all(|t| (0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(t)));
        prop_assert!(angles.windows(2).all(|w| w[0] <= w[1] + 1e-12));
    }
}

#[test]
fn grassmann_metric_axioms() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for metric in GrassmannMetric::ALL {
        for _ in 0..100 {
            let [x, y, z] = [0; 3].map(|_| random_grassmann(&mut rng, 5, 2));
            let dxy = grassmann::distance(metric, &x, &y).unwrap();
            assert!(dxy >= 0.0);
            assert!(grassmann::distance(metric, &x, &x).unwrap() < 1e-7);
            assert!((dxy - grassmann::distance(metric, &y, &x).unwrap()).abs() < 1e-9);
            let via = grassmann::distance(metric, &x, &z).unwrap()
                + grassmann::distance(metric, &z, &y).unwrap();
            assert!(dxy <= via + 1e-9, "{metric}");
        }
    }
}

#[test]
fn identical_subspaces_have_zero_distance() {
    let a = GrassmannPoint::new(&Matrix::from_row_slice(3, 1, &[1.0, 2.0, 2.0])).unwrap();
    let b = GrassmannPoint::new(&Matrix::from_row_slice(3, 1, &[-2.0, -4.0, -4.0])).unwrap();
    for metric in GrassmannMetric::ALL {
        assert!(
            grassmann::distance(metric, &a, &b).unwrap() < 1e-7,
            "{metric}"
        );
    }
}

/// For each metric with a positive definite Gaussian kernel, negative
/// definiteness of `d²` and positive semi-definiteness of every Gram matrix
/// must agree.
#[test]
fn squared_distance_and_gram_definiteness_agree() {
    let domains = [
        SearchDomain::spd(SpdMetric::LogEuclidean, 3),
        SearchDomain::spd(SpdMetric::Cholesky, 3),
        SearchDomain::spd(SpdMetric::PowerEuclidean { alpha: 0.5 }, 3),
        SearchDomain::grassmann(GrassmannMetric::Projection, 5, 2),
    ];
    for domain in domains {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let pts: Vec<Point> = domain.sample_points(&mut rng, 20);
            let d2 = squared_distance_matrix(&domain.manifold, &pts).unwrap();
            let tol = 1e-8 * 20.0;
            let (cnd, _) = cnd_check(&d2, tol).unwrap();
            for gamma in [0.01, 0.1, 1.0, 10.0, 100.0] {
                let (psd, _) = psd_check(&gaussian_from_sq_dist(&d2, gamma), tol).unwrap();
                assert_eq!(cnd, psd, "{:?} gamma {gamma}", domain.manifold);
            }
            assert!(cnd);
        }
    }
}

#[test]
fn euclidean_manifold_compares_spd_points_entrywise() {
    use manifold_rbf::SpdMatrix;
    let a = Point::Spd(SpdMatrix::from_diagonal(&[1.0, 2.0]).unwrap());
    let b = Point::Spd(SpdMatrix::from_diagonal(&[2.0, 4.0]).unwrap());
    let d2 = squared_distance_matrix(&Manifold::Euclidean, &[a, b]).unwrap();
    assert!((d2[(0, 1)] - 5.0).abs() < 1e-12);
}
