use manifold_rbf::linalg::{spd_log, Matrix};
use manifold_rbf::sample::{gaussian_symmetric, random_orthogonal, random_spd};
use manifold_rbf::spd::{self, SpdMatrix, SpdMetric};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const METRICS: [SpdMetric; 4] = [
    SpdMetric::LogEuclidean,
    SpdMetric::AffineInvariant,
    SpdMetric::Cholesky,
    SpdMetric::PowerEuclidean { alpha: 0.5 },
];

#[test]
fn metric_axioms_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for metric in METRICS {
        for _ in 0..100 {
            let [x, y, z] = [0; 3].map(|_| random_spd(&mut rng, 3));
            let dxy = spd::distance(metric, &x, &y).unwrap();
            let dyx = spd::distance(metric, &y, &x).unwrap();
            let dxz = spd::distance(metric, &x, &z).unwrap();
            let dzy = spd::distance(metric, &z, &y).unwrap();
            assert!(dxy >= 0.0);
            assert!(spd::distance(metric, &x, &x).unwrap() < 1e-9);
            assert!((dxy - dyx).abs() <= 1e-9 * dxy.max(1.0), "{metric}");
            assert!(dxy <= dxz + dzy + 1e-9 * dxy.max(1.0), "{metric}");
        }
    }
}

#[test]
fn root_stein_is_symmetric_and_nonnegative() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..100 {
        let x = random_spd(&mut rng, 4);
        let y = random_spd(&mut rng, 4);
        let d = spd::distance(SpdMetric::RootStein, &x, &y).unwrap();
        assert!(d >= 0.0);
        assert!((d - spd::distance(SpdMetric::RootStein, &y, &x).unwrap()).abs() < 1e-9);
        assert!(spd::distance(SpdMetric::RootStein, &x, &x).unwrap() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn affine_invariant_distance_is_congruence_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_spd(&mut rng, 3);
        let y = random_spd(&mut rng, 3);
        // Well-conditioned invertible A.
        let a = random_orthogonal(&mut rng, 3) * SpdMatrix::exp_of(&(gaussian_symmetric(&mut rng, 3) * 0.3)).unwrap().as_matrix();
        let before = spd::distance(SpdMetric::AffineInvariant, &x, &y).unwrap();
        let after = spd::distance(
            SpdMetric::AffineInvariant,
            &x.congruence(&a).unwrap(),
            &y.congruence(&a).unwrap(),
        ).unwrap();
        prop_assert!((before - after).abs() < 1e-7 * before.max(1.0));
    }

    #[test]
    fn log_euclidean_distance_is_rotation_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_spd(&mut rng, 4);
        let y = random_spd(&mut rng, 4);
        let q = random_orthogonal(&mut rng, 4);
        let before = spd::distance(SpdMetric::LogEuclidean, &x, &y).unwrap();
        let after = spd::distance(
            SpdMetric::LogEuclidean,
            &x.congruence(&q).unwrap(),
            &y.congruence(&q).unwrap(),
        ).unwrap();
        prop_assert!((before - after).abs() < 1e-9 * before.max(1.0));
    }

    #[test]
    fn log_euclidean_mean_is_a_local_minimum(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<SpdMatrix> = (0..6).map(|_| random_spd(&mut rng, 3)).collect();
        let mean = spd::karcher_mean_log_euclidean(&pts).unwrap();
        let objective = |m: &SpdMatrix| -> f64 {
            pts.iter().map(|p| spd::distance(SpdMetric::LogEuclidean, m, p).unwrap().powi(2)).sum()
        };
        let base = objective(&mean);
        for _ in 0..20 {
            let dir = gaussian_symmetric(&mut rng, 3);
            let dir = &dir / dir.norm();
            let moved = SpdMatrix::exp_of(&(mean.log() + dir * 1e-4)).unwrap();
            prop_assert!(objective(&moved) >= base - 1e-12);
        }
    }
}

/// Gradient descent on `Σ d²_LE(exp(A), Xᵢ)` with finite-difference
/// gradients, independent of the closed form.
fn descent_mean(points: &[SpdMatrix]) -> Matrix {
    let d = points[0].dim();
    let objective = |a: &Matrix| -> f64 {
        let m = SpdMatrix::exp_of(a).unwrap();
        points
            .iter()
            .map(|p| {
                spd::distance(SpdMetric::LogEuclidean, &m, p)
                    .unwrap()
                    .powi(2)
            })
            .sum()
    };
    let mut a = Matrix::zeros(d, d);
    let h = 1e-4;
    for _ in 0..200 {
        let mut grad = Matrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let mut e = Matrix::zeros(d, d);
                e[(i, j)] = 1.0;
                e[(j, i)] = 1.0;
                let g = (objective(&(&a + &e * h)) - objective(&(&a - &e * h))) / (2.0 * h);
                let scale = if i == j { 1.0 } else { 0.5 };
                grad[(i, j)] = g * scale;
                grad[(j, i)] = g * scale;
            }
        }
        if grad.norm() < 1e-11 {
            break;
        }
        a -= grad / (2.0 * points.len() as f64);
    }
    SpdMatrix::exp_of(&a).unwrap().into_matrix()
}

#[test]
fn closed_form_mean_matches_descent_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let pts: Vec<SpdMatrix> = (0..10).map(|_| random_spd(&mut rng, 3)).collect();
        let closed = spd::karcher_mean_log_euclidean(&pts).unwrap();
        let iterative =
            spd::karcher_mean_iterative(SpdMetric::LogEuclidean, &pts, 100, 1e-12).unwrap();
        let oracle = descent_mean(&pts);
        assert!((closed.as_matrix() - &oracle).norm() < 1e-8);
        assert!((iterative.as_matrix() - &oracle).norm() < 1e-8);
    }
}

#[test]
fn affine_invariant_mean_has_vanishing_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..5 {
        let pts: Vec<SpdMatrix> = (0..8).map(|_| random_spd(&mut rng, 3)).collect();
        let mean =
            spd::karcher_mean_iterative(SpdMetric::AffineInvariant, &pts, 500, 1e-10).unwrap();
        assert!(spd::affine_invariant_tangent_mean(&mean, &pts).norm() < 1e-7);
        // The mean of commuting matrices is their geometric mean.
        let a = SpdMatrix::from_diagonal(&[1.0, 4.0]).unwrap();
        let b = SpdMatrix::from_diagonal(&[4.0, 1.0]).unwrap();
        let m =
            spd::karcher_mean_iterative(SpdMetric::AffineInvariant, &[a, b], 100, 1e-12).unwrap();
        assert!((m.as_matrix() - Matrix::identity(2, 2) * 2.0).norm() < 1e-10);
    }
}

#[test]
fn log_of_mean_is_mean_of_logs() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let pts: Vec<SpdMatrix> = (0..4).map(|_| random_spd(&mut rng, 2)).collect();
    let mean = spd::karcher_mean_log_euclidean(&pts).unwrap();
    let avg = pts
        .iter()
        .map(|p| spd_log(p.as_matrix()).unwrap())
        .fold(Matrix::zeros(2, 2), |a, b| a + b)
        / 4.0;
    assert!((mean.log() - avg).norm() < 1e-10);
}
