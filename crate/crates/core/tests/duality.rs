use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use tsica_core::duality::*;
use tsica_core::exec::Sequential;
use tsica_core::rng::Rng;
use tsica_core::Matrix;

fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = Rng::new(seed);
    let mut m = Matrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = (1.0 + i as f64) * rng.normal();
        }
    }
    m
}

fn dense_covariance_spectrum(x: &Matrix) -> Vec<f64> {
    let (n, p) = x.shape();
    let d = DMatrix::from_fn(n, p, |i, j| x[(i, j)]);
    let means = d.row_mean();
    let c = DMatrix::from_fn(n, p, |i, j| d[(i, j)] - means[j]);
    let cov = c.transpose() * &c / n as f64;
    let mut values: Vec<f64> = SymmetricEigen::new(cov).eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

#[test]
fn lifted_vectors_are_orthonormal_eigenvectors() {
    let x = random(6, 80, 11);
    let centered = center_columns(x, false, Orientation::Temporal).unwrap();
    let gram = gram_eigens(centered.values(), DEFAULT_GRAM_CAP).unwrap();
    let dual = lift_eigenvectors(centered.values(), &gram, DEFAULT_RANK_EPS).unwrap();
    assert_eq!(dual.rank(), 5);
    let f = &dual.lifted_vectors;
    let ftf = f.t_matmul(f).unwrap();
    assert!(ftf.max_abs_diff(&Matrix::identity(5)) < 1e-12);
    // C f = λ f with C applied as Ẋᵀ(Ẋ f)/n, never formed.
    let xf = centered.values().matmul(f).unwrap();
    let cf = centered.values().t_matmul(&xf).unwrap();
    for k in 0..5 {
        for j in 0..80 {
            let want = dual.eigenvalues[k] * f[(j, k)];
            assert!((cf[(j, k)] / 6.0 - want).abs() < 1e-10);
        }
    }
}

#[test]
fn kaiser_rule_counts_eigenvalues_above_one() {
    assert_eq!(select_component_count(&[3.0, 1.5, 1.0, 0.2], ComponentCount::Auto).unwrap(), 2);
    assert!(select_component_count(&[0.9, 0.5], ComponentCount::Auto).is_err());
    assert_eq!(select_component_count(&[3.0, 1.0, 0.0], ComponentCount::Fixed(5)).unwrap(), 2);
}

#[test]
fn correlation_spectrum_sums_to_dimension() {
    let x = random(7, 50, 5);
    let s = row_correlation_spectrum(&x, &Sequential).unwrap();
    assert_eq!(s.len(), 7);
    assert!((s.iter().sum::<f64>() - 7.0).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gram_route_matches_dense_covariance(t in 3usize..9, v in 10usize..60, seed in any::<u64>()) {
        let x = random(t, v, seed);
        let want = dense_covariance_spectrum(&x);
        let centered = center_columns(x, false, Orientation::Temporal).unwrap();
        let (_, values, _) = principal_axes(&centered, None, DEFAULT_RANK_EPS, &Sequential).unwrap();
        prop_assert_eq!(values.len(), t - 1);
        for (k, got) in values.iter().enumerate() {
            prop_assert!((got - want[k]).abs() <= 1e-9 * want[0]);
        }
    }

    #[test]
    fn whitened_data_has_identity_covariance(t in 5usize..10, v in 20usize..80, seed in any::<u64>()) {
        let x = random(t, v, seed);
        let centered = center_columns(x, false, Orientation::Temporal).unwrap();
        let m = t - 2;
        let (z, basis) = reduce_and_whiten(&centered, m).unwrap();
        prop_assert_eq!(basis.count(), m);
        prop_assert!(z.whiteness_error() < 1e-9);
    }
}
