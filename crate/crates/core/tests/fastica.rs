use tsica_core::duality::{center_columns, reduce_and_whiten, Orientation};
use tsica_core::fastica::*;
use tsica_core::rng::Rng;
use tsica_core::Matrix;

/// Three non-Gaussian sources mixed into five observed signals.
fn mixtures(n: usize) -> (Matrix, Vec<Vec<f64>>) {
    let mut rng = Rng::new(42);
    let sources: Vec<Vec<f64>> = vec![
        (0..n).map(|t| if (t / 25) % 2 == 0 { 1.0 } else { -1.0 }).collect(),
        (0..n).map(|_| rng.uniform() * 2.0 - 1.0).collect(),
        (0..n).map(|t| (t as f64 * 0.05).sin().powi(3)).collect(),
    ];
    let mix = [[1.0, 0.5, -0.3], [0.2, 1.0, 0.4], [-0.6, 0.3, 1.0], [0.7, -0.2, 0.1], [0.1, 0.9, -0.8]];
    let mut x = Matrix::zeros(n, 5);
    for t in 0..n {
        for (j, row) in mix.iter().enumerate() {
            x[(t, j)] = row.iter().zip(&sources).map(|(a, s)| a * s[t]).sum();
        }
    }
    (x, sources)
}

fn abs_corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let da: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let db: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    (num / (da * db).sqrt()).abs()
}

fn separate(scheme: Scheme) -> (UnmixingMatrix, Sources, Vec<Vec<f64>>) {
    let (x, truth) = mixtures(2000);
    let centered = center_columns(x, false, Orientation::Spatial).unwrap();
    let (z, _) = reduce_and_whiten(&centered, 3).unwrap();
    let cfg = FastIcaConfig {
        seed: 3,
        scheme,
        ..Default::default()
    };
    let w = fastica_kurtosis(&z, &cfg).unwrap();
    let s = extract_sources(&z, &w.w).unwrap();
    (w, s, truth)
}

#[test]
fn both_schemes_recover_the_sources() {
    for scheme in [Scheme::Deflation, Scheme::Symmetric] {
        let (w, s, truth) = separate(scheme);
        assert!(w.convergence.all_converged());
        for source in &truth {
            let best = (0..3).map(|k| abs_corr(&s.s.column(k), source)).fold(0.0, f64::max);
            assert!(best > 0.99, "{scheme:?}: best |corr| {best}");
        }
        let wwt = w.w.matmul_t(&w.w).unwrap();
        assert!(wwt.max_abs_diff(&Matrix::identity(3)) < 1e-9);
    }
}

#[test]
fn unwhitened_input_is_rejected() {
    let (x, _) = mixtures(200);
    let centered = center_columns(x, false, Orientation::Spatial).unwrap();
    let (mut z, _) = reduce_and_whiten(&centered, 3).unwrap();
    z.z.scale(2.0);
    assert!(matches!(
        fastica_kurtosis(&z, &FastIcaConfig::default()),
        Err(tsica_core::Error::NotWhitened { .. })
    ));
}

#[test]
fn seed_fixes_the_result() {
    let (a, _, _) = separate(Scheme::Deflation);
    let (b, _, _) = separate(Scheme::Deflation);
    assert_eq!(a.w, b.w);
}
