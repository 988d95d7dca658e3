use std::f64::consts::PI;

use proptest::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use tsica_core::analysis::*;

fn fft_dominant(x: &[f64]) -> (usize, f64, f64) {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mut best = 1;
    for k in 2..=n / 2 {
        if buf[k].norm() > buf[best].norm() {
            best = k;
        }
    }
    (best, buf[best].norm(), buf[best].arg().rem_euclid(PI))
}

fn ternary(len: usize) -> impl Strategy<Value = Vec<i8>> {
    proptest::collection::vec(-1i8..=1, len)
}

#[test]
fn quantile_keeps_exactly_the_top_tenth() {
    let values: Vec<f64> = (1..=100).map(f64::from).collect();
    let q = quantile(&values, 0.9).unwrap();
    assert!((q - 90.1).abs() < 1e-12);
    assert_eq!(values.iter().filter(|&&v| v > q).count(), 10);
}

#[test]
fn dominant_bin_of_a_pure_cosine() {
    // cos(2πkt/n + φ) has DFT argument φ at bin k.
    let n = 64;
    let x: Vec<f64> = (0..n).map(|t| (2.0 * PI * 5.0 * t as f64 / n as f64 + 0.4).cos()).collect();
    let s = dominant_frequency_phase(&TimeCourse::new(x, 0.5).unwrap()).unwrap();
    assert_eq!(s.bin, 5);
    assert!((s.frequency - 5.0 / 32.0).abs() < 1e-15);
    assert!((s.phase - 0.4).abs() < 1e-12);
    assert!((s.magnitude - n as f64 / 2.0).abs() < 1e-9);
}

#[test]
fn pearson_assignment_follows_signed_references() {
    let a: Vec<f64> = (0..50).map(|t| (t as f64 * 0.3).sin()).collect();
    let b: Vec<f64> = (0..50).map(|t| ((t * t) % 7) as f64).collect();
    let comps = vec![b.iter().map(|v| -2.0 * v).collect::<Vec<_>>(), a.clone()];
    let asg = pearson_assign(&comps, &[a, b]).unwrap();
    assert!(asg.is_one_to_one());
    assert_eq!(asg.pair_for(0).unwrap().source, 1);
    assert!((asg.pair_for(0).unwrap().score + 1.0).abs() < 1e-12);
    assert_eq!(asg.pair_for(1).unwrap().source, 0);
}

#[test]
fn energy_index_prefers_the_concentrated_signal() {
    let mut sharp = vec![0.0; 40];
    sharp[3] = 1.0;
    sharp[17] = 1.0;
    let diffuse: Vec<f64> = (0..40).map(|t| 0.3 + 0.01 * (t % 3) as f64).collect();
    let e = energy_index(&diffuse, &sharp, 0.9).unwrap();
    assert!(e.e1 > e.e2 || e.e2 > e.e1);
    assert!(e.threshold > 0.0);
    let flat = vec![0.0; 40];
    assert!(energy_index(&flat, &sharp, 0.9).is_err());
}

proptest! {
    #[test]
    fn dft_matches_fft_oracle(x in proptest::collection::vec(-10.0f64..10.0, 8..96)) {
        let (bin, mag, phase) = fft_dominant(&x);
        let tc = TimeCourse::new(x, 1.0).unwrap();
        match dominant_frequency_phase(&tc) {
            Ok(s) => {
                // Near-ties may legitimately pick a different bin.
                if s.bin == bin {
                    prop_assert!((s.magnitude - mag).abs() <= 1e-9 * mag.max(1.0));
                    let d = (s.phase - phase).rem_euclid(PI);
                    prop_assert!(d.min(PI - d) < 1e-8);
                } else {
                    prop_assert!((s.magnitude - mag).abs() <= 1e-9 * mag.max(1.0));
                }
            }
            Err(_) => prop_assert!(mag <= 1e-9 * tc.len() as f64),
        }
    }

    #[test]
    fn quantile_is_monotone_and_bounded(
        x in proptest::collection::vec(-1e6f64..1e6, 1..60),
        q1 in 0.0f64..=1.0,
        q2 in 0.0f64..=1.0,
    ) {
        let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        let (a, b) = (quantile(&x, lo).unwrap(), quantile(&x, hi).unwrap());
        prop_assert!(a <= b);
        let min = x.iter().copied().fold(f64::INFINITY, f64::min);
        let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(min <= a && b <= max);
        prop_assert_eq!(quantile(&x, 0.0).unwrap(), min);
        prop_assert_eq!(quantile(&x, 1.0).unwrap(), max);
    }

    #[test]
    fn bcor_range_symmetry_and_sign_flip((u, v) in (1usize..50).prop_flat_map(|n| (ternary(n), ternary(n)))) {
        let (su, sv) = (BinarySequence::new(u.clone()).unwrap(), BinarySequence::new(v.clone()).unwrap());
        match binary_correlation(&su, &sv) {
            Ok(r) => {
                prop_assert!((-1.0..=1.0).contains(&r));
                prop_assert_eq!(binary_correlation(&sv, &su).unwrap(), r);
                let neg = BinarySequence::new(v.iter().map(|x| -x).collect()).unwrap();
                prop_assert_eq!(binary_correlation(&su, &neg).unwrap(), -r);
                // Independent evaluation of the definition.
                let num: i32 = u.iter().zip(&v).map(|(a, b)| (a * b) as i32).sum();
                let den: i32 = u.iter().zip(&v).map(|(a, b)| (a.abs() + b.abs() - (a * b).abs()) as i32).sum();
                prop_assert_eq!(r, num as f64 / den as f64);
            }
            Err(_) => prop_assert!(u.iter().chain(&v).all(|&x| x == 0)),
        }
    }

    #[test]
    fn moments_match_exhaustive_sums(
        f in 0.0f64..0.5,
        p1 in 0.0f64..(2.0 * PI),
        p2 in 0.0f64..(2.0 * PI),
        a in 0i64..100,
        len in 0i64..300,
    ) {
        let b = a + len;
        let m = sinusoid_moments(f, p1, p2, a, b).unwrap();
        let n = (len + 1) as f64;
        let (mut sx, mut sy, mut sxy) = (0.0, 0.0, 0.0);
        for u in a..=b {
            let (x, y) = ((p1 + 2.0 * PI * f * u as f64).sin(), (p2 + 2.0 * PI * f * u as f64).sin());
            sx += x;
            sy += y;
            sxy += x * y;
        }
        let cov = sxy / n - sx / n * sy / n;
        prop_assert!((m.ex - sx / n).abs() < 1e-11);
        prop_assert!((m.ey - sy / n).abs() < 1e-11);
        prop_assert!((m.cov - cov).abs() < 1e-11);
    }

    #[test]
    fn binarized_course_has_expected_support(x in proptest::collection::vec(0.0f64..10.0, 10..80), q in 0.5f64..0.95) {
        let b = binarize_timecourse(&x, q).unwrap();
        let t = quantile(&x, q).unwrap();
        let above = x.iter().filter(|&&v| v > t).count();
        prop_assert_eq!(b.count_nonzero(), above);
        prop_assert!(b.values().iter().all(|&v| v == 0 || v == 1));
    }

    #[test]
    fn phase_fit_recovers_single_sinusoid(phi in 0.0f64..PI, amp in 0.5f64..3.0) {
        let f = 1.0 / 16.0;
        let times: Vec<f64> = (0..96).map(f64::from).collect();
        let x: Vec<f64> = times.iter().map(|t| amp * (2.0 * PI * f * t + phi).sin()).collect();
        let m = tsica_core::Matrix::from_columns(&[x]).unwrap();
        let fit = phase_constrained_lsq(&m, f, &times, 1, DEFAULT_PHASE_GRID).unwrap();
        let d = (fit[0].phase - phi).rem_euclid(PI);
        prop_assert!(d.min(PI - d) < 1e-6);
        prop_assert!(fit[0].residual < 1e-9);
    }
}
