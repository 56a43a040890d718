mod common;

use common::*;
use drss::linalg::{ball_linear_extrema, dot, sym_eigendecompose, DenseMatrix};
use drss::Error;
use proptest::prelude::*;
use rand::Rng;

fn inf_norm_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigendecomposition_round_trip(seed in any::<u64>(), n in 1usize..=50, rank_frac in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let rank = ((n as f64 * rank_frac).ceil() as usize).clamp(1, n);
        let a = random_psd(&mut r, n, rank, 1.0);
        let e = sym_eigendecompose(&a).unwrap();
        let qqt = e.q.matmul(&e.q.transpose()).unwrap();
        prop_assert!(inf_norm_diff(&qqt, &DenseMatrix::identity(n)) <= 1e-10);
        let scale = 1.0 + a.max_abs();
        prop_assert!(inf_norm_diff(&e.reconstruct(), &a) <= 1e-8 * scale);
        prop_assert!(e.phi.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn linear_extrema_bound_samples(seed in any::<u64>(), n in 1usize..=8, radius in 0.0f64..5.0) {
        let mut r = rng(seed);
        let a: Vec<f64> = (0..n).map(|_| normal(&mut r)).collect();
        let c: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
        let ext = ball_linear_extrema(&a, &c, radius).unwrap();
        let tol = 1e-12 * (1.0 + dot(&a, &a).sqrt() * (radius + c.iter().map(|v| v.abs()).sum::<f64>()));
        for _ in 0..100 {
            let u: Vec<f64> = (0..n).map(|_| normal(&mut r)).collect();
            let un = dot(&u, &u).sqrt();
            let s = radius * r.random::<f64>().powf(1.0 / n as f64);
            let w: Vec<f64> = c.iter().zip(&u).map(|(ci, ui)| ci + s * ui / un).collect();
            let v = dot(&a, &w);
            prop_assert!(ext.max >= v - tol && ext.min <= v + tol);
        }
        prop_assert!((dot(&a, &ext.argmax) - ext.max).abs() <= tol * 10.0);
        prop_assert!((dot(&a, &ext.argmin) - ext.min).abs() <= tol * 10.0);
    }
}

#[test]
fn eigen_examples() {
    let e = sym_eigendecompose(&DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap()).unwrap();
    let mut phi = e.phi.clone();
    phi.sort_by(f64::total_cmp);
    assert!((phi[0] - 1.0).abs() < 1e-14 && (phi[1] - 3.0).abs() < 1e-14);
    for i in 0..2 {
        let v = e.vector(i);
        assert!((v[0].abs() - v[1].abs()).abs() < 1e-14);
    }
}

#[test]
fn eigen_rejects_bad_input() {
    let rect = DenseMatrix::zeros(2, 3);
    assert!(matches!(sym_eigendecompose(&rect), Err(Error::NotSquare { .. })));
    let asym = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
    assert!(matches!(sym_eigendecompose(&asym), Err(Error::NotSymmetric { .. })));
    let indef = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    assert!(matches!(sym_eigendecompose(&indef), Err(Error::NotPositiveSemidefinite { .. })));
}

#[test]
fn linear_extrema_zero_direction() {
    let e = ball_linear_extrema(&[0.0, 0.0], &[1.0, 2.0], 3.0).unwrap();
    assert_eq!((e.min, e.max), (0.0, 0.0));
    assert_eq!(e.argmax, vec![1.0, 2.0]);
}
