use std::f64::consts::PI;

use fracspde::spectral::{
    apply_multiplier, bessel_norm, bessel_norm_l2seq, fractional_laplacian, lp_norm,
};
use fracspde::{Field, TorusGrid};
use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

fn random_field(grid: TorusGrid, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.len())
        .map(|_| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0)
        .collect();
    Field::new(grid, values).unwrap()
}

fn mean_free(f: &Field) -> Field {
    let m = f.mean();
    Field::new(f.grid, f.values.iter().map(|v| v - m).collect()).unwrap()
}

#[test]
fn round_trip_is_identity() {
    for &(d, n) in &[(1, 64), (2, 16), (3, 8)] {
        let g = TorusGrid::new(d, n, 2.5).unwrap();
        let f = random_field(g, 7);
        let back = f.forward().inverse();
        let scale = f.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(f.max_abs_diff(&back) <= 1e-12 * scale, "d={d}");
    }
}

#[test]
fn cosine_is_laplacian_eigenfunction() {
    let l = 3.0;
    let g = TorusGrid::new(1, 32, l).unwrap();
    let k = 2.0 * PI / l;
    let f = Field::from_fn(g, |x| (k * x[0]).cos()).unwrap();
    let lap = fractional_laplacian(&f, 2.0).unwrap();
    for (a, b) in lap.values.iter().zip(&f.values) {
        assert!((a - k * k * b).abs() < 1e-12);
    }
}

#[test]
fn constants_are_annihilated() {
    let g = TorusGrid::new(2, 16, 1.0).unwrap();
    let c = Field::new(g, vec![4.0; g.len()]).unwrap();
    let out = fractional_laplacian(&c, 1.0).unwrap();
    assert!(out.values.iter().all(|v| v.abs() < 1e-13));
    assert!(fractional_laplacian(&c, -1.0).is_err());
    assert!(fractional_laplacian(&c, -2.0).is_err());
    assert!(fractional_laplacian(&c, 2.5).is_err());
}

#[test]
fn positive_then_negative_power_recovers_mean_free_part() {
    let g = TorusGrid::new(2, 32, 5.0).unwrap();
    let f = random_field(g, 3);
    let there = fractional_laplacian(&f, 1.0).unwrap();
    let back = fractional_laplacian(&there, -1.0).unwrap();
    assert!(back.max_abs_diff(&mean_free(&f)) <= 1e-10);
}

#[test]
fn fractional_powers_compose() {
    let g = TorusGrid::new(1, 128, 7.0).unwrap();
    let f = mean_free(&random_field(g, 11));
    let ab = fractional_laplacian(&fractional_laplacian(&f, 0.7).unwrap(), -1.2).unwrap();
    let direct = fractional_laplacian(&f, -0.5).unwrap();
    assert!(ab.max_abs_diff(&direct) <= 1e-10);
}

#[test]
fn bessel_norm_examples() {
    let l = 2.0;
    let g = TorusGrid::new(2, 16, l).unwrap();
    let c = Field::new(g, vec![-3.0; g.len()]).unwrap();
    for &gamma in &[-1.5, 0.0, 0.7, 2.0] {
        let v = bessel_norm(&c, gamma, 2.0).unwrap();
        assert!((v - 3.0 * l).abs() < 1e-12);
    }

    let g1 = TorusGrid::new(1, 64, l).unwrap();
    let k = 3.0 * 2.0 * PI / l;
    let f = Field::from_fn(g1, |x| (k * x[0]).cos()).unwrap();
    let plain = lp_norm(&g1, &f.values, 2.0);
    // ‖cos‖² = L/2 on [0, L)
    assert!((plain - (l / 2.0).sqrt()).abs() < 1e-12);
    let v = bessel_norm(&f, 2.0, 2.0).unwrap();
    assert!((v - (1.0 + k * k) * plain).abs() < 1e-10 * v);
}

/// Direct quadrature of `(1−Δ)^{−1/2}` applied to a Gaussian bump: the
/// multiplier applied to the exact Fourier series of the periodised bump,
/// evaluated at the points of a grid twice as fine.
#[test]
fn bessel_norm_of_bump_matches_refined_quadrature() {
    let l = 10.0;
    let s = 0.6;
    let bump = |x: f64| (-(x - l / 2.0).powi(2) / (2.0 * s * s)).exp();
    let g = TorusGrid::new(1, 128, l).unwrap();
    let f = Field::from_fn(g, |x| bump(x[0])).unwrap();
    let got = bessel_norm(&f, -1.0, 4.0).unwrap();

    let fine = 256usize;
    let modes = 200i64;
    let mut vals = vec![0.0; fine];
    for m in -modes..=modes {
        let xi = 2.0 * PI * m as f64 / l;
        // Fourier coefficient of the periodised Gaussian, (1/L)∫ e^{-iξx} bump dx
        let amp = s * (2.0 * PI).sqrt() / l * (-0.5 * xi * xi * s * s).exp();
        let mult = (1.0 + xi * xi).powf(-0.5);
        for (i, v) in vals.iter_mut().enumerate() {
            let x = i as f64 * l / fine as f64;
            *v += amp * mult * (xi * (x - l / 2.0)).cos();
        }
    }
    let gf = TorusGrid::new(1, fine, l).unwrap();
    let want = lp_norm(&gf, &vals, 4.0);
    assert!((got / want - 1.0).abs() < 1e-3, "{got} vs {want}");
}

#[test]
fn l2_stack_norm_examples() {
    let g = TorusGrid::new(1, 64, 4.0).unwrap();
    let a = random_field(g, 1);
    let zero = Field::zeros(g);
    for &(gamma, p) in &[(0.0, 2.0), (1.3, 3.0), (-0.4, 4.0)] {
        let single = bessel_norm_l2seq(std::slice::from_ref(&a), gamma, p).unwrap();
        assert!((single - bessel_norm(&a, gamma, p).unwrap()).abs() < 1e-12 * single);
    }
    let padded = bessel_norm_l2seq(&[a.clone(), zero.clone(), zero], 0.0, 2.0).unwrap();
    assert!((padded - lp_norm(&g, &a.values, 2.0)).abs() < 1e-12 * padded);

    // two orthogonal modes: ‖√(a²cos² + b²sin²)‖₂² = (a² + b²)·L/2
    let l = 4.0;
    let k1 = 2.0 * PI / l;
    let k2 = 3.0 * 2.0 * PI / l;
    let (ca, cb) = (2.0, 0.5);
    let f1 = Field::from_fn(g, |x| ca * (k1 * x[0]).cos()).unwrap();
    let f2 = Field::from_fn(g, |x| cb * (k2 * x[0]).sin()).unwrap();
    let got = bessel_norm_l2seq(&[f1, f2], 0.0, 2.0).unwrap();
    let want = ((ca * ca + cb * cb) * l / 2.0).sqrt();
    assert!((got - want).abs() < 1e-12);

    let other = Field::zeros(TorusGrid::new(1, 32, 4.0).unwrap());
    assert!(bessel_norm_l2seq(&[a, other], 0.0, 2.0).is_err());
    assert!(bessel_norm_l2seq(&[], 0.0, 2.0).is_err());
}

#[test]
fn binary_and_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = TorusGrid::new(2, 8, 1.5).unwrap();
    let f = random_field(g, 5);
    let bin = dir.path().join("f.bin");
    f.write_binary(&bin).unwrap();
    assert_eq!(Field::read_binary(&bin).unwrap(), f);

    let g1 = TorusGrid::new(1, 16, 2.0).unwrap();
    let f1 = random_field(g1, 6);
    let csv = dir.path().join("f.csv");
    f1.write_csv(&csv).unwrap();
    let back = Field::read_csv(&csv).unwrap();
    assert_eq!(back.values, f1.values);
    assert!((back.grid.side - 2.0).abs() < 1e-12);
    assert!(f.write_csv(&csv).is_err());
}

proptest! {
    #[test]
    fn bessel_multipliers_compose(seed in 0u64..1000, nu in -2.0f64..2.0, gamma in -2.0f64..2.0, p in 2.0f64..6.0) {
        let g = TorusGrid::new(2, 16, 3.0).unwrap();
        let u = random_field(g, seed);
        let lifted = apply_multiplier(&u, |xi_sq| (1.0 + xi_sq).powf(0.5 * nu));
        let lhs = bessel_norm(&lifted, gamma - nu, p).unwrap();
        let rhs = bessel_norm(&u, gamma, p).unwrap();
        prop_assert!((lhs / rhs - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn zero_order_bessel_norm_is_lp(seed in 0u64..1000, p in 2.0f64..8.0) {
        let g = TorusGrid::new(1, 32, 1.0).unwrap();
        let u = random_field(g, seed);
        prop_assert_eq!(bessel_norm(&u, 0.0, p).unwrap(), lp_norm(&g, &u.values, p));
    }
}
