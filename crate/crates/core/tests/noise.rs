use fracspde::noise::{increment, sample_noise, white_noise_stack, NoiseBasis, NoisePath};
use fracspde::{Field, TimeGrid, TorusGrid};

#[test]
fn same_seed_gives_identical_paths() {
    let g = TimeGrid::new(1.0, 200).unwrap();
    let a = sample_noise(42, g, 4).unwrap();
    let b = sample_noise(42, g, 4).unwrap();
    assert_eq!(a, b);
    // a longer run shares its prefix with the shorter one on the same dt
    let long = sample_noise(42, TimeGrid::new(2.0, 400).unwrap(), 4).unwrap();
    for k in 0..4 {
        assert_eq!(&long.mode(k)[..200], a.mode(k));
    }
    assert_eq!(increment(42, &g, 3, 123), a.get(3, 123));
    assert!(sample_noise(42, g, 0).is_err());
}

#[test]
fn sample_mean_obeys_clt_bound() {
    let n = 100_000;
    let g = TimeGrid::new(1.0, n).unwrap();
    let dt = g.dt();
    let path = sample_noise(7, g, 2).unwrap();
    for k in 0..2 {
        let mean = path.mode(k).iter().sum::<f64>() / n as f64;
        assert!(
            mean.abs() <= 4.0 * (dt / n as f64).sqrt(),
            "k={k}: {mean:e}"
        );
        let var = path.mode(k).iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert!((var / dt - 1.0).abs() < 0.02, "k={k}: {}", var / dt);
    }
}

#[test]
fn distinct_seeds_and_modes_are_uncorrelated() {
    let n = 100_000;
    let g = TimeGrid::new(1.0, n).unwrap();
    let a = sample_noise(1, g, 2).unwrap();
    let b = sample_noise(2, g, 1).unwrap();
    let corr = |x: &[f64], y: &[f64]| {
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let syy: f64 = y.iter().map(|b| b * b).sum();
        sxy / (sxx * syy).sqrt()
    };
    let bound = 4.0 / (n as f64).sqrt();
    assert!(corr(a.mode(0), b.mode(0)).abs() < bound);
    assert!(corr(a.mode(0), a.mode(1)).abs() < bound);
}

#[test]
fn variance_scales_with_step() {
    let m = 50_000;
    for &(t_end, steps) in &[(1.0, m), (4.0, m), (1.0, m / 10)] {
        let g = TimeGrid::new(t_end, steps).unwrap();
        let p = sample_noise(3, g, 1).unwrap();
        let var = p.mode(0).iter().map(|x| x * x).sum::<f64>() / steps as f64;
        let tol = 5.0 * (2.0 / steps as f64).sqrt();
        assert!((var / g.dt() - 1.0).abs() < tol, "t={t_end} n={steps}");
    }
}

#[test]
fn coarsening_preserves_brownian_path() {
    let g = TimeGrid::new(1.0, 64).unwrap();
    let fine = sample_noise(5, g, 2).unwrap();
    let coarse = fine.coarsen(4).unwrap();
    assert_eq!(coarse.grid.n_steps, 16);
    let wf = fine.path(1);
    let wc = coarse.path(1);
    for j in 0..=16 {
        assert!((wc[j] - wf[4 * j]).abs() < 1e-14);
    }
    assert!(fine.coarsen(3).is_err());
}

#[test]
fn noise_binary_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("w.bin");
    let p = sample_noise(11, TimeGrid::new(0.5, 30).unwrap(), 3).unwrap();
    p.write_binary(&file).unwrap();
    assert_eq!(NoisePath::read_binary(&file).unwrap(), p);
    std::fs::write(&file, [0u8; 20]).unwrap();
    assert!(NoisePath::read_binary(&file).is_err());
}

#[test]
fn fourier_basis_is_orthonormal() {
    for &(d, n) in &[(1usize, 8usize), (2, 8)] {
        let g = TorusGrid::new(d, n, 1.7).unwrap();
        let b = NoiseBasis::fourier_white(g, None).unwrap();
        let etas: Vec<Field> = (0..b.len()).map(|k| b.eta(k)).collect();
        for i in 0..etas.len() {
            for j in 0..=i {
                let ip: f64 = etas[i]
                    .values
                    .iter()
                    .zip(&etas[j].values)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    * g.cell_volume();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-12, "d={d} ({i},{j}): {ip}");
            }
        }
    }
}

#[test]
fn full_white_stack_has_parseval_constant() {
    let g = TorusGrid::new(2, 8, 3.0).unwrap();
    let b = NoiseBasis::fourier_white(g, None).unwrap();
    let h = Field::new(g, vec![1.0; g.len()]).unwrap();
    let stack = white_noise_stack(&b, &h).unwrap();
    assert_eq!(stack.len(), g.len());
    let want = g.len() as f64 / 9.0;
    for x in 0..g.len() {
        let s: f64 = stack.iter().map(|f| f.values[x] * f.values[x]).sum();
        assert!((s - want).abs() < 1e-10 * want, "x={x}: {s}");
    }
    let other = Field::zeros(TorusGrid::new(2, 16, 3.0).unwrap());
    assert!(white_noise_stack(&b, &other).is_err());
}

#[test]
fn spectral_synthesis_matches_direct_sum() {
    let g = TorusGrid::new(2, 8, 2.0).unwrap();
    let b = NoiseBasis::diagonal_colored(g, Some(40), |xi_sq| (1.0 + xi_sq).powf(-0.5)).unwrap();
    let coeffs: Vec<f64> = (0..b.len())
        .map(|k| ((k * 37 % 11) as f64 - 5.0) / 3.0)
        .collect();
    let fast = b.synthesize(&coeffs);
    let mut direct = vec![0.0; g.len()];
    for (k, c) in coeffs.iter().enumerate() {
        let eta = b.eta(k);
        for (d, e) in direct.iter_mut().zip(&eta.values) {
            *d += c * b.weights[k] * e;
        }
    }
    for (a, d) in fast.values.iter().zip(&direct) {
        assert!((a - d).abs() < 1e-12);
    }
}
