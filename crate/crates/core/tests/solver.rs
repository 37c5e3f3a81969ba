use std::f64::consts::PI;

use fracspde::frac_time::rl_integral;
use fracspde::kernels::{symbol_eval, KernelSymbol};
use fracspde::noise::{sample_noise, NoiseBasis};
use fracspde::solver::{
    fit_gronwall_constant, gronwall_envelope, picard_step, solve_deterministic, solve_l1_oracle,
    solve_semilinear, solve_stochastic_additive, NoiseForcing, PicardOptions, SpaceTimePath,
    SpectralSolver,
};
use fracspde::{Error, Field, FracOrders, SampledPath, TimeGrid, TorusGrid, Warning};
use statrs::function::gamma::gamma;

fn orders(a: f64, b: f64) -> FracOrders {
    FracOrders::new(a, b).unwrap()
}

fn torus(n: usize) -> TorusGrid {
    TorusGrid::new(1, n, 2.0 * PI).unwrap()
}

/// Fourier coefficient of mode index `i` at node `j`, normalised to the mean.
fn mode(path: &SpaceTimePath, j: usize, i: usize) -> f64 {
    let c = path.snapshots[j].forward().coeffs[i];
    c.re / path.grid().len() as f64
}

#[test]
fn zero_forcing_gives_zero() {
    let tg = TimeGrid::new(1.0, 32).unwrap();
    let g = torus(16);
    let zero = SpaceTimePath::zeros(tg, g);
    let u = solve_deterministic(orders(0.6, 0.3), &zero).unwrap();
    assert!(u
        .snapshots
        .iter()
        .all(|s| s.values.iter().all(|&v| v == 0.0)));
    let noise = sample_noise(1, tg, 1).unwrap();
    let stacks = vec![vec![Field::zeros(g)]; 32];
    let v =
        solve_stochastic_additive(orders(0.6, 0.3), NoiseForcing::Stacks(&stacks), &noise).unwrap();
    assert!(v
        .snapshots
        .iter()
        .all(|s| s.values.iter().all(|&v| v == 0.0)));
    let w = solve_l1_oracle(
        orders(0.6, 0.3),
        &zero,
        Some((NoiseForcing::Stacks(&stacks), &noise)),
    )
    .unwrap();
    assert!(w
        .snapshots
        .iter()
        .all(|s| s.values.iter().all(|&v| v == 0.0)));
}

#[test]
fn heat_equation_matches_variation_of_constants() {
    let k = 2.0;
    // û′ = −k²û + e^{−t}, û(0) = 0
    let exact = |t: f64| ((-t).exp() - (-k * k * t).exp()) / (k * k - 1.0);
    let mut errs = Vec::new();
    for &n in &[32usize, 64, 128] {
        let tg = TimeGrid::new(1.0, n).unwrap();
        let f =
            SpaceTimePath::from_fn(tg, torus(16), |t, x| (-t).exp() * (k * x[0]).cos()).unwrap();
        let u = solve_deterministic(orders(1.0, 1.0), &f).unwrap();
        let err = (0..=n)
            .map(|j| (mode(&u, j, 2) * 2.0 - exact(tg.node(j))).abs())
            .fold(0.0, f64::max);
        errs.push(err);
    }
    assert!(errs[2] < 1e-5, "{errs:?}");
    assert!(
        errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5,
        "{errs:?}"
    );
}

/// `t^{α}E_{α,α+1}(−k²t^α)` by its power series with statrs' Γ.
fn constant_forcing_response(alpha: f64, k2: f64, t: f64) -> f64 {
    let z = -k2 * t.powf(alpha);
    let sum: f64 = (0..80)
        .map(|j| z.powi(j) / gamma(alpha * j as f64 + alpha + 1.0))
        .sum();
    t.powf(alpha) * sum
}

#[test]
fn subdiffusive_constant_forcing() {
    let tg = TimeGrid::new(1.0, 1024).unwrap();
    let f = SpaceTimePath::from_fn(tg, torus(16), |_, x| x[0].cos()).unwrap();
    let u = solve_deterministic(orders(0.5, 0.5), &f).unwrap();
    for j in (64..=1024).step_by(64) {
        let want = constant_forcing_response(0.5, 1.0, tg.node(j));
        let got = mode(&u, j, 1) * 2.0;
        assert!(
            (got / want - 1.0).abs() < 1e-3,
            "t={}: {got} vs {want}",
            tg.node(j)
        );
    }

    let l1 = solve_l1_oracle(orders(0.5, 0.5), &f, None).unwrap();
    let rel = u.diff_lp_norm(&l1, 2.0).unwrap() / u.lp_norm(2.0);
    assert!(rel < 1e-2, "{rel}");
}

#[test]
fn heat_stochastic_convolution_is_the_discrete_sum() {
    let (n, t_end, k) = (200usize, 1.0, 3.0);
    let tg = TimeGrid::new(t_end, n).unwrap();
    let grid = torus(16);
    let noise = sample_noise(8, tg, 1).unwrap();
    let g = Field::from_fn(grid, |x| (k * x[0]).cos()).unwrap();
    let stacks = vec![vec![g]; n];
    let u =
        solve_stochastic_additive(orders(1.0, 1.0), NoiseForcing::Stacks(&stacks), &noise).unwrap();
    let dt = tg.dt();
    for &j in &[1usize, 50, 200] {
        let t = tg.node(j);
        let want: f64 = (0..j)
            .map(|i| (-k * k * (t - i as f64 * dt)).exp() * 0.5 * noise.get(0, i))
            .sum();
        assert!((mode(&u, j, 3) - want).abs() < 1e-12);
    }
}

#[test]
fn ito_isometry_single_mode() {
    let (alpha, beta) = (0.5, 0.3);
    let o = orders(alpha, beta);
    let grid = torus(8);
    let tg = TimeGrid::new(1.0, 64).unwrap();
    let basis = NoiseBasis::fourier_white(grid, Some(2)).unwrap();
    // mode 1 is the cosine of |m| = 1
    let g = Field {
        grid,
        values: basis.eta(1).values,
    };
    let stacks = vec![vec![g]; 64];
    let solver = SpectralSolver::new(o, grid, tg);
    let reps = 4000;
    let amp = (2.0 / grid.side).sqrt() / 2.0;
    let samples: Vec<f64> = (0..reps)
        .map(|r| {
            let noise = sample_noise(1000 + r, tg, 1).unwrap();
            solver
                .stochastic_final(NoiseForcing::Stacks(&stacks), &noise)
                .unwrap()
                .coeffs[1]
                .re
                / grid.len() as f64
        })
        .collect();
    let var = samples.iter().map(|x| x * x).sum::<f64>() / reps as f64;
    let dt = tg.dt();
    let oracle: f64 = (0..64)
        .map(|j| {
            let r = 1.0 - j as f64 * dt;
            let sym = KernelSymbol::new(o, r).unwrap();
            let kv = symbol_eval(&sym, 1.0).unwrap();
            amp * amp * kv * kv * dt
        })
        .sum();
    let band = 4.0 * oracle * (2.0 / reps as f64).sqrt();
    assert!((var - oracle).abs() < band, "{var} vs {oracle} ± {band}");
}

#[test]
fn solvers_are_linear() {
    let o = orders(0.7, 0.4);
    let grid = torus(16);
    let tg = TimeGrid::new(1.0, 64).unwrap();
    let f1 = SpaceTimePath::from_fn(tg, grid, |t, x| t * x[0].sin()).unwrap();
    let f2 = SpaceTimePath::from_fn(tg, grid, |t, x| (2.0 * x[0]).cos() - t * t).unwrap();
    let sum = SpaceTimePath::from_fn(tg, grid, |t, x| {
        2.0 * t * x[0].sin() - 3.0 * ((2.0 * x[0]).cos() - t * t)
    })
    .unwrap();
    let u1 = solve_deterministic(o, &f1).unwrap();
    let u2 = solve_deterministic(o, &f2).unwrap();
    let us = solve_deterministic(o, &sum).unwrap();
    for j in 0..=64 {
        for i in 0..grid.len() {
            let lin = 2.0 * u1.snapshots[j].values[i] - 3.0 * u2.snapshots[j].values[i];
            assert!((us.snapshots[j].values[i] - lin).abs() < 1e-12);
        }
    }

    let noise = sample_noise(4, tg, 2).unwrap();
    let a = Field::from_fn(grid, |x| x[0].cos()).unwrap();
    let b = Field::from_fn(grid, |x| 1.0 + x[0].sin()).unwrap();
    let s_a = vec![vec![a.clone(), Field::zeros(grid)]; 64];
    let s_b = vec![vec![Field::zeros(grid), b.clone()]; 64];
    let s_ab = vec![vec![Field::from_fn(grid, |x| 2.0 * x[0].cos()).unwrap(), b]; 64];
    let va = solve_stochastic_additive(o, NoiseForcing::Stacks(&s_a), &noise).unwrap();
    let vb = solve_stochastic_additive(o, NoiseForcing::Stacks(&s_b), &noise).unwrap();
    let vab = solve_stochastic_additive(o, NoiseForcing::Stacks(&s_ab), &noise).unwrap();
    for j in 0..=64 {
        for i in 0..grid.len() {
            let lin = 2.0 * va.snapshots[j].values[i] + vb.snapshots[j].values[i];
            assert!((vab.snapshots[j].values[i] - lin).abs() < 1e-12);
        }
    }
}

#[test]
fn zero_mode_is_fractional_integral_of_wiener_path() {
    let o = orders(0.8, 0.3);
    let grid = torus(8);
    let fine = sample_noise(17, TimeGrid::new(1.0, 4096).unwrap(), 1).unwrap();
    let one = Field::new(grid, vec![1.0; 8]).unwrap();
    let mut errs = Vec::new();
    for &n in &[256usize, 1024, 4096] {
        let noise = fine.coarsen(4096 / n).unwrap();
        let stacks = vec![vec![one.clone()]; n];
        let u = solve_stochastic_additive(o, NoiseForcing::Stacks(&stacks), &noise).unwrap();
        let w = SampledPath::new(noise.grid, noise.path(0)).unwrap();
        let i = rl_integral(&w, 0.5).unwrap();
        let err = u
            .snapshots
            .iter()
            .zip(&i.values)
            .map(|(f, v)| (f.values[0] - v).abs())
            .fold(0.0, f64::max);
        errs.push(err / i.max_abs());
    }
    assert!(errs[2] < 1e-3, "{errs:?}");
    assert!(
        errs[0] > 2.0 * errs[1] && errs[1] > 2.0 * errs[2],
        "{errs:?}"
    );
}

#[test]
fn future_increments_do_not_leak_backwards() {
    let o = orders(0.6, 0.2);
    let grid = torus(8);
    let tg = TimeGrid::new(1.0, 40).unwrap();
    let noise = sample_noise(2, tg, 3).unwrap();
    let basis = NoiseBasis::fourier_white(grid, Some(3)).unwrap();
    let forcing = NoiseForcing::Basis {
        basis: &basis,
        h: None,
    };
    let u = solve_stochastic_additive(o, forcing, &noise).unwrap();
    let cut = 17;
    let mut shuffled = noise.clone();
    for k in 0..3 {
        let row = &mut shuffled.increments[k * 40..(k + 1) * 40];
        row[cut..].reverse();
    }
    let v = solve_stochastic_additive(o, forcing, &shuffled).unwrap();
    for j in 0..=cut {
        assert_eq!(u.snapshots[j], v.snapshots[j], "node {j}");
    }
    assert_ne!(u.snapshots[cut + 2], v.snapshots[cut + 2]);
}

#[test]
fn l1_oracle_agrees_pathwise_with_spectral_solver() {
    let o = orders(0.8, 0.25);
    let grid = torus(16);
    let fine = sample_noise(17, TimeGrid::new(1.0, 2048).unwrap(), 1).unwrap();
    let g = Field::from_fn(grid, |x| 1.0 + x[0].cos()).unwrap();
    let mut rels = Vec::new();
    for &n in &[512usize, 1024, 2048] {
        let noise = fine.coarsen(2048 / n).unwrap();
        let stacks = vec![vec![g.clone()]; n];
        let forcing = NoiseForcing::Stacks(&stacks);
        let a = solve_stochastic_additive(o, forcing, &noise).unwrap();
        let zero = SpaceTimePath::zeros(noise.grid, grid);
        let b = solve_l1_oracle(o, &zero, Some((forcing, &noise))).unwrap();
        rels.push(a.diff_lp_norm(&b, 2.0).unwrap() / a.lp_norm(2.0));
    }
    assert!(rels[2] <= 5e-2, "{rels:?}");
    assert!(rels[0] > rels[1] && rels[1] > rels[2], "{rels:?}");
}

#[test]
fn l1_oracle_rejects_unsupported_orders() {
    let grid = torus(8);
    let tg = TimeGrid::new(1.0, 16).unwrap();
    let zero = SpaceTimePath::zeros(tg, grid);
    assert!(solve_l1_oracle(orders(1.5, 1.0), &zero, None).is_err());
    let noise = sample_noise(1, tg, 1).unwrap();
    let stacks = vec![vec![Field::zeros(grid)]; 16];
    let r = solve_l1_oracle(
        orders(0.8, 0.6),
        &zero,
        Some((NoiseForcing::Stacks(&stacks), &noise)),
    );
    assert!(r.is_err());
}

#[test]
fn singular_first_interval_is_finite() {
    // α < β: the kernel r^{α−β} blows up at r = 0
    let o = orders(0.5, 0.9);
    let grid = torus(8);
    let tg = TimeGrid::new(1.0, 64).unwrap();
    let solver = SpectralSolver::new(o, grid, tg);
    let w = solver.kernel_weights(0).unwrap();
    let dt = tg.dt();
    // interval mean of r^{−0.4}/Γ(0.6) on (0, dt)
    let want = dt.powf(-0.4) / (0.6 * gamma(0.6));
    assert!((w[1] / want - 1.0).abs() < 1e-12);
    assert!(w[2..].iter().all(|v| v.is_finite() && *v < w[1]));
}

#[test]
fn constant_noise_map_converges_in_one_iteration() {
    let o = orders(0.7, 0.3);
    let grid = torus(8);
    let tg = TimeGrid::new(0.5, 32).unwrap();
    let noise = sample_noise(3, tg, 1).unwrap();
    let g0 = Field::from_fn(grid, |x| x[0].cos()).unwrap();
    let f_fn = |_: f64, u: &Field| Field::zeros(u.grid);
    let g_fn = |_: f64, _: &Field| vec![g0.clone()];
    let out = solve_semilinear(o, grid, &f_fn, &g_fn, &noise, PicardOptions::default()).unwrap();
    assert!(out.warnings.is_empty());
    assert_eq!(out.value.iterations, 1);
    let stacks = vec![vec![g0.clone()]; 32];
    let additive = solve_stochastic_additive(o, NoiseForcing::Stacks(&stacks), &noise).unwrap();
    assert!(out.value.solution.max_abs_diff(&additive) < 1e-14);
}

#[test]
fn ornstein_uhlenbeck_mean_matches_deterministic_part() {
    let (lam, c, k) = (0.5, 2.0, 1.0);
    let grid = torus(8);
    let tg = TimeGrid::new(1.0, 64).unwrap();
    let o = orders(1.0, 1.0);
    let eta = Field::from_fn(grid, |x| (k * x[0]).cos()).unwrap();
    let f_fn = |_: f64, u: &Field| Field {
        grid: u.grid,
        values: u
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| -lam * v + c * (k * grid.point(i)[0]).cos())
            .collect(),
    };
    let g_fn = |_: f64, _: &Field| vec![eta.clone()];
    let reps = 200;
    let finals: Vec<f64> = (0..reps)
        .map(|r| {
            let noise = sample_noise(500 + r, tg, 1).unwrap();
            let out = solve_semilinear(o, grid, &f_fn, &g_fn, &noise, PicardOptions::default())
                .unwrap()
                .value;
            2.0 * mode(&out.solution, 64, 1)
        })
        .collect();
    let mean = finals.iter().sum::<f64>() / reps as f64;
    let sd = (finals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
    let rate = k * k + lam;
    let want = c * (1.0 - (-rate).exp()) / rate;
    assert!(
        (mean - want).abs() < 4.0 * sd / (reps as f64).sqrt() + 1e-4,
        "{mean} vs {want}"
    );
}

/// `η¹` and the source `cos(2πx/L)` of the sine example.
fn sine_example(grid: TorusGrid) -> (Field, Field) {
    let eta1 = NoiseBasis::fourier_white(grid, Some(2)).unwrap().eta(1);
    let source = Field::from_fn(grid, |x| (2.0 * PI * x[0] / grid.side).cos()).unwrap();
    (eta1, source)
}

#[test]
fn sine_nonlinearity_contracts() {
    let o = orders(0.7, 0.3);
    let grid = torus(16);
    let tg = TimeGrid::new(0.5, 128).unwrap();
    let noise = sample_noise(9, tg, 1).unwrap();
    let (eta1, source) = sine_example(grid);
    let f_fn = |_: f64, u: &Field| Field {
        grid: u.grid,
        values: u
            .values
            .iter()
            .zip(&source.values)
            .map(|(v, s)| v.sin() + s)
            .collect(),
    };
    let g_fn = |_: f64, u: &Field| {
        vec![Field {
            grid: u.grid,
            values: u
                .values
                .iter()
                .zip(&eta1.values)
                .map(|(v, e)| 0.1 * v * e)
                .collect(),
        }]
    };
    let opts = PicardOptions::default();
    let out = solve_semilinear(o, grid, &f_fn, &g_fn, &noise, opts).unwrap();
    assert!(out.warnings.is_empty());
    let pic = out.value;
    assert!(pic.ratio < 1.0 && pic.iterations >= 3, "{pic:?}");
    assert!(pic.increments.windows(2).all(|w| w[1] < w[0]));

    let solver = SpectralSolver::new(o, grid, tg);
    let again = picard_step(&solver, &f_fn, &g_fn, &noise, &pic.solution).unwrap();
    assert!(again.diff_lp_norm(&pic.solution, 2.0).unwrap() <= opts.tol);
}

#[test]
fn expanding_map_is_reported() {
    let o = orders(1.0, 1.0);
    let grid = torus(8);
    let tg = TimeGrid::new(4.0, 32).unwrap();
    let noise = sample_noise(1, tg, 1).unwrap();
    let f_fn = |_: f64, u: &Field| Field {
        grid: u.grid,
        values: u.values.iter().map(|v| 5.0 * v + 1.0).collect(),
    };
    let g_fn = |_: f64, _: &Field| Vec::new();
    let opts = PicardOptions {
        max_iter: 4,
        ..PicardOptions::default()
    };
    match solve_semilinear(o, grid, &f_fn, &g_fn, &noise, opts) {
        Err(Error::NonConvergence {
            iterations, ratio, ..
        }) => {
            assert_eq!(iterations, 4);
            assert!(ratio > 1.0);
        }
        other => panic!("{other:?}"),
    }
    let opts = PicardOptions {
        max_iter: 200,
        ..PicardOptions::default()
    };
    let out = solve_semilinear(o, grid, &f_fn, &g_fn, &noise, opts).unwrap();
    assert!(out
        .warnings
        .iter()
        .any(|w| matches!(w, Warning::LipschitzViolation { .. })));
}

#[test]
fn growth_under_constant_forcing_fits_gronwall_envelope() {
    let o = orders(0.6, 0.3);
    let theta = o.theta();
    let grid = torus(16);
    let mut constants = Vec::new();
    for &n in &[64usize, 128] {
        let tg = TimeGrid::new(2.0, n).unwrap();
        let f = SpaceTimePath::from_fn(tg, grid, |_, x| 1.0 + x[0].cos()).unwrap();
        let a = fracspde::spectral::lp_norm(&grid, &f.snapshots[0].values, 2.0).powi(2);
        let u = solve_deterministic(o, &f).unwrap();
        let times = tg.nodes();
        let values: Vec<f64> = u
            .snapshots
            .iter()
            .map(|s| fracspde::spectral::lp_norm(&grid, &s.values, 2.0).powi(2))
            .collect();
        let n_fit = fit_gronwall_constant(theta, a, &times, &values).unwrap();
        for (&t, &v) in times.iter().zip(&values) {
            assert!(gronwall_envelope(theta, n_fit, a, t).unwrap() >= v);
        }
        constants.push(n_fit);
    }
    assert!(
        (constants[1] / constants[0] - 1.0).abs() < 0.05,
        "{constants:?}"
    );
}

#[test]
fn path_binary_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("u.bin");
    let tg = TimeGrid::new(1.0, 16).unwrap();
    let p = SpaceTimePath::from_fn(tg, TorusGrid::new(2, 8, 1.0).unwrap(), |t, x| {
        t * x[0] - x[1]
    })
    .unwrap();
    p.write_binary(&file).unwrap();
    assert_eq!(SpaceTimePath::read_binary(&file).unwrap(), p);
}
