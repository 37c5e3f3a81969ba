//! Solutions of `∂ₜ^α u = Δu + f + ∂ₜ^β Σ_k ∫ g^k dw^k` with zero initial data.
//!
//! The spectral solver applies the mild formula mode by mode with weights
//! cached per `|m|²`; the L1 oracle time-steps the same equation
//! independently; Picard iteration handles semilinear `f(u)`, `g(u)`.

use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Diagnosed, Error, Result, Warning};
use crate::frac_time::TimeGrid;
use crate::kernels::Shells;
use crate::mittag_leffler::{gamma, ml_eval, MLParams};
use crate::noise::{NoiseBasis, NoisePath};
use crate::orders::FracOrders;
use crate::spectral::{lp_norm, Field, SpectralField, TorusGrid};

/// One real field per time node; node 0 is the zero field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePath {
    pub time_grid: TimeGrid,
    pub snapshots: Vec<Field>,
}

impl SpaceTimePath {
    pub fn new(time_grid: TimeGrid, snapshots: Vec<Field>) -> Result<Self> {
        if snapshots.len() != time_grid.n_nodes() {
            return Err(Error::GridMismatch(format!(
                "{} snapshots for {} time nodes",
                snapshots.len(),
                time_grid.n_nodes()
            )));
        }
        let grid = snapshots[0].grid;
        for s in &snapshots {
            if s.grid != grid {
                return Err(Error::GridMismatch("snapshots on different grids".into()));
            }
            ensure_finite(&s.values, "snapshot")?;
        }
        Ok(SpaceTimePath {
            time_grid,
            snapshots,
        })
    }

    pub fn zeros(time_grid: TimeGrid, grid: TorusGrid) -> Self {
        SpaceTimePath {
            time_grid,
            snapshots: vec![Field::zeros(grid); time_grid.n_nodes()],
        }
    }

    /// Samples `f(t, x)` at every node and grid point.
    pub fn from_fn(
        time_grid: TimeGrid,
        grid: TorusGrid,
        f: impl Fn(f64, &[f64; 3]) -> f64,
    ) -> Result<Self> {
        let snapshots = time_grid
            .nodes()
            .into_iter()
            .map(|t| Field::from_fn(grid, |x| f(t, x)))
            .collect::<Result<_>>()?;
        Self::new(time_grid, snapshots)
    }

    pub fn grid(&self) -> TorusGrid {
        self.snapshots[0].grid
    }

    pub fn last(&self) -> &Field {
        self.snapshots.last().unwrap()
    }

    fn check_same(&self, other: &SpaceTimePath) -> Result<()> {
        if self.time_grid != other.time_grid || self.grid() != other.grid() {
            return Err(Error::GridMismatch("paths on different grids".into()));
        }
        Ok(())
    }

    /// Discrete `L_p([0,T] × torus)` norm, `(Σ_{j≥1} dt ‖u(t_j)‖_p^p)^{1/p}`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let grid = self.grid();
        let sum: f64 = self.snapshots[1..]
            .iter()
            .map(|s| lp_norm(&grid, &s.values, p).powf(p))
            .sum();
        (sum * self.time_grid.dt()).powf(1.0 / p)
    }

    pub fn diff_lp_norm(&self, other: &SpaceTimePath, p: f64) -> Result<f64> {
        self.check_same(other)?;
        let grid = self.grid();
        let sum: f64 = self.snapshots[1..]
            .iter()
            .zip(&other.snapshots[1..])
            .map(|(a, b)| {
                let d: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
                lp_norm(&grid, &d, p).powf(p)
            })
            .sum();
        Ok((sum * self.time_grid.dt()).powf(1.0 / p))
    }

    pub fn max_abs_diff(&self, other: &SpaceTimePath) -> f64 {
        self.snapshots
            .iter()
            .zip(&other.snapshots)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    /// Header `dim, n` (u64), `L` (f64), `n_steps` (u64), `t_end` (f64), then
    /// the snapshots node by node, all little-endian.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let grid = self.grid();
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        w.write_all(&(grid.dim as u64).to_le_bytes())?;
        w.write_all(&(grid.n as u64).to_le_bytes())?;
        w.write_all(&grid.side.to_le_bytes())?;
        w.write_all(&(self.time_grid.n_steps as u64).to_le_bytes())?;
        w.write_all(&self.time_grid.t_end.to_le_bytes())?;
        for s in &self.snapshots {
            for v in &s.values {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < 40 || bytes.len() % 8 != 0 {
            return Err(Error::Format(format!(
                "{} bytes is not a path file",
                bytes.len()
            )));
        }
        let word = |i: usize| <[u8; 8]>::try_from(&bytes[8 * i..8 * i + 8]).unwrap();
        let grid = TorusGrid::new(
            u64::from_le_bytes(word(0)) as usize,
            u64::from_le_bytes(word(1)) as usize,
            f64::from_le_bytes(word(2)),
        )?;
        let time_grid = TimeGrid::new(
            f64::from_le_bytes(word(4)),
            u64::from_le_bytes(word(3)) as usize,
        )?;
        let body = bytes.len() / 8 - 5;
        if body != grid.len() * time_grid.n_nodes() {
            return Err(Error::Format(format!(
                "{body} values for {} nodes of {} points",
                time_grid.n_nodes(),
                grid.len()
            )));
        }
        let snapshots = (0..time_grid.n_nodes())
            .map(|j| {
                let values = (0..grid.len())
                    .map(|i| f64::from_le_bytes(word(5 + j * grid.len() + i)))
                    .collect();
                Field::new(grid, values)
            })
            .collect::<Result<_>>()?;
        Self::new(time_grid, snapshots)
    }

    /// Fourier coefficients as time series, `[mode][node]`.
    fn mode_series(&self) -> Vec<Vec<Complex64>> {
        transpose(self.snapshots.iter().map(|s| s.forward().coeffs).collect())
    }

    fn from_mode_series(time_grid: TimeGrid, grid: TorusGrid, series: Vec<Vec<Complex64>>) -> Self {
        let snapshots = transpose(series)
            .into_iter()
            .map(|coeffs| SpectralField { grid, coeffs }.inverse())
            .collect();
        SpaceTimePath {
            time_grid,
            snapshots,
        }
    }
}

fn transpose(rows: Vec<Vec<Complex64>>) -> Vec<Vec<Complex64>> {
    let n_cols = rows.first().map_or(0, Vec::len);
    (0..n_cols)
        .map(|c| rows.iter().map(|r| r[c]).collect())
        .collect()
}

/// The noise term `Σ_k g^k dw^k`.
#[derive(Debug, Clone, Copy)]
pub enum NoiseForcing<'a> {
    /// `stacks[j][k] = g^k(t_j)`; nodes `0..n_steps` are used.
    Stacks(&'a [Vec<Field>]),
    /// `g^k = h·w_k η^k`, with `h ≡ 1` when absent.
    Basis {
        basis: &'a NoiseBasis,
        h: Option<&'a Field>,
    },
}

impl NoiseForcing<'_> {
    fn validate(&self, noise: &NoisePath) -> Result<TorusGrid> {
        let (grid, k) = match self {
            NoiseForcing::Stacks(stacks) => {
                if stacks.len() < noise.grid.n_steps {
                    return Err(Error::GridMismatch(format!(
                        "{} g snapshots for {} steps",
                        stacks.len(),
                        noise.grid.n_steps
                    )));
                }
                let k = stacks[0].len();
                let Some(first) = stacks[0].first() else {
                    return Err(Error::invalid("empty g stack"));
                };
                for stack in &stacks[..noise.grid.n_steps] {
                    if stack.len() != k {
                        return Err(Error::GridMismatch("g stacks of different length".into()));
                    }
                    for g in stack {
                        if g.grid != first.grid {
                            return Err(Error::GridMismatch("g on different grids".into()));
                        }
                        ensure_finite(&g.values, "g")?;
                    }
                }
                (first.grid, k)
            }
            NoiseForcing::Basis { basis, h } => {
                if let Some(h) = h {
                    if h.grid != basis.grid {
                        return Err(Error::GridMismatch("h and basis on different grids".into()));
                    }
                    ensure_finite(&h.values, "h")?;
                }
                (basis.grid, basis.len())
            }
        };
        if k > noise.n_modes {
            return Err(Error::invalid(format!(
                "{k} noise modes needed, path has {}",
                noise.n_modes
            )));
        }
        Ok(grid)
    }

    /// Fourier coefficients of `Σ_k g^k(t_j) Δw^k_j`.
    fn increment(&self, j: usize, noise: &NoisePath) -> Vec<Complex64> {
        match self {
            NoiseForcing::Stacks(stacks) => {
                let stack = &stacks[j];
                let mut sum = Field::zeros(stack[0].grid);
                for (k, g) in stack.iter().enumerate() {
                    let dw = noise.get(k, j);
                    sum.values
                        .iter_mut()
                        .zip(&g.values)
                        .for_each(|(s, v)| *s += v * dw);
                }
                sum.forward().coeffs
            }
            NoiseForcing::Basis { basis, h } => {
                let dw: Vec<f64> = (0..basis.len()).map(|k| noise.get(k, j)).collect();
                let spec = basis.synthesize_spectral(&dw);
                match h {
                    None => spec.coeffs,
                    Some(h) => {
                        let mut f = spec.inverse();
                        f.values
                            .iter_mut()
                            .zip(&h.values)
                            .for_each(|(v, w)| *v *= w);
                        f.forward().coeffs
                    }
                }
            }
        }
    }

    /// `[mode][j]` for `j < n_steps`.
    fn increment_series(&self, noise: &NoisePath) -> Vec<Vec<Complex64>> {
        transpose(
            (0..noise.grid.n_steps)
                .map(|j| self.increment(j, noise))
                .collect(),
        )
    }
}

fn ml(a: f64, b: f64, z: f64) -> Result<f64> {
    ml_eval(&MLParams::new(a, b)?, z)
}

/// Product-integration weights of `r^{α−1}E_{α,α}(−λr^α)` exact on piecewise
/// linear data: `û_n = Σ_{i<n} A_{n−i−1} f_i + B_{n−i−1} f_{i+1}`.
fn deterministic_weights(
    alpha: f64,
    lambda: f64,
    dt: f64,
    n: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut g1 = vec![0.0; n + 1];
    let mut g2 = vec![0.0; n + 1];
    for m in 1..=n {
        let r = m as f64 * dt;
        let z = -lambda * r.powf(alpha);
        g1[m] = r.powf(alpha) * ml(alpha, alpha + 1.0, z)?;
        g2[m] = r.powf(alpha + 1.0) * ml(alpha, alpha + 2.0, z)?;
    }
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for m in 0..n {
        let dg2 = (g2[m + 1] - g2[m]) / dt;
        a.push(g1[m + 1] - dg2);
        b.push(dg2 - g1[m]);
    }
    Ok((a, b))
}

/// Left-endpoint stochastic weights `W_m = K(m·dt)`, `W_0 = 0`. For `α < β`
/// the first interval uses the interval mean of the integrable singularity.
fn stochastic_weights(orders: &FracOrders, lambda: f64, dt: f64, n: usize) -> Result<Vec<f64>> {
    let (alpha, beta) = (orders.alpha, orders.beta);
    let b = 1.0 + alpha - beta;
    let params = MLParams::new(alpha, b)?;
    let mut w = vec![0.0; n + 1];
    for (m, wm) in w.iter_mut().enumerate().skip(1) {
        let r = m as f64 * dt;
        *wm = r.powf(alpha - beta) * ml_eval(&params, -lambda * r.powf(alpha))?;
    }
    if alpha < beta && n > 0 {
        w[1] = dt.powf(alpha - beta) * ml(alpha, b + 1.0, -lambda * dt.powf(alpha))?;
    }
    Ok(w)
}

/// Spectral mild-formula solver on fixed space and time grids.
pub struct SpectralSolver {
    pub orders: FracOrders,
    pub grid: TorusGrid,
    pub time_grid: TimeGrid,
    shells: Shells,
    det: OnceLock<Vec<(Vec<f64>, Vec<f64>)>>,
    sto: OnceLock<Vec<Vec<f64>>>,
}

impl SpectralSolver {
    pub fn new(orders: FracOrders, grid: TorusGrid, time_grid: TimeGrid) -> Self {
        SpectralSolver {
            orders,
            grid,
            time_grid,
            shells: Shells::new(&grid),
            det: OnceLock::new(),
            sto: OnceLock::new(),
        }
    }

    fn lambdas(&self) -> Vec<f64> {
        let unit = self.grid.xi_unit_sq();
        self.shells
            .norms
            .iter()
            .map(|&m2| unit * m2 as f64)
            .collect()
    }

    fn det_weights(&self) -> Result<&[(Vec<f64>, Vec<f64>)]> {
        if let Some(w) = self.det.get() {
            return Ok(w);
        }
        let (dt, n) = (self.time_grid.dt(), self.time_grid.n_steps);
        let w = self
            .lambdas()
            .par_iter()
            .map(|&l| deterministic_weights(self.orders.alpha, l, dt, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.det.get_or_init(|| w))
    }

    fn sto_weights(&self) -> Result<&[Vec<f64>]> {
        if let Some(w) = self.sto.get() {
            return Ok(w);
        }
        let (dt, n) = (self.time_grid.dt(), self.time_grid.n_steps);
        let w = self
            .lambdas()
            .par_iter()
            .map(|&l| stochastic_weights(&self.orders, l, dt, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.sto.get_or_init(|| w))
    }

    /// Stochastic weights `W_m`, `m = 0..=n_steps`, of the shell `|m|² = m2`.
    pub fn kernel_weights(&self, m2: i64) -> Result<Vec<f64>> {
        let shell = self
            .shells
            .norms
            .binary_search(&m2)
            .map_err(|_| Error::invalid(format!("|m|^2 = {m2} does not occur on the grid")))?;
        Ok(self.sto_weights()?[shell].clone())
    }

    pub fn deterministic(&self, f: &SpaceTimePath) -> Result<SpaceTimePath> {
        if f.time_grid != self.time_grid || f.grid() != self.grid {
            return Err(Error::GridMismatch(
                "forcing does not match the solver grids".into(),
            ));
        }
        let weights = self.det_weights()?;
        let n = self.time_grid.n_steps;
        let series = f.mode_series();
        let out = series
            .par_iter()
            .enumerate()
            .map(|(k, fk)| {
                let (a, b) = &weights[self.shells.shell_of[k]];
                let mut u = vec![Complex64::new(0.0, 0.0); n + 1];
                for (step, un) in u.iter_mut().enumerate().skip(1) {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for i in 0..step {
                        let m = step - i - 1;
                        acc += a[m] * fk[i] + b[m] * fk[i + 1];
                    }
                    *un = acc;
                }
                u
            })
            .collect();
        Ok(SpaceTimePath::from_mode_series(
            self.time_grid,
            self.grid,
            out,
        ))
    }

    fn check_noise(&self, g: &NoiseForcing, noise: &NoisePath) -> Result<()> {
        if noise.grid != self.time_grid {
            return Err(Error::GridMismatch(
                "noise does not match the time grid".into(),
            ));
        }
        if g.validate(noise)? != self.grid {
            return Err(Error::GridMismatch(
                "g does not match the spatial grid".into(),
            ));
        }
        Ok(())
    }

    pub fn stochastic(&self, g: NoiseForcing, noise: &NoisePath) -> Result<SpaceTimePath> {
        self.check_noise(&g, noise)?;
        let weights = self.sto_weights()?;
        let n = self.time_grid.n_steps;
        let series = g.increment_series(noise);
        let out = series
            .par_iter()
            .enumerate()
            .map(|(k, xk)| {
                let w = &weights[self.shells.shell_of[k]];
                let mut u = vec![Complex64::new(0.0, 0.0); n + 1];
                for (step, un) in u.iter_mut().enumerate().skip(1) {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (j, x) in xk[..step].iter().enumerate() {
                        acc += w[step - j] * x;
                    }
                    *un = acc;
                }
                u
            })
            .collect();
        Ok(SpaceTimePath::from_mode_series(
            self.time_grid,
            self.grid,
            out,
        ))
    }

    /// Fourier coefficients of the stochastic solution at the final time only.
    pub fn stochastic_final(&self, g: NoiseForcing, noise: &NoisePath) -> Result<SpectralField> {
        self.check_noise(&g, noise)?;
        let weights = self.sto_weights()?;
        let n = self.time_grid.n_steps;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        for j in 0..n {
            let x = g.increment(j, noise);
            for (k, (c, xk)) in coeffs.iter_mut().zip(&x).enumerate() {
                *c += weights[self.shells.shell_of[k]][n - j] * xk;
            }
        }
        Ok(SpectralField {
            grid: self.grid,
            coeffs,
        })
    }
}

/// `u` solving `∂ₜ^α u = Δu + f`, `u(0) = 0`.
pub fn solve_deterministic(orders: FracOrders, f: &SpaceTimePath) -> Result<SpaceTimePath> {
    SpectralSolver::new(orders, f.grid(), f.time_grid).deterministic(f)
}

/// `u` solving `∂ₜ^α u = Δu + ∂ₜ^β Σ_k ∫ g^k dw^k`, `u(0) = 0`, on the time
/// grid of `noise`.
pub fn solve_stochastic_additive(
    orders: FracOrders,
    g: NoiseForcing,
    noise: &NoisePath,
) -> Result<SpaceTimePath> {
    let grid = g.validate(noise)?;
    SpectralSolver::new(orders, grid, noise.grid).stochastic(g, noise)
}

/// Independent L1 Caputo time stepping, implicit in `−|ξ|²û`. With noise
/// (`β < 1/2`) the forcing gains
/// `f̄(t) = Γ(1−β)^{−1} Σ_k ∫_0^t (t−s)^{−β} g^k(s) dw^k_s`, formed with
/// interval means of the singular factor.
pub fn solve_l1_oracle(
    orders: FracOrders,
    f: &SpaceTimePath,
    noise: Option<(NoiseForcing, &NoisePath)>,
) -> Result<SpaceTimePath> {
    let alpha = orders.alpha;
    if alpha > 1.0 {
        return Err(Error::invalid(format!(
            "L1 oracle needs alpha <= 1, got {alpha}"
        )));
    }
    let (tg, grid) = (f.time_grid, f.grid());
    let (dt, n) = (tg.dt(), tg.n_steps);
    let mut forcing = f.mode_series();
    if let Some((g, w)) = noise {
        let beta = orders.beta;
        if beta >= 0.5 {
            return Err(Error::invalid(format!(
                "stochastic L1 oracle needs beta < 1/2, got {beta}"
            )));
        }
        if w.grid != tg || g.validate(w)? != grid {
            return Err(Error::GridMismatch(
                "noise does not match the forcing grids".into(),
            ));
        }
        let omega: Vec<f64> = (0..=n)
            .map(|m| {
                if m == 0 {
                    0.0
                } else {
                    let m = m as f64;
                    dt.powf(-beta) * (m.powf(1.0 - beta) - (m - 1.0).powf(1.0 - beta))
                        / ((1.0 - beta) * gamma(1.0 - beta))
                }
            })
            .collect();
        let series = g.increment_series(w);
        forcing
            .par_iter_mut()
            .zip(series.par_iter())
            .for_each(|(fk, xk)| {
                for step in 1..=n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (j, x) in xk[..step].iter().enumerate() {
                        acc += omega[step - j] * x;
                    }
                    fk[step] += acc;
                }
            });
    }
    let c = dt.powf(-alpha) / gamma(2.0 - alpha);
    let b: Vec<f64> = (0..n)
        .map(|j| ((j + 1) as f64).powf(1.0 - alpha) - (j as f64).powf(1.0 - alpha))
        .collect();
    let out = forcing
        .par_iter()
        .enumerate()
        .map(|(k, fk)| {
            let lambda = grid.xi_sq(k);
            let mut u = vec![Complex64::new(0.0, 0.0); n + 1];
            for step in 1..=n {
                let mut hist = Complex64::new(0.0, 0.0);
                for j in 1..step {
                    hist += b[j] * (u[step - j] - u[step - j - 1]);
                }
                u[step] = (fk[step] + c * b[0] * u[step - 1] - c * hist) / (c * b[0] + lambda);
            }
            u
        })
        .collect();
    Ok(SpaceTimePath::from_mode_series(tg, grid, out))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Exponent of the `L_p([0,T] × torus)` stopping norm.
    pub p: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            tol: 1e-8,
            max_iter: 50,
            p: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardOutcome {
    pub solution: SpaceTimePath,
    /// `‖u⁽ⁿ⁾ − u⁽ⁿ⁻¹⁾‖` for `n = 1, 2, …`; the last one is below tolerance.
    pub increments: Vec<f64>,
    /// Largest ratio of successive increments.
    pub ratio: f64,
    /// Maps applied before the confirming one.
    pub iterations: usize,
}

/// One map `u ↦ solve_deterministic(f(u)) + solve_stochastic_additive(g(u))`;
/// `g` at node `j` sees `u(t_j)` only.
pub fn picard_step(
    solver: &SpectralSolver,
    f_fn: &dyn Fn(f64, &Field) -> Field,
    g_fn: &dyn Fn(f64, &Field) -> Vec<Field>,
    noise: &NoisePath,
    u: &SpaceTimePath,
) -> Result<SpaceTimePath> {
    let tg = solver.time_grid;
    let f_snaps = u
        .snapshots
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let v = f_fn(tg.node(j), s);
            ensure_finite(&v.values, "f(u)")?;
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    let det = solver.deterministic(&SpaceTimePath::new(tg, f_snaps)?)?;
    let stacks: Vec<Vec<Field>> = u.snapshots[..tg.n_steps]
        .iter()
        .enumerate()
        .map(|(j, s)| g_fn(tg.node(j), s))
        .collect();
    if stacks.iter().all(|s| s.is_empty()) {
        return Ok(det);
    }
    let sto = solver.stochastic(NoiseForcing::Stacks(&stacks), noise)?;
    let snapshots = det
        .snapshots
        .into_iter()
        .zip(sto.snapshots)
        .map(|(mut a, b)| {
            a.values
                .iter_mut()
                .zip(&b.values)
                .for_each(|(x, y)| *x += y);
            a
        })
        .collect();
    Ok(SpaceTimePath {
        time_grid: tg,
        snapshots,
    })
}

/// Picard iteration from `u⁽⁰⁾ = 0` until successive iterates differ by at
/// most `opts.tol`. A ratio of successive increments `≥ 1` is reported as a
/// Lipschitz warning.
pub fn solve_semilinear(
    orders: FracOrders,
    grid: TorusGrid,
    f_fn: &dyn Fn(f64, &Field) -> Field,
    g_fn: &dyn Fn(f64, &Field) -> Vec<Field>,
    noise: &NoisePath,
    opts: PicardOptions,
) -> Result<Diagnosed<PicardOutcome>> {
    if !(opts.tol > 0.0) || opts.max_iter == 0 || !(opts.p >= 1.0) {
        return Err(Error::invalid(
            "picard options need tol > 0, max_iter >= 1, p >= 1",
        ));
    }
    let solver = SpectralSolver::new(orders, grid, noise.grid);
    let mut u = SpaceTimePath::zeros(noise.grid, grid);
    let mut increments = Vec::new();
    let mut warnings = Vec::new();
    let mut ratio = 0.0f64;
    for iteration in 1..=opts.max_iter {
        let next = picard_step(&solver, f_fn, g_fn, noise, &u)?;
        let inc = next.diff_lp_norm(&u, opts.p)?;
        if let Some(&prev) = increments.last() {
            if prev > 0.0 {
                let r = inc / prev;
                ratio = ratio.max(r);
                if r >= 1.0 {
                    warnings.push(Warning::LipschitzViolation {
                        iteration,
                        ratio: r,
                    });
                }
            }
        }
        increments.push(inc);
        u = next;
        if inc <= opts.tol {
            return Ok(Diagnosed {
                value: PicardOutcome {
                    solution: u,
                    increments,
                    ratio,
                    iterations: iteration - 1,
                },
                warnings,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        last_increment: *increments.last().unwrap(),
        ratio,
    })
}

/// Solution of `y(t) = N ∫_0^t (t−s)^{θ−1} (y(s) + a) ds`, namely
/// `a·(E_θ(N Γ(θ) t^θ) − 1)`.
pub fn gronwall_envelope(theta: f64, n_const: f64, a: f64, t: f64) -> Result<f64> {
    Ok(a * (ml(theta, 1.0, n_const * gamma(theta) * t.powf(theta))? - 1.0))
}

/// Smallest `N` (to relative precision 1e−6) whose envelope dominates
/// `values` at `times`.
pub fn fit_gronwall_constant(theta: f64, a: f64, times: &[f64], values: &[f64]) -> Result<f64> {
    if !(theta > 0.0 && theta <= 1.0) || !(a > 0.0) || times.len() != values.len() {
        return Err(Error::invalid(
            "gronwall fit needs theta in (0, 1], a > 0, matching lengths",
        ));
    }
    let covers = |n: f64| -> Result<bool> {
        for (&t, &v) in times.iter().zip(values) {
            if gronwall_envelope(theta, n, a, t)? < v {
                return Ok(false);
            }
        }
        Ok(true)
    };
    let mut hi = 1.0;
    while !covers(hi)? {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::invalid(
                "no gronwall constant up to 1e6 covers the data",
            ));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if covers(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
