//! The kernels `p(t,·)` and `q_{α,β}(t,·)` through their Fourier symbols
//! `t^{α−β−σ} E_{α,1+α−β−σ}(−|ξ|² t^α)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Diagnosed, Error, Result, Warning};
use crate::mittag_leffler::{ml_eval, MLParams};
use crate::orders::FracOrders;
use crate::spectral::{Field, SpectralField, TorusGrid};

/// Relative size of the Nyquist-mode symbol above which a kernel counts as under-resolved.
pub const NYQUIST_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelSymbol {
    pub orders: FracOrders,
    /// Order of an extra time derivative applied to the kernel.
    pub sigma: f64,
    pub t: f64,
}

impl KernelSymbol {
    pub fn new(orders: FracOrders, t: f64) -> Result<Self> {
        Self::with_sigma(orders, 0.0, t)
    }

    pub fn with_sigma(orders: FracOrders, sigma: f64, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid(format!(
                "kernel time t = {t} must be positive"
            )));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma = {sigma} must be non-negative"
            )));
        }
        Ok(KernelSymbol { orders, sigma, t })
    }

    pub fn ml_params(&self) -> MLParams {
        MLParams {
            a: self.orders.alpha,
            b: self.orders.symbol_b(self.sigma),
            tol: crate::mittag_leffler::DEFAULT_TOL,
        }
    }

    pub fn eval(&self, xi_sq: f64) -> Result<f64> {
        symbol_eval(self, xi_sq)
    }
}

/// `t^{α−β−σ} E_{α,1+α−β−σ}(−|ξ|² t^α)`.
pub fn symbol_eval(sym: &KernelSymbol, xi_sq: f64) -> Result<f64> {
    if !(xi_sq >= 0.0 && xi_sq.is_finite()) {
        return Err(Error::invalid(format!(
            "|xi|^2 = {xi_sq} must be non-negative"
        )));
    }
    let o = &sym.orders;
    let pre = sym.t.powf(o.alpha - o.beta - sym.sigma);
    let e = ml_eval(&sym.ml_params(), -xi_sq * sym.t.powf(o.alpha))?;
    Ok(pre * e)
}

/// The distinct values of `|m|²` on the grid, ascending.
pub fn occurring_mode_norms(grid: &TorusGrid) -> Vec<i64> {
    let h = (grid.n / 2) as i64;
    let max = grid.dim as i64 * h * h;
    let mut seen = vec![false; max as usize + 1];
    let squares: Vec<i64> = (0..=h).map(|m| m * m).collect();
    match grid.dim {
        1 => squares.iter().for_each(|&a| seen[a as usize] = true),
        2 => {
            for &a in &squares {
                for &b in &squares {
                    seen[(a + b) as usize] = true;
                }
            }
        }
        _ => {
            for &a in &squares {
                for &b in &squares {
                    for &c in &squares {
                        seen[(a + b + c) as usize] = true;
                    }
                }
            }
        }
    }
    (0..=max).filter(|&m2| seen[m2 as usize]).collect()
}

/// Groups grid modes by `|m|²` so weights are computed once per shell.
pub(crate) struct Shells {
    pub norms: Vec<i64>,
    pub shell_of: Vec<usize>,
}

impl Shells {
    pub fn new(grid: &TorusGrid) -> Self {
        let norms = occurring_mode_norms(grid);
        let mut index = vec![usize::MAX; *norms.last().unwrap() as usize + 1];
        for (i, &m2) in norms.iter().enumerate() {
            index[m2 as usize] = i;
        }
        let shell_of = (0..grid.len())
            .map(|k| index[grid.mode_norm_sq(k) as usize])
            .collect();
        Shells { norms, shell_of }
    }

    /// Number of grid modes in each shell.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.norms.len()];
        self.shell_of.iter().for_each(|&s| c[s] += 1);
        c
    }
}

/// `symbol(|ξ|²)` for every occurring `|m|²`, indexed by `|m|²` (NaN where absent).
pub fn symbol_table(
    grid: &TorusGrid,
    symbol: impl Fn(f64) -> Result<f64> + Sync,
) -> Result<Vec<f64>> {
    let norms = occurring_mode_norms(grid);
    let unit = grid.xi_unit_sq();
    let values: Vec<f64> = norms
        .par_iter()
        .map(|&m2| symbol(unit * m2 as f64))
        .collect::<Result<_>>()?;
    let mut table = vec![f64::NAN; *norms.last().unwrap() as usize + 1];
    for (&m2, v) in norms.iter().zip(values) {
        table[m2 as usize] = v;
    }
    Ok(table)
}

/// Physical-space field of a radial multiplier, scaled so that the cell sum
/// equals the multiplier at `ξ = 0`.
fn field_from_table(grid: &TorusGrid, table: &[f64]) -> Field {
    let coeffs = (0..grid.len())
        .map(|k| table[grid.mode_norm_sq(k) as usize].into())
        .collect();
    let mut field = SpectralField {
        grid: *grid,
        coeffs,
    }
    .inverse();
    let scale = grid.len() as f64 / grid.side.powi(grid.dim as i32);
    field.values.iter_mut().for_each(|v| *v *= scale);
    field
}

fn nyquist_warning(grid: &TorusGrid, table: &[f64]) -> Option<Warning> {
    let nyq = table[grid.nyquist_norm_sq() as usize].abs();
    let reference = if table[0] != 0.0 {
        table[0].abs()
    } else {
        table
            .iter()
            .filter(|v| v.is_finite())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    };
    (nyq > NYQUIST_TOL * reference).then_some(Warning::UnderResolvedKernel {
        nyquist_symbol: nyq,
        reference,
    })
}

/// `(−Δ)^{γ/2}` applied to the kernel of `sym` on `grid`; `γ = 0` gives the kernel itself.
pub fn kernel_field_lap(
    sym: &KernelSymbol,
    grid: &TorusGrid,
    gamma: f64,
) -> Result<Diagnosed<Field>> {
    let table = symbol_table(grid, |xi_sq| {
        let s = symbol_eval(sym, xi_sq)?;
        Ok(if gamma == 0.0 {
            s
        } else if xi_sq == 0.0 {
            0.0
        } else {
            s * xi_sq.powf(0.5 * gamma)
        })
    })?;
    let warnings = nyquist_warning(grid, &table).into_iter().collect();
    Ok(Diagnosed {
        value: field_from_table(grid, &table),
        warnings,
    })
}

/// `q_{α,β}(t,·)` on the grid; `β = α` gives `p(t,·)`.
pub fn kernel_field(orders: FracOrders, t: f64, grid: &TorusGrid) -> Result<Diagnosed<Field>> {
    kernel_field_lap(&KernelSymbol::new(orders, t)?, grid, 0.0)
}

/// Max relative discrepancy between `q(t,·)` and `t^{−αd/2+α−β} q(1, · t^{−α/2})`,
/// the latter computed on the grid of side `L t^{−α/2}` with the same points.
pub fn scaling_check(orders: FracOrders, t: f64, grid: &TorusGrid) -> Result<Diagnosed<f64>> {
    let direct = kernel_field(orders, t, grid)?;
    let shrink = t.powf(-0.5 * orders.alpha);
    let rescaled = TorusGrid::new(grid.dim, grid.n, grid.side * shrink)?;
    let unit = kernel_field(orders, 1.0, &rescaled)?;
    let factor = t.powf(-orders.alpha * grid.dim as f64 / 2.0 + orders.alpha - orders.beta);
    let scale = direct
        .value
        .values
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = direct
        .value
        .values
        .iter()
        .zip(&unit.value.values)
        .fold(0.0f64, |m, (a, b)| m.max((a - factor * b).abs()));
    let mut warnings = direct.warnings;
    warnings.extend(unit.warnings);
    Ok(Diagnosed {
        value: diff / scale,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub dim: usize,
    pub gamma: f64,
    /// Fitted exponent of `|x|` on `[2dx, t^{α/2}]`.
    pub near_exponent: f64,
    /// Fitted exponent of `|x|` on `[2t^{α/2}, L/4]`; `-inf` when the field
    /// drops below the noise floor almost immediately.
    pub far_exponent: f64,
    /// `max |K(x)| / (|x|^{(−d+2−γ)∧0} ∧ |x|^{−d−γ})` over both windows.
    pub n_star: f64,
    /// The far field reached the noise floor inside its window, or steepened markedly.
    pub superpolynomial: bool,
    /// `d + γ = 2`: the near-field bound carries a logarithm and is not asserted.
    pub log_case: bool,
    pub near_ok: bool,
    pub far_ok: bool,
    pub near_points: usize,
    pub far_points: usize,
    /// Magnitude below which profile values were treated as numerical noise.
    pub ringing_floor: f64,
}

const NOISE_FLOOR: f64 = 1e-12;

/// Least-squares slope of `ln y` against `ln x`, on log-uniform bins of ten
/// per decade so that the densely sampled large-`x` end does not dominate.
fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let mut bins: Vec<(i64, f64, f64, f64)> = Vec::new();
    for &(x, y) in points {
        let key = (10.0 * x.log10()).floor() as i64;
        match bins.last_mut() {
            Some(bin) if bin.0 == key => {
                bin.1 += x.ln();
                bin.2 += y.ln();
                bin.3 += 1.0;
            }
            _ => bins.push((key, x.ln(), y.ln(), 1.0)),
        }
    }
    let centres: Vec<(f64, f64)> = bins.iter().map(|b| (b.1 / b.3, b.2 / b.3)).collect();
    let n = centres.len() as f64;
    let mx = centres.iter().map(|c| c.0).sum::<f64>() / n;
    let my = centres.iter().map(|c| c.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (lx, ly) in &centres {
        sxy += (lx - mx) * (ly - my);
        sxx += (lx - mx) * (lx - mx);
    }
    sxy / sxx
}

/// Values of a radial multiplier's field at the points `x = i·dx` of the
/// first axis, `i = 0..n`, without forming the full grid: the other
/// wavenumbers are summed out first, then a single 1-d inverse transform.
pub fn axis_profile(
    grid: &TorusGrid,
    symbol: impl Fn(f64) -> Result<f64> + Sync,
) -> Result<Vec<f64>> {
    let h = grid.n / 2;
    let unit = grid.xi_unit_sq();
    // number of signed indices in [−n/2, n/2) with the given |m|
    let weight = |m: usize| if m == 0 || m == h { 1.0 } else { 2.0 };
    let sq = |m: usize| (m * m) as f64;
    // marginal[a] = Σ over the other axes of symbol(|ξ|²) at |m₁| = a
    let marginal: Vec<f64> = match grid.dim {
        1 => (0..=h)
            .map(|a| symbol(unit * sq(a)))
            .collect::<Result<_>>()?,
        2 => {
            let rows: Vec<Vec<f64>> = (0..=h)
                .into_par_iter()
                .map(|a| (a..=h).map(|b| symbol(unit * (sq(a) + sq(b)))).collect())
                .collect::<Result<_>>()?;
            let mut m = vec![0.0; h + 1];
            for a in 0..=h {
                for (j, s) in rows[a].iter().enumerate() {
                    let b = a + j;
                    m[a] += weight(b) * s;
                    if b != a {
                        m[b] += weight(a) * s;
                    }
                }
            }
            m
        }
        _ => (0..=h)
            .into_par_iter()
            .map(|a| {
                let mut acc = 0.0;
                for b in 0..=h {
                    for c in b..=h {
                        let w = weight(b) * weight(c) * if c == b { 1.0 } else { 2.0 };
                        acc += w * symbol(unit * (sq(a) + sq(b) + sq(c)))?;
                    }
                }
                Ok(acc)
            })
            .collect::<Result<_>>()?,
    };
    let line = TorusGrid::new(1, grid.n, grid.side)?;
    let coeffs = (0..grid.n)
        .map(|i| marginal[line.mode_index(i).unsigned_abs() as usize].into())
        .collect();
    let values = SpectralField { grid: line, coeffs }.inverse().values;
    let scale = grid.n as f64 / grid.side.powi(grid.dim as i32);
    Ok(values.into_iter().map(|v| v * scale).collect())
}

/// Fits the near- and far-field power laws of `(−Δ)^{γ/2} q_{α,β}(1,·)`
/// along the first coordinate axis.
///
/// Spectral truncation leaves a ringing floor in the far field; it is
/// measured on `[L/4, L/2)`, where the true kernel is exponentially small,
/// and points below ten times that floor are excluded from the fits.
pub fn decay_check(orders: FracOrders, grid: &TorusGrid, gamma: f64) -> Result<DecayReport> {
    if !(0.0..2.0).contains(&gamma) {
        return Err(Error::invalid(format!("gamma = {gamma} outside [0, 2)")));
    }
    let t: f64 = 1.0;
    let sym = KernelSymbol::new(orders, t)?;
    let dx = grid.dx();
    let scale = t.powf(0.5 * orders.alpha);
    let near = (2.0 * dx, scale);
    let far = (2.0 * scale, grid.side / 4.0);
    for (name, (lo, hi)) in [("near", near), ("far", far)] {
        if hi / lo < 10.0 * (1.0 - 1e-12) {
            return Err(Error::InsufficientResolution(format!(
                "{name}-field window [{lo}, {hi}] spans less than one decade"
            )));
        }
    }
    let values = axis_profile(grid, |xi_sq| {
        let s = symbol_eval(&sym, xi_sq)?;
        Ok(if gamma == 0.0 {
            s
        } else if xi_sq == 0.0 {
            0.0
        } else {
            s * xi_sq.powf(0.5 * gamma)
        })
    })?;
    let profile: Vec<(f64, f64)> = (1..grid.n / 2)
        .map(|i| (i as f64 * dx, values[i].abs()))
        .collect();
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let ringing = profile
        .iter()
        .filter(|&&(r, _)| r >= grid.side / 4.0)
        .fold(0.0f64, |m, p| m.max(p.1));
    let floor = (NOISE_FLOOR * peak).max(10.0 * ringing);
    let window = |(lo, hi): (f64, f64)| -> Vec<(f64, f64)> {
        profile
            .iter()
            .copied()
            .filter(|&(r, _)| r >= lo * (1.0 - 1e-12) && r <= hi * (1.0 + 1e-12))
            .collect()
    };
    let near_all = window(near);
    let far_all = window(far);
    let near_pts: Vec<_> = near_all.iter().copied().filter(|p| p.1 > floor).collect();
    let far_pts: Vec<_> = far_all
        .iter()
        .copied()
        .take_while(|p| p.1 > floor)
        .collect();

    let near_exponent = if near_pts.len() >= 2 {
        loglog_slope(&near_pts)
    } else {
        f64::NAN
    };
    let reached_floor = far_pts.len() < far_all.len();
    let far_exponent = if far_pts.len() >= 3 {
        loglog_slope(&far_pts)
    } else {
        f64::NEG_INFINITY
    };
    let steepening = far_pts.len() >= 6 && {
        let half = far_pts.len() / 2;
        loglog_slope(&far_pts[half..]) < loglog_slope(&far_pts[..half]) - 1.0
    };
    let d = grid.dim as f64;
    let superpolynomial = reached_floor || steepening;
    // a bounded kernel cannot vanish at the origin, so the near bound is at most |x|⁰
    let near_bound = (-d + 2.0 - gamma).min(0.0);
    let far_bound = -d - gamma;
    let n_star = near_all
        .iter()
        .chain(&far_all)
        .map(|&(r, v)| v / r.powf(near_bound).min(r.powf(far_bound)))
        .fold(0.0f64, f64::max);
    let log_case = -d + 2.0 - gamma == 0.0;
    Ok(DecayReport {
        dim: grid.dim,
        gamma,
        near_exponent,
        far_exponent,
        n_star,
        superpolynomial,
        log_case,
        near_ok: log_case || near_exponent >= near_bound - 0.3,
        far_ok: superpolynomial || far_exponent <= far_bound + 0.3,
        near_points: near_pts.len(),
        far_points: far_pts.len(),
        ringing_floor: floor,
    })
}
