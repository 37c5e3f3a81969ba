//! Periodic grids on `[0, L)^d`, discrete Fourier transforms, Fourier
//! multipliers and Bessel-potential norms.
//!
//! Transforms are unnormalised: `û(m) = Σ_x u(x) e^{−iξ·x}` with
//! `ξ = 2πm/L`, and the inverse divides by the number of points.

use std::cell::RefCell;
use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    pub dim: usize,
    pub n: usize,
    pub side: f64,
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize, side: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::invalid(format!("dimension {dim} not in 1..=3")));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "n_per_axis = {n} must be even and >= 8"
            )));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::invalid(format!(
                "side length {side} must be positive"
            )));
        }
        Ok(TorusGrid { dim, n, side })
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        self.side / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    /// Signed wavenumber index of axis position `i`: `i` below `n/2`, `i − n` above.
    pub fn mode_index(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Per-axis positions of flat index `k` (row-major, last axis fastest).
    pub fn unravel(&self, mut k: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for a in (0..self.dim).rev() {
            out[a] = k % self.n;
            k /= self.n;
        }
        out
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().take(self.dim).fold(0, |k, &i| k * self.n + i)
    }

    /// Integer wavevector `m` of flat index `k`.
    pub fn mode(&self, k: usize) -> [i64; 3] {
        let idx = self.unravel(k);
        let mut m = [0; 3];
        for a in 0..self.dim {
            m[a] = self.mode_index(idx[a]);
        }
        m
    }

    /// `|m|²` of flat index `k`.
    pub fn mode_norm_sq(&self, k: usize) -> i64 {
        self.mode(k).iter().map(|m| m * m).sum()
    }

    /// `|ξ|² = (2π/L)² |m|²` of flat index `k`.
    pub fn xi_sq(&self, k: usize) -> f64 {
        self.xi_unit_sq() * self.mode_norm_sq(k) as f64
    }

    pub fn xi_unit_sq(&self) -> f64 {
        let u = 2.0 * std::f64::consts::PI / self.side;
        u * u
    }

    /// Coordinates `x = i·L/n` of flat index `k`.
    pub fn point(&self, k: usize) -> [f64; 3] {
        let idx = self.unravel(k);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = idx[a] as f64 * self.dx();
        }
        x
    }

    /// Minimal-image coordinates in `[−L/2, L/2)` of flat index `k`.
    pub fn centered_point(&self, k: usize) -> [f64; 3] {
        let m = self.mode(k);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = m[a] as f64 * self.dx();
        }
        x
    }

    /// Largest `|m|²` whose sphere fits in the grid, `(n/2)²`.
    pub fn nyquist_norm_sq(&self) -> i64 {
        let h = (self.n / 2) as i64;
        h * h
    }

    fn check_same(&self, other: &TorusGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub grid: TorusGrid,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: TorusGrid,
    pub coeffs: Vec<Complex64>,
}

thread_local! {
    static PLANS: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> = RefCell::new(HashMap::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cache| {
        cache
            .borrow_mut()
            .entry((n, inverse))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if inverse {
                    planner.plan_fft_inverse(n)
                } else {
                    planner.plan_fft_forward(n)
                }
            })
            .clone()
    })
}

/// In-place unnormalised transform along every axis.
pub(crate) fn fft_nd(grid: &TorusGrid, data: &mut [Complex64], inverse: bool) {
    let n = grid.n;
    let fft = plan(n, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    // last axis is contiguous
    fft.process_with_scratch(data, &mut scratch);
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..grid.dim.saturating_sub(1) {
        let stride = n.pow((grid.dim - 1 - axis) as u32);
        let block = stride * n;
        for start in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (i, c) in line.iter_mut().enumerate() {
                    *c = data[base + i * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (i, c) in line.iter().enumerate() {
                    data[base + i * stride] = *c;
                }
            }
        }
    }
}

impl Field {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        ensure_finite(&values, "field")?;
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Field {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f` at the grid points `x ∈ [0, L)^d` (unused axes are zero).
    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64; 3]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|k| f(&grid.point(k))).collect();
        Self::new(grid, values)
    }

    pub fn forward(&self) -> SpectralField {
        let mut coeffs: Vec<Complex64> = self
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        fft_nd(&self.grid, &mut coeffs, false);
        SpectralField {
            grid: self.grid,
            coeffs,
        }
    }

    /// `Σ_x u(x)·dx^d`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        w.write_all(&(self.grid.dim as u64).to_le_bytes())?;
        w.write_all(&(self.grid.n as u64).to_le_bytes())?;
        w.write_all(&self.grid.side.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < 24 || bytes.len() % 8 != 0 {
            return Err(Error::Format(format!(
                "{} bytes is not a field file",
                bytes.len()
            )));
        }
        let word = |i: usize| <[u8; 8]>::try_from(&bytes[8 * i..8 * i + 8]).unwrap();
        let dim = u64::from_le_bytes(word(0)) as usize;
        let n = u64::from_le_bytes(word(1)) as usize;
        let side = f64::from_le_bytes(word(2));
        let grid = TorusGrid::new(dim, n, side)?;
        let values: Vec<f64> = (3..bytes.len() / 8)
            .map(|i| f64::from_le_bytes(word(i)))
            .collect();
        Field::new(grid, values)
    }

    /// Two-column `x,value` text for one-dimensional fields.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        if self.grid.dim != 1 {
            return Err(Error::invalid("CSV export is only defined for d = 1"));
        }
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "x,value")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(w, "{:?},{:?}", self.grid.point(k)[0], v)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the output of [`Field::write_csv`]; the side length is inferred from the spacing.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let reader = BufReader::new(std::fs::File::open(path)?);
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let (x, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("line {}: expected x,value", i + 1)))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("line {}: {e}", i + 1)))
            };
            xs.push(parse(x)?);
            values.push(parse(v)?);
        }
        if xs.len() < 2 {
            return Err(Error::Format("too few rows".into()));
        }
        let side = (xs[1] - xs[0]) * xs.len() as f64;
        Field::new(TorusGrid::new(1, xs.len(), side)?, values)
    }
}

impl SpectralField {
    /// Real part of the inverse transform.
    pub fn inverse(&self) -> Field {
        let mut data = self.coeffs.clone();
        fft_nd(&self.grid, &mut data, true);
        let scale = 1.0 / self.grid.len() as f64;
        Field {
            grid: self.grid,
            values: data.iter().map(|c| c.re * scale).collect(),
        }
    }

    /// Multiplies each coefficient by `symbol(|ξ|²)`.
    pub fn apply_radial(&mut self, symbol: impl Fn(f64) -> f64) {
        let mut cache: HashMap<i64, f64> = HashMap::new();
        let unit = self.grid.xi_unit_sq();
        for (k, c) in self.coeffs.iter_mut().enumerate() {
            let m2 = self.grid.mode_norm_sq(k);
            let s = *cache.entry(m2).or_insert_with(|| symbol(unit * m2 as f64));
            *c *= s;
        }
    }
}

/// Applies a radial Fourier multiplier given as a function of `|ξ|²`.
pub fn apply_multiplier(field: &Field, symbol: impl Fn(f64) -> f64) -> Field {
    let mut spec = field.forward();
    spec.apply_radial(symbol);
    spec.inverse()
}

/// `(−Δ)^{s/2} u`: multiplier `|ξ|^s`, zero mode removed for `s ≠ 0`.
pub fn fractional_laplacian(field: &Field, s: f64) -> Result<Field> {
    if !(s > -2.0 && s <= 2.0) {
        return Err(Error::invalid(format!("exponent s = {s} outside (-2, 2]")));
    }
    ensure_finite(&field.values, "field")?;
    if s == 0.0 {
        return Ok(field.clone());
    }
    if s < 0.0 {
        let total: f64 = field.values.iter().sum();
        let mass: f64 = field.values.iter().map(|v| v.abs()).sum();
        if total.abs() > 1e-10 * mass {
            return Err(Error::invalid(format!(
                "negative power needs a mean-zero field (sum {total:e}, mass {mass:e})"
            )));
        }
    }
    Ok(apply_multiplier(field, |xi_sq| {
        if xi_sq == 0.0 {
            0.0
        } else {
            xi_sq.powf(0.5 * s)
        }
    }))
}

/// Discrete `L_p` norm with cell-volume weights.
pub fn lp_norm(grid: &TorusGrid, values: &[f64], p: f64) -> f64 {
    let sum: f64 = if p == 2.0 {
        values.iter().map(|v| v * v).sum()
    } else {
        values.iter().map(|v| v.abs().powf(p)).sum()
    };
    (sum * grid.cell_volume()).powf(1.0 / p)
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::invalid(format!("p = {p} must be >= 2")));
    }
    Ok(())
}

fn bessel_potential(field: &Field, gamma: f64) -> Field {
    if gamma == 0.0 {
        return field.clone();
    }
    apply_multiplier(field, |xi_sq| (1.0 + xi_sq).powf(0.5 * gamma))
}

/// `‖(1 − Δ)^{γ/2} u‖_{L_p}`.
pub fn bessel_norm(field: &Field, gamma: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    ensure_finite(&field.values, "field")?;
    let v = bessel_potential(field, gamma);
    Ok(lp_norm(&field.grid, &v.values, p))
}

/// `‖ |(1 − Δ)^{γ/2} g|_{l₂} ‖_{L_p}` for a finite stack `g = (g¹, g², …)`.
pub fn bessel_norm_l2seq(fields: &[Field], gamma: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    let Some(first) = fields.first() else {
        return Err(Error::invalid("empty l2 stack"));
    };
    let grid = first.grid;
    let mut sq = vec![0.0; grid.len()];
    for f in fields {
        grid.check_same(&f.grid)?;
        ensure_finite(&f.values, "field")?;
        let v = bessel_potential(f, gamma);
        for (s, x) in sq.iter_mut().zip(&v.values) {
            *s += x * x;
        }
    }
    let pointwise: Vec<f64> = sq.into_iter().map(f64::sqrt).collect();
    Ok(lp_norm(&grid, &pointwise, p))
}
