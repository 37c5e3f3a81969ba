//! Reproducible Wiener increments and the real Fourier basis of the torus.
//!
//! Increment `Δw^k_j` is a pure function of `(seed, k, j)`: ChaCha20 keyed by
//! the seed, stream `k`, word position `4j`; two 64-bit outputs feed one
//! Box–Muller draw.

use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::frac_time::TimeGrid;
use crate::spectral::{Field, SpectralField, TorusGrid};

const WORDS_PER_DRAW: u128 = 4;

/// `K × n_steps` Wiener increments, row `k` is `Δw^k_0, …, Δw^k_{n−1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePath {
    pub seed: u64,
    pub grid: TimeGrid,
    pub n_modes: usize,
    pub increments: Vec<f64>,
}

fn unit_open(x: u64) -> f64 {
    // (0, 1]: never zero, so the logarithm below is finite
    ((x >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal draws `j0..j0+len` of mode `k`.
fn standard_normals(seed: u64, k: usize, j0: usize, len: usize) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng.set_word_pos(WORDS_PER_DRAW * j0 as u128);
    (0..len)
        .map(|_| {
            let u1 = unit_open(rng.next_u64());
            let u2 = unit_open(rng.next_u64());
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        })
        .collect()
}

/// Independent `N(0, dt)` increments for `n_modes` Wiener processes.
pub fn sample_noise(seed: u64, grid: TimeGrid, n_modes: usize) -> Result<NoisePath> {
    if n_modes == 0 {
        return Err(Error::invalid("n_modes must be at least 1"));
    }
    let sd = grid.dt().sqrt();
    let mut increments = Vec::with_capacity(n_modes * grid.n_steps);
    for k in 0..n_modes {
        increments.extend(
            standard_normals(seed, k, 0, grid.n_steps)
                .into_iter()
                .map(|z| sd * z),
        );
    }
    Ok(NoisePath {
        seed,
        grid,
        n_modes,
        increments,
    })
}

/// The single increment `Δw^k_j`, identical to the entry of [`sample_noise`].
pub fn increment(seed: u64, grid: &TimeGrid, k: usize, j: usize) -> f64 {
    grid.dt().sqrt() * standard_normals(seed, k, j, 1)[0]
}

impl NoisePath {
    pub fn mode(&self, k: usize) -> &[f64] {
        let n = self.grid.n_steps;
        &self.increments[k * n..(k + 1) * n]
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.increments[k * self.grid.n_steps + j]
    }

    /// Wiener path `w^k(t_j) = Σ_{i<j} Δw^k_i` at all nodes.
    pub fn path(&self, k: usize) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.grid.n_nodes());
        let mut acc = 0.0;
        w.push(0.0);
        for dw in self.mode(k) {
            acc += dw;
            w.push(acc);
        }
        w
    }

    /// The same Brownian paths on a grid `factor` times coarser.
    pub fn coarsen(&self, factor: usize) -> Result<NoisePath> {
        if factor == 0 || !self.grid.n_steps.is_multiple_of(factor) {
            return Err(Error::GridMismatch(format!(
                "{} steps are not divisible by {factor}",
                self.grid.n_steps
            )));
        }
        let grid = TimeGrid::new(self.grid.t_end, self.grid.n_steps / factor)?;
        let increments = (0..self.n_modes)
            .flat_map(|k| {
                self.mode(k)
                    .chunks(factor)
                    .map(|c| c.iter().sum::<f64>())
                    .collect::<Vec<_>>()
            })
            .collect();
        Ok(NoisePath {
            seed: self.seed,
            grid,
            n_modes: self.n_modes,
            increments,
        })
    }

    /// Header `seed, n_modes, n_steps` (u64) and `t_end` (f64), then the
    /// increments row by row, all little-endian.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&(self.n_modes as u64).to_le_bytes())?;
        w.write_all(&(self.grid.n_steps as u64).to_le_bytes())?;
        w.write_all(&self.grid.t_end.to_le_bytes())?;
        for v in &self.increments {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < 32 || bytes.len() % 8 != 0 {
            return Err(Error::Format(format!(
                "{} bytes is not a noise file",
                bytes.len()
            )));
        }
        let word = |i: usize| <[u8; 8]>::try_from(&bytes[8 * i..8 * i + 8]).unwrap();
        let seed = u64::from_le_bytes(word(0));
        let n_modes = u64::from_le_bytes(word(1)) as usize;
        let n_steps = u64::from_le_bytes(word(2)) as usize;
        let grid = TimeGrid::new(f64::from_le_bytes(word(3)), n_steps)?;
        let increments: Vec<f64> = (4..bytes.len() / 8)
            .map(|i| f64::from_le_bytes(word(i)))
            .collect();
        if increments.len() != n_modes * n_steps {
            return Err(Error::Format(format!(
                "{} increments for {n_modes} modes × {n_steps} steps",
                increments.len()
            )));
        }
        ensure_finite(&increments, "noise")?;
        Ok(NoisePath {
            seed,
            grid,
            n_modes,
            increments,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    FourierWhite,
    DiagonalColored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    /// `cos(ξ·x)`, also used for the self-conjugate modes.
    Cos,
    Sin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisMode {
    pub m: [i64; 3],
    pub part: Part,
    pub self_conjugate: bool,
}

/// Real orthonormal Fourier basis `η^k` of `L₂` on the discrete torus, with
/// per-mode weights (all one for white noise).
///
/// Modes are ordered by `|m|²`, then lexicographically by `m`, cosine before
/// sine. For each pair `±m` the representative has its first component
/// outside `{0, −n/2}` positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseBasis {
    pub kind: BasisKind,
    pub grid: TorusGrid,
    pub modes: Vec<BasisMode>,
    pub weights: Vec<f64>,
}

fn all_modes(grid: &TorusGrid) -> Vec<BasisMode> {
    let h = (grid.n / 2) as i64;
    let mut reps = Vec::new();
    for k in 0..grid.len() {
        let m = grid.mode(k);
        let self_conjugate = m[..grid.dim].iter().all(|&c| c == 0 || c == -h);
        if self_conjugate {
            reps.push((m, true));
            continue;
        }
        // the partner −m only differs in components other than 0 and −n/2
        let first = m[..grid.dim].iter().copied().find(|&c| c != 0 && c != -h);
        if first.is_some_and(|c| c > 0) {
            reps.push((m, false));
        }
    }
    reps.sort_by_key(|(m, _)| (m.iter().map(|c| c * c).sum::<i64>(), *m));
    let mut modes = Vec::with_capacity(grid.len());
    for (m, self_conjugate) in reps {
        modes.push(BasisMode {
            m,
            part: Part::Cos,
            self_conjugate,
        });
        if !self_conjugate {
            modes.push(BasisMode {
                m,
                part: Part::Sin,
                self_conjugate,
            });
        }
    }
    modes
}

impl NoiseBasis {
    /// The first `n_modes` basis functions (all of them for `None`).
    pub fn fourier_white(grid: TorusGrid, n_modes: Option<usize>) -> Result<Self> {
        let mut modes = all_modes(&grid);
        let k = n_modes.unwrap_or(modes.len());
        if k == 0 || k > modes.len() {
            return Err(Error::invalid(format!(
                "{k} noise modes requested, grid has {}",
                modes.len()
            )));
        }
        modes.truncate(k);
        Ok(NoiseBasis {
            kind: BasisKind::FourierWhite,
            grid,
            weights: vec![1.0; k],
            modes,
        })
    }

    /// Fourier basis with weights `weight(|ξ|²)`.
    pub fn diagonal_colored(
        grid: TorusGrid,
        n_modes: Option<usize>,
        weight: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let mut basis = Self::fourier_white(grid, n_modes)?;
        let unit = grid.xi_unit_sq();
        basis.weights = basis
            .modes
            .iter()
            .map(|md| weight(unit * md.m.iter().map(|c| c * c).sum::<i64>() as f64))
            .collect();
        ensure_finite(&basis.weights, "noise weights")?;
        basis.kind = BasisKind::DiagonalColored;
        Ok(basis)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    fn amplitude(&self, mode: &BasisMode) -> f64 {
        let vol = self.grid.side.powi(self.grid.dim as i32);
        if mode.self_conjugate {
            vol.sqrt().recip()
        } else {
            (2.0 / vol).sqrt()
        }
    }

    /// `η^k` sampled on the grid (unweighted).
    pub fn eta(&self, k: usize) -> Field {
        let mode = &self.modes[k];
        let amp = self.amplitude(mode);
        let n = self.grid.n as f64;
        let values = (0..self.grid.len())
            .map(|p| {
                let idx = self.grid.unravel(p);
                let phase: f64 = (0..self.grid.dim)
                    .map(|a| 2.0 * std::f64::consts::PI * (mode.m[a] as f64) * idx[a] as f64 / n)
                    .sum();
                amp * match mode.part {
                    Part::Cos => phase.cos(),
                    Part::Sin => phase.sin(),
                }
            })
            .collect();
        Field {
            grid: self.grid,
            values,
        }
    }

    /// Flat grid index of wavevector `m`.
    fn index_of(&self, m: &[i64; 3]) -> usize {
        let n = self.grid.n as i64;
        let idx: Vec<usize> = m[..self.grid.dim]
            .iter()
            .map(|&c| c.rem_euclid(n) as usize)
            .collect();
        self.grid.ravel(&idx)
    }

    /// Unnormalised Fourier coefficients of `Σ_k c_k w_k η^k`.
    pub fn synthesize_spectral(&self, coeffs: &[f64]) -> SpectralField {
        let n_pts = self.grid.len() as f64;
        let mut out = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        for ((mode, &c), &w) in self.modes.iter().zip(coeffs).zip(&self.weights) {
            let a = c * w * self.amplitude(mode);
            let plus = self.index_of(&mode.m);
            if mode.self_conjugate {
                out[plus] += a * n_pts;
                continue;
            }
            let neg = [-mode.m[0], -mode.m[1], -mode.m[2]];
            let minus = self.index_of(&neg);
            let half = 0.5 * a * n_pts;
            match mode.part {
                Part::Cos => {
                    out[plus] += half;
                    out[minus] += half;
                }
                Part::Sin => {
                    out[plus] += Complex64::new(0.0, -half);
                    out[minus] += Complex64::new(0.0, half);
                }
            }
        }
        SpectralField {
            grid: self.grid,
            coeffs: out,
        }
    }

    /// `Σ_k c_k w_k η^k` in physical space.
    pub fn synthesize(&self, coeffs: &[f64]) -> Field {
        self.synthesize_spectral(coeffs).inverse()
    }
}

/// The stack `{w_k h η^k}`, representing `g = h·dB` in `H^γ_p(l₂)`.
pub fn white_noise_stack(basis: &NoiseBasis, h: &Field) -> Result<Vec<Field>> {
    if h.grid != basis.grid {
        return Err(Error::GridMismatch(
            "h and basis live on different grids".into(),
        ));
    }
    ensure_finite(&h.values, "h")?;
    Ok((0..basis.len())
        .map(|k| {
            let eta = basis.eta(k);
            let w = basis.weights[k];
            Field {
                grid: h.grid,
                values: eta
                    .values
                    .iter()
                    .zip(&h.values)
                    .map(|(e, x)| w * e * x)
                    .collect(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_increment_matches_block() {
        let g = TimeGrid::new(1.0, 50).unwrap();
        let path = sample_noise(9, g, 3).unwrap();
        for &(k, j) in &[(0, 0), (2, 49), (1, 17)] {
            assert_eq!(increment(9, &g, k, j), path.get(k, j));
        }
    }

    #[test]
    fn basis_counts_and_order() {
        let g = TorusGrid::new(2, 8, 1.0).unwrap();
        let b = NoiseBasis::fourier_white(g, None).unwrap();
        assert_eq!(b.len(), 64);
        assert_eq!(b.modes[0].m, [0, 0, 0]);
        assert!(b.modes[0].self_conjugate);
        assert_eq!((b.modes[1].m, b.modes[1].part), ([0, 1, 0], Part::Cos));
        assert_eq!((b.modes[2].m, b.modes[2].part), ([0, 1, 0], Part::Sin));
        assert_eq!(b.modes[3].m, [1, 0, 0]);
        let norms: Vec<i64> = b
            .modes
            .iter()
            .map(|m| m.m.iter().map(|c| c * c).sum())
            .collect();
        assert!(norms.windows(2).all(|w| w[0] <= w[1]));
        assert!(NoiseBasis::fourier_white(g, Some(65)).is_err());
    }
}
