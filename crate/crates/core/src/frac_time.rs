//! Riemann–Liouville integrals and derivatives of functions sampled on a
//! uniform time grid.
//!
//! `I^ν φ` is computed by product integration: the piecewise-linear
//! interpolant of `φ` is integrated exactly against `(t − s)^{ν−1}/Γ(ν)`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Diagnosed, Error, Result, Warning};
use crate::mittag_leffler::recip_gamma;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_end: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::invalid(format!("t_end = {t_end} must be positive")));
        }
        if n_steps == 0 {
            return Err(Error::invalid("n_steps must be at least 1"));
        }
        Ok(TimeGrid { t_end, n_steps })
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn node(&self, j: usize) -> f64 {
        if j == self.n_steps {
            self.t_end
        } else {
            j as f64 * self.dt()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|j| self.node(j)).collect()
    }

    /// Same interval, `factor` times as many steps.
    pub fn refined(&self, factor: usize) -> TimeGrid {
        TimeGrid {
            t_end: self.t_end,
            n_steps: self.n_steps * factor.max(1),
        }
    }
}

/// Scalar samples `φ(t_j)`, `j = 0..=n_steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPath {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
}

impl SampledPath {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::GridMismatch(format!(
                "{} samples for {} nodes",
                values.len(),
                grid.n_nodes()
            )));
        }
        ensure_finite(&values, "path")?;
        Ok(SampledPath { grid, values })
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().into_iter().map(f).collect();
        Self::new(grid, values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &SampledPath) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// `(m+1)^p − m^p` for `m ≥ 0`, without cancellation for large `m`.
fn forward_power_diff(m: f64, p: f64) -> f64 {
    if m == 0.0 {
        1.0
    } else {
        m.powf(p) * (p * (1.0 / m).ln_1p()).exp_m1()
    }
}

/// Product-integration weights of `I^ν` on a uniform grid.
///
/// `I^ν φ(t_n) ≈ dt^ν/Γ(ν+2) · (w_first(n) φ_0 + Σ_{j=1}^{n} interior[n−j] φ_j)`,
/// with `interior[0] = 1`.
pub(crate) struct ProductWeights {
    nu: f64,
    pub interior: Vec<f64>,
    pub scale: f64,
}

impl ProductWeights {
    pub fn new(nu: f64, dt: f64, n_steps: usize) -> Self {
        let p = nu + 1.0;
        let diffs: Vec<f64> = (0..=n_steps)
            .map(|m| forward_power_diff(m as f64, p))
            .collect();
        let mut interior = Vec::with_capacity(n_steps + 1);
        interior.push(1.0);
        for m in 1..=n_steps {
            interior.push(diffs[m] - diffs[m - 1]);
        }
        ProductWeights {
            nu,
            interior,
            scale: dt.powf(nu) * recip_gamma(nu + 2.0),
        }
    }

    /// Weight of `φ_0` at node `n ≥ 1`: `(n−1)^{ν+1} − (n−ν−1) n^ν`.
    pub fn first(&self, n: usize) -> f64 {
        let nf = n as f64;
        let p = self.nu + 1.0;
        if n == 1 {
            return self.nu;
        }
        // n^p [(1 − 1/n)^p − 1 + p/n]
        nf.powf(p) * ((p * (-1.0 / nf).ln_1p()).exp_m1() + p / nf)
    }

    /// `I^ν φ` at node `n`.
    pub fn apply(&self, values: &[f64], n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let mut acc = self.first(n) * values[0];
        for j in 1..=n {
            acc += self.interior[n - j] * values[j];
        }
        self.scale * acc
    }
}

fn check_order(order: f64) -> Result<()> {
    if !(order >= 0.0 && order.is_finite()) {
        return Err(Error::invalid(format!(
            "order = {order} must be non-negative"
        )));
    }
    Ok(())
}

/// `I^ν φ = (1/Γ(ν)) ∫_0^t (t − s)^{ν−1} φ(s) ds` at every node.
pub fn rl_integral(path: &SampledPath, order: f64) -> Result<SampledPath> {
    check_order(order)?;
    ensure_finite(&path.values, "path")?;
    if order == 0.0 {
        return Ok(path.clone());
    }
    let n = path.grid.n_steps;
    let w = ProductWeights::new(order, path.grid.dt(), n);
    let values = (0..=n).map(|k| w.apply(&path.values, k)).collect();
    Ok(SampledPath {
        grid: path.grid,
        values,
    })
}

/// Second-order first derivative: central in the interior, three-point one-sided at the ends.
fn differentiate(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len() - 1;
    let h2 = 2.0 * dt;
    let mut out = Vec::with_capacity(n + 1);
    out.push((-3.0 * values[0] + 4.0 * values[1] - values[2]) / h2);
    for j in 1..n {
        out.push((values[j + 1] - values[j - 1]) / h2);
    }
    out.push((3.0 * values[n] - 4.0 * values[n - 1] + values[n - 2]) / h2);
    out
}

/// `D^ν φ = (d/dt)^m I^{m−ν} φ` with `m = ⌊ν⌋ + 1`, or `m = ν` for integer `ν`.
pub fn rl_derivative(path: &SampledPath, order: f64) -> Result<Diagnosed<SampledPath>> {
    check_order(order)?;
    ensure_finite(&path.values, "path")?;
    if order == 0.0 {
        return Ok(Diagnosed::clean(path.clone()));
    }
    if path.grid.n_steps < 2 {
        return Err(Error::InsufficientResolution(
            "derivatives need at least 2 time steps".into(),
        ));
    }
    let m = if order.fract() == 0.0 {
        order as u32
    } else {
        order.floor() as u32 + 1
    };
    let mut values = rl_integral(path, m as f64 - order)?.values;
    let dt = path.grid.dt();
    for _ in 0..m {
        values = differentiate(&values, dt);
    }
    let max_abs = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let bound = path.max_abs() / (dt * dt);
    let mut warnings = Vec::new();
    if max_abs > bound || !max_abs.is_finite() {
        warnings.push(Warning::DerivativeBlowUp {
            order,
            max_abs,
            bound,
        });
    }
    Ok(Diagnosed {
        value: SampledPath {
            grid: path.grid,
            values,
        },
        warnings,
    })
}

/// `∂^ν φ = D^ν (φ − Σ_{k<m} t^k φ^{(k)}(0)/k!)` for `ν ∈ (0, 2)`.
pub fn caputo_derivative(path: &SampledPath, order: f64) -> Result<Diagnosed<SampledPath>> {
    if !(order > 0.0 && order < 2.0) {
        return Err(Error::invalid(format!(
            "Caputo order {order} outside (0, 2)"
        )));
    }
    if path.grid.n_steps < 2 {
        return Err(Error::InsufficientResolution(
            "derivatives need at least 2 time steps".into(),
        ));
    }
    let v = &path.values;
    let phi0 = v[0];
    let slope = if order > 1.0 {
        (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * path.grid.dt())
    } else {
        0.0
    };
    let shifted: Vec<f64> = path
        .grid
        .nodes()
        .iter()
        .zip(v)
        .map(|(&t, &x)| x - phi0 - slope * t)
        .collect();
    rl_derivative(&SampledPath::new(path.grid, shifted)?, order)
}

/// `max_j |I^a I^b φ − I^{a+b} φ|` at the grid nodes.
pub fn semigroup_check(path: &SampledPath, a: f64, b: f64) -> Result<f64> {
    check_order(a)?;
    check_order(b)?;
    let nested = rl_integral(&rl_integral(path, b)?, a)?;
    let direct = rl_integral(path, a + b)?;
    Ok(nested.max_abs_diff(&direct))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(1.0, n).unwrap()
    }

    #[test]
    fn weights_sum_to_the_integral_of_one() {
        // Σ weights = n^ν (ν+1) since I^ν 1 = t^ν/Γ(ν+1) is reproduced exactly.
        for &nu in &[0.1, 0.5, 1.0, 1.7] {
            let w = ProductWeights::new(nu, 1.0, 300);
            for &n in &[1usize, 2, 7, 300] {
                let s: f64 = w.first(n) + w.interior[..n].iter().sum::<f64>();
                let want = (n as f64).powf(nu) * (nu + 1.0);
                assert!((s / want - 1.0).abs() < 1e-12, "nu={nu} n={n}");
            }
        }
    }

    #[test]
    fn order_zero_is_identity() {
        let p = SampledPath::from_fn(grid(17), |t| t.sin() + 0.1).unwrap();
        assert_eq!(rl_integral(&p, 0.0).unwrap(), p);
        assert_eq!(rl_derivative(&p, 0.0).unwrap().value, p);
    }

    #[test]
    fn rejects_bad_input() {
        let p = SampledPath::from_fn(grid(8), |t| t).unwrap();
        assert!(rl_integral(&p, -0.1).is_err());
        assert!(caputo_derivative(&p, 2.0).is_err());
        assert!(SampledPath::new(grid(8), vec![0.0; 8]).is_err());
        assert!(SampledPath::new(grid(1), vec![0.0, f64::NAN]).is_err());
        assert!(TimeGrid::new(0.0, 4).is_err());
    }

    #[test]
    fn integer_order_derivative_of_square() {
        let p = SampledPath::from_fn(grid(64), |t| t * t).unwrap();
        let d = rl_derivative(&p, 1.0).unwrap();
        assert!(d.warnings.is_empty());
        for (t, v) in p.grid.nodes().iter().zip(&d.value.values) {
            assert!((v - 2.0 * t).abs() < 1e-12);
        }
    }
}
