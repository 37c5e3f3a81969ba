//! The sublinear operator
//! `𝒯g(t,x) = [∫_0^t |(−Δ)^{c₁/2} T_{t−s} g(s)(x)|_H² ds]^{1/2}`, empirical
//! checks of `‖𝒯g‖_{L_p} ≲ ‖g‖_{L_p(H)}`, the model a priori estimate and the
//! dimension threshold of white-noise solutions.
//!
//! `T_r` is the Fourier multiplier `K(r,ξ) = r^{α−β}E_{α,1+α−β}(−|ξ|²r^α)`.

use std::cell::RefCell;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Diagnosed, Error, Result, Warning};
use crate::frac_time::TimeGrid;
use crate::kernels::Shells;
use crate::mittag_leffler::{ml_eval, recip_gamma, MLParams};
use crate::noise::{sample_noise, NoiseBasis};
use crate::orders::FracOrders;
use crate::solver::{NoiseForcing, SpaceTimePath, SpectralSolver};
use crate::spectral::{bessel_norm, lp_norm, Field, SpectralField, TorusGrid};

const GL_POINTS: usize = 6;
/// Share of `∫∫|𝒯g|²` from `s` within one step of `t` above which the time
/// quadrature is flagged.
pub const LAST_INTERVAL_FRACTION: f64 = 0.1;
const MAX_PANELS: usize = 60;
const QUAD_RTOL: f64 = 1e-12;

/// Orders with `1/2 < β < α + 1/2` and an exponent `p ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpInstance {
    pub orders: FracOrders,
    pub p: f64,
}

impl LpInstance {
    pub fn new(orders: FracOrders, p: f64) -> Result<Self> {
        if !(orders.beta > 0.5) {
            return Err(Error::invalid(format!(
                "beta = {} must exceed 1/2",
                orders.beta
            )));
        }
        if !(p >= 2.0 && p.is_finite()) {
            return Err(Error::invalid(format!("p = {p} must be >= 2")));
        }
        Ok(LpInstance { orders, p })
    }
}

/// Deterministic `g = (g¹, …, g^K)`, constant in time on each step:
/// `stacks[j][k] = g^k` on `[t_j, t_{j+1})`, zero after `t_end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSource {
    pub time_grid: TimeGrid,
    pub stacks: Vec<Vec<Field>>,
}

impl LpSource {
    pub fn new(time_grid: TimeGrid, stacks: Vec<Vec<Field>>) -> Result<Self> {
        if stacks.len() != time_grid.n_steps {
            return Err(Error::GridMismatch(format!(
                "{} g steps for {} time steps",
                stacks.len(),
                time_grid.n_steps
            )));
        }
        let k = stacks[0].len();
        let Some(grid) = stacks[0].first().map(|f| f.grid) else {
            return Err(Error::invalid("empty g stack"));
        };
        for stack in &stacks {
            if stack.len() != k || stack.iter().any(|f| f.grid != grid) {
                return Err(Error::GridMismatch("ragged g stacks".into()));
            }
            for f in stack {
                ensure_finite(&f.values, "g")?;
            }
        }
        Ok(LpSource { time_grid, stacks })
    }

    pub fn grid(&self) -> TorusGrid {
        self.stacks[0][0].grid
    }

    pub fn n_components(&self) -> usize {
        self.stacks[0].len()
    }

    /// `‖g‖^p_{L_p([0,T]×torus; l₂)}`.
    pub fn norm_pow(&self, p: f64) -> f64 {
        let grid = self.grid();
        let dt = self.time_grid.dt();
        self.stacks
            .iter()
            .map(|stack| {
                let h: Vec<f64> = (0..grid.len())
                    .map(|x| {
                        stack
                            .iter()
                            .map(|f| f.values[x] * f.values[x])
                            .sum::<f64>()
                            .sqrt()
                    })
                    .collect();
                dt * lp_norm(&grid, &h, p).powf(p)
            })
            .sum()
    }
}

/// `a cos(ξ·x) + b sin(ξ·x)` with `ξ = 2πm/L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub m: [i64; 3],
    pub a: f64,
    pub b: f64,
}

/// A grid-independent test function: each component is a trigonometric
/// polynomial, switched on during `[t0, t1)` with envelope `1 + ½ sin(ωs)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GSpec {
    pub family: String,
    pub components: Vec<Vec<Term>>,
    pub t0: f64,
    pub t1: f64,
    pub omega: f64,
}

impl GSpec {
    /// Samples at step midpoints and grid points.
    pub fn sample(&self, grid: TorusGrid, time_grid: TimeGrid) -> Result<LpSource> {
        let two_pi_over_l = 2.0 * std::f64::consts::PI / grid.side;
        let spatial: Vec<Field> = self
            .components
            .iter()
            .map(|terms| {
                Field::from_fn(grid, |x| {
                    terms
                        .iter()
                        .map(|t| {
                            let phase: f64 =
                                (0..3).map(|a| t.m[a] as f64 * x[a]).sum::<f64>() * two_pi_over_l;
                            t.a * phase.cos() + t.b * phase.sin()
                        })
                        .sum()
                })
            })
            .collect::<Result<_>>()?;
        let dt = time_grid.dt();
        let stacks = (0..time_grid.n_steps)
            .map(|j| {
                let s = (j as f64 + 0.5) * dt;
                let env = if s >= self.t0 && s < self.t1 {
                    1.0 + 0.5 * (self.omega * s).sin()
                } else {
                    0.0
                };
                spatial
                    .iter()
                    .map(|f| Field {
                        grid,
                        values: f.values.iter().map(|v| env * v).collect(),
                    })
                    .collect()
            })
            .collect();
        LpSource::new(time_grid, stacks)
    }
}

/// `count` test functions cycling through single-mode, multi-scale and
/// randomised members, all with wavenumbers `|m_i| ≤ max_mode` on `[0, t_end)`.
pub fn adversarial_family(
    count: usize,
    dim: usize,
    max_mode: i64,
    t_end: f64,
    seed: u64,
) -> Vec<GSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit = move || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let axis_mode = |axis: usize, m: i64| {
        let mut v = [0i64; 3];
        v[axis] = m;
        v
    };
    (0..count)
        .map(|i| {
            let t0 = (unit() * 0.5).min(0.45) * t_end;
            let t1 = t0 + (0.1 + 0.9 * unit()) * (t_end - t0);
            match i % 3 {
                0 => {
                    let m = 1 + (i as i64 / 3) % max_mode;
                    GSpec {
                        family: "single_mode".into(),
                        components: vec![vec![Term {
                            m: axis_mode((i / 3) % dim, m),
                            a: 1.0,
                            b: 0.0,
                        }]],
                        t0,
                        t1,
                        omega: 0.0,
                    }
                }
                1 => {
                    // dyadic modes with amplitude m^{−s}, s drawn in [0, 1]
                    let s = unit();
                    let mut terms = Vec::new();
                    let mut m = 1;
                    while m <= max_mode {
                        terms.push(Term {
                            m: axis_mode(0, m),
                            a: (m as f64).powf(-s),
                            b: 0.0,
                        });
                        m *= 2;
                    }
                    GSpec {
                        family: "multi_scale".into(),
                        components: vec![terms],
                        t0,
                        t1,
                        omega: 2.0 * std::f64::consts::PI * (1.0 + 4.0 * unit()) / t_end,
                    }
                }
                _ => {
                    let k = 1 + (unit() * 3.0) as usize;
                    let components = (0..k)
                        .map(|_| {
                            (0..4)
                                .map(|_| {
                                    let mut m = [0i64; 3];
                                    for c in m.iter_mut().take(dim) {
                                        *c = (unit() * (2 * max_mode + 1) as f64) as i64 - max_mode;
                                    }
                                    Term {
                                        m,
                                        a: 2.0 * unit() - 1.0,
                                        b: 2.0 * unit() - 1.0,
                                    }
                                })
                                .collect()
                        })
                        .collect();
                    GSpec {
                        family: "random".into(),
                        components,
                        t0,
                        t1,
                        omega: 2.0 * std::f64::consts::PI * 3.0 * unit() / t_end,
                    }
                }
            }
        })
        .collect()
}

/// Quadrature nodes in `r = t − s`: Gauss–Legendre on each step
/// `[(m−1)dt, m·dt]`, `m ≥ 2`; on `[0, dt]` dyadic panels down to `r_min`
/// and below that `∫r^{2(α−β)}dr` against a frozen `E`.
struct RNodes {
    r: Vec<f64>,
    w: Vec<f64>,
    /// Nodes of step `m` are `start[m]..start[m+1]`.
    start: Vec<usize>,
}

fn r_nodes(orders: &FracOrders, dt: f64, n: usize, r_min: f64) -> RNodes {
    let gl = GaussLegendre::new(NonZeroUsize::new(GL_POINTS).unwrap());
    let pairs = gl.as_node_weight_pairs();
    let e = 2.0 * (orders.alpha - orders.beta);
    let mut r = Vec::new();
    let mut w = Vec::new();
    let mut start = vec![0, 0];
    let panel = |a: f64, b: f64, r: &mut Vec<f64>, w: &mut Vec<f64>| {
        for &(x, wt) in pairs {
            r.push(0.5 * (a + b) + 0.5 * (b - a) * x);
            w.push(0.5 * (b - a) * wt);
        }
    };
    let panels = if r_min >= dt {
        0
    } else {
        ((dt / r_min).log2().ceil() as usize).min(MAX_PANELS)
    };
    let r0 = dt / 2f64.powi(panels as i32);
    let mid = 0.5 * r0;
    r.push(mid);
    w.push(r0.powf(e + 1.0) / (e + 1.0) / mid.powf(e));
    for i in 0..panels {
        let a = r0 * 2f64.powi(i as i32);
        panel(a, 2.0 * a, &mut r, &mut w);
    }
    start.push(r.len());
    for m in 2..=n {
        panel((m - 1) as f64 * dt, m as f64 * dt, &mut r, &mut w);
        start.push(r.len());
    }
    RNodes { r, w, start }
}

/// `|ξ|^{c₁} K(r_q, ξ)` for every node and shell, `[q][shell]`.
fn symbol_rows(orders: &FracOrders, nodes: &RNodes, lambdas: &[f64]) -> Result<Vec<Vec<f64>>> {
    let params = MLParams::new(orders.alpha, 1.0 + orders.alpha - orders.beta)?;
    let c1 = orders.c1();
    nodes
        .r
        .par_iter()
        .map(|&r| {
            let pre = r.powf(orders.alpha - orders.beta);
            lambdas
                .iter()
                .map(|&l| {
                    if l == 0.0 {
                        return Ok(0.0);
                    }
                    Ok(l.powf(0.5 * c1) * pre * ml_eval(&params, -l * r.powf(orders.alpha))?)
                })
                .collect()
        })
        .collect()
}

struct Prepared {
    grid: TorusGrid,
    shells: Shells,
    nodes: RNodes,
    rows: Vec<Vec<f64>>,
    /// `[j][k]` Fourier coefficients, `None` where `g(t_j) = 0`.
    ghat: Vec<Option<Vec<Vec<Complex64>>>>,
}

fn prepare(orders: &FracOrders, g: &LpSource) -> Result<Prepared> {
    let grid = g.grid();
    let shells = Shells::new(&grid);
    let unit = grid.xi_unit_sq();
    let lambdas: Vec<f64> = shells.norms.iter().map(|&m2| unit * m2 as f64).collect();
    let lambda_max = *lambdas.last().unwrap();
    let r_min = 1e-3 * lambda_max.powf(-1.0 / orders.alpha);
    let tg = g.time_grid;
    let nodes = r_nodes(orders, tg.dt(), tg.n_steps, r_min);
    let rows = symbol_rows(orders, &nodes, &lambdas)?;
    let ghat = g
        .stacks
        .iter()
        .map(|stack| {
            if stack.iter().all(|f| f.values.iter().all(|&v| v == 0.0)) {
                None
            } else {
                Some(stack.iter().map(|f| f.forward().coeffs).collect())
            }
        })
        .collect();
    Ok(Prepared {
        grid,
        shells,
        nodes,
        rows,
        ghat,
    })
}

/// `𝒯g` at every time node (node 0 is zero) and grid point. Warns when the
/// last step before `t` carries more than [`LAST_INTERVAL_FRACTION`] of
/// `∫∫|𝒯g|²`.
pub fn apply_t_field(orders: &FracOrders, g: &LpSource) -> Result<Diagnosed<SpaceTimePath>> {
    let prep = prepare(orders, g)?;
    let tg = g.time_grid;
    let n = tg.n_steps;
    let grid = prep.grid;
    let per_node: Vec<(Vec<f64>, f64)> = (1..=n)
        .into_par_iter()
        .map(|step| {
            let mut sq = vec![0.0; grid.len()];
            let mut last = 0.0;
            for j in 0..step {
                let Some(gj) = &prep.ghat[j] else { continue };
                let m = step - j;
                for q in prep.nodes.start[m]..prep.nodes.start[m + 1] {
                    let row = &prep.rows[q];
                    let wq = prep.nodes.w[q];
                    for gk in gj {
                        let coeffs = gk
                            .iter()
                            .zip(&prep.shells.shell_of)
                            .map(|(c, &s)| c * row[s])
                            .collect();
                        let v = SpectralField { grid, coeffs }.inverse();
                        let mut part = 0.0;
                        for (acc, x) in sq.iter_mut().zip(&v.values) {
                            *acc += wq * x * x;
                            part += wq * x * x;
                        }
                        if m == 1 {
                            last += part;
                        }
                    }
                }
            }
            (sq, last)
        })
        .collect();
    let mut snapshots = vec![Field::zeros(grid)];
    let mut total = 0.0;
    let mut last = 0.0;
    for (sq, l) in per_node {
        total += sq.iter().sum::<f64>();
        last += l;
        snapshots.push(Field {
            grid,
            values: sq.into_iter().map(f64::sqrt).collect(),
        });
    }
    let mut warnings = Vec::new();
    if total > 0.0 && last > LAST_INTERVAL_FRACTION * total {
        warnings.push(Warning::SingularQuadrature {
            last_fraction: last / total,
        });
    }
    Ok(Diagnosed {
        value: SpaceTimePath {
            time_grid: tg,
            snapshots,
        },
        warnings,
    })
}

/// `𝒯g(t_node, x_point)` by direct summation over modes.
pub fn apply_t(orders: &FracOrders, g: &LpSource, node: usize, point: usize) -> Result<f64> {
    let tg = g.time_grid;
    if node > tg.n_steps || point >= g.grid().len() {
        return Err(Error::invalid(format!(
            "node {node} or point {point} out of range"
        )));
    }
    let prep = prepare(orders, g)?;
    let grid = prep.grid;
    let idx = grid.unravel(point);
    let phases: Vec<Complex64> = (0..grid.len())
        .map(|k| {
            let m = grid.mode(k);
            let ph: f64 = (0..grid.dim)
                .map(|a| 2.0 * std::f64::consts::PI * (m[a] * idx[a] as i64) as f64 / grid.n as f64)
                .sum();
            Complex64::from_polar(1.0 / grid.len() as f64, ph)
        })
        .collect();
    let mut sq = 0.0;
    for j in 0..node {
        let Some(gj) = &prep.ghat[j] else { continue };
        let m = node - j;
        for q in prep.nodes.start[m]..prep.nodes.start[m + 1] {
            let row = &prep.rows[q];
            for gk in gj {
                let v: f64 = gk
                    .iter()
                    .zip(&prep.shells.shell_of)
                    .zip(&phases)
                    .map(|((c, &s), e)| (c * row[s] * e).re)
                    .sum();
                sq += prep.nodes.w[q] * v * v;
            }
        }
    }
    Ok(sq.sqrt())
}

/// `‖𝒯g‖²_{L₂}` from the Fourier side, with the same time quadrature.
pub fn plancherel_l2_sq(orders: &FracOrders, g: &LpSource) -> Result<f64> {
    let prep = prepare(orders, g)?;
    let grid = prep.grid;
    let n = g.time_grid.n_steps;
    let n_shells = prep.shells.norms.len();
    let weight: Vec<Vec<f64>> = (1..=n)
        .map(|m| {
            let mut a = vec![0.0; n_shells];
            for q in prep.nodes.start[m]..prep.nodes.start[m + 1] {
                for (s, v) in a.iter_mut().enumerate() {
                    *v += prep.nodes.w[q] * prep.rows[q][s] * prep.rows[q][s];
                }
            }
            a
        })
        .collect();
    let power: Vec<Option<Vec<f64>>> = prep
        .ghat
        .iter()
        .map(|gj| {
            gj.as_ref().map(|gj| {
                let mut p = vec![0.0; n_shells];
                for gk in gj {
                    for (c, &s) in gk.iter().zip(&prep.shells.shell_of) {
                        p[s] += c.norm_sqr();
                    }
                }
                p
            })
        })
        .collect();
    let mut sum = 0.0;
    for step in 1..=n {
        for (j, pj) in power[..step].iter().enumerate() {
            let Some(pj) = pj else { continue };
            let a = &weight[step - j - 1];
            sum += pj.iter().zip(a).map(|(x, y)| x * y).sum::<f64>();
        }
    }
    Ok(sum * g.time_grid.dt() * grid.cell_volume() / grid.len() as f64)
}

fn ml_checked(params: &MLParams, z: f64, err: &RefCell<Option<Error>>) -> f64 {
    match ml_eval(params, z) {
        Ok(v) => v,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    }
}

fn integrate_pieces(f: &dyn Fn(f64) -> f64, breaks: &[f64]) -> f64 {
    breaks
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let scale = (f(0.5 * (a + b)).abs() * (b - a)).max(f64::MIN_POSITIVE);
            quadrature::integrate(f, a, b, QUAD_RTOL * scale).integral
        })
        .sum()
}

/// `V(ξ) = ∫_0^t K(r,ξ)² dr` by double-exponential quadrature, split at
/// decades above `r = |ξ|^{−2/α}`.
pub fn mode_variance(orders: &FracOrders, xi_sq: f64, t: f64) -> Result<f64> {
    let (a, e) = (orders.alpha, orders.alpha - orders.beta);
    if xi_sq == 0.0 {
        return Ok(t.powf(2.0 * e + 1.0) / (2.0 * e + 1.0) * recip_gamma(1.0 + e).powi(2));
    }
    let params = MLParams::new(a, 1.0 + e)?;
    let err = RefCell::new(None);
    let f = |r: f64| {
        let k = r.powf(e) * ml_checked(&params, -xi_sq * r.powf(a), &err);
        k * k
    };
    let mut breaks = vec![0.0];
    let mut x = xi_sq.powf(-1.0 / a).min(t);
    breaks.push(x);
    while x < t {
        x = (10.0 * x).min(t);
        breaks.push(x);
    }
    let v = integrate_pieces(&f, &breaks);
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// `sup_ξ |ξ|^{2c₁} ∫_0^∞ K(r,ξ)² dr`, which by scaling equals
/// `∫_0^∞ u^{2(α−β)} E_{α,1+α−β}(−u^α)² du` for every `ξ ≠ 0`.
pub fn n2_oracle(orders: &FracOrders) -> Result<f64> {
    let (a, b) = (orders.alpha, orders.beta);
    if !(b > 0.5) {
        return Err(Error::invalid(format!("beta = {b} must exceed 1/2")));
    }
    let e = a - b;
    let params = MLParams::new(a, 1.0 + e)?;
    let err = RefCell::new(None);
    let f = |u: f64| {
        let k = u.powf(e) * ml_checked(&params, -u.powf(a), &err);
        k * k
    };
    let upper = 1e6;
    let mut breaks = vec![0.0, 1.0];
    while *breaks.last().unwrap() < upper {
        let x = breaks.last().unwrap() * 10.0;
        breaks.push(x);
    }
    let body = integrate_pieces(&f, &breaks);
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    // K ≈ u^{−β}/Γ(1−β) − u^{−β−α}/Γ(1−β−α) beyond `upper`
    let (g1, g2) = (recip_gamma(1.0 - b), recip_gamma(1.0 - b - a));
    let tail = upper.powf(1.0 - 2.0 * b) / (2.0 * b - 1.0) * g1 * g1
        - 2.0 * upper.powf(1.0 - 2.0 * b - a) / (2.0 * b + a - 1.0) * g1 * g2;
    Ok(body + tail)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpReport {
    pub p: f64,
    pub families: Vec<String>,
    /// `R(g) = ‖𝒯g‖^p_{L_p} / ‖g‖^p_{L_p(H)}` per sample.
    pub ratios: Vec<f64>,
    pub n_star: f64,
    /// Fourier-side `R(g)` per sample (`p = 2` only).
    pub plancherel_ratios: Vec<f64>,
    /// `N₂*`, the bound on every `p = 2` ratio (`p = 2` only).
    pub n2_oracle: Option<f64>,
    /// Samples whose singular time quadrature was flagged.
    pub flagged: usize,
}

/// `R(g)` for every sample and exponent, computing each `𝒯g` once.
pub fn lp_inequality_check_multi(
    orders: &FracOrders,
    ps: &[f64],
    samples: &[(String, LpSource)],
) -> Result<Vec<LpReport>> {
    for &p in ps {
        LpInstance::new(*orders, p)?;
    }
    let mut reports: Vec<LpReport> = ps
        .iter()
        .map(|&p| LpReport {
            p,
            families: samples.iter().map(|(f, _)| f.clone()).collect(),
            ratios: Vec::new(),
            n_star: 0.0,
            plancherel_ratios: Vec::new(),
            n2_oracle: None,
            flagged: 0,
        })
        .collect();
    for (_, g) in samples {
        let t = apply_t_field(orders, g)?;
        let flagged = !t.warnings.is_empty();
        let plancherel = if ps.contains(&2.0) {
            Some(plancherel_l2_sq(orders, g)?)
        } else {
            None
        };
        for rep in reports.iter_mut() {
            let denom = g.norm_pow(rep.p);
            if !(denom > 0.0) {
                return Err(Error::invalid("g must not vanish"));
            }
            let r = t.value.lp_norm(rep.p).powf(rep.p) / denom;
            rep.ratios.push(r);
            rep.n_star = rep.n_star.max(r);
            rep.flagged += flagged as usize;
            if rep.p == 2.0 {
                rep.plancherel_ratios.push(plancherel.unwrap() / denom);
            }
        }
    }
    for rep in reports.iter_mut() {
        if rep.p == 2.0 {
            rep.n2_oracle = Some(n2_oracle(orders)?);
        }
    }
    Ok(reports)
}

pub fn lp_inequality_check(inst: &LpInstance, samples: &[(String, LpSource)]) -> Result<LpReport> {
    Ok(lp_inequality_check_multi(&inst.orders, &[inst.p], samples)?.remove(0))
}

/// `Σ_ξ V(ξ) / L^d`, the pointwise variance of the white-noise solution at `t`.
pub fn mode_variance_sum(orders: &FracOrders, grid: &TorusGrid, t: f64) -> Result<f64> {
    let shells = Shells::new(grid);
    let unit = grid.xi_unit_sq();
    let counts = shells.counts();
    let v = shells
        .norms
        .par_iter()
        .map(|&m2| mode_variance(orders, unit * m2 as f64, t))
        .collect::<Result<Vec<_>>>()?;
    let sum: f64 = v.iter().zip(&counts).map(|(v, &c)| v * c as f64).sum();
    Ok(sum / grid.side.powi(grid.dim as i32))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub dim: usize,
    pub critical_dimension: f64,
    pub ns: Vec<usize>,
    pub sums: Vec<f64>,
    /// `(S_{i+1} − S_i) / S_i`.
    pub increments: Vec<f64>,
    /// Increments decrease and the last is at most 10%.
    pub stabilizes: bool,
    /// Every increment is at least 20%.
    pub diverges: bool,
}

/// The mode-variance sum on `n = ns[0], ns[1], …` points per axis.
pub fn dimension_threshold(
    orders: &FracOrders,
    dim: usize,
    side: f64,
    t: f64,
    ns: &[usize],
) -> Result<ThresholdReport> {
    if ns.len() < 2 {
        return Err(Error::invalid("need at least two resolutions"));
    }
    let sums = ns
        .iter()
        .map(|&n| mode_variance_sum(orders, &TorusGrid::new(dim, n, side)?, t))
        .collect::<Result<Vec<_>>>()?;
    let increments: Vec<f64> = sums.windows(2).map(|w| (w[1] - w[0]) / w[0]).collect();
    let stabilizes =
        increments.windows(2).all(|w| w[1] < w[0]) && *increments.last().unwrap() <= 0.1;
    let diverges = increments.iter().all(|&i| i >= 0.2);
    Ok(ThresholdReport {
        dim,
        critical_dimension: orders.critical_dimension(),
        ns: ns.to_vec(),
        sums,
        increments,
        stabilizes,
        diverges,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub gamma: f64,
    pub p: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Refinement levels for the norm ratio.
    pub levels: Vec<(TorusGrid, TimeGrid)>,
    /// Grids and `|m|` range for the spectral-slope fit.
    pub slope: Option<SlopeConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeConfig {
    pub grid: TorusGrid,
    pub time_grid: TimeGrid,
    pub modes: (i64, i64),
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelEstimate {
    pub n: usize,
    pub n_steps: usize,
    /// `‖u‖_{𝔹H^{γ+2}_p(T)}`.
    pub u_norm: f64,
    /// Two standard errors of `u_norm`, relative.
    pub u_band: f64,
    /// `‖g‖_{𝔹H^{γ+c₀′}_p(T, l₂)}` of the white noise.
    pub g_norm: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    /// `|ξ|` of the fitted shells.
    pub xi: Vec<f64>,
    /// Replicate means of `|û(T,ξ)|²·L^d/N²`.
    pub measured: Vec<f64>,
    /// Two standard errors of `measured`, relative.
    pub bands: Vec<f64>,
    pub oracle: Vec<f64>,
    pub measured_slope: f64,
    pub oracle_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub levels: Vec<LevelEstimate>,
    /// Relative change of the ratio between successive levels.
    pub ratio_changes: Vec<f64>,
    pub slope: Option<SlopeFit>,
    /// Some two-standard-error band exceeds 5%.
    pub inconclusive: bool,
}

const BAND_LIMIT: f64 = 0.05;

fn replicate_seed(seed: u64, r: usize) -> u64 {
    seed.wrapping_add(r as u64)
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn level_estimate(
    orders: &FracOrders,
    cfg: &EstimateConfig,
    grid: TorusGrid,
    tg: TimeGrid,
) -> Result<LevelEstimate> {
    let basis = NoiseBasis::fourier_white(grid, None)?;
    let solver = SpectralSolver::new(*orders, grid, tg);
    let s = cfg.gamma + 2.0;
    let p = cfg.p;
    let samples = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let noise = sample_noise(replicate_seed(cfg.seed, r), tg, basis.len())?;
            let u = solver.stochastic(
                NoiseForcing::Basis {
                    basis: &basis,
                    h: None,
                },
                &noise,
            )?;
            let mut acc = 0.0;
            for snap in &u.snapshots[1..] {
                acc += bessel_norm(snap, s, p)?.powf(p);
            }
            Ok(acc * tg.dt())
        })
        .collect::<Result<Vec<f64>>>()?;
    let r = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / r;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0).max(1.0);
    let u_norm = mean.powf(1.0 / p);
    let u_band = 2.0 * (var / r).sqrt() / mean / p;
    // Σ_k |(1−Δ)^{s'/2} η^k(x)|² = L^{−d} Σ_ξ (1+|ξ|²)^{s'} for the full basis
    let s_g = cfg.gamma + orders.c0_prime();
    let vol = grid.side.powi(grid.dim as i32);
    let density: f64 = (0..grid.len())
        .map(|k| (1.0 + grid.xi_sq(k)).powf(s_g))
        .sum::<f64>()
        / vol;
    let g_norm = (tg.t_end * vol * density.powf(0.5 * p)).powf(1.0 / p);
    Ok(LevelEstimate {
        n: grid.n,
        n_steps: tg.n_steps,
        u_norm,
        u_band,
        g_norm,
        ratio: u_norm / g_norm,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellStat {
    pub m2: i64,
    pub xi: f64,
    pub count: usize,
    /// Replicate mean of `|û(T,ξ)|²·L^d/N²` averaged over the shell.
    pub mean: f64,
    /// Two standard errors of `mean`, relative.
    pub band: f64,
    /// `∫_0^T K(r,ξ)² dr`.
    pub oracle: f64,
}

/// Per-shell Monte Carlo spectrum of the white-noise solution at `T`,
/// shells with `|m|² ≤ max_m2`. Replicate `r` uses seed `seed + r`.
pub fn white_noise_spectrum(
    orders: &FracOrders,
    grid: TorusGrid,
    tg: TimeGrid,
    replicates: usize,
    seed: u64,
    max_m2: i64,
) -> Result<Vec<ShellStat>> {
    if replicates < 2 {
        return Err(Error::invalid("need at least two replicates"));
    }
    let basis = NoiseBasis::fourier_white(grid, None)?;
    let solver = SpectralSolver::new(*orders, grid, tg);
    let shells = Shells::new(&grid);
    let counts = shells.counts();
    let n_shells = shells.norms.len();
    let scale = grid.side.powi(grid.dim as i32) / (grid.len() as f64).powi(2);
    let per_rep = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let noise = sample_noise(replicate_seed(seed, r), tg, basis.len())?;
            let u = solver.stochastic_final(
                NoiseForcing::Basis {
                    basis: &basis,
                    h: None,
                },
                &noise,
            )?;
            let mut shell_mean = vec![0.0; n_shells];
            for (c, &s) in u.coeffs.iter().zip(&shells.shell_of) {
                shell_mean[s] += c.norm_sqr() * scale / counts[s] as f64;
            }
            Ok(shell_mean)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sum = vec![0.0; n_shells];
    let mut sum_sq = vec![0.0; n_shells];
    for shell_mean in &per_rep {
        for s in 0..n_shells {
            sum[s] += shell_mean[s];
            sum_sq[s] += shell_mean[s] * shell_mean[s];
        }
    }
    let reps = replicates as f64;
    let unit = grid.xi_unit_sq();
    shells
        .norms
        .iter()
        .enumerate()
        .filter(|&(_, &m2)| m2 <= max_m2)
        .map(|(s, &m2)| {
            let mean = sum[s] / reps;
            let var = (sum_sq[s] / reps - mean * mean).max(0.0) * reps / (reps - 1.0);
            Ok(ShellStat {
                m2,
                xi: (unit * m2 as f64).sqrt(),
                count: counts[s],
                mean,
                band: 2.0 * (var / reps).sqrt() / mean,
                oracle: mode_variance(orders, unit * m2 as f64, tg.t_end)?,
            })
        })
        .collect()
}

fn slope_fit(orders: &FracOrders, cfg: &SlopeConfig, seed: u64) -> Result<SlopeFit> {
    let grid = cfg.grid;
    let (lo, hi) = cfg.modes;
    if !(lo >= 1 && hi > lo && 2 * hi <= grid.n as i64) {
        return Err(Error::invalid(format!(
            "slope modes {lo}..{hi} not resolved on n = {}",
            grid.n
        )));
    }
    let stats: Vec<ShellStat> =
        white_noise_spectrum(orders, grid, cfg.time_grid, cfg.replicates, seed, hi * hi)?
            .into_iter()
            .filter(|s| s.m2 >= lo * lo)
            .collect();
    let lx: Vec<f64> = stats.iter().map(|s| s.xi.ln()).collect();
    let lm: Vec<f64> = stats.iter().map(|s| s.mean.ln()).collect();
    let lo_: Vec<f64> = stats.iter().map(|s| s.oracle.ln()).collect();
    Ok(SlopeFit {
        measured_slope: least_squares_slope(&lx, &lm),
        oracle_slope: least_squares_slope(&lx, &lo_),
        xi: stats.iter().map(|s| s.xi).collect(),
        measured: stats.iter().map(|s| s.mean).collect(),
        bands: stats.iter().map(|s| s.band).collect(),
        oracle: stats.iter().map(|s| s.oracle).collect(),
    })
}

/// Monte Carlo estimate of `‖u‖_{𝔹H^{γ+2}_p} / ‖g‖_{𝔹H^{γ+c₀′}_p(l₂)}` for
/// space-time white noise on each level, and optionally the spectral decay
/// exponent of `E|û(T,ξ)|²` against the per-mode quadrature oracle.
pub fn apriori_estimate_check(orders: &FracOrders, cfg: &EstimateConfig) -> Result<EstimateReport> {
    if cfg.replicates < 2 || !(cfg.p >= 2.0) {
        return Err(Error::invalid("need at least two replicates and p >= 2"));
    }
    let levels = cfg
        .levels
        .iter()
        .map(|&(grid, tg)| level_estimate(orders, cfg, grid, tg))
        .collect::<Result<Vec<_>>>()?;
    let ratio_changes = levels
        .windows(2)
        .map(|w| (w[1].ratio - w[0].ratio).abs() / w[0].ratio)
        .collect();
    let slope = cfg
        .slope
        .as_ref()
        .map(|s| slope_fit(orders, s, cfg.seed))
        .transpose()?;
    let mut inconclusive = levels.iter().any(|l| l.u_band > BAND_LIMIT);
    if let Some(s) = &slope {
        inconclusive |= s.bands.iter().any(|&b| b > BAND_LIMIT);
    }
    Ok(EstimateReport {
        levels,
        ratio_changes,
        slope,
        inconclusive,
    })
}
