//! Two-parameter Mittag-Leffler function on the real axis.
//!
//! `E_{a,b}(z) = Σ_k z^k / Γ(ak + b)` is evaluated by one of two branches:
//!
//! * the power series, accumulated in double-double arithmetic with
//!   double-double `ln Γ`, which keeps the alternating sum accurate while its
//!   largest term stays below roughly `tol · 1e28`;
//! * for `z = -x` with `x^{1/a}` large, the asymptotic expansion
//!   `E_{a,b}(z) ≈ -Σ_{k=1..K} z^{-k}/Γ(b - ak)` truncated at its smallest term,
//!   plus the residues `(2/a) Re(s^{1-b} e^s)` at `s = x^{1/a} e^{iπ/a}` when
//!   `a > 1` (these give `E_{2,1}(-x²) = cos x` exactly at `a = 2`).
//!
//! On the negative axis the branch switches at `x^{1/a} = ln(1/tol) + 4`,
//! where the smallest asymptotic term is about `e^{-x^{1/a}} < tol/50` while
//! the series terms peak near `e^{x^{1/a}} < 1e15/tol`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::Serialize;

use crate::dd::{self, Dd};
use crate::error::{Error, Result};

/// Double-double relative accuracy of a single series term.
const TERM_REL_ERR: f64 = 4e-29;
/// Relative accuracy of a term whose Γ argument needed reflection.
const REFLECTED_TERM_REL_ERR: f64 = 4e-16;
const MAX_SERIES_TERMS: usize = 20_000;
const MAX_ASYMPTOTIC_TERMS: usize = 400;

pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MLParams {
    pub a: f64,
    pub b: f64,
    pub tol: f64,
}

impl MLParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        Self::with_tol(a, b, DEFAULT_TOL)
    }

    /// `a` may equal 2, the cosine boundary case.
    pub fn with_tol(a: f64, b: f64, tol: f64) -> Result<Self> {
        if !(a > 0.0 && a <= 2.0) {
            return Err(Error::invalid(format!(
                "Mittag-Leffler order a = {a} outside (0, 2]"
            )));
        }
        if !b.is_finite() {
            return Err(Error::NonFinite(format!(
                "Mittag-Leffler parameter b = {b}"
            )));
        }
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::invalid(format!("tolerance {tol} must be positive")));
        }
        Ok(MLParams { a, b, tol })
    }

    /// Negative-axis switch point `Z_switch`: the series is used for `|z| ≤ Z_switch`.
    pub fn switch_point(&self) -> f64 {
        self.switch_scale().powf(self.a)
    }

    fn switch_scale(&self) -> f64 {
        (1.0 / self.tol).ln() + 4.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Exact,
    Series,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MLValue {
    pub value: f64,
    pub branch: Branch,
    /// A-posteriori absolute error estimate of the branch that produced `value`.
    pub error_estimate: f64,
}

/// `1/Γ(x)`, zero at the poles of Γ.
pub fn recip_gamma(x: f64) -> f64 {
    dd::recip_gamma(x)
}

/// `Γ(x)`; infinite at the poles.
pub fn gamma(x: f64) -> f64 {
    1.0 / dd::recip_gamma(x)
}

/// `E_{a,b}(z)` to absolute accuracy `params.tol`.
pub fn ml_eval(params: &MLParams, z: f64) -> Result<f64> {
    ml_eval_detailed(params, z).map(|v| v.value)
}

pub fn ml_eval_detailed(params: &MLParams, z: f64) -> Result<MLValue> {
    if !z.is_finite() {
        return Err(Error::NonFinite(format!("Mittag-Leffler argument z = {z}")));
    }
    let not_achieved = || Error::AccuracyNotAchieved {
        a: params.a,
        b: params.b,
        z,
        tol: params.tol,
    };
    if z == 0.0 {
        return Ok(MLValue {
            value: dd::recip_gamma(params.b),
            branch: Branch::Exact,
            error_estimate: 0.0,
        });
    }
    if z > 0.0 {
        // Positive terms (up to finitely many signs): only overflow can fail.
        let s = series(params, z).ok_or_else(not_achieved)?;
        return if s.value.is_finite() {
            Ok(s)
        } else {
            Err(not_achieved())
        };
    }
    let scale = (-z).powf(1.0 / params.a);
    let (first, second): (
        fn(&MLParams, f64) -> Option<MLValue>,
        fn(&MLParams, f64) -> Option<MLValue>,
    ) = if scale <= params.switch_scale() {
        (series, asymptotic)
    } else {
        (asymptotic, series)
    };
    for branch in [first, second] {
        if let Some(v) = branch(params, z) {
            if v.value.is_finite() && v.error_estimate <= params.tol {
                return Ok(v);
            }
        }
    }
    Err(not_achieved())
}

/// Largest `Γ` argument kept in the cached series coefficients; beyond it
/// `1/Γ` leaves the normal double range.
const MAX_TABLE_GAMMA_ARG: f64 = 170.0;
const MAX_CACHED_PARAMS: usize = 256;

struct SeriesCoeff {
    /// `1/Γ(ak + b)`, zero at poles.
    value: Dd,
    reflected: bool,
}

/// Coefficients that depend on `(a, b)` only, shared by every evaluation.
#[derive(Default)]
struct Coefficients {
    series: OnceLock<Vec<SeriesCoeff>>,
    /// `(1/Γ(b − ak), ln Γ(ak + 1 − b))` for `k = 1..=MAX_ASYMPTOTIC_TERMS`, index `k − 1`.
    asymptotic: OnceLock<Vec<(f64, f64)>>,
}

impl Coefficients {
    fn series(&self, a: f64, b: f64) -> &[SeriesCoeff] {
        self.series.get_or_init(|| {
            let mut out = Vec::new();
            for k in 0..MAX_SERIES_TERMS {
                let arg = Dd::prod(a, k as f64).add_f64(b);
                if arg.hi > MAX_TABLE_GAMMA_ARG {
                    break;
                }
                let value = match dd::ln_recip_gamma(arg) {
                    None => Dd::ZERO,
                    Some((sign, l)) => {
                        let m = l.exp();
                        if sign < 0.0 {
                            -m
                        } else {
                            m
                        }
                    }
                };
                out.push(SeriesCoeff {
                    value,
                    reflected: arg.hi <= 0.0,
                });
            }
            out
        })
    }

    fn asymptotic(&self, a: f64, b: f64) -> &[(f64, f64)] {
        self.asymptotic.get_or_init(|| {
            (1..=MAX_ASYMPTOTIC_TERMS)
                .map(|k| {
                    let rg = dd::recip_gamma(b - a * k as f64);
                    let arg = a * k as f64 + 1.0 - b;
                    let ln_env = if arg <= 0.0 {
                        f64::INFINITY
                    } else {
                        dd::ln_gamma(Dd::new(arg)).to_f64()
                    };
                    (rg, ln_env)
                })
                .collect()
        })
    }
}

fn coefficients(a: f64, b: f64) -> Arc<Coefficients> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u64), Arc<Coefficients>>>> = OnceLock::new();
    let mut cache = CACHE
        .get_or_init(Default::default)
        .lock()
        .unwrap_or_else(|e| e.into_inner());
    if cache.len() >= MAX_CACHED_PARAMS && !cache.contains_key(&(a.to_bits(), b.to_bits())) {
        cache.clear();
    }
    cache.entry((a.to_bits(), b.to_bits())).or_default().clone()
}

/// Power series in double-double arithmetic. `None` if the term budget runs out.
pub(crate) fn series(params: &MLParams, z: f64) -> Option<MLValue> {
    // cached coefficients with a running power of z, while everything stays in range
    if z.abs().powf(1.0 / params.a) <= 0.25 * MAX_TABLE_GAMMA_ARG {
        let coeffs = coefficients(params.a, params.b);
        if let Some(v) = series_cached(coeffs.series(params.a, params.b), z) {
            return Some(v);
        }
    }
    series_direct(params, z)
}

fn series_cached(coeffs: &[SeriesCoeff], z: f64) -> Option<MLValue> {
    let zd = Dd::new(z);
    let mut power = Dd::ONE;
    let mut sum = Dd::ZERO;
    let mut abs_sum = 0.0f64;
    let mut err = 0.0f64;
    let mut past_peak = false;
    let mut prev = 0.0f64;
    for (k, c) in coeffs.iter().enumerate() {
        if k > 0 {
            power = power * zd;
        }
        let term = c.value * power;
        sum = sum + term;
        let m = term.hi.abs();
        abs_sum += m;
        err += m * if c.reflected {
            REFLECTED_TERM_REL_ERR
        } else {
            TERM_REL_ERR
        };
        // for k past the peak the magnitudes decrease monotonically
        past_peak |= k > 2 && m < prev && !c.reflected;
        prev = m;
        if past_peak && (m <= 1e-34 * abs_sum || (m == 0.0 && abs_sum > 0.0)) {
            return Some(MLValue {
                value: sum.to_f64(),
                branch: Branch::Series,
                error_estimate: err,
            });
        }
        if !power.hi.is_finite() {
            return None;
        }
    }
    None
}

fn series_direct(params: &MLParams, z: f64) -> Option<MLValue> {
    let MLParams { a, b, .. } = *params;
    let ln_abs_z = Dd::new(z.abs()).ln();
    let z_negative = z < 0.0;
    // terms grow until (ak + b)^a ≈ |z|
    let peak_arg = z.abs().powf(1.0 / a);

    let mut sum = Dd::ZERO;
    let mut abs_sum = 0.0f64;
    let mut err = 0.0f64;
    for k in 0..MAX_SERIES_TERMS {
        let kf = k as f64;
        let arg = Dd::prod(a, kf).add_f64(b);
        let Some((sign, ln_rg)) = dd::ln_recip_gamma(arg) else {
            continue;
        };
        let magnitude = (ln_abs_z.mul_f64(kf) + ln_rg).exp();
        let mut term = if sign < 0.0 { -magnitude } else { magnitude };
        if z_negative && k % 2 == 1 {
            term = -term;
        }
        sum = sum + term;
        let m = magnitude.hi;
        abs_sum += m;
        err += m * if arg.hi > 0.0 {
            TERM_REL_ERR
        } else {
            REFLECTED_TERM_REL_ERR
        };
        if arg.hi > peak_arg + 1.0 && (m <= 1e-34 * abs_sum || m == 0.0) {
            return Some(MLValue {
                value: sum.to_f64(),
                branch: Branch::Series,
                error_estimate: err,
            });
        }
        if !abs_sum.is_finite() {
            return Some(MLValue {
                value: f64::INFINITY,
                branch: Branch::Series,
                error_estimate: f64::INFINITY,
            });
        }
    }
    None
}

/// Asymptotic expansion for `z < 0`, truncated at its smallest term.
pub(crate) fn asymptotic(params: &MLParams, z: f64) -> Option<MLValue> {
    if z >= 0.0 {
        return None;
    }
    let MLParams { a, b, .. } = *params;
    let x = -z;
    let scale = x.powf(1.0 / a);
    let ln_x = x.ln();
    let coeffs = coefficients(a, b);
    let table = coeffs.asymptotic(a, b);

    // |Γ(b-ak)|^{-1} = Γ(1-b+ak) |sin π(b-ak)| / π: truncate on the smooth
    // envelope Γ(1-b+ak) x^{-k}, not on the oscillating terms themselves.
    let ln_floor = (1e-3 * params.tol * f64::EPSILON * std::f64::consts::PI).ln();
    let mut value = 0.0f64;
    let mut err = 0.0f64;
    let mut prev_env = f64::INFINITY;
    let mut converged = false;
    let inv_x = 1.0 / x;
    let mut power = 1.0f64;
    for (i, &(rg, ln_gamma_env)) in table.iter().enumerate() {
        let k = i + 1;
        power *= inv_x;
        let env = ln_gamma_env - k as f64 * ln_x;
        if env.is_finite() && prev_env.is_finite() && env > prev_env {
            err += env.exp() / std::f64::consts::PI;
            converged = true;
            break;
        }
        prev_env = env;
        if rg != 0.0 {
            // -z^{-k}/Γ(b-ak) with z^{-k} = (-1)^k x^{-k}
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            let term = sign * power * rg;
            value += term;
            err += 2.0 * f64::EPSILON * term.abs();
        }
        if env < ln_floor {
            converged = true;
            break;
        }
    }
    if !converged {
        return None;
    }

    if a > 1.0 {
        let theta = std::f64::consts::PI / a;
        let amplitude = (2.0 / a) * scale.powf(1.0 - b) * (scale * theta.cos()).exp();
        value += amplitude * (scale * theta.sin() + (1.0 - b) * theta).cos();
        err += 4.0 * f64::EPSILON * amplitude * (1.0 + scale);
    } else if a == 1.0 {
        // pole sits on the branch cut; its contribution is O(e^{-x} x^{1-b})
        err += (-x).exp() * x.powf(1.0 - b);
    }
    Some(MLValue {
        value,
        branch: Branch::Asymptotic,
        error_estimate: err,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub a: f64,
    pub b: f64,
    /// `max |E_{a,b}(z)| / (1 ∧ |z|^{-1})` over the samples.
    pub c_star: f64,
    pub argmax_z: f64,
    pub n_samples: usize,
}

/// Empirical constant in `|E_{a,b}(z)| ≤ C (1 ∧ |z|^{-1})` on the negative axis.
pub fn ml_bound_check(params: &MLParams, z_samples: &[f64]) -> Result<BoundReport> {
    if let Some(z) = z_samples.iter().find(|z| !(**z <= 0.0)) {
        return Err(Error::invalid(format!(
            "bound check sample z = {z} is not ≤ 0"
        )));
    }
    let mut c_star = 0.0f64;
    let mut argmax_z = 0.0;
    for &z in z_samples {
        let e = ml_eval(params, z)?;
        let ratio = e.abs() * z.abs().max(1.0);
        if ratio > c_star {
            c_star = ratio;
            argmax_z = z;
        }
    }
    Ok(BoundReport {
        a: params.a,
        b: params.b,
        c_star,
        argmax_z,
        n_samples: z_samples.len(),
    })
}
