//! Double-double arithmetic: an unevaluated sum `hi + lo` carrying about 32
//! significant digits. Only what the Mittag-Leffler series needs is provided.

use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

pub(crate) const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

pub(crate) const PI: Dd = Dd {
    hi: std::f64::consts::PI,
    lo: 1.224_646_799_147_353_2e-16,
};

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn new(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    fn renorm(hi: f64, lo: f64) -> Dd {
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    /// Exact product of two doubles.
    #[inline]
    pub fn prod(a: f64, b: f64) -> Dd {
        let (hi, lo) = two_prod(a, b);
        Dd { hi, lo }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Dd {
        let (p1, p2) = two_prod(self.hi, b);
        Dd::renorm(p1, p2 + self.lo * b)
    }

    #[inline]
    pub fn add_f64(self, b: f64) -> Dd {
        let (s1, s2) = two_sum(self.hi, b);
        Dd::renorm(s1, s2 + self.lo)
    }

    /// Multiplication by `2^k`, exact barring overflow.
    #[inline]
    pub fn ldexp(self, k: i32) -> Dd {
        let scale = 2f64.powi(k);
        Dd {
            hi: self.hi * scale,
            lo: self.lo * scale,
        }
    }

    pub fn recip(self) -> Dd {
        Dd::ONE / self
    }

    pub fn exp(self) -> Dd {
        if self.hi > 709.7 {
            return Dd::new(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        const SQUARINGS: i32 = 10;
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2.mul_f64(k)).ldexp(-SQUARINGS);
        // expm1(r) by Taylor; |r| < 4e-4 so 12 terms reach full precision.
        let mut e = Dd::ZERO;
        for i in (1..=12).rev() {
            e = (Dd::ONE + e * r) / Dd::new(i as f64);
        }
        e = e * r;
        for _ in 0..SQUARINGS {
            e = e.mul_f64(2.0) + e * e;
        }
        (Dd::ONE + e).ldexp(k as i32)
    }

    pub fn ln(self) -> Dd {
        debug_assert!(self.hi > 0.0);
        let mut y = Dd::new(self.hi.ln());
        for _ in 0..2 {
            y = y + self * (-y).exp() - Dd::ONE;
        }
        y
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::new(x)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        Dd::renorm(s1, s2 + t2)
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, b.hi);
        Dd::renorm(p1, p2 + (self.hi * b.lo + self.lo * b.hi))
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        Dd::renorm(q1, q2).add_f64(q3)
    }
}

/// `B_{2j} / (2j (2j-1))` for j = 1..=15, the Stirling-series coefficients.
fn stirling_coefficients() -> &'static [Dd; 15] {
    static COEFFS: OnceLock<[Dd; 15]> = OnceLock::new();
    COEFFS.get_or_init(|| {
        const BERNOULLI: [(f64, f64); 15] = [
            (1.0, 6.0),
            (-1.0, 30.0),
            (1.0, 42.0),
            (-1.0, 30.0),
            (5.0, 66.0),
            (-691.0, 2730.0),
            (7.0, 6.0),
            (-3617.0, 510.0),
            (43867.0, 798.0),
            (-174611.0, 330.0),
            (854513.0, 138.0),
            (-236364091.0, 2730.0),
            (8553103.0, 6.0),
            (-23749461029.0, 870.0),
            (8615841276005.0, 14322.0),
        ];
        let mut out = [Dd::ZERO; 15];
        for (j, &(num, den)) in BERNOULLI.iter().enumerate() {
            let two_j = 2.0 * (j as f64 + 1.0);
            out[j] = Dd::new(num) / (Dd::new(den) * Dd::prod(two_j, two_j - 1.0));
        }
        out
    })
}

fn half_ln_two_pi() -> Dd {
    static VALUE: OnceLock<Dd> = OnceLock::new();
    *VALUE.get_or_init(|| PI.mul_f64(2.0).ln().mul_f64(0.5))
}

/// `ln Γ(x)` for `x > 0`, accurate to a few units of 1e-32 times `|ln Γ|`.
pub(crate) fn ln_gamma(x: Dd) -> Dd {
    debug_assert!(x.hi > 0.0);
    const SHIFT_TO: f64 = 32.0;
    let mut y = x;
    let mut prod = Dd::ONE;
    while y.hi < SHIFT_TO {
        prod = prod * y;
        y = y.add_f64(1.0);
    }
    let inv = y.recip();
    let inv2 = inv * inv;
    let coeffs = stirling_coefficients();
    let mut series = coeffs[14];
    for c in coeffs[..14].iter().rev() {
        series = series * inv2 + *c;
    }
    let stirling = y.add_f64(-0.5) * y.ln() - y + half_ln_two_pi() + series * inv;
    if prod == Dd::ONE {
        stirling
    } else {
        stirling - prod.ln()
    }
}

/// `sin(πx)` with the argument reduced exactly before the multiplication by π.
pub(crate) fn sin_pi(x: f64) -> f64 {
    let n = x.round();
    let r = x - n;
    let s = (std::f64::consts::PI * r).sin();
    if (n as i64).rem_euclid(2) == 0 {
        s
    } else {
        -s
    }
}

/// Sign and natural log of `|1/Γ(x)|`; `None` at the poles of Γ.
///
/// The log carries double-double accuracy for `x > 0`; for negative
/// arguments the reflection factor limits it to double precision.
pub(crate) fn ln_recip_gamma(x: Dd) -> Option<(f64, Dd)> {
    if x.hi > 0.0 {
        return Some((1.0, -ln_gamma(x)));
    }
    let xf = x.to_f64();
    if xf == xf.round() {
        return None;
    }
    // 1/Γ(x) = Γ(1-x) sin(πx) / π
    let s = sin_pi(xf);
    let lg = ln_gamma(Dd::ONE - x);
    Some((s.signum(), lg + Dd::new(s.abs().ln()) - PI.ln()))
}

/// `1/Γ(x)` in double precision, exactly zero at the poles.
pub(crate) fn recip_gamma(x: f64) -> f64 {
    match ln_recip_gamma(Dd::new(x)) {
        None => 0.0,
        Some((sign, l)) => sign * l.exp().to_f64(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_and_ln_are_inverse_at_dd_precision() {
        for &x in &[-30.5, -1.0, -1e-5, 0.3, 1.0, 7.25, 100.0] {
            let y = Dd::new(x).exp().ln();
            assert!(
                (y - Dd::new(x)).to_f64().abs() <= 1e-30 * x.abs().max(1.0),
                "x={x}"
            );
        }
    }

    #[test]
    fn exp_one_matches_e_to_32_digits() {
        // e = 2.71828182845904523536028747135266249775724709...
        let e = Dd::ONE.exp();
        let reference = Dd::new(std::f64::consts::E) + Dd::new(1.445_646_891_729_250_2e-16);
        assert!((e - reference).to_f64().abs() < 1e-31);
    }

    #[test]
    fn ln_gamma_integers_are_log_factorials() {
        let mut fact = Dd::ONE;
        for n in 1..60u32 {
            if n > 1 {
                fact = fact.mul_f64((n - 1) as f64);
            }
            let lg = ln_gamma(Dd::new(n as f64));
            let diff = (lg - fact.ln()).to_f64().abs();
            assert!(diff < 1e-29 * lg.hi.abs().max(1.0), "n={n} diff={diff:e}");
        }
    }

    #[test]
    fn ln_gamma_half_is_half_ln_pi() {
        let lg = ln_gamma(Dd::new(0.5));
        let want = PI.ln().mul_f64(0.5);
        let diff = (lg - want).to_f64().abs();
        assert!(diff < 1e-29, "{diff:e}");
    }

    #[test]
    fn recip_gamma_vanishes_at_poles_and_reflects() {
        assert_eq!(recip_gamma(0.0), 0.0);
        assert_eq!(recip_gamma(-3.0), 0.0);
        // Γ(-1/2) = -2√π
        let v = recip_gamma(-0.5);
        assert!((v + 1.0 / (2.0 * std::f64::consts::PI.sqrt())).abs() < 1e-16);
        assert!((recip_gamma(5.0) - 1.0 / 24.0).abs() < 1e-17);
    }
}
