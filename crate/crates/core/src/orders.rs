use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_KAPPA: f64 = 0.1;

/// Orders `(α, β)` of `∂ₜ^α u = Δu + ∂ₜ^β ∫ g dW` and the constants derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracOrders {
    pub alpha: f64,
    pub beta: f64,
    /// Regularity surcharge, only used when `β = 1/2`.
    pub kappa: f64,
}

impl FracOrders {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        Self::with_kappa(alpha, beta, DEFAULT_KAPPA)
    }

    pub fn with_kappa(alpha: f64, beta: f64, kappa: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::invalid(format!("alpha = {alpha} outside (0, 2)")));
        }
        if !(beta.is_finite() && beta < alpha + 0.5) {
            return Err(Error::invalid(format!(
                "beta = {beta} must satisfy beta < alpha + 1/2 = {}",
                alpha + 0.5
            )));
        }
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(Error::invalid(format!("kappa = {kappa} outside (0, 1)")));
        }
        let orders = FracOrders { alpha, beta, kappa };
        let c0p = orders.c0_prime();
        if !(0.0..2.0).contains(&c0p) {
            return Err(Error::invalid(format!("c0' = {c0p} outside [0, 2)")));
        }
        Ok(orders)
    }

    /// `Λ = max(⌈α⌉, ⌈β⌉)`.
    pub fn lambda(&self) -> u32 {
        self.alpha.ceil().max(self.beta.ceil()) as u32
    }

    /// `c₀ = (2β − 1)₊ / α`.
    pub fn c0(&self) -> f64 {
        (2.0 * self.beta - 1.0).max(0.0) / self.alpha
    }

    /// `c′₀ = c₀ + κ·1{β = 1/2}`.
    pub fn c0_prime(&self) -> f64 {
        if self.beta == 0.5 {
            self.c0() + self.kappa
        } else {
            self.c0()
        }
    }

    /// `c₁ = 2 − c′₀`, the number of derivatives the solution gains over the noise coefficient.
    pub fn c1(&self) -> f64 {
        2.0 - self.c0_prime()
    }

    /// `θ = min{1, α, 2(α − β) + 1}`.
    pub fn theta(&self) -> f64 {
        1f64.min(self.alpha)
            .min(2.0 * (self.alpha - self.beta) + 1.0)
    }

    /// Critical dimension for space-time white noise: solutions need `d < d₀`.
    pub fn critical_dimension(&self) -> f64 {
        4.0 - 2.0 * (2.0 * self.beta - 1.0).max(0.0) / self.alpha
    }

    /// Second Mittag-Leffler parameter of the kernel symbol, `1 + α − β − σ`.
    pub fn symbol_b(&self, sigma: f64) -> f64 {
        1.0 + self.alpha - self.beta - sigma
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_constants() {
        let o = FracOrders::new(1.0, 1.0).unwrap();
        assert_eq!(o.c0(), 1.0);
        assert_eq!(o.c1(), 1.0);
        assert_eq!(o.theta(), 1.0);
        assert_eq!(o.critical_dimension(), 2.0);
        assert_eq!(o.lambda(), 1);

        let o = FracOrders::new(0.5, 0.25).unwrap();
        assert_eq!(o.c0(), 0.0);
        assert_eq!(o.c1(), 2.0);
        assert_eq!(o.theta(), 0.5);
        assert_eq!(o.critical_dimension(), 4.0);

        let o = FracOrders::new(0.8, 0.6).unwrap();
        assert!((o.c0() - 0.25).abs() < 1e-15);
        assert!((o.critical_dimension() - 3.5).abs() < 1e-15);

        let o = FracOrders::with_kappa(0.5, 0.5, 0.3).unwrap();
        assert_eq!(o.c0(), 0.0);
        assert_eq!(o.c0_prime(), 0.3);
        assert_eq!(o.theta(), 0.5);

        let o = FracOrders::new(1.5, 1.9).unwrap();
        assert_eq!(o.lambda(), 2);
        assert!((o.theta() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range_orders() {
        assert!(FracOrders::new(0.0, 0.1).is_err());
        assert!(FracOrders::new(2.0, 0.1).is_err());
        assert!(FracOrders::new(0.5, 1.0).is_err());
        assert!(FracOrders::new(0.5, f64::NAN).is_err());
        assert!(FracOrders::with_kappa(0.5, 0.5, 1.0).is_err());
        assert!(FracOrders::new(0.5, -3.0).is_ok());
    }
}
