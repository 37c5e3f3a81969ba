#![allow(clippy::excessive_precision)]

use fracspde::mittag_leffler::{ml_eval, ml_eval_detailed, Branch, MLParams};
use proptest::prelude::*;

fn ml(a: f64, b: f64, z: f64) -> f64 {
    ml_eval(&MLParams::new(a, b).unwrap(), z).unwrap()
}

/// Reference values from a 40+ digit power series (precision grown with
/// `|z|^{1/a}` so the alternating sum is exact to the printed digits).
const REFERENCE: &[(f64, f64, f64, f64)] = &[
    (0.5, 1.0, -1.0, 0.427583576155807004),
    (0.5, 1.0, -3.0, 0.17900115118138995),
    (0.5, 1.0, -10.0, 0.0561409927438225859),
    (0.5, 1.5, -25.0, 0.0390980171026943456),
    (0.3, 1.0, -2.0, 0.290232226167875355),
    (0.3, 1.2, -5.0, 0.162911526498979902),
    (0.6, 1.3, -7.5, 0.100167757597759558),
    (0.8, 1.4, -5.223303379776745, 0.134016551561896877),
    (0.8, 0.8, -40.0, 0.000116041402054561257),
    (0.75, 1.15, -100.0, 0.00453361678159284125),
    (1.0, 1.5, -20.0, 0.0289757495356325841),
    (1.0, 0.5, -50.0, -0.00582026803495591223),
    (1.2, 1.0, -30.0, -0.00618977558003895322),
    (1.5, 0.5, -12.5, 0.181286149682051396),
    (1.5, 0.5, -200.0, 0.000026603245093638931),
    (1.5, 2.0, -60.0, 0.00940580386597038919),
    (1.9, 1.2, -300.0, 0.0693427453212892249),
    (0.7, 1.3, 0.5, 1.82929523230340243),
    (1.7, 0.6, -1500.0, 0.0000689995321909768614),
    (0.4, 0.7, -0.25, 0.564687579063557901),
    (0.9, 1.9, -1000.0, 0.00099989471164056784),
];

#[test]
fn matches_high_precision_reference_table() {
    for &(a, b, z, want) in REFERENCE {
        let got = ml(a, b, z);
        assert!(
            (got - want).abs() <= 1e-12,
            "E_{{{a},{b}}}({z}) = {got}, reference {want}, diff {:e}",
            (got - want).abs()
        );
    }
    // positive argument: relative accuracy is what matters
    let got = ml(0.5, 1.0, 2.0);
    assert!((got / 108.940904389977972 - 1.0).abs() < 1e-15);
}

/// Independent series for E_{1/2,1}(-1): Γ(k/2 + 1) through the factorial and
/// half-integer recurrences, compensated summation.
fn half_order_series_at_minus_one() -> f64 {
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    let mut gamma_int = 1.0f64; // Γ(m + 1)
    let mut gamma_half = sqrt_pi / 2.0; // Γ(m + 3/2)
    for k in 0..200u32 {
        let m = k / 2;
        let g = if k % 2 == 0 {
            if m > 0 {
                gamma_int *= m as f64;
            }
            gamma_int
        } else {
            if m > 0 {
                gamma_half *= m as f64 + 0.5;
            }
            gamma_half
        };
        let term = if k % 2 == 0 { 1.0 / g } else { -1.0 / g };
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// erfc(1) from the Taylor series of erf at 1.
fn erfc_one() -> f64 {
    let mut sum = 0.0;
    let mut fact = 1.0;
    for n in 0..40 {
        if n > 0 {
            fact *= n as f64;
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / (fact * (2 * n + 1) as f64);
    }
    1.0 - 2.0 / std::f64::consts::PI.sqrt() * sum
}

#[test]
fn half_order_at_minus_one_is_e_erfc_one() {
    let oracle = half_order_series_at_minus_one();
    let closed = std::f64::consts::E * erfc_one();
    assert!((oracle - closed).abs() < 1e-14, "{oracle} vs {closed}");
    assert!((ml(0.5, 1.0, -1.0) - oracle).abs() <= 1e-15);
}

#[test]
fn exponential_identity_on_symmetric_range() {
    for i in 0..=400 {
        let x = -20.0 + 40.0 * i as f64 / 400.0;
        let got = ml(1.0, 1.0, x);
        let want = x.exp();
        assert!(
            (got - want).abs() <= 1e-12 * want.max(1.0),
            "x={x}: {got} vs {want}"
        );
    }
}

#[test]
fn cosine_identity_on_boundary_order() {
    for i in 0..=400 {
        let x = 20.0 * i as f64 / 400.0;
        let got = ml(2.0, 1.0, -x * x);
        assert!(
            (got - x.cos()).abs() <= 1e-12,
            "x={x}: {got} vs {}",
            x.cos()
        );
    }
}

#[test]
fn large_arguments_use_the_asymptotic_branch() {
    let p = MLParams::new(0.5, 1.0).unwrap();
    assert_eq!(ml_eval_detailed(&p, -0.5).unwrap().branch, Branch::Series);
    assert_eq!(
        ml_eval_detailed(&p, -1e3).unwrap().branch,
        Branch::Asymptotic
    );
    assert_eq!(ml_eval_detailed(&p, 0.0).unwrap().branch, Branch::Exact);
}

#[test]
fn subdiffusive_functions_decrease_on_negative_axis() {
    for &a in &[0.2, 0.5, 0.8, 1.0] {
        let mut prev = f64::INFINITY;
        for i in 0..=300 {
            let z = -(i as f64 / 300.0).powi(2) * 2000.0;
            let v = ml(a, 1.0, z);
            assert!(v <= prev + 1e-12, "a={a} z={z}");
            prev = v;
        }
    }
}

proptest! {
    #[test]
    fn satisfies_shift_recurrence(a in 0.1f64..1.95, b in 0.2f64..2.5, z in -60.0f64..-0.1) {
        // E_{a,b}(z) = 1/Γ(b) + z E_{a,a+b}(z)
        let lhs = ml(a, b, z);
        let rhs = 1.0 / statrs::function::gamma::gamma(b) + z * ml(a, a + b, z);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + z.abs()), "lhs {} rhs {}", lhs, rhs);
    }

    #[test]
    fn obeys_inverse_linear_bound(a in 0.1f64..1.0, z in -1e5f64..0.0) {
        // completely monotone for a ≤ 1, b = 1: 0 < E ≤ 1 and decays like 1/|z|
        let v = ml(a, 1.0, z);
        prop_assert!(v > 0.0 && v <= 1.0 + 1e-12);
        prop_assert!(v * z.abs().max(1.0) <= 10.0);
    }
}
