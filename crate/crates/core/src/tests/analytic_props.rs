use std::f64::consts::PI;

use crate::analytic::{
    abs_normal_tail, gamma_fn, gamma_over_sqrt_pi, ln_abs_normal_tail, ln_normal_upper_tail, ln_sup_wiener_tail,
    normal_upper_tail, sup_wiener_partial_sum, sup_wiener_tail,
};
use crate::TailModel;
use proptest::prelude::*;

/// Simpson oracle for `Q(x) = ∫_x^∞ φ`.
fn q_by_simpson(x: f64) -> f64 {
    let (lo, hi) = (x, x + 40.0);
    let panels = 200_000;
    let h = (hi - lo) / panels as f64;
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
    let mut s = pdf(lo) + pdf(hi);
    for i in 1..panels {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * pdf(lo + i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn normal_tail_against_quadrature() {
    for x in [-2.0, 0.0, 0.5, 1.0, 2.5, 5.0, 8.0] {
        let oracle = q_by_simpson(x);
        let got = normal_upper_tail(x);
        assert!((got - oracle).abs() <= 1e-12 * oracle, "x={x}: {got} vs {oracle}");
    }
    assert!((normal_upper_tail(1.0) - 0.158_655_253_931_457_05).abs() < 1e-16);
}

#[test]
fn log_tails_extend_past_underflow() {
    let x = 60.0;
    assert_eq!(normal_upper_tail(x), 0.0);
    let ln_q = ln_normal_upper_tail(x);
    // Mills ratio: Q(x) ~ φ(x)/x (1 - 1/x²).
    let approx = -0.5 * x * x - (2.0 * PI).sqrt().ln() - x.ln() + (1.0 - 1.0 / (x * x)).ln();
    assert!((ln_q - approx).abs() < 1e-5);
    assert!((ln_abs_normal_tail(x) - (ln_q + 2f64.ln())).abs() < 1e-12);
    assert!((ln_sup_wiener_tail(x) - (ln_q + 4f64.ln())).abs() < 1e-12);
}

#[test]
fn gamma_reference_values() {
    assert!((gamma_fn(0.5).unwrap() - PI.sqrt()).abs() < 1e-14);
    assert!((gamma_fn(4.3).unwrap() - 8.855_343_360_454_03).abs() < 1e-12);
    assert_eq!(gamma_over_sqrt_pi(1.5).unwrap(), 0.5);
    assert_eq!(gamma_over_sqrt_pi(2.5).unwrap(), 0.75);
    assert!(gamma_fn(-1.5).is_err() && gamma_fn(0.0).is_err());
}

proptest! {
    #[test]
    fn sup_dominates_abs(x in 0.0f64..8.0) {
        let sup = sup_wiener_tail(x, 1e-15).unwrap();
        let abs = abs_normal_tail(x);
        prop_assert!(sup >= abs - 1e-15);
        prop_assert!(sup <= 1.0 + 1e-15 && sup <= 2.0 * abs + 1e-15 || x < 0.5);
    }

    #[test]
    fn tails_decrease(x in 0.01f64..7.0, dx in 0.001f64..1.0) {
        prop_assert!(sup_wiener_tail(x + dx, 1e-15).unwrap() <= sup_wiener_tail(x, 1e-15).unwrap());
        prop_assert!(abs_normal_tail(x + dx) <= abs_normal_tail(x));
    }

    #[test]
    fn partial_sums_alternate_around_the_limit(x in 0.3f64..5.0, m in 0usize..6) {
        let v = sup_wiener_tail(x, 1e-16).unwrap();
        let even = sup_wiener_partial_sum(x, 2 * m);
        let odd = sup_wiener_partial_sum(x, 2 * m + 1);
        prop_assert!(odd <= v + 1e-15 && v <= even + 1e-15);
    }

    #[test]
    fn normal_tail_symmetry(x in -10.0f64..10.0) {
        prop_assert!((normal_upper_tail(x) + normal_upper_tail(-x) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gamma_recurrence(z in 0.1f64..20.0) {
        let lhs = gamma_fn(z + 1.0).unwrap();
        let rhs = z * gamma_fn(z).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs());
    }

    #[test]
    fn analytic_models_are_probabilities(n in 1u64..1_000_000, x in -3.0f64..10.0) {
        for model in [TailModel::AbsNormal, TailModel::SupWiener] {
            let t = model.tail(n, x);
            prop_assert!((0.0..=1.0).contains(&t));
            if x <= 0.0 {
                prop_assert_eq!(t, 1.0);
            }
            prop_assert_eq!(t, model.tail(n + 17, x));
        }
    }
}
