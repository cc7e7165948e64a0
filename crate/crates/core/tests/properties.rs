use nalgebra::Vector2;
use proptest::prelude::*;

use dcac_core::config::{parse_config, serialize_config, ExperimentPreset};
use dcac_core::dynamics::{coriolis, inertia, inertia_dot, is_positive_definite};
use dcac_core::reference::{hurwitz_check, poly_mul};
use dcac_core::sim::diagnostics::diag_remainder;
use dcac_core::ManipulatorParams;

fn joint() -> impl Strategy<Value = Vector2<f64>> {
    (-4.0..4.0f64, -4.0..4.0f64).prop_map(|(a, b)| Vector2::new(a, b))
}

fn arm() -> impl Strategy<Value = ManipulatorParams> {
    (0.1..10.0f64, 0.1..10.0f64, 0.1..3.0f64, 0.1..3.0f64).prop_map(|(m1, m2, l1, l2)| ManipulatorParams { m1, m2, l1, l2 })
}

/// `(θ + a)^n` as `α_0, …, α_{n−1}` (monic term dropped).
fn binomial(a: f64, n: usize) -> Vec<f64> {
    let mut p = vec![1.0];
    for _ in 0..n {
        p = poly_mul(&p, &[1.0, a]);
    }
    p.into_iter().skip(1).rev().collect()
}

proptest! {
    #[test]
    fn inertia_is_symmetric_positive_definite(p in arm(), q in joint()) {
        let m = inertia(&q, &p.theta().unwrap());
        prop_assert_eq!(m[(0, 1)], m[(1, 0)]);
        prop_assert!(is_positive_definite(&m));
    }

    #[test]
    fn inertia_rate_minus_twice_coriolis_is_skew(p in arm(), q in joint(), qdot in joint(), x in joint()) {
        let th = p.theta().unwrap();
        let n = inertia_dot(&q, &qdot, &th) - coriolis(&q, &qdot, &th) * 2.0;
        let scale = 1.0 + n.amax();
        prop_assert!(x.dot(&(n * x)).abs() <= 1e-12 * scale * x.norm_squared().max(1.0));
    }

    #[test]
    fn binomial_polynomials_are_hurwitz(a in 0.01..50.0f64, n in 2usize..=4, flip in 0usize..4) {
        let alphas = binomial(a, n);
        prop_assert!(hurwitz_check(&alphas));
        let mut bad = alphas.clone();
        let k = flip % bad.len();
        bad[k] = -bad[k];
        prop_assert!(!hurwitz_check(&bad));
    }

    #[test]
    fn config_survives_serialization(preset in 0usize..5, lambda_s in 0.01..5.0f64, t_end in 0.0..50.0f64) {
        let mut cfg = ExperimentPreset::ALL[preset].config();
        cfg.reference.lambda_s = lambda_s;
        cfg.t_end = t_end;
        prop_assert_eq!(parse_config(&serialize_config(&cfg)), Ok(cfg));
    }

    #[test]
    fn remainder_stencils_are_exact_on_low_degree_polynomials(ell in 1usize..=3, c in -3.0..3.0f64, dt in 1e-3..1e-1f64) {
        // s(t) = c t^ℓ + t has ℓ-th derivative ℓ! c (plus 1 for ℓ = 1).
        let fact = (1..=ell).product::<usize>() as f64;
        let s: Vec<Vector2<f64>> = (0..12)
            .map(|k| {
                let t = k as f64 * dt;
                Vector2::new(c * t.powi(ell as i32) + t, -c * t.powi(ell as i32))
            })
            .collect();
        let want = Vector2::new(fact * c + if ell == 1 { 1.0 } else { 0.0 }, -fact * c);
        for r in diag_remainder(&s, dt, ell).unwrap() {
            prop_assert!((r - want).amax() <= 1e-6 * (1.0 + want.amax()));
        }
    }
}
