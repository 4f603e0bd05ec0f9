use std::f64::consts::PI;

use modvar::aperture::{eval_momentum_product, eval_momentum_sum, fringe_sum, fringe_sum_squared};
use modvar::modular::{p_k, p_mod, q_mod, q_t};
use modvar::moments::{sdev_pmod_refined, sdev_qt, Moments};
use modvar::{Execution, SlitConfig};
use proptest::prelude::*;

fn even_slits() -> impl Strategy<Value = u32> {
    (1u32..=100).prop_map(|h| 2 * h)
}

#[test]
fn decomposition_exact_on_many_points() {
    let t = 5.0;
    let k = 2.0 * PI / t;
    let mut x = -1234.567_f64;
    let half_ulp = 0.5 * (t.next_up() - t);
    for _ in 0..100_000 {
        assert_eq!(p_mod(x, k) + p_k(x, k), x);
        let sum = q_mod(x, t) + q_t(x, t);
        if x > -0.5 * t && x < 0.0 {
            // x + T rounds on this cell; no lattice split can be exact there.
            assert!((sum - x).abs() <= half_ulp);
        } else {
            assert_eq!(sum, x);
        }
        x += 0.024_691_3;
    }
}

proptest! {
    #[test]
    fn dirichlet_form_matches_sum(m in even_slits(), kappa in -3.0f64..3.0) {
        prop_assume!(kappa.sin().abs() > 1e-3);
        let direct = fringe_sum(m, kappa).powi(2);
        let closed = fringe_sum_squared(m, kappa);
        prop_assert!((direct - closed).abs() <= 1e-9 * direct.max(1.0));
    }

    #[test]
    fn product_form_matches_sum(d in 1u32..=6, k in -20.0f64..20.0, a in 0.1f64..0.9) {
        let c = SlitConfig::new(a, 1.0, 1 << d).unwrap();
        let sum = eval_momentum_sum(&c, k);
        let product = eval_momentum_product(&c, k).unwrap();
        prop_assert!((sum - product).abs() <= 1e-12);
    }

    #[test]
    fn admissible_at_every_node(m in even_slits(), j in -50i32..50, t in 0.5f64..10.0) {
        let c = SlitConfig::new(0.3 * t, t, m).unwrap();
        let node = (j as f64 + 0.5) * 2.0 * PI / t;
        prop_assert!(eval_momentum_sum(&c, node).abs() <= 1e-10);
    }

    #[test]
    fn robertson_bounds_hold(m in even_slits(), t in 0.5f64..10.0, frac in 0.05f64..0.95) {
        let c = SlitConfig::new(frac * t, t, m).unwrap();
        let e = Moments::default();
        prop_assert!(e.uncertainty_product(&c, false).unwrap() >= 0.5 - 1e-9);
        prop_assert!(e.uncertainty_product(&c, true).unwrap() >= 0.5 - 1e-9);
    }

    #[test]
    fn refined_never_exceeds_unrefined(m in even_slits(), t in 0.5f64..10.0) {
        let c = SlitConfig::new(0.5 * t, t, m).unwrap();
        let unrefined = Moments::default().sdev_pmod_single_fringe(&c).unwrap().value;
        prop_assert!(sdev_pmod_refined(&c).value <= unrefined * (1.0 + 1e-12));
    }

    #[test]
    fn single_fringe_ignores_width(m in even_slits(), a1 in 0.05f64..0.95, a2 in 0.05f64..0.95) {
        let e = Moments::default();
        let v1 = e.sdev_pmod_single_fringe(&SlitConfig::new(a1, 1.0, m).unwrap()).unwrap().value;
        let v2 = e.sdev_pmod_single_fringe(&SlitConfig::new(a2, 1.0, m).unwrap()).unwrap().value;
        prop_assert_eq!(v1, v2);
    }

    #[test]
    fn qt_scales_with_separation(m in even_slits(), t in 0.5f64..10.0) {
        let c = SlitConfig::new(0.5 * t, t, m).unwrap();
        let unit = SlitConfig::new(0.5, 1.0, m).unwrap();
        prop_assert!((sdev_qt(&c).value - t * sdev_qt(&unit).value).abs() <= 1e-12 * t * m as f64);
    }
}

#[test]
fn momentum_norm_is_one() {
    let e = Moments::default();
    for (a, m) in [(1.0, 2), (1.0, 8), (2.5, 4), (0.5, 2)] {
        let n = e.momentum_norm(&SlitConfig::new(a, 5.0, m).unwrap(), 1e-5).unwrap();
        assert!((n.value - 1.0).abs() <= 1e-8, "a={a} m={m}: {}", n.value);
    }
}

#[test]
fn execution_modes_agree_bitwise() {
    let seq = Moments::default().with_exec(Execution::Sequential);
    let par = Moments::default().with_exec(Execution::Parallel);
    let ms: Vec<u32> = (2..=120).step_by(2).collect();
    assert_eq!(seq.sweep(5.0, 1.0, &ms).unwrap(), par.sweep(5.0, 1.0, &ms).unwrap());
    let c = SlitConfig::new(0.5, 5.0, 6).unwrap();
    assert_eq!(
        seq.sdev_pmod_bruteforce(&c, 1e-5).unwrap(),
        par.sdev_pmod_bruteforce(&c, 1e-5).unwrap()
    );
}
