//! Pointwise eigenvalue functions of the modular decomposition
//! `Q = Q_mod + Q_T` and `P = P_mod + P_K`.
//!
//! `Q_mod` is the nonnegative remainder of `x` modulo `T`. `P_mod` is the
//! remainder of `k` modulo `K` shifted by half a period, so that its
//! discontinuities sit on `(j + 1/2) K`, the node lattice of the `m`-slit
//! states. On a discontinuity the upper edge wins: `p_mod((j + 1/2) K) = K/2`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Period of a modular observable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModularSpec {
    pub period: f64,
    /// True for momentum-side operators, whose branches are centred on `j * period`.
    pub half_shift: bool,
}

impl ModularSpec {
    /// `T`-periodic position observable.
    pub fn position(separation: f64) -> Self {
        Self {
            period: separation,
            half_shift: false,
        }
    }

    /// `K = 2 pi / T`.
    pub fn momentum(separation: f64) -> Self {
        Self::momentum_harmonic(separation, 1)
    }

    /// `K = 2 pi / (n T)`; `n = 1` is the unrefined operator.
    pub fn momentum_harmonic(separation: f64, n: u32) -> Self {
        Self {
            period: 2.0 * PI / (n as f64 * separation),
            half_shift: true,
        }
    }

    /// `K' = 4 pi / (m T)`, adapted to the node spacing of an `m`-slit state.
    pub fn refined(separation: f64, slits: u32) -> Result<Self> {
        if slits < 2 || !slits.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "slit count must be even, got {slits}"
            )));
        }
        Ok(Self::momentum_harmonic(separation, slits / 2))
    }

    /// Value of the modular part at `v`.
    pub fn reduce(&self, v: f64) -> f64 {
        if self.half_shift {
            p_mod(v, self.period)
        } else {
            q_mod(v, self.period)
        }
    }

    /// Value of the lattice part at `v`.
    pub fn lattice(&self, v: f64) -> f64 {
        v - self.reduce(v)
    }
}

/// Branch index `j` with `k` in `((j - 1/2) K, (j + 1/2) K]`.
pub fn branch_index(k: f64, big_k: f64) -> f64 {
    let mut j = (k / big_k - 0.5).ceil();
    // One correction step: k / K can round across a branch edge.
    let r = k - j * big_k;
    if r > 0.5 * big_k {
        j += 1.0;
    } else if r <= -0.5 * big_k {
        j -= 1.0;
    }
    j
}

/// Lattice part `P_K = j K` for the branch holding `k`.
pub fn p_k(k: f64, big_k: f64) -> f64 {
    branch_index(k, big_k) * big_k
}

/// Sawtooth `P_mod`: `k - j K` on `((j - 1/2) K, (j + 1/2) K]`.
///
/// `k` and `j K` are within a factor of two of each other whenever `j != 0`,
/// so the subtraction is exact and `p_mod + p_k == k` holds bit for bit.
pub fn p_mod(k: f64, big_k: f64) -> f64 {
    k - p_k(k, big_k)
}

/// Lattice part `Q_T = T floor(x / T)`.
///
pub fn q_t(x: f64, t: f64) -> f64 {
    split_position(x, t).0
}

/// `Q_mod = x mod T`, in `[0, T)`.
///
/// Outside `(-T/2, 0)` the remainder is computed exactly, so
/// `q_mod + q_t == x` bit for bit. Inside that interval `x + T` can round,
/// and the sum is off by at most half an ulp of `T`.
pub fn q_mod(x: f64, t: f64) -> f64 {
    split_position(x, t).1
}

fn split_position(x: f64, t: f64) -> (f64, f64) {
    let mut n = (x / t).floor();
    for _ in 0..2 {
        let lattice = n * t;
        let r = x - lattice;
        if r < 0.0 {
            n -= 1.0;
        } else if r >= t {
            n += 1.0;
        } else {
            return (lattice, r);
        }
    }
    // x sits below a cell edge by less than the rounding of x + T.
    (x, 0.0)
}

/// `P_mod(m)`: sawtooth with the refined period `K' = 4 pi / (m T)`.
pub fn p_mod_refined(k: f64, slits: u32, t: f64) -> Result<f64> {
    Ok(ModularSpec::refined(t, slits)?.reduce(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const T: f64 = 5.0;

    fn big_k() -> f64 {
        2.0 * PI / T
    }

    #[test]
    fn p_mod_examples() {
        let k = big_k();
        assert_eq!(p_mod(0.0, k), 0.0);
        assert!(p_mod(k, k).abs() < 1e-15);
        assert!((p_mod(0.6 * k, k) + 0.4 * k).abs() < 1e-15);
        assert_eq!(p_mod(0.5 * k, k), 0.5 * k);
        assert_eq!(p_mod(-0.5 * k, k), 0.5 * k);
    }

    #[test]
    fn p_k_examples() {
        let k = big_k();
        assert_eq!(p_k(0.0, k), 0.0);
        assert!((p_k(0.6 * k, k) - k).abs() < 1e-15);
        assert_eq!(p_k(0.5 * k, k), 0.0);
    }

    #[test]
    fn q_examples() {
        assert_eq!(q_mod(0.0, T), 0.0);
        assert_eq!(q_mod(-2.5, T), 2.5);
        assert_eq!(q_mod(7.5, T), 2.5);
        assert_eq!(q_t(2.5, T), 0.0);
        assert_eq!(q_t(-2.5, T), -5.0);
        assert_eq!(q_t(7.5, T), 5.0);
        assert!(q_mod(-1e-300, T) < T);
    }

    #[test]
    fn refined_examples() {
        let k = big_k();
        for i in 0..200 {
            let x = -7.0 + 0.07 * i as f64;
            assert_eq!(p_mod_refined(x, 2, T).unwrap(), p_mod(x, k));
        }
        assert_eq!(p_mod_refined(0.0, 8, T).unwrap(), 0.0);
        let kp = 4.0 * PI / (8.0 * T);
        assert!(p_mod_refined(kp, 8, T).unwrap().abs() < 1e-15);
        assert!(p_mod_refined(0.1, 7, T).is_err());
    }

    #[test]
    fn discontinuities_sit_on_node_lattice() {
        use crate::aperture::{eval_momentum_sum, SlitConfig};
        let k = big_k();
        let n = 64;
        let dk = k / n as f64;
        // a = 0.7 keeps the first sinc zero (2 pi / a) outside the sampled window.
        let c = SlitConfig::new(0.7, T, 2).unwrap();
        let mut jumps = Vec::new();
        let mut zeros = Vec::new();
        for i in -(6 * n)..(6 * n) {
            let k0 = (i as f64 + 0.5) * dk;
            let k1 = k0 + dk;
            if p_mod(k1, k) < p_mod(k0, k) {
                jumps.push(i);
            }
            if eval_momentum_sum(&c, k0).signum() != eval_momentum_sum(&c, k1).signum() {
                zeros.push(i);
            }
        }
        assert!(!jumps.is_empty());
        assert_eq!(jumps, zeros);
    }

    proptest! {
        #[test]
        fn decomposition_is_exact(x in -1e4f64..1e4) {
            prop_assert_eq!(p_mod(x, big_k()) + p_k(x, big_k()), x);
            if !(x > -0.5 * T && x < 0.0) {
                prop_assert_eq!(q_mod(x, T) + q_t(x, T), x);
            }
        }

        #[test]
        fn decomposition_near_zero_within_half_ulp(x in -0.5 * T..0.0) {
            let half_ulp = 0.5 * (T.next_up() - T);
            prop_assert!((q_mod(x, T) + q_t(x, T) - x).abs() <= half_ulp);
            prop_assert!(q_t(x, T) == -T || q_mod(x, T) == 0.0);
        }

        #[test]
        fn ranges(x in -1e6f64..1e6) {
            let q = q_mod(x, T);
            prop_assert!((0.0..T).contains(&q));
            let p = p_mod(x, big_k());
            prop_assert!(p > -0.5 * big_k() && p <= 0.5 * big_k());
            let lattice = q_t(x, T) / T;
            prop_assert!((lattice - lattice.round()).abs() < 1e-9);
        }

        #[test]
        fn periodic(x in -1e3f64..1e3) {
            prop_assert!((p_mod(x + big_k(), big_k()) - p_mod(x, big_k())).abs() < 1e-9);
            prop_assert!((q_mod(x + T, T) - q_mod(x, T)).abs() < 1e-9
                || (q_mod(x + T, T) - q_mod(x, T)).abs() > T - 1e-9);
        }
    }
}
