//! Uniformly illuminated `m`-slit states in position and momentum space.
//!
//! Fourier convention: `psi_hat(k) = (2 pi)^(-1/2) * integral psi(x) exp(-i k x) dx`.
//! With it the `m`-slit momentum wavefunction is
//!
//! ```text
//! psi_hat_m(k) = sqrt(2a / (m pi)) * sinc(a k / 2) * f_m(T k / 2),
//! f_m(kappa)   = sum_{j=1}^{m/2} cos((2j - 1) kappa)
//! ```
//!
//! and for `m = 2^d` it factorises into `d` cosines (see [`MomentumEvaluator`]).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Aperture geometry: slit width `a`, slit separation `T`, even slit count `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlitConfig {
    width: f64,
    separation: f64,
    slits: u32,
}

impl SlitConfig {
    pub fn new(width: f64, separation: f64, slits: u32) -> Result<Self> {
        if slits < 2 {
            return Err(Error::InvalidConfig(format!(
                "slit count must be at least 2, got {slits}"
            )));
        }
        if !slits.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "slit count must be even, got {slits}"
            )));
        }
        check_geometry(width, separation)?;
        Ok(Self {
            width,
            separation,
            slits,
        })
    }

    /// Slit width `a`.
    pub fn width(&self) -> f64 {
        self.width
    }

    /// Slit separation `T`.
    pub fn separation(&self) -> f64 {
        self.separation
    }

    /// Slit count `m`.
    pub fn slits(&self) -> u32 {
        self.slits
    }

    /// Fringe period `K = 2 pi / T`.
    pub fn fringe_period(&self) -> f64 {
        2.0 * PI / self.separation
    }

    /// Node period of the `m`-slit pattern, `K' = 4 pi / (m T)`.
    pub fn refined_period(&self) -> f64 {
        4.0 * PI / (self.slits as f64 * self.separation)
    }

    /// `d` with `m = 2^d`, if `m` is a power of two.
    pub fn doubling_depth(&self) -> Option<u32> {
        self.slits
            .is_power_of_two()
            .then(|| self.slits.trailing_zeros())
    }

    pub fn with_slits(&self, slits: u32) -> Result<Self> {
        Self::new(self.width, self.separation, slits)
    }

    pub fn with_width(&self, width: f64) -> Result<Self> {
        Self::new(width, self.separation, self.slits)
    }
}

fn check_geometry(width: f64, separation: f64) -> Result<()> {
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "slit width must be positive, got {width}"
        )));
    }
    if !(separation.is_finite() && separation > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "slit separation must be positive, got {separation}"
        )));
    }
    // Strict: a == T would make neighbouring rectangles touch.
    if width >= separation {
        return Err(Error::InvalidConfig(format!(
            "slit width ({width}) must be smaller than the separation ({separation})"
        )));
    }
    Ok(())
}

/// One slit: a rectangle of constant real amplitude on `[center - width/2, center + width/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

impl Rectangle {
    pub fn contains(&self, x: f64) -> bool {
        (x - self.center).abs() <= 0.5 * self.width
    }

    pub fn lower(&self) -> f64 {
        self.center - 0.5 * self.width
    }

    pub fn upper(&self) -> f64 {
        self.center + 0.5 * self.width
    }
}

/// Piecewise-constant position wavefunction, rectangles sorted by center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionState {
    pub rectangles: Vec<Rectangle>,
    pub norm: f64,
}

impl PositionState {
    pub fn value_at(&self, x: f64) -> f64 {
        self.rectangles
            .iter()
            .find(|r| r.contains(x))
            .map_or(0.0, |r| r.amplitude)
    }

    pub fn centers(&self) -> Vec<f64> {
        self.rectangles.iter().map(|r| r.center).collect()
    }
}

/// Build `psi_m`: `m` slits of width `a` at `+-(2j - 1) T / 2`, amplitude `1/sqrt(m a)`.
pub fn build_position_state(config: &SlitConfig) -> PositionState {
    let m = config.slits();
    let a = config.width();
    let half_t = 0.5 * config.separation();
    let amplitude = 1.0 / (m as f64 * a).sqrt();
    let mut rectangles: Vec<Rectangle> = (1..=m / 2)
        .flat_map(|j| {
            let offset = (2 * j - 1) as f64 * half_t;
            [-offset, offset]
        })
        .map(|center| Rectangle {
            center,
            width: a,
            amplitude,
        })
        .collect();
    rectangles.sort_by(|p, q| p.center.total_cmp(&q.center));
    let norm = rectangles
        .iter()
        .map(|r| r.amplitude * r.amplitude * r.width)
        .sum::<f64>()
        .sqrt();
    PositionState { rectangles, norm }
}

/// `sin(x) / x` with the removable singularity patched by `1 - x^2/6` near zero.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Cosine sum `f_m(kappa) = sum_{j=1}^{m/2} cos((2j - 1) kappa)`.
pub fn fringe_sum(m: u32, kappa: f64) -> f64 {
    (1..=m / 2)
        .map(|j| ((2 * j - 1) as f64 * kappa).cos())
        .sum()
}

/// `f_m(kappa)^2` through the Dirichlet quotient `(sin(m kappa) / sin(kappa))^2 / 4`,
/// which costs O(1) instead of O(m). Falls back to the cosine sum where
/// `sin(kappa)` is too small for the quotient to be accurate.
pub fn fringe_sum_squared(m: u32, kappa: f64) -> f64 {
    let s = kappa.sin();
    if s.abs() < 1e-6 {
        let f = fringe_sum(m, kappa);
        return f * f;
    }
    let q = (m as f64 * kappa).sin() / s;
    0.25 * q * q
}

/// Which closed form the evaluator uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Form {
    /// `m/2` cosines, any even `m`.
    Sum,
    /// `d` cosine factors, `m = 2^d` (including the single slit, `d = 0`).
    Product,
}

/// Closed-form evaluator for the momentum wavefunction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumEvaluator {
    width: f64,
    separation: f64,
    slits: u32,
    form: Form,
}

impl MomentumEvaluator {
    pub fn sum(config: &SlitConfig) -> Self {
        Self {
            width: config.width(),
            separation: config.separation(),
            slits: config.slits(),
            form: Form::Sum,
        }
    }

    pub fn product(config: &SlitConfig) -> Result<Self> {
        if config.doubling_depth().is_none() {
            return Err(Error::InvalidConfig(format!(
                "product form needs a power-of-two slit count, got {}",
                config.slits()
            )));
        }
        Ok(Self {
            width: config.width(),
            separation: config.separation(),
            slits: config.slits(),
            form: Form::Product,
        })
    }

    /// The `d = 0` member of the product family. Evaluation only: it is not
    /// an admissible state and the moment routines do not accept it.
    pub fn single_slit(width: f64, separation: f64) -> Result<Self> {
        check_geometry(width, separation)?;
        Ok(Self {
            width,
            separation,
            slits: 1,
            form: Form::Product,
        })
    }

    pub fn form(&self) -> Form {
        self.form
    }

    pub fn slits(&self) -> u32 {
        self.slits
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn fringe_period(&self) -> f64 {
        2.0 * PI / self.separation
    }

    pub fn eval(&self, k: f64) -> f64 {
        match self.form {
            Form::Sum => momentum_sum(self.width, self.separation, self.slits, k),
            Form::Product => {
                momentum_product(self.width, self.separation, self.slits.trailing_zeros(), k)
            }
        }
    }

    /// Maximum of `|psi_hat|`, attained at `k = 0`.
    pub fn peak(&self) -> f64 {
        self.eval(0.0).abs()
    }
}

fn momentum_sum(a: f64, t: f64, m: u32, k: f64) -> f64 {
    (2.0 * a / (m as f64 * PI)).sqrt() * sinc(0.5 * a * k) * fringe_sum(m, 0.5 * t * k)
}

fn momentum_product(a: f64, t: f64, d: u32, k: f64) -> f64 {
    let prefactor = (2f64.powi(d as i32 - 1) * a / PI).sqrt();
    let fringes: f64 = (0..d)
        .map(|j| (2f64.powi(j as i32) * 0.5 * t * k).cos())
        .product();
    prefactor * sinc(0.5 * a * k) * fringes
}

/// Sum-form momentum wavefunction of an `m`-slit state.
pub fn eval_momentum_sum(config: &SlitConfig, k: f64) -> f64 {
    momentum_sum(config.width(), config.separation(), config.slits(), k)
}

/// Product-form momentum wavefunction; `m` must be a power of two.
pub fn eval_momentum_product(config: &SlitConfig, k: f64) -> Result<f64> {
    MomentumEvaluator::product(config).map(|e| e.eval(k))
}

/// Residuals of the wavefunction on the node lattice `(j + 1/2) K`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Admissibility {
    pub admissible: bool,
    /// `(k, |psi_hat(k)|)` for every tested lattice point.
    pub residuals: Vec<(f64, f64)>,
    pub threshold: f64,
}

/// Relative threshold (to the peak amplitude) below which a node counts as zero.
pub const NODE_TOLERANCE: f64 = 1e-12;

/// Check `psi_hat((j + 1/2) K) = 0` for `j` in `-j_range..=j_range`.
pub fn is_admissible(evaluator: &MomentumEvaluator, j_range: u32) -> Admissibility {
    let big_k = evaluator.fringe_period();
    let threshold = NODE_TOLERANCE * evaluator.peak();
    let j_range = j_range as i64;
    let residuals: Vec<(f64, f64)> = (-j_range..=j_range)
        .map(|j| {
            let k = (j as f64 + 0.5) * big_k;
            (k, evaluator.eval(k).abs())
        })
        .collect();
    let admissible = residuals.iter().all(|&(_, r)| r <= threshold);
    Admissibility {
        admissible,
        residuals,
        threshold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(a: f64, t: f64, m: u32) -> SlitConfig {
        SlitConfig::new(a, t, m).unwrap()
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(SlitConfig::new(1.0, 5.0, 3).unwrap_err().to_string().contains("even"));
        assert!(SlitConfig::new(1.0, 5.0, 0).is_err());
        assert!(SlitConfig::new(5.0, 5.0, 2).is_err());
        assert!(SlitConfig::new(6.0, 5.0, 2).is_err());
        assert!(SlitConfig::new(-1.0, 5.0, 2).is_err());
        assert!(SlitConfig::new(1.0, f64::NAN, 2).is_err());
    }

    #[test]
    fn double_slit_rectangles() {
        let s = build_position_state(&cfg(1.0, 5.0, 2));
        assert_eq!(s.centers(), vec![-2.5, 2.5]);
        for r in &s.rectangles {
            assert_eq!(r.width, 1.0);
            assert!((r.amplitude - 0.5f64.sqrt()).abs() < 1e-15);
        }
        assert!((s.norm - 1.0).abs() < 1e-15);
        assert_eq!(s.value_at(2.5), s.rectangles[0].amplitude);
        assert_eq!(s.value_at(0.0), 0.0);
    }

    #[test]
    fn four_slit_centers() {
        let s = build_position_state(&cfg(1.0, 5.0, 4));
        assert_eq!(s.centers(), vec![-7.5, -2.5, 2.5, 7.5]);
        assert!(s.rectangles.iter().all(|r| r.amplitude == 0.5));
        assert!((s.norm - 1.0).abs() < 1e-15);
        for w in s.rectangles.windows(2) {
            assert!(w[0].upper() < w[1].lower());
        }
    }

    #[test]
    fn sinc_patch_is_continuous() {
        assert_eq!(sinc(0.0), 1.0);
        let x = 1e-8;
        assert!((sinc(x) - sinc(x * (1.0 + 1e-12))).abs() < 1e-15);
        assert!((sinc(1e-8 * 0.999) - (1e-8f64 * 0.999).sin() / (1e-8 * 0.999)).abs() < 1e-15);
    }

    #[test]
    fn fringe_sum_values() {
        for m in [2, 4, 10, 64] {
            assert_eq!(fringe_sum(m, 0.0), (m / 2) as f64);
        }
        assert!(fringe_sum(2, PI / 2.0).abs() < 1e-16);
        let lhs = fringe_sum(4, 0.7).powi(2);
        let rhs = ((4.0f64 * 0.7).sin() / 0.7f64.sin()).powi(2) / 4.0;
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn dirichlet_square_matches_sum_across_branch() {
        for m in [2u32, 6, 40, 200] {
            for i in 0..400 {
                let kappa = -3.5 + 7.0 * i as f64 / 399.0;
                let direct = fringe_sum(m, kappa).powi(2);
                let fast = fringe_sum_squared(m, kappa);
                assert!((direct - fast).abs() <= 1e-10 * (1.0 + direct), "m={m} kappa={kappa}");
            }
            assert_eq!(fringe_sum_squared(m, 0.0), ((m / 2) as f64).powi(2));
        }
    }

    #[test]
    fn momentum_at_origin() {
        let v = eval_momentum_sum(&cfg(1.0, 5.0, 2), 0.0);
        assert!((v - 1.0 / PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn nodes_vanish() {
        let c = cfg(1.0, 5.0, 2);
        assert!(eval_momentum_sum(&c, PI / 5.0).abs() < 1e-16);
        let c8 = cfg(1.0, 5.0, 8);
        for j in -20..=20 {
            let k = (j as f64 + 0.5) * c8.fringe_period();
            assert!(eval_momentum_sum(&c8, k).abs() < 1e-13);
        }
    }

    #[test]
    fn product_form_agrees() {
        let c2 = cfg(1.0, 5.0, 2);
        for i in 0..100 {
            let k = -10.0 + 0.2 * i as f64;
            assert!((eval_momentum_sum(&c2, k) - eval_momentum_product(&c2, k).unwrap()).abs() < 1e-15);
        }
        let c8 = cfg(1.0, 5.0, 8);
        assert!((eval_momentum_sum(&c8, 0.4) - eval_momentum_product(&c8, 0.4).unwrap()).abs() <= 1e-12);
        assert!(eval_momentum_product(&cfg(1.0, 5.0, 6), 0.4).is_err());
    }

    #[test]
    fn single_slit_value() {
        let s = MomentumEvaluator::single_slit(1.0, 5.0).unwrap();
        assert!((s.eval(0.0) - (1.0 / (2.0 * PI)).sqrt()).abs() < 1e-15);
        assert!(MomentumEvaluator::single_slit(5.0, 5.0).is_err());
    }

    #[test]
    fn admissibility() {
        let c2 = cfg(1.0, 5.0, 2);
        let r = is_admissible(&MomentumEvaluator::sum(&c2), 10);
        assert!(r.admissible);
        assert_eq!(r.residuals.len(), 21);
        assert!(is_admissible(&MomentumEvaluator::sum(&cfg(1.0, 5.0, 4)), 10).admissible);
        let single = MomentumEvaluator::single_slit(1.0, 5.0).unwrap();
        assert!(!is_admissible(&single, 10).admissible);
    }

    #[test]
    fn node_lattice_all_even_m() {
        for m in (2..=40).step_by(2) {
            let c = cfg(1.0, 5.0, m);
            let r = is_admissible(&MomentumEvaluator::sum(&c), 50);
            assert!(r.admissible, "m = {m}");
        }
    }

    #[test]
    fn recursion_ratio_is_sqrt_two() {
        for d in 0..5u32 {
            let lo = if d == 0 {
                MomentumEvaluator::single_slit(1.0, 5.0).unwrap()
            } else {
                MomentumEvaluator::product(&cfg(1.0, 5.0, 1 << d)).unwrap()
            };
            let hi = MomentumEvaluator::product(&cfg(1.0, 5.0, 2 << d)).unwrap();
            for i in 0..500 {
                let k = -6.0 + 12.0 * i as f64 / 499.0;
                let den = lo.eval(k) * (2f64.powi(d as i32) * 2.5 * k).cos();
                if den.abs() > 1e-6 {
                    let ratio = hi.eval(k) / den;
                    assert!((ratio - 2f64.sqrt()).abs() < 1e-9, "d={d} k={k} ratio={ratio}");
                }
            }
        }
    }
}
