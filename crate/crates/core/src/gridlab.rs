//! Discretized commutator experiments on sampled momentum wavefunctions.
//!
//! `Q` acts as `i d/dk` in momentum space. `canonical_residual` measures how far
//! `[Q, P_mod] psi = i psi` fails on a grid; the failure is a comb of spikes at
//! the discontinuities `(j + 1/2) K` of `P_mod`, weighted by `psi_hat` there.
//! `commuting_residual` checks `[Q_mod, P_mod] = 0` on a periodic position grid
//! through the discrete Fourier transform.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::aperture::{build_position_state, MomentumEvaluator, SlitConfig};
use crate::error::{Error, Result};
use crate::modular::q_mod;

/// Samples beyond which one-sided stencils are used; excluded from all norms.
pub const EDGE_BAND: usize = 4;

/// Coarsest admissible grid spacing, as a fraction of `K`.
pub const MIN_DIVISIONS: usize = 64;

/// Envelope lobes that must fit on each side of `k = 0`.
pub const MIN_LOBES: f64 = 20.0;

const COMMENSURATE_TOL: f64 = 1e-9;

/// `psi_hat` sampled on a uniform momentum grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub k_min: f64,
    pub k_max: f64,
    pub dk: f64,
    pub samples: Vec<Complex64>,
}

impl GridState {
    pub fn new(k_min: f64, k_max: f64, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() < 2 || !(k_max > k_min) {
            return Err(Error::InvalidArgument(
                "grid needs at least two points and k_max > k_min".into(),
            ));
        }
        Ok(Self {
            k_min,
            k_max,
            dk: (k_max - k_min) / (samples.len() - 1) as f64,
            samples,
        })
    }

    pub fn n_points(&self) -> usize {
        self.samples.len()
    }

    pub fn k(&self, index: usize) -> f64 {
        self.k_min + self.dk * index as f64
    }

    /// Discrete `L^2` norm squared, `dk * sum |psi|^2`.
    pub fn norm_squared(&self) -> f64 {
        self.dk * self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        Self {
            samples,
            ..self.clone()
        }
    }
}

/// Uniform momentum grid `k_min + i dk`, `i = 0..n_points`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub k_min: f64,
    pub k_max: f64,
    pub n_points: usize,
}

impl GridSpec {
    pub fn dk(&self) -> f64 {
        (self.k_max - self.k_min) / (self.n_points - 1) as f64
    }

    /// Grid with spacing `period / divisions` whose endpoints are discontinuities
    /// `(j + 1/2) period`, covering at least `[-half_range, half_range]`.
    pub fn aligned(period: f64, divisions: usize, half_range: f64) -> Result<Self> {
        if divisions == 0 || !(period > 0.0) || !(half_range > 0.0) {
            return Err(Error::InvalidArgument(
                "aligned grid needs positive period, divisions and range".into(),
            ));
        }
        let cells = (half_range / period - 0.5).max(0.0).ceil() as usize;
        let edge = (cells as f64 + 0.5) * period;
        Ok(Self {
            k_min: -edge,
            k_max: edge,
            n_points: (2 * cells + 1) * divisions + 1,
        })
    }
}

/// Named grid resolutions, as fractions of `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Coarse,
    Medium,
    Fine,
}

impl Resolution {
    pub fn divisions(self) -> usize {
        match self {
            Resolution::Coarse => 64,
            Resolution::Medium => 128,
            Resolution::Fine => 256,
        }
    }
}

/// Default aligned grid for an evaluator: `MIN_LOBES` envelope lobes each side,
/// spacing `K / resolution.divisions()`.
pub fn default_grid(evaluator: &MomentumEvaluator, resolution: Resolution) -> Result<GridSpec> {
    let half_range = MIN_LOBES * 2.0 * PI / evaluator.width();
    GridSpec::aligned(evaluator.fringe_period(), resolution.divisions(), half_range)
}

/// Samples the analytic momentum wavefunction on `grid`.
pub fn sample_momentum(evaluator: &MomentumEvaluator, grid: &GridSpec) -> Result<GridState> {
    sample_momentum_shifted(evaluator, grid, 0.0)
}

/// Samples `psi_hat(k - shift)`.
pub fn sample_momentum_shifted(
    evaluator: &MomentumEvaluator,
    grid: &GridSpec,
    shift: f64,
) -> Result<GridState> {
    if grid.n_points < 5 || !(grid.k_max > grid.k_min) {
        return Err(Error::InvalidArgument(
            "grid needs at least 5 points and k_max > k_min".into(),
        ));
    }
    let lobes = 2.0 * PI / evaluator.width();
    let reach = MIN_LOBES * lobes * (1.0 - 1e-12);
    if grid.k_min - shift > -reach || grid.k_max - shift < reach {
        return Err(Error::UnderResolved(format!(
            "range [{}, {}] covers fewer than {MIN_LOBES} envelope lobes of width {lobes}",
            grid.k_min, grid.k_max
        )));
    }
    let max_dk = evaluator.fringe_period() / MIN_DIVISIONS as f64;
    if grid.dk() > max_dk * (1.0 + 1e-12) {
        return Err(Error::UnderResolved(format!(
            "grid spacing {} exceeds K/{MIN_DIVISIONS} = {max_dk}",
            grid.dk()
        )));
    }
    let dk = grid.dk();
    let samples = (0..grid.n_points)
        .map(|i| Complex64::new(evaluator.eval(grid.k_min + dk * i as f64 - shift), 0.0))
        .collect();
    GridState::new(grid.k_min, grid.k_max, samples)
}

/// Fourth-order finite-difference derivative; one-sided stencils at both ends.
fn derivative(values: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = values.len();
    let f = values;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    if n < 5 {
        // Too short for the five-point stencils: plain differences.
        if n >= 2 {
            out[0] = (f[1] - f[0]) / h;
            out[n - 1] = (f[n - 1] - f[n - 2]) / h;
            for i in 1..n - 1 {
                out[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
            }
        }
        return out;
    }
    let c = 1.0 / (12.0 * h);
    out[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) * c;
    out[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) * c;
    for i in 2..n - 2 {
        out[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) * c;
    }
    let l = n - 1;
    out[l] = (25.0 * f[l] - 48.0 * f[l - 1] + 36.0 * f[l - 2] - 16.0 * f[l - 3] + 3.0 * f[l - 4]) * c;
    out[l - 1] = (3.0 * f[l] + 10.0 * f[l - 1] - 18.0 * f[l - 2] + 6.0 * f[l - 3] - f[l - 4]) * c;
    out
}

/// `Q psi = i d psi / dk`.
pub fn apply_q(state: &GridState) -> Result<GridState> {
    if state.n_points() < 5 {
        return Err(Error::InvalidArgument(format!(
            "apply_q needs at least 5 points, got {}",
            state.n_points()
        )));
    }
    let i = Complex64::new(0.0, 1.0);
    let d = derivative(&state.samples, state.dk);
    Ok(state.with_samples(d.into_iter().map(|v| i * v).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    /// Interior `||r|| / ||psi||`.
    pub l2_residual: f64,
    /// `|r(k)|` at every grid point.
    pub residual_profile: Vec<f64>,
    /// The discontinuities `(j + 1/2) K` inside the grid.
    pub comb_locations: Vec<f64>,
    /// Share of the interior residual mass within `2 dk` of a comb location.
    pub comb_alignment_score: f64,
}

fn near_integer(x: f64) -> Option<i64> {
    let r = x.round();
    ((x - r).abs() <= COMMENSURATE_TOL * x.abs().max(1.0)).then_some(r as i64)
}

/// Residual `r = [Q, P_mod] psi - i psi` with `P_mod` of period `period`.
///
/// `P_mod psi` is differentiated segment by segment between consecutive
/// discontinuities, each segment using the continuous branch `k - jK` on its
/// closed interval. The jump `-K psi(k_node)` of `P_mod psi` at a node enters
/// as a discrete delta of weight `1/dk`. On admissible states the jump terms
/// vanish and `r` is pure stencil error.
pub fn canonical_residual(state: &GridState, period: f64) -> Result<ResidualReport> {
    let n = state.n_points();
    if n < 2 * EDGE_BAND + 1 {
        return Err(Error::InvalidArgument(format!(
            "need more than {} points, got {n}",
            2 * EDGE_BAND
        )));
    }
    let dk = state.dk;
    let divisions = near_integer(period / dk).filter(|&d| d > 0).ok_or_else(|| {
        Error::IncommensurateGrid(format!("K / dk = {} is not an integer", period / dk))
    })?;
    let offset = near_integer((state.k_min - 0.5 * period) / dk).ok_or_else(|| {
        Error::IncommensurateGrid(format!(
            "discontinuities of P_mod fall between grid points (offset {})",
            (state.k_min - 0.5 * period) / dk
        ))
    })?;
    let divisions = divisions as usize;
    // Index of the first node on the grid.
    let first_node = (-offset).rem_euclid(divisions as i64) as usize;
    let nodes: Vec<usize> = (first_node..n).step_by(divisions).collect();

    // P_mod on the grid, exact in units of dk; nodes take the upper edge K/2.
    let p: Vec<f64> = (0..n)
        .map(|i| {
            let r = (i as i64 - first_node as i64).rem_euclid(divisions as i64);
            if r == 0 {
                0.5 * period
            } else {
                -0.5 * period + r as f64 * dk
            }
        })
        .collect();

    let psi = &state.samples;
    let mut d_g = vec![Complex64::new(0.0, 0.0); n];
    let mut bounds = vec![0];
    bounds.extend(nodes.iter().copied().filter(|&b| b > 0 && b < n - 1));
    bounds.push(n - 1);
    for seg in bounds.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        // Continuous branch on [lo, hi]: value at lo is its right limit.
        let branch: Vec<Complex64> = (lo..=hi)
            .map(|i| {
                let pv = if i == lo && p[i] == 0.5 * period {
                    -0.5 * period
                } else {
                    p[i]
                };
                pv * psi[i]
            })
            .collect();
        let d = derivative(&branch, dk);
        let start = if lo == 0 { 0 } else { 1 };
        for (off, v) in d.iter().enumerate().skip(start) {
            d_g[lo + off] = *v;
        }
    }
    for &node in &nodes {
        d_g[node] -= period * psi[node] / dk;
    }

    let i = Complex64::new(0.0, 1.0);
    let d_psi = derivative(psi, dk);
    let residual: Vec<Complex64> = (0..n)
        .map(|j| i * d_g[j] - p[j] * i * d_psi[j] - i * psi[j])
        .collect();

    let interior = EDGE_BAND..n - EDGE_BAND;
    let r_mass: f64 = residual[interior.clone()].iter().map(|z| z.norm_sqr()).sum();
    let psi_mass: f64 = psi[interior.clone()].iter().map(|z| z.norm_sqr()).sum();
    let mut near_mass = 0.0;
    for j in interior {
        let r = (j as i64 - first_node as i64).rem_euclid(divisions as i64);
        let distance = r.min(divisions as i64 - r);
        if distance <= 2 {
            near_mass += residual[j].norm_sqr();
        }
    }
    Ok(ResidualReport {
        l2_residual: if psi_mass > 0.0 {
            (r_mass / psi_mass).sqrt()
        } else {
            0.0
        },
        residual_profile: residual.iter().map(|z| z.norm()).collect(),
        comb_locations: nodes.iter().map(|&j| state.k(j)).collect(),
        comb_alignment_score: if r_mass > 0.0 { near_mass / r_mass } else { 0.0 },
    })
}

/// Position multiplier used in `commuting_residual`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PositionMultiplier {
    /// `Q_mod = x mod T`.
    Modular,
    /// The unbounded `x`; the contrast case.
    Full,
}

/// Periodic position grid of `periods * T` sampled at `n_points` points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PeriodicGrid {
    pub periods: usize,
    pub n_points: usize,
}

/// `||P(Q psi) - Q(P psi)|| / ||P(Q psi)||` on a periodic position grid, with
/// `P = F^-1 diag(P_mod) F`.
pub fn commuting_residual(
    config: &SlitConfig,
    grid: PeriodicGrid,
    multiplier: PositionMultiplier,
) -> Result<f64> {
    let PeriodicGrid { periods, n_points } = grid;
    if periods == 0 || n_points == 0 || n_points % periods != 0 {
        return Err(Error::IncommensurateGrid(format!(
            "{n_points} points do not split evenly into {periods} periods"
        )));
    }
    if periods <= config.slits() as usize {
        return Err(Error::InvalidArgument(format!(
            "{periods} periods cannot hold {} slits",
            config.slits()
        )));
    }
    let t = config.separation();
    let length = periods as f64 * t;
    let dx = length / n_points as f64;
    let state = build_position_state(config);
    let xs: Vec<f64> = (0..n_points).map(|j| -0.5 * length + dx * j as f64).collect();
    let psi: Vec<Complex64> = xs
        .iter()
        .map(|&x| Complex64::new(state.value_at(x), 0.0))
        .collect();
    let q: Vec<f64> = xs
        .iter()
        .map(|&x| match multiplier {
            PositionMultiplier::Modular => q_mod(x, t),
            PositionMultiplier::Full => x,
        })
        .collect();
    // Conjugate spacing is K / periods; P_mod is exact in those units.
    let dk = 2.0 * PI / length;
    let p: Vec<f64> = (0..n_points)
        .map(|i| {
            let signed = if i <= n_points / 2 {
                i as i64
            } else {
                i as i64 - n_points as i64
            };
            let mut r = signed.rem_euclid(periods as i64);
            if 2 * r > periods as i64 {
                r -= periods as i64;
            }
            r as f64 * dk
        })
        .collect();

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n_points);
    let inverse = planner.plan_fft_inverse(n_points);
    let scale = 1.0 / n_points as f64;
    let apply_p = |v: &[Complex64]| -> Vec<Complex64> {
        let mut buf = v.to_vec();
        forward.process(&mut buf);
        for (b, &pk) in buf.iter_mut().zip(&p) {
            *b *= pk * scale;
        }
        inverse.process(&mut buf);
        buf
    };
    let apply_q = |v: &[Complex64]| -> Vec<Complex64> {
        v.iter().zip(&q).map(|(z, &qx)| z * qx).collect()
    };
    let a = apply_p(&apply_q(&psi));
    let b = apply_q(&apply_p(&psi));
    let diff: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let norm: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    if norm == 0.0 {
        return Err(Error::InvalidArgument("state vanishes on the grid".into()));
    }
    Ok((diff / norm).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn psi(m: u32) -> MomentumEvaluator {
        MomentumEvaluator::sum(&SlitConfig::new(1.0, 5.0, m).unwrap())
    }

    fn single() -> MomentumEvaluator {
        MomentumEvaluator::single_slit(1.0, 5.0).unwrap()
    }

    #[test]
    fn sampled_norm_close_to_one() {
        let grid = GridSpec {
            k_min: -40.0 * PI,
            k_max: 40.0 * PI,
            n_points: 1 << 15,
        };
        let s = sample_momentum(&psi(2), &grid).unwrap();
        assert!((s.norm_squared() - 1.0).abs() < 0.01);
    }

    #[test]
    fn node_and_single_slit_samples() {
        let grid = GridSpec::aligned(2.0 * PI / 5.0, 64, 40.0 * PI).unwrap();
        let s = sample_momentum(&psi(2), &grid).unwrap();
        let node = s
            .samples
            .iter()
            .enumerate()
            .find(|(i, _)| (s.k(*i) - PI / 5.0).abs() < 1e-9)
            .unwrap();
        // Only the rounding of the grid abscissa remains.
        assert!(node.1.norm() < 1e-13);
        assert!(single().eval(PI / 5.0).abs() > 0.1);
    }

    #[test]
    fn sampling_rejects_bad_grids() {
        let narrow = GridSpec::aligned(2.0 * PI / 5.0, 64, 10.0).unwrap();
        assert!(matches!(sample_momentum(&psi(2), &narrow), Err(Error::UnderResolved(_))));
        let coarse = GridSpec::aligned(2.0 * PI / 5.0, 32, 40.0 * PI).unwrap();
        assert!(matches!(sample_momentum(&psi(2), &coarse), Err(Error::UnderResolved(_))));
    }

    fn plane_wave(c: f64, h: f64) -> GridState {
        let n = (4.0 / h).round() as usize + 1;
        let samples = (0..n)
            .map(|i| Complex64::from_polar(1.0, c * (-2.0 + h * i as f64)))
            .collect();
        GridState::new(-2.0, 2.0, samples).unwrap()
    }

    fn plane_wave_error(c: f64, h: f64) -> f64 {
        let s = plane_wave(c, h);
        let q = apply_q(&s).unwrap();
        (EDGE_BAND..s.n_points() - EDGE_BAND)
            .map(|i| (q.samples[i] + c * s.samples[i]).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn apply_q_examples() {
        let constant = GridState::new(0.0, 1.0, vec![Complex64::new(2.0, 0.0); 20]).unwrap();
        assert!(apply_q(&constant).unwrap().samples.iter().all(|z| z.norm() < 1e-12));
        assert!(plane_wave_error(3.0, 0.01) < 1e-6);
        let ratio = plane_wave_error(3.0, 0.02) / plane_wave_error(3.0, 0.01);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
        let short = GridState::new(0.0, 1.0, vec![Complex64::new(1.0, 0.0); 4]).unwrap();
        assert!(apply_q(&short).is_err());
    }

    #[test]
    fn one_sided_stencils_are_fourth_order() {
        let err = |h: f64| {
            let s = plane_wave(2.0, h);
            let q = apply_q(&s).unwrap();
            let l = s.n_points() - 1;
            [0, 1, l - 1, l]
                .iter()
                .map(|&i| (q.samples[i] + 2.0 * s.samples[i]).norm())
                .fold(0.0, f64::max)
        };
        assert!(err(0.02) / err(0.01) > 12.0);
    }

    fn residual(ev: &MomentumEvaluator, resolution: Resolution) -> ResidualReport {
        let grid = default_grid(ev, resolution).unwrap();
        let s = sample_momentum(ev, &grid).unwrap();
        canonical_residual(&s, ev.fringe_period()).unwrap()
    }

    #[test]
    fn admissible_residual_small_and_converging() {
        let coarse = residual(&psi(2), Resolution::Coarse).l2_residual;
        let medium = residual(&psi(2), Resolution::Medium).l2_residual;
        let fine = residual(&psi(2), Resolution::Fine).l2_residual;
        eprintln!("admissible residuals {coarse:e} {medium:e} {fine:e}");
        assert!(fine <= 1e-3, "fine {fine}");
        assert!(coarse > medium && medium > fine);
        // At least third order in dk.
        assert!(coarse / medium > 8.0 && medium / fine > 8.0, "{coarse} {medium} {fine}");
    }

    #[test]
    fn inadmissible_residual_sits_on_comb() {
        let coarse = residual(&single(), Resolution::Coarse);
        let fine = residual(&single(), Resolution::Fine);
        eprintln!("inadmissible residuals {} {} align {}", coarse.l2_residual, fine.l2_residual, fine.comb_alignment_score);
        assert!(fine.l2_residual > 0.1);
        assert!(fine.l2_residual >= coarse.l2_residual);
        assert!(fine.comb_alignment_score > 0.9);
        let k = 2.0 * PI / 5.0;
        for c in &fine.comb_locations {
            let x = c / k - 0.5;
            assert!((x - x.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn shifted_state_is_inadmissible() {
        let ev = psi(2);
        let k = ev.fringe_period();
        let grid = GridSpec::aligned(k, 256, 40.0 * PI + k).unwrap();
        let s = sample_momentum_shifted(&ev, &grid, 0.25 * k).unwrap();
        let r = canonical_residual(&s, k).unwrap();
        assert!(r.l2_residual > 0.1 && r.comb_alignment_score > 0.9);
    }

    #[test]
    fn refined_period_for_four_slits() {
        let ev = psi(4);
        let grid = default_grid(&ev, Resolution::Fine).unwrap();
        let s = sample_momentum(&ev, &grid).unwrap();
        let r = canonical_residual(&s, 0.5 * ev.fringe_period()).unwrap();
        assert!(r.l2_residual <= 1e-3, "{}", r.l2_residual);
    }

    #[test]
    fn incommensurate_grid_is_rejected() {
        let ev = psi(2);
        let k = ev.fringe_period();
        let grid = GridSpec {
            k_min: -40.0 * PI,
            k_max: 40.0 * PI,
            n_points: 1 << 15,
        };
        let s = sample_momentum(&ev, &grid).unwrap();
        assert!(matches!(canonical_residual(&s, k), Err(Error::IncommensurateGrid(_))));
    }

    #[test]
    fn commuting_pair() {
        let c = SlitConfig::new(1.0, 5.0, 2).unwrap();
        let grid = PeriodicGrid {
            periods: 16,
            n_points: 1 << 14,
        };
        let modular = commuting_residual(&c, grid, PositionMultiplier::Modular).unwrap();
        let full = commuting_residual(&c, grid, PositionMultiplier::Full).unwrap();
        eprintln!("commuting {modular:e} contrast {full}");
        assert!(modular <= 1e-2, "{modular}");
        assert!(full > 0.1, "{full}");
        let bad = PeriodicGrid {
            periods: 16,
            n_points: 1000,
        };
        assert!(matches!(
            commuting_residual(&c, bad, PositionMultiplier::Modular),
            Err(Error::IncommensurateGrid(_))
        ));
    }
}
