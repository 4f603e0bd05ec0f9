//! Standard deviations and uncertainty products for the `m`-slit states.
//!
//! `Delta(P_mod)` has three routes:
//!
//! * single fringe: `Delta^2 = 16 / (T^2 m pi) * int_{-pi/2}^{pi/2} kappa^2 f_m(kappa)^2 dkappa`,
//!   which drops the slit width entirely;
//! * brute force: the full-line integral of `P_mod(k)^2 |psi_hat_m(k)|^2`, summed
//!   period by period with a certified bound on the truncated `sinc^2` tail;
//! * closed form, available for `m = 2` and for the refined operator `P_mod(m)`.
//!
//! The brute-force route never uses the sinc-comb series, so agreement between
//! it and the single-fringe route is a genuine check of the slit-width
//! independence.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::aperture::{fringe_sum_squared, sinc, SlitConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::modular::p_mod;
use crate::quadrature::{integrate_piecewise, Integrator, QuadResult};

/// Smallest slit count used when fitting the large-`m` asymptote.
pub const ASYMPTOTE_MIN_SLITS: u32 = 20;

/// Default cap on the number of periods summed by the brute-force route.
pub const MAX_PERIODS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    SingleFringeQuadrature,
    BruteForceQuadrature,
}

/// A standard deviation together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub value: f64,
    pub method: Method,
    pub abs_error_estimate: f64,
}

impl MomentReport {
    fn closed(value: f64) -> Self {
        Self {
            value,
            method: Method::ClosedForm,
            abs_error_estimate: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub m: u32,
    pub sdev_qt: f64,
    pub sdev_pmod: f64,
    pub sdev_pmod_refined: f64,
    pub product: f64,
    pub product_refined: f64,
}

/// Result of a truncated full-line integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineIntegral {
    /// Truncated sum plus the leading-order tail estimate.
    pub value: f64,
    /// Rigorous bound on the truncation error plus the quadrature error estimate.
    pub abs_error_bound: f64,
    /// Periods summed on each side of the origin.
    pub periods: usize,
}

/// `Delta(Q_T, psi_2) * Delta(P_mod, psi_2) = sqrt((pi^2 - 6) / 3) / 2`.
pub fn double_slit_product() -> f64 {
    0.5 * ((PI * PI - 6.0) / 3.0).sqrt()
}

/// `lim_{m -> inf} Delta(Q_T) Delta(P_mod(m)) = sqrt(pi^2 - 6) / 3`.
pub fn refined_product_limit() -> f64 {
    (PI * PI - 6.0).sqrt() / 3.0
}

/// `sqrt((m^2 - 1)(pi^2 - 6)) / (3m)`.
pub fn refined_product_closed(m: u32) -> f64 {
    let m = m as f64;
    ((m * m - 1.0) * (PI * PI - 6.0)).sqrt() / (3.0 * m)
}

/// Large-`m` prefactor `c` in `Delta(P_mod, psi_m) ~ c / sqrt(m)`: `2 sqrt(ln 2) / T`.
pub fn asymptotic_prefactor(separation: f64) -> f64 {
    2.0 * std::f64::consts::LN_2.sqrt() / separation
}

/// Closed form `Delta(Q_T, psi_m) = (T/2) sqrt((m^2 - 1) / 3)`.
pub fn sdev_qt(config: &SlitConfig) -> MomentReport {
    let m = config.slits() as f64;
    MomentReport::closed(0.5 * config.separation() * ((m * m - 1.0) / 3.0).sqrt())
}

/// `Delta(Q_T)` from the position rectangles directly: the probability mass of
/// each `T`-cell, then the variance of the lattice values `T * floor(x / T)`.
pub fn sdev_qt_discrete(config: &SlitConfig) -> f64 {
    let state = crate::aperture::build_position_state(config);
    let t = config.separation();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    for r in &state.rectangles {
        let density = r.amplitude * r.amplitude;
        let first = (r.lower() / t).floor() as i64;
        let last = (r.upper() / t).floor() as i64;
        for cell in first..=last {
            let lo = r.lower().max(cell as f64 * t);
            let hi = r.upper().min((cell + 1) as f64 * t);
            if hi > lo {
                cells.push((cell as f64 * t, density * (hi - lo)));
            }
        }
    }
    let mean: f64 = cells.iter().map(|(q, p)| q * p).sum();
    let var: f64 = cells.iter().map(|(q, p)| (q - mean).powi(2) * p).sum();
    var.sqrt()
}

/// `Delta(P_mod(m), psi_m) = 2 / (m T) * sqrt((pi^2 - 6) / 3)`.
pub fn sdev_pmod_refined(config: &SlitConfig) -> MomentReport {
    let m = config.slits() as f64;
    MomentReport::closed(2.0 / (m * config.separation()) * ((PI * PI - 6.0) / 3.0).sqrt())
}

/// Moment engine: quadrature settings plus the execution mode for the
/// data-parallel loops (brute-force periods, sweeps).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub integrator: Integrator,
    pub exec: Execution,
    pub max_periods: usize,
}

impl Default for Moments {
    fn default() -> Self {
        Self {
            integrator: Integrator::default(),
            exec: Execution::default(),
            max_periods: MAX_PERIODS,
        }
    }
}

impl Moments {
    pub fn with_tol(abs_tol: f64) -> Self {
        Self {
            integrator: Integrator::with_tol(abs_tol),
            ..Self::default()
        }
    }

    pub fn with_exec(self, exec: Execution) -> Self {
        Self { exec, ..self }
    }

    /// `T^2 Delta(P_mod, psi_m)^2` by quadrature of the single fringe
    /// `16/(m pi) int_{-pi/2}^{pi/2} kappa^2 f_m^2`. Uses the Dirichlet form of
    /// `f_m^2` and the evenness of the integrand.
    pub fn fringe_variance(&self, m: u32) -> Result<QuadResult> {
        check_even(m)?;
        let scale = 16.0 / (m as f64 * PI);
        // Breaks at the zeros of sin(m kappa) keep each panel to one lobe.
        let lobes = (m as usize).max(2);
        let breaks: Vec<f64> = (0..=lobes)
            .map(|i| 0.5 * PI * i as f64 / lobes as f64)
            .collect();
        let half = Integrator {
            abs_tol: 0.5 * self.integrator.abs_tol,
            ..self.integrator
        };
        let r = integrate_piecewise(
            &half,
            |kappa: f64| scale * kappa * kappa * fringe_sum_squared(m, kappa),
            &breaks,
        )?;
        Ok(QuadResult {
            value: 2.0 * r.value,
            abs_error_estimate: 2.0 * r.abs_error_estimate,
            evaluations: r.evaluations,
        })
    }

    /// `Delta(P_mod, psi_m)` by single-fringe quadrature. Independent of the
    /// slit width by construction.
    pub fn sdev_pmod_single_fringe(&self, config: &SlitConfig) -> Result<MomentReport> {
        let q = self.fringe_variance(config.slits())?;
        Ok(sdev_from_scaled_variance(q, config.separation(), Method::SingleFringeQuadrature))
    }

    /// `Delta(P_mod, psi_m)` from the full-line integral of
    /// `P_mod(k)^2 |psi_hat_m(k)|^2`. `tail_tol` bounds the neglected part of the
    /// variance.
    pub fn sdev_pmod_bruteforce(&self, config: &SlitConfig, tail_tol: f64) -> Result<MomentReport> {
        let big_k = config.fringe_period();
        let m = config.slits();
        let a = config.width();
        let t = config.separation();
        let amp2 = 2.0 * a / (m as f64 * PI);
        let weight = move |k: f64| {
            let p = p_mod(k, big_k);
            p * p * amp2 * fringe_sum_squared(m, 0.5 * t * k)
        };
        let line = self.sinc2_line_integral(weight, big_k, a, m as usize, tail_tol)?;
        let value = line.value.sqrt();
        Ok(MomentReport {
            value,
            method: Method::BruteForceQuadrature,
            abs_error_estimate: line.abs_error_bound / (2.0 * value),
        })
    }

    /// `int |psi_hat_m(k)|^2 dk` over the full line, by the same period-by-period
    /// summation as the brute-force moment. Should be 1.
    pub fn momentum_norm(&self, config: &SlitConfig, tail_tol: f64) -> Result<LineIntegral> {
        let big_k = config.fringe_period();
        let m = config.slits();
        let t = config.separation();
        let amp2 = 2.0 * config.width() / (m as f64 * PI);
        let weight = move |k: f64| amp2 * fringe_sum_squared(m, 0.5 * t * k);
        self.sinc2_line_integral(weight, big_k, config.width(), m as usize, tail_tol)
    }

    /// `int_R w(k) sinc^2(a k / 2) dk` for a `K`-periodic weight `w` that is even
    /// about every lattice point `jK`.
    ///
    /// Period `j` covers `[(j - 1/2) K, (j + 1/2) K]` and is integrated with a
    /// fixed composite Gauss–Kronrod rule of `panels` panels. With `W` the
    /// integral of `w` over one period and `sinc^2(ak/2) <= 4 / (a k)^2`, the
    /// periods beyond `J` contribute at most `8 W / (a^2 K^2 (J - 1/2))`; `J` is
    /// the smallest count pushing that bound below `tail_tol`. The leading-order
    /// tail `4 W / (a^2 K^2) * trigamma(J + 1)` (sinc^2 replaced by its mean)
    /// is added to the truncated sum; it lies inside the bound.
    pub fn sinc2_line_integral<W>(
        &self,
        weight: W,
        big_k: f64,
        a: f64,
        panels: usize,
        tail_tol: f64,
    ) -> Result<LineIntegral>
    where
        W: Fn(f64) -> f64 + Sync + Send,
    {
        if !(tail_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tail tolerance must be positive, got {tail_tol}"
            )));
        }
        let panels = panels.max(2);
        let period_mass = self
            .integrator
            .integrate(&weight, -0.5 * big_k, 0.5 * big_k)?
            .value;
        let tail_scale = period_mass / (a * a * big_k * big_k);
        let needed = (8.0 * tail_scale / tail_tol + 0.5).ceil();
        if needed > self.max_periods as f64 {
            return Err(Error::TailUnreachable {
                bound: 8.0 * tail_scale / (self.max_periods as f64 - 0.5),
                tolerance: tail_tol,
                max_periods: self.max_periods,
            });
        }
        let periods = (needed as usize).max(1);

        let rule = PeriodRule::new(&weight, big_k, panels);
        let cells = self.exec.map_range(periods + 1, |j| {
            rule.apply(|u| {
                let k = j as f64 * big_k + u;
                let s = sinc(0.5 * a * k);
                s * s
            })
        });
        let (mut value, mut quad_err) = cells[0];
        for &(v, e) in &cells[1..] {
            value += 2.0 * v;
            quad_err += 2.0 * e;
        }
        let bound = 8.0 * tail_scale / (periods as f64 - 0.5).max(0.5);
        value += 4.0 * tail_scale * trigamma(periods as f64 + 1.0);
        Ok(LineIntegral {
            value,
            abs_error_bound: bound + quad_err,
            periods,
        })
    }

    /// `Delta(P_mod(m), psi_m)` by quadrature of the unreduced single-fringe
    /// integrand `16/(m pi) int_{-pi/2}^{pi/2} P_mod(m, kappa)^2 f_m(kappa)^2`,
    /// valid for every even `m`.
    pub fn sdev_pmod_refined_quadrature(&self, config: &SlitConfig) -> Result<MomentReport> {
        let m = config.slits();
        let period = 2.0 * PI / m as f64;
        let scale = 16.0 / (m as f64 * PI);
        let mut breaks = vec![-0.5 * PI];
        let jmax = (m / 2) as i64 + 1;
        for j in -jmax..=jmax {
            let b = (j as f64 + 0.5) * period;
            if b > -0.5 * PI + 1e-12 && b < 0.5 * PI - 1e-12 {
                breaks.push(b);
            }
        }
        breaks.push(0.5 * PI);
        let q = integrate_piecewise(
            &self.integrator,
            |kappa: f64| {
                let p = p_mod(kappa, period);
                scale * p * p * fringe_sum_squared(m, kappa)
            },
            &breaks,
        )?;
        Ok(sdev_from_scaled_variance(q, config.separation(), Method::SingleFringeQuadrature))
    }

    /// `Delta(P_mod(m), psi_m)` by quadrature of the one-fringe reduction
    /// `4m / pi * int_{-pi/m}^{pi/m} kappa^2 cos^2(m kappa / 2)`.
    pub fn sdev_pmod_refined_reduced(&self, config: &SlitConfig) -> Result<MomentReport> {
        let m = config.slits() as f64;
        let scale = 4.0 * m / PI;
        let q = self.integrator.integrate(
            |kappa: f64| {
                let c = (0.5 * m * kappa).cos();
                scale * kappa * kappa * c * c
            },
            -PI / m,
            PI / m,
        )?;
        Ok(sdev_from_scaled_variance(q, config.separation(), Method::SingleFringeQuadrature))
    }

    /// `Delta(Q_T) * Delta(P_mod)` (single-fringe quadrature) or, with
    /// `refined`, `Delta(Q_T) * Delta(P_mod(m))` (closed form).
    pub fn uncertainty_product(&self, config: &SlitConfig, refined: bool) -> Result<f64> {
        let qt = sdev_qt(config).value;
        let pm = if refined {
            sdev_pmod_refined(config).value
        } else {
            self.sdev_pmod_single_fringe(config)?.value
        };
        Ok(qt * pm)
    }

    pub fn sweep_row(&self, config: &SlitConfig) -> Result<SweepRow> {
        let sdev_qt = sdev_qt(config).value;
        let sdev_pmod = self.sdev_pmod_single_fringe(config)?.value;
        let sdev_pmod_refined = sdev_pmod_refined(config).value;
        Ok(SweepRow {
            m: config.slits(),
            sdev_qt,
            sdev_pmod,
            sdev_pmod_refined,
            product: sdev_qt * sdev_pmod,
            product_refined: sdev_qt * sdev_pmod_refined,
        })
    }

    /// One row per slit count, in the order given.
    pub fn sweep(&self, separation: f64, width: f64, m_list: &[u32]) -> Result<Vec<SweepRow>> {
        let configs = m_list
            .iter()
            .map(|&m| SlitConfig::new(width, separation, m))
            .collect::<Result<Vec<_>>>()?;
        // Rows are independent; the inner quadrature stays sequential.
        let inner = Moments {
            exec: Execution::Sequential,
            ..*self
        };
        self.exec
            .map_slice(&configs, |c| inner.sweep_row(c))
            .into_iter()
            .collect()
    }
}

fn check_even(m: u32) -> Result<()> {
    if m < 2 || !m.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "slit count must be even, got {m}"
        )));
    }
    Ok(())
}

fn sdev_from_scaled_variance(q: QuadResult, separation: f64, method: Method) -> MomentReport {
    let value = q.value.max(0.0).sqrt() / separation;
    let abs_error_estimate = if value > 0.0 {
        q.abs_error_estimate / (2.0 * value * separation * separation)
    } else {
        (q.abs_error_estimate).sqrt() / separation
    };
    MomentReport {
        value,
        method,
        abs_error_estimate,
    }
}

/// Fixed composite Gauss–Kronrod rule over one period, with the periodic weight
/// tabulated once at the nodes.
struct PeriodRule {
    nodes: Vec<f64>,
    kronrod: Vec<f64>,
    gauss: Vec<f64>,
}

impl PeriodRule {
    fn new<W: Fn(f64) -> f64>(weight: &W, big_k: f64, panels: usize) -> Self {
        let mut nodes = Vec::with_capacity(21 * panels);
        let mut kronrod = Vec::with_capacity(21 * panels);
        let mut gauss = Vec::with_capacity(21 * panels);
        let h = big_k / panels as f64;
        for p in 0..panels {
            let lo = -0.5 * big_k + h * p as f64;
            for (x, wk, wg) in crate::quadrature::panel_nodes(lo, lo + h) {
                let w = weight(x);
                nodes.push(x);
                kronrod.push(wk * w);
                gauss.push(wg * w);
            }
        }
        Self {
            nodes,
            kronrod,
            gauss,
        }
    }

    /// `(kronrod, |kronrod - gauss|)` for `int w(u) g(u) du` over the period.
    fn apply<G: Fn(f64) -> f64>(&self, g: G) -> (f64, f64) {
        let mut k = 0.0;
        let mut gs = 0.0;
        for ((&u, &wk), &wg) in self.nodes.iter().zip(&self.kronrod).zip(&self.gauss) {
            let v = g(u);
            k += wk * v;
            gs += wg * v;
        }
        (k, (k - gs).abs())
    }
}

/// Trigamma `psi_1(x) = sum_{n >= 0} 1 / (x + n)^2` for `x > 0`.
pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 20.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + inv
        + 0.5 * inv2
        + inv * inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 / 30.0)))
}

/// `c * x^exponent` fitted by least squares in log-log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub prefactor: f64,
    pub exponent: f64,
}

pub fn power_law_fit(xs: &[f64], ys: &[f64]) -> Result<PowerLawFit> {
    if xs.len() != ys.len() {
        return Err(Error::DegenerateFit("length mismatch".into()));
    }
    if xs.len() < 5 {
        return Err(Error::DegenerateFit(format!(
            "need at least 5 points, got {}",
            xs.len()
        )));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::DegenerateFit("values must be positive and finite".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 1e-300 {
        return Err(Error::DegenerateFit("abscissae are not distinct".into()));
    }
    let exponent = sxy / sxx;
    Ok(PowerLawFit {
        prefactor: (my - exponent * mx).exp(),
        exponent,
    })
}

/// Fit `sdev_pmod ~ c m^p` on the rows with `m >= 20`.
pub fn fit_asymptote(rows: &[SweepRow]) -> Result<PowerLawFit> {
    fit_column(rows, |r| r.sdev_pmod)
}

/// Fit `product ~ c m^p` on the rows with `m >= 20`.
pub fn fit_product_growth(rows: &[SweepRow]) -> Result<PowerLawFit> {
    fit_column(rows, |r| r.product)
}

fn fit_column(rows: &[SweepRow], column: impl Fn(&SweepRow) -> f64) -> Result<PowerLawFit> {
    let window: Vec<&SweepRow> = rows.iter().filter(|r| r.m >= ASYMPTOTE_MIN_SLITS).collect();
    let mut ms: Vec<u32> = window.iter().map(|r| r.m).collect();
    ms.sort_unstable();
    ms.dedup();
    if ms.len() != window.len() {
        return Err(Error::DegenerateFit("slit counts must be distinct".into()));
    }
    let xs: Vec<f64> = window.iter().map(|r| r.m as f64).collect();
    let ys: Vec<f64> = window.iter().map(|r| column(r)).collect();
    power_law_fit(&xs, &ys)
}
