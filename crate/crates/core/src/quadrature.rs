//! Adaptive Gauss–Kronrod quadrature.
//!
//! Globally adaptive bisection driven by the embedded 10-point Gauss /
//! 21-point Kronrod pair: the panel with the largest `|K21 - G10|` is split
//! until the summed estimate drops below the absolute tolerance. The reported
//! error is the summed `|K21 - G10|`, floored per panel at the roundoff level
//! of the panel's absolute mass; for smooth integrands it is a large
//! overestimate of the true error of the Kronrod value.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Kronrod abscissae on `[0, 1]`; odd indices are the Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_289_581_920,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Gauss weights for `XGK[1], XGK[3], .., XGK[9]`.
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Points per panel evaluation.
pub const PANEL_POINTS: usize = 21;

/// Default evaluation budget for a single adaptive integral.
pub const DEFAULT_MAX_EVALS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

/// One fixed G10/K21 panel on `[a, b]`: returns `(kronrod, |kronrod - gauss|)`.
pub fn gauss_kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[10] * fc;
    let mut abs_mass = WGK[10] * fc.abs();
    let mut gauss = 0.0;
    for i in 0..10 {
        let dx = half * XGK[i];
        let (lo, hi) = (f(center - dx), f(center + dx));
        let pair = lo + hi;
        kronrod += WGK[i] * pair;
        abs_mass += WGK[i] * (lo.abs() + hi.abs());
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    // Never claim more than roundoff allows.
    let floor = 50.0 * f64::EPSILON * abs_mass * half.abs();
    (kronrod * half, ((kronrod - gauss) * half).abs().max(floor))
}

/// Nodes of one G10/K21 panel on `[a, b]` as `(x, kronrod_weight, gauss_weight)`,
/// weights already scaled to the panel; the Gauss weight is zero off the Gauss nodes.
pub fn panel_nodes(a: f64, b: f64) -> Vec<(f64, f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = Vec::with_capacity(PANEL_POINTS);
    for i in 0..10 {
        let dx = half * XGK[i];
        let wg = if i % 2 == 1 { WG[i / 2] * half } else { 0.0 };
        out.push((center - dx, WGK[i] * half, wg));
        out.push((center + dx, WGK[i] * half, wg));
    }
    out.push((center, WGK[10] * half, 0.0));
    out
}

/// Composite fixed rule: `panels` equal G10/K21 panels on `[a, b]`.
pub fn composite_panels<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> (f64, f64) {
    let h = (b - a) / panels as f64;
    let mut value = 0.0;
    let mut err = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let hi = if p + 1 == panels { b } else { lo + h };
        let (v, e) = gauss_kronrod_panel(f, lo, hi);
        value += v;
        err += e;
    }
    (value, err)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    depth: u32,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    // Largest error first; ties broken by position so the run is deterministic.
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Adaptive integrator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrator {
    pub abs_tol: f64,
    pub max_depth: u32,
    pub initial_panels: usize,
    pub max_evals: usize,
}

impl Default for Integrator {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            max_depth: 50,
            initial_panels: 4,
            max_evals: DEFAULT_MAX_EVALS,
        }
    }
}

impl Integrator {
    pub fn with_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<QuadResult> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "integration bounds must satisfy a < b, got [{a}, {b}]"
            )));
        }
        if !(self.abs_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "absolute tolerance must be positive, got {}",
                self.abs_tol
            )));
        }
        let n0 = self.initial_panels.max(1);
        let h = (b - a) / n0 as f64;
        let mut heap = BinaryHeap::with_capacity(4 * n0);
        let mut evaluations = 0;
        for p in 0..n0 {
            let lo = a + h * p as f64;
            let hi = if p + 1 == n0 { b } else { lo + h };
            let (value, error) = gauss_kronrod_panel(&f, lo, hi);
            evaluations += PANEL_POINTS;
            heap.push(Panel {
                a: lo,
                b: hi,
                value,
                error,
                depth: 0,
            });
        }

        let (mut total, mut err) = sums(&heap);
        loop {
            if !total.is_finite() {
                return Err(Error::NonConvergence {
                    estimate: total,
                    error: err,
                    tolerance: self.abs_tol,
                    evaluations,
                });
            }
            if err <= self.abs_tol {
                // Running sums drift; confirm with an ordered re-summation.
                let (exact_total, exact_err) = sums(&heap);
                if exact_err <= self.abs_tol {
                    return Ok(QuadResult {
                        value: exact_total,
                        abs_error_estimate: exact_err,
                        evaluations,
                    });
                }
                total = exact_total;
                err = exact_err;
            }
            let worst = *heap.peek().expect("at least one panel");
            if worst.depth >= self.max_depth || evaluations + 2 * PANEL_POINTS > self.max_evals {
                let (total, err) = sums(&heap);
                return Err(Error::NonConvergence {
                    estimate: total,
                    error: err,
                    tolerance: self.abs_tol,
                    evaluations,
                });
            }
            heap.pop();
            total -= worst.value;
            err -= worst.error;
            let mid = 0.5 * (worst.a + worst.b);
            for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
                let (value, error) = gauss_kronrod_panel(&f, lo, hi);
                total += value;
                err += error;
                heap.push(Panel {
                    a: lo,
                    b: hi,
                    value,
                    error,
                    depth: worst.depth + 1,
                });
            }
            evaluations += 2 * PANEL_POINTS;
        }
    }
}

fn sums(heap: &BinaryHeap<Panel>) -> (f64, f64) {
    // Sum in position order so the result does not depend on heap layout.
    let mut panels: Vec<&Panel> = heap.iter().collect();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    panels
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error))
}

/// Integrate `f` over `[a, b]` to absolute tolerance `abs_tol`, bisecting at most
/// `max_depth` times along any branch.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_depth: u32,
) -> Result<QuadResult> {
    Integrator {
        abs_tol,
        max_depth,
        ..Integrator::default()
    }
    .integrate(f, a, b)
}

/// Integrate over consecutive sub-intervals `breaks[i]..breaks[i+1]`, splitting
/// the tolerance in proportion to length. Use this when the integrand has kinks
/// at known points.
pub fn integrate_piecewise<F: Fn(f64) -> f64>(
    integrator: &Integrator,
    f: F,
    breaks: &[f64],
) -> Result<QuadResult> {
    if breaks.len() < 2 {
        return Err(Error::InvalidArgument(
            "piecewise integration needs at least two break points".into(),
        ));
    }
    let span = breaks[breaks.len() - 1] - breaks[0];
    let mut out = QuadResult {
        value: 0.0,
        abs_error_estimate: 0.0,
        evaluations: 0,
    };
    for w in breaks.windows(2) {
        let sub = Integrator {
            abs_tol: integrator.abs_tol * (w[1] - w[0]) / span,
            initial_panels: 1,
            ..*integrator
        };
        let r = sub.integrate(&f, w[0], w[1]).map_err(|e| match e {
            Error::NonConvergence {
                estimate,
                error,
                evaluations,
                ..
            } => Error::NonConvergence {
                estimate: out.value + estimate,
                error: out.abs_error_estimate + error,
                tolerance: integrator.abs_tol,
                evaluations: out.evaluations + evaluations,
            },
            other => other,
        })?;
        out.value += r.value;
        out.abs_error_estimate += r.abs_error_estimate;
        out.evaluations += r.evaluations;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn weights_sum_to_two() {
        let k: f64 = WGK[10] + 2.0 * WGK[..10].iter().sum::<f64>();
        let g: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((k - 2.0).abs() < 1e-15);
        assert!((g - 2.0).abs() < 1e-15);
    }

    #[test]
    fn kronrod_exact_for_degree_31() {
        // K21 is exact to degree 31, G10 to degree 19.
        let (k, _) = gauss_kronrod_panel(&|x: f64| x.powi(30), -1.0, 1.0);
        assert!((k - 2.0 / 31.0).abs() < 1e-15);
        let (k, e) = gauss_kronrod_panel(&|x: f64| x.powi(18), -1.0, 1.0);
        assert!((k - 2.0 / 19.0).abs() < 1e-15);
        // Only the roundoff floor remains.
        assert!(e < 1e-13);
    }

    #[test]
    fn sine_reference() {
        let r = integrate(f64::sin, 0.0, PI, 1e-12, 50).unwrap();
        assert!((r.value - 2.0).abs() <= 1e-12);
        assert!(r.evaluations >= 4 * PANEL_POINTS);
    }

    #[test]
    fn fringe_reference() {
        let r = integrate(|k: f64| k * k * k.cos().powi(2), -PI / 2.0, PI / 2.0, 1e-12, 50).unwrap();
        let exact = PI / 24.0 * (PI * PI - 6.0);
        assert!((r.value - exact).abs() <= 1e-12, "{} vs {exact}", r.value);
    }

    #[test]
    fn bad_bounds_rejected() {
        assert!(matches!(
            integrate(f64::sin, 1.0, 1.0, 1e-10, 10),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn depth_limit_reports_best_estimate() {
        // A jump cannot be resolved to 1e-14 with three bisections.
        let err = integrate(|x: f64| if x < 0.3 { 0.0 } else { 1.0 }, 0.0, 1.0, 1e-14, 3).unwrap_err();
        match err {
            Error::NonConvergence { estimate, .. } => assert!((estimate - 0.7).abs() < 0.1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unattainable_tolerance_fails() {
        let r = Integrator::with_tol(1e-20).integrate(|x: f64| (50.0 * x).cos() * x.exp(), 0.0, 3.0);
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
    }
}
