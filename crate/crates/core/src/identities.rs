//! Numerical checks of the trigonometric and Fourier identities behind the
//! moment reductions.

use std::f64::consts::PI;

use serde::Serialize;

use crate::aperture::{build_position_state, fringe_sum, sinc, SlitConfig};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_piecewise, Integrator};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub name: String,
    pub max_abs_deviation: f64,
    pub samples: usize,
    pub tolerance: f64,
    pub passed: bool,
}

impl IdentityReport {
    fn new(name: &str, max_abs_deviation: f64, samples: usize, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            max_abs_deviation,
            samples,
            tolerance,
            passed: max_abs_deviation <= tolerance,
        }
    }
}

pub const PRODUCT_SUM_TOL: f64 = 1e-12;

/// `2^(d-1) prod_{j<d} cos(2^j kappa)` against `sum_{j=1}^{2^(d-1)} cos((2j-1) kappa)`
/// on a uniform grid over `[-pi, pi]`.
pub fn check_product_sum(depth: u32, kappa_samples: usize) -> Result<IdentityReport> {
    if !(1..=8).contains(&depth) {
        return Err(Error::InvalidArgument(format!("depth must be in 1..=8, got {depth}")));
    }
    let n = kappa_samples.max(2);
    let m = 1u32 << depth;
    let scale = (1u32 << (depth - 1)) as f64;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let kappa = -PI + 2.0 * PI * i as f64 / (n - 1) as f64;
        let product: f64 = (0..depth).map(|j| ((1u32 << j) as f64 * kappa).cos()).product();
        worst = worst.max((scale * product - fringe_sum(m, kappa)).abs());
    }
    Ok(IdentityReport::new("product_sum", worst, n, PRODUCT_SUM_TOL))
}

/// The three forms of `f_m(kappa)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirichletForms {
    /// `(sum_{j=1}^{m/2} cos((2j-1) kappa))^2`.
    pub lhs: f64,
    /// `(sin(m kappa) / sin(kappa))^2 / 4`; `None` near a pole.
    pub sine_quotient: Option<f64>,
    /// `(1 - cos(2 m kappa)) / (4 (1 - cos(2 kappa)))`; `None` near a pole.
    pub cosine_quotient: Option<f64>,
}

impl DirichletForms {
    pub fn max_deviation(&self) -> f64 {
        [self.sine_quotient, self.cosine_quotient]
            .iter()
            .flatten()
            .map(|v| (v - self.lhs).abs())
            .fold(0.0, f64::max)
    }
}

pub fn dirichlet_square(m: u32, kappa: f64) -> Result<DirichletForms> {
    if m < 2 || !m.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!("slit count must be even, got {m}")));
    }
    let f = fringe_sum(m, kappa);
    let s = kappa.sin();
    let near_pole = s.abs() < 1e-6;
    let mf = m as f64;
    Ok(DirichletForms {
        lhs: f * f,
        sine_quotient: (!near_pole).then(|| {
            let q = (mf * kappa).sin() / s;
            0.25 * q * q
        }),
        cosine_quotient: (!near_pole)
            .then(|| (1.0 - (2.0 * mf * kappa).cos()) / (4.0 * (1.0 - (2.0 * kappa).cos()))),
    })
}

/// `sum_{|j| <= J} sinc^2((a / T)(u + j pi))`, which tends to `T / a`.
pub fn sinc_comb_partial(width: f64, separation: f64, u: f64, terms: u64) -> Result<f64> {
    if !(width > 0.0 && width < separation) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < a < T, got a = {width}, T = {separation}"
        )));
    }
    if terms < 1 {
        return Err(Error::InvalidArgument("need at least one term".into()));
    }
    let r = width / separation;
    let term = |j: i64| {
        let s = sinc(r * (u + j as f64 * PI));
        s * s
    };
    // Smallest terms first.
    let mut total = 0.0;
    for j in (1..=terms as i64).rev() {
        total += term(j) + term(-j);
    }
    Ok(total + term(0))
}

/// Delta-pair convolution building the `2^d` slit centers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvolutionCheck {
    /// Pair offsets `2^j`, in units of `T/2`.
    pub levels: Vec<i64>,
    /// Centers of the convolved train, in units of `T/2`, ascending.
    pub centers: Vec<i64>,
    pub centers_match: bool,
    pub transform: IdentityReport,
}

/// Convolves the pairs `delta(x - 2^j) + delta(x + 2^j)`, `j < d`, as exact
/// integer center lists, compares the result with the `psi_{2^d}` slit centers,
/// and checks `prod_j cos(2^j T k / 2)` against the normalized transform of the
/// center list on a `k` grid.
pub fn convolution_construction(depth: u32) -> Result<ConvolutionCheck> {
    if !(1..=20).contains(&depth) {
        return Err(Error::InvalidArgument(format!("depth must be in 1..=20, got {depth}")));
    }
    let levels: Vec<i64> = (0..depth).map(|j| 1i64 << j).collect();
    let mut centers = vec![0i64];
    for &offset in &levels {
        centers = centers
            .iter()
            .flat_map(|&c| [c - offset, c + offset])
            .collect();
    }
    centers.sort_unstable();

    let separation = 1.0;
    let config = SlitConfig::new(0.5, separation, 1 << depth)?;
    let mut expected = build_position_state(&config).centers();
    expected.sort_by(f64::total_cmp);
    let centers_match = expected.len() == centers.len()
        && expected
            .iter()
            .zip(&centers)
            .all(|(e, &c)| (e - 0.5 * separation * c as f64).abs() <= 1e-12);

    let samples = 2001;
    let norm = centers.len() as f64;
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let k = -4.0 * PI + 8.0 * PI * i as f64 / (samples - 1) as f64;
        let product: f64 = levels
            .iter()
            .map(|&l| (l as f64 * 0.5 * separation * k).cos())
            .product();
        let transform: f64 = centers
            .iter()
            .map(|&c| (c as f64 * 0.5 * separation * k).cos())
            .sum::<f64>()
            / norm;
        worst = worst.max((product - transform).abs());
    }
    Ok(ConvolutionCheck {
        levels,
        centers,
        centers_match,
        transform: IdentityReport::new("convolution_transform", worst, samples, 1e-12),
    })
}

/// `kappa^2 / (1 - cos 2 kappa)` with its removable singularity at 0 patched.
pub fn log_fringe_integrand(kappa: f64) -> f64 {
    if kappa.abs() < 1e-3 {
        let k2 = kappa * kappa;
        0.5 * (1.0 + k2 / 3.0 + k2 * k2 / 15.0)
    } else {
        let s = kappa.sin();
        kappa * kappa / (2.0 * s * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FringeIntegrals {
    /// Quadrature of `int_{-pi/2}^{pi/2} kappa^2 / (1 - cos 2 kappa)`.
    pub log_integral: f64,
    /// `pi ln 2`.
    pub log_exact: f64,
    /// Quadrature of `int_{-pi/2}^{pi/2} kappa^2 cos^2 kappa`.
    pub cos2_integral: f64,
    /// `(pi / 24)(pi^2 - 6)`.
    pub cos2_exact: f64,
}

pub fn fringe_integrals(integrator: &Integrator) -> Result<FringeIntegrals> {
    let log_integral = integrate_piecewise(
        integrator,
        log_fringe_integrand,
        &[-0.5 * PI, -1e-3, 1e-3, 0.5 * PI],
    )?
    .value;
    let cos2_integral = integrator
        .integrate(
            |k: f64| {
                let c = k.cos();
                k * k * c * c
            },
            -0.5 * PI,
            0.5 * PI,
        )?
        .value;
    Ok(FringeIntegrals {
        log_integral,
        log_exact: PI * std::f64::consts::LN_2,
        cos2_integral,
        cos2_exact: PI / 24.0 * (PI * PI - 6.0),
    })
}

/// `int_{-pi/2}^{pi/2} kappa^2 / (1 - cos 2 kappa) cos(2 m kappa)`, which
/// vanishes as `m` grows.
pub fn riemann_lebesgue(integrator: &Integrator, m: u32) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    let lobes = 4 * m as usize;
    let mut breaks: Vec<f64> = (0..=lobes)
        .map(|i| -0.5 * PI + PI * i as f64 / lobes as f64)
        .collect();
    breaks.extend([-1e-3, 1e-3]);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mf = m as f64;
    Ok(integrate_piecewise(
        integrator,
        |k: f64| log_fringe_integrand(k) * (2.0 * mf * k).cos(),
        &breaks,
    )?
    .value)
}

/// Coefficients of `2^(d-1) prod_{j<d} cos(2^j kappa)` on `cos((2n-1) kappa)`,
/// `n = 1..=count`, by projection over `[-pi, pi]`.
pub fn product_form_coefficients(depth: u32, count: u32) -> Result<Vec<f64>> {
    if !(1..=8).contains(&depth) {
        return Err(Error::InvalidArgument(format!("depth must be in 1..=8, got {depth}")));
    }
    let scale = (1u32 << (depth - 1)) as f64;
    // The integrand is a trigonometric polynomial; a uniform rule with more
    // points than twice its degree integrates it exactly.
    let degree = (1usize << depth) + 2 * count as usize;
    let n = 2 * degree + 2;
    let h = 2.0 * PI / n as f64;
    let product: Vec<f64> = (0..n)
        .map(|i| {
            let kappa = -PI + h * i as f64;
            scale * (0..depth).map(|j| ((1u32 << j) as f64 * kappa).cos()).product::<f64>()
        })
        .collect();
    Ok((1..=count)
        .map(|c| {
            let freq = (2 * c - 1) as f64;
            product
                .iter()
                .enumerate()
                .map(|(i, g)| g * (freq * (-PI + h * i as f64)).cos())
                .sum::<f64>()
                * h
                / PI
        })
        .collect())
}
