//! Dipole scattering amplitude and cross sections.
//!
//! All cross sections are in units of `(c/ω_ref)²`. The total cross section
//! follows the sign of `Im α`, so it is negative inside amplifier bands while
//! the elastic cross section stays non-negative.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::quadrature::gauss_legendre;
use crate::response::PolarizabilityCurve;
use crate::spectral_model::{noise_temperature_from_values, SpectralDensity, SpectralPair, NOISE_FLOOR};

/// `|σ_tot|` at or below this value is classified neutral.
pub const TOL_BAND: f64 = 1e-12;

/// Resolution of bisected band edges, in `ω_ref`.
pub const BAND_EDGE_RESOLUTION: f64 = 1e-6;

const UNIT_TOL: f64 = 1e-12;

/// Complex polarization 3-vector.
pub type Polarization = [Complex64; 3];

/// Scattering amplitude `F_{i→f} = ω² (e_f* · e_i) α`.
pub fn scattering_amplitude(alpha: Complex64, omega: f64, e_i: &Polarization, e_f: &Polarization) -> Result<Complex64> {
    for (name, e) in [("e_i", e_i), ("e_f", e_f)] {
        let norm_sq: f64 = e.iter().map(|c| c.norm_sqr()).sum();
        if (norm_sq.sqrt() - 1.0).abs() > UNIT_TOL {
            return invalid(format!(
                "polarization {name} must be a unit vector, |{name}| = {}",
                norm_sq.sqrt()
            ));
        }
    }
    let overlap: Complex64 = e_f.iter().zip(e_i).map(|(f, i)| f.conj() * i).sum();
    Ok(omega * omega * overlap * alpha)
}

/// Polarization-averaged differential elastic cross section
/// `½ (1 + cos²θ) ω⁴ |α|²`.
pub fn differential_elastic(alpha: Complex64, omega: f64, theta: f64) -> f64 {
    let c = theta.cos();
    0.5 * (1.0 + c * c) * omega.powi(4) * alpha.norm_sqr()
}

/// `∫ dσ/dΩ dΩ` by `nodes`-point Gauss-Legendre in `θ`.
pub fn sigma_elastic_by_quadrature(alpha: Complex64, omega: f64, nodes: usize) -> f64 {
    let (x, w) = gauss_legendre(nodes);
    let polar: f64 = x
        .iter()
        .zip(&w)
        .map(|(&t, &wt)| {
            let theta = 0.5 * PI * (t + 1.0);
            wt * differential_elastic(alpha, omega, theta) * theta.sin()
        })
        .sum();
    2.0 * PI * 0.5 * PI * polar
}

/// `σ_el = (8π/3) ω⁴ |α|²`.
pub fn sigma_elastic(alpha: Complex64, omega: f64) -> f64 {
    8.0 * PI / 3.0 * omega.powi(4) * alpha.norm_sqr()
}

/// Optical-theorem total cross section `σ_tot = 4π ω Im α`.
pub fn sigma_total_optical(alpha: Complex64, omega: f64) -> f64 {
    4.0 * PI * omega * alpha.im
}

/// Both closed forms of the total cross section written through the noise
/// temperature, evaluated from the same `S±` values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralTotal {
    /// `4π² ω [1 - exp(-ω/T_n)] S₊`.
    pub exponential: f64,
    /// `8π² ω tanh(ω/2T_n) S̄`.
    pub hyperbolic: f64,
    pub noise_temperature: Option<f64>,
}

/// Evaluates both noise-temperature forms of `σ_tot` from `S₊(ω)`, `S₋(ω)`.
///
/// Where `T_n` is undefined because `S₊ = S₋` both forms are zero; where it
/// is undefined because one side vanishes, the `T_n → 0±` limits are used.
pub fn sigma_total_forms(s_plus: f64, s_minus: f64, omega: f64) -> SpectralTotal {
    let prefactor = 4.0 * PI * PI * omega;
    match noise_temperature_from_values(s_plus, s_minus, omega) {
        Some(tn) => {
            let x = omega / tn;
            let s_bar = 0.5 * (s_plus + s_minus);
            SpectralTotal {
                exponential: prefactor * (-(-x).exp_m1()) * s_plus,
                hyperbolic: 2.0 * prefactor * (0.5 * x).tanh() * s_bar,
                noise_temperature: Some(tn),
            }
        }
        None => {
            let value = if s_minus < NOISE_FLOOR && s_plus >= NOISE_FLOOR {
                prefactor * s_plus
            } else if s_plus < NOISE_FLOOR && s_minus >= NOISE_FLOOR {
                -prefactor * s_minus
            } else {
                0.0
            };
            SpectralTotal {
                exponential: value,
                hyperbolic: value,
                noise_temperature: None,
            }
        }
    }
}

/// Total cross section from the spectral functions through the noise
/// temperature, `σ_tot = 4π² ω [1 - exp(-ω/T_n)] S₊(ω)`.
pub fn sigma_total_spectral(pair: &SpectralPair, omega: f64) -> f64 {
    let forms = sigma_total_forms(pair.s_plus(omega), pair.s_minus(omega), omega);
    debug_assert!(
        (forms.exponential - forms.hyperbolic).abs() <= 1e-12 * forms.exponential.abs().max(f64::MIN_POSITIVE),
        "tanh and exponential forms disagree: {} vs {}",
        forms.exponential,
        forms.hyperbolic
    );
    forms.exponential
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BandFlag {
    Absorbing,
    Amplifying,
    Neutral,
}

impl BandFlag {
    pub fn classify(sigma_tot: f64) -> Self {
        if sigma_tot < -TOL_BAND {
            BandFlag::Amplifying
        } else if sigma_tot > TOL_BAND {
            BandFlag::Absorbing
        } else {
            BandFlag::Neutral
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            BandFlag::Absorbing => "absorbing",
            BandFlag::Amplifying => "amplifying",
            BandFlag::Neutral => "neutral",
        }
    }
}

/// Elastic, total and inelastic cross sections at the positive frequencies of
/// a polarizability curve. `σ_in = σ_tot - σ_el` may be negative.
#[derive(Debug, Clone)]
pub struct CrossSectionSet {
    pub grid: Vec<f64>,
    pub sigma_el: Vec<f64>,
    pub sigma_tot: Vec<f64>,
    pub sigma_in: Vec<f64>,
    pub band_flags: Vec<BandFlag>,
}

impl CrossSectionSet {
    pub fn from_curve(curve: &PolarizabilityCurve) -> Self {
        let mut set = CrossSectionSet {
            grid: Vec::new(),
            sigma_el: Vec::new(),
            sigma_tot: Vec::new(),
            sigma_in: Vec::new(),
            band_flags: Vec::new(),
        };
        for (&w, &a) in curve.grid().iter().zip(curve.alpha()) {
            if w <= 0.0 {
                continue;
            }
            let el = sigma_elastic(a, w);
            let tot = sigma_total_optical(a, w);
            set.grid.push(w);
            set.sigma_el.push(el);
            set.sigma_tot.push(tot);
            set.sigma_in.push(tot - el);
            set.band_flags.push(BandFlag::classify(tot));
        }
        set
    }
}

/// A maximal frequency interval in which the target amplifies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplifierBand {
    pub lo: f64,
    pub hi: f64,
}

impl AmplifierBand {
    pub fn contains(&self, omega: f64) -> bool {
        omega >= self.lo && omega <= self.hi
    }
}

/// Frequency bands (ω > 0) where `σ_tot < -TOL_BAND`.
///
/// Bands are runs of consecutive amplifying samples; interior edges are
/// refined by bisection on the sign of `Im α` to [`BAND_EDGE_RESOLUTION`].
/// A band touching the end of the positive grid keeps that sample as its edge.
pub fn amplifier_bands(curve: &PolarizabilityCurve) -> Vec<AmplifierBand> {
    let set = CrossSectionSet::from_curve(curve);
    let n = set.grid.len();
    let amp: Vec<bool> = set.band_flags.iter().map(|f| *f == BandFlag::Amplifying).collect();

    let mut bands = Vec::new();
    let mut i = 0;
    while i < n {
        if !amp[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < n && amp[i + 1] {
            i += 1;
        }
        let end = i;
        let lo = if start == 0 {
            set.grid[0]
        } else {
            bisect_sign_change(curve, set.grid[start - 1], set.grid[start])
        };
        let hi = if end == n - 1 {
            set.grid[n - 1]
        } else {
            bisect_sign_change(curve, set.grid[end], set.grid[end + 1])
        };
        bands.push(AmplifierBand { lo, hi });
        i += 1;
    }
    bands
}

// One endpoint has Im α < 0, the other not; locate the sign change.
fn bisect_sign_change(curve: &PolarizabilityCurve, a: f64, b: f64) -> f64 {
    let negative = |w: f64| curve.im_alpha_at(w) < 0.0;
    let (mut lo, mut hi) = (a, b);
    let lo_negative = negative(lo);
    if lo_negative == negative(hi) {
        return 0.5 * (a + b);
    }
    while hi - lo > BAND_EDGE_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if negative(mid) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
