//! Plane-wave propagation through a dilute gas of targets: dielectric
//! response, complex wavevector, extinction coefficient and slab profiles.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, invalid, Result};
use crate::response::PolarizabilityCurve;
use crate::scattering::sigma_total_optical;

/// `|4π n α|` must stay below this for a sample to count as dilute.
pub const DILUTE_THRESHOLD: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MediumClass {
    Absorbing,
    Amplifying,
    Transparent,
}

impl MediumClass {
    pub fn of_extinction(h: f64) -> Self {
        if h > 0.0 {
            MediumClass::Absorbing
        } else if h < 0.0 {
            MediumClass::Amplifying
        } else {
            MediumClass::Transparent
        }
    }
}

/// First-order dielectric function `ε = 1 + 4π n α` and the dilute flag
/// `|4π n α| < DILUTE_THRESHOLD`.
pub fn dielectric(alpha: Complex64, density_n: f64) -> (Complex64, bool) {
    let shift = 4.0 * PI * density_n * alpha;
    (Complex64::new(1.0, 0.0) + shift, shift.norm() < DILUTE_THRESHOLD)
}

/// `k = ω √ε` on the principal branch.
pub fn wavevector(epsilon: Complex64, omega: f64) -> Result<Complex64> {
    if !(omega > 0.0) {
        return domain(format!("wavevector needs omega > 0, got {omega}"));
    }
    if epsilon == Complex64::new(0.0, 0.0) {
        return domain("epsilon = 0 is the branch point of sqrt(epsilon)");
    }
    Ok(omega * epsilon.sqrt())
}

/// `h = 2 Im k`.
pub fn extinction(k: Complex64) -> f64 {
    2.0 * k.im
}

/// Extinction from the dilute law `h = n σ_tot`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiluteExtinction {
    pub h: f64,
    /// Set when the frequency is outside the dilute regime.
    pub warning: Option<&'static str>,
}

pub fn extinction_dilute(density_n: f64, sigma_tot: f64, dilute_ok: bool) -> DiluteExtinction {
    DiluteExtinction {
        h: density_n * sigma_tot,
        warning: (!dilute_ok)
            .then_some("outside the dilute regime: |4 pi n alpha| >= 1e-2, h = n sigma_tot is unreliable"),
    }
}

/// Time-averaged `|E|²` after propagating `z`: `½ |E₀|² exp(-h z)`.
pub fn intensity_profile(e0_sq: f64, h: f64, z_samples: &[f64]) -> Result<Vec<f64>> {
    if z_samples.iter().any(|&z| !(z >= 0.0) || !z.is_finite()) {
        return invalid("slab depths must be finite and >= 0");
    }
    if z_samples.windows(2).any(|w| w[1] < w[0]) {
        return invalid("slab depths must be ascending");
    }
    Ok(z_samples.iter().map(|z| 0.5 * e0_sq * (-h * z).exp()).collect())
}

/// Medium observables at every positive frequency of a polarizability curve.
#[derive(Debug, Clone)]
pub struct MediumResponse {
    pub density_n: f64,
    pub grid: Vec<f64>,
    pub epsilon: Vec<Complex64>,
    pub k: Vec<Complex64>,
    /// Exact extinction `2 Im k`.
    pub h: Vec<f64>,
    /// First-order extinction `n σ_tot`.
    pub h_dilute: Vec<f64>,
    pub dilute_ok: Vec<bool>,
}

impl MediumResponse {
    pub fn build(curve: &PolarizabilityCurve, density_n: f64) -> Result<Self> {
        if !(density_n > 0.0) || !density_n.is_finite() {
            return domain(format!("density n must be positive and finite, got {density_n}"));
        }
        let mut out = MediumResponse {
            density_n,
            grid: Vec::new(),
            epsilon: Vec::new(),
            k: Vec::new(),
            h: Vec::new(),
            h_dilute: Vec::new(),
            dilute_ok: Vec::new(),
        };
        for (&w, &a) in curve.grid().iter().zip(curve.alpha()) {
            if w <= 0.0 {
                continue;
            }
            let (eps, ok) = dielectric(a, density_n);
            let k = wavevector(eps, w)?;
            out.grid.push(w);
            out.epsilon.push(eps);
            out.k.push(k);
            out.h.push(extinction(k));
            out.h_dilute
                .push(extinction_dilute(density_n, sigma_total_optical(a, w), ok).h);
            out.dilute_ok.push(ok);
        }
        Ok(out)
    }
}
