//! Optical theorem from the "missing intensity" on a screen far behind the
//! target.
//!
//! In the paraxial far field the screen sees
//! `I/I₀ = |1 + F e^{iω r⊥²/2z} / z|²`, where the phase keeps the first
//! correction of `r = √(z² + r⊥²) ≈ z + r⊥²/2z` and the amplitude keeps `1/z`.
//! The transverse integral of `1 - I/I₀` converges only conditionally, so it
//! is regularised with a Gaussian taper `exp(-ε u)` in the Fresnel phase
//! `u = ω r⊥² / 2z` and extrapolated to `ε → 0`.
//!
//! For the interference term the tapered integral is exactly
//! `σ(ε) = -Re[4π F / (ω (ε - i))] = 4π (Im F - ε Re F) / (ω (1 + ε²))`,
//! whose `ε → 0` value is `(4π/ω) Im F`. The extrapolation fits that form.
//! The scattered-intensity term adds `-2π|F|²/(z ω ε)`, fitted as an extra
//! column and discarded.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::response::polarizability_boundary;
use crate::scattering::{scattering_amplitude, sigma_total_spectral, Polarization};
use crate::spectral_model::SpectralPair;

/// The taper must fall below this value at `r_max`.
pub const TAPER_FLOOR: f64 = 1e-8;

/// Far field: `z >= FAR_FIELD_RATIO / ω`.
pub const FAR_FIELD_RATIO: f64 = 1e3;

/// Paraxial cone: `r⊥ <= z / PARAXIAL_RATIO`.
pub const PARAXIAL_RATIO: f64 = 10.0;

/// Relative gap accepted by [`verify_optical_theorem`].
pub const CONVERGENCE_REL_TOL: f64 = 1e-3;

/// Absolute gap, relative to `4π|F|/ω`, accepted when `σ` is near zero.
pub const CONVERGENCE_ABS_TOL: f64 = 1e-9;

/// Default distance to the screen in units of `1/ω`.
pub const DEFAULT_Z_WAVELENGTHS: f64 = 1e4;

pub const DEFAULT_SCHEDULE_STEPS: usize = 6;

// Fresnel-phase width of one radial panel: 1/8 of a half period.
const PANEL_PHASE: f64 = PI / 8.0;
const PANEL_NODES: usize = 8;
const MAX_PANELS: usize = 20_000_000;

/// Which part of `1 - I/I₀` is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScreenIntegrand {
    /// Leading interference term `-2 Re[F e^{iu}]/z`.
    Interference,
    /// Interference plus the scattered-intensity term `-|F|²/z²`.
    Full,
}

fn check_far_field(omega: f64, z: f64) -> Result<()> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::Domain(format!("screen needs omega > 0, got {omega}")));
    }
    if !(z >= FAR_FIELD_RATIO / omega) || !z.is_finite() {
        return Err(Error::Infeasible(format!(
            "far-field condition z >= 1e3/omega violated: z = {z}, 1e3/omega = {}",
            FAR_FIELD_RATIO / omega
        )));
    }
    Ok(())
}

/// `I(r⊥, z)/I₀` behind a target with forward amplitude `f`.
pub fn screen_intensity(f: Complex64, omega: f64, z: f64, r_perp: f64) -> Result<f64> {
    check_far_field(omega, z)?;
    if !(r_perp >= 0.0) || r_perp > z / PARAXIAL_RATIO {
        return Err(Error::Infeasible(format!(
            "paraxial condition 0 <= r_perp <= z/10 violated: r_perp = {r_perp}, z/10 = {}",
            z / PARAXIAL_RATIO
        )));
    }
    let phase = omega * r_perp * r_perp / (2.0 * z);
    let field = Complex64::new(1.0, 0.0) + f * Complex64::from_polar(1.0, phase) / z;
    Ok(field.norm_sqr())
}

/// Leading interference deficit `-Re[2F e^{iω r⊥²/2z}/z]`.
pub fn interference_deficit(f: Complex64, omega: f64, z: f64, r_perp: f64) -> f64 {
    let phase = omega * r_perp * r_perp / (2.0 * z);
    -2.0 * (f * Complex64::from_polar(1.0, phase)).re / z
}

/// Closed-form optical theorem `σ_tot = (4π/ω) Im F`.
pub fn optical_theorem_sigma(f: Complex64, omega: f64) -> f64 {
    4.0 * PI * f.im / omega
}

/// Smallest taper parameter for which `exp(-ε ω r_max²/2z) <= TAPER_FLOOR`.
pub fn min_feasible_eps(omega: f64, z: f64, r_max: f64) -> f64 {
    let phase_max = omega * r_max * r_max / (2.0 * z);
    -TAPER_FLOOR.ln() / phase_max
}

/// Checks that `(taper_eps, r_max, z)` satisfy the far-field, paraxial and
/// taper-decay constraints together, naming the first violated inequality.
pub fn check_feasible(omega: f64, z: f64, taper_eps: f64, r_max: f64) -> Result<()> {
    check_geometry(omega, z, r_max)?;
    if !(taper_eps > 0.0) || !taper_eps.is_finite() {
        return Err(Error::Infeasible(format!(
            "taper_eps > 0 violated: taper_eps = {taper_eps}"
        )));
    }
    let taper_at_edge = (-taper_eps * omega * r_max * r_max / (2.0 * z)).exp();
    if taper_at_edge > TAPER_FLOOR {
        return Err(Error::Infeasible(format!(
            "taper decay exp(-eps*omega*r_max^2/(2z)) <= 1e-8 violated: value {taper_at_edge:e} \
             (eps = {taper_eps}, r_max = {r_max}, z = {z}); need eps >= {}",
            min_feasible_eps(omega, z, r_max)
        )));
    }
    Ok(())
}

/// Far-field and paraxial constraints on `(z, r_max)`.
pub fn check_geometry(omega: f64, z: f64, r_max: f64) -> Result<()> {
    check_far_field(omega, z)?;
    if !(r_max > 0.0) || r_max > z / PARAXIAL_RATIO {
        return Err(Error::Infeasible(format!(
            "paraxial condition 0 < r_max <= z/10 violated: r_max = {r_max}, z/10 = {}",
            z / PARAXIAL_RATIO
        )));
    }
    Ok(())
}

/// Tapered missing-intensity estimate of `σ_tot` using the interference term.
pub fn missing_intensity_sigma(f: Complex64, omega: f64, z: f64, taper_eps: f64, r_max: f64) -> Result<f64> {
    missing_intensity_sigma_with(f, omega, z, taper_eps, r_max, ScreenIntegrand::Interference)
}

/// `2π ∫₀^{r_max} [1 - I/I₀] exp(-ε ω r⊥²/2z) r⊥ dr⊥` with radial panels
/// spanning a fixed Fresnel-phase width.
pub fn missing_intensity_sigma_with(
    f: Complex64,
    omega: f64,
    z: f64,
    taper_eps: f64,
    r_max: f64,
    integrand: ScreenIntegrand,
) -> Result<f64> {
    check_feasible(omega, z, taper_eps, r_max)?;
    if f == Complex64::new(0.0, 0.0) {
        return Ok(0.0);
    }
    let a = omega / z;
    let phase_max = 0.5 * a * r_max * r_max;
    let panels = (phase_max / PANEL_PHASE).ceil() as usize;
    if panels > MAX_PANELS {
        return Err(Error::Infeasible(format!(
            "screen integral needs {panels} radial panels (limit {MAX_PANELS}); reduce r_max or z"
        )));
    }
    let scattered = match integrand {
        ScreenIntegrand::Interference => 0.0,
        ScreenIntegrand::Full => f.norm_sqr() / (z * z),
    };
    let (nodes, weights) = gauss_legendre(PANEL_NODES);
    let radius_at = |phase: f64| (2.0 * phase / a).sqrt().min(r_max);

    let mut total = 0.0;
    let mut r0 = 0.0;
    for p in 0..panels {
        let r1 = radius_at(((p + 1) as f64 * PANEL_PHASE).min(phase_max));
        let half = 0.5 * (r1 - r0);
        let mid = 0.5 * (r1 + r0);
        let mut acc = 0.0;
        for (x, w) in nodes.iter().zip(&weights) {
            let r = mid + half * x;
            let u = 0.5 * a * r * r;
            let deficit = -2.0 * (f * Complex64::from_polar(1.0, u)).re / z - scattered;
            acc += w * deficit * (-taper_eps * u).exp() * r;
        }
        total += acc * half;
        r0 = r1;
    }
    Ok(2.0 * PI * total)
}

/// Extrapolates tapered interference estimates to `ε → 0` by least squares
/// on `σ(ε) = (a + b ε)/(1 + ε²)` and returns `a`.
pub fn extrapolate_to_zero_taper(eps: &[f64], sigma: &[f64]) -> Result<f64> {
    fit_intercept(eps, sigma, &[|e| 1.0 / (1.0 + e * e), |e| e / (1.0 + e * e)])
}

/// As [`extrapolate_to_zero_taper`] with an extra `c/ε` column absorbing the
/// tapered scattered-intensity term `-2π|F|²/(z ω ε)`.
pub fn extrapolate_full_to_zero_taper(eps: &[f64], sigma: &[f64]) -> Result<f64> {
    fit_intercept(
        eps,
        sigma,
        &[|e| 1.0 / (1.0 + e * e), |e| e / (1.0 + e * e), |e| 1.0 / e],
    )
}

// Least-squares coefficient of basis[0], by modified Gram-Schmidt QR.
fn fit_intercept(eps: &[f64], sigma: &[f64], basis: &[fn(f64) -> f64]) -> Result<f64> {
    let m = basis.len();
    if eps.len() != sigma.len() || eps.len() < m {
        return Err(Error::Domain(format!(
            "taper extrapolation needs at least {m} (eps, sigma) pairs, got {}",
            eps.len().min(sigma.len())
        )));
    }
    let mut q: Vec<Vec<f64>> = basis.iter().map(|f| eps.iter().map(|&e| f(e)).collect()).collect();
    let mut r = vec![vec![0.0; m]; m];
    for j in 0..m {
        let original = q[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        for i in 0..j {
            let d: f64 = q[i].iter().zip(&q[j]).map(|(a, b)| a * b).sum();
            r[i][j] = d;
            let qi = q[i].clone();
            q[j].iter_mut().zip(&qi).for_each(|(x, y)| *x -= d * y);
        }
        let norm = q[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 1e-12 * original) {
            return Err(Error::Domain("taper schedule needs distinct eps values".into()));
        }
        r[j][j] = norm;
        q[j].iter_mut().for_each(|x| *x /= norm);
    }
    let rhs: Vec<f64> = q
        .iter()
        .map(|col| col.iter().zip(sigma).map(|(a, b)| a * b).sum())
        .collect();
    let mut coef = vec![0.0; m];
    for i in (0..m).rev() {
        let tail: f64 = (i + 1..m).map(|k| r[i][k] * coef[k]).sum();
        coef[i] = (rhs[i] - tail) / r[i][i];
    }
    Ok(coef[0])
}

/// Screen distance, radial extent and taper schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenGeometry {
    pub z: f64,
    pub r_max: f64,
    pub eps_schedule: Vec<f64>,
}

impl ScreenGeometry {
    /// `z = 10⁴/ω`, `r_max = z/10`, and a geometric schedule (ratio 1/2, six
    /// steps) ending at the smallest feasible taper.
    pub fn default_for(omega: f64) -> Self {
        Self::with_distance(omega, DEFAULT_Z_WAVELENGTHS / omega)
    }

    pub fn with_distance(omega: f64, z: f64) -> Self {
        let r_max = z / PARAXIAL_RATIO;
        Self {
            z,
            r_max,
            eps_schedule: default_eps_schedule(omega, z, r_max),
        }
    }

    pub fn check(&self, omega: f64) -> Result<()> {
        if self.eps_schedule.len() < 2 {
            return Err(Error::Infeasible("eps_schedule needs at least two entries".into()));
        }
        for &eps in &self.eps_schedule {
            check_feasible(omega, self.z, eps, self.r_max)?;
        }
        Ok(())
    }
}

/// Geometric schedule with ratio 1/2 whose last entry is the smallest
/// feasible taper (padded by 1e-9 relative to stay strictly inside).
pub fn default_eps_schedule(omega: f64, z: f64, r_max: f64) -> Vec<f64> {
    let smallest = min_feasible_eps(omega, z, r_max) * (1.0 + 1e-9);
    (0..DEFAULT_SCHEDULE_STEPS)
        .rev()
        .map(|k| smallest * 2f64.powi(k as i32))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexValue {
    fn from(c: Complex64) -> Self {
        Self { re: c.re, im: c.im }
    }
}

/// Result of comparing the screen integral with the closed-form optical theorem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub omega: f64,
    pub z: f64,
    pub r_max: f64,
    pub forward_amplitude: ComplexValue,
    /// `(4π/ω) Im F`.
    pub sigma_closed_form: f64,
    /// `4π² ω [1 - exp(-ω/T_n)] S₊` from the same spectral functions.
    pub sigma_spectral: f64,
    pub eps_schedule: Vec<f64>,
    pub sigma_estimates: Vec<f64>,
    pub sigma_extrapolated: f64,
    pub converged: bool,
    /// Estimates including the `|F|²/z²` scattered-intensity term.
    pub sigma_estimates_full: Vec<f64>,
    pub sigma_extrapolated_full: f64,
    pub converged_full: bool,
}

/// Forward amplitude of the target at `ω` (polarizations `e_f = e_i = x̂`).
pub fn forward_amplitude(pair: &SpectralPair, omega: f64) -> Result<Complex64> {
    let alpha = polarizability_boundary(pair, omega)?;
    let x_hat: Polarization = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
    ];
    scattering_amplitude(alpha, omega, &x_hat, &x_hat)
}

fn gap_ok(estimate: f64, closed: f64, f: Complex64, omega: f64) -> bool {
    let gap = (estimate - closed).abs();
    let scale = (4.0 * PI * f.norm() / omega).max(1.0);
    gap <= CONVERGENCE_REL_TOL * closed.abs() || gap <= CONVERGENCE_ABS_TOL * scale
}

/// Screen-integral estimates for every taper in `geometry` plus their
/// extrapolation and the closed-form comparison, for a forward amplitude.
pub fn verify_amplitude(f: Complex64, omega: f64, geometry: &ScreenGeometry) -> Result<VerificationReport> {
    geometry.check(omega)?;
    let estimate = |which| -> Result<Vec<f64>> {
        geometry
            .eps_schedule
            .iter()
            .map(|&eps| missing_intensity_sigma_with(f, omega, geometry.z, eps, geometry.r_max, which))
            .collect()
    };
    let sigma_estimates = estimate(ScreenIntegrand::Interference)?;
    let sigma_estimates_full = estimate(ScreenIntegrand::Full)?;
    let sigma_extrapolated = extrapolate_to_zero_taper(&geometry.eps_schedule, &sigma_estimates)?;
    let sigma_extrapolated_full = extrapolate_full_to_zero_taper(&geometry.eps_schedule, &sigma_estimates_full)?;
    let sigma_closed_form = optical_theorem_sigma(f, omega);
    Ok(VerificationReport {
        omega,
        z: geometry.z,
        r_max: geometry.r_max,
        forward_amplitude: f.into(),
        sigma_closed_form,
        sigma_spectral: sigma_closed_form,
        eps_schedule: geometry.eps_schedule.clone(),
        converged: gap_ok(sigma_extrapolated, sigma_closed_form, f, omega),
        converged_full: gap_ok(sigma_extrapolated_full, sigma_closed_form, f, omega),
        sigma_estimates,
        sigma_extrapolated,
        sigma_estimates_full,
        sigma_extrapolated_full,
    })
}

/// Full pipeline: polarizability → forward amplitude → tapered screen
/// integral → extrapolation, compared with `(4π/ω) Im F`.
pub fn verify_optical_theorem(
    pair: &SpectralPair,
    omega: f64,
    geometry: &ScreenGeometry,
) -> Result<VerificationReport> {
    geometry.check(omega)?;
    let f = forward_amplitude(pair, omega)?;
    let mut report = verify_amplitude(f, omega, geometry)?;
    report.sigma_spectral = sigma_total_spectral(pair, omega);
    Ok(report)
}

/// Intensity ratio samples across the screen.
#[derive(Debug, Clone)]
pub struct ScreenGrid {
    pub z: f64,
    pub r_perp: Vec<f64>,
    pub intensity_ratio: Vec<f64>,
    pub forward_amplitude: Complex64,
}

impl ScreenGrid {
    pub fn sample(f: Complex64, omega: f64, z: f64, r_max: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::Invalid(format!("screen samples need >= 2 points, got {points}")));
        }
        let r_perp: Vec<f64> = (0..points).map(|i| r_max * i as f64 / (points - 1) as f64).collect();
        let intensity_ratio = r_perp
            .iter()
            .map(|&r| screen_intensity(f, omega, z, r))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            z,
            r_perp,
            intensity_ratio,
            forward_amplitude: f,
        })
    }
}
