//! Complex polarizability from the dispersion integral
//! `α(ζ) = ∫ [S₊(ω) - S₋(ω)] / (ω - ζ) dω` (with `ħ = 1`), its closed form
//! for Lorentzian lines, and a Kramers-Kronig consistency check.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate_adaptive, AdaptiveOptions};
use crate::spectral_model::{BroadenedLines, LineSpectrum, SpectralPair};

/// Refinement half-window around `Re ζ`, in units of `max(γ, Im ζ)`.
const REFINE_WIDTHS: f64 = 10.0;

/// Maximum ratio of edge `|Im α|` to its peak accepted by the Kramers-Kronig check.
pub const KK_EDGE_DECAY: f64 = 1e-3;

/// How a [`PolarizabilityCurve`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    DispersionIntegral,
    ClosedFormLorentzian,
}

/// Complex polarizability sampled at `ω + iη` on a real frequency grid.
///
/// `eta == 0` denotes the retarded boundary value `ω + i0⁺`.
#[derive(Debug, Clone)]
pub struct PolarizabilityCurve {
    grid: Vec<f64>,
    alpha: Vec<Complex64>,
    eta: f64,
    provenance: Provenance,
    profile: BroadenedLines,
}

impl PolarizabilityCurve {
    /// Samples the dispersion integral at `ω_j + iη` for every grid point of
    /// `pair`. With `eta == 0` the boundary value is taken, where
    /// `Im α = π (S₊ - S₋)` holds exactly.
    pub fn from_dispersion(pair: &SpectralPair, eta: f64) -> Result<Self> {
        check_eta(eta)?;
        let alpha = pair
            .grid()
            .par_iter()
            .map(|&w| {
                if eta == 0.0 {
                    polarizability_boundary(pair, w)
                } else {
                    polarizability_dispersion(pair, Complex64::new(w, eta))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: pair.grid().to_vec(),
            alpha,
            eta,
            provenance: Provenance::DispersionIntegral,
            profile: pair.profile().clone(),
        })
    }

    /// Analytic curve for the Lorentzian-broadened lines of `pair`, over the
    /// whole real line.
    pub fn closed_form(pair: &SpectralPair, eta: f64) -> Result<Self> {
        check_eta(eta)?;
        let alpha = pair
            .grid()
            .iter()
            .map(|&w| lorentzian_sum(pair.lines(), pair.gamma(), Complex64::new(w, eta)))
            .collect();
        Ok(Self {
            grid: pair.grid().to_vec(),
            alpha,
            eta,
            provenance: Provenance::ClosedFormLorentzian,
            profile: pair.profile().clone(),
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn alpha(&self) -> &[Complex64] {
        &self.alpha
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn profile(&self) -> &BroadenedLines {
        &self.profile
    }

    /// `Im α(ω + iη)` at an arbitrary frequency. Lorentzian lines evaluated at
    /// `ω + iη` are Lorentzians of half-width `γ + η` on the real axis.
    pub fn im_alpha_at(&self, omega: f64) -> f64 {
        PI * self
            .profile
            .difference_with_width(omega, self.profile.gamma() + self.eta)
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return domain(format!("retarded offset eta must be finite and >= 0, got {eta}"));
    }
    Ok(())
}

fn check_upper_half_plane(zeta: Complex64) -> Result<()> {
    if !(zeta.im > 0.0) || !zeta.re.is_finite() || !zeta.im.is_finite() {
        return domain(format!(
            "polarizability is retarded: need Im(zeta) > 0, got zeta = {zeta}"
        ));
    }
    Ok(())
}

/// Dispersion integral over the pair's grid at `ζ` in the upper half-plane.
///
/// Rejects grids whose spacing around `Re ζ` exceeds `Im ζ / 4`.
pub fn polarizability_dispersion(pair: &SpectralPair, zeta: Complex64) -> Result<Complex64> {
    check_upper_half_plane(zeta)?;
    if let Some(spacing) = pair.local_spacing(zeta.re) {
        let limit = zeta.im / 4.0;
        if spacing > limit {
            return Err(Error::GridTooCoarse {
                at: zeta.re,
                spacing,
                limit,
            });
        }
    }
    dispersion_integral(pair, zeta.re, zeta.im)
}

/// Boundary value `α(ω + i0⁺)` of the dispersion integral. The real part is
/// the principal value, the imaginary part `π (S₊(ω) - S₋(ω))`.
pub fn polarizability_boundary(pair: &SpectralPair, omega: f64) -> Result<Complex64> {
    if !omega.is_finite() {
        return domain(format!("frequency must be finite, got {omega}"));
    }
    dispersion_integral(pair, omega, 0.0)
}

/// `Im α(ω + i0⁺) = π (S₊(ω) - S₋(ω))`.
pub fn im_alpha(pair: &SpectralPair, omega: f64) -> f64 {
    PI * pair.profile().difference(omega)
}

// ∫_a^b f(ω)/(ω - ζ) dω with ζ = x0 + iη, η >= 0, computed as
//   ∫ [f(ω) - f(x0)]/(ω - ζ) dω + f(x0) [ln(b - ζ) - ln(a - ζ)]
// so the integrand stays bounded as η → 0.
fn dispersion_integral(pair: &SpectralPair, x0: f64, eta: f64) -> Result<Complex64> {
    let grid = pair.grid();
    let (a, b) = (grid[0], grid[grid.len() - 1]);
    let profile = pair.profile();
    let gamma = profile.gamma();
    let zeta = Complex64::new(x0, eta);
    // with η = 0 the endpoints carry a log singularity handled by subtraction
    let inside = if eta == 0.0 {
        x0 >= a && x0 <= b
    } else {
        x0 > a && x0 < b
    };

    let mut breaks = vec![a, b];
    let mut push = |x: f64| {
        if x > a && x < b {
            breaks.push(x);
        }
    };
    for l in profile.lines().lines() {
        for c in [l.omega, -l.omega] {
            push(c);
            push(c - REFINE_WIDTHS * gamma);
            push(c + REFINE_WIDTHS * gamma);
        }
    }
    let window = REFINE_WIDTHS * gamma.max(eta);
    push(x0);
    push(x0 - window);
    push(x0 + window);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let opts = AdaptiveOptions::default();
    if inside {
        let f0 = profile.difference(x0);
        let est = integrate_adaptive(
            |w| {
                if w == x0 && eta == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                Complex64::new(profile.difference(w) - f0, 0.0) / (Complex64::new(w, 0.0) - zeta)
            },
            &breaks,
            opts,
        )?;
        let log_term = if eta == 0.0 {
            // finite part: ln 0 at a grid endpoint is dropped
            let finite_ln = |d: f64| if d > 0.0 { d.ln() } else { 0.0 };
            Complex64::new(finite_ln(b - x0) - finite_ln(x0 - a), PI)
        } else {
            (Complex64::new(b, 0.0) - zeta).ln() - (Complex64::new(a, 0.0) - zeta).ln()
        };
        Ok(est.value + log_term * f0)
    } else {
        let est = integrate_adaptive(
            |w| Complex64::new(profile.difference(w), 0.0) / (Complex64::new(w, 0.0) - zeta),
            &breaks,
            opts,
        )?;
        Ok(est.value)
    }
}

/// Closed-form dispersion integral over the whole real line for
/// Lorentzian-broadened lines.
///
/// Closing the contour in the lower half-plane picks up the Lorentzian pole
/// at `ω_line - iγ`, so each `S₊` line contributes `w/(ω_line - iγ - ζ)` and
/// each `S₋` line (at `-ω_line`) contributes `-w/(-ω_line - iγ - ζ)`.
pub fn closed_form_lorentzian(lines: &LineSpectrum, gamma: f64, zeta: Complex64) -> Result<Complex64> {
    check_upper_half_plane(zeta)?;
    if !(gamma > 0.0) {
        return domain(format!("gamma must be positive, got {gamma}"));
    }
    Ok(lorentzian_sum(lines, gamma, zeta))
}

fn lorentzian_sum(lines: &LineSpectrum, gamma: f64, zeta: Complex64) -> Complex64 {
    let ig = Complex64::new(0.0, gamma);
    lines
        .lines()
        .iter()
        .map(|l| {
            let plus = Complex64::new(l.omega, 0.0) - ig - zeta;
            let minus = Complex64::new(-l.omega, 0.0) - ig - zeta;
            l.weight * (plus.inv() - minus.inv())
        })
        .sum()
}

/// Reconstructs `Re α` from `Im α` by a principal-value Hilbert transform on
/// the (uniform) curve grid and returns
/// `max |Re α_KK - Re α| / max |Re α|` over the central 80% of the grid.
///
/// The singular point is removed by pairing samples symmetrically about it:
/// `PV ∫ g(ω')/(ω' - ω) dω' = ∫_0 [g(ω+t) - g(ω-t)]/t dt + one-sided rest`.
pub fn kramers_kronig_residual(curve: &PolarizabilityCurve) -> Result<f64> {
    let grid = curve.grid();
    let n = grid.len();
    if n < 16 {
        return domain(format!("Kramers-Kronig check needs at least 16 samples, got {n}"));
    }
    let gamma = curve.profile().gamma();
    if curve.eta() > gamma / 10.0 {
        return domain(format!(
            "Kramers-Kronig check needs eta <= gamma/10 = {}, got {}",
            gamma / 10.0,
            curve.eta()
        ));
    }
    let h = (grid[n - 1] - grid[0]) / (n - 1) as f64;
    if grid.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-6 * h) {
        return domain("Kramers-Kronig check needs a uniform grid");
    }

    let im: Vec<f64> = curve.alpha().iter().map(|a| a.im).collect();
    let re: Vec<f64> = curve.alpha().iter().map(|a| a.re).collect();
    let peak = im.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        let edge = im[0].abs().max(im[n - 1].abs());
        if edge > KK_EDGE_DECAY * peak {
            return domain(format!(
                "Im(alpha) has not decayed at the grid edges: edge/peak = {:e} > {KK_EDGE_DECAY:e}",
                edge / peak
            ));
        }
    }

    let lo = n / 10;
    let hi = n - n / 10;
    let reconstructed: Vec<f64> = (lo..hi).into_par_iter().map(|j| hilbert_at(&im, h, j) / PI).collect();

    let scale = re[lo..hi].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let worst = reconstructed
        .iter()
        .zip(&re[lo..hi])
        .fold(0.0f64, |m, (k, r)| m.max((k - r).abs()));
    if worst == 0.0 {
        return Ok(0.0);
    }
    Ok(worst / scale)
}

// PV ∫ g(ω')/(ω' - ω_j) dω' over the sampled range, trapezoid in the
// symmetric pairing variable plus trapezoid on the one-sided remainder.
fn hilbert_at(g: &[f64], h: f64, j: usize) -> f64 {
    let n = g.len();
    let m = j.min(n - 1 - j);

    let slope2 = if j >= 2 && j + 2 < n {
        2.0 * (-g[j + 2] + 8.0 * g[j + 1] - 8.0 * g[j - 1] + g[j - 2]) / (12.0 * h)
    } else if j >= 1 && j + 1 < n {
        (g[j + 1] - g[j - 1]) / h
    } else {
        0.0
    };

    let mut sum = 0.0;
    if m > 0 {
        sum += 0.5 * slope2 * h;
        for k in 1..m {
            sum += (g[j + k] - g[j - k]) / k as f64;
        }
        sum += 0.5 * (g[j + m] - g[j - m]) / m as f64;
    }

    if j + m < n - 1 {
        // remainder on the right: nodes j+m .. n-1
        let start = j + m;
        let mut rest = 0.5 * g[start] / (start - j) as f64;
        for k in (start + 1)..(n - 1) {
            rest += g[k] / (k - j) as f64;
        }
        rest += 0.5 * g[n - 1] / (n - 1 - j) as f64;
        sum += rest;
    } else if j > m {
        // remainder on the left: nodes 0 .. j-m
        let end = j - m;
        let mut rest = 0.5 * g[end] / -((j - end) as f64);
        for k in 1..end {
            rest += g[k] / -((j - k) as f64);
        }
        rest += 0.5 * g[0] / -(j as f64);
        sum += rest;
    }
    // every term above is g/(k h) times h
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_model::{broaden, line_spectrum, uniform_grid, Line, TargetLevels};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const GAMMA: f64 = 0.01;

    fn pair_for(populations: [f64; 2], min: f64, max: f64, points: usize) -> SpectralPair {
        let target = TargetLevels::two_level(1.0, 1.0, populations).unwrap();
        let grid = uniform_grid(min, max, points).unwrap();
        broaden(&line_spectrum(&target), &grid, GAMMA).unwrap()
    }

    /// Brute-force oracle for one Lorentzian line: the substitution
    /// `ω = c + γ tan θ` turns the line shape into a uniform measure on
    /// `(-π/2, π/2)`; composite Simpson in θ over the whole real line.
    fn brute_force_single_line(center: f64, gamma: f64, zeta: Complex64) -> Complex64 {
        let n = 400_000;
        let h = PI / n as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 1..n {
            let theta = -PI / 2.0 + i as f64 * h;
            let w = center + gamma * theta.tan();
            let coef = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += coef / (Complex64::new(w, 0.0) - zeta);
        }
        acc * h / 3.0 / PI
    }

    #[test]
    fn closed_form_matches_contour_derivation_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let center = rng.gen_range(-2.0..2.0);
            let gamma = rng.gen_range(0.005..0.2);
            let zeta = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(0.05..1.0));
            let lines = LineSpectrum::from_lines(vec![Line {
                omega: center,
                weight: 1.0,
            }])
            .unwrap();
            // closed form includes the S₋ reflection; add the reflected line's oracle too
            let expected = brute_force_single_line(center, gamma, zeta) - brute_force_single_line(-center, gamma, zeta);
            let got = closed_form_lorentzian(&lines, gamma, zeta).unwrap();
            assert!(
                (got - expected).norm() <= 1e-7 * expected.norm().max(1e-3),
                "center {center} gamma {gamma} zeta {zeta}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn closed_form_delta_limit() {
        let lines = LineSpectrum::from_lines(vec![Line {
            omega: 1.0,
            weight: 0.5,
        }])
        .unwrap();
        let zeta = Complex64::new(0.3, 1.0);
        let got = closed_form_lorentzian(&lines, 1e-6, zeta).unwrap();
        let expected = 0.5 / (Complex64::new(1.0, 0.0) - zeta) - 0.5 / (Complex64::new(-1.0, 0.0) - zeta);
        assert!((got - expected).norm() < 1e-5);
        assert_eq!(
            closed_form_lorentzian(&LineSpectrum::default(), 0.01, zeta).unwrap(),
            Complex64::new(0.0, 0.0)
        );
    }

    #[test]
    fn equal_populations_give_zero_alpha() {
        let pair = pair_for([0.5, 0.5], -3.0, 3.0, 4801);
        for zeta in [Complex64::new(1.0, 0.01), Complex64::new(-0.4, 0.2)] {
            assert_eq!(
                polarizability_dispersion(&pair, zeta).unwrap(),
                Complex64::new(0.0, 0.0)
            );
        }
    }

    #[test]
    fn far_upper_half_plane_bound() {
        let pair = pair_for([1.0, 0.0], -3.0, 3.0, 601);
        let lambda = 1e6;
        let a = polarizability_dispersion(&pair, Complex64::new(0.0, lambda)).unwrap();
        // S₊ and S₋ each carry the full line weight
        let total = 2.0 * pair.lines().total_weight();
        assert!(a.norm() <= total / lambda * (1.0 + 1e-6));
    }

    #[test]
    fn dispersion_matches_closed_form_near_line() {
        let pair = pair_for([1.0, 0.0], -60.0, 60.0, 96_001);
        let zeta = Complex64::new(1.0, 0.01);
        let got = polarizability_dispersion(&pair, zeta).unwrap();
        let expected = closed_form_lorentzian(pair.lines(), GAMMA, zeta).unwrap();
        assert!((got - expected).norm() <= 1e-6 * expected.norm(), "{got} vs {expected}");
    }

    #[test]
    fn lower_half_plane_and_coarse_grid_rejected() {
        let pair = pair_for([1.0, 0.0], -3.0, 3.0, 601);
        assert!(matches!(
            polarizability_dispersion(&pair, Complex64::new(1.0, 0.0)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            polarizability_dispersion(&pair, Complex64::new(1.0, 0.001)),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn im_alpha_examples() {
        let ground = pair_for([1.0, 0.0], -3.0, 3.0, 601);
        let peak = 1.0 / (3.0 * GAMMA);
        let got = im_alpha(&ground, 1.0);
        // the reflected line's tail at +ω₀ is (γ/π)/(4 + γ²) times the weight
        let tail = PI / 3.0 * GAMMA / PI / (4.0 + GAMMA * GAMMA);
        assert!((got - (peak - tail)).abs() <= 1e-12 * peak);
        let inverted = pair_for([0.0, 1.0], -3.0, 3.0, 601);
        assert_eq!(im_alpha(&inverted, 1.0), -got);
        let equal = pair_for([0.5, 0.5], -3.0, 3.0, 601);
        assert!(im_alpha(&equal, 1.0).abs() <= 1e-12 * peak);
    }

    #[test]
    fn boundary_value_imaginary_part_is_exact() {
        let pair = pair_for([0.2, 0.8], -3.0, 3.0, 4801);
        for w in [0.5, 0.99, 1.0, 1.013, 2.0] {
            let a = polarizability_boundary(&pair, w).unwrap();
            assert!((a.im - im_alpha(&pair, w)).abs() <= 1e-13 * im_alpha(&pair, 1.0).abs());
        }
    }

    #[test]
    fn boundary_value_matches_closed_form_limit() {
        let pair = pair_for([1.0, 0.0], -60.0, 60.0, 9601);
        for w in [0.9, 0.995, 1.0, 1.004, 1.3] {
            let a = polarizability_boundary(&pair, w).unwrap();
            let ig = Complex64::new(0.0, GAMMA);
            let exact =
                (1.0 / 3.0) * ((Complex64::new(1.0 - w, 0.0) - ig).inv() - (Complex64::new(-1.0 - w, 0.0) - ig).inv());
            assert!((a - exact).norm() <= 1e-6 * exact.norm(), "w = {w}: {a} vs {exact}");
        }
    }

    #[test]
    fn kk_residual_examples() {
        for pops in [[1.0, 0.0], [0.0, 1.0]] {
            let pair = pair_for(pops, -3.0, 3.0, 4801);
            let curve = PolarizabilityCurve::from_dispersion(&pair, 0.0).unwrap();
            let r = kramers_kronig_residual(&curve).unwrap();
            assert!(r <= 1e-3, "residual {r}");
        }
        let zero = PolarizabilityCurve::from_dispersion(&pair_for([0.5, 0.5], -3.0, 3.0, 601), 0.0).unwrap();
        assert_eq!(kramers_kronig_residual(&zero).unwrap(), 0.0);
    }

    #[test]
    fn kk_rejects_undecayed_edges() {
        let target = TargetLevels::two_level(1.0, 1.0, [1.0, 0.0]).unwrap();
        let grid = uniform_grid(-1.25, 1.25, 1001).unwrap();
        let pair = broaden(&line_spectrum(&target), &grid, 0.0125).unwrap();
        let curve = PolarizabilityCurve::from_dispersion(&pair, 0.0).unwrap();
        assert!(kramers_kronig_residual(&curve).is_err());
    }

    #[test]
    fn crossing_symmetry_on_symmetric_grid() {
        let pair = pair_for([0.3, 0.7], -3.0, 3.0, 4801);
        let curve = PolarizabilityCurve::from_dispersion(&pair, 0.0).unwrap();
        let a = curve.alpha();
        let n = a.len();
        for j in (0..n).step_by(97) {
            let mirrored = a[n - 1 - j];
            assert!((a[j] - mirrored.conj()).norm() <= 1e-10 * (1.0 + a[j].norm()));
        }
    }

    #[test]
    fn linearity_over_line_union() {
        let grid = uniform_grid(-3.0, 3.0, 2401).unwrap();
        let l1 = LineSpectrum::from_lines(vec![Line {
            omega: 1.0,
            weight: 0.2,
        }])
        .unwrap();
        let l2 = LineSpectrum::from_lines(vec![Line {
            omega: -0.7,
            weight: 0.5,
        }])
        .unwrap();
        let p1 = broaden(&l1, &grid, GAMMA).unwrap();
        let p2 = broaden(&l2, &grid, GAMMA).unwrap();
        let pu = broaden(&l1.union(&l2), &grid, GAMMA).unwrap();
        for w in [-1.0, 0.2, 0.7, 1.0] {
            let sum = polarizability_boundary(&p1, w).unwrap() + polarizability_boundary(&p2, w).unwrap();
            let joint = polarizability_boundary(&pu, w).unwrap();
            assert!((sum - joint).norm() <= 1e-10 * joint.norm());
        }
    }
}
