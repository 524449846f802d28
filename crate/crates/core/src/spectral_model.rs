//! Quantum target model: energy levels, dipole matrix elements and initial
//! populations, and the spectral functions `S₊`, `S₋` built from them.
//!
//! Units: `ħ = c = k_B = 1`. Frequencies and energies are measured in a
//! reference frequency `ω_ref`, squared dipole elements in `d_ref²`, so the
//! delta-function weights of `S±` carry `d_ref²` and the broadened densities
//! carry `d_ref²/ω_ref`.

use std::f64::consts::PI;

use crate::error::{domain, invalid, Error, Result};

/// Tolerance on `Σ p_I = 1`.
pub const POPULATION_SUM_TOL: f64 = 1e-12;

/// Below this floor a spectral value is treated as absent when forming the
/// noise temperature.
pub const NOISE_FLOOR: f64 = 1e-300;

/// `|ln(S₊/S₋)|` below this value makes the noise temperature undefined.
pub const NOISE_LOG_FLOOR: f64 = 1e-12;

/// Lines whose frequencies differ by less than this (relative to `max(1, |ω|)`)
/// are treated as one spectral line.
pub const LINE_MERGE_TOL: f64 = 1e-12;

/// Lorentzian padding, in units of `gamma`, that a grid must leave around
/// every line.
pub const GRID_PADDING_WIDTHS: f64 = 20.0;

/// Energy levels, squared dipole matrix elements and initial populations of a
/// target.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetLevels {
    energies: Vec<f64>,
    dipole_sq: Vec<Vec<f64>>,
    populations: Vec<f64>,
}

impl TargetLevels {
    /// Builds a target with explicit populations, checking every invariant.
    pub fn new(energies: Vec<f64>, dipole_sq: Vec<Vec<f64>>, populations: Vec<f64>) -> Result<Self> {
        validate_levels(&energies, &dipole_sq)?;
        if populations.len() != energies.len() {
            return invalid(format!(
                "populations has {} entries but there are {} levels",
                populations.len(),
                energies.len()
            ));
        }
        if let Some((i, p)) = populations
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return invalid(format!("population p[{i}] = {p} must be finite and non-negative"));
        }
        let sum: f64 = populations.iter().sum();
        if (sum - 1.0).abs() > POPULATION_SUM_TOL {
            return invalid(format!(
                "populations must sum to 1 within {POPULATION_SUM_TOL:e}, got sum = {sum}"
            ));
        }
        Ok(Self {
            energies,
            dipole_sq,
            populations,
        })
    }

    /// Builds a target in thermal equilibrium at `temperature` (negative values
    /// give inverted populations).
    pub fn thermal(energies: Vec<f64>, dipole_sq: Vec<Vec<f64>>, temperature: f64) -> Result<Self> {
        validate_levels(&energies, &dipole_sq)?;
        let populations = thermal_populations(&energies, temperature)?;
        Self::new(energies, dipole_sq, populations)
    }

    /// Two-level target `{0, omega0}` with `|⟨1|p|0⟩|² = d_sq`.
    pub fn two_level(omega0: f64, d_sq: f64, populations: [f64; 2]) -> Result<Self> {
        Self::new(
            vec![0.0, omega0],
            vec![vec![0.0, d_sq], vec![d_sq, 0.0]],
            populations.to_vec(),
        )
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn dipole_sq(&self) -> &[Vec<f64>] {
        &self.dipole_sq
    }

    pub fn populations(&self) -> &[f64] {
        &self.populations
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Same levels with populations exchanged between level `i` and `j`.
    pub fn with_swapped_populations(&self, i: usize, j: usize) -> Self {
        let mut out = self.clone();
        out.populations.swap(i, j);
        out
    }
}

fn validate_levels(energies: &[f64], dipole_sq: &[Vec<f64>]) -> Result<()> {
    if energies.is_empty() {
        return invalid("target needs at least one energy level");
    }
    if let Some(e) = energies.iter().find(|e| !e.is_finite()) {
        return invalid(format!("energy {e} is not finite"));
    }
    for (i, w) in energies.windows(2).enumerate() {
        if w[1] <= w[0] {
            return invalid(format!(
                "energies must be strictly ascending (degenerate or unordered levels {} and {}: {} >= {})",
                i,
                i + 1,
                w[0],
                w[1]
            ));
        }
    }
    let n = energies.len();
    if dipole_sq.len() != n || dipole_sq.iter().any(|row| row.len() != n) {
        return invalid(format!("dipole_sq must be a {n}x{n} matrix"));
    }
    for i in 0..n {
        for j in 0..n {
            let v = dipole_sq[i][j];
            if !v.is_finite() || v < 0.0 {
                return invalid(format!("dipole_sq[{i}][{j}] = {v} must be finite and non-negative"));
            }
            let t = dipole_sq[j][i];
            if i != j && (v - t).abs() > 1e-12 * v.abs().max(t.abs()) {
                return invalid(format!(
                    "dipole_sq must be symmetric: [{i}][{j}] = {v} but [{j}][{i}] = {t}"
                ));
            }
        }
    }
    Ok(())
}

/// Boltzmann populations `p_I ∝ exp(-E_I/T)`, normalised to one.
///
/// The exponents are shifted by their maximum before exponentiation so that
/// the largest weight is exactly one; negative temperatures are accepted and
/// produce inverted populations.
pub fn thermal_populations(energies: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if energies.is_empty() {
        return invalid("thermal populations need at least one level");
    }
    if temperature == 0.0 || !temperature.is_finite() {
        return domain(format!(
            "temperature must be finite and non-zero (got {temperature}); assign populations explicitly for T = 0"
        ));
    }
    let exponents: Vec<f64> = energies.iter().map(|e| -e / temperature).collect();
    let shift = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = exponents.iter().map(|x| (x - shift).exp()).collect();
    let z: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / z).collect())
}

/// One delta-function component of `S₊`: frequency `(E_F - E_I)/ħ` and weight
/// `p_I |⟨F|p|I⟩|² / 3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub omega: f64,
    pub weight: f64,
}

/// Exact (unbroadened) line content of `S₊`. `S₋` is the same set reflected
/// through `ω = 0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LineSpectrum {
    lines: Vec<Line>,
}

impl LineSpectrum {
    pub fn from_lines(lines: Vec<Line>) -> Result<Self> {
        if let Some(l) = lines
            .iter()
            .find(|l| !l.omega.is_finite() || !l.weight.is_finite() || l.weight < 0.0)
        {
            return invalid(format!(
                "line at omega = {} has invalid weight {} (weights must be finite and >= 0)",
                l.omega, l.weight
            ));
        }
        Ok(Self { lines })
    }

    /// `S₊` lines.
    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    /// `S₋` lines: the `S₊` set with every frequency negated.
    pub fn reflected(&self) -> Vec<Line> {
        self.lines
            .iter()
            .map(|l| Line {
                omega: -l.omega,
                weight: l.weight,
            })
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.lines.iter().map(|l| l.weight).sum()
    }

    /// Concatenation of two line sets.
    pub fn union(&self, other: &LineSpectrum) -> LineSpectrum {
        let mut lines = self.lines.clone();
        lines.extend_from_slice(&other.lines);
        LineSpectrum { lines }
    }

    /// Summed `S₊` delta weight at frequency `omega`.
    pub fn plus_weight_at(&self, omega: f64) -> f64 {
        let tol = LINE_MERGE_TOL * omega.abs().max(1.0);
        self.lines
            .iter()
            .filter(|l| (l.omega - omega).abs() <= tol)
            .map(|l| l.weight)
            .sum()
    }

    /// Summed `S₋` delta weight at frequency `omega`.
    pub fn minus_weight_at(&self, omega: f64) -> f64 {
        self.plus_weight_at(-omega)
    }

    /// Smallest and largest frequency over both the `S₊` and `S₋` sets.
    pub fn frequency_span(&self) -> Option<(f64, f64)> {
        let max_abs = self
            .lines
            .iter()
            .map(|l| l.omega.abs())
            .fold(None, |acc: Option<f64>, w| Some(acc.map_or(w, |a| a.max(w))))?;
        Some((-max_abs, max_abs))
    }

    /// Distinct positive frequencies carrying weight in `S₊` or `S₋`.
    pub fn positive_frequencies(&self) -> Vec<f64> {
        let mut freqs: Vec<f64> = self.lines.iter().map(|l| l.omega.abs()).filter(|w| *w > 0.0).collect();
        freqs.sort_by(f64::total_cmp);
        let mut out: Vec<f64> = Vec::with_capacity(freqs.len());
        for w in freqs {
            match out.last() {
                Some(&last) if (w - last).abs() <= LINE_MERGE_TOL * w.max(1.0) => {}
                _ => out.push(w),
            }
        }
        out
    }
}

/// Exact line content of a target's dipole spectral functions.
///
/// One `S₊` line per ordered pair `(I, F)`, `I ≠ F`; lines with zero weight
/// are omitted. Diagonal dipole entries are ignored.
pub fn line_spectrum(target: &TargetLevels) -> LineSpectrum {
    let n = target.len();
    let mut lines = Vec::new();
    for i in 0..n {
        let p = target.populations[i];
        if p == 0.0 {
            continue;
        }
        for f in 0..n {
            if f == i {
                continue;
            }
            let d = target.dipole_sq[i][f];
            if d == 0.0 {
                continue;
            }
            lines.push(Line {
                omega: target.energies[f] - target.energies[i],
                weight: p * d / 3.0,
            });
        }
    }
    LineSpectrum { lines }
}

/// Something that can report `S₊(ω)` and `S₋(ω)`: exact delta weights for a
/// [`LineSpectrum`], densities for a broadened spectrum.
pub trait SpectralDensity {
    fn s_plus(&self, omega: f64) -> f64;
    fn s_minus(&self, omega: f64) -> f64;
}

impl SpectralDensity for LineSpectrum {
    fn s_plus(&self, omega: f64) -> f64 {
        self.plus_weight_at(omega)
    }

    fn s_minus(&self, omega: f64) -> f64 {
        self.minus_weight_at(omega)
    }
}

// Signed weights of S₊ - S₋, merged within LINE_MERGE_TOL; zero weights dropped.
fn net_lines(lines: &LineSpectrum) -> Vec<Line> {
    let mut signed: Vec<Line> = lines.lines().to_vec();
    signed.extend(lines.reflected().into_iter().map(|l| Line {
        omega: l.omega,
        weight: -l.weight,
    }));
    signed.sort_by(|x, y| x.omega.total_cmp(&y.omega));
    let mut net: Vec<Line> = Vec::new();
    for l in signed {
        match net.last_mut() {
            Some(last) if (l.omega - last.omega).abs() <= LINE_MERGE_TOL * l.omega.abs().max(1.0) => {
                last.weight += l.weight;
            }
            _ => net.push(l),
        }
    }
    net.retain(|l| l.weight != 0.0);
    net
}

/// Normalised Lorentzian of half-width `gamma` centred at zero.
#[inline]
pub fn lorentzian(x: f64, gamma: f64) -> f64 {
    gamma / PI / (x * x + gamma * gamma)
}

/// A line set in which every delta function is replaced by a Lorentzian of
/// half-width `gamma`. Evaluates `S±` at arbitrary frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct BroadenedLines {
    lines: LineSpectrum,
    gamma: f64,
    // S₊ - S₋ as signed weights at merged frequencies
    net: Vec<Line>,
}

impl BroadenedLines {
    pub fn new(lines: LineSpectrum, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return domain(format!("broadening gamma must be positive and finite, got {gamma}"));
        }
        let net = net_lines(&lines);
        Ok(Self { lines, gamma, net })
    }

    pub fn lines(&self) -> &LineSpectrum {
        &self.lines
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `S₊(ω) - S₋(ω)` with Lorentzians of half-width `width` instead of `gamma`.
    pub fn difference_with_width(&self, omega: f64, width: f64) -> f64 {
        self.net
            .iter()
            .map(|l| l.weight * lorentzian(omega - l.omega, width))
            .sum()
    }

    /// `S₊(ω) - S₋(ω)`. Coincident `S₊` and `S₋` lines cancel exactly.
    pub fn difference(&self, omega: f64) -> f64 {
        self.difference_with_width(omega, self.gamma)
    }
}

impl SpectralDensity for BroadenedLines {
    fn s_plus(&self, omega: f64) -> f64 {
        self.lines
            .lines()
            .iter()
            .map(|l| l.weight * lorentzian(omega - l.omega, self.gamma))
            .sum()
    }

    fn s_minus(&self, omega: f64) -> f64 {
        self.lines
            .lines()
            .iter()
            .map(|l| l.weight * lorentzian(omega + l.omega, self.gamma))
            .sum()
    }
}

/// Grid-sampled, Lorentzian-broadened `S₊` and `S₋`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPair {
    grid: Vec<f64>,
    s_plus: Vec<f64>,
    s_minus: Vec<f64>,
    profile: BroadenedLines,
}

impl SpectralPair {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn s_plus_samples(&self) -> &[f64] {
        &self.s_plus
    }

    pub fn s_minus_samples(&self) -> &[f64] {
        &self.s_minus
    }

    pub fn gamma(&self) -> f64 {
        self.profile.gamma
    }

    /// The analytic broadened spectrum behind the samples.
    pub fn profile(&self) -> &BroadenedLines {
        &self.profile
    }

    pub fn lines(&self) -> &LineSpectrum {
        &self.profile.lines
    }

    /// Grid interval containing `omega`, with spacing; `None` outside the grid.
    pub fn local_spacing(&self, omega: f64) -> Option<f64> {
        local_spacing(&self.grid, omega)
    }
}

impl SpectralDensity for SpectralPair {
    fn s_plus(&self, omega: f64) -> f64 {
        self.profile.s_plus(omega)
    }

    fn s_minus(&self, omega: f64) -> f64 {
        self.profile.s_minus(omega)
    }
}

pub(crate) fn local_spacing(grid: &[f64], omega: f64) -> Option<f64> {
    let n = grid.len();
    if n < 2 || omega < grid[0] || omega > grid[n - 1] {
        return None;
    }
    let idx = grid.partition_point(|&g| g < omega);
    let spacing = if idx == 0 {
        grid[1] - grid[0]
    } else if idx >= n {
        grid[n - 1] - grid[n - 2]
    } else if grid[idx] == omega {
        let left = if idx > 0 { grid[idx] - grid[idx - 1] } else { 0.0 };
        let right = if idx + 1 < n { grid[idx + 1] - grid[idx] } else { 0.0 };
        left.max(right)
    } else {
        grid[idx] - grid[idx - 1]
    };
    Some(spacing)
}

pub(crate) fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return invalid(format!("frequency grid needs at least 2 points, got {}", grid.len()));
    }
    if grid.iter().any(|g| !g.is_finite()) {
        return invalid("frequency grid contains non-finite values");
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("frequency grid must be strictly ascending");
    }
    Ok(())
}

/// `points` equally spaced samples from `min` to `max` inclusive.
pub fn uniform_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return invalid(format!("grid points must be >= 2, got {points}"));
    }
    if !(min < max) || !min.is_finite() || !max.is_finite() {
        return invalid(format!("grid requires finite min < max, got min = {min}, max = {max}"));
    }
    let step = (max - min) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| if i == points - 1 { max } else { min + step * i as f64 })
        .collect())
}

/// Replaces each delta function by a Lorentzian of half-width `gamma` and
/// samples `S₊`, `S₋` on `grid`.
///
/// The grid must extend at least `20 gamma` beyond every line frequency of
/// both `S₊` and `S₋`.
pub fn broaden(lines: &LineSpectrum, grid: &[f64], gamma: f64) -> Result<SpectralPair> {
    let profile = BroadenedLines::new(lines.clone(), gamma)?;
    validate_grid(grid)?;
    if let Some((lo, hi)) = lines.frequency_span() {
        let pad = GRID_PADDING_WIDTHS * gamma;
        let (needed_min, needed_max) = (lo - pad, hi + pad);
        let (grid_min, grid_max) = (grid[0], grid[grid.len() - 1]);
        if grid_min > needed_min || grid_max < needed_max {
            return Err(Error::GridCoverage {
                grid_min,
                grid_max,
                needed_min,
                needed_max,
            });
        }
    }
    let s_plus = grid.iter().map(|&w| profile.s_plus(w)).collect();
    let s_minus = grid.iter().map(|&w| profile.s_minus(w)).collect();
    Ok(SpectralPair {
        grid: grid.to_vec(),
        s_plus,
        s_minus,
        profile,
    })
}

/// Maximum relative deviation of the exact line weights from the
/// detailed-balance ratio `S₋(ω)/S₊(ω) = exp(-ω/T)`, over every positive
/// line frequency. A frequency with `S₋ > 0` but `S₊ = 0` gives `+∞`.
pub fn detailed_balance_residual(lines: &LineSpectrum, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return domain(format!(
            "detailed balance check needs a positive finite temperature, got {temperature}"
        ));
    }
    let mut worst: f64 = 0.0;
    for omega in lines.positive_frequencies() {
        let sp = lines.plus_weight_at(omega);
        let sm = lines.minus_weight_at(omega);
        if sp == 0.0 && sm == 0.0 {
            continue;
        }
        let boltzmann = (-omega / temperature).exp();
        let residual = if sp == 0.0 || boltzmann == 0.0 {
            if sm == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (sm / sp - boltzmann).abs() / boltzmann
        };
        worst = worst.max(residual);
    }
    Ok(worst)
}

/// Noise temperature from a pair of spectral values: `T_n = ω / ln(S₊/S₋)`.
///
/// `None` when either value is below [`NOISE_FLOOR`] or the logarithm is
/// smaller than [`NOISE_LOG_FLOOR`] in magnitude.
pub fn noise_temperature_from_values(s_plus: f64, s_minus: f64, omega: f64) -> Option<f64> {
    if !(s_plus.min(s_minus) >= NOISE_FLOOR) {
        return None;
    }
    let log_ratio = (s_plus / s_minus).ln();
    if !(log_ratio.abs() >= NOISE_LOG_FLOOR) {
        return None;
    }
    Some(omega / log_ratio)
}

/// Frequency-dependent noise temperature of an exact or broadened spectrum.
/// `Ok(None)` means undefined (the `T_n → ±∞` crossing or a vanishing side).
pub fn noise_temperature<S: SpectralDensity + ?Sized>(spectrum: &S, omega: f64) -> Result<Option<f64>> {
    if omega == 0.0 || !omega.is_finite() {
        return domain(format!("noise temperature needs finite omega != 0, got {omega}"));
    }
    Ok(noise_temperature_from_values(
        spectrum.s_plus(omega),
        spectrum.s_minus(omega),
        omega,
    ))
}

/// `S̄ = (S₊ + S₋)/2` at every grid sample.
pub fn symmetric_spectrum(pair: &SpectralPair) -> Vec<f64> {
    pair.s_plus
        .iter()
        .zip(&pair.s_minus)
        .map(|(p, m)| 0.5 * (p + m))
        .collect()
}
