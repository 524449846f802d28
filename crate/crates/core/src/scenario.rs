//! Declarative scenario files (TOML). Unknown keys are rejected.
//!
//! ```toml
//! energies = [0.0, 1.0]
//! dipole_sq = [[0.0, 1.0], [1.0, 0.0]]
//! populations = [0.0, 1.0]      # or: temperature = -2.0
//! gamma = 0.01
//! eta = 0.0                     # optional
//!
//! [grid]
//! min = -3.0
//! max = 3.0
//! points = 4801
//!
//! [medium]                      # optional
//! density_n = 1e-6
//! omega = 1.0                   # optional, slab frequency
//! z_max = 1e5                   # optional
//! z_points = 101                # optional
//!
//! [screen]                      # optional
//! omega = 1.0                   # optional
//! z = 1e4                       # optional, default 1e4/omega
//! r_max = 1e3                   # optional, default z/10
//! eps_schedule = [ ... ]        # optional, default geometric ratio 1/2
//! points = 201                  # optional, screen CSV samples
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{invalid, Error, Result};
use crate::screen::{check_geometry, default_eps_schedule, ScreenGeometry, DEFAULT_Z_WAVELENGTHS, PARAXIAL_RATIO};
use crate::spectral_model::{broaden, line_spectrum, uniform_grid, LineSpectrum, SpectralPair, TargetLevels};

pub const DEFAULT_Z_POINTS: usize = 101;
pub const DEFAULT_SCREEN_POINTS: usize = 201;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSpec {
    pub density_n: f64,
    pub omega: Option<f64>,
    pub z_max: Option<f64>,
    pub z_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScreenSpec {
    pub omega: Option<f64>,
    pub z: Option<f64>,
    pub r_max: Option<f64>,
    pub eps_schedule: Option<Vec<f64>>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub energies: Vec<f64>,
    pub dipole_sq: Vec<Vec<f64>>,
    pub populations: Option<Vec<f64>>,
    pub temperature: Option<f64>,
    pub gamma: f64,
    #[serde(default)]
    pub eta: f64,
    pub grid: GridSpec,
    pub medium: Option<MediumSpec>,
    pub screen: Option<ScreenSpec>,
    pub output: Option<PathBuf>,
}

/// Slab depths and frequency resolved from a [`MediumSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct SlabPlan {
    pub omega: f64,
    pub z_max: Option<f64>,
    pub z_points: usize,
}

/// A scenario whose every table has passed its preconditions.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub scenario: Scenario,
    pub target: TargetLevels,
    pub lines: LineSpectrum,
    pub pair: SpectralPair,
    pub slab: Option<SlabPlan>,
    pub screen_omega: f64,
    pub screen_geometry: ScreenGeometry,
    pub screen_points: usize,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Invalid(format!("scenario: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn target(&self) -> Result<TargetLevels> {
        match (&self.populations, self.temperature) {
            (Some(p), None) => TargetLevels::new(self.energies.clone(), self.dipole_sq.clone(), p.clone()),
            (None, Some(t)) => TargetLevels::thermal(self.energies.clone(), self.dipole_sq.clone(), t),
            (Some(_), Some(_)) => invalid("scenario sets both `populations` and `temperature`; give exactly one"),
            (None, None) => invalid("scenario needs either `populations` or `temperature`"),
        }
    }

    /// Validates every table before any computation.
    pub fn prepare(self) -> Result<Prepared> {
        let g = &self.grid;
        if g.points < 2 {
            return invalid(format!("grid.points must be >= 2, got {}", g.points));
        }
        if !(g.min < g.max) || !g.min.is_finite() || !g.max.is_finite() {
            return invalid(format!("grid.min < grid.max required, got [{}, {}]", g.min, g.max));
        }
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return invalid(format!("eta must be finite and >= 0, got {}", self.eta));
        }
        let target = self.target()?;
        let lines = line_spectrum(&target);
        let grid = uniform_grid(g.min, g.max, g.points)?;
        let pair = broaden(&lines, &grid, self.gamma)?;
        if self.eta > 0.0 {
            let spacing = (g.max - g.min) / (g.points - 1) as f64;
            if spacing > self.eta / 4.0 {
                return Err(Error::GridTooCoarse {
                    at: g.min,
                    spacing,
                    limit: self.eta / 4.0,
                });
            }
        }
        let reference = reference_frequency(&lines);

        let slab = match &self.medium {
            None => None,
            Some(m) => {
                if !(m.density_n > 0.0) || !m.density_n.is_finite() {
                    return invalid(format!("medium.density_n must be > 0, got {}", m.density_n));
                }
                let omega = m.omega.unwrap_or(reference);
                check_sampled_frequency("medium.omega", omega, g)?;
                if let Some(z) = m.z_max {
                    if !(z > 0.0) || !z.is_finite() {
                        return invalid(format!("medium.z_max must be > 0, got {z}"));
                    }
                }
                let z_points = m.z_points.unwrap_or(DEFAULT_Z_POINTS);
                if z_points < 2 {
                    return invalid(format!("medium.z_points must be >= 2, got {z_points}"));
                }
                Some(SlabPlan {
                    omega,
                    z_max: m.z_max,
                    z_points,
                })
            }
        };

        let spec = self.screen.clone().unwrap_or(ScreenSpec {
            omega: None,
            z: None,
            r_max: None,
            eps_schedule: None,
            points: None,
        });
        let screen_omega = spec.omega.unwrap_or(reference);
        check_sampled_frequency("screen.omega", screen_omega, g)?;
        let z = spec.z.unwrap_or(DEFAULT_Z_WAVELENGTHS / screen_omega);
        let r_max = spec.r_max.unwrap_or(z / PARAXIAL_RATIO);
        let eps_schedule = match spec.eps_schedule {
            Some(s) => s,
            None => {
                check_geometry(screen_omega, z, r_max)?;
                default_eps_schedule(screen_omega, z, r_max)
            }
        };
        let screen_geometry = ScreenGeometry { z, r_max, eps_schedule };
        screen_geometry.check(screen_omega)?;
        let screen_points = spec.points.unwrap_or(DEFAULT_SCREEN_POINTS);
        if screen_points < 2 {
            return invalid(format!("screen.points must be >= 2, got {screen_points}"));
        }

        Ok(Prepared {
            scenario: self,
            target,
            lines,
            pair,
            slab,
            screen_omega,
            screen_geometry,
            screen_points,
        })
    }
}

fn check_sampled_frequency(name: &str, omega: f64, grid: &GridSpec) -> Result<()> {
    if !(omega > 0.0) || omega < grid.min || omega > grid.max {
        return invalid(format!(
            "{name} = {omega} must be positive and inside the grid [{}, {}]",
            grid.min, grid.max
        ));
    }
    Ok(())
}

/// Positive line frequency with the largest combined `S₊ + S₋` weight; 1 when
/// the target has no lines.
pub fn reference_frequency(lines: &LineSpectrum) -> f64 {
    lines
        .positive_frequencies()
        .into_iter()
        .map(|w| (w, lines.plus_weight_at(w) + lines.minus_weight_at(w)))
        .fold(None, |best: Option<(f64, f64)>, (w, s)| match best {
            Some((_, bs)) if bs >= s => best,
            _ => Some((w, s)),
        })
        .map_or(1.0, |(w, _)| w)
}
