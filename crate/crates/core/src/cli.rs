//! Command-line front end: scenario in, CSV/JSON artifacts out.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::medium::{dielectric, extinction, intensity_profile, wavevector, MediumResponse};
use crate::response::{polarizability_boundary, polarizability_dispersion, PolarizabilityCurve};
use crate::scattering::{amplifier_bands, CrossSectionSet};
use crate::scenario::{Prepared, Scenario};
use crate::screen::{forward_amplitude, verify_optical_theorem, ScreenGrid};
use crate::spectral_model::{noise_temperature_from_values, symmetric_spectrum};
use crate::validate::run_suite;

pub const DEFAULT_OUT: &str = "out";

#[derive(Debug, Parser)]
#[command(
    name = "klein-scatter",
    version,
    about = "Dipole scattering off targets with arbitrary level populations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// spectrum.csv: omega, s_plus, s_minus, s_bar, t_noise
    Spectrum(RunArgs),
    /// response.csv: omega, re_alpha, im_alpha
    Response(RunArgs),
    /// cross_sections.csv and bands.json
    CrossSections(RunArgs),
    /// medium.csv and slab.csv
    Medium(RunArgs),
    /// verify.json and screen.csv
    Verify(RunArgs),
    /// Built-in invariant suite
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory (overrides the scenario's `output`)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override `grid.points`
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub quiet: bool,
}

/// A named file body, written only after every artifact of a command exists.
struct Artifact {
    name: &'static str,
    body: String,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for a in artifacts {
        let tmp = dir.join(format!(".{}.tmp", a.name));
        fs::write(&tmp, &a.body)?;
        fs::rename(&tmp, dir.join(a.name))?;
    }
    Ok(())
}

fn prepare(args: &RunArgs) -> Result<Prepared> {
    let mut scenario = Scenario::load(&args.scenario)?;
    if let Some(points) = args.grid_points {
        scenario.grid.points = points;
    }
    scenario.prepare()
}

fn out_dir(args: &RunArgs, p: &Prepared) -> PathBuf {
    args.out
        .clone()
        .or_else(|| p.scenario.output.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn curve(p: &Prepared) -> Result<PolarizabilityCurve> {
    PolarizabilityCurve::from_dispersion(&p.pair, p.scenario.eta)
}

fn spectrum_csv(p: &Prepared) -> String {
    let pair = &p.pair;
    let s_bar = symmetric_spectrum(pair);
    let mut out = String::from("omega,s_plus,s_minus,s_bar,t_noise\n");
    for (i, &w) in pair.grid().iter().enumerate() {
        let (sp, sm) = (pair.s_plus_samples()[i], pair.s_minus_samples()[i]);
        let tn = if w == 0.0 {
            None
        } else {
            noise_temperature_from_values(sp, sm, w)
        };
        let tn = tn.map(num).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{},{}", num(w), num(sp), num(sm), num(s_bar[i]), tn);
    }
    out
}

fn response_csv(c: &PolarizabilityCurve) -> String {
    let mut out = String::from("omega,re_alpha,im_alpha\n");
    for (&w, a) in c.grid().iter().zip(c.alpha()) {
        let _ = writeln!(out, "{},{},{}", num(w), num(a.re), num(a.im));
    }
    out
}

fn cross_sections_csv(set: &CrossSectionSet) -> String {
    let mut out = String::from("omega,sigma_el,sigma_tot,sigma_in,band_flag\n");
    for i in 0..set.grid.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            num(set.grid[i]),
            num(set.sigma_el[i]),
            num(set.sigma_tot[i]),
            num(set.sigma_in[i]),
            set.band_flags[i].as_str()
        );
    }
    out
}

fn medium_csv(m: &MediumResponse) -> String {
    let mut out = String::from("omega,re_eps,im_eps,re_k,im_k,h_exact,h_dilute,dilute_ok\n");
    for i in 0..m.grid.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            num(m.grid[i]),
            num(m.epsilon[i].re),
            num(m.epsilon[i].im),
            num(m.k[i].re),
            num(m.k[i].im),
            num(m.h[i]),
            num(m.h_dilute[i]),
            m.dilute_ok[i]
        );
    }
    out
}

fn alpha_at(p: &Prepared, omega: f64) -> Result<Complex64> {
    if p.scenario.eta > 0.0 {
        polarizability_dispersion(&p.pair, Complex64::new(omega, p.scenario.eta))
    } else {
        polarizability_boundary(&p.pair, omega)
    }
}

/// Slab profile `I(z)/I(0) = exp(-h z)` at the medium frequency. Without an
/// explicit depth the slab spans five attenuation lengths.
fn slab_csv(p: &Prepared) -> Result<String> {
    let plan = p.slab.as_ref().expect("medium table present");
    let density = p.scenario.medium.as_ref().expect("medium table present").density_n;
    let (eps, _) = dielectric(alpha_at(p, plan.omega)?, density);
    let h = extinction(wavevector(eps, plan.omega)?);
    let z_max = plan
        .z_max
        .unwrap_or(if h != 0.0 { 5.0 / h.abs() } else { 1.0 / plan.omega });
    let z: Vec<f64> = (0..plan.z_points)
        .map(|i| z_max * i as f64 / (plan.z_points - 1) as f64)
        .collect();
    let intensity = intensity_profile(2.0, h, &z)?;
    let mut out = String::from("z,intensity_ratio\n");
    for (zi, ii) in z.iter().zip(&intensity) {
        let _ = writeln!(out, "{},{}", num(*zi), num(*ii));
    }
    Ok(out)
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Runs one command, returning the process exit status.
pub fn run(cli: Cli) -> i32 {
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Spectrum(args) => {
            let p = prepare(&args)?;
            let files = [Artifact {
                name: "spectrum.csv",
                body: spectrum_csv(&p),
            }];
            finish(&args, &p, &files)
        }
        Command::Response(args) => {
            let p = prepare(&args)?;
            let files = [Artifact {
                name: "response.csv",
                body: response_csv(&curve(&p)?),
            }];
            finish(&args, &p, &files)
        }
        Command::CrossSections(args) => {
            let p = prepare(&args)?;
            let c = curve(&p)?;
            let files = [
                Artifact {
                    name: "cross_sections.csv",
                    body: cross_sections_csv(&CrossSectionSet::from_curve(&c)),
                },
                Artifact {
                    name: "bands.json",
                    body: json(&amplifier_bands(&c)),
                },
            ];
            finish(&args, &p, &files)
        }
        Command::Medium(args) => {
            let p = prepare(&args)?;
            let Some(spec) = &p.scenario.medium else {
                return Err(Error::Invalid(
                    "the medium command needs a [medium] table with density_n".into(),
                ));
            };
            let m = MediumResponse::build(&curve(&p)?, spec.density_n)?;
            let files = [
                Artifact {
                    name: "medium.csv",
                    body: medium_csv(&m),
                },
                Artifact {
                    name: "slab.csv",
                    body: slab_csv(&p)?,
                },
            ];
            finish(&args, &p, &files)
        }
        Command::Verify(args) => {
            let p = prepare(&args)?;
            let report = verify_optical_theorem(&p.pair, p.screen_omega, &p.screen_geometry)?;
            let f = forward_amplitude(&p.pair, p.screen_omega)?;
            let g = &p.screen_geometry;
            let screen = ScreenGrid::sample(f, p.screen_omega, g.z, g.r_max, p.screen_points)?;
            let mut csv = String::from("r_perp,intensity_ratio\n");
            for (r, i) in screen.r_perp.iter().zip(&screen.intensity_ratio) {
                let _ = writeln!(csv, "{},{}", num(*r), num(*i));
            }
            let files = [
                Artifact {
                    name: "verify.json",
                    body: json(&report),
                },
                Artifact {
                    name: "screen.csv",
                    body: csv,
                },
            ];
            let code = finish(&args, &p, &files)?;
            if !report.converged || !report.converged_full {
                eprintln!(
                    "error: screen estimate {:e} did not converge to the optical theorem value {:e}",
                    report.sigma_extrapolated, report.sigma_closed_form
                );
                return Ok(3);
            }
            if !args.quiet {
                println!(
                    "sigma_tot: closed form {:.10e}, screen {:.10e}",
                    report.sigma_closed_form, report.sigma_extrapolated
                );
            }
            Ok(code)
        }
        Command::Validate(args) => validate(&args),
    }
}

fn finish(args: &RunArgs, p: &Prepared, files: &[Artifact]) -> Result<i32> {
    let dir = out_dir(args, p);
    write_artifacts(&dir, files)?;
    if !args.quiet {
        for f in files {
            println!("wrote {}", dir.join(f.name).display());
        }
    }
    Ok(0)
}

fn validate(args: &ValidateArgs) -> Result<i32> {
    let checks = run_suite()?;
    let mut csv = String::from("suite,check,measured,limit,passed\n");
    for c in &checks {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            c.suite,
            c.name,
            num(c.measured),
            num(c.limit),
            c.passed
        );
    }
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    write_artifacts(
        &dir,
        &[Artifact {
            name: "validate.csv",
            body: csv,
        }],
    )?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    if !args.quiet || failed > 0 {
        println!(
            "{:<11} {:<44} {:>12} {:>10}  result",
            "suite", "check", "measured", "limit"
        );
        for c in &checks {
            println!(
                "{:<11} {:<44} {:>12.3e} {:>10.1e}  {}",
                c.suite,
                c.name,
                c.measured,
                c.limit,
                if c.passed { "pass" } else { "FAIL" }
            );
        }
        println!("{} checks, {} failed", checks.len(), failed);
    }
    Ok(if failed == 0 { 0 } else { 2 })
}
