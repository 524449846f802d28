//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;
use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use klein_scatter::medium::{dielectric, extinction, intensity_profile, wavevector};
use klein_scatter::quadrature::gauss_legendre;
use klein_scatter::response::{
    closed_form_lorentzian, kramers_kronig_residual, polarizability_boundary, polarizability_dispersion,
    PolarizabilityCurve,
};
use klein_scatter::scattering::{scattering_amplitude, sigma_elastic, sigma_total_forms, sigma_total_optical};
use klein_scatter::screen::{verify_amplitude, verify_optical_theorem, ScreenGeometry};
use klein_scatter::spectral_model::{
    broaden, detailed_balance_residual, line_spectrum, noise_temperature, noise_temperature_from_values,
    thermal_populations, uniform_grid, LineSpectrum, SpectralDensity, SpectralPair, TargetLevels,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GAMMA: f64 = 0.01;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn relative(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn lorentz(x: f64, gamma: f64) -> f64 {
    gamma / PI / (x * x + gamma * gamma)
}

fn two_level_pair(populations: [f64; 2], min: f64, max: f64, points: usize) -> SpectralPair {
    let target = TargetLevels::two_level(1.0, 1.0, populations).unwrap();
    broaden(&line_spectrum(&target), &uniform_grid(min, max, points).unwrap(), GAMMA).unwrap()
}

fn random_ladder(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = rng.gen_range(2..=5);
    let mut energies = vec![0.0];
    for _ in 1..n {
        let last = *energies.last().unwrap();
        energies.push(last + rng.gen_range(0.2..3.0));
    }
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = rng.gen_range(0.1..2.0);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    (energies, d)
}

fn random_populations(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|x| x / sum).collect()
}

/// Fully inverted two-level target at line centre: optical form, spectral
/// form and screen integral all negative and mutually within 1e-3.
fn klein_paradox() -> Outcome {
    let start = Instant::now();
    let pair = two_level_pair([0.0, 1.0], -3.0, 3.0, 4801);
    let omega = 1.0;
    // S₊ has the emission line at -1, S₋ its reflection at +1, both weight 1/3
    let (sp, sm) = (lorentz(omega + 1.0, GAMMA) / 3.0, lorentz(omega - 1.0, GAMMA) / 3.0);
    let oracle = 4.0 * PI * PI * omega * (sp - sm);

    let alpha = polarizability_boundary(&pair, omega).unwrap();
    let optical = sigma_total_optical(alpha, omega);
    let spectral = sigma_total_forms(pair.s_plus(omega), pair.s_minus(omega), omega).exponential;
    let report = verify_optical_theorem(&pair, omega, &ScreenGeometry::default_for(omega)).unwrap();
    let screen = report.sigma_extrapolated;
    let elapsed = start.elapsed();

    let values = [optical, spectral, screen];
    let gap = values
        .iter()
        .flat_map(|a| values.iter().map(move |b| relative(*a, *b)))
        .chain(values.iter().map(|v| relative(*v, oracle)))
        .fold(0.0, f64::max);
    let passed = values.iter().all(|v| *v < 0.0) && gap <= 1e-3 && elapsed < Duration::from_secs(5);
    outcome(
        passed,
        format!(
            "sigma_tot(omega0): optical {optical:.8e}, spectral {spectral:.8e}, screen {screen:.8e}; \
             max rel gap {gap:.2e} (<= 1e-3); {elapsed:.2?} (< 5 s)"
        ),
    )
}

/// Screen integral against `(4π/ω) Im F` for random amplitudes of both signs.
fn optical_theorem_closure() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let omega = 1.0;
    let geometry = ScreenGeometry::with_distance(omega, 1e4 / omega);
    let mut worst: f64 = 0.0;
    let (mut positive, mut negative) = (0, 0);
    for k in 0..24 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let f = Complex64::new(rng.gen_range(-5.0..5.0), sign * rng.gen_range(0.05..5.0));
        let r = verify_amplitude(f, omega, &geometry).unwrap();
        let oracle = 4.0 * PI * f.im / omega;
        worst = worst.max(relative(r.sigma_extrapolated, oracle));
        if f.im > 0.0 {
            positive += 1;
        } else {
            negative += 1;
        }
    }
    let elapsed = start.elapsed();
    let passed = worst <= 1e-3 && positive > 0 && negative > 0 && elapsed < Duration::from_secs(10);
    outcome(
        passed,
        format!("24 amplitudes ({positive} Im F > 0, {negative} Im F < 0): max rel gap {worst:.2e} (<= 1e-3); {elapsed:.2?} (< 10 s)"),
    )
}

/// Optical and spectral `σ_tot` on random multi-level targets.
fn identity_chain() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut chain: f64 = 0.0;
    let mut forms: f64 = 0.0;
    let mut points = 0usize;
    for _ in 0..50 {
        let (e, d) = random_ladder(&mut rng);
        let p = random_populations(&mut rng, e.len());
        let top = *e.last().unwrap();
        let lines = line_spectrum(&TargetLevels::new(e, d, p).unwrap());
        let pair = broaden(&lines, &uniform_grid(-top - 1.0, top + 1.0, 1201).unwrap(), GAMMA).unwrap();
        let curve = PolarizabilityCurve::from_dispersion(&pair, 0.0).unwrap();
        for (&w, &a) in curve.grid().iter().zip(curve.alpha()) {
            if w <= 0.0 {
                continue;
            }
            let (sp, sm) = (pair.s_plus(w), pair.s_minus(w));
            if noise_temperature_from_values(sp, sm, w).is_none() {
                continue;
            }
            let f = sigma_total_forms(sp, sm, w);
            chain = chain.max(relative(sigma_total_optical(a, w), f.exponential));
            forms = forms.max(relative(f.exponential, f.hyperbolic));
            points += 1;
        }
    }
    outcome(
        chain <= 1e-8 && forms <= 1e-12,
        format!("50 targets, {points} points: optical vs spectral {chain:.2e} (<= 1e-8), exp vs tanh {forms:.2e} (<= 1e-12)"),
    )
}

/// Thermal ladders satisfy detailed balance and recover `T` from `T_n`.
fn detailed_balance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut residual: f64 = 0.0;
    let mut oracle_residual: f64 = 0.0;
    let mut recovery: f64 = 0.0;
    for _ in 0..120 {
        let (e, d) = random_ladder(&mut rng);
        let t = 10f64.powf(rng.gen_range(-1.0..2.0));
        let target = TargetLevels::thermal(e.clone(), d.clone(), t).unwrap();
        // independent Boltzmann weights
        let boltz: Vec<f64> = e.iter().map(|x| (-(x - e[0]) / t).exp()).collect();
        let z: f64 = boltz.iter().sum();
        let lib = thermal_populations(&e, t).unwrap();
        oracle_residual = oracle_residual.max(
            boltz
                .iter()
                .zip(&lib)
                .map(|(b, p)| relative(b / z, *p))
                .fold(0.0, f64::max),
        );
        let lines: LineSpectrum = line_spectrum(&target);
        residual = residual.max(detailed_balance_residual(&lines, t).unwrap());
        for w in lines.positive_frequencies() {
            if let Some(tn) = noise_temperature(&lines, w).unwrap() {
                recovery = recovery.max(relative(tn, t));
            }
        }
    }
    outcome(
        residual <= 1e-12 && recovery <= 1e-10 && oracle_residual <= 1e-12,
        format!(
            "120 ladders, T in [0.1, 100]: balance residual {residual:.2e} (<= 1e-12), \
             T_n recovery {recovery:.2e} (<= 1e-10), populations vs Boltzmann {oracle_residual:.2e}"
        ),
    )
}

/// `sign σ_tot = sign T_n` over population ratios and frequencies.
fn sign_theorem() -> Outcome {
    let mut ratios: Vec<Option<f64>> = (0..=100).map(|k| Some(k as f64 * 0.1)).collect();
    ratios.push(None);
    let mut checked = 0usize;
    let mut violations = 0usize;
    let mut crossing_mismatch = 0usize;
    for ratio in ratios {
        let (pg, pe) = match ratio {
            Some(r) => (1.0 / (1.0 + r), r / (1.0 + r)),
            None => (0.0, 1.0),
        };
        let pair = two_level_pair([pg, pe], -3.0, 3.0, 1201);
        let curve = PolarizabilityCurve::from_dispersion(&pair, 0.0).unwrap();
        let mut prev: Option<(f64, Option<f64>)> = None;
        for (&w, &a) in curve.grid().iter().zip(curve.alpha()) {
            if !(0.5..=1.5).contains(&w) {
                continue;
            }
            let sigma = sigma_total_optical(a, w);
            let tn = noise_temperature(&pair, w).unwrap();
            if let Some(t) = tn {
                if sigma != 0.0 {
                    checked += 1;
                    if sigma.signum() != t.signum() {
                        violations += 1;
                    }
                }
            }
            if let Some((ps, pt)) = prev {
                let sigma_flips = ps * sigma < 0.0;
                let tn_flips = match (pt, tn) {
                    (Some(x), Some(y)) => x * y < 0.0,
                    _ => sigma_flips,
                };
                if sigma_flips != tn_flips {
                    crossing_mismatch += 1;
                }
            }
            prev = Some((sigma, tn));
        }
    }
    outcome(
        violations == 0 && crossing_mismatch == 0 && checked > 0,
        format!("102 population ratios, {checked} points: {violations} sign violations, {crossing_mismatch} misplaced zero crossings"),
    )
}

/// Solid-angle integral of the polarization-resolved cross section.
fn rayleigh_closure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (x, wx) = gauss_legendre(24);
    let n_phi = 32;
    let e_i = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
    ];
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let alpha = Complex64::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        let omega = rng.gen_range(0.01..5.0);
        let mut total = 0.0;
        for (&c, &wc) in x.iter().zip(&wx) {
            let s = (1.0 - c * c).sqrt();
            for j in 0..n_phi {
                let phi = 2.0 * PI * j as f64 / n_phi as f64;
                // transverse basis for outgoing direction (θ, φ)
                let theta_hat = [c * phi.cos(), c * phi.sin(), -s];
                let phi_hat = [-phi.sin(), phi.cos(), 0.0];
                let mut dsigma = 0.0;
                for e in [theta_hat, phi_hat] {
                    let e_f = e.map(|v| Complex64::new(v, 0.0));
                    dsigma += scattering_amplitude(alpha, omega, &e_i, &e_f).unwrap().norm_sqr();
                }
                total += wc * dsigma * 2.0 * PI / n_phi as f64;
            }
        }
        worst = worst.max(relative(total, sigma_elastic(alpha, omega)));
    }
    outcome(
        worst <= 1e-9,
        format!("20 (alpha, omega): max rel error {worst:.2e} (<= 1e-9)"),
    )
}

fn lorentzian_closed_form_oracle(lines: &LineSpectrum, zeta: Complex64) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    for l in lines.lines() {
        let pole_plus = Complex64::new(l.omega, -GAMMA);
        let pole_minus = Complex64::new(-l.omega, -GAMMA);
        sum += l.weight / (pole_plus - zeta) - l.weight / (pole_minus - zeta);
    }
    sum
}

/// Dispersion quadrature against the closed form; Kramers-Kronig closure.
fn dispersion_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (e, d) = random_ladder(&mut rng);
        let p = random_populations(&mut rng, e.len());
        let top = *e.last().unwrap();
        let lines = line_spectrum(&TargetLevels::new(e, d, p).unwrap());
        let eta = rng.gen_range(0.02..0.5);
        let half = 60.0 * top;
        let points = (2.0 * half / (eta / 4.0)).ceil() as usize + 1;
        let pair = broaden(&lines, &uniform_grid(-half, half, points).unwrap(), GAMMA).unwrap();
        let zeta = Complex64::new(rng.gen_range(-1.2 * top..1.2 * top), eta);
        let quad = polarizability_dispersion(&pair, zeta).unwrap();
        let oracle = lorentzian_closed_form_oracle(&lines, zeta);
        let library = closed_form_lorentzian(&lines, GAMMA, zeta).unwrap();
        worst = worst.max((quad - oracle).norm() / oracle.norm());
        worst = worst.max((library - oracle).norm() / oracle.norm());
    }
    let mut kk: f64 = 0.0;
    for populations in [[1.0, 0.0], [0.0, 1.0], [0.8, 0.2]] {
        let curve = PolarizabilityCurve::from_dispersion(&two_level_pair(populations, -3.0, 3.0, 4801), 0.0).unwrap();
        kk = kk.max(kramers_kronig_residual(&curve).unwrap());
    }
    outcome(
        worst <= 1e-6 && kk <= 1e-3,
        format!("100 (lines, zeta): max rel gap {worst:.2e} (<= 1e-6); Kramers-Kronig residual {kk:.2e} (<= 1e-3)"),
    )
}

/// `|h_exact - n σ_tot| / |n σ_tot|` is first order in `n`; slab gain is exponential.
fn dilute_medium() -> Outcome {
    let ns: Vec<f64> = (0..5).map(|k| 1e-7 * 10f64.powf(k as f64 * 0.5)).collect();
    let mut slopes = Vec::new();
    let mut growth: f64 = 0.0;
    for populations in [[1.0, 0.0], [0.0, 1.0]] {
        let pair = two_level_pair(populations, -3.0, 3.0, 4801);
        // off line centre, where Re α ≠ 0
        let omega = 1.02;
        let alpha = polarizability_boundary(&pair, omega).unwrap();
        let (lx, ly): (Vec<f64>, Vec<f64>) = ns
            .iter()
            .map(|&n| {
                let (eps, _) = dielectric(alpha, n);
                let exact = extinction(wavevector(eps, omega).unwrap());
                let dilute = n * sigma_total_optical(alpha, omega);
                (n.ln(), ((exact - dilute) / dilute).abs().ln())
            })
            .unzip();
        let mx = lx.iter().sum::<f64>() / lx.len() as f64;
        let my = ly.iter().sum::<f64>() / ly.len() as f64;
        let slope = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        slopes.push(slope);

        if populations[1] == 1.0 {
            let alpha0 = polarizability_boundary(&pair, 1.0).unwrap();
            let (eps, _) = dielectric(alpha0, 1e-6);
            let h = extinction(wavevector(eps, 1.0).unwrap());
            let z: Vec<f64> = (0..=4).map(|k| k as f64 / h.abs()).collect();
            let intensity = intensity_profile(1.0, h, &z).unwrap();
            for (k, i) in intensity.iter().enumerate() {
                growth = growth.max(relative(i / intensity[0], (k as f64).exp()));
            }
            if h >= 0.0 {
                growth = f64::INFINITY;
            }
        }
    }
    let passed = slopes.iter().all(|s| (s - 1.0).abs() <= 0.2) && growth <= 1e-12;
    outcome(
        passed,
        format!(
            "log-log slope absorbing {:.4}, amplifying {:.4} (1 +/- 0.2); slab e^(|h|z) error {growth:.2e} (<= 1e-12)",
            slopes[0], slopes[1]
        ),
    )
}

/// Two `validate` runs: both pass, under 60 s, byte-identical artifacts.
fn validate_suite() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut times = Vec::new();
    let mut ok = true;
    for d in &dirs {
        let start = Instant::now();
        let status = Command::new(env!("CARGO_BIN_EXE_klein-scatter"))
            .args(["validate", "--quiet", "--out", d.path().to_str().unwrap()])
            .status()
            .unwrap();
        times.push(start.elapsed());
        ok &= status.success();
    }
    let a = fs::read(dirs[0].path().join("validate.csv")).unwrap_or_default();
    let b = fs::read(dirs[1].path().join("validate.csv")).unwrap_or_default();
    let identical = !a.is_empty() && a == b;
    let fast = times.iter().all(|t| *t < Duration::from_secs(60));
    outcome(
        ok && identical && fast,
        format!(
            "exit ok: {ok}, byte-identical: {identical}, runtimes {:.2?} / {:.2?} (< 60 s)",
            times[0], times[1]
        ),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("negative sigma_tot for an inverted two-level target", klein_paradox),
        ("optical theorem from the screen integral", optical_theorem_closure),
        ("optical and spectral sigma_tot identity chain", identity_chain),
        ("detailed balance and noise temperature", detailed_balance),
        ("sign(sigma_tot) = sign(T_n)", sign_theorem),
        ("Rayleigh solid-angle closure", rayleigh_closure),
        ("dispersion integral vs closed form, Kramers-Kronig", dispersion_oracle),
        ("dilute-medium extinction law", dilute_medium),
        ("validate suite deterministic", validate_suite),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        println!(
            "criterion {} [{}] {name}: {}",
            i + 1,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.passed);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
