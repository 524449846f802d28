//! Quadrature building blocks: globally adaptive Gauss-Kronrod (7/15) for
//! complex-valued integrands and Gauss-Legendre rules of arbitrary order.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

// Kronrod 15-point abscissae on [-1, 1] (positive half, descending), with the
// 7-point Gauss nodes at the odd indices.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances for [`integrate_adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    /// Relative tolerance, measured against the estimate of `∫|f|`.
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-13,
            abs_tol: 1e-300,
            max_panels: 50_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
    /// Estimate of `∫|f|`, the scale used for relative tolerance.
    pub magnitude: f64,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
    magnitude: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod_15<F>(f: &F, a: f64, b: f64) -> Panel
where
    F: Fn(f64) -> Complex64,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut magnitude = fc.norm() * WGK[7];

    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod += (f1 + f2) * WGK[j];
        magnitude += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += (f1 + f2) * WG[j / 2];
        }
    }

    Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).norm(),
        magnitude: magnitude * half.abs(),
    }
}

/// Globally adaptive Gauss-Kronrod integration of `f` over the union of the
/// panels delimited by `breakpoints` (ascending, at least two entries).
///
/// The panel with the largest error estimate is bisected until the summed
/// error drops below `max(abs_tol, rel_tol * ∫|f|)`.
pub fn integrate_adaptive<F>(f: F, breakpoints: &[f64], opts: AdaptiveOptions) -> Result<Estimate>
where
    F: Fn(f64) -> Complex64,
{
    if breakpoints.len() < 2 {
        return Err(Error::Invalid(
            "adaptive quadrature needs at least two breakpoints".into(),
        ));
    }

    let mut heap = BinaryHeap::new();
    for w in breakpoints.windows(2) {
        if w[1] > w[0] {
            heap.push(gauss_kronrod_15(&f, w[0], w[1]));
        }
    }

    loop {
        let (value, error, magnitude) = heap.iter().fold((Complex64::new(0.0, 0.0), 0.0, 0.0), |(v, e, m), p| {
            (v + p.value, e + p.error, m + p.magnitude)
        });
        let target = opts.abs_tol.max(opts.rel_tol * magnitude);
        if error <= target {
            return Ok(Estimate {
                value,
                error,
                magnitude,
                panels: heap.len(),
            });
        }
        if heap.len() >= opts.max_panels {
            return Err(Error::NonConvergence(format!(
                "adaptive quadrature reached {} panels with error {error:e} above target {target:e}",
                heap.len()
            )));
        }

        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel cannot be split further in f64; accept its contribution as is.
            let mut frozen = worst;
            frozen.error = 0.0;
            heap.push(frozen);
            continue;
        }
        heap.push(gauss_kronrod_15(&f, worst.a, mid));
        heap.push(gauss_kronrod_15(&f, mid, worst.b));
    }
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1],
/// computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;

    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_rule_is_exact_for_degree_22() {
        let f = |x: f64| Complex64::new(x.powi(22) + x.powi(7), 0.0);
        let p = gauss_kronrod_15(&f, -1.0, 1.0);
        assert!((p.value.re - 2.0 / 23.0).abs() < 1e-15);
    }

    #[test]
    fn embedded_gauss_rule_is_exact_for_degree_13() {
        // error estimate |K - G| vanishes when both rules are exact
        let f = |x: f64| Complex64::new(3.0 * x.powi(12) - x.powi(13) + 1.0, 0.0);
        let p = gauss_kronrod_15(&f, -1.0, 1.0);
        assert!(p.error < 1e-14, "error {}", p.error);
        assert!((p.value.re - (6.0 / 13.0 + 2.0)).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_to_interval_length() {
        let total: f64 = 2.0 * WGK[..7].iter().sum::<f64>() + WGK[7];
        assert!((total - 2.0).abs() < 1e-15);
        let gauss: f64 = 2.0 * WG[..3].iter().sum::<f64>() + WG[3];
        assert!((gauss - 2.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_resolves_narrow_peak() {
        let g = 1e-4;
        let f = |x: f64| Complex64::new(g / std::f64::consts::PI / (x * x + g * g), 0.0);
        let est = integrate_adaptive(f, &[-1.0, 1.0], AdaptiveOptions::default()).unwrap();
        let exact = 2.0 / std::f64::consts::PI * (1.0 / g).atan();
        assert!((est.value.re - exact).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_matches_known_five_point_rule() {
        let (x, w) = gauss_legendre(5);
        assert!((x[4] - 0.906_179_845_938_664).abs() < 1e-14);
        assert!((w[2] - 128.0 / 225.0).abs() < 1e-14);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
    }
}
