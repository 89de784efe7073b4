//! One-dimensional quadrature: Gauss–Legendre rules and an adaptive
//! Gauss–Kronrod (7/15) integrator for real, complex and vector-valued
//! integrands.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::NumericalError;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|w| w * half).collect(),
    )
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

/// Barycentric weights for Lagrange interpolation on arbitrary distinct nodes.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![1.0; n];
    for j in 0..n {
        for k in 0..n {
            if k != j {
                w[j] /= nodes[j] - nodes[k];
            }
        }
    }
    // Rescale to avoid overflow for many nodes; the formula is scale invariant.
    let max = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    w.iter_mut().for_each(|v| *v /= max);
    w
}

/// Values of every Lagrange basis polynomial at `x`.
pub fn lagrange_basis(nodes: &[f64], bary: &[f64], x: f64, out: &mut [f64]) {
    if let Some(j) = nodes.iter().position(|&t| t == x) {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[j] = 1.0;
        return;
    }
    let mut denom = 0.0;
    for j in 0..nodes.len() {
        let t = bary[j] / (x - nodes[j]);
        out[j] = t;
        denom += t;
    }
    out.iter_mut().for_each(|v| *v /= denom);
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
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

/// Tolerances for the adaptive integrator. A component is accepted when its
/// error estimate is below `max(rel * |I|, abs_scale * ∫|f|, abs)`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub abs_scale: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel: 1e-11,
            abs: 0.0,
            abs_scale: 1e-14,
            max_intervals: 2000,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<Complex64>,
    error: Vec<f64>,
    magnitude: Vec<f64>,
}

fn gk15<F>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [Complex64]) -> Panel
where
    F: FnMut(f64, &mut [Complex64]),
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut kron = vec![Complex64::new(0.0, 0.0); dim];
    let mut gauss = vec![Complex64::new(0.0, 0.0); dim];
    let mut mag = vec![0.0; dim];
    let mut eval = |x: f64, wk: f64, wg: f64, buf: &mut [Complex64]| {
        f(x, buf);
        for c in 0..dim {
            kron[c] += buf[c] * wk;
            gauss[c] += buf[c] * wg;
            mag[c] += buf[c].norm() * wk;
        }
    };
    eval(mid, WGK[7], WG[3], buf);
    for j in 0..7 {
        let dx = half * XGK[j];
        let wg = if j % 2 == 1 { WG[j / 2] } else { 0.0 };
        eval(mid - dx, WGK[j], wg, buf);
        eval(mid + dx, WGK[j], wg, buf);
    }
    let value: Vec<Complex64> = kron.iter().map(|v| v * half).collect();
    let error = kron
        .iter()
        .zip(&gauss)
        .map(|(k, g)| ((k - g) * half).norm())
        .collect();
    let magnitude = mag.iter().map(|m| m * half.abs()).collect();
    Panel {
        a,
        b,
        value,
        error,
        magnitude,
    }
}

/// Adaptive integration of a vector-valued complex integrand over `[a, b]`,
/// optionally pre-split at interior `breaks`. The integrand writes its `dim`
/// components into the provided slice.
pub fn integrate_vec<F>(
    mut f: F,
    dim: usize,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Vec<Complex64>, NumericalError>
where
    F: FnMut(f64, &mut [Complex64]),
{
    let mut buf = vec![Complex64::new(0.0, 0.0); dim];
    let mut points = vec![a];
    points.extend(breaks.iter().copied().filter(|&t| t > a && t < b));
    points.push(b);
    let mut panels: Vec<Panel> = points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk15(&mut f, w[0], w[1], dim, &mut buf))
        .collect();
    if panels.is_empty() {
        return Ok(vec![Complex64::new(0.0, 0.0); dim]);
    }

    loop {
        let mut total = vec![Complex64::new(0.0, 0.0); dim];
        let mut err = vec![0.0; dim];
        let mut mag = vec![0.0; dim];
        for p in &panels {
            for c in 0..dim {
                total[c] += p.value[c];
                err[c] += p.error[c];
                mag[c] += p.magnitude[c];
            }
        }
        let target: Vec<f64> = (0..dim)
            .map(|c| (tol.rel * total[c].norm()).max(tol.abs_scale * mag[c]).max(tol.abs))
            .collect();
        let failing: Vec<usize> = (0..dim).filter(|&c| err[c] > target[c]).collect();
        if failing.is_empty() {
            return Ok(total);
        }
        if panels.len() >= tol.max_intervals {
            let worst = failing
                .iter()
                .map(|&c| err[c] / total[c].norm().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            return Err(NumericalError::QuadratureNotConverged {
                intervals: panels.len(),
                achieved_rel: worst,
            });
        }
        // Bisect the panel contributing the largest relative share of error.
        let (idx, _) = panels
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let score = failing
                    .iter()
                    .map(|&c| p.error[c] / target[c].max(f64::MIN_POSITIVE))
                    .fold(0.0, f64::max);
                (i, score)
            })
            .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        let p = panels.swap_remove(idx);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            return Err(NumericalError::QuadratureNotConverged {
                intervals: panels.len() + 1,
                achieved_rel: f64::NAN,
            });
        }
        panels.push(gk15(&mut f, p.a, mid, dim, &mut buf));
        panels.push(gk15(&mut f, mid, p.b, dim, &mut buf));
    }
}

/// Adaptive integration of a complex scalar integrand.
pub fn integrate_complex<F>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Complex64, NumericalError>
where
    F: Fn(f64) -> Complex64,
{
    integrate_vec(|x, out| out[0] = f(x), 1, a, b, breaks, tol).map(|v| v[0])
}

/// Adaptive integration of a real integrand.
pub fn integrate_real<F>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<f64, NumericalError>
where
    F: Fn(f64) -> f64,
{
    integrate_vec(|x, out| out[0] = Complex64::new(f(x), 0.0), 1, a, b, breaks, tol)
        .map(|v| v[0].re)
}
