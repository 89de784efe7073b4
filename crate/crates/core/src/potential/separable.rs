//! Volume potential of a radially constant, band-limited source through the
//! separable expansion of the outgoing Green's function
//!
//! ```text
//! e^{ik|x−y|} / (4π|x−y|) = ik Σ j_l(k r<) h_l(k r>) Y_{l,m}(x̂) conj(Y_{l,m}(ŷ)).
//! ```

use num_complex::Complex64;
use std::sync::Arc;

use super::grid::{BallGrid, ComplexField};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_vec, Tolerance};
use crate::specfun::{lm_index, spherical_bessel_j_all, spherical_hankel1_all, sph_harm_all, Direction};
use crate::sphere::TransformPlan;
use crate::synthesis::{SourceDensity, WaveConfig};

const RADIAL_TOL: Tolerance = Tolerance {
    rel: 1e-11,
    abs: 0.0,
    abs_scale: 1e-14,
    max_intervals: 2000,
};

/// `j_l(k min(r, s)) h_l(k max(r, s))` for `l = 0..=lmax`, written into `out`.
/// Where `h_l` overflows the true product is negligibly small and zero is used.
pub(crate) fn kernel_products(lmax: usize, k: f64, r: f64, s: f64, out: &mut [Complex64]) {
    let (lo, hi) = if s < r { (s, r) } else { (r, s) };
    let j = spherical_bessel_j_all(lmax, k * lo);
    let h = spherical_hankel1_all(lmax, k * hi);
    for l in 0..=lmax {
        let p = h[l] * j[l];
        out[l] = if p.re.is_finite() && p.im.is_finite() {
            p
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
}

/// `R_l(r) = ∫₀^b j_l(k min(r, s)) h_l(k max(r, s)) s² ds` for `l = 0..=lmax`.
pub fn radial_kernel(lmax: usize, k: f64, b: f64, r: f64) -> Result<Vec<Complex64>> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("radius must be finite and >= 0, got {r}")));
    }
    let mut breaks = Vec::new();
    if r > 0.0 {
        let mut t = r;
        while t < b {
            breaks.push(t);
            t *= 2.0;
        }
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); lmax + 1];
    let v = integrate_vec(
        |s, out| {
            kernel_products(lmax, k, r, s, &mut buf);
            for (o, p) in out.iter_mut().zip(&buf) {
                *o = p * (s * s);
            }
        },
        lmax + 1,
        0.0,
        b,
        &breaks,
        RADIAL_TOL,
    )?;
    Ok(v)
}

fn norm3(x: &[f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// `(Gh)(x) = ∫ g(x, y) h(y) dy`.
pub fn volume_potential(h: &SourceDensity, x: &[f64; 3], cfg: &WaveConfig) -> Result<Complex64> {
    let lmax = h.spectrum().degree();
    let r = norm3(x);
    let rk = radial_kernel(lmax, cfg.k, h.support_radius(), r)?;
    let d = Direction::new(*x).unwrap_or(Direction::NORTH);
    let y = sph_harm_all(lmax, &d);
    let ik = Complex64::new(0.0, cfg.k);
    Ok(h.spectrum().iter().map(|(l, m, c)| ik * c * y[lm_index(l, m)] * rk[l]).sum())
}

/// `Gh` at every node of `grid`, using exact radial integrals on each shell.
pub fn volume_potential_on_grid(h: &SourceDensity, grid: &Arc<BallGrid>, cfg: &WaveConfig) -> Result<ComplexField> {
    let lmax = h.spectrum().degree();
    let plan = TransformPlan::new(grid.sphere(), lmax);
    let m = grid.shell_size();
    let ik = Complex64::new(0.0, cfg.k);
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut coeffs = vec![Complex64::new(0.0, 0.0); plan.coefficient_count()];
    for (i, &r) in grid.radii().iter().enumerate() {
        let rk = radial_kernel(lmax, cfg.k, h.support_radius(), r)?;
        for (l, mm, c) in h.spectrum().iter() {
            coeffs[lm_index(l, mm)] = ik * c * rk[l];
        }
        plan.synthesize_into(&coeffs, &mut values[i * m..(i + 1) * m]);
    }
    ComplexField::new(Arc::clone(grid), values)
}

/// Samples of a [`SourceDensity`] at the grid nodes (zero beyond `b`).
pub fn sample_source(h: &SourceDensity, grid: &Arc<BallGrid>) -> ComplexField {
    let lmax = h.spectrum().degree();
    let plan = TransformPlan::new(grid.sphere(), lmax);
    let m = grid.shell_size();
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut shell = vec![Complex64::new(0.0, 0.0); m];
    plan.synthesize_into(h.spectrum().coeffs(), &mut shell);
    for (i, &r) in grid.radii().iter().enumerate() {
        if r <= h.support_radius() {
            values[i * m..(i + 1) * m].copy_from_slice(&shell);
        }
    }
    ComplexField::new(Arc::clone(grid), values).expect("sizes agree by construction")
}

/// `ψ = u₀ − Gh` on a grid, with its smallest modulus.
#[derive(Debug, Clone)]
pub struct DenominatorField {
    pub psi: ComplexField,
    pub min_modulus: f64,
    pub argmin: usize,
}

/// `ψ(x) = e^{ikα·x} − (Gh)(x)` at every grid node.
pub fn denominator_field(h: &SourceDensity, grid: &Arc<BallGrid>, cfg: &WaveConfig) -> Result<DenominatorField> {
    if grid.radius() < h.support_radius() {
        return Err(Error::InvalidArgument(format!(
            "grid radius {} is smaller than the support radius {}",
            grid.radius(),
            h.support_radius()
        )));
    }
    let gh = volume_potential_on_grid(h, grid, cfg)?;
    let psi = grid.incident_field(cfg).zip_with(&gh, |u, g| u - g);
    let (min_modulus, argmin) = psi.min_modulus(None).unwrap_or((f64::INFINITY, 0));
    Ok(DenominatorField {
        psi,
        min_modulus,
        argmin,
    })
}

/// Barycentric interpolant on Chebyshev points of the second kind.
#[derive(Debug, Clone)]
struct ChebPanel {
    lo: f64,
    hi: f64,
    nodes: Vec<f64>,
    bary: Vec<f64>,
    /// `values[node][l]`.
    values: Vec<Vec<Complex64>>,
}

impl ChebPanel {
    fn new(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> Result<Vec<Complex64>>) -> Result<Self> {
        let nodes: Vec<f64> = (0..n)
            .map(|j| {
                let t = (std::f64::consts::PI * j as f64 / (n - 1) as f64).cos();
                0.5 * (lo + hi) - 0.5 * (hi - lo) * t
            })
            .collect();
        let bary = (0..n)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n - 1 { 0.5 * s } else { s }
            })
            .collect();
        let values = nodes.iter().map(|&r| f(r)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            lo,
            hi,
            nodes,
            bary,
            values,
        })
    }

    fn eval(&self, r: f64, out: &mut [Complex64]) {
        out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        let mut denom = 0.0;
        for (j, &t) in self.nodes.iter().enumerate() {
            if r == t {
                out.copy_from_slice(&self.values[j]);
                return;
            }
            let w = self.bary[j] / (r - t);
            denom += w;
            for (o, v) in out.iter_mut().zip(&self.values[j]) {
                *o += v * w;
            }
        }
        out.iter_mut().for_each(|v| *v /= denom);
    }
}

const GEOMETRIC_PANELS: i32 = 14;

/// Fast pointwise evaluation of `ψ = u₀ − Gh` for a radially constant source.
/// The radial integrals are tabulated on Chebyshev points, piecewise on
/// `[0, b]` and `[b, a]`, and interpolated.
#[derive(Debug, Clone)]
pub struct SeparablePotential {
    h: SourceDensity,
    cfg: WaveConfig,
    panels: Vec<ChebPanel>,
}

impl SeparablePotential {
    pub fn new(h: &SourceDensity, cfg: &WaveConfig) -> Result<Self> {
        let lmax = h.spectrum().degree();
        let b = h.support_radius();
        let mut panels = Vec::new();
        let mut add = |lo: f64, hi: f64| -> Result<()> {
            let n = 24 + (4.0 * cfg.k * (hi - lo)).ceil() as usize + lmax;
            panels.push(ChebPanel::new(lo, hi, n, |r| radial_kernel(lmax, cfg.k, b, r))?);
            Ok(())
        };
        // Degree 2 picks up an r² ln r term at the origin; geometric panels
        // keep the interpolation accurate there.
        add(0.0, b * 0.5f64.powi(GEOMETRIC_PANELS))?;
        for p in (0..GEOMETRIC_PANELS).rev() {
            add(b * 0.5f64.powi(p + 1), b * 0.5f64.powi(p))?;
        }
        if cfg.a > b {
            add(b, cfg.a)?;
        }
        Ok(Self {
            h: h.clone(),
            cfg: *cfg,
            panels,
        })
    }

    pub fn source(&self) -> &SourceDensity {
        &self.h
    }

    /// `(Gh)(x)` for `|x| ≤ a`.
    pub fn potential(&self, x: &[f64; 3]) -> Complex64 {
        let lmax = self.h.spectrum().degree();
        let r = norm3(x);
        let panel = self
            .panels
            .iter()
            .find(|p| r <= p.hi)
            .unwrap_or_else(|| self.panels.last().expect("at least one panel"));
        let mut rk = vec![Complex64::new(0.0, 0.0); lmax + 1];
        panel.eval(r.clamp(panel.lo, panel.hi), &mut rk);
        let d = Direction::new(*x).unwrap_or(Direction::NORTH);
        let y = sph_harm_all(lmax, &d);
        let ik = Complex64::new(0.0, self.cfg.k);
        self.h
            .spectrum()
            .iter()
            .map(|(l, m, c)| ik * c * y[lm_index(l, m)] * rk[l])
            .sum()
    }

    /// `ψ(x) = e^{ikα·x} − (Gh)(x)`.
    pub fn denominator(&self, x: &[f64; 3]) -> Complex64 {
        Complex64::from_polar(1.0, self.cfg.k * self.cfg.alpha.dot(x)) - self.potential(x)
    }
}
