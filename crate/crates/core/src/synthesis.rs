//! Source densities whose Born amplitude matches a target pattern.
//!
//! A source `h(x) = Σ h_{l,m} Y_{l,m}(x/|x|)` for `|x| ≤ b` (zero outside)
//! has the Born amplitude
//!
//! ```text
//! −(1/4π) ∫ e^{−ikβ·x} h(x) dx = −Σ (−i)^l d_l h_{l,m} Y_{l,m}(β),
//! d_l = ∫₀^b r² j_l(kr) dr = √(π/2k) g_{1,l+1/2}(k; b),
//! ```
//!
//! which follows from expanding the plane wave in spherical harmonics. Matching
//! it to `f` degree by degree gives `h_{l,m} = −i^l f_{l,m} / d_l`. Since
//! `d_l` decays roughly like `1/(2l+1)!!`, the division amplifies high degrees
//! without bound and the expansion has to be truncated.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::potential::BallGrid;
use crate::specfun::{g_integral, lm_index, sph_harm_all, Direction};
use crate::sphere::{HarmonicSpectrum, SphereQuadrature};

/// Degrees whose amplification `1/|d_l|` exceeds this are refused.
pub const AMPLIFICATION_CAP: f64 = 1e12;

/// Fixed physical parameters of one synthesis problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveConfig {
    /// Wavenumber `k > 0`.
    pub k: f64,
    /// Incident direction.
    pub alpha: Direction,
    /// Target residual in L²(S²).
    pub epsilon: f64,
    /// Support radius of the source density, `0 < b ≤ min(a, 1)`.
    pub b: f64,
    /// Radius of the ball `D`.
    pub a: f64,
}

impl WaveConfig {
    pub fn new(k: f64, alpha: Direction, epsilon: f64, b: f64, a: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::config("k", format!("must be > 0, got {k}")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::config("epsilon", format!("must be > 0, got {epsilon}")));
        }
        if !(b > 0.0 && b <= 1.0) {
            return Err(Error::config("b", format!("must satisfy 0 < b <= 1, got {b}")));
        }
        if !(a.is_finite() && a >= b) {
            return Err(Error::config("b", format!("support radius b = {b} exceeds domain radius a = {a}")));
        }
        Ok(Self { k, alpha, epsilon, b, a })
    }
}

/// `h(x) = Σ h_{l,m} Y_{l,m}(x̂)` for `|x| ≤ b`, zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceDensity {
    spectrum: HarmonicSpectrum,
    b: f64,
}

impl SourceDensity {
    pub fn new(spectrum: HarmonicSpectrum, b: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidArgument(format!("support radius must be > 0, got {b}")));
        }
        Ok(Self { spectrum, b })
    }

    pub fn spectrum(&self) -> &HarmonicSpectrum {
        &self.spectrum
    }

    pub fn support_radius(&self) -> f64 {
        self.b
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            spectrum: self.spectrum.scaled(factor),
            b: self.b,
        }
    }

    /// `‖h‖_{L²} = (b³/3)^{1/2} (Σ |h_{l,m}|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.b.powi(3) / 3.0).sqrt() * self.spectrum.parseval_norm()
    }

    /// Pointwise value; at the origin the north pole stands in for `x̂`.
    pub fn value_at(&self, x: &[f64; 3]) -> Complex64 {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        if r > self.b {
            return Complex64::new(0.0, 0.0);
        }
        let d = Direction::new(*x).unwrap_or(Direction::NORTH);
        let y = sph_harm_all(self.spectrum.degree(), &d);
        self.spectrum.iter().map(|(l, m, c)| c * y[lm_index(l, m)]).sum()
    }
}

/// `(−i)^l`.
pub fn born_phase(l: usize) -> Complex64 {
    match l % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// `d_l = ∫₀^b r² j_l(kr) dr = √(π/2k) g_{1,l+1/2}(k; b)`.
pub fn radial_moment(l: usize, k: f64, b: f64) -> Result<f64> {
    Ok((PI / (2.0 * k)).sqrt() * g_integral(1.0, l as f64 + 0.5, k, b)?)
}

/// `1/|d_l|`, the factor by which degree `l` of the pattern is amplified
/// in the source.
pub fn amplification(l: usize, k: f64, b: f64) -> Result<f64> {
    Ok(1.0 / radial_moment(l, k, b)?.abs())
}

pub fn radial_moments(lmax: usize, k: f64, b: f64) -> Result<Vec<f64>> {
    (0..=lmax).map(|l| radial_moment(l, k, b)).collect()
}

/// `h_{l,m} = −i^l f_{l,m} / d_l` for `l ≤ L`, zero above.
pub fn source_from_pattern(f: &HarmonicSpectrum, cfg: &WaveConfig, truncation: usize) -> Result<SourceDensity> {
    if truncation > f.degree() {
        return Err(Error::InvalidArgument(format!(
            "truncation degree {truncation} exceeds pattern degree {}",
            f.degree()
        )));
    }
    let masses = f.degree_masses();
    let mut h = HarmonicSpectrum::zeros(truncation);
    for l in 0..=truncation {
        if masses[l] == 0.0 {
            continue;
        }
        let g = g_integral(1.0, l as f64 + 0.5, cfg.k, cfg.b)?;
        if g.abs() < 1e-300 {
            return Err(Error::IllConditioned {
                degree: l,
                amplification: f64::INFINITY,
                cap: AMPLIFICATION_CAP,
            });
        }
        let d = (PI / (2.0 * cfg.k)).sqrt() * g;
        let amp = 1.0 / d.abs();
        if amp > AMPLIFICATION_CAP {
            return Err(Error::IllConditioned {
                degree: l,
                amplification: amp,
                cap: AMPLIFICATION_CAP,
            });
        }
        let factor = -1.0 / (born_phase(l) * d);
        for m in -(l as i64)..=l as i64 {
            h.set(l, m, f.get(l, m) * factor)?;
        }
    }
    SourceDensity::new(h, cfg.b)
}

/// Spectrum of the Born amplitude `−(1/4π) ∫_D e^{−ikβ·x} h(x) dx`.
pub fn born_amplitude(h: &SourceDensity, cfg: &WaveConfig) -> Result<HarmonicSpectrum> {
    let spec = h.spectrum();
    let d = radial_moments(spec.degree(), cfg.k, h.support_radius())?;
    let mut out = HarmonicSpectrum::zeros(spec.degree());
    for (l, m, c) in spec.iter() {
        out.set(l, m, -born_phase(l) * d[l] * c)?;
    }
    Ok(out)
}

/// `‖f + (1/4π) ∫_D e^{−ikβ·x} h dx‖_{L²(S²)}`, evaluated as a Parseval sum.
pub fn born_residual(f: &HarmonicSpectrum, h: &SourceDensity, cfg: &WaveConfig) -> Result<f64> {
    Ok(f.difference(&born_amplitude(h, cfg)?).parseval_norm())
}

/// `(√a/√(4π)) ‖h‖_{L²(D)}`; a value below one guarantees `|G h| < 1`
/// everywhere in `D`, so the denominator `u₀ − G h` cannot vanish.
pub fn smallness_bound(h: &SourceDensity, cfg: &WaveConfig) -> f64 {
    (cfg.a / (4.0 * PI)).sqrt() * h.l2_norm()
}

/// A function on the ball, used as a least-squares basis element.
pub trait BallFunction {
    fn value(&self, x: &[f64; 3]) -> Complex64;
}

impl<F> BallFunction for F
where
    F: Fn(&[f64; 3]) -> Complex64,
{
    fn value(&self, x: &[f64; 3]) -> Complex64 {
        self(x)
    }
}

/// `Y_{l,m}(x̂)` on the shell `r_min ≤ |x| ≤ r_max`, zero elsewhere.
#[derive(Debug, Clone, Copy)]
pub struct HarmonicShell {
    pub l: usize,
    pub m: i64,
    pub r_min: f64,
    pub r_max: f64,
}

impl BallFunction for HarmonicShell {
    fn value(&self, x: &[f64; 3]) -> Complex64 {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        if r < self.r_min || r > self.r_max {
            return Complex64::new(0.0, 0.0);
        }
        let d = Direction::new(*x).unwrap_or(Direction::NORTH);
        sph_harm_all(self.l, &d)[lm_index(self.l, self.m)]
    }
}

/// Harmonic shells `Y_{l,m}` on `[0, b]` for all `l ≤ lmax`, in storage order.
pub fn harmonic_basis(lmax: usize, b: f64) -> Vec<HarmonicShell> {
    (0..=lmax)
        .flat_map(|l| {
            (-(l as i64)..=l as i64).map(move |m| HarmonicShell {
                l,
                m,
                r_min: 0.0,
                r_max: b,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct LeastSquaresFit {
    pub coefficients: Vec<Complex64>,
    /// `‖f − A_Born(Σ c_j φ_j)‖_{L²(S²)}` by the sphere quadrature.
    pub residual: f64,
    pub effective_rank: usize,
    pub rank_deficient: bool,
}

/// Minimizes the Born residual over `h = Σ c_j φ_j`. Volume integrals use
/// the ball grid, sphere norms the quadrature the samples live on. The
/// weighted system is solved through an SVD; singular values below
/// `1e-12 σ_max` are dropped, which yields the minimum-norm solution when the
/// basis is numerically dependent.
pub fn fit_source_least_squares<B: BallFunction>(
    f_samples: &[Complex64],
    quad: &SphereQuadrature,
    basis: &[B],
    cfg: &WaveConfig,
    grid: &BallGrid,
) -> Result<LeastSquaresFit> {
    if basis.is_empty() {
        return Err(Error::InvalidArgument("least-squares basis is empty".into()));
    }
    if f_samples.len() != quad.len() {
        return Err(Error::InvalidArgument(format!(
            "{} samples for {} quadrature nodes",
            f_samples.len(),
            quad.len()
        )));
    }
    let rows = quad.len();
    let cols = basis.len();
    let points = grid.points();
    let vol_w = grid.weights();
    // Basis values at grid nodes, skipping nodes where every element vanishes.
    let mut active = Vec::new();
    let mut values = Vec::new();
    for (n, x) in points.iter().enumerate() {
        let v: Vec<Complex64> = basis.iter().map(|b| b.value(x)).collect();
        if v.iter().any(|c| c.norm() > 0.0) {
            active.push(n);
            values.push(v);
        }
    }
    let mut design = DMatrix::<Complex64>::zeros(rows, cols);
    for (i, beta) in quad.nodes().iter().enumerate() {
        let sw = quad.weights()[i].sqrt();
        for (a, &n) in active.iter().enumerate() {
            let phase = Complex64::from_polar(-vol_w[n] / (4.0 * PI), -cfg.k * beta.dot(&points[n]));
            for j in 0..cols {
                design[(i, j)] += phase * values[a][j] * sw;
            }
        }
    }
    let rhs = DVector::from_iterator(
        rows,
        f_samples.iter().zip(quad.weights()).map(|(f, w)| f * w.sqrt()),
    );
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |m, &s| m.max(s));
    let cutoff = 1e-12 * smax;
    let effective_rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let coefficients = if smax == 0.0 {
        DVector::zeros(cols)
    } else {
        svd.solve(&rhs, cutoff)
            .map_err(|e| Error::InvalidArgument(format!("least-squares solve failed: {e}")))?
    };
    let residual = (&rhs - &design * &coefficients).norm();
    Ok(LeastSquaresFit {
        coefficients: coefficients.iter().copied().collect(),
        residual,
        effective_rank,
        rank_deficient: effective_rank < cols,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{analyze, synthesize_on_sphere};
    use rand::rngs::StdRng;
    use rand::{RngExt, SeedableRng};

    fn cfg(b: f64, a: f64) -> WaveConfig {
        WaveConfig::new(1.0, Direction::NORTH, 1e-3, b, a).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pattern(degree: usize, seed: u64) -> HarmonicSpectrum {
        let mut rng = StdRng::seed_from_u64(seed);
        let coeffs = (0..(degree + 1) * (degree + 1))
            .map(|_| c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)))
            .collect();
        HarmonicSpectrum::from_coeffs(coeffs).unwrap()
    }

    #[test]
    fn phase_convention_matches_direct_born_integral() {
        // -(1/4π) ∫ e^{-ikβ·x} h(x) dx by plain ball quadrature, compared with f.
        let w = WaveConfig::new(1.7, Direction::from_angles(0.4, 1.1), 1e-3, 0.7, 1.0).unwrap();
        let f = pattern(3, 21);
        let h = source_from_pattern(&f, &w, 3).unwrap();
        let grid = BallGrid::for_config(&w, 20, 12).unwrap();
        let quad = SphereQuadrature::new(6).unwrap();
        let values: Vec<Complex64> = quad
            .nodes()
            .iter()
            .map(|beta| {
                grid.points()
                    .iter()
                    .zip(grid.weights())
                    .map(|(x, wt)| Complex64::from_polar(*wt, -w.k * beta.dot(x)) * h.value_at(x))
                    .sum::<Complex64>()
                    * (-1.0 / (4.0 * PI))
            })
            .collect();
        let got = analyze(&values, &quad, 3).unwrap();
        for ((l, m, a), b) in got.iter().zip(f.coeffs()) {
            assert!((a - b).norm() < 1e-10, "({l},{m}): {a} vs {b}");
        }
        // Odd degrees carry weight, so the opposite phase could not pass.
        let odd: f64 = (1..=3).step_by(2).map(|l| f.degree_masses()[l]).sum();
        assert!(odd > 1e-3);
    }

    #[test]
    fn config_validation_names_keys() {
        let bad = |k, e, b, a| WaveConfig::new(k, Direction::NORTH, e, b, a).unwrap_err().to_string();
        assert!(bad(-1.0, 1e-3, 0.5, 1.0).contains("k"));
        assert!(bad(1.0, 0.0, 0.5, 1.0).contains("epsilon"));
        assert!(bad(1.0, 1e-3, 0.9, 0.5).contains("b"));
    }

    #[test]
    fn zero_pattern_gives_zero_source() {
        let h = source_from_pattern(&HarmonicSpectrum::zeros(3), &cfg(1.0, 1.0), 3).unwrap();
        assert_eq!(h.spectrum().parseval_norm(), 0.0);
        assert_eq!(born_residual(&HarmonicSpectrum::zeros(3), &h, &cfg(1.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn monopole_amplification() {
        let mut f = HarmonicSpectrum::zeros(0);
        f.set(0, 0, c(0.7, 0.0)).unwrap();
        let h = source_from_pattern(&f, &cfg(1.0, 1.0), 0).unwrap();
        let want = 0.7 / (1f64.sin() - 1f64.cos());
        assert!((h.spectrum().get(0, 0).norm() - want).abs() < 1e-12);
        assert!((want / 0.7 - 3.32040).abs() < 1e-5);
    }

    #[test]
    fn degrees_above_truncation_are_zero() {
        let f = pattern(5, 3);
        let h = source_from_pattern(&f, &cfg(0.8, 1.0), 2).unwrap();
        let padded = h.spectrum().resized(5);
        for (l, _, v) in padded.iter() {
            if l > 2 {
                assert_eq!(v, c(0.0, 0.0));
            }
        }
        assert!(source_from_pattern(&f, &cfg(0.8, 1.0), 6).is_err());
    }

    #[test]
    fn residual_is_tail_mass() {
        for seed in 0..10 {
            let f = pattern(7, seed);
            for big_l in 0..=7 {
                let h = source_from_pattern(&f, &cfg(1.0, 1.0), big_l).unwrap();
                let r = born_residual(&f, &h, &cfg(1.0, 1.0)).unwrap();
                assert!((r * r - f.tail_mass(big_l)).abs() < 1e-10, "seed={seed} L={big_l}");
            }
        }
    }

    #[test]
    fn linearity_in_pattern() {
        let (f1, f2) = (pattern(4, 11), pattern(4, 12));
        let (a, b) = (c(0.3, -1.2), c(2.0, 0.5));
        let combo = HarmonicSpectrum::from_coeffs(
            f1.coeffs().iter().zip(f2.coeffs()).map(|(x, y)| x * a + y * b).collect(),
        )
        .unwrap();
        let w = cfg(0.6, 1.0);
        let h = source_from_pattern(&combo, &w, 4).unwrap();
        let h1 = source_from_pattern(&f1, &w, 4).unwrap();
        let h2 = source_from_pattern(&f2, &w, 4).unwrap();
        for ((x, y), z) in h.spectrum().coeffs().iter().zip(h1.spectrum().coeffs()).zip(h2.spectrum().coeffs()) {
            assert!((x - (y * a + z * b)).norm() <= 1e-12 * x.norm().max(1.0));
        }
    }

    #[test]
    fn amplification_cap_is_enforced() {
        let mut f = HarmonicSpectrum::zeros(12);
        f.set(12, 0, c(1.0, 0.0)).unwrap();
        match source_from_pattern(&f, &cfg(1.0, 1.0), 12) {
            Err(Error::IllConditioned { degree, .. }) => assert_eq!(degree, 12),
            other => panic!("expected ill-conditioning, got {other:?}"),
        }
    }

    #[test]
    fn smallness_examples() {
        let w = cfg(1.0, 1.0);
        assert_eq!(smallness_bound(&SourceDensity::new(HarmonicSpectrum::zeros(1), 1.0).unwrap(), &w), 0.0);
        let mut s = HarmonicSpectrum::zeros(0);
        s.set(0, 0, c(3.3204, 0.0)).unwrap();
        let h = SourceDensity::new(s, 1.0).unwrap();
        assert!((smallness_bound(&h, &w) - 0.5408).abs() < 1e-4);
        // ‖h‖ = 1 with a = 4π gives exactly 1.
        let mut s = HarmonicSpectrum::zeros(0);
        s.set(0, 0, c(3f64.sqrt(), 0.0)).unwrap();
        let h = SourceDensity::new(s, 1.0).unwrap();
        let w = WaveConfig::new(1.0, Direction::NORTH, 1e-3, 1.0, 4.0 * PI).unwrap();
        assert!((h.l2_norm() - 1.0).abs() < 1e-15);
        assert!((smallness_bound(&h, &w) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn l2_norm_matches_grid_quadrature() {
        let f = pattern(3, 5);
        let w = cfg(0.8, 1.0);
        let h = source_from_pattern(&f, &w, 3).unwrap();
        let grid = BallGrid::for_config(&w, 16, 8).unwrap();
        let quad: f64 = grid
            .points()
            .iter()
            .zip(grid.weights())
            .map(|(x, wt)| h.value_at(x).norm_sqr() * wt)
            .sum();
        assert!((quad.sqrt() - h.l2_norm()).abs() < 1e-10 * h.l2_norm());
    }

    #[test]
    fn least_squares_zero_and_harmonic_basis() {
        let w = cfg(0.8, 1.0);
        let grid = BallGrid::for_config(&w, 16, 10).unwrap();
        let quad = SphereQuadrature::new(10).unwrap();
        let basis = harmonic_basis(3, w.b);
        let fit = fit_source_least_squares(&vec![c(0.0, 0.0); quad.len()], &quad, &basis, &w, &grid).unwrap();
        assert!(fit.coefficients.iter().all(|c| c.norm() == 0.0));
        assert_eq!(fit.residual, 0.0);

        let f = pattern(5, 21).scaled(c(0.01, 0.0));
        let samples = synthesize_on_sphere(&f, &quad);
        for big_l in [1usize, 3] {
            let basis = harmonic_basis(big_l, w.b);
            let fit = fit_source_least_squares(&samples, &quad, &basis, &w, &grid).unwrap();
            let h = source_from_pattern(&f, &w, big_l).unwrap();
            let spectral = born_residual(&f, &h, &w).unwrap();
            assert!((fit.residual - spectral).abs() < 1e-8, "L={big_l}: {} vs {spectral}", fit.residual);
            assert!(!fit.rank_deficient);
            for (j, b) in basis.iter().enumerate() {
                let want = h.spectrum().get(b.l, b.m);
                assert!((fit.coefficients[j] - want).norm() < 1e-6 * want.norm().max(1e-3));
            }
        }
        // Back-transform sanity: samples analyze to f.
        assert!(analyze(&samples, &quad, 5).unwrap().difference(&f).parseval_norm() < 1e-14);
    }

    #[test]
    fn least_squares_nested_and_rank_deficient() {
        let w = cfg(1.0, 1.0);
        let grid = BallGrid::for_config(&w, 12, 8).unwrap();
        let quad = SphereQuadrature::new(8).unwrap();
        let f = pattern(4, 9);
        let samples = synthesize_on_sphere(&f, &quad);
        let mut prev = f64::INFINITY;
        for big_l in 0..=4 {
            let fit = fit_source_least_squares(&samples, &quad, &harmonic_basis(big_l, 1.0), &w, &grid).unwrap();
            assert!(fit.residual <= prev + 1e-12);
            prev = fit.residual;
        }
        let mut basis = harmonic_basis(1, 1.0);
        basis.push(basis[0]);
        let fit = fit_source_least_squares(&samples, &quad, &basis, &w, &grid).unwrap();
        assert!(fit.rank_deficient);
        assert_eq!(fit.effective_rank, 4);
        // Minimum-norm split of the duplicated element.
        assert!((fit.coefficients[0] - fit.coefficients[4]).norm() < 1e-8);
    }
}
