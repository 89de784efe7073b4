//! Quadrature on the unit sphere and spherical-harmonic transforms.
//!
//! The quadrature is a product rule: Gauss–Legendre in `cos θ` (`n` rings)
//! times `2n` equispaced azimuths. It integrates `Y_{l,m} conj(Y_{l',m'})`
//! exactly whenever `l + l' ≤ 2n − 1`, so [`analyze`] is exact for
//! band-limited samples of degree `≤ n − 1`.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::specfun::{lm_index, normalized_legendre_all, Direction};

#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    order: usize,
    cos_theta: Vec<f64>,
    ring_weights: Vec<f64>,
    phis: Vec<f64>,
    nodes: Vec<Direction>,
    weights: Vec<f64>,
}

impl SphereQuadrature {
    /// Product rule of polar order `n ≥ 1`: `n` Gauss–Legendre rings in
    /// `cos θ` (ascending θ) and `2n` azimuths `φ_j = π j / n`.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("sphere quadrature order must be >= 1".into()));
        }
        let (x, w) = gauss_legendre(n);
        // Ascending θ means descending cos θ.
        let cos_theta: Vec<f64> = x.iter().rev().copied().collect();
        let ring_weights: Vec<f64> = w.iter().rev().copied().collect();
        let nphi = 2 * n;
        let dphi = 2.0 * PI / nphi as f64;
        let phis: Vec<f64> = (0..nphi).map(|j| j as f64 * dphi).collect();
        let mut nodes = Vec::with_capacity(n * nphi);
        let mut weights = Vec::with_capacity(n * nphi);
        for (ct, rw) in cos_theta.iter().zip(&ring_weights) {
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            for &phi in &phis {
                let (sp, cp) = phi.sin_cos();
                nodes.push(Direction::new([st * cp, st * sp, *ct])?);
                weights.push(rw * dphi);
            }
        }
        Ok(Self {
            order: n,
            cos_theta,
            ring_weights,
            phis,
            nodes,
            weights,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Direction] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rings(&self) -> usize {
        self.cos_theta.len()
    }

    pub fn azimuths(&self) -> &[f64] {
        &self.phis
    }

    pub fn ring_cos_theta(&self) -> &[f64] {
        &self.cos_theta
    }

    /// `∫_{S²} |v|² dΩ` by the rule.
    pub fn norm_squared(&self, values: &[Complex64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v.norm_sqr()).sum()
    }

    pub fn integrate(&self, values: &[Complex64]) -> Complex64 {
        self.weights.iter().zip(values).map(|(w, v)| v * w).sum()
    }

    /// `Q_l^m(θ_i)` per ring with `Y_{l,m} = Q_l^m(θ) e^{imφ}`, indexed by `lm_index`.
    fn ring_legendre(&self, lmax: usize) -> Vec<Vec<f64>> {
        self.cos_theta
            .iter()
            .map(|&ct| {
                let st = (1.0 - ct * ct).max(0.0).sqrt();
                let p = normalized_legendre_all(lmax, ct, st);
                let mut q = vec![0.0; (lmax + 1) * (lmax + 1)];
                for l in 0..=lmax {
                    for m in 0..=l {
                        let v = p[l * (l + 1) / 2 + m];
                        q[lm_index(l, m as i64)] = v;
                        if m > 0 {
                            q[lm_index(l, -(m as i64))] = if m % 2 == 0 { v } else { -v };
                        }
                    }
                }
                q
            })
            .collect()
    }
}

/// Transform plan binding a quadrature to a maximal degree; reuses the
/// per-ring Legendre tables and azimuthal phases across many transforms.
#[derive(Debug, Clone)]
pub struct TransformPlan {
    lmax: usize,
    rings: usize,
    nphi: usize,
    legendre: Vec<Vec<f64>>,
    ring_weights: Vec<f64>,
    /// `e^{imφ_j}` for `m = -lmax..=lmax`, row-major in `m`.
    phases: Vec<Complex64>,
}

impl TransformPlan {
    pub fn new(quad: &SphereQuadrature, lmax: usize) -> Self {
        let nphi = quad.phis.len();
        let dphi = 2.0 * PI / nphi as f64;
        let mut phases = Vec::with_capacity((2 * lmax + 1) * nphi);
        for m in -(lmax as i64)..=lmax as i64 {
            for &phi in &quad.phis {
                phases.push(Complex64::from_polar(1.0, m as f64 * phi));
            }
        }
        Self {
            lmax,
            rings: quad.rings(),
            nphi,
            legendre: quad.ring_legendre(lmax),
            ring_weights: quad.ring_weights.iter().map(|w| w * dphi).collect(),
            phases,
        }
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn coefficient_count(&self) -> usize {
        (self.lmax + 1) * (self.lmax + 1)
    }

    fn phase(&self, m: i64, j: usize) -> Complex64 {
        self.phases[(m + self.lmax as i64) as usize * self.nphi + j]
    }

    /// Writes `c_{l,m} = Σ_i w_i v_i conj(Y_{l,m}(β_i))` into `out`.
    pub fn analyze_into(&self, samples: &[Complex64], out: &mut [Complex64]) {
        let lmax = self.lmax as i64;
        out.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        let mut fourier = vec![Complex64::new(0.0, 0.0); 2 * self.lmax + 1];
        for i in 0..self.rings {
            let ring = &samples[i * self.nphi..(i + 1) * self.nphi];
            for m in -lmax..=lmax {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, v) in ring.iter().enumerate() {
                    acc += v * self.phase(m, j).conj();
                }
                fourier[(m + lmax) as usize] = acc * self.ring_weights[i];
            }
            let q = &self.legendre[i];
            for l in 0..=self.lmax {
                for m in -(l as i64)..=l as i64 {
                    let idx = lm_index(l, m);
                    out[idx] += fourier[(m + lmax) as usize] * q[idx];
                }
            }
        }
    }

    /// Writes `v_i = Σ c_{l,m} Y_{l,m}(β_i)` into `out`.
    pub fn synthesize_into(&self, coeffs: &[Complex64], out: &mut [Complex64]) {
        let lmax = self.lmax as i64;
        let mut ring_m = vec![Complex64::new(0.0, 0.0); 2 * self.lmax + 1];
        for i in 0..self.rings {
            let q = &self.legendre[i];
            ring_m.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            for l in 0..=self.lmax {
                for m in -(l as i64)..=l as i64 {
                    let idx = lm_index(l, m);
                    ring_m[(m + lmax) as usize] += coeffs[idx] * q[idx];
                }
            }
            for j in 0..self.nphi {
                let mut acc = Complex64::new(0.0, 0.0);
                for m in -lmax..=lmax {
                    acc += ring_m[(m + lmax) as usize] * self.phase(m, j);
                }
                out[i * self.nphi + j] = acc;
            }
        }
    }
}

/// Coefficients `c_{l,m}`, `0 ≤ l ≤ L`, `|m| ≤ l`, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSpectrum {
    degree: usize,
    coeffs: Vec<Complex64>,
}

impl HarmonicSpectrum {
    pub fn zeros(degree: usize) -> Self {
        Self {
            degree,
            coeffs: vec![Complex64::new(0.0, 0.0); (degree + 1) * (degree + 1)],
        }
    }

    /// Builds a spectrum from dense coefficients; the length must be a square.
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Result<Self> {
        let n = coeffs.len();
        let side = (n as f64).sqrt().round() as usize;
        if side == 0 || side * side != n {
            return Err(Error::InvalidArgument(format!(
                "coefficient count {n} is not (L+1)^2"
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        Ok(Self {
            degree: side - 1,
            coeffs,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Zero outside the stored range.
    pub fn get(&self, l: usize, m: i64) -> Complex64 {
        if l > self.degree || m.unsigned_abs() as usize > l {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[lm_index(l, m)]
        }
    }

    pub fn set(&mut self, l: usize, m: i64, value: Complex64) -> Result<()> {
        if m.unsigned_abs() as usize > l {
            return Err(Error::InvalidOrder { l, m });
        }
        if l > self.degree {
            return Err(Error::DegreeOutOfRange {
                degree: l,
                max: self.degree,
            });
        }
        self.coeffs[lm_index(l, m)] = value;
        Ok(())
    }

    /// `(l, m, c_{l,m})` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, i64, Complex64)> + '_ {
        (0..=self.degree).flat_map(move |l| {
            (-(l as i64)..=l as i64).map(move |m| (l, m, self.coeffs[lm_index(l, m)]))
        })
    }

    /// Copy with storage degree `degree`, zero-padding or truncating.
    pub fn resized(&self, degree: usize) -> Self {
        let mut out = Self::zeros(degree);
        let n = out.coeffs.len().min(self.coeffs.len());
        out.coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        out
    }

    /// `Σ_m |c_{l,m}|²` for each degree.
    pub fn degree_masses(&self) -> Vec<f64> {
        (0..=self.degree)
            .map(|l| {
                (-(l as i64)..=l as i64)
                    .map(|m| self.coeffs[lm_index(l, m)].norm_sqr())
                    .sum()
            })
            .collect()
    }

    /// `Σ_{l > degree} Σ_m |c_{l,m}|²`.
    pub fn tail_mass(&self, degree: usize) -> f64 {
        self.degree_masses().iter().skip(degree + 1).sum()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `self − other` on the larger of the two degrees.
    pub fn difference(&self, other: &Self) -> Self {
        let degree = self.degree.max(other.degree);
        let mut out = self.resized(degree);
        for (o, c) in out.coeffs.iter_mut().zip(other.resized(degree).coeffs) {
            *o -= c;
        }
        out
    }

    /// `(Σ |c_{l,m}|²)^{1/2}`, the L²(S²) norm of the represented function.
    pub fn parseval_norm(&self) -> f64 {
        parseval_norm(self)
    }
}

/// Samples of a scattering amplitude on the nodes of a sphere quadrature.
#[derive(Debug, Clone)]
pub struct FarField {
    quadrature: SphereQuadrature,
    values: Vec<Complex64>,
}

impl FarField {
    pub fn new(quadrature: SphereQuadrature, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != quadrature.len() {
            return Err(Error::InvalidArgument(format!(
                "far field has {} values for {} nodes",
                values.len(),
                quadrature.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidArgument("far field contains non-finite values".into()));
        }
        Ok(Self { quadrature, values })
    }

    pub fn quadrature(&self) -> &SphereQuadrature {
        &self.quadrature
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Spectrum up to the largest degree the quadrature resolves exactly.
    pub fn spectrum(&self) -> HarmonicSpectrum {
        let lmax = self.quadrature.order() - 1;
        analyze(&self.values, &self.quadrature, lmax).expect("degree within quadrature order")
    }

    /// `‖self − f‖_{L²(S²)}` by the quadrature rule, with `f` synthesized on the same nodes.
    pub fn distance_to(&self, f: &HarmonicSpectrum) -> f64 {
        let target = synthesize_on_sphere(f, &self.quadrature);
        let diff: Vec<Complex64> = self.values.iter().zip(&target).map(|(a, b)| a - b).collect();
        self.quadrature.norm_squared(&diff).sqrt()
    }
}

pub fn build_sphere_quadrature(n: usize) -> Result<SphereQuadrature> {
    SphereQuadrature::new(n)
}

/// Forward transform of point samples to degree `lmax`.
pub fn analyze(samples: &[Complex64], quad: &SphereQuadrature, lmax: usize) -> Result<HarmonicSpectrum> {
    if quad.order() < lmax + 1 {
        return Err(Error::InvalidArgument(format!(
            "quadrature order {} too low for degree {lmax}: need order >= {}",
            quad.order(),
            lmax + 1
        )));
    }
    if samples.len() != quad.len() {
        return Err(Error::InvalidArgument(format!(
            "{} samples for {} quadrature nodes",
            samples.len(),
            quad.len()
        )));
    }
    let plan = TransformPlan::new(quad, lmax);
    let mut spec = HarmonicSpectrum::zeros(lmax);
    plan.analyze_into(samples, &mut spec.coeffs);
    Ok(spec)
}

/// Inverse transform: values of `Σ c_{l,m} Y_{l,m}` at the quadrature nodes.
pub fn synthesize_on_sphere(spec: &HarmonicSpectrum, quad: &SphereQuadrature) -> Vec<Complex64> {
    let plan = TransformPlan::new(quad, spec.degree());
    let mut out = vec![Complex64::new(0.0, 0.0); quad.len()];
    plan.synthesize_into(&spec.coeffs, &mut out);
    out
}

pub fn parseval_norm(spec: &HarmonicSpectrum) -> f64 {
    spec.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Smallest `L` whose spectral tail `Σ_{l>L} |c_{l,m}|²` is below `ε²`.
pub fn choose_truncation(spec: &HarmonicSpectrum, epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be > 0, got {epsilon}")));
    }
    let masses = spec.degree_masses();
    let target = epsilon * epsilon;
    let mut tail: f64 = masses.iter().sum();
    for (l, mass) in masses.iter().enumerate() {
        tail -= mass;
        // Recompute exactly near the threshold; the running difference can drift.
        let exact_tail: f64 = if (tail - target).abs() < 1e-12 * target.max(1.0) {
            masses[l + 1..].iter().sum()
        } else {
            tail
        };
        if exact_tail < target {
            return Ok(l);
        }
    }
    Ok(spec.degree())
}
