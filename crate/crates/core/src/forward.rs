//! Forward scattering: the Lippmann–Schwinger equation
//!
//! ```text
//! u(x) = u₀(x) − ∫_D g(x, y) q(y) u(y) dy,   u₀ = e^{ikα·x},
//! ```
//!
//! its far field `A(β) = −(1/4π) ∫ e^{−ikβ·x} q u dx`, and an exact
//! partial-wave solution for radially piecewise-constant potentials.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::potential::{BallGrid, ComplexField, GridGreenOperator};
use crate::specfun::{spherical_bessel_jy_complex, Direction};
use crate::sphere::{FarField, SphereQuadrature};
use crate::synthesis::WaveConfig;

/// Default relative residual of the linear solve.
pub const DEFAULT_SOLVER_TOL: f64 = 1e-8;
/// Node count up to which a failed iterative solve falls back to LU.
pub const DENSE_LIMIT: usize = 4096;
const RESTART: usize = 60;
const MAX_ITERATIONS: usize = 1200;

/// Outcome of [`solve_scattering`].
#[derive(Debug, Clone)]
pub struct ScatteringSolution {
    pub u: ComplexField,
    pub iterations: usize,
    /// Relative residual after every GMRES step.
    pub residual_history: Vec<f64>,
    /// `‖u + G(qu) − u₀‖ / ‖u₀‖`, recomputed after the solve.
    pub relative_residual: f64,
    pub used_dense: bool,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

struct GmresOutcome {
    x: Vec<Complex64>,
    history: Vec<f64>,
    iterations: usize,
    converged: bool,
}

/// Restarted GMRES with modified Gram–Schmidt and Givens rotations.
fn gmres(
    mut apply: impl FnMut(&[Complex64], &mut [Complex64]),
    b: &[Complex64],
    mut x: Vec<Complex64>,
    tol: f64,
    restart: usize,
    max_iterations: usize,
) -> GmresOutcome {
    let n = b.len();
    let zero = Complex64::new(0.0, 0.0);
    let bnorm = norm(b);
    let mut history = Vec::new();
    if bnorm == 0.0 {
        return GmresOutcome {
            x: vec![zero; n],
            history,
            iterations: 0,
            converged: true,
        };
    }
    let mut ax = vec![zero; n];
    let mut iterations = 0;
    loop {
        apply(&x, &mut ax);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        if beta / bnorm <= tol {
            history.push(beta / bnorm);
            return GmresOutcome {
                x,
                history,
                iterations,
                converged: true,
            };
        }
        if iterations >= max_iterations {
            return GmresOutcome {
                x,
                history,
                iterations,
                converged: false,
            };
        }
        let mut basis: Vec<Vec<Complex64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess: Vec<Vec<Complex64>> = Vec::new();
        let mut cs: Vec<f64> = Vec::new();
        let mut sn: Vec<Complex64> = Vec::new();
        let mut g = vec![Complex64::new(beta, 0.0)];
        let mut w = vec![zero; n];
        for j in 0..restart {
            apply(&basis[j], &mut w);
            let mut col = vec![zero; j + 2];
            for (i, v) in basis.iter().enumerate() {
                let h = dot(v, &w);
                col[i] = h;
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= h * vk;
                }
            }
            let hnext = norm(&w);
            col[j + 1] = Complex64::new(hnext, 0.0);
            for i in 0..j {
                let (a, b) = (col[i], col[i + 1]);
                col[i] = cs[i] * a + sn[i] * b;
                col[i + 1] = -sn[i].conj() * a + cs[i] * b;
            }
            let (a, b) = (col[j], col[j + 1]);
            let rho = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let (c, s) = if a.norm() == 0.0 {
                (0.0, Complex64::new(1.0, 0.0))
            } else {
                (a.norm() / rho, a * b.conj() / (a.norm() * rho))
            };
            col[j] = c * a + s * b;
            col[j + 1] = zero;
            cs.push(c);
            sn.push(s);
            g.push(-s.conj() * g[j]);
            g[j] = c * g[j];
            hess.push(col);
            iterations += 1;
            let rel = g[j + 1].norm() / bnorm;
            history.push(rel);
            let done = rel <= tol || hnext <= 1e-14 * bnorm || iterations >= max_iterations;
            if !done && j + 1 < restart {
                basis.push(w.iter().map(|v| v / hnext).collect());
            }
            if done || j + 1 == restart {
                // Back substitution on the triangular system.
                let m = j + 1;
                let mut y = vec![zero; m];
                for i in (0..m).rev() {
                    let mut acc = g[i];
                    for k in i + 1..m {
                        acc -= hess[k][i] * y[k];
                    }
                    y[i] = acc / hess[i][i];
                }
                for (k, yk) in y.iter().enumerate() {
                    for (xi, vi) in x.iter_mut().zip(&basis[k]) {
                        *xi += yk * vi;
                    }
                }
                break;
            }
        }
    }
}

/// Solves `u + G(q u) = u₀` on the grid of `op`.
///
/// GMRES runs first; if it fails to reach `tol` and the grid has at most
/// [`DENSE_LIMIT`] nodes, the system is assembled and solved by LU.
pub fn solve_scattering(q: &ComplexField, op: &GridGreenOperator, cfg: &WaveConfig, tol: f64) -> Result<ScatteringSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("solver tolerance must be > 0, got {tol}")));
    }
    let grid = Arc::clone(op.grid());
    if q.values().len() != grid.len() {
        return Err(Error::InvalidArgument("potential lives on a different grid".into()));
    }
    if !q.is_finite() {
        return Err(Error::InvalidArgument("potential has non-finite values".into()));
    }
    let u0 = grid.incident_field(cfg);
    let qv = q.values();
    let n = grid.len();
    let mut tmp = vec![Complex64::new(0.0, 0.0); n];
    let mut apply = |v: &[Complex64], out: &mut [Complex64]| {
        for ((t, qi), vi) in tmp.iter_mut().zip(qv).zip(v) {
            *t = qi * vi;
        }
        op.apply(&tmp, out);
        for (o, vi) in out.iter_mut().zip(v) {
            *o += vi;
        }
    };
    let outcome = gmres(&mut apply, u0.values(), u0.values().to_vec(), tol, RESTART, MAX_ITERATIONS);
    let mut history = outcome.history;
    let iterations = outcome.iterations;
    let (x, used_dense) = if outcome.converged {
        (outcome.x, false)
    } else if n <= DENSE_LIMIT {
        let m = dense_system(q, op);
        let rhs = DVector::from_column_slice(u0.values());
        let sol = m.lu().solve(&rhs).ok_or(Error::SolverNotConverged {
            iterations,
            residual_history: history.clone(),
        })?;
        (sol.iter().copied().collect(), true)
    } else {
        return Err(Error::SolverNotConverged {
            iterations,
            residual_history: history,
        });
    };
    let mut ax = vec![Complex64::new(0.0, 0.0); n];
    apply(&x, &mut ax);
    let resid = ax.iter().zip(u0.values()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt() / norm(u0.values());
    if used_dense {
        history.push(resid);
    }
    if !(resid <= tol.max(1e-12) * 10.0) {
        return Err(Error::SolverNotConverged {
            iterations,
            residual_history: history,
        });
    }
    Ok(ScatteringSolution {
        u: ComplexField::new(grid, x)?,
        iterations,
        residual_history: history,
        relative_residual: resid,
        used_dense,
    })
}

/// `A(β) = −(1/4π) Σ_n w_n e^{−ikβ·x_n} s_n` for a source `s = q u` on the grid.
pub fn far_field_of_source(source: &ComplexField, quad: &SphereQuadrature, cfg: &WaveConfig) -> Result<FarField> {
    let grid = source.grid();
    let weighted: Vec<(usize, Complex64)> = source
        .values()
        .iter()
        .zip(grid.weights())
        .enumerate()
        .filter(|(_, (s, _))| **s != Complex64::new(0.0, 0.0))
        .map(|(n, (s, w))| (n, s * *w))
        .collect();
    let values = quad
        .nodes()
        .iter()
        .map(|beta| {
            let sum: Complex64 = weighted
                .iter()
                .map(|(n, sw)| sw * Complex64::from_polar(1.0, -cfg.k * beta.dot(&grid.points()[*n])))
                .sum();
            -sum / (4.0 * PI)
        })
        .collect();
    FarField::new(quad.clone(), values)
}

/// Far field of the solution `u` of the scattering problem for `q`.
pub fn far_field(q: &ComplexField, u: &ComplexField, quad: &SphereQuadrature, cfg: &WaveConfig) -> Result<FarField> {
    if q.values().len() != u.values().len() {
        return Err(Error::InvalidArgument("q and u live on different grids".into()));
    }
    far_field_of_source(&q.zip_with(u, |q, u| q * u), quad, cfg)
}

/// Radially piecewise-constant potential: `q(x) = values[j]` for
/// `radii[j−1] < |x| ≤ radii[j]` (with `radii[−1] = 0`), zero beyond.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPotentialSpec {
    radii: Vec<f64>,
    values: Vec<Complex64>,
}

impl RadialPotentialSpec {
    pub fn new(radii: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if radii.is_empty() || radii.len() != values.len() {
            return Err(Error::InvalidArgument(
                "need one value per shell and at least one shell".into(),
            ));
        }
        let mut prev = 0.0;
        for &r in &radii {
            if !(r > prev && r.is_finite()) {
                return Err(Error::InvalidArgument(format!("shell radii must increase from 0, got {radii:?}")));
            }
            prev = r;
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidArgument("shell values must be finite".into()));
        }
        Ok(Self { radii, values })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn outer_radius(&self) -> f64 {
        *self.radii.last().expect("non-empty")
    }

    pub fn value_at(&self, r: f64) -> Complex64 {
        self.radii
            .iter()
            .position(|&rho| r <= rho)
            .map_or(Complex64::new(0.0, 0.0), |j| self.values[j])
    }

    /// Samples on a grid; radii exactly on a shell interface belong to the
    /// inner shell, which is where composite grid segments put no node.
    pub fn sample(&self, grid: &Arc<BallGrid>) -> ComplexField {
        ComplexField::from_fn(Arc::clone(grid), |x| {
            self.value_at((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt())
        })
    }
}

/// `3 + ⌈ka⌉ + 10`.
pub fn oracle_degree(k: f64, a: f64) -> usize {
    3 + (k * a).ceil() as usize + 10
}

fn legendre_all(lmax: usize, x: f64) -> Vec<f64> {
    let mut p = vec![0.0; lmax + 1];
    p[0] = 1.0;
    if lmax >= 1 {
        p[1] = x;
    }
    for l in 1..lmax {
        p[l + 1] = ((2 * l + 1) as f64 * x * p[l] - l as f64 * p[l - 1]) / (l + 1) as f64;
    }
    p
}

fn i_pow(l: usize) -> Complex64 {
    match l % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// `j_l(z), j_l'(z), y_l(z), y_l'(z)` for complex `z ≠ 0`.
fn jy_with_derivatives(l: usize, z: Complex64) -> [Complex64; 4] {
    let (j, y) = spherical_bessel_jy_complex(l + 1, z);
    let lf = l as f64;
    [j[l], j[l] * lf / z - j[l + 1], y[l], y[l] * lf / z - y[l + 1]]
}

/// Exact partial-wave solution for a [`RadialPotentialSpec`].
#[derive(Debug, Clone)]
pub struct PartialWaveSolution {
    k: f64,
    alpha: Direction,
    spec: RadialPotentialSpec,
    kappas: Vec<Complex64>,
    /// `coeffs[l][s] = (A, B)`: inside shell `s`, `R_l = A j_l(κ_s r) + B y_l(κ_s r)`.
    coeffs: Vec<Vec<(Complex64, Complex64)>>,
    /// Outside: `R_l = j_l(kr) + t_l h_l(kr)`.
    t: Vec<Complex64>,
}

impl PartialWaveSolution {
    pub fn new(spec: &RadialPotentialSpec, cfg: &WaveConfig, lmax: usize) -> Result<Self> {
        let k = cfg.k;
        let kappas: Vec<Complex64> = spec
            .values
            .iter()
            .map(|q| (Complex64::new(k * k, 0.0) - q).sqrt())
            .collect();
        if kappas.iter().any(|kp| kp.norm() < 1e-12) {
            return Err(Error::Domain("a shell has k² = q, where the radial basis degenerates".into()));
        }
        let mut coeffs = Vec::with_capacity(lmax + 1);
        let mut t = Vec::with_capacity(lmax + 1);
        let kc = Complex64::new(k, 0.0);
        for l in 0..=lmax {
            let mut shells = vec![(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))];
            let value_and_slope = |s: usize, r: f64, ab: (Complex64, Complex64)| {
                let kp = kappas[s];
                let [j, dj, y, dy] = jy_with_derivatives(l, kp * r);
                (ab.0 * j + ab.1 * y, kp * (ab.0 * dj + ab.1 * dy))
            };
            for s in 1..spec.radii.len() {
                let rho = spec.radii[s - 1];
                let (v, d) = value_and_slope(s - 1, rho, shells[s - 1]);
                let kp = kappas[s];
                let [j, dj, y, dy] = jy_with_derivatives(l, kp * rho);
                // [j y; κj' κy'] (A, B)ᵀ = (v, d)ᵀ
                let det = j * kp * dy - y * kp * dj;
                if det.norm() == 0.0 {
                    return Err(Error::OracleSingular { degree: l });
                }
                shells.push(((v * kp * dy - y * d) / det, (j * d - kp * dj * v) / det));
            }
            let last = spec.radii.len() - 1;
            let rho = spec.outer_radius();
            let (v, d) = value_and_slope(last, rho, shells[last]);
            let [j, dj, y, dy] = jy_with_derivatives(l, kc * rho);
            let (h, dh) = (j + Complex64::i() * y, dj + Complex64::i() * dy);
            let den = v * kc * dh - d * h;
            if den.norm() == 0.0 || !den.re.is_finite() {
                return Err(Error::OracleSingular { degree: l });
            }
            let tl = (d * j - v * kc * dj) / den;
            let scale = (j + tl * h) / v;
            if !scale.re.is_finite() || !scale.im.is_finite() {
                return Err(Error::OracleSingular { degree: l });
            }
            coeffs.push(shells.into_iter().map(|(a, b)| (a * scale, b * scale)).collect());
            t.push(tl);
        }
        Ok(Self {
            k,
            alpha: cfg.alpha,
            spec: spec.clone(),
            kappas,
            coeffs,
            t,
        })
    }

    pub fn degree(&self) -> usize {
        self.t.len() - 1
    }

    /// `a_l = −i t_l`, so that `A(β) = Σ (2l+1) a_l P_l(α·β) / k`. For real
    /// potentials `a_l = e^{iδ_l} sin δ_l`.
    pub fn partial_amplitudes(&self) -> Vec<Complex64> {
        self.t.iter().map(|t| -Complex64::i() * t).collect()
    }

    pub fn amplitude(&self, beta: &Direction) -> Complex64 {
        let p = legendre_all(self.degree(), self.alpha.dot(&beta.vector()));
        self.partial_amplitudes()
            .iter()
            .enumerate()
            .map(|(l, a)| a * ((2 * l + 1) as f64 * p[l]))
            .sum::<Complex64>()
            / self.k
    }

    /// `u(x) = Σ (2l+1) i^l R_l(|x|) P_l(α·x̂)`.
    pub fn wavefunction(&self, x: &[f64; 3]) -> Complex64 {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let lmax = self.degree();
        let cos_gamma = if r > 0.0 { self.alpha.dot(x) / r } else { 1.0 };
        let p = legendre_all(lmax, cos_gamma);
        let radial: Vec<Complex64> = match self.spec.radii.iter().position(|&rho| r <= rho) {
            _ if r == 0.0 => {
                let mut v = vec![Complex64::new(0.0, 0.0); lmax + 1];
                v[0] = self.coeffs[0][0].0;
                v
            }
            Some(s) => {
                let (j, y) = spherical_bessel_jy_complex(lmax, self.kappas[s] * r);
                (0..=lmax)
                    .map(|l| {
                        let (a, b) = self.coeffs[l][s];
                        if b == Complex64::new(0.0, 0.0) { a * j[l] } else { a * j[l] + b * y[l] }
                    })
                    .collect()
            }
            None => {
                let (j, y) = spherical_bessel_jy_complex(lmax, Complex64::new(self.k * r, 0.0));
                (0..=lmax).map(|l| j[l] + self.t[l] * (j[l] + Complex64::i() * y[l])).collect()
            }
        };
        (0..=lmax)
            .map(|l| i_pow(l) * radial[l] * ((2 * l + 1) as f64 * p[l]))
            .sum()
    }
}

/// Far field of a radial potential from its partial-wave expansion.
pub fn partial_wave_amplitude(spec: &RadialPotentialSpec, cfg: &WaveConfig, lmax: usize, quad: &SphereQuadrature) -> Result<FarField> {
    let sol = PartialWaveSolution::new(spec, cfg, lmax)?;
    FarField::new(quad.clone(), quad.nodes().iter().map(|b| sol.amplitude(b)).collect())
}

/// Dense assembly of `I + G diag(q)`; exposed for diagnostics and tests.
pub fn dense_system(q: &ComplexField, op: &GridGreenOperator) -> DMatrix<Complex64> {
    let n = op.grid().len();
    let mut m = op.dense_matrix();
    for (c, qc) in q.values().iter().enumerate() {
        for r in 0..n {
            m[(r, c)] *= qc;
        }
        m[(c, c)] += Complex64::new(1.0, 0.0);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{denominator_field, potential_from_source, sample_source};
    use crate::sphere::HarmonicSpectrum;
    use crate::synthesis::{born_amplitude, SourceDensity};

    fn cfg(a: f64) -> WaveConfig {
        WaveConfig::new(1.0, Direction::NORTH, 1e-3, a.min(1.0), a).unwrap()
    }

    #[test]
    fn zero_potential_leaves_the_incident_wave() {
        let c = cfg(1.0);
        let grid = Arc::new(BallGrid::new(1.0, &[], 4, 4).unwrap());
        let op = GridGreenOperator::new(Arc::clone(&grid), c.k).unwrap();
        let q = ComplexField::zeros(Arc::clone(&grid));
        let sol = solve_scattering(&q, &op, &c, DEFAULT_SOLVER_TOL).unwrap();
        assert_eq!(sol.u.values(), grid.incident_field(&c).values());
        let quad = SphereQuadrature::new(4).unwrap();
        let a = far_field(&q, &sol.u, &quad, &c).unwrap();
        assert!(a.values().iter().all(|v| *v == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn weak_potential_is_born_to_first_order() {
        let c = cfg(1.0);
        let grid = Arc::new(BallGrid::new(1.0, &[0.5], 8, 6).unwrap());
        let op = GridGreenOperator::new(Arc::clone(&grid), c.k).unwrap();
        let quad = SphereQuadrature::new(6).unwrap();
        let shape = ComplexField::from_fn(Arc::clone(&grid), |x| {
            Complex64::new(1.0 + x[0], 0.5 * x[2]) * (1.0 - x[1] * x[1])
        });
        let u0 = grid.incident_field(&c);
        let mut errs = Vec::new();
        for t in [1e-3, 1e-4] {
            let q = shape.map(|v| v * t);
            let sol = solve_scattering(&q, &op, &c, 1e-12).unwrap();
            let a = far_field(&q, &sol.u, &quad, &c).unwrap();
            let born = far_field(&q, &u0, &quad, &c).unwrap();
            let num: f64 = quad.norm_squared(
                &a.values().iter().zip(born.values()).map(|(x, y)| x - y).collect::<Vec<_>>(),
            );
            errs.push((num / quad.norm_squared(born.values())).sqrt());
        }
        // The relative deviation from Born is first order in the strength.
        assert!(errs[1] < 1e-4, "{errs:?}");
        assert!((errs[0] / errs[1] - 10.0).abs() < 0.5, "{errs:?}");
    }

    #[test]
    fn synthesized_potential_reproduces_its_source() {
        let c = WaveConfig::new(1.0, Direction::NORTH, 1e-3, 0.8, 1.0).unwrap();
        let grid = Arc::new(BallGrid::for_config(&c, 10, 6).unwrap());
        let op = GridGreenOperator::new(Arc::clone(&grid), c.k).unwrap();
        let mut s = HarmonicSpectrum::zeros(2);
        s.set(0, 0, Complex64::new(0.9, 0.0)).unwrap();
        s.set(1, 0, Complex64::new(0.0, -0.6)).unwrap();
        s.set(2, 1, Complex64::new(0.3, 0.3)).unwrap();
        let h = SourceDensity::new(s, c.b).unwrap();
        let psi = denominator_field(&h, &grid, &c).unwrap().psi;
        let q = potential_from_source(&h, &psi, 1e-6).unwrap();
        let sol = solve_scattering(&q, &op, &c, 1e-12).unwrap();
        let hs = sample_source(&h, &grid);
        for n in 0..grid.len() {
            if hs.values()[n] != Complex64::new(0.0, 0.0) {
                assert!((sol.u.values()[n] - psi.values()[n]).norm() < 1e-8);
            }
        }
        let quad = SphereQuadrature::new(6).unwrap();
        let a = far_field(&q, &sol.u, &quad, &c).unwrap();
        let born = born_amplitude(&h, &c).unwrap();
        assert!(a.distance_to(&born) < 1e-8, "{}", a.distance_to(&born));
    }

    #[test]
    fn dense_fallback_matches_gmres() {
        let c = cfg(1.0);
        let grid = Arc::new(BallGrid::new(1.0, &[], 4, 3).unwrap());
        let op = GridGreenOperator::new(Arc::clone(&grid), c.k).unwrap();
        let q = ComplexField::from_fn(Arc::clone(&grid), |x| Complex64::new(2.0 + x[0], -1.0));
        let sol = solve_scattering(&q, &op, &c, 1e-12).unwrap();
        let m = dense_system(&q, &op);
        let u = m.lu().solve(&DVector::from_column_slice(grid.incident_field(&c).values())).unwrap();
        for (a, b) in u.iter().zip(sol.u.values()) {
            assert!((a - b).norm() < 1e-9);
        }
        assert!(sol.relative_residual <= 1e-11);
    }

    /// `χ'' = (l(l+1)/r² + q − k²) χ` by RK4 from `χ ~ r^{l+1}`.
    fn radial_ode(l: usize, q: impl Fn(f64) -> f64, k: f64, rmax: f64, steps: usize) -> (f64, f64) {
        let f = |r: f64, y: [f64; 2]| [y[1], ((l * (l + 1)) as f64 / (r * r) + q(r) - k * k) * y[0]];
        let r0: f64 = 1e-6;
        let mut y = [r0.powi(l as i32 + 1), (l + 1) as f64 * r0.powi(l as i32)];
        let h = (rmax - r0) / steps as f64;
        let mut r = r0;
        for _ in 0..steps {
            let k1 = f(r, y);
            let k2 = f(r + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
            let k3 = f(r + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
            let k4 = f(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
            r += h;
        }
        (y[0], y[1])
    }

    #[test]
    fn square_well_s_wave_phase_shift() {
        let c = cfg(1.0);
        let q0 = -0.2;
        let spec = RadialPotentialSpec::new(vec![1.0], vec![Complex64::new(q0, 0.0)]).unwrap();
        let sol = PartialWaveSolution::new(&spec, &c, 4).unwrap();
        let a0 = sol.partial_amplitudes()[0];
        let (k, rho) = (1.0f64, 1.0f64);
        let kappa = (k * k - q0).sqrt();
        let delta = (k * (kappa * rho).tan() / kappa).atan() - k * rho;
        let want = Complex64::from_polar(delta.sin(), delta);
        assert!((a0 - want).norm() < 1e-12, "{a0} vs {want}");
        // Independent check: integrate the radial equation through the well.
        let (chi, dchi) = radial_ode(0, |_| q0, k, rho, 20000);
        let delta_ode = (k * chi / dchi).atan() - k * rho;
        assert!((delta - delta_ode).abs() < 1e-9);
        // Higher degrees against the same integrator.
        for l in 1..=3 {
            let (chi, dchi) = radial_ode(l, |_| q0, k, rho, 20000);
            let x = Complex64::new(k * rho, 0.0);
            let [j, dj, y, dy] = jy_with_derivatives(l, x);
            // Outside χ/r ∝ cos δ j − sin δ y; match the log-derivative of χ.
            let gamma = dchi / chi - 1.0 / rho;
            let tan = ((k * dj - gamma * j) / (k * dy - gamma * y)).re;
            let delta = tan.atan();
            let want = Complex64::from_polar(delta.sin(), delta);
            assert!((sol.partial_amplitudes()[l] - want).norm() < 1e-9, "l={l}");
        }
    }

    #[test]
    fn weak_well_matches_born_partial_waves() {
        let c = cfg(1.0);
        let mut slopes = Vec::new();
        for q0 in [1e-2, 1e-3] {
            let spec = RadialPotentialSpec::new(vec![1.0], vec![Complex64::new(q0, 0.0)]).unwrap();
            let sol = PartialWaveSolution::new(&spec, &c, 3).unwrap();
            let mut worst: f64 = 0.0;
            for (l, a) in sol.partial_amplitudes().iter().enumerate() {
                let born = -q0
                    * crate::quadrature::integrate_real(
                        |r| {
                            let j = crate::specfun::spherical_bessel_j(l, r).unwrap();
                            j * j * r * r
                        },
                        0.0,
                        1.0,
                        &[],
                        Default::default(),
                    )
                    .unwrap();
                worst = worst.max((a - born).norm() / born.abs());
            }
            slopes.push(worst);
        }
        // Relative deviation from Born shrinks linearly with the strength.
        assert!(slopes[0] < 1e-2 && slopes[1] < 1e-3, "{slopes:?}");
        assert!((slopes[0] / slopes[1] - 10.0).abs() < 1.0, "{slopes:?}");
    }

    #[test]
    fn wavefunction_solves_the_integral_equation_for_a_well() {
        // u from the partial waves vs. the grid solver at interior points.
        let c = cfg(1.0);
        let spec = RadialPotentialSpec::new(vec![1.0], vec![Complex64::new(0.1, 0.0)]).unwrap();
        let pw = PartialWaveSolution::new(&spec, &c, oracle_degree(1.0, 1.0)).unwrap();
        let grid = Arc::new(BallGrid::new(1.0, &[], 12, 10).unwrap());
        let op = GridGreenOperator::new(Arc::clone(&grid), c.k).unwrap();
        let sol = solve_scattering(&spec.sample(&grid), &op, &c, 1e-12).unwrap();
        for n in (0..grid.len()).step_by(97).take(10) {
            let x = grid.points()[n];
            assert!((sol.u.values()[n] - pw.wavefunction(&x)).norm() < 1e-4);
        }
        // Continuity across the outer radius.
        let inside = pw.wavefunction(&[0.0, 0.3, 1.0 - 1e-9]);
        let outside = pw.wavefunction(&[0.0, 0.3, 1.0 + 1e-9]);
        assert!((inside - outside).norm() < 1e-7);
    }

    #[test]
    fn zero_potential_oracle_is_zero() {
        let c = cfg(1.0);
        let spec = RadialPotentialSpec::new(vec![0.5, 1.0], vec![Complex64::new(0.0, 0.0); 2]).unwrap();
        let quad = SphereQuadrature::new(4).unwrap();
        let a = partial_wave_amplitude(&spec, &c, 8, &quad).unwrap();
        assert!(a.values().iter().all(|v| v.norm() < 1e-15));
        assert!(RadialPotentialSpec::new(vec![0.5, 0.4], vec![Complex64::new(0.0, 0.0); 2]).is_err());
    }
}
