//! Volume potential of a general gridded field.
//!
//! On each shell the field is expanded in spherical harmonics up to degree
//! `lmax = polar_order − 1`; in `r` it is interpolated by the Lagrange
//! polynomial through the Gauss nodes of its radial segment. The radial part
//! of the Green's function is then integrated against each Lagrange basis
//! function exactly (adaptive quadrature split at the target radius), which
//! leaves one `n_r × n_r` matrix per degree:
//!
//! ```text
//! W_l[i][j] = ik ∫ j_l(k min(r_i, s)) h_l(k max(r_i, s)) L_j(s) s² ds.
//! ```
//!
//! There is no collocation singularity to correct: the `1/|x − y|` behaviour
//! is absorbed into the radial integrals.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::sync::Arc;

use super::grid::{BallGrid, ComplexField};
use super::separable::kernel_products;
use crate::error::{Error, Result};
use crate::quadrature::{barycentric_weights, integrate_vec, lagrange_basis, Tolerance};
use crate::specfun::lm_index;
use crate::sphere::TransformPlan;

const WEIGHT_TOL: Tolerance = Tolerance {
    rel: 1e-11,
    abs: 1e-16,
    abs_scale: 1e-13,
    max_intervals: 1000,
};

#[derive(Debug, Clone)]
pub struct GridGreenOperator {
    grid: Arc<BallGrid>,
    k: f64,
    lmax: usize,
    plan: TransformPlan,
    /// `radial[l]` is `W_l`, row-major `n_r × n_r`.
    radial: Vec<Vec<Complex64>>,
}

impl GridGreenOperator {
    /// Operator resolving degrees up to `polar_order − 1`.
    pub fn new(grid: Arc<BallGrid>, k: f64) -> Result<Self> {
        let lmax = grid.sphere().order() - 1;
        Self::with_degree(grid, k, lmax)
    }

    pub fn with_degree(grid: Arc<BallGrid>, k: f64, lmax: usize) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidArgument(format!("wavenumber must be > 0, got {k}")));
        }
        if lmax + 1 > grid.sphere().order() {
            return Err(Error::InvalidArgument(format!(
                "degree {lmax} needs a sphere rule of order >= {}, grid has {}",
                lmax + 1,
                grid.sphere().order()
            )));
        }
        let nr = grid.radii().len();
        let mut radial = vec![vec![Complex64::new(0.0, 0.0); nr * nr]; lmax + 1];
        let ik = Complex64::new(0.0, k);
        let mut prods = vec![Complex64::new(0.0, 0.0); lmax + 1];
        for seg in grid.segments() {
            let nodes = &grid.radii()[seg.first..seg.first + seg.count];
            let bary = barycentric_weights(nodes);
            let mut basis = vec![0.0; seg.count];
            for (i, &r) in grid.radii().iter().enumerate() {
                // Break at the kink s = r and geometrically away from it, where
                // h_l(ks) falls off like s^{-l-1}.
                let mut breaks = Vec::new();
                if r > seg.lo && r < seg.hi {
                    breaks.push(r);
                }
                let mut t = 2.0 * r;
                while t < seg.hi {
                    if t > seg.lo {
                        breaks.push(t);
                    }
                    t *= 2.0;
                }
                breaks.sort_by(|a, b| a.total_cmp(b));
                let dim = (lmax + 1) * seg.count;
                let w = integrate_vec(
                    |s, out| {
                        kernel_products(lmax, k, r, s, &mut prods);
                        lagrange_basis(nodes, &bary, s, &mut basis);
                        for l in 0..=lmax {
                            let p = prods[l] * (s * s);
                            for (jj, bj) in basis.iter().enumerate() {
                                out[l * seg.count + jj] = p * *bj;
                            }
                        }
                    },
                    dim,
                    seg.lo,
                    seg.hi,
                    &breaks,
                    WEIGHT_TOL,
                )?;
                for l in 0..=lmax {
                    for jj in 0..seg.count {
                        radial[l][i * nr + seg.first + jj] = ik * w[l * seg.count + jj];
                    }
                }
            }
        }
        let plan = TransformPlan::new(grid.sphere(), lmax);
        Ok(Self {
            grid,
            k,
            lmax,
            plan,
            radial,
        })
    }

    pub fn grid(&self) -> &Arc<BallGrid> {
        &self.grid
    }

    pub fn wavenumber(&self) -> f64 {
        self.k
    }

    pub fn degree(&self) -> usize {
        self.lmax
    }

    /// `out = G v` on the node values.
    pub fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        let nr = self.grid.radii().len();
        let m = self.grid.shell_size();
        let nc = self.plan.coefficient_count();
        let zero = Complex64::new(0.0, 0.0);
        let mut coeffs = vec![zero; nr * nc];
        for i in 0..nr {
            self.plan
                .analyze_into(&v[i * m..(i + 1) * m], &mut coeffs[i * nc..(i + 1) * nc]);
        }
        let mut mixed = vec![zero; nc];
        for i in 0..nr {
            mixed.iter_mut().for_each(|c| *c = zero);
            for l in 0..=self.lmax {
                let row = &self.radial[l][i * nr..(i + 1) * nr];
                for (j, w) in row.iter().enumerate() {
                    if *w == zero {
                        continue;
                    }
                    let src = &coeffs[j * nc..(j + 1) * nc];
                    for mm in -(l as i64)..=l as i64 {
                        let idx = lm_index(l, mm);
                        mixed[idx] += w * src[idx];
                    }
                }
            }
            self.plan.synthesize_into(&mixed, &mut out[i * m..(i + 1) * m]);
        }
    }

    pub fn apply_field(&self, v: &ComplexField) -> Result<ComplexField> {
        if !Arc::ptr_eq(v.grid(), &self.grid) && v.grid().len() != self.grid.len() {
            return Err(Error::InvalidArgument("field lives on a different grid".into()));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        self.apply(v.values(), &mut out);
        ComplexField::new(Arc::clone(&self.grid), out)
    }

    /// The operator as a dense `N × N` matrix, column by column.
    pub fn dense_matrix(&self) -> DMatrix<Complex64> {
        let n = self.grid.len();
        let mut mat = DMatrix::zeros(n, n);
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..n {
            e[c] = Complex64::new(1.0, 0.0);
            self.apply(&e, &mut col);
            e[c] = Complex64::new(0.0, 0.0);
            mat.column_mut(c).copy_from_slice(&col);
        }
        mat
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{sample_source, volume_potential, volume_potential_on_grid};
    use crate::specfun::Direction;
    use crate::sphere::HarmonicSpectrum;
    use crate::synthesis::{SourceDensity, WaveConfig};

    #[test]
    fn reproduces_separable_potential_for_band_limited_sources() {
        let cfg = WaveConfig::new(1.3, Direction::NORTH, 1e-3, 0.8, 1.0).unwrap();
        let grid = Arc::new(BallGrid::for_config(&cfg, 10, 6).unwrap());
        let op = GridGreenOperator::new(Arc::clone(&grid), cfg.k).unwrap();
        let mut s = HarmonicSpectrum::zeros(3);
        s.set(0, 0, Complex64::new(1.0, -0.5)).unwrap();
        s.set(1, -1, Complex64::new(0.2, 0.9)).unwrap();
        s.set(3, 2, Complex64::new(-1.1, 0.0)).unwrap();
        let h = SourceDensity::new(s, cfg.b).unwrap();
        let exact = volume_potential_on_grid(&h, &grid, &cfg).unwrap();
        let approx = op.apply_field(&sample_source(&h, &grid)).unwrap();
        let err = exact
            .values()
            .iter()
            .zip(approx.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "max error {err}");
    }

    #[test]
    fn smooth_non_separable_field_converges() {
        // Not radially constant and not band-limited; two resolutions must agree.
        let k = 1.0;
        let f = |x: &[f64; 3]| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            Complex64::from_polar(1.0 - r2, 0.7 * x[0])
        };
        let value_at_probe = |ro: usize, po: usize| {
            let grid = Arc::new(BallGrid::new(1.0, &[], ro, po).unwrap());
            let op = GridGreenOperator::new(Arc::clone(&grid), k).unwrap();
            let v = ComplexField::from_fn(Arc::clone(&grid), f);
            let g = op.apply_field(&v).unwrap();
            g.values()
                .iter()
                .zip(grid.points())
                .zip(grid.weights())
                .map(|((g, x), w)| g * (x[2] + 0.5) * *w)
                .sum::<Complex64>()
        };
        let coarse = value_at_probe(8, 8);
        let fine = value_at_probe(16, 14);
        assert!((coarse - fine).norm() < 1e-6 * fine.norm(), "{coarse} vs {fine}");
    }

    #[test]
    fn dense_matrix_matches_apply() {
        let grid = Arc::new(BallGrid::new(1.0, &[0.5], 3, 3).unwrap());
        let op = GridGreenOperator::new(Arc::clone(&grid), 2.0).unwrap();
        let v: Vec<Complex64> = (0..grid.len())
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
        op.apply(&v, &mut out);
        let mat = op.dense_matrix();
        let prod = &mat * nalgebra::DVector::from_vec(v);
        for (a, b) in prod.iter().zip(&out) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_source_point_value() {
        let cfg = WaveConfig::new(1.0, Direction::NORTH, 1e-3, 1.0, 1.0).unwrap();
        let grid = Arc::new(BallGrid::for_config(&cfg, 12, 2).unwrap());
        let op = GridGreenOperator::new(Arc::clone(&grid), 1.0).unwrap();
        let ones = ComplexField::from_fn(Arc::clone(&grid), |_| Complex64::new(1.0, 0.0));
        let g = op.apply_field(&ones).unwrap();
        let mut s = HarmonicSpectrum::zeros(0);
        s.set(0, 0, Complex64::new((4.0 * std::f64::consts::PI).sqrt(), 0.0)).unwrap();
        let h = SourceDensity::new(s, 1.0).unwrap();
        let x = grid.points()[5];
        let exact = volume_potential(&h, &x, &cfg).unwrap();
        assert!((g.values()[5] - exact).norm() < 1e-10);
    }
}
