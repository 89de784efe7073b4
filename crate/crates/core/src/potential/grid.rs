use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_on;
use crate::sphere::SphereQuadrature;
use crate::synthesis::WaveConfig;

/// A radial interval carrying its own Gauss–Legendre nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSegment {
    pub lo: f64,
    pub hi: f64,
    /// Index of the first radial node of this segment.
    pub first: usize,
    pub count: usize,
}

/// Discretization of the ball `|x| ≤ a`: composite Gauss–Legendre in `r`
/// (one panel per segment, so jumps at segment ends are resolved) times a
/// product sphere quadrature. Nodes are shell-major: node `i·M + p` sits at
/// radius `r_i` in direction `p` of the `M`-point sphere rule.
#[derive(Debug, Clone)]
pub struct BallGrid {
    a: f64,
    segments: Vec<RadialSegment>,
    radii: Vec<f64>,
    radial_weights: Vec<f64>,
    sphere: SphereQuadrature,
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl BallGrid {
    /// `radial_order` nodes on each of the segments delimited by `breaks`
    /// (interior radii in `(0, a)`), and a sphere rule of `polar_order`.
    pub fn new(a: f64, breaks: &[f64], radial_order: usize, polar_order: usize) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidArgument(format!("ball radius must be > 0, got {a}")));
        }
        if radial_order == 0 {
            return Err(Error::InvalidArgument("radial order must be >= 1".into()));
        }
        let mut edges = vec![0.0];
        let mut sorted: Vec<f64> = breaks.to_vec();
        sorted.sort_by(|x, y| x.total_cmp(y));
        for &b in &sorted {
            if !(b > 0.0 && b < a) {
                return Err(Error::InvalidArgument(format!("break {b} not inside (0, {a})")));
            }
            if b > *edges.last().unwrap() + 1e-12 {
                edges.push(b);
            }
        }
        edges.push(a);
        let sphere = SphereQuadrature::new(polar_order)?;
        let mut segments = Vec::new();
        let mut radii = Vec::new();
        let mut radial_weights = Vec::new();
        for w in edges.windows(2) {
            let (r, wt) = gauss_legendre_on(radial_order, w[0], w[1]);
            segments.push(RadialSegment {
                lo: w[0],
                hi: w[1],
                first: radii.len(),
                count: radial_order,
            });
            radii.extend(r);
            radial_weights.extend(wt);
        }
        let mut points = Vec::with_capacity(radii.len() * sphere.len());
        let mut weights = Vec::with_capacity(radii.len() * sphere.len());
        for (r, wr) in radii.iter().zip(&radial_weights) {
            for (d, wa) in sphere.nodes().iter().zip(sphere.weights()) {
                let v = d.vector();
                points.push([r * v[0], r * v[1], r * v[2]]);
                weights.push(wr * r * r * wa);
            }
        }
        Ok(Self {
            a,
            segments,
            radii,
            radial_weights,
            sphere,
            points,
            weights,
        })
    }

    /// Grid on the ball of radius `cfg.a`, split at `cfg.b` when `b < a`.
    pub fn for_config(cfg: &WaveConfig, radial_order: usize, polar_order: usize) -> Result<Self> {
        let breaks: Vec<f64> = if cfg.b < cfg.a { vec![cfg.b] } else { Vec::new() };
        Self::new(cfg.a, &breaks, radial_order, polar_order)
    }

    pub fn radius(&self) -> f64 {
        self.a
    }

    pub fn segments(&self) -> &[RadialSegment] {
        &self.segments
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn radial_weights(&self) -> &[f64] {
        &self.radial_weights
    }

    pub fn sphere(&self) -> &SphereQuadrature {
        &self.sphere
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    /// Volume weights, `Σ = (4/3) π a³`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn shell_size(&self) -> usize {
        self.sphere.len()
    }

    /// Radial index of a node.
    pub fn shell_of(&self, node: usize) -> usize {
        node / self.sphere.len()
    }

    pub fn radius_of(&self, node: usize) -> f64 {
        self.radii[self.shell_of(node)]
    }

    pub fn volume(&self) -> f64 {
        4.0 / 3.0 * PI * self.a.powi(3)
    }

    /// Nodes with `|x| ≤ radius`.
    pub fn mask_within(&self, radius: f64) -> Vec<bool> {
        (0..self.len()).map(|n| self.radius_of(n) <= radius).collect()
    }

    /// `e^{ik α·x}` at every node.
    pub fn incident_field(self: &Arc<Self>, cfg: &WaveConfig) -> ComplexField {
        let values = self
            .points
            .iter()
            .map(|x| Complex64::from_polar(1.0, cfg.k * cfg.alpha.dot(x)))
            .collect();
        ComplexField {
            grid: Arc::clone(self),
            values,
        }
    }
}

/// Complex values at the nodes of a [`BallGrid`].
#[derive(Debug, Clone)]
pub struct ComplexField {
    grid: Arc<BallGrid>,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Arc<BallGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values for {} grid nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<BallGrid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn from_fn(grid: Arc<BallGrid>, f: impl Fn(&[f64; 3]) -> Complex64) -> Self {
        let values = grid.points().iter().map(f).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<BallGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `(min |v|, node)` over the nodes selected by `mask` (all nodes when `None`).
    pub fn min_modulus(&self, mask: Option<&[bool]>) -> Option<(f64, usize)> {
        self.values
            .iter()
            .enumerate()
            .filter(|(n, _)| mask.is_none_or(|m| m[*n]))
            .map(|(n, v)| (v.norm(), n))
            .fold(None, |best, cur| match best {
                Some(b) if b.0 <= cur.0 => Some(b),
                _ => Some(cur),
            })
    }

    /// `(∫_D |v|² dx)^{1/2}` by the grid quadrature.
    pub fn l2_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| v.norm_sqr() * w)
            .sum::<f64>()
            .sqrt()
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_ball_volume() {
        for (a, breaks) in [(1.0, vec![]), (1.0, vec![0.8]), (2.5, vec![0.3, 1.7])] {
            let g = BallGrid::new(a, &breaks, 10, 6).unwrap();
            let total: f64 = g.weights().iter().sum();
            assert!((total - g.volume()).abs() < 1e-10 * g.volume());
            assert!(g.radii().iter().all(|&r| r > 0.0));
            assert_eq!(g.len(), 10 * (breaks.len() + 1) * 72);
        }
        assert!(BallGrid::new(1.0, &[1.2], 4, 4).is_err());
    }

    #[test]
    fn composite_rule_integrates_piecewise_polynomials() {
        let g = BallGrid::new(1.0, &[0.8], 8, 4).unwrap();
        let f = |x: &[f64; 3]| {
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            if r <= 0.8 { 1.0 } else { 0.0 }
        };
        let v: f64 = g.points().iter().zip(g.weights()).map(|(x, w)| f(x) * w).sum();
        assert!((v - 4.0 / 3.0 * PI * 0.512).abs() < 1e-12);
    }
}
