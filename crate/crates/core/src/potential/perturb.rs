//! The potential `q = h / ψ`, the condition that `ψ` stays away from zero,
//! and the perturbation of `h` that removes the set where it does not.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

use super::grid::ComplexField;
use super::operator::GridGreenOperator;
use super::separable::sample_source;
use crate::error::{Error, Result};
use crate::synthesis::{SourceDensity, WaveConfig};

/// Default floor for `min |ψ|`.
pub const DEFAULT_TAU: f64 = 1e-6;
/// Default threshold `δ` of the near-zero set.
pub const DEFAULT_DELTA: f64 = 1e-2;
/// Zeroing rounds before the perturbation gives up.
pub const MAX_PERTURBATION_ROUNDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionCheck {
    pub satisfied: bool,
    pub min_modulus: f64,
    /// Node attaining the minimum, if any node was examined.
    pub node: Option<usize>,
    pub location: Option<[f64; 3]>,
}

/// `min |ψ| ≥ threshold` over all nodes.
pub fn check_condition(psi: &ComplexField, threshold: f64) -> ConditionCheck {
    check_condition_on(psi, threshold, None)
}

/// `min |ψ| ≥ threshold` over the nodes selected by `mask`.
pub fn check_condition_on(psi: &ComplexField, threshold: f64, mask: Option<&[bool]>) -> ConditionCheck {
    match psi.min_modulus(mask) {
        Some((min_modulus, node)) => ConditionCheck {
            satisfied: min_modulus >= threshold,
            min_modulus,
            node: Some(node),
            location: Some(psi.grid().points()[node]),
        },
        None => ConditionCheck {
            satisfied: true,
            min_modulus: f64::INFINITY,
            node: None,
            location: None,
        },
    }
}

/// Nodes where the field is nonzero.
pub fn support_mask(h: &ComplexField) -> Vec<bool> {
    h.values().iter().map(|v| *v != Complex64::new(0.0, 0.0)).collect()
}

/// `q = h / ψ` on the support of `h`, zero elsewhere.
///
/// Fails with [`Error::ConditionViolated`] when `|ψ| < tau` somewhere on the
/// support; [`perturb_source`] is the way out.
pub fn potential_from_field(h: &ComplexField, psi: &ComplexField, tau: f64) -> Result<ComplexField> {
    if h.values().len() != psi.values().len() {
        return Err(Error::InvalidArgument("source and denominator live on different grids".into()));
    }
    let mask = support_mask(h);
    let check = check_condition_on(psi, tau, Some(&mask));
    if !check.satisfied {
        return Err(Error::ConditionViolated {
            min_modulus: check.min_modulus,
            threshold: tau,
        });
    }
    Ok(h.zip_with(psi, |h, p| if h == Complex64::new(0.0, 0.0) { h } else { h / p }))
}

/// `q = h / ψ` for a radially constant source sampled on the grid of `psi`.
pub fn potential_from_source(h: &SourceDensity, psi: &ComplexField, tau: f64) -> Result<ComplexField> {
    potential_from_field(&sample_source(h, psi.grid()), psi, tau)
}

/// Quadrature measure of `{x : |ψ(x)| < δ}` on the grid of `psi`.
pub fn near_zero_volume(psi: &ComplexField, delta: f64) -> f64 {
    psi.values()
        .iter()
        .zip(psi.grid().weights())
        .filter(|(v, _)| v.norm() < delta)
        .map(|(_, w)| *w)
        .sum()
}

/// Record of one application of [`perturb_source`].
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationRecord {
    pub delta: f64,
    pub zeroed_nodes: usize,
    /// Quadrature volume of the zeroed nodes.
    pub near_zero_volume: f64,
    /// `‖h − h_δ‖_{L²(D)}`.
    pub change_norm: f64,
    /// `min |ψ_δ|` over the support of `h_δ`.
    pub min_modulus: f64,
    pub rounds: usize,
}

#[derive(Debug, Clone)]
pub struct PerturbedSource {
    pub h: ComplexField,
    pub psi: ComplexField,
    pub record: PerturbationRecord,
}

/// Zeroes `h` where `|ψ| < δ` and recomputes `ψ = u₀ − G h`, repeating on the
/// new `ψ` until `min |ψ_δ| ≥ δ/2` on the support of `h_δ`.
pub fn perturb_source(h: &ComplexField, delta: f64, op: &GridGreenOperator, cfg: &WaveConfig) -> Result<PerturbedSource> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("delta must be > 0, got {delta}")));
    }
    let grid = Arc::clone(op.grid());
    let u0 = grid.incident_field(cfg);
    let denominator = |hd: &ComplexField| -> Result<ComplexField> {
        Ok(u0.zip_with(&op.apply_field(hd)?, |u, g| u - g))
    };
    let mut hd = h.clone();
    let mut psi = denominator(&hd)?;
    let mut zeroed = vec![false; grid.len()];
    let mut rounds = 0;
    let mut min_modulus = check_condition_on(&psi, delta, Some(&support_mask(&hd))).min_modulus;
    if min_modulus < delta {
        loop {
            rounds += 1;
            for (n, v) in psi.values().iter().enumerate() {
                if hd.values()[n] != Complex64::new(0.0, 0.0) && v.norm() < delta {
                    zeroed[n] = true;
                    hd.values_mut()[n] = Complex64::new(0.0, 0.0);
                }
            }
            psi = denominator(&hd)?;
            min_modulus = check_condition_on(&psi, delta, Some(&support_mask(&hd))).min_modulus;
            if min_modulus >= 0.5 * delta {
                break;
            }
            if rounds == MAX_PERTURBATION_ROUNDS {
                return Err(Error::PerturbationFailed {
                    rounds,
                    min_modulus,
                    target: 0.5 * delta,
                });
            }
        }
    }
    let weights = grid.weights();
    let mut volume = 0.0;
    let mut change = 0.0;
    for (n, z) in zeroed.iter().enumerate() {
        if *z {
            volume += weights[n];
            change += weights[n] * h.values()[n].norm_sqr();
        }
    }
    Ok(PerturbedSource {
        h: hd,
        psi,
        record: PerturbationRecord {
            delta,
            zeroed_nodes: zeroed.iter().filter(|z| **z).count(),
            near_zero_volume: volume,
            change_norm: change.sqrt(),
            min_modulus,
            rounds,
        },
    })
}

/// Volume of `{x : |x| ≤ a, |ψ(x)| < δ}` for a pointwise-evaluable `ψ`, by
/// recursive refinement of cells in `(r, cos θ, φ)`.
///
/// `lipschitz` must bound `|∇ψ|`; a cell whose centre value differs from `δ`
/// by more than `lipschitz × diameter` is decided without refinement. Cells
/// still undecided at `max_depth` are counted by their centre value.
pub fn near_zero_volume_refined(
    psi: impl Fn(&[f64; 3]) -> Complex64,
    a: f64,
    delta: f64,
    lipschitz: f64,
    max_depth: usize,
) -> f64 {
    const START: [usize; 3] = [16, 16, 32];
    let mut total = 0.0;
    let mut stack = Vec::new();
    for i in 0..START[0] {
        for j in 0..START[1] {
            for l in 0..START[2] {
                let cell = [
                    [a * i as f64 / START[0] as f64, a * (i + 1) as f64 / START[0] as f64],
                    [-1.0 + 2.0 * j as f64 / START[1] as f64, -1.0 + 2.0 * (j + 1) as f64 / START[1] as f64],
                    [2.0 * PI * l as f64 / START[2] as f64, 2.0 * PI * (l + 1) as f64 / START[2] as f64],
                ];
                stack.push((cell, 0usize));
            }
        }
    }
    while let Some((c, depth)) = stack.pop() {
        let [r, mu, phi] = c;
        let volume = (r[1].powi(3) - r[0].powi(3)) / 3.0 * (mu[1] - mu[0]) * (phi[1] - phi[0]);
        let rc = 0.5 * (r[0] + r[1]);
        let muc = 0.5 * (mu[0] + mu[1]);
        let phic = 0.5 * (phi[0] + phi[1]);
        let st = (1.0 - muc * muc).max(0.0).sqrt();
        let x = [rc * st * phic.cos(), rc * st * phic.sin(), rc * muc];
        let value = psi(&x).norm();
        // Half-diameter bound of the cell around its centre.
        let dtheta = mu[0].clamp(-1.0, 1.0).acos() - mu[1].clamp(-1.0, 1.0).acos();
        let radius = 0.5 * ((r[1] - r[0]).powi(2) + (r[1] * dtheta.abs()).powi(2) + (r[1] * (phi[1] - phi[0])).powi(2)).sqrt();
        let slack = lipschitz * radius;
        if value - slack >= delta {
            continue;
        }
        if value + slack < delta {
            total += volume;
            continue;
        }
        if depth >= max_depth {
            if value < delta {
                total += volume;
            }
            continue;
        }
        for s in 0..8 {
            let pick = |iv: [f64; 2], bit: usize| {
                let m = 0.5 * (iv[0] + iv[1]);
                if (s >> bit) & 1 == 0 { [iv[0], m] } else { [m, iv[1]] }
            };
            stack.push(([pick(r, 0), pick(mu, 1), pick(phi, 2)], depth + 1));
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{denominator_field, BallGrid};
    use crate::specfun::Direction;
    use crate::sphere::HarmonicSpectrum;
    use crate::synthesis::smallness_bound;

    fn cfg() -> WaveConfig {
        WaveConfig::new(1.0, Direction::NORTH, 1e-3, 1.0, 1.0).unwrap()
    }

    fn constant_source(c: f64) -> SourceDensity {
        let mut s = HarmonicSpectrum::zeros(0);
        s.set(0, 0, Complex64::new(c * (4.0 * PI).sqrt(), 0.0)).unwrap();
        SourceDensity::new(s, 1.0).unwrap()
    }

    #[test]
    fn zero_source_gives_incident_wave() {
        let grid = Arc::new(BallGrid::new(1.0, &[], 4, 4).unwrap());
        let h = SourceDensity::new(HarmonicSpectrum::zeros(2), 1.0).unwrap();
        let d = denominator_field(&h, &grid, &cfg()).unwrap();
        assert!((d.min_modulus - 1.0).abs() < 1e-14);
        let check = check_condition(&d.psi, 0.5);
        assert!(check.satisfied && (check.min_modulus - 1.0).abs() < 1e-14);
        assert!(check_condition(&d.psi, 0.0).satisfied);
        let q = potential_from_source(&h, &d.psi, DEFAULT_TAU).unwrap();
        assert_eq!(q.max_modulus(), 0.0);
        assert_eq!(near_zero_volume(&d.psi, 0.5), 0.0);
        let full = near_zero_volume(&d.psi, 2.0);
        assert!((full - 4.0 / 3.0 * PI).abs() < 1e-8);
    }

    #[test]
    fn denominator_at_origin_for_constant_source() {
        // A grid cannot hold the origin, so evaluate the closed form there.
        let sep = crate::potential::SeparablePotential::new(&constant_source(1.0), &cfg()).unwrap();
        let psi0 = sep.denominator(&[0.0; 3]);
        let exact = 2.0 - Complex64::from_polar(1.0, 1.0) * Complex64::new(1.0, -1.0);
        assert!((psi0 - exact).norm() < 1e-11);
        assert!((psi0 - Complex64::new(0.618227, -0.301169)).norm() < 1e-6);
        assert!((psi0.norm() - 0.68770).abs() < 5e-5);
    }

    #[test]
    fn denominator_is_affine_in_the_source() {
        let grid = Arc::new(BallGrid::new(1.0, &[0.6], 5, 4).unwrap());
        let c = WaveConfig::new(1.0, Direction::NORTH, 1e-3, 0.6, 1.0).unwrap();
        let mut s = HarmonicSpectrum::zeros(2);
        s.set(2, 1, Complex64::new(0.4, -1.0)).unwrap();
        s.set(0, 0, Complex64::new(1.0, 0.0)).unwrap();
        let h = SourceDensity::new(s, 0.6).unwrap();
        let u0 = grid.incident_field(&c);
        let one = denominator_field(&h, &grid, &c).unwrap().psi;
        let two = denominator_field(&h.scaled(Complex64::new(2.0, 0.0)), &grid, &c).unwrap().psi;
        for ((a, b), u) in one.values().iter().zip(two.values()).zip(u0.values()) {
            assert!(((b - u) - 2.0 * (a - u)).norm() < 1e-12);
        }
    }

    #[test]
    fn certified_sources_satisfy_the_condition() {
        let grid = Arc::new(BallGrid::new(1.0, &[], 6, 5).unwrap());
        let c = cfg();
        let mut s = HarmonicSpectrum::zeros(2);
        s.set(1, 0, Complex64::new(0.8, 0.3)).unwrap();
        s.set(2, -2, Complex64::new(-0.5, 1.1)).unwrap();
        let h = SourceDensity::new(s, 1.0).unwrap();
        let bound = smallness_bound(&h, &c);
        assert!(bound < 1.0);
        let d = denominator_field(&h, &grid, &c).unwrap();
        assert!(check_condition(&d.psi, 1.0 - bound).satisfied);
    }

    #[test]
    fn weak_source_potential_is_first_order_in_scale() {
        let grid = Arc::new(BallGrid::new(1.0, &[], 5, 4).unwrap());
        let c = cfg();
        let mut s = HarmonicSpectrum::zeros(1);
        s.set(0, 0, Complex64::new(1.0, 0.5)).unwrap();
        s.set(1, 1, Complex64::new(0.0, 2.0)).unwrap();
        let h = SourceDensity::new(s, 1.0).unwrap();
        let hs = sample_source(&h, &grid);
        let u0 = grid.incident_field(&c);
        let lin = hs.zip_with(&u0, |h, u| h / u);
        let mut errs = Vec::new();
        for t in [1e-2, 1e-3, 1e-4] {
            let ht = h.scaled(Complex64::new(t, 0.0));
            let psi = denominator_field(&ht, &grid, &c).unwrap().psi;
            let q = potential_from_source(&ht, &psi, DEFAULT_TAU).unwrap();
            let err = q
                .values()
                .iter()
                .zip(lin.values())
                .map(|(q, l)| (q / t - l).norm())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((8.0..12.5).contains(&ratio), "errors {errs:?}");
        }
    }

    #[test]
    fn construction_identity_holds() {
        let c = WaveConfig::new(1.0, Direction::NORTH, 1e-3, 0.8, 1.0).unwrap();
        let grid = Arc::new(BallGrid::for_config(&c, 8, 5).unwrap());
        let op = GridGreenOperator::new(Arc::clone(&grid), c.k).unwrap();
        let mut s = HarmonicSpectrum::zeros(2);
        s.set(0, 0, Complex64::new(2.0, 0.0)).unwrap();
        s.set(2, 1, Complex64::new(0.0, -1.0)).unwrap();
        let h = SourceDensity::new(s, c.b).unwrap();
        let psi = denominator_field(&h, &grid, &c).unwrap().psi;
        let q = potential_from_source(&h, &psi, DEFAULT_TAU).unwrap();
        let hs = sample_source(&h, &grid);
        let mask = support_mask(&hs);
        let u = hs.zip_with(&q, |h, q| if q == Complex64::new(0.0, 0.0) { q } else { h / q });
        let qu = q.zip_with(&u, |q, u| q * u);
        let rhs = grid.incident_field(&c).zip_with(&op.apply_field(&qu).unwrap(), |a, b| a - b);
        for n in (0..grid.len()).filter(|&n| mask[n]) {
            assert!((u.values()[n] - rhs.values()[n]).norm() < 1e-8);
        }
    }

    #[test]
    fn condition_violation_is_reported() {
        let grid = Arc::new(BallGrid::new(1.0, &[], 3, 3).unwrap());
        let h = ComplexField::from_fn(Arc::clone(&grid), |_| Complex64::new(1.0, 0.0));
        let mut psi = grid.incident_field(&cfg());
        psi.values_mut()[4] = Complex64::new(1e-9, 0.0);
        assert!(matches!(
            potential_from_field(&h, &psi, DEFAULT_TAU),
            Err(Error::ConditionViolated { .. })
        ));
    }

    #[test]
    fn perturbation_is_identity_when_psi_is_large() {
        let c = cfg();
        let grid = Arc::new(BallGrid::new(1.0, &[], 5, 4).unwrap());
        let op = GridGreenOperator::new(Arc::clone(&grid), c.k).unwrap();
        let h = sample_source(&constant_source(0.1), &grid);
        let p = perturb_source(&h, 0.1, &op, &c).unwrap();
        assert_eq!(p.record.zeroed_nodes, 0);
        assert_eq!(p.record.change_norm, 0.0);
        assert_eq!(p.h.values(), h.values());
    }

    #[test]
    fn refined_volume_of_a_ball() {
        // |ψ| = |x|: the set |ψ| < δ is a ball of radius δ.
        let v = near_zero_volume_refined(
            |x| Complex64::new((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt(), 0.0),
            1.0,
            0.3,
            1.0,
            6,
        );
        let exact = 4.0 / 3.0 * PI * 0.027;
        assert!((v - exact).abs() < 5e-3 * exact, "{v} vs {exact}");
        // |ψ| = |x_3|: a slab of half-width δ; volume π ∫_{-δ}^{δ} (1 − z²) dz.
        let d: f64 = 0.05;
        let v = near_zero_volume_refined(|x| Complex64::new(x[2], 0.0), 1.0, d, 1.0, 7);
        let exact = PI * (2.0 * d - 2.0 * d.powi(3) / 3.0);
        assert!((v - exact).abs() < 1e-2 * exact, "{v} vs {exact}");
    }
}
