//! Browser bindings for three small views of the synthesis:
//! the amplification `1/|d_l|` against degree, `|ψ|` and `|q|` on a slice
//! through the ball, and a cut of the synthesized far field against the
//! target.
//!
//! The demo pattern is `s · (Y₀₀ + Y₁₀ + Y₂₁) / 100` with a user-chosen
//! real scale `s`, incident direction along `+z` and `a = 1`.

use num_complex::Complex64;
use std::sync::Arc;
use wasm_bindgen::prelude::*;

use scatsynth::forward::{solve_scattering, DEFAULT_SOLVER_TOL};
use scatsynth::potential::{
    check_condition_on, denominator_field, perturb_source, potential_from_field, potential_from_source,
    sample_source, support_mask, BallGrid, GridGreenOperator, SeparablePotential, DEFAULT_DELTA, DEFAULT_TAU,
};
use scatsynth::specfun::{sph_harm_all, Direction};
use scatsynth::sphere::HarmonicSpectrum;
use scatsynth::synthesis::{amplification, smallness_bound, source_from_pattern, WaveConfig};

fn js(e: scatsynth::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn demo_pattern(scale: f64) -> HarmonicSpectrum {
    let mut f = HarmonicSpectrum::zeros(2);
    for (l, m) in [(0, 0), (1, 0), (2, 1)] {
        f.set(l, m, Complex64::new(0.01 * scale, 0.0)).expect("valid index");
    }
    f
}

fn config(k: f64, b: f64) -> Result<WaveConfig, JsValue> {
    WaveConfig::new(k, Direction::NORTH, 1e-3, b, 1.0).map_err(js)
}

/// `1/|d_l|` for `l = 0..=lmax`.
#[wasm_bindgen]
pub fn amplification_curve(k: f64, b: f64, lmax: usize) -> Result<Vec<f64>, JsValue> {
    (0..=lmax).map(|l| amplification(l, k, b).map_err(js)).collect()
}

/// `|ψ|` then `|q|` on an `n × n` grid over the square `[-1, 1]²` of the
/// `y = 0` plane, row-major with `z` descending; points outside the ball
/// are NaN. The last two entries are the smallness bound and `min |ψ|`.
#[wasm_bindgen]
pub fn slice(scale: f64, k: f64, b: f64, n: usize) -> Result<Vec<f64>, JsValue> {
    let cfg = config(k, b)?;
    let h = source_from_pattern(&demo_pattern(scale), &cfg, 2).map_err(js)?;
    let sep = SeparablePotential::new(&h, &cfg).map_err(js)?;
    let mut psi = vec![f64::NAN; n * n];
    let mut q = vec![f64::NAN; n * n];
    let mut min_psi = f64::INFINITY;
    let step = 2.0 / n as f64;
    for row in 0..n {
        let z = 1.0 - (row as f64 + 0.5) * step;
        for col in 0..n {
            let x = -1.0 + (col as f64 + 0.5) * step;
            if x * x + z * z > 1.0 {
                continue;
            }
            let p = [x, 0.0, z];
            let d = sep.denominator(&p);
            psi[row * n + col] = d.norm();
            q[row * n + col] = (h.value_at(&p) / d).norm();
            min_psi = min_psi.min(d.norm());
        }
    }
    psi.extend(q);
    psi.push(smallness_bound(&h, &cfg));
    psi.push(min_psi);
    Ok(psi)
}

/// Builds `q` for the demo pattern on a coarse grid, solves the forward
/// problem and samples the far field on the `φ = 0` half-circle at `m`
/// angles from `θ = 0` to `θ = π`.
///
/// Returns `Re f, Im f, Re A_q, Im A_q` (each of length `m`), followed by
/// `‖f − A_q‖` on those samples (root mean square), whether the source was
/// perturbed (0 or 1) and `max |q|`.
#[wasm_bindgen]
pub fn far_field_cut(scale: f64, k: f64, b: f64, m: usize) -> Result<Vec<f64>, JsValue> {
    let cfg = config(k, b)?;
    let f = demo_pattern(scale);
    let h = source_from_pattern(&f, &cfg, 2).map_err(js)?;
    let grid = Arc::new(BallGrid::for_config(&cfg, 10, 5).map_err(js)?);
    let den = denominator_field(&h, &grid, &cfg).map_err(js)?;
    let op = GridGreenOperator::new(Arc::clone(&grid), k).map_err(js)?;
    let hs = sample_source(&h, &grid);
    let needs = smallness_bound(&h, &cfg) >= 1.0
        && !check_condition_on(&den.psi, DEFAULT_DELTA, Some(&support_mask(&hs))).satisfied;
    let q = if needs {
        let p = perturb_source(&hs, DEFAULT_DELTA, &op, &cfg).map_err(js)?;
        potential_from_field(&p.h, &p.psi, DEFAULT_TAU).map_err(js)?
    } else {
        potential_from_source(&h, &den.psi, DEFAULT_TAU).map_err(js)?
    };
    let u = solve_scattering(&q, &op, &cfg, DEFAULT_SOLVER_TOL).map_err(js)?.u;
    let source: Vec<Complex64> = q.values().iter().zip(u.values()).map(|(a, b)| a * b).collect();
    let mut out = vec![0.0; 4 * m + 3];
    let mut err2 = 0.0;
    for i in 0..m {
        let theta = std::f64::consts::PI * i as f64 / (m.max(2) - 1) as f64;
        let beta = Direction::from_angles(theta, 0.0);
        let y = sph_harm_all(2, &beta);
        let target: Complex64 = f.iter().map(|(l, mm, c)| c * y[scatsynth::specfun::lm_index(l, mm)]).sum();
        let amp: Complex64 = grid
            .points()
            .iter()
            .zip(grid.weights())
            .zip(&source)
            .map(|((x, w), s)| Complex64::from_polar(*w, -k * beta.dot(x)) * s)
            .sum::<Complex64>()
            * (-1.0 / (4.0 * std::f64::consts::PI));
        out[i] = target.re;
        out[m + i] = target.im;
        out[2 * m + i] = amp.re;
        out[3 * m + i] = amp.im;
        err2 += (target - amp).norm_sqr();
    }
    out[4 * m] = (err2 / m as f64).sqrt();
    out[4 * m + 1] = if needs { 1.0 } else { 0.0 };
    out[4 * m + 2] = q.max_modulus();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amplification_grows() {
        let a = amplification_curve(1.0, 1.0, 10).unwrap();
        assert_eq!(a.len(), 11);
        assert!(a.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn slice_layout() {
        let s = slice(1.0, 1.0, 0.8, 16).unwrap();
        assert_eq!(s.len(), 2 * 256 + 2);
        assert!(s[0].is_nan() && s[8 * 16 + 8].is_finite());
        assert!(s[2 * 256] < 1.0, "weak pattern is certified");
        assert!(s[2 * 256 + 1] > 0.5);
    }

    #[test]
    fn weak_cut_matches_target() {
        let c = far_field_cut(1.0, 1.0, 0.8, 9).unwrap();
        assert_eq!(c.len(), 4 * 9 + 3);
        assert!(c[36] < 1e-6, "rms error {}", c[36]);
        assert_eq!(c[37], 0.0);
    }
}
