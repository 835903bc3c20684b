//! Gaussian-phase averaging by quadrature.
//!
//! The channel applies a random phase `φ ~ N(0, σ²)` to the signal, so every
//! receiver statistic is an expectation `E[f(φ)]`. For moderate `σ` this is
//! computed by Gauss–Hermite quadrature with the substitution `φ = √2·σ·t`.
//! For very wide phase distributions the integrands (all `2π`-periodic here)
//! are instead averaged against the wrapped Gaussian on `[-π, π)`, where a
//! uniform midpoint rule converges spectrally. Both paths double their node
//! count until the result is stable to [`PHASE_AVG_TOL`].

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Stability target for adaptive node doubling.
pub const PHASE_AVG_TOL: f64 = 1e-9;

/// First rung of the adaptive ladder.
const START_ORDER: usize = 64;
/// Last Gauss–Hermite rung before giving up.
const MAX_GH_ORDER: usize = 1024;
/// Last wrapped-Gaussian rung before giving up.
const MAX_WRAP_ORDER: usize = 4096;
/// Above this width the wrapped-Gaussian path takes over; Gauss–Hermite nodes
/// can no longer resolve the `2π`-periodic integrands there.
const WRAP_SIGMA: f64 = 2.0;

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Nodes and weights of the physicists' Gauss–Hermite rule:
/// `∫ e^{-t²} f(t) dt ≈ Σ w_i f(t_i)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Builds the rule of the given order via Golub–Welsch: the nodes are the
    /// eigenvalues of the Jacobi matrix of the Hermite recurrence and the
    /// weights come from the first eigenvector components.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let mut jacobi = DMatrix::<f64>::zeros(order, order);
        for k in 1..order {
            let b = (k as f64 / 2.0).sqrt();
            jacobi[(k - 1, k)] = b;
            jacobi[(k, k - 1)] = b;
        }
        let eig = jacobi.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = (0..order)
            .map(|i| {
                let first = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], SQRT_PI * first * first)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        GaussHermite {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }
}

/// Returns the cached Gauss–Hermite rule of the given order.
pub fn gauss_hermite(order: usize) -> Arc<GaussHermite> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().unwrap().get(&order) {
        return rule.clone();
    }
    let rule = Arc::new(GaussHermite::new(order));
    cache
        .lock()
        .unwrap()
        .entry(order)
        .or_insert_with(|| rule.clone())
        .clone()
}

/// One rung of the ladder: phase nodes (φ ≥ 0 only) with probability weights
/// that sum to 1. Valid only for integrands even in φ.
fn even_phase_rule(sigma: f64, order: usize) -> (Vec<f64>, Vec<f64>) {
    if sigma <= WRAP_SIGMA {
        let gh = gauss_hermite(order);
        let scale = std::f64::consts::SQRT_2 * sigma;
        // Even order: nodes come in ± pairs; keep the positive half at
        // doubled weight.
        let half = order / 2;
        let mut phis = Vec::with_capacity(order - half);
        let mut weights = Vec::with_capacity(order - half);
        for i in half..order {
            phis.push(scale * gh.nodes[i]);
            let w = gh.weights[i] / SQRT_PI;
            weights.push(if 2 * i == order - 1 { w } else { 2.0 * w });
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        (phis, weights)
    } else {
        // Midpoint rule on [-π, π) against the wrapped Gaussian; folded onto
        // φ ≥ 0 by evenness.
        let m = order;
        let images = (4.0 * sigma / std::f64::consts::PI).ceil() as i64 + 1;
        let step = 2.0 * std::f64::consts::PI / m as f64;
        let inv_two_var = 1.0 / (2.0 * sigma * sigma);
        let mut phis = Vec::with_capacity(m / 2);
        let mut weights = Vec::with_capacity(m / 2);
        for j in 0..m / 2 {
            let phi = (j as f64 + 0.5) * step;
            let mut w = 0.0;
            for k in -images..=images {
                let shifted = phi + 2.0 * std::f64::consts::PI * k as f64;
                w += (-shifted * shifted * inv_two_var).exp();
            }
            phis.push(phi);
            weights.push(w);
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        (phis, weights)
    }
}

/// Averages a vector-valued integrand over `φ ~ N(0, σ²)`, doubling the node
/// count until every component is stable to [`PHASE_AVG_TOL`].
///
/// `fill(φ, out)` must write the `len` integrand components at phase `φ`, and
/// must be even in `φ`.
pub fn phase_average_vec<F>(sigma: f64, len: usize, fill: F) -> Result<Vec<f64>>
where
    F: Fn(f64, &mut [f64]),
{
    if sigma == 0.0 {
        let mut out = vec![0.0; len];
        fill(0.0, &mut out);
        return Ok(out);
    }
    let max_order = if sigma <= WRAP_SIGMA {
        MAX_GH_ORDER
    } else {
        MAX_WRAP_ORDER
    };
    let mut scratch = vec![0.0; len];
    let mut prev: Option<Vec<f64>> = None;
    let mut order = START_ORDER;
    let mut last_delta = f64::INFINITY;
    while order <= max_order {
        let (phis, weights) = even_phase_rule(sigma, order);
        let mut acc = vec![0.0; len];
        for (&phi, &w) in phis.iter().zip(&weights) {
            fill(phi, &mut scratch);
            for (a, s) in acc.iter_mut().zip(&scratch) {
                *a += w * s;
            }
        }
        if let Some(p) = &prev {
            last_delta = acc
                .iter()
                .zip(p)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if last_delta <= PHASE_AVG_TOL {
                return Ok(acc);
            }
        }
        prev = Some(acc);
        order *= 2;
    }
    Err(Error::QuadratureNotConverged {
        max_delta: last_delta,
    })
}

/// Scalar convenience wrapper around [`phase_average_vec`].
pub fn phase_average<F>(sigma: f64, f: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    phase_average_vec(sigma, 1, |phi, out| out[0] = f(phi)).map(|v| v[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gh_weights_sum_to_sqrt_pi() {
        for order in [8, 64, 129] {
            let rule = GaussHermite::new(order);
            let sum: f64 = rule.weights.iter().sum();
            assert_abs_diff_eq!(sum, SQRT_PI, epsilon = 1e-12);
        }
    }

    #[test]
    fn gh_integrates_even_monomials() {
        // ∫ e^{-t²} t² dt = √π/2, ∫ e^{-t²} t⁴ dt = 3√π/4
        let rule = GaussHermite::new(16);
        let m2: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(t, w)| w * t * t)
            .sum();
        let m4: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(t, w)| w * t.powi(4))
            .sum();
        assert_abs_diff_eq!(m2, SQRT_PI / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m4, 3.0 * SQRT_PI / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn phase_average_matches_gaussian_characteristic_function() {
        // E[cos(kφ)] = exp(-σ²k²/2) for φ ~ N(0, σ²).
        for &sigma in &[0.1, 0.5, 1.0, 1.9] {
            for k in 1..=4 {
                let got = phase_average(sigma, |phi| (k as f64 * phi).cos()).unwrap();
                let want = (-(sigma * sigma) * (k * k) as f64 / 2.0).exp();
                assert_abs_diff_eq!(got, want, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn wrapped_path_matches_characteristic_function_at_large_sigma() {
        for &sigma in &[2.5, 5.0, 50.0] {
            for k in 1..=3 {
                let got = phase_average(sigma, |phi| (k as f64 * phi).cos()).unwrap();
                let want = (-(sigma * sigma) * (k * k) as f64 / 2.0).exp();
                assert_abs_diff_eq!(got, want, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn zero_sigma_is_a_point_mass() {
        let got = phase_average(0.0, |phi| (phi + 1.0).powi(3)).unwrap();
        assert_abs_diff_eq!(got, 1.0, epsilon = 0.0);
    }
}
