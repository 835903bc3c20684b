//! Truncated Fock-space numerics: coherent-state vectors, phase-diffused
//! density matrices in closed form, loss maps, and the Helstrom bound.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Maximum probability mass a coherent state may lose to truncation.
pub const EPS_TAIL: f64 = 1e-10;

/// Standard deviation of the Gaussian phase noise, in radians.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct NoiseWidth(f64);

impl NoiseWidth {
    pub fn new(sigma: f64) -> Result<Self> {
        if sigma.is_finite() && sigma >= 0.0 {
            Ok(NoiseWidth(sigma))
        } else {
            Err(Error::InvalidParameter(format!(
                "noise width must be a finite nonnegative real, got {sigma}"
            )))
        }
    }

    pub fn sigma(self) -> f64 {
        self.0
    }
}

/// Fock cutoff for amplitude `|α|² = alpha_sq`: the Poisson photon statistics
/// concentrate below the mean plus a few standard deviations, so this rule
/// leaves a tail well under [`EPS_TAIL`] for the photon numbers of interest
/// (n̄ ≤ ~10). Always verified after construction.
pub fn fock_dim(alpha_sq: f64) -> usize {
    (alpha_sq + 10.0 * alpha_sq.sqrt() + 20.0).ceil() as usize
}

/// A pure state in the truncated number basis.
#[derive(Debug, Clone)]
pub struct FockVector {
    amplitudes: Vec<Complex64>,
}

impl FockVector {
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Σₙ n·|cₙ|² within the truncation.
    pub fn mean_photon_number(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, c)| n as f64 * c.norm_sqr())
            .sum()
    }
}

/// Expands the coherent state `|α⟩` in the number basis:
/// `cₙ = e^{−|α|²/2} αⁿ/√n!`.
///
/// Fails if the truncated vector loses more than [`EPS_TAIL`] of its norm.
pub fn coherent_fock_vector(alpha: Complex64, dim: usize) -> Result<FockVector> {
    assert!(dim >= 1, "Fock dimension must be positive");
    let mut amplitudes = Vec::with_capacity(dim);
    let mut c = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            c *= alpha / (n as f64).sqrt();
        }
        amplitudes.push(c);
    }
    let tail = 1.0 - amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>();
    if tail > EPS_TAIL {
        return Err(Error::CutoffTooSmall {
            alpha_sq: alpha.norm_sqr(),
            dim,
            tail,
            tol: EPS_TAIL,
        });
    }
    Ok(FockVector { amplitudes })
}

/// A density operator in the truncated number basis.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    elements: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn elements(&self) -> &DMatrix<Complex64> {
        &self.elements
    }

    /// Real part of the trace (imaginary part vanishes for Hermitian input).
    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|n| self.elements[(n, n)].re).sum()
    }

    /// `Tr ρ²`, evaluated as `Σ|ρ_{nn'}|²` (valid for Hermitian ρ).
    pub fn purity(&self) -> f64 {
        self.elements.iter().map(|e| e.norm_sqr()).sum()
    }

    /// Checks Hermiticity (1e-12 elementwise), trace within
    /// `[1 − EPS_TAIL, 1 + 1e-12]`, and numerical positivity (eigenvalues
    /// ≥ −1e-10).
    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        for n in 0..d {
            for np in n..d {
                let delta = self.elements[(n, np)] - self.elements[(np, n)].conj();
                if delta.norm() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "density matrix not Hermitian at ({n},{np}): deviation {:.3e}",
                        delta.norm()
                    )));
                }
            }
        }
        let tr = self.trace();
        if !(1.0 - EPS_TAIL..=1.0 + 1e-12).contains(&tr) {
            return Err(Error::InvalidParameter(format!(
                "density matrix trace {tr} outside [1 − ε_tail, 1]"
            )));
        }
        let min = hermitian_eigenvalues(&self.elements)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
            });
        }
        Ok(())
    }
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.
///
/// General-purpose QR solvers can emit NaN on graded matrices whose entries
/// span hundreds of orders of magnitude — exactly the situation here, since
/// coherent-state amplitudes decay super-exponentially in n. Jacobi rotations
/// degrade gracefully on such matrices (a rotation against a denormal pivot
/// collapses to the identity), at a cost that is irrelevant for the dims ≤
/// ~200 used in this crate.
fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    if n == 1 {
        return vec![a[(0, 0)]];
    }
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _sweep in 0..64 {
        let off = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)] * a[(p, q)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
            }
        }
    }
    (0..n).map(|i| a[(i, i)]).collect()
}

/// Eigenvalues of a Hermitian matrix. Real input runs the Jacobi routine
/// directly; complex input is embedded as the real symmetric matrix
/// `[[Re H, −Im H], [Im H, Re H]]`, whose spectrum is that of H doubled.
pub(crate) fn hermitian_eigenvalues(h: &DMatrix<Complex64>) -> Vec<f64> {
    let d = h.nrows();
    if h.iter().all(|z| z.im == 0.0) {
        return jacobi_eigenvalues(DMatrix::from_fn(d, d, |i, j| h[(i, j)].re));
    }
    let mut embed = DMatrix::<f64>::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            let z = h[(i, j)];
            embed[(i, j)] = z.re;
            embed[(i + d, j + d)] = z.re;
            embed[(i, j + d)] = -z.im;
            embed[(i + d, j)] = z.im;
        }
    }
    let mut vals = jacobi_eigenvalues(embed);
    // Each Hermitian eigenvalue appears exactly twice; keep one per pair.
    vals.sort_by(f64::total_cmp);
    vals.into_iter().step_by(2).collect()
}

/// Density matrix of a coherent state after Gaussian phase diffusion of
/// width σ. The phase average has the closed form
/// `ρ_{nn'} = cₙ c̄_{n'} e^{−σ²(n−n')²/2}` — the Gaussian characteristic
/// function evaluated at the beat frequency `n − n'`.
pub fn dephased_density_matrix(
    alpha: Complex64,
    sigma: NoiseWidth,
    dim: usize,
) -> Result<DensityMatrix> {
    let vector = coherent_fock_vector(alpha, dim)?;
    let c = vector.amplitudes();
    let half_var = sigma.sigma() * sigma.sigma() / 2.0;
    let mut elements = DMatrix::zeros(dim, dim);
    for n in 0..dim {
        for np in 0..dim {
            let dn = n as f64 - np as f64;
            elements[(n, np)] = c[n] * c[np].conj() * (-half_var * dn * dn).exp();
        }
    }
    Ok(DensityMatrix { elements })
}

/// Pure loss acting on a coherent amplitude: `α → √η·α`. Loss commutes with
/// phase diffusion, so dephasing the attenuated amplitude equals attenuating
/// the dephased state.
pub fn apply_loss(alpha: Complex64, eta: f64) -> Complex64 {
    assert!(
        (0.0..=1.0).contains(&eta),
        "efficiency must lie in [0, 1], got {eta}"
    );
    alpha * eta.sqrt()
}

/// Minimum error probability for discriminating `ρ₁` (prior `prior1`) from
/// `ρ₂`: `½(1 − ‖p₁ρ₁ − p₂ρ₂‖₁)` with the trace norm evaluated by Hermitian
/// eigendecomposition.
pub fn helstrom_error(rho1: &DensityMatrix, rho2: &DensityMatrix, prior1: f64) -> Result<f64> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch {
            left: rho1.dim(),
            right: rho2.dim(),
        });
    }
    if !(0.0..=1.0).contains(&prior1) {
        return Err(Error::InvalidParameter(format!(
            "prior must lie in [0, 1], got {prior1}"
        )));
    }
    let p1 = Complex64::new(prior1, 0.0);
    let p2 = Complex64::new(1.0 - prior1, 0.0);
    let mut gamma = rho1.elements() * p1 - rho2.elements() * p2;
    // Scrub floating-point asymmetry before the Hermitian solver.
    let adjoint = gamma.adjoint();
    gamma = (gamma + adjoint) * Complex64::new(0.5, 0.0);
    let trace_norm: f64 = hermitian_eigenvalues(&gamma).iter().map(|l| l.abs()).sum();
    Ok((0.5 * (1.0 - trace_norm)).clamp(0.0, 0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::gauss_hermite;
    use approx::assert_abs_diff_eq;
    use statrs::function::gamma::ln_gamma;

    fn real(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn vacuum_is_the_ground_basis_state() {
        let v = coherent_fock_vector(real(0.0), 5).unwrap();
        assert_eq!(v.amplitudes()[0], real(1.0));
        for n in 1..5 {
            assert_eq!(v.amplitudes()[n], real(0.0));
        }
    }

    #[test]
    fn coherent_state_mean_photon_number_is_alpha_squared() {
        let v = coherent_fock_vector(real(1.0), 30).unwrap();
        assert_abs_diff_eq!(v.mean_photon_number(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn undersized_cutoff_is_rejected() {
        let err = coherent_fock_vector(real(std::f64::consts::SQRT_2), 2).unwrap_err();
        assert!(matches!(err, Error::CutoffTooSmall { .. }));
    }

    #[test]
    fn cutoff_rule_passes_the_tail_test() {
        for &alpha_sq in &[0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let dim = fock_dim(alpha_sq);
            coherent_fock_vector(real(alpha_sq.sqrt()), dim).unwrap();
        }
    }

    #[test]
    fn zero_noise_leaves_a_pure_state() {
        let sigma = NoiseWidth::new(0.0).unwrap();
        let rho = dephased_density_matrix(real(1.2), sigma, fock_dim(1.44)).unwrap();
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-10);
        rho.validate().unwrap();
    }

    #[test]
    fn fully_dephased_state_is_diagonal_poisson() {
        let sigma = NoiseWidth::new(50.0).unwrap();
        let dim = fock_dim(1.0);
        let rho = dephased_density_matrix(real(1.0), sigma, dim).unwrap();
        let mut poisson = (-1.0f64).exp();
        for n in 0..dim {
            if n > 0 {
                poisson /= n as f64;
            }
            assert_abs_diff_eq!(rho.elements()[(n, n)].re, poisson, epsilon = 1e-12);
            for np in 0..dim {
                if np != n {
                    assert!(rho.elements()[(n, np)].norm() <= 1e-10);
                }
            }
        }
        rho.validate().unwrap();
    }

    /// Independent oracle: average the pure-state projectors |αe^{iφ}⟩⟨αe^{iφ}|
    /// over φ with a fixed-order Gauss–Hermite rule.
    fn dephased_oracle(alpha: Complex64, sigma: f64, dim: usize, order: usize) -> DMatrix<Complex64> {
        let rule = gauss_hermite(order);
        let mut acc = DMatrix::<Complex64>::zeros(dim, dim);
        let norm = std::f64::consts::PI.sqrt();
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            let phi = std::f64::consts::SQRT_2 * sigma * t;
            let rotated = alpha * Complex64::new(0.0, phi).exp();
            let v = coherent_fock_vector(rotated, dim).unwrap();
            for n in 0..dim {
                for np in 0..dim {
                    acc[(n, np)] += v.amplitudes()[n]
                        * v.amplitudes()[np].conj()
                        * Complex64::new(w / norm, 0.0);
                }
            }
        }
        acc
    }

    #[test]
    fn closed_form_matches_quadrature_oracle() {
        let dim = fock_dim(1.0);
        let rho =
            dephased_density_matrix(real(1.0), NoiseWidth::new(0.4).unwrap(), dim).unwrap();
        let oracle = dephased_oracle(real(1.0), 0.4, dim, 200);
        for n in 0..dim {
            for np in 0..dim {
                assert!((rho.elements()[(n, np)] - oracle[(n, np)]).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn diagonal_is_poisson_for_any_noise_width() {
        for &sigma in &[0.0, 0.3, 1.0, 5.0] {
            let dim = fock_dim(2.0);
            let rho = dephased_density_matrix(
                real(2.0f64.sqrt()),
                NoiseWidth::new(sigma).unwrap(),
                dim,
            )
            .unwrap();
            let pure = coherent_fock_vector(real(2.0f64.sqrt()), dim).unwrap();
            for n in 0..dim {
                assert_abs_diff_eq!(
                    rho.elements()[(n, n)].re,
                    pure.amplitudes()[n].norm_sqr(),
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn loss_scales_amplitude() {
        assert_eq!(apply_loss(real(2.0), 1.0), real(2.0));
        assert_abs_diff_eq!(apply_loss(real(2.0), 0.25).re, 1.0, epsilon = 1e-15);
    }

    /// Beam-splitter Kraus map for pure loss in the number basis.
    fn loss_channel_oracle(rho: &DensityMatrix, eta: f64) -> DMatrix<Complex64> {
        let d = rho.dim();
        let ln_choose =
            |n: usize, k: usize| ln_gamma((n + 1) as f64) - ln_gamma((k + 1) as f64)
                - ln_gamma((n - k + 1) as f64);
        let mut out = DMatrix::<Complex64>::zeros(d, d);
        for k in 0..d {
            let coef = |m: usize| {
                (0.5 * (ln_choose(m + k, k)
                    + m as f64 * eta.ln()
                    + k as f64 * (1.0 - eta).ln()))
                .exp()
            };
            for m in 0..d - k {
                for mp in 0..d - k {
                    out[(m, mp)] +=
                        rho.elements()[(m + k, mp + k)] * Complex64::new(coef(m) * coef(mp), 0.0);
                }
            }
        }
        out
    }

    #[test]
    fn loss_commutes_with_dephasing() {
        let sigma = NoiseWidth::new(0.4).unwrap();
        let eta = 0.72;
        let dim = fock_dim(1.0);
        let before = dephased_density_matrix(real(1.0), sigma, dim).unwrap();
        let oracle = loss_channel_oracle(&before, eta);
        let direct = dephased_density_matrix(apply_loss(real(1.0), eta), sigma, dim).unwrap();
        for n in 0..dim {
            for np in 0..dim {
                assert!((direct.elements()[(n, np)] - oracle[(n, np)]).norm() <= 1e-8);
            }
        }
    }

    #[test]
    fn identical_states_are_indistinguishable() {
        let sigma = NoiseWidth::new(0.3).unwrap();
        let rho = dephased_density_matrix(real(1.0), sigma, fock_dim(1.0)).unwrap();
        let pe = helstrom_error(&rho, &rho.clone(), 0.5).unwrap();
        assert_abs_diff_eq!(pe, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn pure_state_helstrom_matches_the_overlap_formula() {
        // Equal-prior pure states: P_E = ½(1 − √(1 − |⟨α₁|α₂⟩|²)) with
        // |⟨α₁|α₂⟩|² = e^{−|α₁−α₂|²}.
        let sigma = NoiseWidth::new(0.0).unwrap();
        let a = 0.5f64.sqrt();
        let dim = fock_dim(0.5);
        let rho1 = dephased_density_matrix(real(-a), sigma, dim).unwrap();
        let rho2 = dephased_density_matrix(real(a), sigma, dim).unwrap();
        let pe = helstrom_error(&rho1, &rho2, 0.5).unwrap();
        let overlap_sq = (-(2.0 * a) * (2.0 * a)).exp();
        let analytic = 0.5 * (1.0 - (1.0 - overlap_sq).sqrt());
        assert_abs_diff_eq!(pe, analytic, epsilon = 1e-6);
        assert_abs_diff_eq!(pe, 0.035063, epsilon = 5e-7);
    }

    #[test]
    fn near_orthogonal_states_are_almost_perfectly_distinguishable() {
        let sigma = NoiseWidth::new(0.0).unwrap();
        let dim = fock_dim(16.0);
        let rho1 = dephased_density_matrix(real(0.0), sigma, dim).unwrap();
        let rho2 = dephased_density_matrix(real(4.0), sigma, dim).unwrap();
        assert!(helstrom_error(&rho1, &rho2, 0.5).unwrap() <= 1e-7);
    }

    #[test]
    fn helstrom_is_symmetric_under_hypothesis_swap() {
        let sigma = NoiseWidth::new(0.5).unwrap();
        let dim = fock_dim(2.0);
        let rho1 = dephased_density_matrix(real(-0.6), sigma, dim).unwrap();
        let rho2 = dephased_density_matrix(real(1.3), sigma, dim).unwrap();
        let a = helstrom_error(&rho1, &rho2, 0.3).unwrap();
        let b = helstrom_error(&rho2, &rho1, 0.7).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-13);
    }

    #[test]
    fn helstrom_error_decreases_with_separation() {
        let sigma = NoiseWidth::new(0.0).unwrap();
        let dim = fock_dim(9.0);
        let mut last = 0.5;
        for i in 0..12 {
            let sep = 0.25 * i as f64;
            let rho1 = dephased_density_matrix(real(-sep / 2.0), sigma, dim).unwrap();
            let rho2 = dephased_density_matrix(real(sep / 2.0), sigma, dim).unwrap();
            let pe = helstrom_error(&rho1, &rho2, 0.5).unwrap();
            assert!(pe <= last + 1e-12);
            last = pe;
        }
    }

    #[test]
    fn complex_amplitudes_use_the_hermitian_embedding() {
        // Pure states at genuinely complex amplitudes still obey the overlap
        // formula |⟨α₁|α₂⟩|² = e^{−|α₁−α₂|²}.
        let sigma = NoiseWidth::new(0.0).unwrap();
        let a1 = Complex64::new(0.6, 0.8);
        let a2 = -a1;
        let dim = fock_dim(1.0);
        let rho1 = dephased_density_matrix(a1, sigma, dim).unwrap();
        let rho2 = dephased_density_matrix(a2, sigma, dim).unwrap();
        let pe = helstrom_error(&rho1, &rho2, 0.5).unwrap();
        let overlap_sq = (-(a1 - a2).norm_sqr()).exp();
        let analytic = 0.5 * (1.0 - (1.0 - overlap_sq).sqrt());
        assert_abs_diff_eq!(pe, analytic, epsilon = 1e-10);
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let sigma = NoiseWidth::new(0.0).unwrap();
        let rho1 = dephased_density_matrix(real(0.5), sigma, 25).unwrap();
        let rho2 = dephased_density_matrix(real(0.5), sigma, 26).unwrap();
        assert!(matches!(
            helstrom_error(&rho1, &rho2, 0.5),
            Err(Error::DimensionMismatch { left: 25, right: 26 })
        ));
    }
}
