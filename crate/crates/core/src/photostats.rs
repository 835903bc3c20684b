//! Conditional measurement statistics at the receiver: displaced photon
//! counting with finite number resolution, homodyne quadrature densities, and
//! direct-detection count statistics, all averaged over the Gaussian phase
//! noise.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::fock::NoiseWidth;
use crate::quad::{phase_average, phase_average_vec};

/// Receiver imperfections: detection efficiency η, interference visibility ξ,
/// and dark-count mean ν per pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Imperfections {
    eta: f64,
    xi: f64,
    nu: f64,
}

impl Imperfections {
    pub fn new(eta: f64, xi: f64, nu: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidParameter(format!(
                "efficiency must lie in [0, 1], got {eta}"
            )));
        }
        if !(0.0..=1.0).contains(&xi) {
            return Err(Error::InvalidParameter(format!(
                "visibility must lie in [0, 1], got {xi}"
            )));
        }
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dark-count mean must be a finite nonnegative real, got {nu}"
            )));
        }
        Ok(Imperfections { eta, xi, nu })
    }

    /// Lossless, perfectly mode-matched, dark-count-free receiver.
    pub fn ideal() -> Self {
        Imperfections {
            eta: 1.0,
            xi: 1.0,
            nu: 0.0,
        }
    }

    /// Reference parameter set of the experimental apparatus the bundled
    /// presets model: η = 0.72, ξ = 0.998, ν = 3.6×10⁻³.
    pub fn experimental() -> Self {
        Imperfections {
            eta: 0.72,
            xi: 0.998,
            nu: 3.6e-3,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
}

/// Displacement receiver configuration: signed displacement amplitude β and
/// photon-number resolution m (counts 0..m−1 are distinguished, counts ≥ m
/// are pooled).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PnrStrategy {
    beta: f64,
    m: usize,
}

impl PnrStrategy {
    pub fn new(beta: f64, m: usize) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidParameter(
                "photon-number resolution must be at least 1".into(),
            ));
        }
        if !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "displacement must be finite, got {beta}"
            )));
        }
        Ok(PnrStrategy { beta, m })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn resolution(&self) -> usize {
        self.m
    }
}

/// Probability vector over the m+1 pooled counting outcomes of one
/// hypothesis: indices 0..m−1 are exact counts, index m means "≥ m counts".
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeDistribution {
    probs: Vec<f64>,
}

impl OutcomeDistribution {
    /// Wraps an explicit probability vector (validated).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidParameter(
                "outcome distribution needs at least two entries".into(),
            ));
        }
        let dist = OutcomeDistribution { probs };
        dist.validate()?;
        Ok(dist)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Number of distinguished outcomes minus one (the resolution m).
    pub fn resolution(&self) -> usize {
        self.probs.len() - 1
    }

    /// Entrywise range and normalization check.
    pub fn validate(&self) -> Result<()> {
        for &p in &self.probs {
            if !(0.0..=1.0 + 1e-12).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "outcome probability {p} outside [0, 1]"
                )));
            }
        }
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "outcome probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Mean photon number after interfering the signal with the displacement
/// field at relative phase φ: `λ = η(s² + β² − 2ξsβ cos φ) + ν`.
pub fn displaced_mean_count(signal: f64, beta: f64, phi: f64, imp: &Imperfections) -> f64 {
    imp.eta * (signal * signal + beta * beta - 2.0 * imp.xi * signal * beta * phi.cos()) + imp.nu
}

/// Writes `Poisson(k; λ)` for k = 0..out.len()−1.
fn poisson_prefix(lambda: f64, out: &mut [f64]) {
    let mut p = (-lambda).exp();
    for (k, slot) in out.iter_mut().enumerate() {
        if k > 0 {
            p *= lambda / k as f64;
        }
        *slot = p;
    }
}

/// Outcome distribution of the displaced PNR(m) receiver for one signal
/// hypothesis: Poisson counting at the phase-dependent mean
/// [`displaced_mean_count`], averaged over `φ ~ N(0, σ²)`.
pub fn pnr_outcome_probs(
    signal: f64,
    sigma: NoiseWidth,
    strat: &PnrStrategy,
    imp: &Imperfections,
) -> Result<OutcomeDistribution> {
    let m = strat.m;
    let mut probs = phase_average_vec(sigma.sigma(), m, |phi, out| {
        poisson_prefix(displaced_mean_count(signal, strat.beta, phi, imp), out);
    })?;
    let head: f64 = probs.iter().sum();
    probs.push((1.0 - head).max(0.0));
    Ok(OutcomeDistribution { probs })
}

/// Quadrature density of one signal hypothesis under homodyne detection:
/// a Gaussian of variance ½ centered at `√(2η)·s·cos φ`, averaged over the
/// phase noise. Convention: the vacuum quadrature variance is ½, so a
/// coherent state of real amplitude s at σ=0 has mean √2·s at η=1.
pub fn homodyne_density(signal: f64, sigma: NoiseWidth, eta: f64, x: f64) -> Result<f64> {
    let mu0 = (2.0 * eta).sqrt() * signal;
    phase_average(sigma.sigma(), |phi| {
        let d = x - mu0 * phi.cos();
        // pdf of N(μ, ½): e^{−(x−μ)²}/√π
        (-d * d).exp() * std::f64::consts::FRAC_2_SQRT_PI * 0.5
    })
}

/// CDF of the variance-½ Gaussian centered at μ.
fn half_var_cdf(x: f64, mu: f64) -> f64 {
    0.5 * (1.0 + erf(x - mu))
}

/// Probability mass of one hypothesis' homodyne output in `(a, b]`.
fn homodyne_interval_mass(signal: f64, sigma: NoiseWidth, eta: f64, a: f64, b: f64) -> Result<f64> {
    let mu0 = (2.0 * eta).sqrt() * signal;
    phase_average(sigma.sigma(), |phi| {
        let mu = mu0 * phi.cos();
        half_var_cdf(b, mu) - half_var_cdf(a, mu)
    })
}

/// Error probability of homodyne detection with MAP (density-crossing)
/// thresholds for two real signal amplitudes with prior `prior1` on the
/// first.
pub fn homodyne_error(
    a1: f64,
    a2: f64,
    sigma: NoiseWidth,
    eta: f64,
    prior1: f64,
) -> Result<f64> {
    if a1 == a2 {
        return Err(Error::IdenticalAmplitudes(a1));
    }
    if !(0.0..=1.0).contains(&prior1) {
        return Err(Error::InvalidParameter(format!(
            "prior must lie in [0, 1], got {prior1}"
        )));
    }
    let p = [prior1, 1.0 - prior1];
    if p[0] == 0.0 || p[1] == 0.0 {
        return Ok(0.0);
    }
    let mu = [(2.0 * eta).sqrt() * a1, (2.0 * eta).sqrt() * a2];
    // Weighted density difference g(x) = p₁f₁(x) − p₂f₂(x) on a grid wide
    // enough to hold all crossings; thresholds are its sign changes.
    let reach = mu[0].abs().max(mu[1].abs()) + 8.0 * 0.5f64.sqrt();
    let n_grid = 4001usize;
    let grid: Vec<f64> = (0..n_grid)
        .map(|j| -reach + 2.0 * reach * j as f64 / (n_grid - 1) as f64)
        .collect();
    let sig = sigma.sigma();
    let g_grid = phase_average_vec(sig, n_grid, |phi, out| {
        let m1 = mu[0] * phi.cos();
        let m2 = mu[1] * phi.cos();
        for (slot, &x) in out.iter_mut().zip(&grid) {
            let d1 = x - m1;
            let d2 = x - m2;
            *slot = p[0] * (-d1 * d1).exp() - p[1] * (-d2 * d2).exp();
        }
    })?;
    let g_at = |x: f64| -> Result<f64> {
        phase_average(sig, |phi| {
            let d1 = x - mu[0] * phi.cos();
            let d2 = x - mu[1] * phi.cos();
            p[0] * (-d1 * d1).exp() - p[1] * (-d2 * d2).exp()
        })
    };
    // Crossings lie between consecutive grid samples of opposite nonzero
    // sign; zero plateaus (tail underflow, exact symmetric centers) are
    // bridged by remembering the last nonzero sample.
    let mut thresholds = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for (&x, &g) in grid.iter().zip(&g_grid) {
        if g == 0.0 {
            continue;
        }
        if let Some((x_prev, g_prev)) = last {
            if g.signum() != g_prev.signum() {
                let (mut lo, mut hi) = (x_prev, x);
                let mut g_lo = g_prev;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let g_mid = g_at(mid)?;
                    if !g_mid.is_finite() {
                        return Err(Error::ThresholdSearchFailed(format!(
                            "density difference not finite at x = {mid}"
                        )));
                    }
                    if g_mid != 0.0 && g_mid.signum() == g_lo.signum() {
                        lo = mid;
                        g_lo = g_mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-12 {
                        break;
                    }
                }
                thresholds.push(0.5 * (lo + hi));
            }
        }
        last = Some((x, g));
    }
    // Integrate the losing hypothesis' mass over each decision region. The
    // region's winner is read off the most informative grid sample inside it.
    let mut edges = vec![f64::NEG_INFINITY];
    edges.extend(&thresholds);
    edges.push(f64::INFINITY);
    let mut error = 0.0;
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let g_repr = grid
            .iter()
            .zip(&g_grid)
            .filter(|(&x, _)| x > lo && x < hi)
            .map(|(_, &g)| g)
            .fold(0.0f64, |best, g| if g.abs() > best.abs() { g } else { best });
        let loser = if g_repr >= 0.0 { 1 } else { 0 };
        let amp = if loser == 0 { a1 } else { a2 };
        error += p[loser] * homodyne_interval_mass(amp, sigma, eta, lo, hi)?;
    }
    Ok(error.clamp(0.0, 1.0))
}

/// Count statistics of direct (undisplaced) photon detection pooled at
/// resolution m: Poisson with mean `η·s² + ν`. Phase noise does not enter —
/// the intensity is phase-invariant.
pub fn direct_detection_probs(signal: f64, m: usize, imp: &Imperfections) -> OutcomeDistribution {
    assert!(m >= 1, "resolution must be at least 1");
    let lambda = imp.eta * signal * signal + imp.nu;
    let mut probs = vec![0.0; m + 1];
    poisson_prefix(lambda, &mut probs[..m]);
    let head: f64 = probs[..m].iter().sum();
    probs[m] = (1.0 - head).max(0.0);
    OutcomeDistribution { probs }
}
