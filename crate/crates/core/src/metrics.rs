//! Decision rules and figures of merit: MAP decoding, discrimination error
//! probability, soft-decision mutual information, conventional-measurement
//! baselines, and the worst-case mutual-information shortfall R(m).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::fock::{self, NoiseWidth};
use crate::optimizer::{self, golden_section_min, SearchSettings};
use crate::photostats::{
    direct_detection_probs, homodyne_error, pnr_outcome_probs, Imperfections, OutcomeDistribution,
    PnrStrategy,
};
use crate::quad::phase_average_vec;

/// Which figure of merit an optimization targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    /// Minimize the discrimination error probability.
    Error,
    /// Maximize the soft-decision mutual information.
    MutualInformation,
}

/// Binary alphabet of real coherent amplitudes with its average photon
/// number `n̄ = (a₁² + a₂²)/2`. Both hypotheses carry prior ½ throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Alphabet {
    a1: f64,
    a2: f64,
    nbar: f64,
}

impl Alphabet {
    pub fn new(a1: f64, a2: f64) -> Result<Self> {
        if !(a1.is_finite() && a2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alphabet amplitudes must be finite, got ({a1}, {a2})"
            )));
        }
        Ok(Alphabet {
            a1,
            a2,
            nbar: 0.5 * (a1 * a1 + a2 * a2),
        })
    }

    /// Energy-constrained family: `a₁ = −√(2n̄)·sin θ`, `a₂ = √(2n̄)·cos θ`.
    /// θ = π/4 is antipodal (BPSK), θ = 0 is on-off keying.
    pub fn from_theta(theta: f64, nbar: f64) -> Result<Self> {
        if !(nbar >= 0.0 && nbar.is_finite() && theta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alphabet family needs finite θ and n̄ ≥ 0, got ({theta}, {nbar})"
            )));
        }
        let scale = (2.0 * nbar).sqrt();
        Ok(Alphabet {
            a1: -scale * theta.sin(),
            a2: scale * theta.cos(),
            nbar,
        })
    }

    pub fn bpsk(nbar: f64) -> Result<Self> {
        Self::from_theta(std::f64::consts::FRAC_PI_4, nbar)
    }

    pub fn ook(nbar: f64) -> Result<Self> {
        Self::from_theta(0.0, nbar)
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn a2(&self) -> f64 {
        self.a2
    }

    pub fn nbar(&self) -> f64 {
        self.nbar
    }
}

/// Figures of merit of one concrete strategy, with the MAP decision table
/// (outcome index → hypothesis index 0/1).
#[derive(Debug, Clone, Serialize)]
pub struct StrategyReport {
    pub pe: f64,
    pub mi: f64,
    pub decision_map: Vec<usize>,
}

/// MAP decision table: outcome k goes to the hypothesis maximizing
/// `P(k|i)·P(i)`. Ties break toward hypothesis 0 deterministically.
pub fn map_decision(
    cond: [&OutcomeDistribution; 2],
    priors: [f64; 2],
) -> Vec<usize> {
    assert_eq!(
        cond[0].probs().len(),
        cond[1].probs().len(),
        "outcome distributions must share a length"
    );
    cond[0]
        .probs()
        .iter()
        .zip(cond[1].probs())
        .map(|(&p0, &p1)| usize::from(priors[1] * p1 > priors[0] * p0))
        .collect()
}

/// Discrimination error of the MAP rule on a pair of outcome distributions:
/// `1 − Σ_k max_i P(k|i)·P(i)`.
pub fn pe_from_distributions(
    cond: [&OutcomeDistribution; 2],
    priors: [f64; 2],
) -> f64 {
    let success: f64 = cond[0]
        .probs()
        .iter()
        .zip(cond[1].probs())
        .map(|(&p0, &p1)| (priors[0] * p0).max(priors[1] * p1))
        .sum();
    (1.0 - success).clamp(0.0, 1.0)
}

fn xlog2x_ratio(p: f64, q: f64) -> f64 {
    // p·log₂(p/q) with the 0·log 0 := 0 convention.
    if p <= 0.0 {
        0.0
    } else {
        p * (p / q).log2()
    }
}

/// Soft-decision mutual information (bits) of the binary-input channel whose
/// outputs are the pooled counting outcomes:
/// `I = Σ_k Σ_i P(i)P(k|i) log₂[P(k|i)/P(k)]`.
pub fn mi_from_distributions(
    cond: [&OutcomeDistribution; 2],
    priors: [f64; 2],
) -> f64 {
    let mut bits = 0.0;
    for (&p0, &p1) in cond[0].probs().iter().zip(cond[1].probs()) {
        let marginal = priors[0] * p0 + priors[1] * p1;
        if marginal <= 0.0 {
            continue;
        }
        bits += priors[0] * xlog2x_ratio(p0, marginal) + priors[1] * xlog2x_ratio(p1, marginal);
    }
    bits.clamp(0.0, 1.0)
}

/// Mutual information of the binary channel obtained by collapsing the
/// outcomes through the MAP decision first (a "hard" decision).
pub fn hard_decision_mi(
    cond: [&OutcomeDistribution; 2],
    priors: [f64; 2],
) -> f64 {
    let map = map_decision(cond, priors);
    let mut collapsed = [[0.0f64; 2]; 2];
    for i in 0..2 {
        for (k, &p) in cond[i].probs().iter().enumerate() {
            collapsed[i][map[k]] += p;
        }
    }
    let mut bits = 0.0;
    for j in 0..2 {
        let marginal = priors[0] * collapsed[0][j] + priors[1] * collapsed[1][j];
        if marginal <= 0.0 {
            continue;
        }
        for i in 0..2 {
            bits += priors[i] * xlog2x_ratio(collapsed[i][j], marginal);
        }
    }
    bits.clamp(0.0, 1.0)
}

fn pnr_pair(
    alphabet: &Alphabet,
    sigma: NoiseWidth,
    strat: &PnrStrategy,
    imp: &Imperfections,
) -> Result<[OutcomeDistribution; 2]> {
    Ok([
        pnr_outcome_probs(alphabet.a1(), sigma, strat, imp)?,
        pnr_outcome_probs(alphabet.a2(), sigma, strat, imp)?,
    ])
}

/// Error probability of the displaced PNR(m) receiver with MAP decoding,
/// equal priors.
pub fn error_probability(
    alphabet: &Alphabet,
    sigma: NoiseWidth,
    strat: &PnrStrategy,
    imp: &Imperfections,
) -> Result<f64> {
    let [d1, d2] = pnr_pair(alphabet, sigma, strat, imp)?;
    Ok(pe_from_distributions([&d1, &d2], [0.5, 0.5]))
}

/// Soft-decision mutual information of the displaced PNR(m) receiver, equal
/// priors.
pub fn mutual_information(
    alphabet: &Alphabet,
    sigma: NoiseWidth,
    strat: &PnrStrategy,
    imp: &Imperfections,
) -> Result<f64> {
    let [d1, d2] = pnr_pair(alphabet, sigma, strat, imp)?;
    Ok(mi_from_distributions([&d1, &d2], [0.5, 0.5]))
}

/// Error probability, mutual information, and MAP table of one strategy in a
/// single evaluation.
pub fn strategy_report(
    alphabet: &Alphabet,
    sigma: NoiseWidth,
    strat: &PnrStrategy,
    imp: &Imperfections,
) -> Result<StrategyReport> {
    let [d1, d2] = pnr_pair(alphabet, sigma, strat, imp)?;
    let cond = [&d1, &d2];
    Ok(StrategyReport {
        pe: pe_from_distributions(cond, [0.5, 0.5]),
        mi: mi_from_distributions(cond, [0.5, 0.5]),
        decision_map: map_decision(cond, [0.5, 0.5]),
    })
}

/// Helstrom bound for the alphabet after loss η and phase diffusion σ, equal
/// priors.
pub fn helstrom_error_for(alphabet: &Alphabet, sigma: NoiseWidth, eta: f64) -> Result<f64> {
    let a1 = fock::apply_loss(alphabet.a1().into(), eta);
    let a2 = fock::apply_loss(alphabet.a2().into(), eta);
    let dim = fock::fock_dim(a1.norm_sqr().max(a2.norm_sqr()));
    let rho1 = fock::dephased_density_matrix(a1, sigma, dim)?;
    let rho2 = fock::dephased_density_matrix(a2, sigma, dim)?;
    fock::helstrom_error(&rho1, &rho2, 0.5)
}

/// Helstrom bound minimized over the energy-constrained alphabet family.
pub fn optimal_helstrom(nbar: f64, sigma: NoiseWidth, eta: f64) -> Result<(f64, Alphabet)> {
    if nbar == 0.0 {
        return Ok((0.5, Alphabet::new(0.0, 0.0)?));
    }
    let objective = |theta: f64| -> Result<f64> {
        helstrom_error_for(&Alphabet::from_theta(theta, nbar)?, sigma, eta)
    };
    let theta = minimize_theta(objective, 25)?;
    let alphabet = Alphabet::from_theta(theta, nbar)?;
    Ok((helstrom_error_for(&alphabet, sigma, eta)?, alphabet))
}

/// Coarse scan over θ ∈ [0, π/4] followed by golden-section refinement of the
/// best bracket.
fn minimize_theta<F>(mut f: F, coarse: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let hi = std::f64::consts::FRAC_PI_4;
    let step = hi / (coarse - 1) as f64;
    let mut best = (0.0, f64::INFINITY);
    for j in 0..coarse {
        let theta = j as f64 * step;
        let v = f(theta)?;
        if v < best.1 {
            best = (theta, v);
        }
    }
    let lo_edge = (best.0 - step).max(0.0);
    let hi_edge = (best.0 + step).min(hi);
    let (theta, _) = golden_section_min(&mut f, lo_edge, hi_edge, 50)?;
    Ok(theta)
}

/// Which conventional detection won the baseline comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Detection {
    Homodyne,
    Direct,
}

/// Best conventional measurement (homodyne or direct detection, each with
/// its own optimized binary alphabet) for one (n̄, σ, η) point.
#[derive(Debug, Clone, Serialize)]
pub struct CmBaseline {
    pub pe: f64,
    pub mi: f64,
    pub detection: Detection,
    pub alphabet: Alphabet,
}

/// Number of exactly resolved counts that makes pooling lossless for a
/// Poisson mean of `lambda` (tail below the truncation tolerance).
fn lossless_resolution(lambda: f64) -> usize {
    fock::fock_dim(lambda)
}

fn direct_pair(alphabet: &Alphabet, eta: f64) -> [OutcomeDistribution; 2] {
    let imp = Imperfections::new(eta, 1.0, 0.0).expect("validated upstream");
    let lambda_max = eta * alphabet.a1().powi(2).max(alphabet.a2().powi(2));
    let m = lossless_resolution(lambda_max);
    [
        direct_detection_probs(alphabet.a1(), m, &imp),
        direct_detection_probs(alphabet.a2(), m, &imp),
    ]
}

/// Mutual information of homodyne detection, integrated over an `n_grid`
/// point quadrature-value grid spanning ±8 standard deviations around the
/// outer means.
fn homodyne_mi(
    alphabet: &Alphabet,
    sigma: NoiseWidth,
    eta: f64,
    n_grid: usize,
) -> Result<f64> {
    let mu = [
        (2.0 * eta).sqrt() * alphabet.a1(),
        (2.0 * eta).sqrt() * alphabet.a2(),
    ];
    let pad = 8.0 * 0.5f64.sqrt();
    let lo = mu[0].min(mu[1]) - pad;
    let hi = mu[0].max(mu[1]) + pad;
    let dx = (hi - lo) / (n_grid - 1) as f64;
    let grid: Vec<f64> = (0..n_grid).map(|j| lo + j as f64 * dx).collect();
    let norm = std::f64::consts::FRAC_2_SQRT_PI * 0.5;
    let density = |amp_mu: f64| -> Result<Vec<f64>> {
        phase_average_vec(sigma.sigma(), n_grid, |phi, out| {
            let center = amp_mu * phi.cos();
            for (slot, &x) in out.iter_mut().zip(&grid) {
                let d = x - center;
                *slot = (-d * d).exp() * norm;
            }
        })
    };
    let f1 = density(mu[0])?;
    let f2 = density(mu[1])?;
    let mut bits = 0.0;
    for j in 0..n_grid {
        let w = if j == 0 || j == n_grid - 1 { 0.5 } else { 1.0 };
        let marginal = 0.5 * (f1[j] + f2[j]);
        if marginal <= 0.0 {
            continue;
        }
        bits += w * dx * 0.5 * (xlog2x_ratio(f1[j], marginal) + xlog2x_ratio(f2[j], marginal));
    }
    Ok(bits.clamp(0.0, 1.0))
}

/// Grid size for homodyne mutual information during alphabet optimization;
/// the final report is re-evaluated at [`HOMODYNE_MI_GRID`].
const HOMODYNE_MI_COARSE_GRID: usize = 501;
/// Reporting grid: sub-1e-6 integration error, verified by grid doubling.
const HOMODYNE_MI_GRID: usize = 2001;

/// Best conventional measurement — homodyne or direct detection, whichever
/// optimizes `objective` with its own energy-constrained alphabet.
pub fn cm_baseline(
    nbar: f64,
    sigma: NoiseWidth,
    eta: f64,
    objective: Objective,
) -> Result<CmBaseline> {
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "mean photon number must be a finite nonnegative real, got {nbar}"
        )));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!(
            "efficiency must lie in [0, 1], got {eta}"
        )));
    }
    if nbar == 0.0 {
        // Identical vacuum hypotheses: nothing to distinguish.
        return Ok(CmBaseline {
            pe: 0.5,
            mi: 0.0,
            detection: Detection::Homodyne,
            alphabet: Alphabet::new(0.0, 0.0)?,
        });
    }

    let hom_objective = |theta: f64| -> Result<f64> {
        let a = Alphabet::from_theta(theta, nbar)?;
        match objective {
            Objective::Error => homodyne_error(a.a1(), a.a2(), sigma, eta, 0.5),
            Objective::MutualInformation => {
                Ok(-homodyne_mi(&a, sigma, eta, HOMODYNE_MI_COARSE_GRID)?)
            }
        }
    };
    let hom_theta = minimize_theta(hom_objective, 13)?;
    let hom_alphabet = Alphabet::from_theta(hom_theta, nbar)?;
    let hom_pe = homodyne_error(hom_alphabet.a1(), hom_alphabet.a2(), sigma, eta, 0.5)?;
    let hom_mi = homodyne_mi(&hom_alphabet, sigma, eta, HOMODYNE_MI_GRID)?;

    let dir_objective = |theta: f64| -> Result<f64> {
        let a = Alphabet::from_theta(theta, nbar)?;
        let [d1, d2] = direct_pair(&a, eta);
        Ok(match objective {
            Objective::Error => pe_from_distributions([&d1, &d2], [0.5, 0.5]),
            Objective::MutualInformation => -mi_from_distributions([&d1, &d2], [0.5, 0.5]),
        })
    };
    let dir_theta = minimize_theta(dir_objective, 13)?;
    let dir_alphabet = Alphabet::from_theta(dir_theta, nbar)?;
    let [d1, d2] = direct_pair(&dir_alphabet, eta);
    let dir_pe = pe_from_distributions([&d1, &d2], [0.5, 0.5]);
    let dir_mi = mi_from_distributions([&d1, &d2], [0.5, 0.5]);

    let homodyne_wins = match objective {
        Objective::Error => hom_pe <= dir_pe,
        Objective::MutualInformation => hom_mi >= dir_mi,
    };
    Ok(if homodyne_wins {
        CmBaseline {
            pe: hom_pe,
            mi: hom_mi,
            detection: Detection::Homodyne,
            alphabet: hom_alphabet,
        }
    } else {
        CmBaseline {
            pe: dir_pe,
            mi: dir_mi,
            detection: Detection::Direct,
            alphabet: dir_alphabet,
        }
    })
}

/// Worst-case relative mutual-information shortfall of the optimized PNR(m)
/// strategy versus the conventional-measurement baseline over a σ grid:
/// `R(m) = max_σ (I_CM − I_PNR)/I_CM`. Signed: negative values mean PNR wins
/// everywhere.
pub fn r_of_m(nbar: f64, m: usize, imp: &Imperfections, sigma_grid: &[f64]) -> Result<f64> {
    let curve = r_of_m_curve(nbar, &[m], imp, sigma_grid)?;
    Ok(curve[0])
}

/// [`r_of_m`] for several resolutions at once, sharing the (m-independent)
/// conventional-measurement curve across them.
pub fn r_of_m_curve(
    nbar: f64,
    ms: &[usize],
    imp: &Imperfections,
    sigma_grid: &[f64],
) -> Result<Vec<f64>> {
    if sigma_grid.is_empty() {
        return Err(Error::InvalidParameter(
            "σ grid for R(m) must be nonempty".into(),
        ));
    }
    let mut cm = Vec::with_capacity(sigma_grid.len());
    for &s in sigma_grid {
        let sigma = NoiseWidth::new(s)?;
        cm.push(cm_baseline(nbar, sigma, imp.eta(), Objective::MutualInformation)?.mi);
    }
    // Per-σ PNR mutual information is re-optimized along a warm-started
    // sweep; the MI landscape is mild, so a reduced start grid suffices.
    let settings = SearchSettings {
        theta_starts: 6,
        beta_starts: 6,
        ..SearchSettings::default()
    };
    let mut out = Vec::with_capacity(ms.len());
    for &m in ms {
        let sweep = optimizer::sweep_sigma_with(
            &settings,
            optimizer::SweepMode::WarmStarted,
            nbar,
            m,
            imp,
            sigma_grid,
            Objective::MutualInformation,
        )?;
        let mut worst = f64::NEG_INFINITY;
        for (icm, result) in cm.iter().zip(&sweep.results) {
            if *icm <= 1e-12 {
                continue;
            }
            worst = worst.max((icm - result.best.value) / icm);
        }
        out.push(worst);
    }
    Ok(out)
}

/// Power law `R ≈ amplitude·m^exponent` fitted in log–log coordinates.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PowerLawFit {
    pub amplitude: f64,
    pub exponent: f64,
}

/// Fits a power law through the strictly positive samples; `None` when fewer
/// than two remain.
pub fn power_law_fit(ms: &[f64], rs: &[f64]) -> Option<PowerLawFit> {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (&m, &r) in ms.iter().zip(rs) {
        if m > 0.0 && r > 0.0 {
            xs.push(m.ln());
            ys.push(r.ln());
        }
    }
    let line = linear_fit(&xs, &ys)?;
    Some(PowerLawFit {
        amplitude: line.intercept.exp(),
        exponent: line.slope,
    })
}
