//! Shot-level Monte Carlo replication of the experiment: sample the phase
//! noise, generate photon counts, decode with the analytic MAP rule, and
//! estimate empirical error probability and mutual information.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::NoiseWidth;
use crate::metrics::{self, Alphabet};
use crate::optimizer::map_maybe_parallel;
use crate::photostats::{displaced_mean_count, pnr_outcome_probs, Imperfections, PnrStrategy};

/// Shots per counter-based RNG stream. Fixed so that the partitioning — and
/// therefore every sampled bit — is identical whether chunks run in sequence
/// or on the worker pool.
const CHUNK_SHOTS: usize = 8192;

/// Draws from Poisson(λ) by CDF inversion. All desk-scale rates here are
/// small (λ ≲ 10), where inversion is exact, branch-free across platforms,
/// and fast.
pub(crate) fn sample_poisson<R: Rng>(lambda: f64, rng: &mut R) -> usize {
    debug_assert!(lambda >= 0.0);
    let u: f64 = rng.gen();
    let mut k = 0usize;
    let mut pmf = (-lambda).exp();
    let mut cdf = pmf;
    // The cap is unreachable in exact arithmetic (tail mass < 1e-300) and
    // only guards against float-rounding stalls in the accumulated CDF.
    let cap = (10.0 * lambda + 100.0) as usize;
    while u > cdf && k < cap {
        k += 1;
        pmf *= lambda / k as f64;
        cdf += pmf;
    }
    k
}

/// Outcome counts from a simulated run, together with the exact channel and
/// receiver configuration that produced them, so estimators can rebuild the
/// analytic decision rule without external bookkeeping.
#[derive(Debug, Clone)]
pub struct ShotBatch {
    alphabet: Alphabet,
    sigma: NoiseWidth,
    strat: PnrStrategy,
    imp: Imperfections,
    n_shots: usize,
    seed: u64,
    confusion: [Vec<u64>; 2],
}

impl ShotBatch {
    /// Wraps an externally assembled confusion matrix (rows = hypotheses,
    /// columns = pooled outcomes 0..=m).
    pub fn from_confusion(
        alphabet: Alphabet,
        sigma: NoiseWidth,
        strat: PnrStrategy,
        imp: Imperfections,
        seed: u64,
        confusion: [Vec<u64>; 2],
    ) -> Result<Self> {
        let want = strat.resolution() + 1;
        for row in &confusion {
            if row.len() != want {
                return Err(Error::DimensionMismatch {
                    left: row.len(),
                    right: want,
                });
            }
        }
        let n_shots = confusion.iter().flatten().sum::<u64>() as usize;
        if n_shots == 0 {
            return Err(Error::InvalidParameter(
                "confusion matrix holds no shots".into(),
            ));
        }
        Ok(ShotBatch {
            alphabet,
            sigma,
            strat,
            imp,
            n_shots,
            seed,
            confusion,
        })
    }

    pub fn n_shots(&self) -> usize {
        self.n_shots
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Rows = hypotheses, columns = pooled outcomes 0..=m.
    pub fn confusion(&self) -> &[Vec<u64>; 2] {
        &self.confusion
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn sigma(&self) -> NoiseWidth {
        self.sigma
    }

    pub fn strategy(&self) -> &PnrStrategy {
        &self.strat
    }

    pub fn imperfections(&self) -> &Imperfections {
        &self.imp
    }
}

fn simulate_chunk(
    alphabet: &Alphabet,
    sigma: NoiseWidth,
    strat: &PnrStrategy,
    imp: &Imperfections,
    seed: u64,
    stream: u64,
    shots: usize,
    forced: Option<usize>,
) -> [Vec<u64>; 2] {
    let m = strat.resolution();
    let mut confusion = [vec![0u64; m + 1], vec![0u64; m + 1]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let signals = [alphabet.a1(), alphabet.a2()];
    for _ in 0..shots {
        let hyp = match forced {
            Some(h) => h,
            None => usize::from(rng.gen_bool(0.5)),
        };
        let z: f64 = rng.sample(StandardNormal);
        let phi = sigma.sigma() * z;
        let lambda = displaced_mean_count(signals[hyp], strat.beta(), phi, imp);
        let count = sample_poisson(lambda, &mut rng).min(m);
        confusion[hyp][count] += 1;
    }
    confusion
}

/// Full-control simulation entry point: `parallel` dispatches RNG chunks to
/// the worker pool (bit-identical to the sequential schedule), and
/// `forced_hypothesis` pins every shot to one sender symbol instead of the
/// uniform prior.
pub fn simulate_shots_with(
    alphabet: &Alphabet,
    sigma: NoiseWidth,
    strat: &PnrStrategy,
    imp: &Imperfections,
    n_shots: usize,
    seed: u64,
    parallel: bool,
    forced_hypothesis: Option<usize>,
) -> Result<ShotBatch> {
    if n_shots == 0 {
        return Err(Error::InvalidParameter("n_shots must be ≥ 1".into()));
    }
    if let Some(h) = forced_hypothesis {
        if h > 1 {
            return Err(Error::InvalidParameter(format!(
                "forced hypothesis must be 0 or 1, got {h}"
            )));
        }
    }
    let chunks: Vec<(u64, usize)> = (0..n_shots)
        .step_by(CHUNK_SHOTS)
        .enumerate()
        .map(|(idx, start)| (idx as u64, CHUNK_SHOTS.min(n_shots - start)))
        .collect();
    let partials = map_maybe_parallel(chunks, parallel, |(stream, shots)| {
        simulate_chunk(alphabet, sigma, strat, imp, seed, stream, shots, forced_hypothesis)
    });
    let m = strat.resolution();
    let mut confusion = [vec![0u64; m + 1], vec![0u64; m + 1]];
    for partial in partials {
        for (row, part) in confusion.iter_mut().zip(&partial) {
            for (cell, add) in row.iter_mut().zip(part) {
                *cell += add;
            }
        }
    }
    Ok(ShotBatch {
        alphabet: *alphabet,
        sigma,
        strat: *strat,
        imp: *imp,
        n_shots,
        seed,
        confusion,
    })
}

/// Simulates `n_shots` independent transmissions: uniform hypothesis, phase
/// φ ~ N(0, σ²), photon count ~ Poisson(λ(φ)) pooled at the resolution m.
/// Fully reproducible from `seed`.
pub fn simulate_shots(
    alphabet: &Alphabet,
    sigma: NoiseWidth,
    strat: &PnrStrategy,
    imp: &Imperfections,
    n_shots: usize,
    seed: u64,
) -> Result<ShotBatch> {
    simulate_shots_with(alphabet, sigma, strat, imp, n_shots, seed, true, None)
}

/// Point estimates from one simulated batch.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EmpiricalMetrics {
    /// Empirical error probability under the analytic MAP rule.
    pub pe_hat: f64,
    /// Binomial standard error of `pe_hat`.
    pub pe_se: f64,
    /// Plug-in mutual information of the normalized confusion matrix, bits.
    pub mi_hat: f64,
}

/// Estimates error probability and mutual information from a batch. Decoding
/// uses the analytic decision map (the experiment's precomputed rule), not a
/// rule refit from the sampled data.
pub fn empirical_metrics(batch: &ShotBatch) -> Result<EmpiricalMetrics> {
    let totals: Vec<u64> = batch.confusion.iter().map(|row| row.iter().sum()).collect();
    for (hyp, &total) in totals.iter().enumerate() {
        if total == 0 {
            return Err(Error::EmptyHypothesis(hyp));
        }
    }
    let cond = [
        pnr_outcome_probs(batch.alphabet.a1(), batch.sigma, &batch.strat, &batch.imp)?,
        pnr_outcome_probs(batch.alphabet.a2(), batch.sigma, &batch.strat, &batch.imp)?,
    ];
    let decision = metrics::map_decision([&cond[0], &cond[1]], [0.5, 0.5]);
    let n = batch.n_shots as f64;
    let correct: u64 = decision
        .iter()
        .enumerate()
        .map(|(outcome, &winner)| batch.confusion[winner][outcome])
        .sum();
    let pe_hat = 1.0 - correct as f64 / n;
    let pe_se = (pe_hat * (1.0 - pe_hat) / n).sqrt();
    // Plug-in MI: empirical priors from the row sums, empirical conditionals
    // from the normalized rows.
    let priors = [totals[0] as f64 / n, totals[1] as f64 / n];
    let pooled: Vec<f64> = (0..batch.confusion[0].len())
        .map(|k| (batch.confusion[0][k] + batch.confusion[1][k]) as f64 / n)
        .collect();
    let mut mi_hat = 0.0;
    for (hyp, row) in batch.confusion.iter().enumerate() {
        for (k, &count) in row.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let joint = count as f64 / n;
            mi_hat += joint * (joint / (priors[hyp] * pooled[k])).log2();
        }
    }
    Ok(EmpiricalMetrics {
        pe_hat,
        pe_se,
        mi_hat: mi_hat.clamp(0.0, 1.0),
    })
}
