//! Phase-noise calibration pipeline: generate piecewise-constant Gaussian
//! phase noise, estimate the per-bin phase from mean photon counts at a
//! quadrature operating point, fit the Gaussian width σ, and fit the
//! voltage-to-σ line used to dial in a target noise level.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::fock::NoiseWidth;
use crate::mc_sim::sample_poisson;
use crate::optimizer::map_maybe_parallel;
use crate::photostats::{displaced_mean_count, Imperfections};

/// Pulses per calibration bin (the bin mean is taken over these).
pub const DEFAULT_SHOTS_PER_BIN: usize = 500;
/// Laser pulse period in seconds; 500 pulses give the ≈ 43 ms bin.
pub const DEFAULT_PULSE_PERIOD: f64 = 86e-6;
/// Bins entering a width fit by default.
pub const DEFAULT_CALIBRATION_BINS: usize = 5000;

const MIN_FIT_BINS: usize = 100;
const ASIN_CLAMP_TOL: f64 = 1e-9;

/// Which quadrature operating point a bin was measured at: `Plus` is the
/// relative phase π/2 (mean count rises with φ), `Minus` is 3π/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    /// Interferometer phase offset the signal acquires at this operating
    /// point, to be added to the instantaneous noise phase.
    fn operating_phase(self) -> f64 {
        match self {
            Branch::Plus => std::f64::consts::FRAC_PI_2,
            Branch::Minus => 1.5 * std::f64::consts::PI,
        }
    }

    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// A piecewise-constant phase waveform: one phase per bin, held for
/// `shots_per_bin` consecutive pulses.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseTrace {
    bin_phases: Vec<f64>,
    shots_per_bin: usize,
    pulse_period: f64,
}

impl PhaseTrace {
    pub fn with_sampling(
        bin_phases: Vec<f64>,
        shots_per_bin: usize,
        pulse_period: f64,
    ) -> Result<Self> {
        if shots_per_bin == 0 {
            return Err(Error::InvalidParameter(
                "shots_per_bin must be ≥ 1".into(),
            ));
        }
        if !(pulse_period > 0.0 && pulse_period.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "pulse period must be positive, got {pulse_period}"
            )));
        }
        Ok(PhaseTrace {
            bin_phases,
            shots_per_bin,
            pulse_period,
        })
    }

    pub fn bin_phases(&self) -> &[f64] {
        &self.bin_phases
    }

    pub fn shots_per_bin(&self) -> usize {
        self.shots_per_bin
    }

    pub fn pulse_period(&self) -> f64 {
        self.pulse_period
    }

    /// Duration one bin's phase is held, in seconds.
    pub fn bin_duration(&self) -> f64 {
        self.shots_per_bin as f64 * self.pulse_period
    }
}

/// Draws `n_bins` i.i.d. phases from N(0, σ²) at the default sampling
/// parameters; fully reproducible from `seed`.
pub fn generate_piecewise_phase(sigma: NoiseWidth, n_bins: usize, seed: u64) -> Result<PhaseTrace> {
    if n_bins == 0 {
        return Err(Error::InvalidParameter("n_bins must be ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bin_phases = (0..n_bins)
        .map(|_| sigma.sigma() * rng.sample::<f64, _>(StandardNormal))
        .collect();
    PhaseTrace::with_sampling(bin_phases, DEFAULT_SHOTS_PER_BIN, DEFAULT_PULSE_PERIOD)
}

/// Inverts the operating-point relation ⟨n⟩± = 2ηn̄(1 ± ξ sin φ̂) for the
/// bin phase. Arguments beyond the arcsin domain by more than a rounding
/// tolerance are an error; within it they clamp to the domain edge.
pub fn estimate_bin_phase(
    mean_count: f64,
    nbar: f64,
    eta: f64,
    xi: f64,
    branch: Branch,
) -> Result<f64> {
    let argument = branch.sign() * (mean_count / (2.0 * eta * nbar) - 1.0) / xi;
    if argument.abs() > 1.0 + ASIN_CLAMP_TOL {
        return Err(Error::PhaseOutOfRange { argument });
    }
    Ok(argument.clamp(-1.0, 1.0).asin())
}

/// [`estimate_bin_phase`] for bulk trace processing: a bin whose Poisson
/// noise pushes the inversion past the arcsin domain carries no information
/// beyond "at least a quarter turn", so it saturates to ±π/2 instead of
/// aborting the trace. Rare but expected for wide injected noise (a 4σ phase
/// excursion at σ ≈ 0.4 already reaches the domain edge).
pub fn estimate_bin_phase_saturating(
    mean_count: f64,
    nbar: f64,
    eta: f64,
    xi: f64,
    branch: Branch,
) -> f64 {
    match estimate_bin_phase(mean_count, nbar, eta, xi, branch) {
        Ok(phi) => phi,
        Err(Error::PhaseOutOfRange { argument }) => {
            std::f64::consts::FRAC_PI_2 * argument.signum()
        }
        Err(_) => unreachable!("estimate_bin_phase only reports out-of-range arguments"),
    }
}

/// Simulates the measured mean photon count of every bin in `trace` at the
/// given operating point: `shots_per_bin` Poisson draws per bin at the rate
/// set by the bin's phase. Bins use independent RNG streams, so the result
/// is identical under any worker scheduling.
pub fn simulate_bin_means(
    trace: &PhaseTrace,
    nbar: f64,
    imp: &Imperfections,
    branch: Branch,
    seed: u64,
) -> Vec<f64> {
    let amplitude = nbar.sqrt();
    let shots = trace.shots_per_bin;
    let indexed: Vec<(u64, f64)> = trace
        .bin_phases
        .iter()
        .enumerate()
        .map(|(i, &phi)| (i as u64, phi))
        .collect();
    map_maybe_parallel(indexed, true, move |(stream, phi)| {
        let lambda =
            displaced_mean_count(amplitude, amplitude, branch.operating_phase() + phi, imp);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let total: usize = (0..shots).map(|_| sample_poisson(lambda, &mut rng)).sum();
        total as f64 / shots as f64
    })
}

/// Per-bin phase standard error from Poisson error propagation through the
/// operating-point relation, evaluated at φ = 0: the resolution floor of the
/// calibration estimate.
pub fn phase_noise_floor(nbar: f64, imp: &Imperfections, shots_per_bin: usize) -> f64 {
    let lambda = 2.0 * imp.eta() * nbar + imp.nu();
    let count_se = (lambda / shots_per_bin as f64).sqrt();
    count_se / (2.0 * imp.eta() * nbar * imp.xi())
}

/// Gaussian width fit to a sample of estimated phases.
#[derive(Debug, Clone, Serialize)]
pub struct SigmaFit {
    /// Maximum-likelihood mean of the sample.
    pub mean: f64,
    /// Maximum-likelihood standard deviation — the calibrated σ.
    pub sigma_hat: f64,
    /// Pearson χ² statistic of the equal-probability histogram test.
    pub chi_square: f64,
    /// Goodness-of-fit p-value.
    pub p_value: f64,
    /// Whether the sample is consistent with a Gaussian at the 5% level.
    pub gaussian_ok: bool,
}

/// Fits a Gaussian to estimated bin phases by maximum likelihood and runs an
/// equal-probability-bin χ² goodness-of-fit test at the 5% level.
pub fn fit_sigma(phases: &[f64]) -> Result<SigmaFit> {
    if phases.len() < MIN_FIT_BINS {
        return Err(Error::InsufficientBins {
            got: phases.len(),
            need: MIN_FIT_BINS,
        });
    }
    let n = phases.len() as f64;
    let mean = phases.iter().sum::<f64>() / n;
    let variance = phases.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / n;
    let sigma_hat = variance.sqrt();
    if sigma_hat <= f64::EPSILON * (1.0 + mean.abs()) {
        // A degenerate (constant) sample carries no histogram to test.
        return Ok(SigmaFit {
            mean,
            sigma_hat,
            chi_square: 0.0,
            p_value: 1.0,
            gaussian_ok: true,
        });
    }
    // Equal-probability histogram bins under the fitted Gaussian make the
    // expected count uniform (n/k) and the test insensitive to binning.
    let k = (phases.len() / 50).clamp(8, 32);
    let fitted = Normal::new(mean, sigma_hat)
        .expect("positive width checked above");
    let edges: Vec<f64> = (1..k)
        .map(|i| fitted.inverse_cdf(i as f64 / k as f64))
        .collect();
    let mut observed = vec![0usize; k];
    for &phase in phases {
        observed[edges.partition_point(|&e| e < phase)] += 1;
    }
    let expected = n / k as f64;
    let chi_square: f64 = observed
        .iter()
        .map(|&o| {
            let d = o as f64 - expected;
            d * d / expected
        })
        .sum();
    // Two parameters were estimated from the same sample.
    let dof = (k - 3) as f64;
    let p_value = 1.0 - ChiSquared::new(dof).expect("k ≥ 8").cdf(chi_square);
    Ok(SigmaFit {
        mean,
        sigma_hat,
        chi_square,
        p_value,
        gaussian_ok: p_value >= 0.05,
    })
}

/// Least-squares line through (drive voltage, fitted σ) points.
#[derive(Debug, Clone, Serialize)]
pub struct VoltageLine {
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
}

/// Fits σ̂(V) = slope·V + intercept; inverting it converts a target σ into a
/// drive amplitude. Fewer than two distinct voltages cannot fix a line.
pub fn fit_voltage_line(pairs: &[(f64, f64)]) -> Result<VoltageLine> {
    let voltages: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let sigmas: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let line = linear_fit(&voltages, &sigmas).ok_or(Error::DegenerateVoltages)?;
    let residuals = pairs
        .iter()
        .map(|&(v, s)| s - (line.slope * v + line.intercept))
        .collect();
    Ok(VoltageLine {
        slope: line.slope,
        intercept: line.intercept,
        residuals,
    })
}

/// End-to-end synthetic calibration: generate a trace at the injected σ,
/// simulate its bin means, estimate every bin phase, and fit the width.
pub fn calibrate_synthetic(
    sigma: NoiseWidth,
    nbar: f64,
    imp: &Imperfections,
    branch: Branch,
    n_bins: usize,
    seed: u64,
) -> Result<SigmaFit> {
    let trace = generate_piecewise_phase(sigma, n_bins, seed)?;
    let means = simulate_bin_means(&trace, nbar, imp, branch, seed.wrapping_add(1));
    let phases: Vec<f64> = means
        .iter()
        .map(|&m| estimate_bin_phase_saturating(m, nbar, imp.eta(), imp.xi(), branch))
        .collect();
    fit_sigma(&phases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn width(sigma: f64) -> NoiseWidth {
        NoiseWidth::new(sigma).unwrap()
    }

    #[test]
    fn zero_width_trace_is_silent() {
        let trace = generate_piecewise_phase(width(0.0), 64, 1).unwrap();
        assert!(trace.bin_phases().iter().all(|&p| p == 0.0));
        assert_abs_diff_eq!(trace.bin_duration(), 0.043, epsilon = 1e-12);
    }

    #[test]
    fn generated_trace_has_the_requested_width() {
        let trace = generate_piecewise_phase(width(0.215), 10_000, 2).unwrap();
        let n = trace.bin_phases().len() as f64;
        let mean = trace.bin_phases().iter().sum::<f64>() / n;
        let sd =
            (trace.bin_phases().iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / n).sqrt();
        assert!((sd - 0.215).abs() < 0.03 * 0.215, "sample sd {sd}");
    }

    #[test]
    fn same_seed_reproduces_the_trace() {
        let a = generate_piecewise_phase(width(0.3), 100, 9).unwrap();
        let b = generate_piecewise_phase(width(0.3), 100, 9).unwrap();
        assert_eq!(a.bin_phases(), b.bin_phases());
    }

    #[test]
    fn balanced_count_estimates_zero_phase() {
        let (nbar, eta, xi) = (2.0, 0.72, 0.998);
        let phi = estimate_bin_phase(2.0 * eta * nbar, nbar, eta, xi, Branch::Plus).unwrap();
        assert_abs_diff_eq!(phi, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn extremal_count_estimates_a_quarter_turn() {
        let (nbar, eta, xi) = (2.0, 0.72, 0.998);
        let mean = 2.0 * eta * nbar * (1.0 + xi);
        let phi = estimate_bin_phase(mean, nbar, eta, xi, Branch::Plus).unwrap();
        // asin is infinitely steep at the domain edge: one ulp of rounding in
        // the inversion argument moves the angle by ~√ulp.
        assert_abs_diff_eq!(phi, std::f64::consts::FRAC_PI_2, epsilon = 1e-6);
    }

    #[test]
    fn out_of_range_inversion_is_rejected_and_rounding_is_clamped() {
        let (nbar, eta, xi) = (1.0, 1.0, 1.0);
        let just_over = 2.0 * eta * nbar * (1.0 + xi) + 1e-6;
        assert!(matches!(
            estimate_bin_phase(just_over, nbar, eta, xi, Branch::Plus),
            Err(Error::PhaseOutOfRange { .. })
        ));
        let within_tol = 2.0 * eta * nbar * (1.0 + xi * (1.0 + 1e-12));
        let phi = estimate_bin_phase(within_tol, nbar, eta, xi, Branch::Plus).unwrap();
        assert_abs_diff_eq!(phi, std::f64::consts::FRAC_PI_2, epsilon = 1e-9);
    }

    #[test]
    fn single_bin_estimate_tracks_the_true_phase() {
        let imp = Imperfections::experimental();
        let nbar = 2.0;
        let trace = PhaseTrace::with_sampling(vec![0.1], 500, DEFAULT_PULSE_PERIOD).unwrap();
        let means = simulate_bin_means(&trace, nbar, &imp, Branch::Plus, 21);
        let phi = estimate_bin_phase(means[0], nbar, imp.eta(), imp.xi(), Branch::Plus).unwrap();
        // Poisson error propagation at the operating point.
        let lambda = 2.0 * imp.eta() * nbar * (1.0 + imp.xi() * 0.1f64.sin()) + imp.nu();
        let se = (lambda / 500.0).sqrt() / (2.0 * imp.eta() * nbar * imp.xi() * 0.1f64.cos());
        assert!((phi - 0.1).abs() < 3.0 * se, "phi {phi}, se {se}");
    }

    #[test]
    fn end_to_end_recovers_the_injected_width() {
        let imp = Imperfections::experimental();
        let fit = calibrate_synthetic(width(0.215), 2.0, &imp, Branch::Plus, 5000, 17).unwrap();
        assert!(
            (fit.sigma_hat - 0.215).abs() < 0.05 * 0.215,
            "σ̂ = {}",
            fit.sigma_hat
        );
        assert!(fit.gaussian_ok, "p = {}", fit.p_value);
    }

    #[test]
    fn round_trip_recovers_small_and_large_widths() {
        let imp = Imperfections::experimental();
        for &sigma in &[0.1, 0.215, 0.4] {
            let fit =
                calibrate_synthetic(width(sigma), 2.0, &imp, Branch::Plus, 10_000, 33).unwrap();
            assert!(
                (fit.sigma_hat - sigma).abs() < 0.05 * sigma,
                "injected {sigma}, recovered {}",
                fit.sigma_hat
            );
        }
    }

    #[test]
    fn quiet_input_sits_at_the_shot_noise_floor() {
        let imp = Imperfections::experimental();
        let fit = calibrate_synthetic(width(0.0), 2.0, &imp, Branch::Plus, 5000, 3).unwrap();
        let floor = phase_noise_floor(2.0, &imp, DEFAULT_SHOTS_PER_BIN);
        assert!(
            fit.sigma_hat < 1.05 * floor,
            "σ̂ = {} above floor {}",
            fit.sigma_hat,
            floor
        );
    }

    #[test]
    fn non_gaussian_phases_raise_the_goodness_flag()  {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let phases: Vec<f64> = (0..5000).map(|_| rng.gen_range(-0.4..0.4)).collect();
        let fit = fit_sigma(&phases).unwrap();
        assert!(!fit.gaussian_ok, "uniform sample passed: p = {}", fit.p_value);
    }

    #[test]
    fn width_fit_demands_enough_bins() {
        assert!(matches!(
            fit_sigma(&vec![0.0; 99]),
            Err(Error::InsufficientBins { got: 99, need: 100 })
        ));
    }

    #[test]
    fn pooled_operating_points_agree_on_the_width() {
        let imp = Imperfections::experimental();
        let sigma = width(0.215);
        let expect = (0.215f64 * 0.215
            + phase_noise_floor(2.0, &imp, DEFAULT_SHOTS_PER_BIN).powi(2))
        .sqrt();
        let trace = generate_piecewise_phase(sigma, 4000, 55).unwrap();
        let mut pooled = Vec::new();
        for (branch, seed) in [(Branch::Plus, 56), (Branch::Minus, 57)] {
            let means = simulate_bin_means(&trace, 2.0, &imp, branch, seed);
            for mean in means {
                pooled.push(estimate_bin_phase_saturating(
                    mean,
                    2.0,
                    imp.eta(),
                    imp.xi(),
                    branch,
                ));
            }
        }
        let fit = fit_sigma(&pooled).unwrap();
        assert!(
            (fit.sigma_hat - expect).abs() < 0.05 * expect,
            "pooled σ̂ = {}, expected ≈ {expect}",
            fit.sigma_hat
        );
    }

    #[test]
    fn exact_linear_voltage_map_is_recovered() {
        let pairs: Vec<(f64, f64)> = (1..=8).map(|i| (i as f64, 0.215 * i as f64)).collect();
        let line = fit_voltage_line(&pairs).unwrap();
        assert_abs_diff_eq!(line.slope, 0.215, epsilon = 1e-12);
        assert_abs_diff_eq!(line.intercept, 0.0, epsilon = 1e-12);
        assert!(line.residuals.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn calibrated_voltage_scan_recovers_the_injected_slope() {
        let imp = Imperfections::experimental();
        let true_slope = 0.215;
        let pairs: Vec<(f64, f64)> = (1..=8)
            .map(|i| {
                let v = 0.25 * i as f64;
                let fit =
                    calibrate_synthetic(width(true_slope * v), 2.0, &imp, Branch::Plus, 5000, i)
                        .unwrap();
                (v, fit.sigma_hat)
            })
            .collect();
        let line = fit_voltage_line(&pairs).unwrap();
        assert!(
            (line.slope - true_slope).abs() < 0.03 * true_slope,
            "slope {}",
            line.slope
        );
    }

    #[test]
    fn repeated_voltages_cannot_fix_a_line() {
        assert!(matches!(
            fit_voltage_line(&[(1.0, 0.2), (1.0, 0.21)]),
            Err(Error::DegenerateVoltages)
        ));
        assert!(matches!(
            fit_voltage_line(&[(1.0, 0.2)]),
            Err(Error::DegenerateVoltages)
        ));
    }
}
