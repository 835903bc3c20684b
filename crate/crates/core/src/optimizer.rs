//! Joint optimization of the transmit alphabet and the receiver displacement
//! for a given (n̄, σ, m, imperfections): multi-start Nelder–Mead over the
//! (θ, β) plane, σ-sweeps with warm starts, and jump detection on the global
//! optimum's alphabet.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::NoiseWidth;
use crate::metrics::{self, Alphabet, Objective};
use crate::photostats::{Imperfections, PnrStrategy};

/// Runs `f` over `items`, on the worker pool when the `parallel` feature is
/// enabled and `parallel` is set, sequentially otherwise. Output order always
/// matches input order, so both modes produce identical results.
pub(crate) fn map_maybe_parallel<T, U, F>(items: Vec<T>, parallel: bool, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallel {
            use rayon::prelude::*;
            return items.into_par_iter().map(f).collect();
        }
    }
    let _ = parallel;
    items.into_iter().map(f).collect()
}

/// Golden-section minimization of a unimodal scalar function on `[lo, hi]`.
pub(crate) fn golden_section_min<F>(f: &mut F, mut lo: f64, mut hi: f64, iters: usize) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_895;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Nelder–Mead minimization. Converges when the simplex diameter drops below
/// `tol`; exceeding `max_iters` is an error rather than a silent acceptance.
fn nelder_mead<F>(
    f: &F,
    start: &[f64],
    steps: &[f64],
    max_iters: usize,
    tol: f64,
) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let n = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), f(start)?));
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += steps[i];
        let v = f(&p)?;
        simplex.push((p, v));
    }
    let mut diameter = f64::INFINITY;
    for _ in 0..max_iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        diameter = 0.0;
        for i in 0..n {
            for j in i + 1..=n {
                diameter = diameter.max(distance(&simplex[i].0, &simplex[j].0));
            }
        }
        if diameter < tol {
            let (p, v) = simplex.swap_remove(0);
            return Ok((p, v));
        }
        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|(p, _)| p[d]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let at = |coef: f64| -> Vec<f64> {
            (0..n)
                .map(|d| centroid[d] + coef * (centroid[d] - worst.0[d]))
                .collect()
        };
        let reflected = at(1.0);
        let f_reflected = f(&reflected)?;
        if f_reflected < simplex[0].1 {
            let expanded = at(2.0);
            let f_expanded = f(&expanded)?;
            simplex[n] = if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            };
            continue;
        }
        if f_reflected < simplex[n - 1].1 {
            simplex[n] = (reflected, f_reflected);
            continue;
        }
        let contracted = if f_reflected < worst.1 {
            at(0.5)
        } else {
            at(-0.5)
        };
        let f_contracted = f(&contracted)?;
        if f_contracted < worst.1.min(f_reflected) {
            simplex[n] = (contracted, f_contracted);
            continue;
        }
        // Shrink toward the best vertex.
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            for d in 0..n {
                vertex.0[d] = best[d] + 0.5 * (vertex.0[d] - best[d]);
            }
            vertex.1 = f(&vertex.0)?;
        }
    }
    Err(Error::OptimizerNotConverged {
        iterations: max_iters,
        diameter,
    })
}

/// Multi-start search configuration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SearchSettings {
    /// Start-grid resolution along θ.
    pub theta_starts: usize,
    /// Start-grid resolution along β.
    pub beta_starts: usize,
    /// Optional seed for jittering the start grid (reproducibility probe).
    pub jitter_seed: Option<u64>,
    /// Dispatch independent starts to the worker pool.
    pub parallel: bool,
    /// Nelder–Mead iteration cap per start.
    pub max_iters: usize,
    /// Simplex-diameter convergence tolerance.
    pub diameter_tol: f64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings {
            theta_starts: 12,
            beta_starts: 12,
            jitter_seed: None,
            parallel: true,
            max_iters: 500,
            diameter_tol: 1e-8,
        }
    }
}

/// One converged optimum of the joint (alphabet, displacement) search.
/// `value` is the natural objective (error probability or bits).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Candidate {
    pub theta: f64,
    pub beta: f64,
    pub a1: f64,
    pub a2: f64,
    pub value: f64,
}

/// Outcome of one multi-start optimization: the global best and every
/// distinct local optimum found (best first).
#[derive(Debug, Clone, Serialize)]
pub struct OptimizationResult {
    pub best: Candidate,
    pub local_optima: Vec<Candidate>,
    pub objective: Objective,
}

/// Folds (θ, β) into the canonical domain θ ∈ [−π/4, π/4] using the exact
/// symmetries of the objective: a π-shift of θ flips both amplitudes (undone
/// by flipping β), and mirroring about π/4 swaps the hypotheses (same error
/// and information at equal priors, with β flipped).
fn canonicalize(theta: f64, beta: f64) -> (f64, f64) {
    let wrapped = theta.rem_euclid(std::f64::consts::PI);
    let shifts = ((theta - wrapped) / std::f64::consts::PI).round() as i64;
    let mut t = wrapped;
    let mut b = if shifts % 2 == 0 { beta } else { -beta };
    if t > 3.0 * std::f64::consts::FRAC_PI_4 {
        t -= std::f64::consts::PI;
        b = -b;
    } else if t > std::f64::consts::FRAC_PI_4 {
        t = std::f64::consts::FRAC_PI_2 - t;
        b = -b;
    }
    (t, b)
}

/// Displacement start range: generously covers nulling either hypothesis
/// plus the dark/bright asymmetry at the photon numbers of interest.
fn beta_reach(nbar: f64) -> f64 {
    2.0 * (2.0 * nbar + 1.0).sqrt()
}

fn objective_fn<'a>(
    kind: Objective,
    nbar: f64,
    sigma: NoiseWidth,
    m: usize,
    imp: &'a Imperfections,
) -> impl Fn(&[f64]) -> Result<f64> + Sync + 'a {
    move |x: &[f64]| {
        let alphabet = Alphabet::from_theta(x[0], nbar)?;
        let strat = PnrStrategy::new(x[1], m)?;
        match kind {
            Objective::Error => metrics::error_probability(&alphabet, sigma, &strat, imp),
            Objective::MutualInformation => {
                Ok(-metrics::mutual_information(&alphabet, sigma, &strat, imp)?)
            }
        }
    }
}

fn run_multistart(
    kind: Objective,
    settings: &SearchSettings,
    nbar: f64,
    sigma: NoiseWidth,
    m: usize,
    imp: &Imperfections,
    warm: &[Candidate],
) -> Result<OptimizationResult> {
    if !(nbar > 0.0 && nbar.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "optimization needs n̄ > 0, got {nbar}"
        )));
    }
    let f = objective_fn(kind, nbar, sigma, m, imp);
    let reach = beta_reach(nbar);
    let theta_span = std::f64::consts::FRAC_PI_2;
    let mut starts: Vec<[f64; 2]> = Vec::new();
    for i in 0..settings.theta_starts {
        // The start grid spans [0, π/2] — twice the canonical domain — so the
        // antipodal point θ = π/4 is interior rather than a search boundary.
        let theta = theta_span * i as f64 / (settings.theta_starts - 1).max(1) as f64;
        for j in 0..settings.beta_starts {
            let beta = -reach + 2.0 * reach * j as f64 / (settings.beta_starts - 1).max(1) as f64;
            starts.push([theta, beta]);
        }
    }
    if let Some(seed) = settings.jitter_seed {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let dt = 0.25 * theta_span / settings.theta_starts as f64;
        let db = 0.5 * reach / settings.beta_starts as f64;
        for s in &mut starts {
            s[0] += rng.gen_range(-dt..=dt);
            s[1] += rng.gen_range(-db..=db);
        }
    }
    starts.extend(warm.iter().map(|c| [c.theta, c.beta]));
    let steps = [
        0.5 * theta_span / settings.theta_starts as f64,
        reach / settings.beta_starts as f64,
    ];
    let runs = map_maybe_parallel(starts, settings.parallel, |s| {
        nelder_mead(&f, &s, &steps, settings.max_iters, settings.diameter_tol)
    });
    let mut converged: Vec<(f64, f64, f64)> = Vec::with_capacity(runs.len());
    for run in runs {
        let (point, minimized) = run?;
        let (theta, beta) = canonicalize(point[0], point[1]);
        converged.push((theta, beta, minimized));
    }
    converged.sort_by(|a, b| a.2.total_cmp(&b.2));
    // Deduplicate converged optima within 1e-4 in canonical (θ, β); keeping
    // the first appearance keeps the best value per cluster.
    let mut kept: Vec<(f64, f64, f64)> = Vec::new();
    for c in converged {
        if kept
            .iter()
            .all(|k| distance(&[k.0, k.1], &[c.0, c.1]) > 1e-4)
        {
            kept.push(c);
        }
    }
    let to_candidate = |&(theta, beta, minimized): &(f64, f64, f64)| -> Result<Candidate> {
        let alphabet = Alphabet::from_theta(theta, nbar)?;
        Ok(Candidate {
            theta,
            beta,
            a1: alphabet.a1(),
            a2: alphabet.a2(),
            value: match kind {
                Objective::Error => minimized,
                Objective::MutualInformation => -minimized,
            },
        })
    };
    let local_optima: Vec<Candidate> = kept
        .iter()
        .map(to_candidate)
        .collect::<Result<_>>()?;
    Ok(OptimizationResult {
        best: local_optima[0],
        local_optima,
        objective: kind,
    })
}

/// Jointly optimizes alphabet and displacement to minimize the error
/// probability at one (n̄, σ, m) point with default search settings.
pub fn optimize_discrimination(
    nbar: f64,
    sigma: NoiseWidth,
    m: usize,
    imp: &Imperfections,
) -> Result<OptimizationResult> {
    run_multistart(
        Objective::Error,
        &SearchSettings::default(),
        nbar,
        sigma,
        m,
        imp,
        &[],
    )
}

/// Jointly optimizes alphabet and displacement to maximize the soft-decision
/// mutual information at one (n̄, σ, m) point with default search settings.
pub fn optimize_mutual_information(
    nbar: f64,
    sigma: NoiseWidth,
    m: usize,
    imp: &Imperfections,
) -> Result<OptimizationResult> {
    run_multistart(
        Objective::MutualInformation,
        &SearchSettings::default(),
        nbar,
        sigma,
        m,
        imp,
        &[],
    )
}

/// [`optimize_discrimination`]/[`optimize_mutual_information`] with explicit
/// settings and optional warm-start candidates.
pub fn optimize_with(
    objective: Objective,
    settings: &SearchSettings,
    nbar: f64,
    sigma: NoiseWidth,
    m: usize,
    imp: &Imperfections,
    warm: &[Candidate],
) -> Result<OptimizationResult> {
    run_multistart(objective, settings, nbar, sigma, m, imp, warm)
}

/// Optimizes only the displacement for a fixed alphabet; returns (β, value)
/// with `value` the natural objective.
pub fn optimize_displacement(
    alphabet: &Alphabet,
    sigma: NoiseWidth,
    m: usize,
    imp: &Imperfections,
    objective: Objective,
) -> Result<(f64, f64)> {
    let f = |x: &[f64]| -> Result<f64> {
        let strat = PnrStrategy::new(x[0], m)?;
        match objective {
            Objective::Error => metrics::error_probability(alphabet, sigma, &strat, imp),
            Objective::MutualInformation => {
                Ok(-metrics::mutual_information(alphabet, sigma, &strat, imp)?)
            }
        }
    };
    let reach = beta_reach(alphabet.nbar());
    let n_starts = 12;
    let step = [reach / n_starts as f64];
    let mut best: Option<(f64, f64)> = None;
    for j in 0..n_starts {
        let beta = -reach + 2.0 * reach * j as f64 / (n_starts - 1) as f64;
        let (point, minimized) = nelder_mead(&f, &[beta], &step, 500, 1e-8)?;
        if best.map_or(true, |(_, v)| minimized < v) {
            best = Some((point[0], minimized));
        }
    }
    let (beta, minimized) = best.expect("at least one start");
    Ok((
        beta,
        match objective {
            Objective::Error => minimized,
            Objective::MutualInformation => -minimized,
        },
    ))
}

/// A confirmed discontinuity of the global optimum's alphabet: a bracket of
/// width ≤ [`JUMP_REFINE_WIDTH`] inside which the optimal |α₁|² moves by more
/// than the jump threshold.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct JumpEvent {
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub a1sq_before: f64,
    pub a1sq_after: f64,
}

/// Per-σ optimization results along a noise sweep, with detected jumps.
#[derive(Debug, Clone, Serialize)]
pub struct SweepCurve {
    pub sigmas: Vec<f64>,
    pub results: Vec<OptimizationResult>,
    pub jump_events: Vec<JumpEvent>,
}

/// How a σ-sweep schedules its per-point optimizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Sequential over σ, seeding each point with the previous point's local
    /// optima (default; required for faithful jump localization).
    WarmStarted,
    /// Independent cold starts dispatched to the worker pool.
    ColdStart,
}

/// Jump threshold on |Δa₁²| between adjacent grid points: an order of
/// magnitude above continuous-drift steps at the default grid spacing 0.02.
fn jump_threshold(nbar: f64) -> f64 {
    0.1 * nbar
}

/// Width below which a candidate jump interval counts as resolved.
const JUMP_REFINE_WIDTH: f64 = 1e-3;

/// Candidate jump steps: grid intervals where |Δa₁²| crosses the threshold.
/// Each carries the index of its left grid point for refinement.
fn candidate_jumps(results: &[OptimizationResult], nbar: f64) -> Vec<usize> {
    (1..results.len())
        .filter(|&i| {
            let before = results[i - 1].best.a1 * results[i - 1].best.a1;
            let after = results[i].best.a1 * results[i].best.a1;
            (after - before).abs() > jump_threshold(nbar)
        })
        .map(|i| i - 1)
        .collect()
}

/// Bisects a candidate jump interval until it is narrower than
/// [`JUMP_REFINE_WIDTH`], re-optimizing at each midpoint (warm-started from
/// both edges so neither basin is lost). A genuine basin exchange keeps its
/// full |Δa₁²| gap across the shrinking bracket; continuous drift — however
/// steep at the original grid spacing — collapses with the interval and is
/// discarded.
#[allow(clippy::too_many_arguments)]
fn refine_jump(
    objective: Objective,
    settings: &SearchSettings,
    nbar: f64,
    m: usize,
    imp: &Imperfections,
    mut lo: f64,
    mut hi: f64,
    lo_result: &OptimizationResult,
    hi_result: &OptimizationResult,
) -> Result<Option<JumpEvent>> {
    let mut lo_best = lo_result.best;
    let mut hi_best = hi_result.best;
    let mut lo_locals: Vec<Candidate> = lo_result.local_optima.iter().copied().take(10).collect();
    let mut hi_locals: Vec<Candidate> = hi_result.local_optima.iter().copied().take(10).collect();
    while hi - lo > JUMP_REFINE_WIDTH {
        let mid = 0.5 * (lo + hi);
        let warm: Vec<Candidate> = lo_locals.iter().chain(&hi_locals).copied().collect();
        let result = run_multistart(objective, settings, nbar, NoiseWidth::new(mid)?, m, imp, &warm)?;
        let mid_best = result.best;
        let mid_a1sq = mid_best.a1 * mid_best.a1;
        let to_lo = (mid_a1sq - lo_best.a1 * lo_best.a1).abs();
        let to_hi = (mid_a1sq - hi_best.a1 * hi_best.a1).abs();
        let locals: Vec<Candidate> = result.local_optima.iter().copied().take(10).collect();
        if to_lo <= to_hi {
            lo = mid;
            lo_best = mid_best;
            lo_locals = locals;
        } else {
            hi = mid;
            hi_best = mid_best;
            hi_locals = locals;
        }
    }
    let before = lo_best.a1 * lo_best.a1;
    let after = hi_best.a1 * hi_best.a1;
    Ok(if (after - before).abs() > jump_threshold(nbar) {
        Some(JumpEvent {
            sigma_lo: lo,
            sigma_hi: hi,
            a1sq_before: before,
            a1sq_after: after,
        })
    } else {
        None
    })
}

fn detect_jumps(
    objective: Objective,
    settings: &SearchSettings,
    nbar: f64,
    m: usize,
    imp: &Imperfections,
    sigmas: &[f64],
    results: &[OptimizationResult],
) -> Result<Vec<JumpEvent>> {
    let mut events = Vec::new();
    for i in candidate_jumps(results, nbar) {
        if let Some(event) = refine_jump(
            objective,
            settings,
            nbar,
            m,
            imp,
            sigmas[i],
            sigmas[i + 1],
            &results[i],
            &results[i + 1],
        )? {
            events.push(event);
        }
    }
    Ok(events)
}

/// Sweeps the noise width over `sigma_grid` (sorted ascending), optimizing
/// the strategy at every point, and records alphabet jump events.
pub fn sweep_sigma(
    nbar: f64,
    m: usize,
    imp: &Imperfections,
    sigma_grid: &[f64],
    objective: Objective,
) -> Result<SweepCurve> {
    sweep_sigma_with(
        &SearchSettings::default(),
        SweepMode::WarmStarted,
        nbar,
        m,
        imp,
        sigma_grid,
        objective,
    )
}

/// [`sweep_sigma`] with explicit settings and scheduling mode.
pub fn sweep_sigma_with(
    settings: &SearchSettings,
    mode: SweepMode,
    nbar: f64,
    m: usize,
    imp: &Imperfections,
    sigma_grid: &[f64],
    objective: Objective,
) -> Result<SweepCurve> {
    if sigma_grid.is_empty() {
        return Err(Error::InvalidParameter("σ grid must be nonempty".into()));
    }
    if sigma_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "σ grid must be strictly ascending".into(),
        ));
    }
    let widths: Vec<NoiseWidth> = sigma_grid
        .iter()
        .map(|&s| NoiseWidth::new(s))
        .collect::<Result<_>>()?;
    let results: Vec<OptimizationResult> = match mode {
        SweepMode::WarmStarted => {
            let mut results = Vec::with_capacity(widths.len());
            let mut warm: Vec<Candidate> = Vec::new();
            for &sigma in &widths {
                let result = run_multistart(objective, settings, nbar, sigma, m, imp, &warm)?;
                warm = result.local_optima.iter().copied().take(10).collect();
                results.push(result);
            }
            results
        }
        SweepMode::ColdStart => {
            let runs = map_maybe_parallel(widths, settings.parallel, |sigma| {
                run_multistart(objective, settings, nbar, sigma, m, imp, &[])
            });
            runs.into_iter().collect::<Result<_>>()?
        }
    };
    let jump_events = detect_jumps(objective, settings, nbar, m, imp, sigma_grid, &results)?;
    Ok(SweepCurve {
        sigmas: sigma_grid.to_vec(),
        results,
        jump_events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn width(sigma: f64) -> NoiseWidth {
        NoiseWidth::new(sigma).unwrap()
    }

    #[test]
    fn canonical_fold_preserves_the_objective() {
        let imp = Imperfections::experimental();
        let sigma = width(0.35);
        let f = objective_fn(Objective::Error, 1.0, sigma, 2, &imp);
        for &(theta, beta) in &[
            (1.1, 0.7),
            (2.3, -0.4),
            (-0.8, 1.2),
            (std::f64::consts::PI + 0.2, 0.9),
        ] {
            let (tc, bc) = canonicalize(theta, beta);
            assert!((-std::f64::consts::FRAC_PI_4..=std::f64::consts::FRAC_PI_4).contains(&tc));
            let original = f(&[theta, beta]).unwrap();
            let folded = f(&[tc, bc]).unwrap();
            assert_abs_diff_eq!(original, folded, epsilon = 1e-12);
        }
    }

    #[test]
    fn noiseless_error_optimum_is_antipodal() {
        let result =
            optimize_discrimination(0.5, width(0.0), 1, &Imperfections::ideal()).unwrap();
        let best = result.best;
        assert_abs_diff_eq!(best.a1.abs(), best.a2.abs(), epsilon = 0.02 * best.a2.abs());
        // The exactly nulling displacement receiver is a feasible point, so
        // the optimum can only improve on it.
        assert!(best.value <= 0.5 * (-2.0f64).exp() + 1e-9);
    }

    #[test]
    fn strong_noise_error_optimum_is_on_off() {
        let result =
            optimize_discrimination(0.5, width(1.2), 1, &Imperfections::ideal()).unwrap();
        assert!(
            result.best.a1 * result.best.a1 <= 0.05 * 0.5,
            "a1² = {} not OOK-like",
            result.best.a1 * result.best.a1
        );
    }

    #[test]
    fn optimum_beats_both_family_endpoints() {
        let imp = Imperfections::experimental();
        let sigma = width(0.4);
        let (nbar, m) = (1.0, 2);
        let joint = optimize_discrimination(nbar, sigma, m, &imp).unwrap();
        for endpoint in [Alphabet::bpsk(nbar).unwrap(), Alphabet::ook(nbar).unwrap()] {
            let (_, value) =
                optimize_displacement(&endpoint, sigma, m, &imp, Objective::Error).unwrap();
            assert!(
                joint.best.value <= value + 1e-9,
                "joint {} loses to endpoint {}",
                joint.best.value,
                value
            );
        }
    }

    #[test]
    fn noiseless_information_optimum_is_antipodal() {
        let result =
            optimize_mutual_information(1.0, width(0.0), 1, &Imperfections::ideal()).unwrap();
        let best = result.best;
        assert_abs_diff_eq!(best.a1.abs(), best.a2.abs(), epsilon = 0.02 * best.a2.abs());
    }

    #[test]
    fn start_grid_jitter_does_not_move_the_global_optimum() {
        let imp = Imperfections::experimental();
        let mut values = Vec::new();
        for seed in [11u64, 42u64] {
            let settings = SearchSettings {
                jitter_seed: Some(seed),
                ..SearchSettings::default()
            };
            let result = optimize_with(
                Objective::Error,
                &settings,
                1.0,
                width(0.3),
                2,
                &imp,
                &[],
            )
            .unwrap();
            values.push(result.best.value);
        }
        assert!((values[0] - values[1]).abs() < 1e-7);
    }

    #[test]
    fn warm_and_cold_sweeps_agree_on_objectives() {
        let imp = Imperfections::ideal();
        let grid = [0.0, 0.3, 0.6, 0.9];
        let warm = sweep_sigma_with(
            &SearchSettings::default(),
            SweepMode::WarmStarted,
            0.5,
            1,
            &imp,
            &grid,
            Objective::Error,
        )
        .unwrap();
        let cold = sweep_sigma_with(
            &SearchSettings::default(),
            SweepMode::ColdStart,
            0.5,
            1,
            &imp,
            &grid,
            Objective::Error,
        )
        .unwrap();
        for (a, b) in warm.results.iter().zip(&cold.results) {
            assert!((a.best.value - b.best.value).abs() < 1e-6);
        }
    }

    #[test]
    fn optimized_error_grows_with_noise() {
        let curve = sweep_sigma(
            0.5,
            1,
            &Imperfections::ideal(),
            &[0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            Objective::Error,
        )
        .unwrap();
        for w in curve.results.windows(2) {
            assert!(w[1].best.value >= w[0].best.value - 1e-9);
        }
    }

    #[test]
    fn global_optimum_switches_basins_with_increasing_noise() {
        let imp = Imperfections::experimental();
        let low = optimize_discrimination(2.0, width(0.15), 3, &imp).unwrap().best;
        let high = optimize_discrimination(2.0, width(0.25), 3, &imp).unwrap().best;
        let moved = (low.a1 * low.a1 - high.a1 * high.a1).abs() > 0.1 * 2.0
            || (low.beta * low.beta - high.beta * high.beta).abs() > 0.2;
        assert!(
            moved,
            "expected a basin change: low (a1²={}, β²={}), high (a1²={}, β²={})",
            low.a1 * low.a1,
            low.beta * low.beta,
            high.a1 * high.a1,
            high.beta * high.beta
        );
    }

    #[test]
    fn undisplaced_counting_information_matches_direct_detection() {
        let nbar = 0.8;
        let imp = Imperfections::experimental();
        let alphabet = Alphabet::ook(nbar).unwrap();
        let m = 3;
        let strat = PnrStrategy::new(0.0, m).unwrap();
        let soft =
            metrics::mutual_information(&alphabet, width(0.5), &strat, &imp).unwrap();
        let d1 = crate::photostats::direct_detection_probs(alphabet.a1(), m, &imp);
        let d2 = crate::photostats::direct_detection_probs(alphabet.a2(), m, &imp);
        let direct = metrics::mi_from_distributions([&d1, &d2], [0.5, 0.5]);
        assert_abs_diff_eq!(soft, direct, epsilon = 1e-6);
    }
}
