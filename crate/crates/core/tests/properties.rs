//! Randomized-input invariants of the numerical core: distribution
//! normalization, exact symmetries, code-path agreement, information bounds,
//! and scheduling determinism.

use phasecomm::fock::{dephased_density_matrix, helstrom_error, NoiseWidth};
use phasecomm::mc_sim::simulate_shots_with;
use phasecomm::metrics::{
    self, error_probability, helstrom_error_for, map_decision, mi_from_distributions,
    mutual_information, pe_from_distributions, Alphabet,
};
use phasecomm::photostats::{pnr_outcome_probs, Imperfections, OutcomeDistribution, PnrStrategy};
use phasecomm::quad::phase_average;
use proptest::prelude::*;

fn width(sigma: f64) -> NoiseWidth {
    NoiseWidth::new(sigma).unwrap()
}

fn imperfections() -> impl Strategy<Value = Imperfections> {
    (0.3..=1.0f64, 0.8..=1.0f64, 0.0..=0.01f64)
        .prop_map(|(eta, xi, nu)| Imperfections::new(eta, xi, nu).unwrap())
}

fn distribution(m: usize) -> impl Strategy<Value = OutcomeDistribution> {
    proptest::collection::vec(0.05..=1.0f64, m + 1).prop_map(|raw| {
        let total: f64 = raw.iter().sum();
        OutcomeDistribution::new(raw.into_iter().map(|w| w / total).collect()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Phase diffusion only scrambles phases: the photon-number statistics of
    /// the dephased state stay exactly Poissonian.
    #[test]
    fn dephased_diagonal_is_poisson(alpha in 0.2..=1.6f64, sigma in 0.0..=1.2f64) {
        let alpha_sq = alpha * alpha;
        let rho = dephased_density_matrix(alpha.into(), width(sigma), 40).unwrap();
        let mut pn = (-alpha_sq).exp();
        for n in 0..12 {
            prop_assert!((rho.elements()[(n, n)].re - pn).abs() < 1e-12);
            pn *= alpha_sq / (n + 1) as f64;
        }
    }

    /// Swapping both hypotheses and their priors cannot change the minimum
    /// discrimination error.
    #[test]
    fn helstrom_is_swap_symmetric(
        a1 in -1.5..=1.5f64,
        delta in 0.2..=1.5f64,
        sigma in 0.0..=0.8f64,
        prior in 0.05..=0.95f64,
    ) {
        let dim = 40;
        let rho1 = dephased_density_matrix(a1.into(), width(sigma), dim).unwrap();
        let rho2 = dephased_density_matrix((a1 + delta).into(), width(sigma), dim).unwrap();
        let forward = helstrom_error(&rho1, &rho2, prior).unwrap();
        let swapped = helstrom_error(&rho2, &rho1, 1.0 - prior).unwrap();
        prop_assert!((forward - swapped).abs() < 1e-9);
    }

    /// Counting distributions are probability vectors however the channel and
    /// receiver are configured.
    #[test]
    fn outcome_distributions_are_normalized(
        signal in -2.0..=2.0f64,
        sigma in 0.0..=2.0f64,
        beta in -2.0..=2.0f64,
        m in 1usize..=6,
        imp in imperfections(),
    ) {
        let strat = PnrStrategy::new(beta, m).unwrap();
        let dist = pnr_outcome_probs(signal, width(sigma), &strat, &imp).unwrap();
        let total: f64 = dist.probs().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(dist.probs().iter().all(|&p| (-1e-15..=1.0 + 1e-12).contains(&p)));
    }

    /// A global sign flip of both the signal and the displacement is an
    /// exact symmetry of the counting statistics.
    #[test]
    fn counting_has_global_sign_symmetry(
        signal in -2.0..=2.0f64,
        sigma in 0.0..=1.5f64,
        beta in -2.0..=2.0f64,
        m in 1usize..=4,
        imp in imperfections(),
    ) {
        let plus = pnr_outcome_probs(
            signal, width(sigma), &PnrStrategy::new(beta, m).unwrap(), &imp,
        ).unwrap();
        let minus = pnr_outcome_probs(
            -signal, width(sigma), &PnrStrategy::new(-beta, m).unwrap(), &imp,
        ).unwrap();
        for (a, b) in plus.probs().iter().zip(minus.probs()) {
            prop_assert_eq!(*a, *b);
        }
    }

    /// Without a displacement the count rate is phase-insensitive, so the
    /// noise width cannot matter.
    #[test]
    fn undisplaced_counting_ignores_the_noise_width(
        signal in -2.0..=2.0f64,
        sigma_a in 0.0..=1.5f64,
        sigma_b in 0.0..=1.5f64,
        m in 1usize..=4,
        imp in imperfections(),
    ) {
        let strat = PnrStrategy::new(0.0, m).unwrap();
        let a = pnr_outcome_probs(signal, width(sigma_a), &strat, &imp).unwrap();
        let b = pnr_outcome_probs(signal, width(sigma_b), &strat, &imp).unwrap();
        for (x, y) in a.probs().iter().zip(b.probs()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    /// The error-sum formula and the explicit MAP-decision route are the
    /// same computation in two guises.
    #[test]
    fn error_formula_matches_the_decision_route(
        theta in 0.0..=std::f64::consts::FRAC_PI_2,
        beta in -1.5..=1.5f64,
        sigma in 0.0..=1.0f64,
        m in 1usize..=4,
        prior in 0.05..=0.95f64,
        imp in imperfections(),
    ) {
        let alphabet = Alphabet::from_theta(theta, 1.0).unwrap();
        let strat = PnrStrategy::new(beta, m).unwrap();
        let cond = [
            pnr_outcome_probs(alphabet.a1(), width(sigma), &strat, &imp).unwrap(),
            pnr_outcome_probs(alphabet.a2(), width(sigma), &strat, &imp).unwrap(),
        ];
        let priors = [prior, 1.0 - prior];
        let direct = pe_from_distributions([&cond[0], &cond[1]], priors);
        let map = map_decision([&cond[0], &cond[1]], priors);
        let success: f64 = map
            .iter()
            .enumerate()
            .map(|(k, &i)| priors[i] * cond[i].probs()[k])
            .sum();
        prop_assert!((direct - (1.0 - success)).abs() < 1e-15);
    }

    /// Mutual information of a binary input lives in [0, 1] bits and is
    /// invariant under relabeling outcomes or hypotheses.
    #[test]
    fn information_bounds_and_relabeling(
        d1 in distribution(4),
        d2 in distribution(4),
        prior in 0.05..=0.95f64,
    ) {
        let priors = [prior, 1.0 - prior];
        let mi = mi_from_distributions([&d1, &d2], priors);
        prop_assert!((0.0..=1.0).contains(&mi));
        let rev1 = OutcomeDistribution::new(d1.probs().iter().rev().copied().collect()).unwrap();
        let rev2 = OutcomeDistribution::new(d2.probs().iter().rev().copied().collect()).unwrap();
        let relabeled_outcomes = mi_from_distributions([&rev1, &rev2], priors);
        prop_assert!((mi - relabeled_outcomes).abs() < 1e-12);
        let swapped = mi_from_distributions([&d2, &d1], [priors[1], priors[0]]);
        prop_assert!((mi - swapped).abs() < 1e-12);
    }

    /// Collapsing outcomes to the MAP decision is a garbling, so the soft
    /// information always dominates the hard information.
    #[test]
    fn soft_information_dominates_hard(
        d1 in distribution(5),
        d2 in distribution(5),
        prior in 0.05..=0.95f64,
    ) {
        let priors = [prior, 1.0 - prior];
        let soft = mi_from_distributions([&d1, &d2], priors);
        let hard = metrics::hard_decision_mi([&d1, &d2], priors);
        prop_assert!(hard <= soft + 1e-12);
    }

    /// The σ = 0 wrapped average is a point mass and the Gaussian case
    /// reproduces the characteristic function.
    #[test]
    fn phase_average_matches_the_characteristic_function(
        sigma in 0.0..=3.0f64,
        k in 1u32..=5,
    ) {
        let freq = f64::from(k);
        let value = phase_average(sigma, |phi| (freq * phi).cos()).unwrap();
        let exact = (-0.5 * sigma * sigma * freq * freq).exp();
        prop_assert!((value - exact).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The Helstrom bound for the loss-adjusted dephased pair lower-bounds
    /// the counting receiver at the same alphabet; excess-noise
    /// imperfections only widen the gap.
    #[test]
    fn helstrom_lower_bounds_the_counting_receiver(
        theta in 0.0..=std::f64::consts::FRAC_PI_2,
        beta in -1.5..=1.5f64,
        sigma in 0.0..=0.9f64,
        m in 1usize..=3,
        imp in imperfections(),
    ) {
        let alphabet = Alphabet::from_theta(theta, 1.0).unwrap();
        let strat = PnrStrategy::new(beta, m).unwrap();
        let pe = error_probability(&alphabet, width(sigma), &strat, &imp).unwrap();
        let bound = helstrom_error_for(&alphabet, width(sigma), imp.eta()).unwrap();
        prop_assert!(bound <= pe + 1e-9, "bound {} vs pe {}", bound, pe);
    }

    /// Chunked parallel simulation is bit-identical to the sequential
    /// schedule for any shot count.
    #[test]
    fn parallel_simulation_is_bit_identical(
        n_shots in 1usize..=30_000,
        seed in 0u64..=u64::MAX,
        sigma in 0.0..=1.0f64,
    ) {
        let alphabet = Alphabet::from_theta(0.5, 1.0).unwrap();
        let strat = PnrStrategy::new(0.4, 2).unwrap();
        let imp = Imperfections::experimental();
        let par = simulate_shots_with(
            &alphabet, width(sigma), &strat, &imp, n_shots, seed, true, None,
        ).unwrap();
        let seq = simulate_shots_with(
            &alphabet, width(sigma), &strat, &imp, n_shots, seed, false, None,
        ).unwrap();
        prop_assert_eq!(par.confusion(), seq.confusion());
    }

    /// Soft mutual information through the full channel pipeline stays in
    /// [0, 1] bits.
    #[test]
    fn pipeline_information_is_bounded(
        theta in 0.0..=std::f64::consts::FRAC_PI_2,
        beta in -1.5..=1.5f64,
        sigma in 0.0..=1.5f64,
        m in 1usize..=4,
        imp in imperfections(),
    ) {
        let alphabet = Alphabet::from_theta(theta, 0.8).unwrap();
        let strat = PnrStrategy::new(beta, m).unwrap();
        let mi = mutual_information(&alphabet, width(sigma), &strat, &imp).unwrap();
        prop_assert!((0.0..=1.0).contains(&mi));
    }
}
