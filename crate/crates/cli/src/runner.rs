//! Turns a validated [`RunConfig`] into CSV tables and a JSON summary.
//!
//! Column layouts are deterministic per objective. Sweeps emit one column
//! group per photon-number resolution, suffixed `_pnr{m}`; the suffix is
//! elided when a single resolution is requested, so e.g. the default
//! optimized error sweep carries exactly
//! `sigma,pe_opt,pe_bpsk,pe_cm,pe_helstrom,a1sq,a2sq,betasq`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use phasecomm::calibration::{self, Branch, PhaseTrace};
use phasecomm::fock::NoiseWidth;
use phasecomm::mc_sim;
use phasecomm::metrics::{self, Alphabet, Objective};
use phasecomm::optimizer::{self, SearchSettings, SweepCurve, SweepMode};
use phasecomm::photostats::{homodyne_error, Imperfections, PnrStrategy};
use serde_json::json;

use crate::config::{AlphabetKind, ObjectiveKind, RunConfig, SweepModeKind};
use crate::table::{Cell, Table};
use crate::CliError;

/// Files written by a run, primary CSV first.
pub struct RunOutput {
    pub files: Vec<PathBuf>,
}

fn width(sigma: f64) -> Result<NoiseWidth, CliError> {
    Ok(NoiseWidth::new(sigma)?)
}

fn imperfections(config: &RunConfig) -> Result<Imperfections, CliError> {
    Ok(Imperfections::new(config.eta, config.xi, config.nu)?)
}

fn search_settings(config: &RunConfig) -> SearchSettings {
    SearchSettings {
        theta_starts: config.theta_starts,
        beta_starts: config.beta_starts,
        ..SearchSettings::default()
    }
}

fn sweep_mode(kind: SweepModeKind) -> SweepMode {
    match kind {
        SweepModeKind::Warm => SweepMode::WarmStarted,
        SweepModeKind::Cold => SweepMode::ColdStart,
    }
}

/// `base` for a single-resolution run, `base_pnr{m}` otherwise.
fn m_tag(ms: &[usize], m: usize, base: &str) -> String {
    if ms.len() == 1 {
        base.to_string()
    } else {
        format!("{base}_pnr{m}")
    }
}

/// Filename-safe tag for a scanned parameter value: `0.0036` → `0p0036`.
fn float_tag(x: f64) -> String {
    format!("{x}").replace('.', "p").replace('-', "m")
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

/// Runs the configured study and writes its outputs under `out_dir`.
pub fn execute(config: &RunConfig, out_dir: &Path) -> Result<RunOutput, CliError> {
    let started = Instant::now();
    let (tables, details) = match config.objective {
        ObjectiveKind::Error | ObjectiveKind::Mi => run_sweep(config)?,
        ObjectiveKind::Rmap => run_rmap(config)?,
        ObjectiveKind::Mc => run_mc(config)?,
        ObjectiveKind::Calibration => run_calibration(config)?,
        ObjectiveKind::Sensitivity => run_sensitivity(config)?,
        ObjectiveKind::Landscape => run_landscape(config)?,
    };

    std::fs::create_dir_all(out_dir).map_err(|e| {
        CliError::Runtime(format!("cannot create {}: {e}", out_dir.display()))
    })?;
    let label = config.label();
    let mut files = Vec::new();
    for (suffix, table) in &tables {
        let path = out_dir.join(format!("{label}{suffix}.csv"));
        std::fs::write(&path, table.to_csv()).map_err(|e| {
            CliError::Runtime(format!("cannot write {}: {e}", path.display()))
        })?;
        files.push(path);
    }
    let summary = json!({
        "label": label,
        "config": serde_json::to_value(config).expect("config serializes"),
        "results": details,
        "runtime_s": started.elapsed().as_secs_f64(),
    });
    let summary_path = out_dir.join(format!("{label}_summary.json"));
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&summary_path, text + "\n").map_err(|e| {
        CliError::Runtime(format!("cannot write {}: {e}", summary_path.display()))
    })?;
    files.push(summary_path);
    Ok(RunOutput { files })
}

type Tables = Vec<(&'static str, Table)>;

/// Optimized (or fixed-BPSK) σ-sweep of error probability or mutual
/// information, with the requested baseline columns.
fn run_sweep(config: &RunConfig) -> Result<(Tables, serde_json::Value), CliError> {
    let nbar = config.nbar.expect("validated");
    let imp = imperfections(config)?;
    let grid = config.sigma_grid();
    let objective = match config.objective {
        ObjectiveKind::Error => Objective::Error,
        _ => Objective::MutualInformation,
    };
    let optimized = config.alphabet == AlphabetKind::Optimized;
    let settings = search_settings(config);
    let mode = sweep_mode(config.sweep_mode);
    let bpsk = Alphabet::bpsk(nbar)?;

    // Primary curves, one per resolution.
    let mut curves: Vec<(usize, SweepCurve)> = Vec::new();
    let mut bpsk_values: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut bpsk_betasq: Vec<(usize, Vec<f64>)> = Vec::new();
    for &m in &config.ms {
        if optimized {
            curves.push((
                m,
                optimizer::sweep_sigma_with(&settings, mode, nbar, m, &imp, &grid, objective)?,
            ));
        }
        if !optimized || config.include_bpsk {
            let mut values = Vec::with_capacity(grid.len());
            let mut betasqs = Vec::with_capacity(grid.len());
            for &s in &grid {
                let (beta, value) =
                    optimizer::optimize_displacement(&bpsk, width(s)?, m, &imp, objective)?;
                values.push(value);
                betasqs.push(beta * beta);
            }
            bpsk_values.push((m, values));
            bpsk_betasq.push((m, betasqs));
        }
    }

    let mut cm = Vec::new();
    if config.include_cm {
        for &s in &grid {
            let base = metrics::cm_baseline(nbar, width(s)?, config.eta, objective)?;
            cm.push(match objective {
                Objective::Error => base.pe,
                Objective::MutualInformation => base.mi,
            });
        }
    }
    let mut helstrom = Vec::new();
    if config.include_helstrom && objective == Objective::Error {
        for &s in &grid {
            helstrom.push(metrics::optimal_helstrom(nbar, width(s)?, config.eta)?.0);
        }
    }
    let mut homodyne = Vec::new();
    if config.include_homodyne && objective == Objective::Error {
        for &s in &grid {
            homodyne.push(homodyne_error(
                bpsk.a1(),
                bpsk.a2(),
                width(s)?,
                config.eta,
                0.5,
            )?);
        }
    }

    let primary_base = match (config.objective, optimized) {
        (ObjectiveKind::Error, true) => "pe_opt",
        (ObjectiveKind::Error, false) => "pe",
        (_, true) => "mi_opt",
        (_, false) => "mi",
    };
    let baseline_base = match config.objective {
        ObjectiveKind::Error => "pe",
        _ => "mi",
    };

    let mut headers = vec!["sigma".to_string()];
    for &m in &config.ms {
        headers.push(m_tag(&config.ms, m, primary_base));
    }
    if optimized && config.include_bpsk {
        for &m in &config.ms {
            headers.push(m_tag(&config.ms, m, &format!("{baseline_base}_bpsk")));
        }
    }
    if !cm.is_empty() {
        headers.push(format!("{baseline_base}_cm"));
    }
    if !helstrom.is_empty() {
        headers.push("pe_helstrom".to_string());
    }
    if !homodyne.is_empty() {
        headers.push("pe_homodyne".to_string());
    }
    for &m in &config.ms {
        if optimized {
            headers.push(m_tag(&config.ms, m, "a1sq"));
            headers.push(m_tag(&config.ms, m, "a2sq"));
        }
        headers.push(m_tag(&config.ms, m, "betasq"));
    }

    let mut table = Table::new(headers);
    for (i, &s) in grid.iter().enumerate() {
        let mut row = vec![Cell::Num(s)];
        if optimized {
            for (_, curve) in &curves {
                row.push(Cell::Num(curve.results[i].best.value));
            }
            if config.include_bpsk {
                for (_, values) in &bpsk_values {
                    row.push(Cell::Num(values[i]));
                }
            }
        } else {
            for (_, values) in &bpsk_values {
                row.push(Cell::Num(values[i]));
            }
        }
        if !cm.is_empty() {
            row.push(Cell::Num(cm[i]));
        }
        if !helstrom.is_empty() {
            row.push(Cell::Num(helstrom[i]));
        }
        if !homodyne.is_empty() {
            row.push(Cell::Num(homodyne[i]));
        }
        if optimized {
            for (_, curve) in &curves {
                let best = curve.results[i].best;
                row.push(Cell::Num(best.a1 * best.a1));
                row.push(Cell::Num(best.a2 * best.a2));
                row.push(Cell::Num(best.beta * best.beta));
            }
        } else {
            for (_, betasqs) in &bpsk_betasq {
                row.push(Cell::Num(betasqs[i]));
            }
        }
        table.push_row(row);
    }

    let jumps: serde_json::Map<String, serde_json::Value> = curves
        .iter()
        .map(|(m, curve)| {
            (
                format!("pnr{m}"),
                serde_json::to_value(&curve.jump_events).expect("jump events serialize"),
            )
        })
        .collect();
    Ok((vec![("", table)], json!({ "jump_events": jumps })))
}

/// R(m) shortfall rows over every (n̄, m) pair, with per-n̄ power-law fits.
fn run_rmap(config: &RunConfig) -> Result<(Tables, serde_json::Value), CliError> {
    let imp = imperfections(config)?;
    let grid = config.sigma_grid();
    let mut table = Table::new(vec!["nbar".into(), "m".into(), "r".into()]);
    let mut fits = Vec::new();
    for &nbar in &config.nbars {
        let rs = metrics::r_of_m_curve(nbar, &config.ms, &imp, &grid)?;
        for (&m, &r) in config.ms.iter().zip(&rs) {
            table.push_row(vec![Cell::Num(nbar), Cell::Int(m as i64), Cell::Num(r)]);
        }
        let ms: Vec<f64> = config.ms.iter().map(|&m| m as f64).collect();
        let fit = metrics::power_law_fit(&ms, &rs);
        fits.push(json!({
            "nbar": nbar,
            "fit": fit.map(|f| json!({
                "amplitude": f.amplitude,
                "exponent": f.exponent,
            })),
        }));
    }
    Ok((vec![("", table)], json!({ "power_law": fits })))
}

/// Monte Carlo validation: per σ, optimize the receiver, then simulate shots
/// and report empirical error and information next to the analytic values.
fn run_mc(config: &RunConfig) -> Result<(Tables, serde_json::Value), CliError> {
    let nbar = config.nbar.expect("validated");
    let imp = imperfections(config)?;
    let grid = config.sigma_grid();
    let m = config.ms[0];
    let settings = search_settings(config);
    let mode = sweep_mode(config.sweep_mode);
    let bpsk = Alphabet::bpsk(nbar)?;

    // (alphabet, strategy) per grid point.
    let mut strategies: Vec<(Alphabet, PnrStrategy)> = Vec::with_capacity(grid.len());
    match config.alphabet {
        AlphabetKind::Optimized => {
            let curve = optimizer::sweep_sigma_with(
                &settings,
                mode,
                nbar,
                m,
                &imp,
                &grid,
                Objective::Error,
            )?;
            for result in &curve.results {
                let best = result.best;
                strategies.push((
                    Alphabet::new(best.a1, best.a2)?,
                    PnrStrategy::new(best.beta, m)?,
                ));
            }
        }
        AlphabetKind::Bpsk => {
            for &s in &grid {
                let (beta, _) =
                    optimizer::optimize_displacement(&bpsk, width(s)?, m, &imp, Objective::Error)?;
                strategies.push((bpsk, PnrStrategy::new(beta, m)?));
            }
        }
    }

    let mut table = Table::new(vec![
        "sigma".into(),
        "pe_analytic".into(),
        "pe_hat".into(),
        "pe_se".into(),
        "mi_analytic".into(),
        "mi_hat".into(),
        "a1sq".into(),
        "a2sq".into(),
        "betasq".into(),
    ]);
    for (i, (&s, (alphabet, strat))) in grid.iter().zip(&strategies).enumerate() {
        let w = width(s)?;
        let report = metrics::strategy_report(alphabet, w, strat, &imp)?;
        let batch = mc_sim::simulate_shots(
            alphabet,
            w,
            strat,
            &imp,
            config.n_shots,
            config.seed.wrapping_add(i as u64),
        )?;
        let emp = mc_sim::empirical_metrics(&batch)?;
        table.push_row(vec![
            Cell::Num(s),
            Cell::Num(report.pe),
            Cell::Num(emp.pe_hat),
            Cell::Num(emp.pe_se),
            Cell::Num(report.mi),
            Cell::Num(emp.mi_hat),
            Cell::Num(alphabet.a1() * alphabet.a1()),
            Cell::Num(alphabet.a2() * alphabet.a2()),
            Cell::Num(strat.beta() * strat.beta()),
        ]);
    }
    let details = json!({ "n_shots": config.n_shots, "m": m });
    Ok((vec![("", table)], details))
}

/// Synthetic calibration: exports the phase trace with its reconstruction,
/// fits the width, and (optionally) scans drive voltages for the σ(V) line.
fn run_calibration(config: &RunConfig) -> Result<(Tables, serde_json::Value), CliError> {
    let nbar = config.nbar.expect("validated");
    let imp = imperfections(config)?;
    let seed = config.seed;

    let generated =
        calibration::generate_piecewise_phase(width(config.sigma_true)?, config.calibration_bins, seed)?;
    let trace = PhaseTrace::with_sampling(
        generated.bin_phases().to_vec(),
        config.shots_per_bin,
        calibration::DEFAULT_PULSE_PERIOD,
    )?;
    let means = calibration::simulate_bin_means(&trace, nbar, &imp, Branch::Plus, seed.wrapping_add(1));
    let estimated: Vec<f64> = means
        .iter()
        .map(|&mean| {
            calibration::estimate_bin_phase_saturating(mean, nbar, config.eta, config.xi, Branch::Plus)
        })
        .collect();
    let fit = calibration::fit_sigma(&estimated)?;
    let floor = calibration::phase_noise_floor(nbar, &imp, config.shots_per_bin);

    let mut trace_table = Table::new(vec![
        "bin_index".into(),
        "true_phase".into(),
        "mean_count".into(),
        "estimated_phase".into(),
    ]);
    for (i, ((&phi, &mean), &est)) in trace
        .bin_phases()
        .iter()
        .zip(&means)
        .zip(&estimated)
        .enumerate()
    {
        trace_table.push_row(vec![
            Cell::Int(i as i64),
            Cell::Num(phi),
            Cell::Num(mean),
            Cell::Num(est),
        ]);
    }

    let mut tables = vec![("_trace", trace_table)];
    let mut line_json = serde_json::Value::Null;
    if !config.voltages.is_empty() {
        let mut volt_table = Table::new(vec![
            "volts".into(),
            "sigma_injected".into(),
            "sigma_hat".into(),
        ]);
        let mut pairs = Vec::new();
        for (i, &v) in config.voltages.iter().enumerate() {
            let injected = config.volts_to_sigma * v;
            let scan = calibration::calibrate_synthetic(
                width(injected)?,
                nbar,
                &imp,
                Branch::Plus,
                config.calibration_bins,
                seed.wrapping_add(100 + i as u64),
            )?;
            volt_table.push_row(vec![
                Cell::Num(v),
                Cell::Num(injected),
                Cell::Num(scan.sigma_hat),
            ]);
            pairs.push((v, scan.sigma_hat));
        }
        let line = calibration::fit_voltage_line(&pairs)?;
        line_json = json!({ "slope": line.slope, "intercept": line.intercept });
        tables.push(("_voltage", volt_table));
    }

    let details = json!({
        "sigma_true": config.sigma_true,
        "sigma_hat": fit.sigma_hat,
        "mean_hat": fit.mean,
        "chi_square": fit.chi_square,
        "p_value": fit.p_value,
        "gaussian_ok": fit.gaussian_ok,
        "phase_noise_floor": floor,
        "voltage_line": line_json,
    });
    Ok((tables, details))
}

/// Dark-count and visibility scan: one optimized error and information curve
/// per perturbed imperfection set, all over the same σ grid.
fn run_sensitivity(config: &RunConfig) -> Result<(Tables, serde_json::Value), CliError> {
    let nbar = config.nbar.expect("validated");
    let grid = config.sigma_grid();
    let m = config.ms[0];
    let settings = search_settings(config);
    let mode = sweep_mode(config.sweep_mode);

    // (column tag, imperfections) per scanned variant, ν first then ξ.
    let mut variants: Vec<(String, Imperfections)> = Vec::new();
    for &nu in &config.nus {
        variants.push((
            format!("nu{}", float_tag(nu)),
            Imperfections::new(config.eta, config.xi, nu)?,
        ));
    }
    for &xi in &config.xis {
        variants.push((
            format!("xi{}", float_tag(xi)),
            Imperfections::new(config.eta, xi, config.nu)?,
        ));
    }

    let mut pe_curves = Vec::new();
    let mut mi_curves = Vec::new();
    for (_, imp) in &variants {
        pe_curves.push(optimizer::sweep_sigma_with(
            &settings,
            mode,
            nbar,
            m,
            imp,
            &grid,
            Objective::Error,
        )?);
        mi_curves.push(optimizer::sweep_sigma_with(
            &settings,
            mode,
            nbar,
            m,
            imp,
            &grid,
            Objective::MutualInformation,
        )?);
    }

    let mut headers = vec!["sigma".to_string()];
    for (tag, _) in &variants {
        headers.push(format!("pe_{tag}"));
    }
    for (tag, _) in &variants {
        headers.push(format!("mi_{tag}"));
    }
    let mut table = Table::new(headers);
    for (i, &s) in grid.iter().enumerate() {
        let mut row = vec![Cell::Num(s)];
        for curve in &pe_curves {
            row.push(Cell::Num(curve.results[i].best.value));
        }
        for curve in &mi_curves {
            row.push(Cell::Num(curve.results[i].best.value));
        }
        table.push_row(row);
    }
    let details = json!({
        "m": m,
        "variants": variants.iter().map(|(tag, imp)| json!({
            "tag": tag,
            "imperfections": imp,
        })).collect::<Vec<_>>(),
    });
    Ok((vec![("", table)], details))
}

/// log₁₀ P_E over the (|α₁|², |β|²) plane at fixed n̄, one slice per σ.
/// The displacement sign is chosen per cell (the plane is |β|², and the two
/// signs are inequivalent once the alphabet is asymmetric).
fn run_landscape(config: &RunConfig) -> Result<(Tables, serde_json::Value), CliError> {
    let nbar = config.nbar.expect("validated");
    let imp = imperfections(config)?;
    let m = config.ms[0];
    let a1sq_grid = linspace(
        config.a1sq_min,
        config.a1sq_max.unwrap_or(nbar),
        config.a1sq_count,
    );
    let betasq_grid = linspace(config.betasq_min, config.betasq_max, config.betasq_count);

    let mut table = Table::new(vec![
        "sigma".into(),
        "a1sq".into(),
        "betasq".into(),
        "log10_pe".into(),
    ]);
    for &s in &config.sigmas {
        let w = width(s)?;
        for &a1sq in &a1sq_grid {
            let a2sq = (2.0 * nbar - a1sq).max(0.0);
            let alphabet = Alphabet::new(-a1sq.sqrt(), a2sq.sqrt())?;
            for &betasq in &betasq_grid {
                let beta = betasq.sqrt();
                let mut pe = f64::INFINITY;
                for b in [beta, -beta] {
                    let strat = PnrStrategy::new(b, m)?;
                    pe = pe.min(metrics::error_probability(&alphabet, w, &strat, &imp)?);
                    if betasq == 0.0 {
                        break;
                    }
                }
                table.push_row(vec![
                    Cell::Num(s),
                    Cell::Num(a1sq),
                    Cell::Num(betasq),
                    Cell::Num(pe.max(1e-300).log10()),
                ]);
            }
        }
    }
    let details = json!({ "m": m, "nbar": nbar });
    Ok((vec![("", table)], details))
}
