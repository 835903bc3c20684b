//! Run configuration: flat key-value TOML, merged with environment and
//! command-line overrides, validated before anything executes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variables with this prefix override config keys, e.g.
/// `PHASECOMM_SIGMA_COUNT=5` sets `sigma_count`.
pub const ENV_PREFIX: &str = "PHASECOMM_";

/// What a run computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    /// Error-probability sweep over σ.
    Error,
    /// Mutual-information sweep over σ.
    Mi,
    /// R(m) shortfall map over (n̄, m).
    Rmap,
    /// Monte Carlo validation of the analytic statistics.
    Mc,
    /// Synthetic phase-noise calibration pipeline.
    Calibration,
    /// Dark-count and visibility sensitivity study.
    Sensitivity,
    /// log₁₀ P_E landscape over (|α₁|², |β|²).
    Landscape,
}

/// Which transmit alphabet a sweep uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphabetKind {
    /// Jointly optimized with the displacement at every grid point.
    #[default]
    Optimized,
    /// Fixed antipodal alphabet; only the displacement is optimized.
    Bpsk,
}

/// Scheduling of σ-sweep optimizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepModeKind {
    /// Sequential in σ, seeding each point with the previous optima.
    #[default]
    Warm,
    /// Independent cold starts, dispatched to the worker pool.
    Cold,
}

fn default_ms() -> Vec<usize> {
    vec![1]
}

fn one() -> f64 {
    1.0
}

fn default_sigma_max() -> f64 {
    1.2
}

fn default_sigma_count() -> usize {
    61
}

fn default_starts() -> usize {
    12
}

fn default_seed() -> u64 {
    1
}

fn default_n_shots() -> usize {
    100_000
}

fn default_calibration_bins() -> usize {
    5000
}

fn default_shots_per_bin() -> usize {
    500
}

fn default_volts_to_sigma() -> f64 {
    0.215
}

fn default_sigma_true() -> f64 {
    0.215
}

fn default_betasq_max() -> f64 {
    6.0
}

fn default_a1sq_count() -> usize {
    41
}

fn default_betasq_count() -> usize {
    61
}

/// One run of the tool: every knob is a flat key so presets, environment
/// variables, and `--set` overrides all address the same namespace.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub objective: ObjectiveKind,
    /// Output file stem; defaults to the preset name or config file stem.
    #[serde(default)]
    pub label: Option<String>,
    /// Mean photon number of the alphabet (all objectives except `rmap`).
    #[serde(default)]
    pub nbar: Option<f64>,
    /// Mean photon numbers for `rmap` rows.
    #[serde(default)]
    pub nbars: Vec<f64>,
    /// Photon-number resolutions. Sweeps emit one column group per entry.
    #[serde(default = "default_ms")]
    pub ms: Vec<usize>,
    #[serde(default = "one")]
    pub eta: f64,
    #[serde(default = "one")]
    pub xi: f64,
    #[serde(default)]
    pub nu: f64,
    #[serde(default)]
    pub sigma_min: f64,
    #[serde(default = "default_sigma_max")]
    pub sigma_max: f64,
    #[serde(default = "default_sigma_count")]
    pub sigma_count: usize,
    #[serde(default)]
    pub alphabet: AlphabetKind,
    /// Add fixed-BPSK baseline columns to an optimized sweep.
    #[serde(default)]
    pub include_bpsk: bool,
    /// Add the conventional-measurement baseline column.
    #[serde(default)]
    pub include_cm: bool,
    /// Add the alphabet-optimized Helstrom bound column.
    #[serde(default)]
    pub include_helstrom: bool,
    /// Add the same-alphabet homodyne-limit column.
    #[serde(default)]
    pub include_homodyne: bool,
    #[serde(default = "default_starts")]
    pub theta_starts: usize,
    #[serde(default = "default_starts")]
    pub beta_starts: usize,
    #[serde(default)]
    pub sweep_mode: SweepModeKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Shots per Monte Carlo batch (`mc`).
    #[serde(default = "default_n_shots")]
    pub n_shots: usize,
    /// Bins per calibration fit (`calibration`).
    #[serde(default = "default_calibration_bins")]
    pub calibration_bins: usize,
    #[serde(default = "default_shots_per_bin")]
    pub shots_per_bin: usize,
    /// Drive voltages of the calibration scan; may be empty to skip the line fit.
    #[serde(default)]
    pub voltages: Vec<f64>,
    /// Injected σ per volt for the synthetic calibration scan.
    #[serde(default = "default_volts_to_sigma")]
    pub volts_to_sigma: f64,
    /// Injected σ of the exported calibration trace.
    #[serde(default = "default_sigma_true")]
    pub sigma_true: f64,
    /// Noise widths of the landscape slices (`landscape`).
    #[serde(default)]
    pub sigmas: Vec<f64>,
    #[serde(default)]
    pub a1sq_min: f64,
    /// Upper edge of the |α₁|² landscape axis; defaults to n̄.
    #[serde(default)]
    pub a1sq_max: Option<f64>,
    #[serde(default = "default_a1sq_count")]
    pub a1sq_count: usize,
    #[serde(default)]
    pub betasq_min: f64,
    #[serde(default = "default_betasq_max")]
    pub betasq_max: f64,
    #[serde(default = "default_betasq_count")]
    pub betasq_count: usize,
    /// Dark-count rates scanned by `sensitivity` (visibility held at `xi`).
    #[serde(default)]
    pub nus: Vec<f64>,
    /// Visibilities scanned by `sensitivity` (dark counts held at `nu`).
    #[serde(default)]
    pub xis: Vec<f64>,
}

impl RunConfig {
    pub fn sigma_grid(&self) -> Vec<f64> {
        if self.sigma_count == 1 {
            return vec![self.sigma_min];
        }
        (0..self.sigma_count)
            .map(|i| {
                self.sigma_min
                    + (self.sigma_max - self.sigma_min) * i as f64
                        / (self.sigma_count - 1) as f64
            })
            .collect()
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or("run")
    }

    fn require_nbar(&self) -> Result<f64, CliError> {
        match self.nbar {
            Some(n) if n > 0.0 && n.is_finite() => Ok(n),
            Some(n) => Err(CliError::Config(format!(
                "nbar must be a positive finite number, got {n}"
            ))),
            None => Err(CliError::Config(format!(
                "objective {:?} needs an `nbar` key",
                self.objective
            ))),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        phasecomm::photostats::Imperfections::new(self.eta, self.xi, self.nu)
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.sigma_count == 0 {
            return Err(CliError::Config("sigma_count must be ≥ 1".into()));
        }
        if !(self.sigma_min.is_finite() && self.sigma_max.is_finite())
            || self.sigma_min < 0.0
            || self.sigma_max < self.sigma_min
        {
            return Err(CliError::Config(format!(
                "σ grid [{}, {}] must be finite, nonnegative, and ordered",
                self.sigma_min, self.sigma_max
            )));
        }
        if self.ms.is_empty() || self.ms.iter().any(|&m| m == 0) {
            return Err(CliError::Config(
                "ms must list at least one resolution ≥ 1".into(),
            ));
        }
        if self.theta_starts < 2 || self.beta_starts < 2 {
            return Err(CliError::Config(
                "theta_starts and beta_starts must be ≥ 2".into(),
            ));
        }
        match self.objective {
            ObjectiveKind::Rmap => {
                if self.nbars.is_empty()
                    || self.nbars.iter().any(|&n| !(n > 0.0 && n.is_finite()))
                {
                    return Err(CliError::Config(
                        "rmap needs a nonempty `nbars` list of positive photon numbers".into(),
                    ));
                }
            }
            ObjectiveKind::Mc => {
                self.require_nbar()?;
                if self.n_shots == 0 {
                    return Err(CliError::Config("n_shots must be ≥ 1".into()));
                }
            }
            ObjectiveKind::Calibration => {
                self.require_nbar()?;
                if self.calibration_bins < 100 {
                    return Err(CliError::Config(
                        "calibration_bins must be ≥ 100 for a width fit".into(),
                    ));
                }
                if self.shots_per_bin == 0 {
                    return Err(CliError::Config("shots_per_bin must be ≥ 1".into()));
                }
                if !(self.sigma_true >= 0.0 && self.sigma_true.is_finite()) {
                    return Err(CliError::Config(format!(
                        "sigma_true must be a finite nonnegative width, got {}",
                        self.sigma_true
                    )));
                }
            }
            ObjectiveKind::Sensitivity => {
                self.require_nbar()?;
                if self.nus.is_empty() && self.xis.is_empty() {
                    return Err(CliError::Config(
                        "sensitivity needs `nus` and/or `xis` to scan".into(),
                    ));
                }
            }
            ObjectiveKind::Landscape => {
                let nbar = self.require_nbar()?;
                if self.sigmas.is_empty() {
                    return Err(CliError::Config(
                        "landscape needs a nonempty `sigmas` list".into(),
                    ));
                }
                if self.a1sq_count < 2 || self.betasq_count < 2 {
                    return Err(CliError::Config(
                        "landscape grid counts must be ≥ 2".into(),
                    ));
                }
                let a1sq_max = self.a1sq_max.unwrap_or(nbar);
                if !(self.a1sq_min >= 0.0 && a1sq_max > self.a1sq_min)
                    || a1sq_max > 2.0 * nbar
                    || !(self.betasq_min >= 0.0 && self.betasq_max > self.betasq_min)
                {
                    return Err(CliError::Config(
                        "landscape axes must be ordered, nonnegative, and |α₁|² ≤ 2n̄".into(),
                    ));
                }
            }
            ObjectiveKind::Error | ObjectiveKind::Mi => {
                self.require_nbar()?;
            }
        }
        Ok(())
    }
}

/// Built-in presets reproducing the published figures.
pub const PRESETS: &[(&str, &str)] = &[
    ("fig2b", include_str!("../../../presets/fig2b.toml")),
    ("fig3a", include_str!("../../../presets/fig3a.toml")),
    ("fig3b", include_str!("../../../presets/fig3b.toml")),
    ("fig3c", include_str!("../../../presets/fig3c.toml")),
    ("fig4a", include_str!("../../../presets/fig4a.toml")),
    ("fig4b", include_str!("../../../presets/fig4b.toml")),
    ("fig4c", include_str!("../../../presets/fig4c.toml")),
    ("fig4d", include_str!("../../../presets/fig4d.toml")),
    ("fig4e", include_str!("../../../presets/fig4e.toml")),
    ("fig4f", include_str!("../../../presets/fig4f.toml")),
    ("fig5a", include_str!("../../../presets/fig5a.toml")),
    ("fig5b", include_str!("../../../presets/fig5b.toml")),
    ("fig5c", include_str!("../../../presets/fig5c.toml")),
    ("fig5d", include_str!("../../../presets/fig5d.toml")),
    ("fig5e", include_str!("../../../presets/fig5e.toml")),
    ("fig5f", include_str!("../../../presets/fig5f.toml")),
    ("figS1", include_str!("../../../presets/figS1.toml")),
    ("figS2", include_str!("../../../presets/figS2.toml")),
    ("figS3", include_str!("../../../presets/figS3.toml")),
];

fn preset_text(name: &str) -> Result<&'static str, CliError> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| {
            let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            CliError::Config(format!(
                "unknown preset {name:?}; available: {}",
                names.join(", ")
            ))
        })
}

/// Parses an override value leniently: TOML syntax first (numbers, booleans,
/// arrays), bare text as a string.
fn parse_override(key: &str, raw: &str) -> Result<(String, toml::Value), CliError> {
    let candidate = format!("v = {raw}");
    let value = match candidate.parse::<toml::Table>() {
        Ok(mut table) => table.remove("v").expect("parsed assignment"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    Ok((key.to_string(), value))
}

fn apply_overrides(
    table: &mut toml::Table,
    pairs: impl Iterator<Item = (String, String)>,
) -> Result<(), CliError> {
    for (key, raw) in pairs {
        let (key, value) = parse_override(&key, &raw)?;
        table.insert(key, value);
    }
    Ok(())
}


/// Loads a config from a preset name or file, then layers environment
/// variables (`PHASECOMM_*`, sorted for determinism) and `--set` pairs on
/// top, in that order.
pub fn load(
    preset: Option<&str>,
    config_path: Option<&Path>,
    sets: &[String],
    seed_flag: Option<u64>,
) -> Result<RunConfig, CliError> {
    let (text, default_label) = match (preset, config_path) {
        (Some(name), None) => (preset_text(name)?.to_string(), name.to_string()),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".into());
            (text, stem)
        }
        _ => {
            return Err(CliError::Config(
                "exactly one of --preset or --config is required".into(),
            ))
        }
    };
    let mut table: toml::Table = text
        .parse()
        .map_err(|e| CliError::Config(format!("config is not valid TOML: {e}")))?;
    let mut env_pairs: Vec<(String, String)> = std::env::vars()
        .filter_map(|(k, v)| {
            k.strip_prefix(ENV_PREFIX)
                .map(|rest| (rest.to_lowercase(), v))
        })
        .collect();
    env_pairs.sort();
    apply_overrides(&mut table, env_pairs.into_iter())?;
    let set_pairs = sets.iter().map(|entry| {
        match entry.split_once('=') {
            Some((k, v)) => Ok((k.trim().to_string(), v.trim().to_string())),
            None => Err(CliError::Config(format!(
                "--set expects KEY=VALUE, got {entry:?}"
            ))),
        }
    });
    let mut resolved = Vec::new();
    for pair in set_pairs {
        resolved.push(pair?);
    }
    apply_overrides(&mut table, resolved.into_iter())?;
    let mut config: RunConfig = table
        .try_into()
        .map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
    if config.label.is_none() {
        config.label = Some(default_label);
    }
    if let Some(seed) = seed_flag {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}
