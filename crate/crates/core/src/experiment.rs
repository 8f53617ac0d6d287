//! Batches of seeded trials described by one config file, and their reports.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attacks::{run_campaign, AttackStrategy, CampaignError, ChannelModel, DetectionStats};
use crate::protocol::{MemoryMode, ProtocolConfig, RunReport};

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("trials must be positive")]
    NoTrials,
    #[error(transparent)]
    Campaign(#[from] CampaignError),
    #[error("config file: {0}")]
    Parse(String),
}

/// A protocol configuration plus what to run it against.
///
/// ```toml
/// trials = 10
///
/// [protocol]
/// m = 3
/// # ...
///
/// [channel]
/// kind = "depolarizing"
/// p = 0.05
///
/// [attack]
/// kind = "intercept_resend"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "one_trial")]
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    pub protocol: ProtocolConfig,
    #[serde(default)]
    pub channel: ChannelModel,
    #[serde(default)]
    pub attack: AttackStrategy,
}

fn one_trial() -> usize {
    1
}

impl ExperimentConfig {
    pub fn new(protocol: ProtocolConfig, trials: usize) -> ExperimentConfig {
        ExperimentConfig {
            trials,
            output_path: None,
            protocol,
            channel: ChannelModel::Identity,
            attack: AttackStrategy::none(),
        }
    }

    pub fn from_toml(text: &str) -> Result<ExperimentConfig, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config types serialise to TOML")
    }
}

/// Headline numbers over all trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub trials: usize,
    pub aborted: usize,
    pub abort_fraction: f64,
    /// All checks in all trials found zero errors.
    pub error_free: bool,
    /// Every trial that did not abort ended with identical Alice and Bob keys.
    pub keys_agree: bool,
    pub total_key_bits: usize,
    pub mean_key_length: f64,
    /// Pooled `n * key bits / delivered signals` over trials that did not abort.
    pub efficiency: Option<f64>,
    /// Mean usable fraction over trials where it is defined.
    pub usable_fraction: Option<f64>,
}

impl RunSummary {
    fn collect(n: usize, reports: &[RunReport]) -> RunSummary {
        let trials = reports.len();
        let aborted = reports.iter().filter(|r| r.aborted).count();
        let completed: Vec<&RunReport> = reports.iter().filter(|r| !r.aborted).collect();
        let total_key_bits: usize = completed.iter().map(|r| r.key_length).sum();
        let delivered: usize = completed.iter().map(|r| r.signal_photons_delivered).sum();
        let fractions: Vec<f64> = reports.iter().filter_map(|r| r.usable_fraction).collect();
        RunSummary {
            trials,
            aborted,
            abort_fraction: if trials == 0 { 0.0 } else { aborted as f64 / trials as f64 },
            error_free: reports.iter().all(RunReport::error_free),
            keys_agree: completed.iter().all(|r| r.bob_xor_key == r.alice_combined_bits),
            total_key_bits,
            mean_key_length: if completed.is_empty() { 0.0 } else { total_key_bits as f64 / completed.len() as f64 },
            efficiency: (delivered > 0).then(|| (n * total_key_bits) as f64 / delivered as f64),
            usable_fraction: (!fractions.is_empty()).then(|| fractions.iter().sum::<f64>() / fractions.len() as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub summary: RunSummary,
    pub detection: DetectionStats,
    pub runs: Vec<RunReport>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialise to JSON")
    }

    /// One header line and one line per trial.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "trial,aborted,abort_stage,key_length,sifted_count,dropped_blocks,bob_check_error_rate,final_check_error_rate,efficiency,usable_fraction\n",
        );
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for (k, r) in self.runs.iter().enumerate() {
            let _ = writeln!(
                out,
                "{k},{},{},{},{},{},{},{},{},{}",
                r.aborted,
                r.abort_stage.map(|s| s.to_string()).unwrap_or_default(),
                r.key_length,
                r.sifted_count,
                r.dropped_blocks,
                opt(r.bob_check_error_rate),
                opt(r.final_check_error_rate),
                opt(r.efficiency),
                opt(r.usable_fraction),
            );
        }
        out
    }
}

/// Runs every trial of the experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    if cfg.trials == 0 {
        return Err(ExperimentError::NoTrials);
    }
    let campaign = run_campaign(&cfg.protocol, cfg.channel, &cfg.attack, cfg.trials)?;
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        summary: RunSummary::collect(cfg.protocol.n, &campaign.reports),
        detection: campaign.stats,
        runs: campaign.reports,
    })
}

/// Key yield under one memory mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeEfficiency {
    pub memory_mode: MemoryMode,
    pub usable_fraction: Option<f64>,
    pub efficiency: Option<f64>,
    pub mean_key_length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub schema_version: u32,
    pub block_size: usize,
    pub trials: usize,
    /// Expected efficiency with quantum memory: every Bob's position in a
    /// block must escape his check, and the block must escape the final check.
    pub expected_quantum_memory_efficiency: f64,
    pub quantum_memory: ModeEfficiency,
    pub measure_immediately: ModeEfficiency,
}

/// Runs the same honest configuration with and without quantum memory.
/// A block size of zero yields a report with every measured value `null`.
pub fn compare_memory_modes(cfg: &ProtocolConfig, trials: usize) -> Result<EfficiencyReport, ExperimentError> {
    if trials == 0 {
        return Err(ExperimentError::NoTrials);
    }
    let expected = (1.0 - cfg.check_fraction_bob).powi(cfg.n as i32) * (1.0 - cfg.check_fraction_final);
    let mode = |memory_mode: MemoryMode| -> Result<ModeEfficiency, ExperimentError> {
        if cfg.block_size == 0 {
            return Ok(ModeEfficiency { memory_mode, usable_fraction: None, efficiency: None, mean_key_length: None });
        }
        let protocol = cfg.clone().with_memory_mode(memory_mode);
        let report = run_experiment(&ExperimentConfig::new(protocol, trials))?;
        Ok(ModeEfficiency {
            memory_mode,
            usable_fraction: report.summary.usable_fraction,
            efficiency: report.summary.efficiency,
            mean_key_length: Some(report.summary.mean_key_length),
        })
    };
    Ok(EfficiencyReport {
        schema_version: SCHEMA_VERSION,
        block_size: cfg.block_size,
        trials,
        expected_quantum_memory_efficiency: expected,
        quantum_memory: mode(MemoryMode::QuantumMemory)?,
        measure_immediately: mode(MemoryMode::MeasureImmediately)?,
    })
}
