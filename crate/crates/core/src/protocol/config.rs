use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Defaults for the sampling fractions of the three check rounds.
pub const DEFAULT_HOP_FRACTION: f64 = 0.1;
pub const DEFAULT_BOB_FRACTION: f64 = 0.1;
pub const DEFAULT_FINAL_FRACTION: f64 = 0.05;

/// Abort threshold on the check error rate (one-way six-state security bound).
pub const DEFAULT_ERROR_THRESHOLD: f64 = 0.127;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("need at least two Alices, got m = {0}")]
    TooFewAlices(usize),
    #[error("need at least one Bob, got n = {0}")]
    NoBobs(usize),
    #[error("block size N must be positive")]
    EmptyBlock,
    #[error("expected {expected} decoy counts (one per Alice 2..m), got {found}")]
    DecoyCounts { expected: usize, found: usize },
    #[error("{name} must lie in [0, 1], got {value}")]
    Probability { name: &'static str, value: f64 },
    #[error("encoder must use all three Pauli codes with positive weight, got {0:?}")]
    PauliWeights([f64; 3]),
    #[error("Alice index {index} out of range 1..={m}")]
    AliceIndex { index: usize, m: usize },
}

/// Whether Bobs hold their photons until the bases are announced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryMode {
    #[default]
    QuantumMemory,
    MeasureImmediately,
}

impl std::str::FromStr for MemoryMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "quantum_memory" | "quantum-memory" | "memory" => Ok(MemoryMode::QuantumMemory),
            "measure_immediately" | "measure-immediately" | "immediate" => {
                Ok(MemoryMode::MeasureImmediately)
            }
            other => Err(format!("unknown memory mode `{other}`")),
        }
    }
}

/// Parameters of one protocol run between `m` Alices and `n` Bobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub m: usize,
    pub n: usize,
    /// Key-block length per Bob; Alice 1 prepares `n * block_size` signals.
    pub block_size: usize,
    /// Decoys inserted by Alice 2, Alice 3, ..., Alice m.
    pub decoy_counts: Vec<usize>,
    pub check_fraction_hop: f64,
    pub check_fraction_bob: f64,
    /// Fraction of key blocks sacrificed in the final comparison.
    pub check_fraction_final: f64,
    pub error_threshold: f64,
    pub memory_mode: MemoryMode,
    /// Relative weights of `sigma_0, sigma_1, sigma_2` used by every encoder.
    pub pauli_weights: [f64; 3],
    pub seed: u64,
}

impl ProtocolConfig {
    /// A configuration with default check fractions and threshold, and
    /// `n * block_size / 10` decoys per encoding Alice.
    pub fn new(m: usize, n: usize, block_size: usize) -> ProtocolConfig {
        let decoys = n * block_size / 10;
        ProtocolConfig {
            m,
            n,
            block_size,
            decoy_counts: vec![decoys; m.saturating_sub(1)],
            check_fraction_hop: DEFAULT_HOP_FRACTION,
            check_fraction_bob: DEFAULT_BOB_FRACTION,
            check_fraction_final: DEFAULT_FINAL_FRACTION,
            error_threshold: DEFAULT_ERROR_THRESHOLD,
            memory_mode: MemoryMode::QuantumMemory,
            pauli_weights: [1.0, 1.0, 1.0],
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> ProtocolConfig {
        self.seed = seed;
        self
    }

    pub fn with_decoys(mut self, per_alice: usize) -> ProtocolConfig {
        self.decoy_counts = vec![per_alice; self.m.saturating_sub(1)];
        self
    }

    pub fn with_memory_mode(mut self, mode: MemoryMode) -> ProtocolConfig {
        self.memory_mode = mode;
        self
    }

    pub fn with_check_fractions(mut self, hop: f64, bob: f64, fin: f64) -> ProtocolConfig {
        self.check_fraction_hop = hop;
        self.check_fraction_bob = bob;
        self.check_fraction_final = fin;
        self
    }

    /// Number of signal photons Alice 1 prepares.
    pub fn signal_count(&self) -> usize {
        self.n * self.block_size
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.m < 2 {
            return Err(ConfigError::TooFewAlices(self.m));
        }
        if self.n < 1 {
            return Err(ConfigError::NoBobs(self.n));
        }
        if self.block_size == 0 {
            return Err(ConfigError::EmptyBlock);
        }
        if self.decoy_counts.len() != self.m - 1 {
            return Err(ConfigError::DecoyCounts {
                expected: self.m - 1,
                found: self.decoy_counts.len(),
            });
        }
        for (name, value) in [
            ("check_fraction_hop", self.check_fraction_hop),
            ("check_fraction_bob", self.check_fraction_bob),
            ("check_fraction_final", self.check_fraction_final),
            ("error_threshold", self.error_threshold),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::Probability { name, value });
            }
        }
        if self.pauli_weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(ConfigError::PauliWeights(self.pauli_weights));
        }
        Ok(())
    }
}
