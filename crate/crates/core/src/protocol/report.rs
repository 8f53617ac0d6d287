use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Protocol stage at which a check (and possibly an abort) happens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage {
    /// Alice 2's check of Alice 1's photons.
    M2,
    /// Alice i's check, `i >= 3`.
    M3,
    /// The Bobs' check.
    M5,
    /// The final comparison of measured bits.
    M7,
}

impl Stage {
    pub fn for_hop(receiver: usize) -> Stage {
        if receiver <= 2 {
            Stage::M2
        } else {
            Stage::M3
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortReason {
    ErrorRateExceeded,
    MultiPhotonDetected,
    AnnouncementRefused,
}

/// Outcome of one check round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub stage: Stage,
    /// Checking party: Alice index for hop checks, 0 for checks by the Bobs or
    /// by everyone.
    pub party: usize,
    pub sampled: usize,
    pub retained: usize,
    pub errors: usize,
    pub error_rate: f64,
    pub aborted: bool,
}

impl CheckSummary {
    pub(crate) fn new(stage: Stage, party: usize) -> CheckSummary {
        CheckSummary { stage, party, sampled: 0, retained: 0, errors: 0, error_rate: 0.0, aborted: false }
    }

    pub(crate) fn finish(&mut self, threshold: f64) {
        self.error_rate =
            if self.retained == 0 { 0.0 } else { self.errors as f64 / self.retained as f64 };
        self.aborted |= self.error_rate > threshold;
    }
}

/// A bit string serialised as a run of `0` and `1` characters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString(pub Vec<bool>);

impl BitString {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of positions where the two strings differ; extra tail bits count
    /// as differences.
    pub fn hamming(&self, other: &BitString) -> usize {
        let common = self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count();
        common + self.len().abs_diff(other.len())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for BitString {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(format!("invalid bit character `{other}`")),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitString)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Transcript of one protocol run.
///
/// Error rates of checks that never ran (because an earlier stage aborted) are
/// `null`. `efficiency` is the fraction of signal photons delivered to the Bobs
/// that ended up in the raw key (`n * key_length / signal_photons_delivered`);
/// `usable_fraction` is the fraction of unchecked signals whose measurement was
/// usable after the bases were announced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub aborted: bool,
    pub abort_stage: Option<Stage>,
    pub abort_reason: Option<AbortReason>,
    pub per_hop_error_rates: Vec<f64>,
    pub bob_check_error_rate: Option<f64>,
    pub final_check_error_rate: Option<f64>,
    pub checks: Vec<CheckSummary>,
    pub signal_photons_sent: usize,
    pub signal_photons_delivered: usize,
    pub photons_to_bobs: usize,
    pub sifted_count: usize,
    pub check_count: usize,
    pub dropped_blocks: usize,
    pub key_length: usize,
    pub alice_combined_bits: BitString,
    pub bob_xor_key: BitString,
    pub usable_fraction: Option<f64>,
    pub efficiency: Option<f64>,
    /// Raw key bits the adversary predicted correctly, and how many it tried.
    pub attacker_correct: usize,
    pub attacker_predictions: usize,
}

impl RunReport {
    pub(crate) fn empty(signals: usize) -> RunReport {
        RunReport {
            aborted: false,
            abort_stage: None,
            abort_reason: None,
            per_hop_error_rates: Vec::new(),
            bob_check_error_rate: None,
            final_check_error_rate: None,
            checks: Vec::new(),
            signal_photons_sent: signals,
            signal_photons_delivered: 0,
            photons_to_bobs: 0,
            sifted_count: 0,
            check_count: 0,
            dropped_blocks: 0,
            key_length: 0,
            alice_combined_bits: BitString::default(),
            bob_xor_key: BitString::default(),
            usable_fraction: None,
            efficiency: None,
            attacker_correct: 0,
            attacker_predictions: 0,
        }
    }

    /// True when every check that ran found no error at all.
    pub fn error_free(&self) -> bool {
        self.checks.iter().all(|c| c.errors == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_strings_serialise_as_text() {
        let b = BitString(vec![true, false, true, true]);
        assert_eq!(serde_json::to_string(&b).unwrap(), "\"1011\"");
        let back: BitString = serde_json::from_str("\"1011\"").unwrap();
        assert_eq!(back, b);
        assert!(serde_json::from_str::<BitString>("\"10x\"").is_err());
        assert_eq!(b.hamming(&BitString(vec![true, true])), 1 + 2);
    }

    #[test]
    fn check_summary_rates() {
        let mut c = CheckSummary::new(Stage::M5, 0);
        c.finish(0.127);
        assert_eq!(c.error_rate, 0.0);
        assert!(!c.aborted);
        c.retained = 10;
        c.errors = 2;
        c.finish(0.127);
        assert!((c.error_rate - 0.2).abs() < 1e-15);
        assert!(c.aborted);
        assert_eq!(Stage::for_hop(2), Stage::M2);
        assert_eq!(Stage::for_hop(4), Stage::M3);
    }
}
