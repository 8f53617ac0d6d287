use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::agents::{encoding_class_accuracy, AttackError, AttackKind, AttackStrategy, AttackTally, PairSpec};
use super::channel::ChannelModel;
use crate::protocol::{run_trial, ProtocolConfig, ProtocolError, RunReport, Stage};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CampaignError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error("{0} is not a tampering attack")]
    NotTampering(&'static str),
}

/// Aggregate over a batch of trials.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectionStats {
    pub attack: String,
    pub trials: usize,
    pub abort_count: usize,
    pub aborts_by_stage: BTreeMap<Stage, usize>,
    /// Retained samples and errors summed over all checks of a stage and all
    /// trials; the mean error rate is their ratio.
    pub retained_by_stage: BTreeMap<Stage, usize>,
    pub errors_by_stage: BTreeMap<Stage, usize>,
    pub mean_error_rate_by_stage: BTreeMap<Stage, f64>,
    /// Fraction of raw key positions, over trials that did not abort, whose
    /// bit the attacker predicted correctly. `None` when she made no guesses.
    pub attacker_info_gain: Option<f64>,
    pub attacker_predictions: usize,
    /// Key bits produced by trials that did not abort.
    pub key_bits: usize,
    /// Pauli-code classification accuracy available from the entangled pair.
    pub encoding_class_accuracy: Option<f64>,
    /// Error rates on samples answered by a dishonest Alice after all of her
    /// predecessors (`informed`) or before some of them (`blind`).
    pub informed_error_rate: Option<f64>,
    pub blind_error_rate: Option<f64>,
    pub informed_retained: usize,
    pub blind_retained: usize,
    pub tampered_photons: usize,
    pub tampered_passed: usize,
    pub invisible_inserted: usize,
    pub invisible_passed: usize,
}

impl DetectionStats {
    /// Pooled error rate of everything the dishonest Alice answered for.
    pub fn fake_error_rate(&self) -> Option<f64> {
        let retained = self.informed_retained + self.blind_retained;
        let errors = self.informed_error_rate.unwrap_or(0.0) * self.informed_retained as f64
            + self.blind_error_rate.unwrap_or(0.0) * self.blind_retained as f64;
        (retained > 0).then(|| errors / retained as f64)
    }

    pub fn abort_fraction(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.abort_count as f64 / self.trials as f64
        }
    }

    pub fn mean_error_rate(&self, stage: Stage) -> Option<f64> {
        self.mean_error_rate_by_stage.get(&stage).copied()
    }

    fn collect(strategy: &AttackStrategy, reports: &[RunReport], tallies: &[AttackTally]) -> DetectionStats {
        let mut stats = DetectionStats { attack: strategy.name().to_owned(), trials: reports.len(), ..Default::default() };
        let mut correct = 0;
        for r in reports {
            if r.aborted {
                stats.abort_count += 1;
                if let Some(stage) = r.abort_stage {
                    *stats.aborts_by_stage.entry(stage).or_default() += 1;
                }
            } else {
                stats.key_bits += r.key_length;
                stats.attacker_predictions += r.attacker_predictions;
                correct += r.attacker_correct;
            }
            for c in &r.checks {
                *stats.retained_by_stage.entry(c.stage).or_default() += c.retained;
                *stats.errors_by_stage.entry(c.stage).or_default() += c.errors;
            }
        }
        for (stage, &retained) in &stats.retained_by_stage {
            let errors = stats.errors_by_stage[stage];
            let rate = if retained == 0 { 0.0 } else { errors as f64 / retained as f64 };
            stats.mean_error_rate_by_stage.insert(*stage, rate);
        }
        stats.attacker_info_gain =
            (stats.attacker_predictions > 0).then(|| correct as f64 / stats.attacker_predictions as f64);

        let mut tally = AttackTally::default();
        for t in tallies {
            tally.merge(t);
        }
        let rate = |errors: usize, retained: usize| (retained > 0).then(|| errors as f64 / retained as f64);
        stats.informed_retained = tally.informed_retained;
        stats.blind_retained = tally.blind_retained;
        stats.informed_error_rate = rate(tally.informed_errors, tally.informed_retained);
        stats.blind_error_rate = rate(tally.blind_errors, tally.blind_retained);
        stats.tampered_photons = tally.tampered;
        stats.tampered_passed = tally.tampered_passed;
        stats.invisible_inserted = tally.invisible_inserted;
        stats.invisible_passed = tally.invisible_passed;
        if let AttackKind::EntangledFake { pair } = strategy.kind {
            stats.encoding_class_accuracy = encoding_class_accuracy(&pair).ok();
        }
        stats
    }
}

/// Per-trial reports plus their aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    pub stats: DetectionStats,
    pub reports: Vec<RunReport>,
}

/// Runs trials `0..trials` of `cfg.seed` in parallel. Results are gathered in
/// trial order, so the outcome does not depend on scheduling.
pub fn run_campaign(
    cfg: &ProtocolConfig,
    channel: ChannelModel,
    strategy: &AttackStrategy,
    trials: usize,
) -> Result<Campaign, CampaignError> {
    cfg.validate().map_err(ProtocolError::from)?;
    strategy.agent(cfg.m)?;
    let results: Vec<(RunReport, AttackTally)> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut agent = strategy.agent(cfg.m)?;
            let outcome = run_trial(cfg, channel, &mut agent, trial)?;
            Ok((outcome.report, agent.tally()))
        })
        .collect::<Result<_, CampaignError>>()?;
    let (reports, tallies): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(Campaign { stats: DetectionStats::collect(strategy, &reports, &tallies), reports })
}

/// An outside eavesdropper on the link into Alice `target`, or on the link to
/// the Bobs when `target` is `None`.
pub fn run_intercept_resend(
    cfg: &ProtocolConfig,
    target: Option<usize>,
    trials: usize,
) -> Result<DetectionStats, CampaignError> {
    let strategy = AttackStrategy::new(AttackKind::InterceptResend { fraction: 1.0 }, target);
    Ok(run_campaign(cfg, ChannelModel::Identity, &strategy, trials)?.stats)
}

pub fn run_single_photon_fake(
    cfg: &ProtocolConfig,
    attacker: usize,
    trials: usize,
) -> Result<DetectionStats, CampaignError> {
    let strategy = AttackStrategy::new(AttackKind::SinglePhotonFake, Some(attacker));
    Ok(run_campaign(cfg, ChannelModel::Identity, &strategy, trials)?.stats)
}

pub fn run_entangled_fake(
    cfg: &ProtocolConfig,
    pair: PairSpec,
    attacker: usize,
    trials: usize,
) -> Result<DetectionStats, CampaignError> {
    let strategy = AttackStrategy::new(AttackKind::EntangledFake { pair }, Some(attacker));
    Ok(run_campaign(cfg, ChannelModel::Identity, &strategy, trials)?.stats)
}

/// Invisible probes or multi-photon signals on the link into Alice `target`.
pub fn run_invisible_or_trojan(
    cfg: &ProtocolConfig,
    kind: AttackKind,
    target: usize,
    trials: usize,
) -> Result<DetectionStats, CampaignError> {
    if !matches!(kind, AttackKind::InvisibleProbe { .. } | AttackKind::TrojanMultiphoton { .. }) {
        return Err(CampaignError::NotTampering(AttackStrategy::new(kind, None).name()));
    }
    let strategy = AttackStrategy::new(kind, Some(target));
    Ok(run_campaign(cfg, ChannelModel::Identity, &strategy, trials)?.stats)
}
