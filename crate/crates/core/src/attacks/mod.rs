//! Channel noise, attack strategies and Monte Carlo detection statistics.

mod agents;
mod campaign;
mod channel;

pub use agents::{
    encoding_class_accuracy, sample_encoding_class_accuracy, AttackAgent, AttackError, AttackKind,
    AttackStrategy, AttackTally, PairModel, PairSpec,
};
pub use campaign::{
    run_campaign, run_entangled_fake, run_intercept_resend, run_invisible_or_trojan,
    run_single_photon_fake, Campaign, CampaignError, DetectionStats,
};
pub use channel::{expected_depolarizing_qber, ChannelModel};
