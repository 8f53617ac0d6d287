use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::label::StateLabel;
use crate::protocol::{ConfigError, Payload, Photon};

/// Noise on every quantum link.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelModel {
    #[default]
    Identity,
    /// With probability `p` the photon is replaced by one of the six states,
    /// chosen uniformly. The six states average to the maximally mixed state,
    /// so this is the depolarizing channel of strength `p`.
    Depolarizing { p: f64 },
    /// With probability `p_loss` the photon is lost and its slot arrives empty.
    Lossy { p_loss: f64 },
}

impl ChannelModel {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let (name, value) = match *self {
            ChannelModel::Identity => return Ok(()),
            ChannelModel::Depolarizing { p } => ("p", p),
            ChannelModel::Lossy { p_loss } => ("p_loss", p_loss),
        };
        if (0.0..=1.0).contains(&value) {
            Ok(())
        } else {
            Err(ConfigError::Probability { name, value })
        }
    }

    pub fn transmit<R: Rng + ?Sized>(&self, photons: &mut [Photon], rng: &mut R) {
        match *self {
            ChannelModel::Identity => {}
            ChannelModel::Depolarizing { p } => {
                for photon in photons.iter_mut().filter(|ph| !ph.is_vacuum()) {
                    if rng.random_bool(p) {
                        // entanglement with anything left behind is lost too
                        photon.payload = Payload::Labeled(StateLabel::random(rng));
                    }
                }
            }
            ChannelModel::Lossy { p_loss } => {
                for photon in photons.iter_mut() {
                    if rng.random_bool(p_loss) {
                        photon.payload = Payload::Vacuum;
                        photon.extra_copies = 0;
                    }
                }
            }
        }
    }
}

/// Check error rate for a photon that crossed `links` depolarizing links of
/// strength `p`, when it is measured in the basis it is expected to be in.
pub fn expected_depolarizing_qber(p: f64, links: u32) -> f64 {
    (1.0 - (1.0 - p).powi(links as i32)) / 2.0
}
