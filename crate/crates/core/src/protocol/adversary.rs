use serde::{Deserialize, Serialize};

use super::photon::{IdAllocator, Photon, PhotonId};
use super::records::Announcement;
use super::report::Stage;
use crate::quantum::Basis;
use crate::rng::RandomSource;

/// A quantum link, named by its receiving end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    /// Alice `i - 1` to Alice `i`, `2 <= i <= m`.
    ToAlice(usize),
    /// Alice m to the Bobs.
    ToBobs,
}

/// Everything a dishonest Alice sees when asked to announce her record for a
/// checked photon.
#[derive(Debug)]
pub struct AnnounceContext<'a> {
    pub stage: Stage,
    pub id: PhotonId,
    /// The dishonest Alice being asked.
    pub party: usize,
    /// Announcements already made for this sample, in the order they were made.
    pub answered: &'a [(usize, Announcement)],
    /// Parties still to answer after her.
    pub remaining: &'a [usize],
    /// What an honest party in her position would say.
    pub true_record: Announcement,
}

/// Public outcome of one checked sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleOutcome {
    pub stage: Stage,
    pub id: PhotonId,
    pub retained: bool,
    pub error: bool,
}

/// Hooks through which an attack strategy takes part in a run.
///
/// Every method has a passive default, so an implementation only overrides what
/// it attacks. The simulator never lets an adversary see other parties'
/// records except through public announcements.
pub trait Adversary {
    /// Index of the dishonest Alice, if the adversary is one of the parties.
    fn dishonest_alice(&self) -> Option<usize> {
        None
    }

    /// Called with the photons on `link` after channel noise, before the
    /// receiver sees them.
    fn on_link(
        &mut self,
        _link: Link,
        _photons: &mut Vec<Photon>,
        _ids: &mut IdAllocator,
        _rng: &mut RandomSource,
    ) {
    }

    /// Called with the dishonest Alice's outgoing photons once she has encoded
    /// them and inserted her decoys.
    fn on_outgoing(&mut self, _alice: usize, _photons: &mut Vec<Photon>, _rng: &mut RandomSource) {}

    /// The dishonest Alice's announcement. `None` refuses to answer.
    fn announce(&mut self, ctx: &AnnounceContext<'_>, _rng: &mut RandomSource) -> Option<Announcement> {
        Some(ctx.true_record)
    }

    /// Observes the published result of a checked sample.
    fn observe_sample(&mut self, _outcome: SampleOutcome) {}

    /// Guess of the raw bit a Bob obtained at a key position, made after the
    /// sifted basis has been announced.
    fn predict_bit(&mut self, _id: PhotonId, _sifted: Basis, _rng: &mut RandomSource) -> Option<bool> {
        None
    }
}

/// No attack.
#[derive(Debug, Default, Clone, Copy)]
pub struct Passive;

impl Adversary for Passive {}
