use std::collections::HashSet;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::adversary::{AnnounceContext, Adversary, Link, SampleOutcome};
use super::config::{ConfigError, MemoryMode, ProtocolConfig};
use super::photon::{IdAllocator, Photon, PhotonId};
use super::records::{implied_label, Announcement, Origin, PartyRecords};
use super::report::{AbortReason, BitString, CheckSummary, RunReport, Stage};
use super::ProtocolError;
use crate::attacks::ChannelModel;
use crate::label::StateLabel;
use crate::quantum::{Basis, OpCode, Trit};
use crate::rng::{for_trial, RandomSource};

/// How an encoding Alice draws her operation codes.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderPolicy {
    kind: PolicyKind,
}

#[derive(Debug, Clone, PartialEq)]
enum PolicyKind {
    Weighted([f64; 3]),
    #[cfg(test)]
    Forced(OpCode),
}

impl EncoderPolicy {
    /// Pauli codes drawn with the given relative weights, rotations uniform.
    /// Every Pauli code must keep positive weight.
    pub fn weighted(pauli: [f64; 3]) -> Result<EncoderPolicy, ConfigError> {
        if pauli.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(ConfigError::PauliWeights(pauli));
        }
        Ok(EncoderPolicy { kind: PolicyKind::Weighted(pauli) })
    }

    pub fn uniform() -> EncoderPolicy {
        EncoderPolicy { kind: PolicyKind::Weighted([1.0; 3]) }
    }

    /// Always the same code. This violates the three-code requirement and only
    /// exists to pin down encodings in tests.
    #[cfg(test)]
    pub(crate) fn forced(op: OpCode) -> EncoderPolicy {
        EncoderPolicy { kind: PolicyKind::Forced(op) }
    }

    fn sample(&self, rng: &mut RandomSource) -> OpCode {
        match &self.kind {
            #[cfg(test)]
            PolicyKind::Forced(op) => *op,
            PolicyKind::Weighted(w) => {
                let total: f64 = w.iter().sum();
                let u = rng.random::<f64>() * total;
                let pauli = if u < w[0] {
                    Trit::ZERO
                } else if u < w[0] + w[1] {
                    Trit::ONE
                } else {
                    Trit::TWO
                };
                let rot = Trit::ALL[rng.random_range(0..3)];
                OpCode::new(pauli, rot)
            }
        }
    }
}

/// Outgoing photons with the encoder's Pauli and rotation trits.
pub type Encoded = (Vec<Photon>, Vec<Trit>, Vec<Trit>);

/// A photon in a Bob's hands, with its position `k` in Alice m's output.
#[derive(Debug, Clone)]
pub struct BobSlot {
    pub position: usize,
    pub photon: Photon,
    /// Basis and outcome of a measurement made on arrival.
    pub early: Option<(Basis, bool)>,
    pub checked: bool,
}

/// A usable measurement after the bases were announced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasuredBit {
    pub position: usize,
    pub id: PhotonId,
    pub sifted: Basis,
    /// Bob's outcome `c_k`.
    pub bit: bool,
    /// The Alices' combined bit `a_k`.
    pub alice_bit: bool,
}

/// Result of one check round at a receiving Alice.
#[derive(Debug)]
pub struct HopOutcome {
    pub summary: CheckSummary,
    pub survivors: Vec<Photon>,
    pub abort: Option<AbortReason>,
}

/// Result of the raw-key step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyExtraction {
    pub bob_xor_key: BitString,
    pub alice_combined_bits: BitString,
    /// Photon identities making up each key bit, `n` per block.
    pub blocks: Vec<Vec<PhotonId>>,
    pub dropped_blocks: usize,
}

/// A finished run.
#[derive(Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub records: PartyRecords,
    pub key: KeyExtraction,
}

/// State of one protocol run. Each step of the protocol is a method; [`Session::run`]
/// executes them in order and stops at the first abort.
pub struct Session<'a> {
    cfg: &'a ProtocolConfig,
    channel: ChannelModel,
    adversary: &'a mut dyn Adversary,
    rng: RandomSource,
    ids: IdAllocator,
    records: PartyRecords,
    policy: EncoderPolicy,
}

impl<'a> Session<'a> {
    pub fn new(
        cfg: &'a ProtocolConfig,
        channel: ChannelModel,
        adversary: &'a mut dyn Adversary,
        rng: RandomSource,
    ) -> Result<Session<'a>, ProtocolError> {
        cfg.validate()?;
        channel.validate()?;
        let policy = EncoderPolicy::weighted(cfg.pauli_weights)?;
        Ok(Session {
            cfg,
            channel,
            adversary,
            rng,
            ids: IdAllocator::default(),
            records: PartyRecords::new(cfg.m, cfg.n),
            policy,
        })
    }

    #[cfg(test)]
    pub(crate) fn set_policy(&mut self, policy: EncoderPolicy) {
        self.policy = policy;
    }

    pub fn records(&self) -> &PartyRecords {
        &self.records
    }

    fn dishonest(&self) -> Option<usize> {
        self.adversary.dishonest_alice()
    }

    /// Alice 1 prepares `n * N` signals with uniform `(a, b)`.
    pub fn alice1_prepare(&mut self) -> Vec<Photon> {
        (0..self.cfg.signal_count())
            .map(|_| {
                let id = self.ids.fresh();
                let label = StateLabel::random(&mut self.rng);
                self.records.prepared(id, 1, Origin::Signal, label);
                Photon::labeled(id, label, false)
            })
            .collect()
    }

    fn transmit(&mut self, link: Link, photons: &mut Vec<Photon>) {
        self.channel.transmit(photons, &mut self.rng);
        self.adversary.on_link(link, photons, &mut self.ids, &mut self.rng);
    }

    /// Checks one sampled photon. `measured` carries an earlier measurement;
    /// otherwise the checker measures now in a random basis. Returns
    /// `(retained, error)`, or `None` when the slot is empty or nobody holds a
    /// record for it.
    fn check_sample(
        &mut self,
        stage: Stage,
        photon: &mut Photon,
        measured: Option<(Basis, bool)>,
        upto: usize,
    ) -> Result<Option<(bool, bool)>, AbortReason> {
        let (basis, bit) = match measured {
            Some(m) => m,
            None => {
                let basis = Basis::random(&mut self.rng);
                match photon.measure(basis, &mut self.rng) {
                    Some(bit) => (basis, bit),
                    None => return Ok(None),
                }
            }
        };
        let mut order = self.records.parties_with_records(photon.id, upto);
        if order.is_empty() {
            return Ok(None);
        }
        order.shuffle(&mut self.rng);
        let dishonest = self.dishonest();
        let mut answers: Vec<(usize, Announcement)> = Vec::with_capacity(order.len());
        for (k, &party) in order.iter().enumerate() {
            let true_record =
                self.records.record_of(photon.id, party).expect("party listed with a record");
            let answer = if Some(party) == dishonest {
                let ctx = AnnounceContext {
                    stage,
                    id: photon.id,
                    party,
                    answered: &answers,
                    remaining: &order[k + 1..],
                    true_record,
                };
                self.adversary.announce(&ctx, &mut self.rng)
            } else {
                Some(true_record)
            };
            match answer {
                Some(a) => answers.push((party, a)),
                None => return Err(AbortReason::AnnouncementRefused),
            }
        }
        let expected = implied_label(&answers).ok_or(AbortReason::AnnouncementRefused)?;
        let retained = expected.basis() == basis;
        let error = retained && expected.bit() != bit;
        self.adversary.observe_sample(SampleOutcome { stage, id: photon.id, retained, error });
        Ok(Some((retained, error)))
    }

    /// Check by Alice `receiver` (`2 <= receiver <= m`) of the photons she
    /// received: filter invisible photons, sample, detect multi-photon signals
    /// on the splitter, and compare measurement results with the predecessors'
    /// announcements.
    pub fn hop_check(&mut self, receiver: usize, incoming: Vec<Photon>) -> HopOutcome {
        let stage = Stage::for_hop(receiver);
        let mut summary = CheckSummary::new(stage, receiver);
        let mut survivors = Vec::with_capacity(incoming.len());
        let skip_check = self.dishonest() == Some(receiver);
        let mut abort = None;
        for mut photon in incoming {
            // lost slots are announced and dropped; invisible photons never
            // pass the filter
            if photon.is_vacuum() || photon.invisible {
                continue;
            }
            if skip_check || abort.is_some() || !self.rng.random_bool(self.cfg.check_fraction_hop) {
                survivors.push(photon);
                continue;
            }
            summary.sampled += 1;
            if photon.extra_copies > 0 {
                abort = Some(AbortReason::MultiPhotonDetected);
                continue;
            }
            match self.check_sample(stage, &mut photon, None, receiver - 1) {
                Ok(Some((retained, error))) => {
                    summary.retained += retained as usize;
                    summary.errors += error as usize;
                }
                Ok(None) => {}
                Err(reason) => abort = Some(reason),
            }
        }
        summary.finish(self.cfg.error_threshold);
        if abort.is_none() && summary.aborted {
            abort = Some(AbortReason::ErrorRateExceeded);
        }
        summary.aborted = abort.is_some();
        HopOutcome { summary, survivors, abort }
    }

    fn insert_decoys(&mut self, alice: usize, photons: Vec<Photon>, count: usize, origin: Origin) -> Vec<Photon> {
        if count == 0 {
            return photons;
        }
        let total = photons.len() + count;
        let mut slots = index::sample(&mut self.rng, total, count).into_vec();
        slots.sort_unstable();
        let mut out = Vec::with_capacity(total);
        let mut slots = slots.into_iter().peekable();
        let mut rest = photons.into_iter();
        for k in 0..total {
            if slots.peek() == Some(&k) {
                slots.next();
                let id = self.ids.fresh();
                let label = StateLabel::random(&mut self.rng);
                self.records.prepared(id, alice, origin, label);
                out.push(Photon::labeled(id, label, true));
            } else {
                out.push(rest.next().expect("slot count matches"));
            }
        }
        out
    }

    /// Alice `i` encodes every photon with a random code, then inserts her
    /// decoys at random positions. Alice m also pads the sequence to a
    /// multiple of `n`. Returns the outgoing photons and her trit strings
    /// `(A_i, B_i)` over the photons she encoded.
    pub fn alice_encode(
        &mut self,
        i: usize,
        mut photons: Vec<Photon>,
    ) -> Result<Encoded, ConfigError> {
        if !(2..=self.cfg.m).contains(&i) {
            return Err(ConfigError::AliceIndex { index: i, m: self.cfg.m });
        }
        let mut paulis = Vec::with_capacity(photons.len());
        let mut rots = Vec::with_capacity(photons.len());
        for photon in &mut photons {
            let op = self.policy.sample(&mut self.rng);
            photon.apply(op);
            self.records.encoded(photon.id, i, op);
            paulis.push(op.pauli);
            rots.push(op.rot);
        }
        let decoys = self.cfg.decoy_counts[i - 2];
        let mut photons = self.insert_decoys(i, photons, decoys, Origin::Decoy { by: i });
        if i == self.cfg.m {
            let n = self.cfg.n;
            let pad = (n - photons.len() % n) % n;
            for _ in 0..pad {
                let id = self.ids.fresh();
                let label = StateLabel::random(&mut self.rng);
                self.records.prepared(id, i, Origin::Padding, label);
                photons.push(Photon::labeled(id, label, true));
            }
        }
        Ok((photons, paulis, rots))
    }

    /// The Bobs' check: each Bob samples his photons independently, and the
    /// Alices announce per sample in a fresh random order.
    pub fn bob_check(&mut self, bobs: &mut [Vec<BobSlot>]) -> (CheckSummary, Option<AbortReason>) {
        let mut summary = CheckSummary::new(Stage::M5, 0);
        let mut abort = None;
        let m = self.cfg.m;
        for slots in bobs.iter_mut() {
            for slot in slots.iter_mut() {
                if slot.photon.is_vacuum() || !self.rng.random_bool(self.cfg.check_fraction_bob) {
                    continue;
                }
                slot.checked = true;
                if abort.is_some() {
                    continue;
                }
                summary.sampled += 1;
                match self.check_sample(Stage::M5, &mut slot.photon, slot.early, m) {
                    Ok(Some((retained, error))) => {
                        summary.retained += retained as usize;
                        summary.errors += error as usize;
                    }
                    Ok(None) => {}
                    Err(reason) => abort = Some(reason),
                }
            }
        }
        summary.finish(self.cfg.error_threshold);
        if abort.is_none() && summary.aborted {
            abort = Some(AbortReason::ErrorRateExceeded);
        }
        summary.aborted = abort.is_some();
        (summary, abort)
    }

    /// Decoy and padding positions are discarded, the bases are announced, and
    /// each Bob obtains a bit for every unchecked signal he can use. Returns the
    /// bits per Bob and the number of candidate signal positions.
    pub fn announce_and_measure(&mut self, bobs: &mut [Vec<BobSlot>]) -> (Vec<Vec<MeasuredBit>>, usize) {
        let mut candidates = 0;
        let mut out = Vec::with_capacity(bobs.len());
        for slots in bobs.iter_mut() {
            let mut bits = Vec::new();
            for slot in slots.iter_mut() {
                if slot.checked || slot.photon.is_vacuum() {
                    continue;
                }
                if self.records.origin(slot.photon.id) != Some(Origin::Signal) {
                    continue;
                }
                let combined = self.records.combined_label(slot.photon.id).expect("signal has records");
                candidates += 1;
                let sifted = combined.basis();
                let bit = match (self.cfg.memory_mode, slot.early) {
                    (MemoryMode::MeasureImmediately, Some((guess, bit))) => (guess == sifted).then_some(bit),
                    _ => slot.photon.measure(sifted, &mut self.rng),
                };
                if let Some(bit) = bit {
                    bits.push(MeasuredBit {
                        position: slot.position,
                        id: slot.photon.id,
                        sifted,
                        bit,
                        alice_bit: combined.bit(),
                    });
                }
            }
            out.push(bits);
        }
        (out, candidates)
    }

    /// The Alices pick random blocks `j_r` and everyone compares `a_k` with
    /// `c_k` on their positions. Returns the summary and the unchecked bits.
    pub fn final_check(&mut self, bits: Vec<Vec<MeasuredBit>>, blocks: usize) -> (CheckSummary, Vec<Vec<MeasuredBit>>) {
        let selected: Vec<bool> =
            (0..blocks).map(|_| self.rng.random_bool(self.cfg.check_fraction_final)).collect();
        let n = self.cfg.n;
        let mut summary = CheckSummary::new(Stage::M7, 0);
        let unchecked = bits
            .into_iter()
            .map(|per_bob| {
                per_bob
                    .into_iter()
                    .filter(|b| {
                        if selected[b.position / n] {
                            summary.sampled += 1;
                            summary.retained += 1;
                            summary.errors += (b.bit != b.alice_bit) as usize;
                            false
                        } else {
                            true
                        }
                    })
                    .collect()
            })
            .collect();
        summary.finish(self.cfg.error_threshold);
        (summary, unchecked)
    }

    /// Runs the whole protocol.
    pub fn run(mut self) -> Result<RunOutcome, ProtocolError> {
        let cfg = self.cfg;
        let mut report = RunReport::empty(cfg.signal_count());
        let mut photons = self.alice1_prepare();
        if self.dishonest() == Some(1) {
            self.adversary.on_outgoing(1, &mut photons, &mut self.rng);
        }

        for i in 2..=cfg.m {
            self.transmit(Link::ToAlice(i), &mut photons);
            let hop = self.hop_check(i, photons);
            report.per_hop_error_rates.push(hop.summary.error_rate);
            report.checks.push(hop.summary);
            if let Some(reason) = hop.abort {
                return Ok(self.aborted(report, Stage::for_hop(i), reason));
            }
            let (encoded, _, _) = self.alice_encode(i, hop.survivors)?;
            photons = encoded;
            if self.dishonest() == Some(i) {
                self.adversary.on_outgoing(i, &mut photons, &mut self.rng);
            }
        }

        self.transmit(Link::ToBobs, &mut photons);
        report.photons_to_bobs = photons.len();
        report.signal_photons_delivered = photons
            .iter()
            .filter(|p| !p.is_vacuum() && self.records.origin(p.id) == Some(Origin::Signal))
            .count();
        let mut bobs = distribute(photons, cfg.n)?
            .into_iter()
            .map(|list| {
                list.into_iter()
                    .map(|(position, photon)| BobSlot { position, photon, early: None, checked: false })
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>();
        let blocks = report.photons_to_bobs / cfg.n;

        if cfg.memory_mode == MemoryMode::MeasureImmediately {
            for slot in bobs.iter_mut().flatten() {
                let basis = Basis::random(&mut self.rng);
                slot.early = slot.photon.measure(basis, &mut self.rng).map(|bit| (basis, bit));
            }
        }

        let (summary, abort) = self.bob_check(&mut bobs);
        report.bob_check_error_rate = Some(summary.error_rate);
        report.checks.push(summary);
        if let Some(reason) = abort {
            return Ok(self.aborted(report, Stage::M5, reason));
        }

        let (bits, candidates) = self.announce_and_measure(&mut bobs);
        report.sifted_count = bits.iter().map(Vec::len).sum();
        report.usable_fraction =
            (candidates > 0).then(|| report.sifted_count as f64 / candidates as f64);

        let (summary, unchecked) = self.final_check(bits, blocks);
        report.final_check_error_rate = Some(summary.error_rate);
        report.check_count = summary.retained;
        let final_abort = summary.aborted;
        report.checks.push(summary);
        if final_abort {
            return Ok(self.aborted(report, Stage::M7, AbortReason::ErrorRateExceeded));
        }

        let key = extract_keys(&unchecked, cfg.n, blocks);
        report.key_length = key.bob_xor_key.len();
        report.dropped_blocks = key.dropped_blocks;
        report.bob_xor_key = key.bob_xor_key.clone();
        report.alice_combined_bits = key.alice_combined_bits.clone();
        report.efficiency = (report.signal_photons_delivered > 0)
            .then(|| (cfg.n * report.key_length) as f64 / report.signal_photons_delivered as f64);

        // predictions are scored on the positions that made it into the key
        let in_key: HashSet<PhotonId> = key.blocks.iter().flatten().copied().collect();
        for b in unchecked.iter().flatten().filter(|b| in_key.contains(&b.id)) {
            if let Some(guess) = self.adversary.predict_bit(b.id, b.sifted, &mut self.rng) {
                report.attacker_predictions += 1;
                report.attacker_correct += (guess == b.bit) as usize;
            }
        }

        Ok(RunOutcome { report, records: self.records, key })
    }

    fn aborted(self, mut report: RunReport, stage: Stage, reason: AbortReason) -> RunOutcome {
        report.aborted = true;
        report.abort_stage = Some(stage);
        report.abort_reason = Some(reason);
        RunOutcome { report, records: self.records, key: KeyExtraction::default() }
    }
}

/// Splits Alice m's output among the Bobs: Bob `l` (0-based) receives the
/// positions `k` with `k mod n == l`.
pub fn distribute(photons: Vec<Photon>, n: usize) -> Result<Vec<Vec<(usize, Photon)>>, ProtocolError> {
    if n == 0 || !photons.len().is_multiple_of(n) {
        return Err(ProtocolError::Internal(format!(
            "{} photons cannot be split evenly among {n} Bobs",
            photons.len()
        )));
    }
    let mut bobs: Vec<Vec<(usize, Photon)>> =
        (0..n).map(|_| Vec::with_capacity(photons.len() / n)).collect();
    for (k, photon) in photons.into_iter().enumerate() {
        bobs[k % n].push((k, photon));
    }
    Ok(bobs)
}

/// XORs the Bobs' bits block by block over the unchecked positions. A block
/// missing any Bob's bit (checked, lost, decoy, or unusable) is dropped.
pub fn extract_keys(bits: &[Vec<MeasuredBit>], n: usize, blocks: usize) -> KeyExtraction {
    let mut table: Vec<Vec<Option<MeasuredBit>>> = vec![vec![None; n]; blocks];
    for b in bits.iter().flatten() {
        let j = b.position / n;
        if j < blocks {
            table[j][b.position % n] = Some(*b);
        }
    }
    let mut key = KeyExtraction::default();
    for row in table {
        if row.iter().all(Option::is_some) {
            let row: Vec<MeasuredBit> = row.into_iter().flatten().collect();
            key.bob_xor_key.0.push(row.iter().fold(false, |acc, b| acc ^ b.bit));
            key.alice_combined_bits.0.push(row.iter().fold(false, |acc, b| acc ^ b.alice_bit));
            key.blocks.push(row.iter().map(|b| b.id).collect());
        } else {
            key.dropped_blocks += 1;
        }
    }
    key
}

/// Runs trial 0 of `cfg.seed`.
pub fn run_protocol(
    cfg: &ProtocolConfig,
    channel: ChannelModel,
    adversary: &mut dyn Adversary,
) -> Result<RunOutcome, ProtocolError> {
    run_trial(cfg, channel, adversary, 0)
}

/// Runs the given trial of `cfg.seed`.
pub fn run_trial(
    cfg: &ProtocolConfig,
    channel: ChannelModel,
    adversary: &mut dyn Adversary,
    trial: u64,
) -> Result<RunOutcome, ProtocolError> {
    Session::new(cfg, channel, adversary, for_trial(cfg.seed, trial))?.run()
}

/// An honest run over a perfect channel.
pub fn run_honest(cfg: &ProtocolConfig) -> Result<RunReport, ProtocolError> {
    run_protocol(cfg, ChannelModel::Identity, &mut super::Passive).map(|o| o.report)
}
