use std::collections::HashMap;
use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::label::{solve_op, StateLabel};
use crate::protocol::{
    implied_label, AnnounceContext, Adversary, Announcement, IdAllocator, Link, Payload, Photon,
    PhotonId, SampleOutcome, SharedPair,
};
use crate::quantum::{apply_op, make_pair, measure_second, Basis, OpCode, PureState, QuantumError, C64};
use crate::rng::RandomSource;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttackError {
    #[error("invalid pair state: {0}")]
    Pair(#[from] QuantumError),
    #[error("{attack} needs a dishonest Alice in 2..={m}, got {index:?}")]
    AttackerIndex { attack: &'static str, index: Option<usize>, m: usize },
    #[error("{name} must lie in [0, 1], got {value}")]
    Probability { name: &'static str, value: f64 },
}

/// The unnormalised ancilla vectors of a pair `|0>|alpha> + |1>|beta>`, each
/// complex entry written as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSpec {
    pub alpha: [[f64; 2]; 2],
    pub beta: [[f64; 2]; 2],
}

impl PairSpec {
    /// `(|00> + |11>) / sqrt 2`.
    pub fn epr() -> PairSpec {
        let h = FRAC_1_SQRT_2;
        PairSpec { alpha: [[h, 0.0], [0.0, 0.0]], beta: [[0.0, 0.0], [h, 0.0]] }
    }

    pub fn from_vectors(alpha: [C64; 2], beta: [C64; 2]) -> PairSpec {
        let pack = |v: [C64; 2]| [[v[0].re, v[0].im], [v[1].re, v[1].im]];
        PairSpec { alpha: pack(alpha), beta: pack(beta) }
    }

    pub fn vectors(&self) -> ([C64; 2], [C64; 2]) {
        let unpack = |v: [[f64; 2]; 2]| [C64::new(v[0][0], v[0][1]), C64::new(v[1][0], v[1][1])];
        (unpack(self.alpha), unpack(self.beta))
    }

    pub fn state(&self) -> Result<PureState, QuantumError> {
        let (alpha, beta) = self.vectors();
        make_pair(alpha, beta)
    }
}

/// Which attack to run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackKind {
    #[default]
    None,
    /// Measure each photon in a random basis and resend the outcome state.
    InterceptResend {
        #[serde(default = "one")]
        fraction: f64,
    },
    /// The dishonest Alice replaces every photon she forwards by a photon in a
    /// random state of her choosing.
    SinglePhotonFake,
    /// The dishonest Alice forwards one half of a pair for every photon and
    /// keeps the other half. The pair defaults to EPR.
    EntangledFake {
        #[serde(default = "PairSpec::epr")]
        pair: PairSpec,
    },
    /// Photons the receiver's detectors cannot see, inserted at a given rate
    /// per photon on the link.
    InvisibleProbe {
        #[serde(default = "one")]
        rate: f64,
    },
    /// Extra copies riding along with a fraction of the photons.
    TrojanMultiphoton {
        #[serde(default = "one")]
        fraction: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// An attack together with where it happens.
///
/// For the two fake-signal attacks `attacker_index` names the dishonest Alice
/// (default `m`). For the external attacks it names the Alice whose incoming
/// link is attacked; `None` means the link from Alice m to the Bobs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AttackStrategy {
    #[serde(flatten)]
    pub kind: AttackKind,
    #[serde(default)]
    pub attacker_index: Option<usize>,
}

impl AttackStrategy {
    pub fn none() -> AttackStrategy {
        AttackStrategy::default()
    }

    pub fn new(kind: AttackKind, attacker_index: Option<usize>) -> AttackStrategy {
        AttackStrategy { kind, attacker_index }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            AttackKind::None => "none",
            AttackKind::InterceptResend { .. } => "intercept_resend",
            AttackKind::SinglePhotonFake => "single_photon_fake",
            AttackKind::EntangledFake { .. } => "entangled_fake",
            AttackKind::InvisibleProbe { .. } => "invisible_probe",
            AttackKind::TrojanMultiphoton { .. } => "trojan_multiphoton",
        }
    }

    /// Parses a command-line attack name; parameters take their defaults and
    /// the entangled fake uses an EPR pair.
    pub fn from_name(name: &str) -> Option<AttackKind> {
        Some(match name {
            "none" => AttackKind::None,
            "intercept_resend" => AttackKind::InterceptResend { fraction: 1.0 },
            "single_photon_fake" => AttackKind::SinglePhotonFake,
            "entangled_fake" => AttackKind::EntangledFake { pair: PairSpec::epr() },
            "invisible_probe" => AttackKind::InvisibleProbe { rate: 1.0 },
            "trojan_multiphoton" => AttackKind::TrojanMultiphoton { fraction: 1.0 },
            _ => return None,
        })
    }

    pub const NAMES: [&'static str; 6] = [
        "none",
        "intercept_resend",
        "single_photon_fake",
        "entangled_fake",
        "invisible_probe",
        "trojan_multiphoton",
    ];

    fn link(&self) -> Link {
        self.attacker_index.map_or(Link::ToBobs, Link::ToAlice)
    }

    /// Builds a fresh agent for one trial of a protocol with `m` Alices.
    pub fn agent(&self, m: usize) -> Result<AttackAgent, AttackError> {
        let in_range = |i: Option<usize>| i.filter(|i| (2..=m).contains(i));
        let probability = |name: &'static str, value: f64| {
            if (0.0..=1.0).contains(&value) {
                Ok(value)
            } else {
                Err(AttackError::Probability { name, value })
            }
        };
        let external_alice = |attack| {
            in_range(self.attacker_index).ok_or(AttackError::AttackerIndex {
                attack,
                index: self.attacker_index,
                m,
            })
        };
        let state = match self.kind {
            AttackKind::None => AgentState::Passive,
            AttackKind::InterceptResend { fraction } => {
                let fraction = probability("fraction", fraction)?;
                if self.attacker_index.is_some() && in_range(self.attacker_index).is_none() {
                    return Err(AttackError::AttackerIndex {
                        attack: "intercept_resend",
                        index: self.attacker_index,
                        m,
                    });
                }
                AgentState::Intercept(InterceptResend { link: self.link(), fraction, guesses: HashMap::new() })
            }
            AttackKind::SinglePhotonFake | AttackKind::EntangledFake { .. } => {
                let alice = match self.attacker_index {
                    None => m,
                    Some(_) => in_range(self.attacker_index).ok_or(AttackError::AttackerIndex {
                        attack: self.name(),
                        index: self.attacker_index,
                        m,
                    })?,
                };
                let source = match self.kind {
                    AttackKind::EntangledFake { pair } => FakeSource::Pair(PairModel::new(pair)?),
                    _ => FakeSource::Single,
                };
                AgentState::Fake(FakeSignal { alice, m, source, held: HashMap::new(), pending: HashMap::new() })
            }
            AttackKind::InvisibleProbe { rate } => {
                AgentState::Invisible { target: external_alice("invisible_probe")?, rate: probability("rate", rate)? }
            }
            AttackKind::TrojanMultiphoton { fraction } => AgentState::Trojan {
                target: external_alice("trojan_multiphoton")?,
                fraction: probability("fraction", fraction)?,
            },
        };
        Ok(AttackAgent { state, tally: AttackTally::default() })
    }
}

/// Attack-specific counters gathered over one trial.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AttackTally {
    /// Retained samples where the dishonest Alice answered after all of her
    /// predecessors, and the errors among them.
    pub informed_retained: usize,
    pub informed_errors: usize,
    /// Retained samples where she had to answer before some predecessor.
    pub blind_retained: usize,
    pub blind_errors: usize,
    pub tampered: usize,
    /// Tampered photons that made it past the receiving Alice.
    pub tampered_passed: usize,
    pub invisible_inserted: usize,
    pub invisible_passed: usize,
}

impl AttackTally {
    pub fn merge(&mut self, other: &AttackTally) {
        self.informed_retained += other.informed_retained;
        self.informed_errors += other.informed_errors;
        self.blind_retained += other.blind_retained;
        self.blind_errors += other.blind_errors;
        self.tampered += other.tampered;
        self.tampered_passed += other.tampered_passed;
        self.invisible_inserted += other.invisible_inserted;
        self.invisible_passed += other.invisible_passed;
    }
}

/// One trial's worth of attacker state.
#[derive(Debug)]
pub struct AttackAgent {
    state: AgentState,
    tally: AttackTally,
}

#[derive(Debug)]
enum AgentState {
    Passive,
    Intercept(InterceptResend),
    Fake(FakeSignal),
    Invisible { target: usize, rate: f64 },
    Trojan { target: usize, fraction: f64 },
}

impl AttackAgent {
    pub fn tally(&self) -> AttackTally {
        self.tally
    }
}

#[derive(Debug)]
struct InterceptResend {
    link: Link,
    fraction: f64,
    guesses: HashMap<PhotonId, StateLabel>,
}

#[derive(Debug)]
enum FakeSource {
    Single,
    Pair(PairModel),
}

#[derive(Debug)]
enum Held {
    /// State the photon left in, known or inferred from the ancilla.
    Known(StateLabel),
    Ancilla(SharedPair),
}

#[derive(Debug)]
struct FakeSignal {
    alice: usize,
    m: usize,
    source: FakeSource,
    held: HashMap<PhotonId, Held>,
    /// Whether the last announcement for a photon was made with full knowledge.
    pending: HashMap<PhotonId, bool>,
}

/// What measuring the ancilla of a pair tells about the transmitted half.
#[derive(Debug, Clone)]
pub struct PairModel {
    spec: PairSpec,
    /// Best six-state guess for each (ancilla basis, outcome).
    guess: [[StateLabel; 2]; 3],
    /// For a target basis: the ancilla basis to measure, and the bit to guess
    /// for each outcome.
    predict: [(Basis, [bool; 2]); 3],
}

impl PairModel {
    pub fn new(spec: PairSpec) -> Result<PairModel, QuantumError> {
        let state = spec.state()?;
        let amps = state.amplitudes();
        // unnormalised conditional state of the transmitted qubit
        let conditional = |basis: Basis, r: bool| -> [C64; 2] {
            let e = basis.eigenvector(r);
            let mut out = [C64::new(0.0, 0.0); 2];
            for (i, slot) in out.iter_mut().enumerate() {
                *slot = e[0].conj() * amps[2 * i] + e[1].conj() * amps[2 * i + 1];
            }
            out
        };
        let weight = |v: [C64; 2], basis: Basis, bit: bool| {
            let e = basis.eigenvector(bit);
            (e[0].conj() * v[0] + e[1].conj() * v[1]).norm_sqr()
        };
        let mut guess = [[StateLabel::ALL[0]; 2]; 3];
        for (b, basis) in Basis::ALL.into_iter().enumerate() {
            for r in [false, true] {
                let v = conditional(basis, r);
                guess[b][r as usize] = StateLabel::ALL
                    .into_iter()
                    .fold((StateLabel::ALL[0], -1.0), |best, l| {
                        let w = weight(v, l.basis(), l.bit());
                        if w > best.1 + 1e-12 {
                            (l, w)
                        } else {
                            best
                        }
                    })
                    .0;
            }
        }
        let mut predict = [(Basis::Z, [false, true]); 3];
        for (t, target) in Basis::ALL.into_iter().enumerate() {
            let mut best = (f64::NEG_INFINITY, Basis::Z, [false, true]);
            for basis in Basis::ALL {
                let mut score = 0.0;
                let mut bits = [false; 2];
                for r in [false, true] {
                    let v = conditional(basis, r);
                    let (w0, w1) = (weight(v, target, false), weight(v, target, true));
                    bits[r as usize] = w1 > w0;
                    score += w0.max(w1);
                }
                if score > best.0 + 1e-12 {
                    best = (score, basis, bits);
                }
            }
            predict[t] = (best.1, best.2);
        }
        Ok(PairModel { spec, guess, predict })
    }

    pub fn spec(&self) -> PairSpec {
        self.spec
    }

    /// Label inferred from an ancilla outcome in `basis`.
    pub fn inferred(&self, basis: Basis, outcome: bool) -> StateLabel {
        self.guess[basis.trit().value() as usize][outcome as usize]
    }
}

impl FakeSignal {
    /// The state she believes the photon left in, measuring the ancilla in a
    /// random basis the first time it is needed.
    fn departure_label(&mut self, id: PhotonId, rng: &mut RandomSource) -> Option<StateLabel> {
        let held = self.held.get_mut(&id)?;
        if let Held::Ancilla(pair) = held {
            let FakeSource::Pair(model) = &self.source else {
                unreachable!("ancillae only come from pair sources")
            };
            let basis = Basis::random(rng);
            let (r, post) = measure_second(&pair.state(), basis, rng).expect("pairs are dimension 4");
            pair.replace(post);
            *held = Held::Known(model.inferred(basis, r));
        }
        match held {
            Held::Known(l) => Some(*l),
            Held::Ancilla(_) => None,
        }
    }
}

impl Adversary for AttackAgent {
    fn dishonest_alice(&self) -> Option<usize> {
        match &self.state {
            AgentState::Fake(f) => Some(f.alice),
            _ => None,
        }
    }

    fn on_link(&mut self, link: Link, photons: &mut Vec<Photon>, ids: &mut IdAllocator, rng: &mut RandomSource) {
        match &mut self.state {
            AgentState::Intercept(att) if att.link == link => {
                for photon in photons.iter_mut().filter(|p| !p.is_vacuum()) {
                    if !rng.random_bool(att.fraction) {
                        continue;
                    }
                    let basis = Basis::random(rng);
                    let bit = photon.measure(basis, rng).expect("non-empty slot");
                    let resent = StateLabel::new(bit, basis);
                    photon.payload = Payload::Labeled(resent);
                    att.guesses.insert(photon.id, resent);
                }
            }
            AgentState::Invisible { target, rate } => {
                if link == Link::ToAlice(*target) {
                    let mut out = Vec::with_capacity(photons.len() * 2);
                    for photon in photons.drain(..) {
                        out.push(photon);
                        if rng.random_bool(*rate) {
                            let mut probe = Photon::labeled(ids.fresh(), StateLabel::random(rng), false);
                            probe.invisible = true;
                            out.push(probe);
                            self.tally.invisible_inserted += 1;
                        }
                    }
                    *photons = out;
                } else {
                    // probes only come back if they got through the receiver
                    self.tally.invisible_passed += photons.iter().filter(|p| p.invisible).count();
                    photons.retain(|p| !p.invisible);
                }
            }
            AgentState::Trojan { target, fraction } => {
                if link == Link::ToAlice(*target) {
                    for photon in photons.iter_mut().filter(|p| !p.is_vacuum()) {
                        if rng.random_bool(*fraction) {
                            photon.extra_copies = 1;
                            self.tally.tampered += 1;
                        }
                    }
                } else {
                    for photon in photons.iter_mut().filter(|p| p.extra_copies > 0) {
                        photon.extra_copies = 0;
                        self.tally.tampered_passed += 1;
                    }
                }
            }
            _ => {}
        }
    }

    fn on_outgoing(&mut self, alice: usize, photons: &mut Vec<Photon>, rng: &mut RandomSource) {
        let AgentState::Fake(fake) = &mut self.state else {
            return;
        };
        if alice != fake.alice {
            return;
        }
        for photon in photons.iter_mut() {
            let held = match &fake.source {
                FakeSource::Single => {
                    let label = StateLabel::random(rng);
                    photon.payload = Payload::Labeled(label);
                    Held::Known(label)
                }
                FakeSource::Pair(model) => {
                    let pair = SharedPair::new(model.spec.state().expect("validated at construction"));
                    photon.payload = Payload::PairHalf(pair.clone());
                    Held::Ancilla(pair)
                }
            };
            photon.extra_copies = 0;
            fake.held.insert(photon.id, held);
        }
    }

    fn announce(&mut self, ctx: &AnnounceContext<'_>, rng: &mut RandomSource) -> Option<Announcement> {
        let AgentState::Fake(fake) = &mut self.state else {
            return Some(ctx.true_record);
        };
        let Some(sent) = fake.departure_label(ctx.id, rng) else {
            return Some(ctx.true_record);
        };
        if let Announcement::Prepared(_) = ctx.true_record {
            fake.pending.insert(ctx.id, true);
            return Some(Announcement::Prepared(sent));
        }
        let informed = !ctx.remaining.iter().any(|&p| p < fake.alice);
        let before = if informed {
            let known: Vec<_> = ctx.answered.iter().filter(|(p, _)| *p < fake.alice).copied().collect();
            implied_label(&known)
        } else {
            None
        };
        let informed = informed && before.is_some();
        let before = before.unwrap_or_else(|| StateLabel::random(rng));
        fake.pending.insert(ctx.id, informed);
        Some(Announcement::Encoded(solve_op(before, sent)))
    }

    fn observe_sample(&mut self, outcome: SampleOutcome) {
        let AgentState::Fake(fake) = &mut self.state else {
            return;
        };
        if let Some(informed) = fake.pending.remove(&outcome.id) {
            if !outcome.retained {
                return;
            }
            if informed {
                self.tally.informed_retained += 1;
                self.tally.informed_errors += outcome.error as usize;
            } else {
                self.tally.blind_retained += 1;
                self.tally.blind_errors += outcome.error as usize;
            }
        }
    }

    fn predict_bit(&mut self, id: PhotonId, sifted: Basis, rng: &mut RandomSource) -> Option<bool> {
        match &mut self.state {
            AgentState::Intercept(att) if att.link == Link::ToBobs => {
                att.guesses.get(&id).map(|l| if l.basis() == sifted { l.bit() } else { rng.random_bool(0.5) })
            }
            // later Alices' Pauli codes hide the bit from anyone but the last Alice
            AgentState::Fake(fake) if fake.alice == fake.m => match fake.held.get(&id)? {
                Held::Known(l) => Some(if l.basis() == sifted { l.bit() } else { rng.random_bool(0.5) }),
                Held::Ancilla(pair) => {
                    let FakeSource::Pair(model) = &fake.source else {
                        return None;
                    };
                    let (basis, bits) = model.predict[sifted.trit().value() as usize];
                    let (r, post) = measure_second(&pair.state(), basis, rng).ok()?;
                    pair.replace(post);
                    Some(bits[r as usize])
                }
            },
            _ => None,
        }
    }
}

/// The Bell basis of two qubits, amplitudes indexed `2 * i + j`.
fn bell_basis() -> [[C64; 4]; 4] {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let z = C64::new(0.0, 0.0);
    [[h, z, z, h], [h, z, z, -h], [z, h, h, z], [z, h, -h, z]]
}

/// Outcome distribution `P(k | op)` of a Bell measurement on the pair after
/// `op` acted on its transmitted half.
fn bell_likelihoods(pair: &PairSpec) -> Result<[[f64; 4]; 9], QuantumError> {
    let state = pair.state()?;
    let bell = bell_basis();
    let mut table = [[0.0; 4]; 9];
    for op in OpCode::ALL {
        let s = apply_op(op, &state)?;
        for (k, e) in bell.iter().enumerate() {
            let amp: C64 = e.iter().zip(s.amplitudes()).map(|(a, b)| a.conj() * b).sum();
            table[op.index()][k] = amp.norm_sqr();
        }
    }
    Ok(table)
}

/// Maximum-likelihood Pauli-code guess for each Bell outcome, under uniform
/// operations.
fn ml_classes(table: &[[f64; 4]; 9]) -> [usize; 4] {
    let mut out = [0; 4];
    for (k, slot) in out.iter_mut().enumerate() {
        let score = |c: usize| OpCode::ALL.iter().filter(|op| op.pauli.value() as usize == c).map(|op| table[op.index()][k]).sum::<f64>();
        let mut best = 0;
        for c in 1..3 {
            if score(c) > score(best) + 1e-12 {
                best = c;
            }
        }
        *slot = best;
    }
    out
}

/// Probability that a holder of the whole pair, after one of the nine
/// operations was applied uniformly at random to the transmitted half,
/// identifies its Pauli code by a Bell measurement and a maximum-likelihood
/// guess.
pub fn encoding_class_accuracy(pair: &PairSpec) -> Result<f64, QuantumError> {
    let table = bell_likelihoods(pair)?;
    let classes = ml_classes(&table);
    let mut total = 0.0;
    for op in OpCode::ALL {
        for (k, &c) in classes.iter().enumerate() {
            if c == op.pauli.value() as usize {
                total += table[op.index()][k];
            }
        }
    }
    Ok(total / 9.0)
}

/// Monte Carlo estimate of [`encoding_class_accuracy`].
pub fn sample_encoding_class_accuracy<R: Rng + ?Sized>(
    pair: &PairSpec,
    trials: usize,
    rng: &mut R,
) -> Result<f64, QuantumError> {
    if trials == 0 {
        return Ok(0.0);
    }
    let table = bell_likelihoods(pair)?;
    let classes = ml_classes(&table);
    let mut correct = 0;
    for _ in 0..trials {
        let op = OpCode::random(rng);
        let u = rng.random::<f64>();
        let mut acc = 0.0;
        let mut k = 3;
        for (idx, p) in table[op.index()].iter().enumerate() {
            acc += p;
            if u < acc {
                k = idx;
                break;
            }
        }
        correct += (classes[k] == op.pauli.value() as usize) as usize;
    }
    Ok(correct as f64 / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::for_trial;

    #[test]
    fn epr_inference_map() {
        let model = PairModel::new(PairSpec::epr()).unwrap();
        for r in [false, true] {
            assert_eq!(model.inferred(Basis::Z, r), StateLabel::new(r, Basis::Z));
            assert_eq!(model.inferred(Basis::X, r), StateLabel::new(r, Basis::X));
            // the conjugate of +y is -y
            assert_eq!(model.inferred(Basis::Y, r), StateLabel::new(!r, Basis::Y));
        }
    }

    #[test]
    fn epr_classification_accuracy() {
        let exact = encoding_class_accuracy(&PairSpec::epr()).unwrap();
        assert!((exact - 5.0 / 9.0).abs() < 1e-12, "{exact}");
        let mc = sample_encoding_class_accuracy(&PairSpec::epr(), 40_000, &mut for_trial(5, 0)).unwrap();
        assert!((mc - exact).abs() < 0.015);
    }

    #[test]
    fn names_round_trip() {
        for name in AttackStrategy::NAMES {
            let kind = AttackStrategy::from_name(name).unwrap();
            assert_eq!(AttackStrategy::new(kind, None).name(), name);
        }
        assert!(AttackStrategy::from_name("nope").is_none());
    }

    #[test]
    fn attacker_index_is_checked() {
        let trojan = AttackStrategy::new(AttackKind::TrojanMultiphoton { fraction: 1.0 }, None);
        assert!(trojan.agent(3).is_err());
        let fake = AttackStrategy::new(AttackKind::SinglePhotonFake, Some(1));
        assert!(fake.agent(3).is_err());
        assert_eq!(AttackStrategy::new(AttackKind::SinglePhotonFake, None).agent(3).unwrap().dishonest_alice(), Some(3));
        let bad = PairSpec { alpha: [[1.0, 0.0], [0.0, 0.0]], beta: [[1.0, 0.0], [0.0, 0.0]] };
        assert!(AttackStrategy::new(AttackKind::EntangledFake { pair: bad }, None).agent(2).is_err());
    }

    #[test]
    fn strategy_serialises_flat() {
        let s = AttackStrategy::new(AttackKind::InterceptResend { fraction: 0.5 }, Some(2));
        let text = toml::to_string(&s).unwrap();
        let back: AttackStrategy = toml::from_str(&text).unwrap();
        assert_eq!(back, s);
    }
}
