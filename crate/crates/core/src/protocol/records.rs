use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::photon::PhotonId;
use crate::label::{op_on_label, StateLabel};
use crate::quantum::OpCode;

/// Who put a photon on the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Origin {
    /// Prepared by Alice 1 as key material.
    Signal,
    /// Inserted by Alice `by` after her own encoding.
    Decoy { by: usize },
    /// Appended by Alice m to fill the last block.
    Padding,
}

impl Origin {
    pub fn is_signal(self) -> bool {
        matches!(self, Origin::Signal)
    }
}

/// What one party says publicly about one photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Announcement {
    /// The party prepared the photon in this state.
    Prepared(StateLabel),
    /// The party applied this operation to it.
    Encoded(OpCode),
}

#[derive(Debug, Clone)]
struct Entry {
    origin: Origin,
    source: usize,
    initial: StateLabel,
    /// `(party, op)` in increasing party order.
    ops: Vec<(usize, OpCode)>,
}

/// Every Alice's private bookkeeping, held together. Each party only ever
/// reveals its own part through [`PartyRecords::record_of`].
#[derive(Debug, Clone)]
pub struct PartyRecords {
    m: usize,
    n: usize,
    entries: HashMap<PhotonId, Entry>,
}

impl PartyRecords {
    pub fn new(m: usize, n: usize) -> PartyRecords {
        PartyRecords { m, n, entries: HashMap::new() }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn prepared(&mut self, id: PhotonId, by: usize, origin: Origin, label: StateLabel) {
        self.entries.insert(id, Entry { origin, source: by, initial: label, ops: Vec::new() });
    }

    pub fn encoded(&mut self, id: PhotonId, by: usize, op: OpCode) {
        if let Some(e) = self.entries.get_mut(&id) {
            debug_assert!(e.ops.last().is_none_or(|(p, _)| *p < by));
            e.ops.push((by, op));
        }
    }

    pub fn origin(&self, id: PhotonId) -> Option<Origin> {
        self.entries.get(&id).map(|e| e.origin)
    }

    pub fn contains(&self, id: PhotonId) -> bool {
        self.entries.contains_key(&id)
    }

    /// The party's true record for a photon, if it has one.
    pub fn record_of(&self, id: PhotonId, party: usize) -> Option<Announcement> {
        let e = self.entries.get(&id)?;
        if e.source == party {
            return Some(Announcement::Prepared(e.initial));
        }
        e.ops
            .iter()
            .find(|(p, _)| *p == party)
            .map(|(_, op)| Announcement::Encoded(*op))
    }

    /// Parties holding a record for `id` among Alices `1..=upto`, ascending.
    pub fn parties_with_records(&self, id: PhotonId, upto: usize) -> Vec<usize> {
        let Some(e) = self.entries.get(&id) else {
            return Vec::new();
        };
        let mut parties = vec![e.source];
        parties.extend(e.ops.iter().map(|(p, _)| *p).filter(|p| *p <= upto));
        parties
    }

    /// Label implied by all records: the state every honest party expects the
    /// photon to be in after Alice m.
    pub fn combined_label(&self, id: PhotonId) -> Option<StateLabel> {
        let e = self.entries.get(&id)?;
        Some(e.ops.iter().fold(e.initial, |l, (_, op)| op_on_label(*op, l)))
    }

    /// Overwrites one party's operation on a photon. Used to probe how the key
    /// depends on a single party's private choices.
    pub fn replace_op(&mut self, id: PhotonId, party: usize, op: OpCode) -> bool {
        match self.entries.get_mut(&id).and_then(|e| e.ops.iter_mut().find(|(p, _)| *p == party)) {
            Some(slot) => {
                slot.1 = op;
                true
            }
            None => false,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Folds a set of announcements into the label they jointly imply. Returns
/// `None` unless exactly one party claims to have prepared the photon.
pub fn implied_label(answers: &[(usize, Announcement)]) -> Option<StateLabel> {
    let mut sorted: Vec<_> = answers.to_vec();
    sorted.sort_by_key(|(p, _)| *p);
    let mut iter = sorted.into_iter();
    let (_, first) = iter.next()?;
    let Announcement::Prepared(mut label) = first else {
        return None;
    };
    for (_, a) in iter {
        match a {
            Announcement::Encoded(op) => label = op_on_label(op, label),
            Announcement::Prepared(_) => return None,
        }
    }
    Some(label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{Basis, Trit};

    #[test]
    fn records_fold_in_party_order() {
        let mut r = PartyRecords::new(3, 1);
        let id = PhotonId(5);
        let start = StateLabel::new(false, Basis::Z);
        let s1 = OpCode::new(Trit::ONE, Trit::ZERO);
        let u1 = OpCode::new(Trit::ZERO, Trit::ONE);
        r.prepared(id, 1, Origin::Signal, start);
        r.encoded(id, 2, s1);
        r.encoded(id, 3, u1);
        let want = op_on_label(u1, op_on_label(s1, start));
        assert_eq!(r.combined_label(id), Some(want));
        assert_eq!(r.parties_with_records(id, 2), vec![1, 2]);
        assert_eq!(r.record_of(id, 3), Some(Announcement::Encoded(u1)));
        // announcement order does not matter
        let answers = [
            (3, Announcement::Encoded(u1)),
            (1, Announcement::Prepared(start)),
            (2, Announcement::Encoded(s1)),
        ];
        assert_eq!(implied_label(&answers), Some(want));
    }

    #[test]
    fn decoys_are_known_only_downstream() {
        let mut r = PartyRecords::new(4, 1);
        let id = PhotonId(0);
        r.prepared(id, 2, Origin::Decoy { by: 2 }, StateLabel::ALL[3]);
        r.encoded(id, 3, OpCode::ALL[1]);
        assert_eq!(r.record_of(id, 1), None);
        assert_eq!(r.parties_with_records(id, 4), vec![2, 3]);
    }

    #[test]
    fn implied_label_needs_one_preparer() {
        assert_eq!(implied_label(&[]), None);
        assert_eq!(implied_label(&[(2, Announcement::Encoded(OpCode::IDENTITY))]), None);
        let l = StateLabel::ALL[0];
        assert_eq!(
            implied_label(&[(1, Announcement::Prepared(l)), (2, Announcement::Prepared(l))]),
            None
        );
    }
}
