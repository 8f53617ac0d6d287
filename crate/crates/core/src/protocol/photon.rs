use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use rand::Rng;

use crate::label::{op_on_label, StateLabel};
use crate::quantum::{apply_op, make_state, measure, measure_first, Basis, OpCode, PureState};

/// Identity of a time slot on the quantum channel. Parties refer to photons
/// by position in a real deployment; the simulator carries the slot identity
/// with the photon so that insertions and removals keep positions unambiguous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhotonId(pub u64);

impl fmt::Display for PhotonId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Hands out fresh photon identities.
#[derive(Debug, Default)]
pub struct IdAllocator {
    next: u64,
}

impl IdAllocator {
    pub fn fresh(&mut self) -> PhotonId {
        let id = PhotonId(self.next);
        self.next += 1;
        id
    }
}

/// A dimension-4 pair state whose first factor travels in a photon and whose
/// second factor stays with whoever created it.
#[derive(Debug, Clone)]
pub struct SharedPair(Rc<RefCell<PureState>>);

impl SharedPair {
    pub fn new(state: PureState) -> SharedPair {
        assert_eq!(state.dimension(), 4, "pair states are two-qubit");
        SharedPair(Rc::new(RefCell::new(state)))
    }

    pub fn state(&self) -> PureState {
        self.0.borrow().clone()
    }

    pub fn replace(&self, state: PureState) {
        *self.0.borrow_mut() = state;
    }

    pub fn ptr_eq(&self, other: &SharedPair) -> bool {
        Rc::ptr_eq(&self.0, &other.0)
    }
}

#[derive(Debug, Clone)]
pub enum Payload {
    /// One of the six states.
    Labeled(StateLabel),
    /// An arbitrary qubit state.
    Raw(PureState),
    /// The transmitted half of an entangled pair.
    PairHalf(SharedPair),
    /// A lost photon: the slot is known but nothing arrived.
    Vacuum,
}

#[derive(Debug, Clone)]
pub struct Photon {
    pub id: PhotonId,
    pub payload: Payload,
    pub is_decoy: bool,
    pub invisible: bool,
    pub extra_copies: u32,
}

impl Photon {
    /// A legitimate single-photon signal.
    pub fn labeled(id: PhotonId, label: StateLabel, is_decoy: bool) -> Photon {
        Photon { id, payload: Payload::Labeled(label), is_decoy, invisible: false, extra_copies: 0 }
    }

    pub fn is_vacuum(&self) -> bool {
        matches!(self.payload, Payload::Vacuum)
    }

    pub fn label(&self) -> Option<StateLabel> {
        match self.payload {
            Payload::Labeled(l) => Some(l),
            _ => None,
        }
    }

    /// Applies an encoding operation to whatever the photon carries.
    pub fn apply(&mut self, op: OpCode) {
        match &mut self.payload {
            Payload::Labeled(l) => *l = op_on_label(op, *l),
            Payload::Raw(s) => *s = apply_op(op, s).expect("raw payloads are qubits"),
            Payload::PairHalf(pair) => {
                pair.replace(apply_op(op, &pair.state()).expect("pair payloads are dimension 4"))
            }
            Payload::Vacuum => {}
        }
    }

    /// Measures the photon in `basis`; returns `None` for an empty slot.
    ///
    /// Labelled payloads are measured through the label algebra: the outcome is
    /// certain in the label's own basis and a fair coin in the two conjugate
    /// bases, which is exactly the Born distribution of the six states.
    pub fn measure<R: Rng + ?Sized>(&mut self, basis: Basis, rng: &mut R) -> Option<bool> {
        let bit = match &mut self.payload {
            Payload::Labeled(l) if l.basis() == basis => l.bit(),
            Payload::Labeled(_) => rng.random_bool(0.5),
            Payload::Raw(s) => measure(s, basis, rng).expect("raw payloads are qubits").0,
            Payload::PairHalf(pair) => {
                let (bit, post) =
                    measure_first(&pair.state(), basis, rng).expect("pair payloads are dimension 4");
                pair.replace(post);
                return Some(bit);
            }
            Payload::Vacuum => return None,
        };
        self.payload = Payload::Labeled(StateLabel::new(bit, basis));
        Some(bit)
    }

    /// The single-qubit amplitude vector, when the payload has one.
    pub fn qubit_state(&self) -> Option<PureState> {
        match &self.payload {
            Payload::Labeled(l) => Some(make_state(*l)),
            Payload::Raw(s) => Some(s.clone()),
            _ => None,
        }
    }
}
