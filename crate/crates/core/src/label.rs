//! Classical bookkeeping of which of the six states a signal qubit occupies.
//!
//! The action of the nine operation codes on the six labels is not written
//! down by hand. It is derived once, on first use, by applying each matrix to
//! each labelled amplitude vector and matching the result against the table up
//! to global phase.

use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::quantum::{apply_op, make_state, Basis, OpCode, Trit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("no six-state label ({a}, {b}): need a in {{0,1}} and b in {{0,1,2}}")]
pub struct InvalidLabel {
    pub a: u8,
    pub b: u8,
}

/// A label `(a, b)`: bit `a` encoded in basis `b`. `bit == false` is the +1
/// eigenstate of the basis observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateLabel {
    bit: bool,
    basis: Basis,
}

impl StateLabel {
    /// All six labels in `index()` order.
    pub const ALL: [StateLabel; 6] = [
        StateLabel { bit: false, basis: Basis::Z },
        StateLabel { bit: true, basis: Basis::Z },
        StateLabel { bit: false, basis: Basis::X },
        StateLabel { bit: true, basis: Basis::X },
        StateLabel { bit: false, basis: Basis::Y },
        StateLabel { bit: true, basis: Basis::Y },
    ];

    pub const fn new(bit: bool, basis: Basis) -> StateLabel {
        StateLabel { bit, basis }
    }

    /// Label from numeric `a in {0,1}` and `b in {0,1,2}`.
    pub fn from_trits(a: u8, b: u8) -> Result<StateLabel, InvalidLabel> {
        let basis = Trit::new(b).map(Basis::from_trit);
        match (a, basis) {
            (0 | 1, Some(basis)) => Ok(StateLabel { bit: a == 1, basis }),
            _ => Err(InvalidLabel { a, b }),
        }
    }

    pub fn bit(self) -> bool {
        self.bit
    }

    pub fn basis(self) -> Basis {
        self.basis
    }

    pub fn index(self) -> usize {
        2 * self.basis.trit().value() as usize + self.bit as usize
    }

    pub fn random<R: rand::Rng + ?Sized>(rng: &mut R) -> StateLabel {
        StateLabel::ALL[rng.random_range(0..6)]
    }
}

static ACTION: LazyLock<[[StateLabel; 6]; 9]> = LazyLock::new(|| {
    let mut table = [[StateLabel::ALL[0]; 6]; 9];
    for op in OpCode::ALL {
        for from in StateLabel::ALL {
            let image = apply_op(op, &make_state(from)).expect("qubit op");
            let to = StateLabel::ALL
                .into_iter()
                .find(|l| make_state(*l).eq_up_to_phase(&image))
                .expect("six-state family is closed under the nine codes");
            table[op.index()][from.index()] = to;
        }
    }
    table
});

/// Label of `(U_rot sigma_pauli)|psi_label>`, global phase dropped.
pub fn op_on_label(op: OpCode, label: StateLabel) -> StateLabel {
    ACTION[op.index()][label.index()]
}

/// The first code (in `OpCode::ALL` order) taking `from` to `to`. Every pair of
/// labels is connected because the action is transitive.
pub fn solve_op(from: StateLabel, to: StateLabel) -> OpCode {
    OpCode::ALL
        .into_iter()
        .find(|op| op_on_label(*op, from) == to)
        .expect("action on labels is transitive")
}

/// Operations applied to one position by Alices `2..=m`, in party order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingRecord {
    pub pauli_trits: Vec<Trit>,
    pub rot_trits: Vec<Trit>,
}

impl EncodingRecord {
    pub fn from_ops(ops: &[OpCode]) -> EncodingRecord {
        EncodingRecord {
            pauli_trits: ops.iter().map(|op| op.pauli).collect(),
            rot_trits: ops.iter().map(|op| op.rot).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.pauli_trits.len().min(self.rot_trits.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ops(&self) -> impl Iterator<Item = OpCode> + '_ {
        self.pauli_trits
            .iter()
            .zip(&self.rot_trits)
            .map(|(&pauli, &rot)| OpCode { pauli, rot })
    }
}

/// Folds the recorded operations over Alice 1's initial label.
pub fn combined_label(initial: StateLabel, rec: &EncodingRecord) -> StateLabel {
    rec.ops().fold(initial, |l, op| op_on_label(op, l))
}

/// `(b1 + sum of rotation trits) mod 3` as a basis.
pub fn sifted_basis(rec: &EncodingRecord, b1: Trit) -> Basis {
    Basis::from_trit(rec.rot_trits.iter().fold(b1, |acc, &t| acc + t))
}
