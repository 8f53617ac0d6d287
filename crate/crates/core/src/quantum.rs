//! Exact complex-amplitude model of signal qubits and two-particle attacker
//! states.
//!
//! Signal photons are qubits (dimension 2). An attacker pair `|0>|a> + |1>|b>`
//! is a dimension-4 vector with the transmitted qubit as the first factor and
//! the retained ancilla as the second, indexed lexicographically as
//! `2 * first + second`.
//!
//! The nine encoding operations are `U_rot * sigma_pauli` with
//!
//! ```text
//! sigma_0 = I        sigma_1 = i*sigma_y = [[0, 1], [-1, 0]]   sigma_2 = sigma_z
//! U_0 = I            U_1 = [[1, -i], [1, i]] / sqrt2           U_2 = [[1, 1], [i, -i]] / sqrt2
//! ```
//!
//! `U_1` cycles the bases Z -> X -> Y -> Z, `U_2` cycles Z -> Y -> X -> Z, and
//! the three Pauli codes keep every basis in place.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::label::StateLabel;

/// Complex amplitude.
pub type C64 = Complex64;

/// A 2x2 complex matrix, row-major.
pub type Mat2 = [[C64; 2]; 2];

/// Tolerance for exact-algebra checks (norms, unitarity).
pub const NORM_TOL: f64 = 1e-12;

/// Tolerance for equality up to a global phase: `|<a|b>| >= 1 - PHASE_TOL`.
pub const PHASE_TOL: f64 = 1e-10;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("expected a state of dimension {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unsupported state dimension {0} (only 2 and 4 are modelled)")]
    UnsupportedDimension(usize),
    #[error("state is not normalised: squared norm {0}")]
    NotNormalized(f64),
}

/// A value in `{0, 1, 2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Trit(u8);

impl Trit {
    pub const ZERO: Trit = Trit(0);
    pub const ONE: Trit = Trit(1);
    pub const TWO: Trit = Trit(2);
    pub const ALL: [Trit; 3] = [Trit(0), Trit(1), Trit(2)];

    pub fn new(value: u8) -> Option<Trit> {
        (value < 3).then_some(Trit(value))
    }

    /// Reduces any integer modulo 3.
    pub fn wrapping(value: usize) -> Trit {
        Trit((value % 3) as u8)
    }

    pub fn value(self) -> u8 {
        self.0
    }

}

impl std::ops::Add for Trit {
    type Output = Trit;

    fn add(self, other: Trit) -> Trit {
        Trit((self.0 + other.0) % 3)
    }
}

impl TryFrom<u8> for Trit {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Trit::new(value).ok_or_else(|| format!("trit out of range: {value}"))
    }
}

impl From<Trit> for u8 {
    fn from(t: Trit) -> u8 {
        t.0
    }
}

impl fmt::Display for Trit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Measurement / preparation basis. The trit value is the `b` index of the
/// six-state table: `Z = 0`, `X = 1`, `Y = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
    Y,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::Z, Basis::X, Basis::Y];

    pub fn from_trit(t: Trit) -> Basis {
        Basis::ALL[t.value() as usize]
    }

    pub fn trit(self) -> Trit {
        match self {
            Basis::Z => Trit::ZERO,
            Basis::X => Trit::ONE,
            Basis::Y => Trit::TWO,
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Basis {
        Basis::ALL[rng.random_range(0..3)]
    }

    /// The eigenvector for outcome `bit` (`false` = +1 eigenvalue, `true` = -1).
    pub fn eigenvector(self, bit: bool) -> [C64; 2] {
        let h = FRAC_1_SQRT_2;
        let sign = if bit { -1.0 } else { 1.0 };
        match self {
            Basis::Z if !bit => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            Basis::Z => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            Basis::X => [C64::new(h, 0.0), C64::new(sign * h, 0.0)],
            Basis::Y => [C64::new(h, 0.0), C64::new(0.0, sign * h)],
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Basis::Z => "Z",
            Basis::X => "X",
            Basis::Y => "Y",
        };
        f.write_str(s)
    }
}

/// One of the nine encoding operations, acting as `U_rot * sigma_pauli`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OpCode {
    pub pauli: Trit,
    pub rot: Trit,
}

impl OpCode {
    pub const IDENTITY: OpCode = OpCode { pauli: Trit::ZERO, rot: Trit::ZERO };

    /// All nine codes ordered by `3 * rot + pauli`, i.e. `I, s1, s2, U1, U1 s1, ...`.
    pub const ALL: [OpCode; 9] = {
        let mut all = [OpCode::IDENTITY; 9];
        let mut k = 0;
        while k < 9 {
            all[k] = OpCode { pauli: Trit((k % 3) as u8), rot: Trit((k / 3) as u8) };
            k += 1;
        }
        all
    };

    pub fn new(pauli: Trit, rot: Trit) -> OpCode {
        OpCode { pauli, rot }
    }

    pub fn index(self) -> usize {
        3 * self.rot.value() as usize + self.pauli.value() as usize
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> OpCode {
        OpCode::ALL[rng.random_range(0..9)]
    }

    pub fn matrix(self) -> Mat2 {
        mat_mul(&rotation_matrix(self.rot), &pauli_matrix(self.pauli))
    }
}

impl fmt::Display for OpCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "U{}*s{}", self.rot, self.pauli)
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn pauli_matrix(pauli: Trit) -> Mat2 {
    match pauli.value() {
        0 => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]],
        1 => [[c(0.0, 0.0), c(1.0, 0.0)], [c(-1.0, 0.0), c(0.0, 0.0)]],
        _ => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
    }
}

pub fn rotation_matrix(rot: Trit) -> Mat2 {
    let h = FRAC_1_SQRT_2;
    match rot.value() {
        0 => pauli_matrix(Trit::ZERO),
        1 => [[c(h, 0.0), c(0.0, -h)], [c(h, 0.0), c(0.0, h)]],
        _ => [[c(h, 0.0), c(h, 0.0)], [c(0.0, h), c(0.0, -h)]],
    }
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Conjugate transpose.
pub fn dagger(m: &Mat2) -> Mat2 {
    [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]]
}

/// A normalised pure state of dimension 2 (qubit) or 4 (qubit + 2-level ancilla).
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: Vec<C64>,
}

impl PureState {
    pub fn new(amps: Vec<C64>) -> Result<PureState, QuantumError> {
        if amps.len() != 2 && amps.len() != 4 {
            return Err(QuantumError::UnsupportedDimension(amps.len()));
        }
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(QuantumError::NotNormalized(norm_sqr));
        }
        Ok(PureState { amps })
    }

    /// Builds a state from amplitudes that are normalised up to roundoff and
    /// rescales them exactly.
    fn renormalized(mut amps: Vec<C64>) -> PureState {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        PureState { amps }
    }

    pub fn qubit(v: [C64; 2]) -> Result<PureState, QuantumError> {
        PureState::new(v.to_vec())
    }

    pub fn dimension(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Result<C64, QuantumError> {
        if self.dimension() != other.dimension() {
            return Err(QuantumError::DimensionMismatch {
                expected: self.dimension(),
                found: other.dimension(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// True iff the states differ only by a unit-modulus scalar.
    pub fn eq_up_to_phase(&self, other: &PureState) -> bool {
        self.inner(other)
            .map(|ip| ip.norm() >= 1.0 - PHASE_TOL)
            .unwrap_or(false)
    }

    fn expect_dim(&self, expected: usize) -> Result<(), QuantumError> {
        if self.dimension() == expected {
            Ok(())
        } else {
            Err(QuantumError::DimensionMismatch { expected, found: self.dimension() })
        }
    }
}

/// The labelled six-state amplitude vector `|psi_ab>`.
pub fn make_state(label: StateLabel) -> PureState {
    PureState { amps: label.basis().eigenvector(label.bit()).to_vec() }
}

fn apply_mat2(m: &Mat2, v: [C64; 2]) -> [C64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// Applies `U_rot * sigma_pauli` to a qubit, or to the first factor of a pair.
pub fn apply_op(op: OpCode, s: &PureState) -> Result<PureState, QuantumError> {
    let m = op.matrix();
    let amps = match s.dimension() {
        2 => apply_mat2(&m, [s.amps[0], s.amps[1]]).to_vec(),
        4 => {
            // first factor index i contributes to entries 2*i + j
            let mut out = vec![C64::new(0.0, 0.0); 4];
            for j in 0..2 {
                let col = apply_mat2(&m, [s.amps[j], s.amps[2 + j]]);
                out[j] = col[0];
                out[2 + j] = col[1];
            }
            out
        }
        d => return Err(QuantumError::UnsupportedDimension(d)),
    };
    Ok(PureState { amps })
}

/// Probability of outcome `bit` when measuring a qubit in `basis`.
pub fn outcome_probability(s: &PureState, basis: Basis, bit: bool) -> Result<f64, QuantumError> {
    s.expect_dim(2)?;
    let e = basis.eigenvector(bit);
    let amp = e[0].conj() * s.amps[0] + e[1].conj() * s.amps[1];
    Ok(amp.norm_sqr().clamp(0.0, 1.0))
}

/// Projective measurement of a qubit. Outcome `false` is the +1 eigenstate of
/// the basis observable, `true` the -1 eigenstate; the returned state is the
/// collapsed eigenstate.
pub fn measure<R: Rng + ?Sized>(
    s: &PureState,
    basis: Basis,
    rng: &mut R,
) -> Result<(bool, PureState), QuantumError> {
    let p0 = outcome_probability(s, basis, false)?;
    let bit = rng.random::<f64>() >= p0;
    Ok((bit, PureState { amps: basis.eigenvector(bit).to_vec() }))
}

/// The pair `|0>|alpha> + |1>|beta>` for unnormalised ancilla vectors with
/// `<alpha|alpha> + <beta|beta> = 1`.
pub fn make_pair(alpha: [C64; 2], beta: [C64; 2]) -> Result<PureState, QuantumError> {
    PureState::new(vec![alpha[0], alpha[1], beta[0], beta[1]])
}

/// Measures one factor of a pair; `first == true` selects the transmitted
/// qubit, otherwise the ancilla.
fn measure_factor<R: Rng + ?Sized>(
    s: &PureState,
    basis: Basis,
    first: bool,
    rng: &mut R,
) -> Result<(bool, PureState), QuantumError> {
    s.expect_dim(4)?;
    let index = |measured: usize, other: usize| {
        if first {
            2 * measured + other
        } else {
            2 * other + measured
        }
    };
    // conditional (unnormalised) state of the other factor for each outcome
    let project = |bit: bool| -> [C64; 2] {
        let e = basis.eigenvector(bit);
        let mut out = [C64::new(0.0, 0.0); 2];
        for (other, slot) in out.iter_mut().enumerate() {
            *slot = e[0].conj() * s.amps[index(0, other)] + e[1].conj() * s.amps[index(1, other)];
        }
        out
    };
    let rest0 = project(false);
    let p0 = rest0[0].norm_sqr() + rest0[1].norm_sqr();
    let bit = rng.random::<f64>() >= p0;
    let rest = if bit { project(true) } else { rest0 };
    let e = basis.eigenvector(bit);
    let mut amps = vec![C64::new(0.0, 0.0); 4];
    for measured in 0..2 {
        for other in 0..2 {
            amps[index(measured, other)] = e[measured] * rest[other];
        }
    }
    Ok((bit, PureState::renormalized(amps)))
}

/// Measures the transmitted qubit of a pair, collapsing the ancilla.
pub fn measure_first<R: Rng + ?Sized>(
    s: &PureState,
    basis: Basis,
    rng: &mut R,
) -> Result<(bool, PureState), QuantumError> {
    measure_factor(s, basis, true, rng)
}

/// Measures the retained ancilla of a pair, collapsing the transmitted qubit.
pub fn measure_second<R: Rng + ?Sized>(
    s: &PureState,
    basis: Basis,
    rng: &mut R,
) -> Result<(bool, PureState), QuantumError> {
    measure_factor(s, basis, false, rng)
}
