//! Overlap bounds for an attacker who forwards halves of a pair
//! `|0>|alpha> + |1>|beta>` and later tries to read the nine encodings off the
//! joint state.
//!
//! The nine states are `chi_k = (M_k (x) 1)|Psi>` with `M_k` running over
//! [`OpCode::ALL`]. Their overlaps depend on `alpha` and `beta` only through
//! the Gram parameters `x + iy = <alpha|beta>/sqrt2`, `z = <alpha|alpha>/sqrt2`
//! and `t = <beta|beta>/sqrt2`.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::sync::LazyLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantum::{apply_op, dagger, make_pair, mat_mul, Mat2, OpCode, PureState, C64};

/// Slack allowed on the equality and positivity constraints.
pub const FEASIBILITY_TOL: f64 = 1e-12;

/// Smallest grid accepted by [`minimize_objective`].
pub const MIN_RESOLUTION: usize = 50;

pub const DEFAULT_REFINEMENT_ITERS: usize = 500;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("z and t must be positive, got z = {z}, t = {t}")]
    NonPositive { z: f64, t: f64 },
    #[error("z + t must equal 1/sqrt2, got {0}")]
    Normalization(f64),
    #[error("x^2 + y^2 = {radius2} exceeds z t = {zt}: no vectors have this Gram matrix")]
    NotPositive { radius2: f64, zt: f64 },
    #[error("grid resolution must be at least {MIN_RESOLUTION}, got {0}")]
    Resolution(usize),
    #[error("no feasible grid point")]
    EmptyGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GramParams {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub t: f64,
}

impl GramParams {
    pub fn new(x: f64, y: f64, z: f64, t: f64) -> Result<GramParams, BoundsError> {
        if !(z > 0.0 && t > 0.0) {
            return Err(BoundsError::NonPositive { z, t });
        }
        if ((z + t) - FRAC_1_SQRT_2).abs() > FEASIBILITY_TOL {
            return Err(BoundsError::Normalization(z + t));
        }
        let radius2 = x * x + y * y;
        if radius2 > z * t + FEASIBILITY_TOL {
            return Err(BoundsError::NotPositive { radius2, zt: z * t });
        }
        Ok(GramParams { x, y, z, t })
    }

    /// Parameters from the three free coordinates, `t = 1/sqrt2 - z`.
    pub fn from_free(x: f64, y: f64, z: f64) -> Result<GramParams, BoundsError> {
        GramParams::new(x, y, z, FRAC_1_SQRT_2 - z)
    }

    /// The maximally entangled point `<alpha|beta> = 0`, `<alpha|alpha> = <beta|beta> = 1/2`.
    pub fn epr() -> GramParams {
        let h = 0.5 * FRAC_1_SQRT_2;
        GramParams { x: 0.0, y: 0.0, z: h, t: h }
    }

    fn unchecked(x: f64, y: f64, z: f64) -> GramParams {
        GramParams { x, y, z, t: FRAC_1_SQRT_2 - z }
    }

    pub fn is_feasible(&self) -> bool {
        GramParams::new(self.x, self.y, self.z, self.t).is_ok()
    }

    /// `[[<a|a>, <a|b>], [<b|a>, <b|b>]]`.
    pub fn gram(&self) -> [[C64; 2]; 2] {
        let ab = C64::new(self.x, self.y) * SQRT_2;
        [[C64::new(SQRT_2 * self.z, 0.0), ab], [ab.conj(), C64::new(SQRT_2 * self.t, 0.0)]]
    }

    /// Explicit vectors with this Gram matrix, from its Cholesky factor.
    pub fn realize(&self) -> ([C64; 2], [C64; 2]) {
        let g = self.gram();
        let a = g[0][0].re;
        let ab = g[0][1];
        let rest = (g[1][1].re - ab.norm_sqr() / a).max(0.0);
        let sa = a.sqrt();
        ([C64::new(sa, 0.0), C64::new(0.0, 0.0)], [ab / sa, C64::new(rest.sqrt(), 0.0)])
    }

    pub fn distance(&self, other: &GramParams) -> f64 {
        [self.x - other.x, self.y - other.y, self.z - other.z, self.t - other.t]
            .iter()
            .map(|d| d * d)
            .sum::<f64>()
            .sqrt()
    }
}

/// `M_i^dagger M_j` for all nine operations.
static PRODUCTS: LazyLock<[[Mat2; 9]; 9]> = LazyLock::new(|| {
    let zero = [[C64::new(0.0, 0.0); 2]; 2];
    let mut out = [[zero; 9]; 9];
    for a in OpCode::ALL {
        for b in OpCode::ALL {
            out[a.index()][b.index()] = mat_mul(&dagger(&a.matrix()), &b.matrix());
        }
    }
    out
});

/// The nine states' overlap matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiFamily {
    pub params: GramParams,
    pub overlap: [[C64; 9]; 9],
}

impl ChiFamily {
    pub fn is_hermitian(&self, tol: f64) -> bool {
        (0..9).all(|i| (0..9).all(|j| (self.overlap[i][j] - self.overlap[j][i].conj()).norm() <= tol))
    }

    /// Largest off-diagonal overlap modulus.
    pub fn max_off_diagonal(&self) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..9 {
            for j in 0..9 {
                if i != j {
                    best = best.max(self.overlap[i][j].norm());
                }
            }
        }
        best
    }
}

fn overlap_entry(g: &[[C64; 2]; 2], i: usize, j: usize) -> C64 {
    let m = &PRODUCTS[i][j];
    m[0][0] * g[0][0] + m[0][1] * g[0][1] + m[1][0] * g[1][0] + m[1][1] * g[1][1]
}

/// Overlaps from the Gram algebra:
/// `<chi_i|chi_j> = sum_ab (M_i^dagger M_j)_ab <v_a|v_b>` with `v_0 = alpha`, `v_1 = beta`.
pub fn chi_overlaps(params: GramParams) -> Result<ChiFamily, BoundsError> {
    let params = GramParams::new(params.x, params.y, params.z, params.t)?;
    Ok(formal_family(params))
}

fn formal_family(params: GramParams) -> ChiFamily {
    let g = params.gram();
    let mut overlap = [[C64::new(0.0, 0.0); 9]; 9];
    for (i, row) in overlap.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = overlap_entry(&g, i, j);
        }
    }
    ChiFamily { params, overlap }
}

/// The same overlaps from explicit state vectors: realise `alpha` and `beta`,
/// build the pair, apply each operation to its first half and take inner
/// products.
pub fn realized_overlaps(params: GramParams) -> Result<ChiFamily, BoundsError> {
    let params = GramParams::new(params.x, params.y, params.z, params.t)?;
    let (alpha, beta) = params.realize();
    let pair = make_pair(alpha, beta).expect("feasible parameters give a normalised pair");
    let states: Vec<PureState> =
        OpCode::ALL.iter().map(|op| apply_op(*op, &pair).expect("pair is dimension 4")).collect();
    let mut overlap = [[C64::new(0.0, 0.0); 9]; 9];
    for (i, row) in overlap.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = states[i].inner(&states[j]).expect("same dimension");
        }
    }
    Ok(ChiFamily { params, overlap })
}

/// Which overlap sum to minimise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Sum of all off-diagonal moduli; governs identifying all nine states.
    S1,
    /// Weighted cross-class sum; governs classifying the Pauli code.
    S2,
}

/// Cross-class weight `sqrt(eta eta / ((N - m)(N - m)))` for uniform priors
/// `eta = 1/9`, `N = 9` states and classes of `m = 3`.
const CLASS_WEIGHT: f64 = 1.0 / 54.0;

fn s1_raw(p: &GramParams) -> f64 {
    let g = p.gram();
    let mut total = 0.0;
    for i in 0..9 {
        for j in i + 1..9 {
            total += overlap_entry(&g, i, j).norm();
        }
    }
    2.0 * total
}

fn s2_raw(p: &GramParams) -> f64 {
    let g = p.gram();
    let mut total = 0.0;
    for a in OpCode::ALL {
        for b in OpCode::ALL {
            if a.index() < b.index() && a.pauli != b.pauli {
                total += overlap_entry(&g, a.index(), b.index()).norm();
            }
        }
    }
    2.0 * CLASS_WEIGHT * total
}

fn objective_raw(which: Objective, p: &GramParams) -> f64 {
    match which {
        Objective::S1 => s1_raw(p),
        Objective::S2 => s2_raw(p),
    }
}

/// `sum_{i != j} |<chi_i|chi_j>|`.
pub fn s1_sum(params: GramParams) -> Result<f64, BoundsError> {
    Ok(s1_raw(&chi_overlaps(params)?.params))
}

/// Cross-class sum over ordered pairs of distinct Pauli classes
/// `{chi_1, chi_4, chi_7}`, `{chi_2, chi_5, chi_8}`, `{chi_3, chi_6, chi_9}`.
pub fn s2_sum(params: GramParams) -> Result<f64, BoundsError> {
    Ok(s2_raw(&chi_overlaps(params)?.params))
}

fn r(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

fn q(u: f64) -> f64 {
    (0.5 + u * u).sqrt()
}

/// Closed form of half the s1 sum.
pub fn s1_half_closed_form(p: GramParams) -> f64 {
    let GramParams { x, y, z, t } = p;
    6.0 * SQRT_2 * y.abs()
        + 3.0 * SQRT_2 * (z - t).abs()
        + 6.0 * SQRT_2 * x.abs()
        + 4.0 * r(x + y + z, x + y - t)
        + 6.0 * r(x - y - z, x - y + t)
        + 4.0 * r(x - y + z, x - y - t)
        + 4.0 * r(x + y - z, x + y + t)
        + SQRT_2 * q(2.0 * x + 2.0 * y + z - t)
        + 3.0 * FRAC_1_SQRT_2 * q(2.0 * x - 2.0 * y - z + t)
        + SQRT_2 * q(2.0 * x - 2.0 * y + z - t)
        + SQRT_2 * q(2.0 * x + 2.0 * y - z + t)
}

/// Closed form of the s2 sum.
pub fn s2_closed_form(p: GramParams) -> f64 {
    let GramParams { x, y, z, t } = p;
    (6.0 * SQRT_2 * y.abs()
        + 3.0 * SQRT_2 * (z - t).abs()
        + 6.0 * SQRT_2 * x.abs()
        + 2.0 * r(x + y + z, x + y - t)
        + 6.0 * r(x - y - z, x - y + t)
        + 2.0 * r(x - y + z, x - y - t)
        + 2.0 * r(x + y - z, x + y + t)
        + 3.0 * FRAC_1_SQRT_2 * q(2.0 * x - 2.0 * y - z + t)
        + FRAC_1_SQRT_2 * q(2.0 * x - 2.0 * y + z - t)
        + FRAC_1_SQRT_2 * q(2.0 * x + 2.0 * y - z + t)
        + FRAC_1_SQRT_2 * q(2.0 * x + 2.0 * y + z - t))
        / 27.0
}

/// Upper bound on unambiguously identifying one of the nine states:
/// `1 - s1 / (8 * 9)`.
pub fn p1_bound(params: GramParams) -> Result<f64, BoundsError> {
    Ok(p1_from_sum(s1_sum(params)?))
}

pub fn p1_from_sum(s1: f64) -> f64 {
    1.0 - s1 / 72.0
}

/// Upper bound on classifying the Pauli code: `1 - s2`.
pub fn p2_bound(params: GramParams) -> Result<f64, BoundsError> {
    Ok(p2_from_sum(s2_sum(params)?))
}

pub fn p2_from_sum(s2: f64) -> f64 {
    1.0 - s2
}

/// A located minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub params: GramParams,
    pub value: f64,
}

/// Result of [`minimize_objective`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Minimization {
    pub objective: Objective,
    /// Minimum over parameters for which `alpha` and `beta` exist.
    pub constrained: Minimum,
    /// Minimum when only `z, t > 0` and `z + t = 1/sqrt2` are imposed.
    pub unconstrained: Minimum,
    pub resolution: usize,
    pub refinement_iters: usize,
}

/// Half-width of the `x` and `y` range; `x^2 + y^2 <= z t <= 1/8` on the feasible set.
const XY_RANGE: f64 = 0.5 * FRAC_1_SQRT_2;

fn feasible(x: f64, y: f64, z: f64) -> bool {
    let t = FRAC_1_SQRT_2 - z;
    z > 0.0 && t > 0.0 && x * x + y * y <= z * t + FEASIBILITY_TOL
}

fn in_box(x: f64, y: f64, z: f64) -> bool {
    z > 0.0 && z < FRAC_1_SQRT_2 && x.abs() <= XY_RANGE && y.abs() <= XY_RANGE
}

fn grid_search(which: Objective, resolution: usize, constrained: bool) -> Option<(f64, [f64; 3])> {
    let step_xy = 2.0 * XY_RANGE / (resolution - 1) as f64;
    let total = resolution * resolution * resolution;
    (0..total)
        .into_par_iter()
        .filter_map(|idx| {
            let (k, rest) = (idx / (resolution * resolution), idx % (resolution * resolution));
            let (i, j) = (rest / resolution, rest % resolution);
            let z = (k + 1) as f64 / (resolution + 1) as f64 * FRAC_1_SQRT_2;
            let x = -XY_RANGE + step_xy * i as f64;
            let y = -XY_RANGE + step_xy * j as f64;
            if constrained && !feasible(x, y, z) {
                return None;
            }
            Some((objective_raw(which, &GramParams::unchecked(x, y, z)), idx, [x, y, z]))
        })
        // lowest value, then lowest grid index, independent of scheduling
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(v, _, p)| (v, p))
}

fn refine(which: Objective, start: (f64, [f64; 3]), step: f64, iters: usize, constrained: bool) -> (f64, [f64; 3]) {
    let admissible = |p: &[f64; 3]| if constrained { feasible(p[0], p[1], p[2]) } else { in_box(p[0], p[1], p[2]) };
    let (mut best, mut p) = start;
    let mut h = step;
    for _ in 0..iters {
        let mut improved = false;
        for axis in 0..3 {
            for sign in [1.0, -1.0] {
                let mut cand = p;
                cand[axis] += sign * h;
                if !admissible(&cand) {
                    continue;
                }
                let v = objective_raw(which, &GramParams::unchecked(cand[0], cand[1], cand[2]));
                if v < best {
                    best = v;
                    p = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
            if h < 1e-15 {
                break;
            }
        }
    }
    (best, p)
}

/// Minimises an overlap sum by exhaustive search on a `resolution^3` grid over
/// `(x, y, z)` followed by compass refinement with halving step size.
///
/// The objectives are smooth except along `x = 0`, `y = 0` and `z = t`, all of
/// which are coordinate planes, so coordinate moves cannot get stuck on a kink.
pub fn minimize_objective(
    which: Objective,
    resolution: usize,
    refinement_iters: usize,
) -> Result<Minimization, BoundsError> {
    if resolution < MIN_RESOLUTION {
        return Err(BoundsError::Resolution(resolution));
    }
    let step = (2.0 * XY_RANGE / (resolution - 1) as f64).max(FRAC_1_SQRT_2 / (resolution + 1) as f64);
    let run = |constrained: bool| -> Result<Minimum, BoundsError> {
        let start = grid_search(which, resolution, constrained).ok_or(BoundsError::EmptyGrid)?;
        let (value, [x, y, z]) = refine(which, start, step, refinement_iters, constrained);
        Ok(Minimum { params: GramParams::unchecked(x, y, z), value })
    };
    let constrained = run(true)?;
    let unconstrained = run(false)?;
    Ok(Minimization { objective: which, constrained, unconstrained, resolution, refinement_iters })
}

/// One objective's minimum with both probability bounds evaluated there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub objective: Objective,
    pub minimum: f64,
    pub argmin: GramParams,
    pub p1: f64,
    pub p2: f64,
    pub grid_resolution: usize,
    pub refinement_iters: usize,
    pub unconstrained_minimum: f64,
    pub unconstrained_argmin: GramParams,
}

impl BoundsReport {
    pub fn compute(which: Objective, resolution: usize, refinement_iters: usize) -> Result<BoundsReport, BoundsError> {
        let m = minimize_objective(which, resolution, refinement_iters)?;
        let at = m.constrained.params;
        Ok(BoundsReport {
            objective: which,
            minimum: m.constrained.value,
            argmin: at,
            p1: p1_from_sum(s1_raw(&at)),
            p2: p2_from_sum(s2_raw(&at)),
            grid_resolution: resolution,
            refinement_iters,
            unconstrained_minimum: m.unconstrained.value,
            unconstrained_argmin: m.unconstrained.params,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn listed_overlaps() {
        let p = GramParams::from_free(0.05, -0.08, 0.3).unwrap();
        let fam = chi_overlaps(p).unwrap();
        let (ab, aa, bb) = (fam.params.gram()[0][1], SQRT_2 * p.z, SQRT_2 * p.t);
        assert!((fam.overlap[0][1] - (ab - ab.conj())).norm() < 1e-12);
        assert!((fam.overlap[0][1] - C64::new(0.0, 2.0 * SQRT_2 * p.y)).norm() < 1e-12);
        assert!((fam.overlap[0][2] - C64::new(aa - bb, 0.0)).norm() < 1e-12);
        for i in 0..9 {
            assert!((fam.overlap[i][i] - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
        assert!(fam.is_hermitian(1e-12));
    }

    #[test]
    fn epr_values() {
        let epr = GramParams::epr();
        let fam = chi_overlaps(epr).unwrap();
        assert!(fam.overlap[0][1].norm() < 1e-15 && fam.overlap[0][2].norm() < 1e-15);
        assert!((s1_sum(epr).unwrap() - 27.0).abs() < 1e-12);
        assert!((s2_sum(epr).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((p1_bound(epr).unwrap() - 0.625).abs() < 1e-12);
        assert!((p2_bound(epr).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(p1_from_sum(72.0), 0.0);
        assert_eq!(p2_from_sum(1.0), 0.0);
    }

    #[test]
    fn parameters_are_validated() {
        assert!(matches!(GramParams::from_free(0.0, 0.0, 0.0), Err(BoundsError::NonPositive { .. })));
        assert!(matches!(GramParams::new(0.0, 0.0, 0.3, 0.3), Err(BoundsError::Normalization(_))));
        assert!(matches!(GramParams::from_free(0.3, 0.3, 0.35), Err(BoundsError::NotPositive { .. })));
        assert!(matches!(minimize_objective(Objective::S1, 49, 10), Err(BoundsError::Resolution(49))));
    }

    #[test]
    fn shifted_diagonal_point() {
        let p = GramParams::new(0.0, 0.0, 0.5 * FRAC_1_SQRT_2 + 0.1, 0.5 * FRAC_1_SQRT_2 - 0.1).unwrap();
        assert!((s1_sum(p).unwrap() - 2.0 * s1_half_closed_form(p)).abs() < 1e-9);
        assert!((s2_sum(p).unwrap() - s2_closed_form(p)).abs() < 1e-9);
    }
}
