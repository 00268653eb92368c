//! Exact arithmetic of the population case: mixture proportions on the
//! probability simplex, two-sample and multi-sample kappa operators,
//! residues, support sets, and mixing-matrix validators.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;
use crate::lp::{self, Constraint, Relation};

/// The two numeric tiers used throughout: `clamp` absorbs representation
/// noise at construction time, `decision` is the threshold for support and
/// equality decisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Representation noise: entries within `clamp` of zero (either sign)
    /// are snapped to exact zero when building a proportion, so support
    /// queries never see arithmetic dust. Entries below `-clamp` are
    /// rejected.
    pub clamp: f64,
    /// Support membership, equality of proportions, and sign tests.
    pub decision: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            clamp: 1e-12,
            decision: 1e-9,
        }
    }
}

pub const TOL: Tolerances = Tolerances {
    clamp: 1e-12,
    decision: 1e-9,
};

#[derive(Debug, Error, PartialEq)]
pub enum SimplexError {
    #[error("proportion entry {value} at index {index} is negative beyond tolerance")]
    NegativeEntry { index: usize, value: f64 },
    #[error("proportion entries sum to {sum}, expected 1")]
    BadSum { sum: f64 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("inputs are equal; residue is undefined")]
    EqualInputs,
    #[error("mixing matrix must be square for this check (got {rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("background weight gamma[{index}] = {value} outside [0, 1)")]
    GammaOutOfRange { index: usize, value: f64 },
    #[error("blend weight {0} outside [0, 1]")]
    NuOutOfRange(f64),
    #[error("empty input")]
    Empty,
    #[error("atom identifiers are not unique")]
    DuplicateAtoms,
    #[error("partial label matrix has an all-zero row at index {0}")]
    ZeroRow(usize),
    #[error("linear program failed: {0}")]
    Lp(String),
}

pub type Result<T> = std::result::Result<T, SimplexError>;

// ---------------------------------------------------------------------------
// MixtureProportion
// ---------------------------------------------------------------------------

/// A point of the probability simplex: nonnegative weights summing to one.
/// This is the exact engine's universal currency; every population algorithm
/// works on these vectors rather than on abstract distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureProportion {
    weights: Vec<f64>,
}

impl MixtureProportion {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Self::new_with(weights, &TOL)
    }

    pub fn new_with(mut weights: Vec<f64>, tol: &Tolerances) -> Result<Self> {
        if weights.is_empty() {
            return Err(SimplexError::Empty);
        }
        for (i, w) in weights.iter_mut().enumerate() {
            if *w < -tol.clamp {
                return Err(SimplexError::NegativeEntry { index: i, value: *w });
            }
            if w.abs() <= tol.clamp {
                *w = 0.0;
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > tol.decision {
            return Err(SimplexError::BadSum { sum });
        }
        Ok(MixtureProportion { weights })
    }

    /// Standard basis vector `e_i` of length `l`.
    pub fn basis(i: usize, l: usize) -> Self {
        assert!(i < l, "basis index out of range");
        let mut w = vec![0.0; l];
        w[i] = 1.0;
        MixtureProportion { weights: w }
    }

    /// The barycenter `(1/l, ..., 1/l)`.
    pub fn uniform(l: usize) -> Self {
        assert!(l > 0);
        MixtureProportion {
            weights: vec![1.0 / l as f64; l],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Componentwise maximum absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.len() == other.len() && self.max_abs_diff(other) <= tol
    }

    /// Index of the largest weight (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for i in 1..self.weights.len() {
            if self.weights[i] > self.weights[best] {
                best = i;
            }
        }
        best
    }
}

impl AsRef<[f64]> for MixtureProportion {
    fn as_ref(&self) -> &[f64] {
        &self.weights
    }
}

#[derive(Serialize, Deserialize)]
struct SimplexJson {
    #[serde(rename = "L")]
    l: usize,
    rows: Vec<Vec<f64>>,
}

impl Serialize for MixtureProportion {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SimplexJson {
            l: self.len(),
            rows: vec![self.weights.clone()],
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MixtureProportion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = SimplexJson::deserialize(d)?;
        if raw.rows.len() != 1 || raw.rows[0].len() != raw.l {
            return Err(serde::de::Error::custom("expected a single row of length L"));
        }
        MixtureProportion::new(raw.rows.into_iter().next().unwrap())
            .map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// DiscreteDistribution
// ---------------------------------------------------------------------------

/// A distribution on a finite set of atoms, used as a base distribution in
/// the finite-sample-space instantiation of the contamination model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    atoms: Vec<u64>,
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(atoms: Vec<u64>, probs: Vec<f64>) -> Result<Self> {
        if atoms.len() != probs.len() {
            return Err(SimplexError::LengthMismatch {
                left: atoms.len(),
                right: probs.len(),
            });
        }
        let mut seen = atoms.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != atoms.len() {
            return Err(SimplexError::DuplicateAtoms);
        }
        // Reuse the proportion validation for nonnegativity and the sum.
        let checked = MixtureProportion::new(probs)?;
        Ok(DiscreteDistribution {
            atoms,
            probs: checked.weights,
        })
    }

    pub fn atoms(&self) -> &[u64] {
        &self.atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob_of(&self, atom: u64) -> f64 {
        self.atoms
            .iter()
            .position(|&a| a == atom)
            .map_or(0.0, |i| self.probs[i])
    }
}

// ---------------------------------------------------------------------------
// MixingMatrix
// ---------------------------------------------------------------------------

/// Row-stochastic M x L matrix; row i holds the mixture proportion of the
/// i-th contaminated distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    rows: Vec<MixtureProportion>,
}

impl MixingMatrix {
    pub fn new(rows: Vec<MixtureProportion>) -> Result<Self> {
        if rows.is_empty() {
            return Err(SimplexError::Empty);
        }
        let l = rows[0].len();
        for r in &rows {
            if r.len() != l {
                return Err(SimplexError::LengthMismatch {
                    left: l,
                    right: r.len(),
                });
            }
        }
        Ok(MixingMatrix { rows })
    }

    pub fn from_raw(raw: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(
            raw.into_iter()
                .map(MixtureProportion::new)
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn identity(l: usize) -> Self {
        MixingMatrix {
            rows: (0..l).map(|i| MixtureProportion::basis(i, l)).collect(),
        }
    }

    pub fn rows(&self) -> &[MixtureProportion] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &MixtureProportion {
        &self.rows[i]
    }

    /// Number of contaminated distributions (rows).
    pub fn m(&self) -> usize {
        self.rows.len()
    }

    /// Number of base distributions (columns).
    pub fn l(&self) -> usize {
        self.rows[0].len()
    }

    pub fn is_square(&self) -> bool {
        self.m() == self.l()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.rows[i].get(j)
    }

    pub fn to_raw(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.weights.clone()).collect()
    }
}

impl Serialize for MixingMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SimplexJson {
            l: self.l(),
            rows: self.to_raw(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MixingMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = SimplexJson::deserialize(d)?;
        if raw.rows.iter().any(|r| r.len() != raw.l) {
            return Err(serde::de::Error::custom("row length does not match L"));
        }
        MixingMatrix::from_raw(raw.rows).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// PartialLabelMatrix
// ---------------------------------------------------------------------------

/// Binary M x L matrix marking which classes may appear in each contaminated
/// source: `entries[i][j]` is true exactly when class j can occur in source i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialLabelMatrix {
    entries: Vec<Vec<bool>>,
}

impl PartialLabelMatrix {
    pub fn new(entries: Vec<Vec<bool>>) -> Result<Self> {
        if entries.is_empty() || entries[0].is_empty() {
            return Err(SimplexError::Empty);
        }
        let l = entries[0].len();
        for (i, row) in entries.iter().enumerate() {
            if row.len() != l {
                return Err(SimplexError::LengthMismatch {
                    left: l,
                    right: row.len(),
                });
            }
            if row.iter().all(|&b| !b) {
                return Err(SimplexError::ZeroRow(i));
            }
        }
        Ok(PartialLabelMatrix { entries })
    }

    /// The pattern `(1{pi_{i,j} > 0})` induced by a mixing matrix.
    pub fn from_mixing(pi: &MixingMatrix) -> Self {
        let entries = pi
            .rows()
            .iter()
            .map(|r| r.weights().iter().map(|&w| w > TOL.decision).collect())
            .collect();
        PartialLabelMatrix { entries }
    }

    pub fn m(&self) -> usize {
        self.entries.len()
    }

    pub fn l(&self) -> usize {
        self.entries[0].len()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.entries[i][j]
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.entries[i]
    }

    pub fn column(&self, j: usize) -> Vec<bool> {
        self.entries.iter().map(|r| r[j]).collect()
    }

    /// Number of nonzero entries, written |S| in the thresholding estimator.
    pub fn ones(&self) -> usize {
        self.entries
            .iter()
            .map(|r| r.iter().filter(|&&b| b).count())
            .sum()
    }

    pub fn columns_unique(&self) -> bool {
        let mut cols: Vec<Vec<bool>> = (0..self.l()).map(|j| self.column(j)).collect();
        cols.sort();
        cols.windows(2).all(|w| w[0] != w[1])
    }

    /// Condition (D): no row selects exactly one class.
    pub fn satisfies_condition_d(&self) -> bool {
        self.entries
            .iter()
            .all(|r| r.iter().filter(|&&b| b).count() != 1)
    }

    /// Consistency with a mixing matrix: `entries[i][j] == (pi[i][j] > 0)`.
    pub fn consistent_with(&self, pi: &MixingMatrix) -> bool {
        self.m() == pi.m()
            && self.l() == pi.l()
            && (0..self.m()).all(|i| {
                (0..self.l()).all(|j| self.entries[i][j] == (pi.entry(i, j) > TOL.decision))
            })
    }
}

// ---------------------------------------------------------------------------
// Kappa operators
// ---------------------------------------------------------------------------

/// Outcome of a multi-sample kappa solve. `residue` is present exactly when
/// `kappa < 1`; a degenerate solve (the target lies in the convex hull of the
/// conditioning set) reports `kappa = 1` with no residue.
#[derive(Debug, Clone, Serialize)]
pub struct KappaSolution {
    pub kappa: f64,
    pub nu: Vec<f64>,
    pub residue: Option<MixtureProportion>,
}

/// Two-sample kappa: the largest proportion of `eta1` contained in `eta0`,
/// computed as the minimum ratio `eta0_i / eta1_i` over the support of
/// `eta1`. Equals 1 iff the inputs coincide and 0 iff the support of `eta1`
/// is not contained in the support of `eta0`.
pub fn two_sample_kappa(eta0: &MixtureProportion, eta1: &MixtureProportion) -> Result<f64> {
    if eta0.len() != eta1.len() {
        return Err(SimplexError::LengthMismatch {
            left: eta0.len(),
            right: eta1.len(),
        });
    }
    let mut kappa = f64::INFINITY;
    for (a, b) in eta0.weights().iter().zip(eta1.weights()) {
        if *b > 0.0 {
            kappa = kappa.min(a / b);
        }
    }
    // The min ratio cannot mathematically exceed 1; trim rounding noise.
    Ok(kappa.clamp(0.0, 1.0))
}

/// Removes the maximal `kappa` proportion of `eta1` from `eta0` and returns
/// the rescaled remainder, which always touches the simplex boundary.
pub fn residue(
    eta0: &MixtureProportion,
    eta1: &MixtureProportion,
) -> Result<(f64, MixtureProportion)> {
    if eta0.len() != eta1.len() {
        return Err(SimplexError::LengthMismatch {
            left: eta0.len(),
            right: eta1.len(),
        });
    }
    if eta0.max_abs_diff(eta1) <= TOL.clamp {
        return Err(SimplexError::EqualInputs);
    }
    let kappa = two_sample_kappa(eta0, eta1)?;
    if kappa >= 1.0 {
        // Distinct inputs force kappa < 1; reaching this means the inputs
        // differ only below the clamp tolerance.
        return Err(SimplexError::EqualInputs);
    }
    let res: Vec<f64> = eta0
        .weights()
        .iter()
        .zip(eta1.weights())
        .map(|(a, b)| (a - kappa * b) / (1.0 - kappa))
        .collect();
    Ok((kappa, MixtureProportion::new(res)?))
}

/// Multi-sample kappa: the largest total proportion of `etas` jointly
/// removable from `eta0`, solved as a linear program over the removal
/// weights `nu`. Ties among optimal `nu` are broken by the lexicographically
/// smallest vector so the output is deterministic.
pub fn multi_sample_kappa(
    eta0: &MixtureProportion,
    etas: &[&MixtureProportion],
) -> Result<KappaSolution> {
    let l = eta0.len();
    for e in etas {
        if e.len() != l {
            return Err(SimplexError::LengthMismatch {
                left: l,
                right: e.len(),
            });
        }
    }
    let k = etas.len();
    if k == 0 {
        return Err(SimplexError::Empty);
    }

    let mut constraints = Vec::with_capacity(l + 1);
    for j in 0..l {
        constraints.push(Constraint {
            coeffs: etas.iter().map(|e| e.get(j)).collect(),
            relation: Relation::Le,
            rhs: eta0.get(j),
        });
    }
    constraints.push(Constraint {
        coeffs: vec![1.0; k],
        relation: Relation::Le,
        rhs: 1.0,
    });

    let objective = vec![1.0; k];
    let sol = lp::maximize_lex_min(&objective, &constraints)
        .map_err(|e| SimplexError::Lp(e.to_string()))?;
    let nu: Vec<f64> = sol.x.iter().map(|v| v.max(0.0)).collect();
    let kappa = sol.value.clamp(0.0, 1.0);

    if kappa >= 1.0 - TOL.decision {
        return Ok(KappaSolution {
            kappa: 1.0,
            nu,
            residue: None,
        });
    }
    let mut rem: Vec<f64> = eta0.weights().to_vec();
    for (nu_i, eta) in nu.iter().zip(etas) {
        for (r, w) in rem.iter_mut().zip(eta.weights()) {
            *r -= nu_i * w;
        }
    }
    let scale = 1.0 - kappa;
    let res: Vec<f64> = rem
        .iter()
        .map(|r| {
            let v = r / scale;
            // LP feasibility slack can leave noise slightly beyond the
            // construction clamp; snap it here, the residue is exact up to
            // solver tolerance by construction.
            if v < 0.0 && v > -1e-7 {
                0.0
            } else {
                v
            }
        })
        .collect();
    let total: f64 = res.iter().sum();
    let res = MixtureProportion::new(res.iter().map(|v| v / total).collect())?;
    Ok(KappaSolution {
        kappa,
        nu,
        residue: Some(res),
    })
}

/// Indices with weight strictly above `tol`.
pub fn support_set(eta: &MixtureProportion, tol: f64) -> Vec<usize> {
    eta.weights()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > tol)
        .map(|(i, _)| i)
        .collect()
}

/// Condition (B1): the mixing matrix is invertible and its inverse has a
/// strictly positive diagonal and nonpositive off-diagonal entries. This is
/// the low-noise condition under which class order is preserved.
pub fn check_b1(pi: &MixingMatrix) -> Result<bool> {
    if !pi.is_square() {
        return Err(SimplexError::NonSquare {
            rows: pi.m(),
            cols: pi.l(),
        });
    }
    let raw = pi.to_raw();
    if linalg::condition_number(&raw) >= 1e12 {
        return Ok(false);
    }
    let Some(inv) = linalg::invert(&raw, 1e-300) else {
        return Ok(false);
    };
    let l = pi.l();
    for i in 0..l {
        for j in 0..l {
            if i == j {
                if inv[i][j] <= TOL.decision {
                    return Ok(false);
                }
            } else if inv[i][j] >= TOL.decision {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Mixing matrix whose rows shift each vertex `e_i` towards a common point
/// `c`: row i is `gamma_i * c + (1 - gamma_i) * e_i`. Always satisfies (B1).
pub fn common_background_noise(c: &MixtureProportion, gammas: &[f64]) -> Result<MixingMatrix> {
    let l = c.len();
    if gammas.len() != l {
        return Err(SimplexError::LengthMismatch {
            left: l,
            right: gammas.len(),
        });
    }
    let mut rows = Vec::with_capacity(l);
    for (i, &g) in gammas.iter().enumerate() {
        if !(0.0..1.0).contains(&g) {
            return Err(SimplexError::GammaOutOfRange { index: i, value: g });
        }
        let mut w: Vec<f64> = c.weights().iter().map(|&cj| g * cj).collect();
        w[i] += 1.0 - g;
        rows.push(MixtureProportion::new(w)?);
    }
    MixingMatrix::new(rows)
}

/// Affine interpolation `(1 - nu) x + nu y` on the simplex.
pub fn blend(
    x: &MixtureProportion,
    y: &MixtureProportion,
    nu: f64,
) -> Result<MixtureProportion> {
    if x.len() != y.len() {
        return Err(SimplexError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if !(0.0..=1.0).contains(&nu) {
        return Err(SimplexError::NuOutOfRange(nu));
    }
    MixtureProportion::new(
        x.weights()
            .iter()
            .zip(y.weights())
            .map(|(a, b)| (1.0 - nu) * a + nu * b)
            .collect(),
    )
}

/// Convex combination of several proportions with the given weights.
pub fn combine(points: &[&MixtureProportion], weights: &[f64]) -> Result<MixtureProportion> {
    if points.is_empty() || points.len() != weights.len() {
        return Err(SimplexError::LengthMismatch {
            left: points.len(),
            right: weights.len(),
        });
    }
    let l = points[0].len();
    let mut acc = vec![0.0; l];
    for (p, &w) in points.iter().zip(weights) {
        if p.len() != l {
            return Err(SimplexError::LengthMismatch {
                left: l,
                right: p.len(),
            });
        }
        for (a, v) in acc.iter_mut().zip(p.weights()) {
            *a += w * v;
        }
    }
    MixtureProportion::new(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mp(w: &[f64]) -> MixtureProportion {
        MixtureProportion::new(w.to_vec()).unwrap()
    }

    #[test]
    fn construction_clamps_tiny_negatives() {
        let p = MixtureProportion::new(vec![1.0 + 5e-13, -5e-13]).unwrap();
        assert_eq!(p.get(1), 0.0);
        assert!(MixtureProportion::new(vec![1.0 + 1e-10, -1e-10]).is_err());
        assert!(matches!(
            MixtureProportion::new(vec![0.5, 0.4]),
            Err(SimplexError::BadSum { .. })
        ));
    }

    #[test]
    fn two_sample_kappa_identical() {
        let p = mp(&[0.5, 0.5]);
        assert_eq!(two_sample_kappa(&p, &p).unwrap(), 1.0);
    }

    #[test]
    fn two_sample_kappa_disjoint_supports() {
        assert_eq!(
            two_sample_kappa(&mp(&[1.0, 0.0]), &mp(&[0.0, 1.0])).unwrap(),
            0.0
        );
    }

    #[test]
    fn two_sample_kappa_min_ratio() {
        // min(0.6/0.2, 0.4/0.8) = 0.5
        let k = two_sample_kappa(&mp(&[0.6, 0.4]), &mp(&[0.2, 0.8])).unwrap();
        assert!((k - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_sample_kappa_length_mismatch() {
        assert!(matches!(
            two_sample_kappa(&mp(&[1.0]), &mp(&[0.5, 0.5])),
            Err(SimplexError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn residue_known_case() {
        let (k, r) = residue(&mp(&[0.6, 0.4]), &mp(&[0.2, 0.8])).unwrap();
        assert!((k - 0.5).abs() < 1e-15);
        assert!(r.approx_eq(&mp(&[1.0, 0.0]), 1e-12));
    }

    #[test]
    fn residue_irreducible_is_identity() {
        let (k, r) = residue(&mp(&[1.0, 0.0, 0.0]), &mp(&[0.0, 1.0, 0.0])).unwrap();
        assert_eq!(k, 0.0);
        assert!(r.approx_eq(&mp(&[1.0, 0.0, 0.0]), 1e-15));
    }

    #[test]
    fn residue_equal_inputs_rejected() {
        let p = mp(&[0.5, 0.5]);
        assert_eq!(residue(&p, &p).unwrap_err(), SimplexError::EqualInputs);
    }

    #[test]
    fn residue_reconstruction_and_boundary() {
        let eta0 = mp(&[0.3, 0.45, 0.25]);
        let eta1 = mp(&[0.2, 0.3, 0.5]);
        let (k, r) = residue(&eta0, &eta1).unwrap();
        for j in 0..3 {
            let back = (1.0 - k) * r.get(j) + k * eta1.get(j);
            assert!((back - eta0.get(j)).abs() < 1e-9);
        }
        let min = r.weights().iter().cloned().fold(f64::MAX, f64::min);
        assert!(min <= 1e-9);
    }

    #[test]
    fn multi_sample_matches_grid_example() {
        let eta0 = mp(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        let e1 = mp(&[1.0, 0.0, 0.0]);
        let e2 = mp(&[0.0, 1.0, 0.0]);
        let sol = multi_sample_kappa(&eta0, &[&e1, &e2]).unwrap();
        assert!((sol.kappa - 2.0 / 3.0).abs() < 1e-9);
        assert!((sol.nu[0] - 1.0 / 3.0).abs() < 1e-9);
        assert!((sol.nu[1] - 1.0 / 3.0).abs() < 1e-9);
        let res = sol.residue.unwrap();
        assert!(res.approx_eq(&mp(&[0.0, 0.0, 1.0]), 1e-9));
    }

    #[test]
    fn multi_sample_disjoint() {
        let sol = multi_sample_kappa(
            &mp(&[1.0, 0.0, 0.0]),
            &[&mp(&[0.0, 1.0, 0.0]), &mp(&[0.0, 0.0, 1.0])],
        )
        .unwrap();
        assert_eq!(sol.kappa, 0.0);
        assert!(sol
            .residue
            .unwrap()
            .approx_eq(&mp(&[1.0, 0.0, 0.0]), 1e-12));
    }

    #[test]
    fn multi_sample_single_matches_two_sample() {
        let eta0 = mp(&[0.6, 0.4]);
        let eta1 = mp(&[0.2, 0.8]);
        let sol = multi_sample_kappa(&eta0, &[&eta1]).unwrap();
        assert!((sol.kappa - 0.5).abs() < 1e-12);
        assert!(sol.residue.unwrap().approx_eq(&mp(&[1.0, 0.0]), 1e-9));
    }

    #[test]
    fn multi_sample_degenerate_has_no_residue() {
        let mid = mp(&[0.5, 0.5]);
        let sol = multi_sample_kappa(&mid, &[&mid]).unwrap();
        assert_eq!(sol.kappa, 1.0);
        assert!(sol.residue.is_none());
    }

    #[test]
    fn support_set_with_tolerance() {
        assert_eq!(support_set(&mp(&[0.5, 0.5, 0.0]), 1e-9), vec![0, 1]);
        assert_eq!(support_set(&mp(&[1.0, 0.0]), 1e-9), vec![0]);
        let edge = mp(&[0.5, 5e-10, 0.5 - 5e-10]);
        assert_eq!(support_set(&edge, 1e-9), vec![0, 2]);
    }

    #[test]
    fn check_b1_identity_and_background() {
        assert!(check_b1(&MixingMatrix::identity(3)).unwrap());
        let c = MixtureProportion::uniform(3);
        let bg = common_background_noise(&c, &[0.5, 0.5, 0.5]).unwrap();
        assert!(check_b1(&bg).unwrap());
    }

    #[test]
    fn check_b1_rejects_resampled_eq4() {
        // The pairwise-average resampling of the (0.1, 0.9) pattern matrix.
        let pi = MixingMatrix::from_raw(vec![
            vec![0.5, 0.45, 0.05],
            vec![0.05, 0.5, 0.45],
            vec![0.45, 0.05, 0.5],
        ])
        .unwrap();
        assert!(!check_b1(&pi).unwrap());
    }

    #[test]
    fn check_b1_requires_square() {
        let pi = MixingMatrix::from_raw(vec![vec![0.5, 0.5], vec![0.3, 0.7], vec![1.0, 0.0]])
            .unwrap();
        assert!(matches!(check_b1(&pi), Err(SimplexError::NonSquare { .. })));
    }

    #[test]
    fn common_background_formula() {
        let zero = common_background_noise(&MixtureProportion::uniform(3), &[0.0, 0.0, 0.0])
            .unwrap();
        assert_eq!(zero, MixingMatrix::identity(3));

        let bg =
            common_background_noise(&MixtureProportion::uniform(3), &[0.3, 0.3, 0.3]).unwrap();
        let want = MixingMatrix::from_raw(vec![
            vec![0.8, 0.1, 0.1],
            vec![0.1, 0.8, 0.1],
            vec![0.1, 0.1, 0.8],
        ])
        .unwrap();
        for i in 0..3 {
            assert!(bg.row(i).approx_eq(want.row(i), 1e-12));
        }

        let e1 = MixtureProportion::basis(0, 3);
        let bg2 = common_background_noise(&e1, &[0.0, 0.5, 0.5]).unwrap();
        assert!(bg2.row(0).approx_eq(&mp(&[1.0, 0.0, 0.0]), 1e-12));
        assert!(bg2.row(1).approx_eq(&mp(&[0.5, 0.5, 0.0]), 1e-12));
        assert!(bg2.row(2).approx_eq(&mp(&[0.5, 0.0, 0.5]), 1e-12));
    }

    #[test]
    fn common_background_rejects_gamma_one() {
        let c = MixtureProportion::uniform(2);
        assert!(matches!(
            common_background_noise(&c, &[0.5, 1.0]),
            Err(SimplexError::GammaOutOfRange { index: 1, .. })
        ));
    }

    #[test]
    fn blend_endpoints_and_linearity() {
        let x = mp(&[1.0, 0.0]);
        let y = mp(&[0.0, 1.0]);
        assert!(blend(&x, &y, 0.0).unwrap().approx_eq(&x, 0.0));
        assert!(blend(&x, &y, 1.0).unwrap().approx_eq(&y, 0.0));
        assert!(blend(&x, &y, 0.25)
            .unwrap()
            .approx_eq(&mp(&[0.75, 0.25]), 1e-15));
        assert!(matches!(
            blend(&x, &y, 1.5),
            Err(SimplexError::NuOutOfRange(_))
        ));
    }

    #[test]
    fn partial_label_matrix_validators() {
        let s = PartialLabelMatrix::new(vec![
            vec![true, true, false],
            vec![true, false, true],
            vec![false, true, true],
        ])
        .unwrap();
        assert!(s.columns_unique());
        assert!(s.satisfies_condition_d());
        assert_eq!(s.ones(), 6);

        assert!(matches!(
            PartialLabelMatrix::new(vec![vec![true, true], vec![false, false]]),
            Err(SimplexError::ZeroRow(1))
        ));

        let dup = PartialLabelMatrix::new(vec![
            vec![true, true, false],
            vec![true, true, false],
            vec![false, false, true],
        ])
        .unwrap();
        assert!(!dup.columns_unique());

        let singleton = PartialLabelMatrix::new(vec![
            vec![true, false, false],
            vec![true, true, true],
            vec![false, true, true],
        ])
        .unwrap();
        assert!(!singleton.satisfies_condition_d());
    }

    #[test]
    fn mixing_consistency() {
        let pi = MixingMatrix::from_raw(vec![
            vec![0.5, 0.5, 0.0],
            vec![0.5, 0.0, 0.5],
            vec![0.0, 0.5, 0.5],
        ])
        .unwrap();
        let s = PartialLabelMatrix::from_mixing(&pi);
        assert!(s.consistent_with(&pi));
        assert!(!s.consistent_with(&MixingMatrix::identity(3)));
    }

    #[test]
    fn json_round_trip_is_bit_stable() {
        let p = mp(&[1.0 / 3.0, 1.0 / 3.0 + 1e-16, 1.0 - 2.0 / 3.0 - 1e-16]);
        let text = serde_json::to_string(&p).unwrap();
        let back: MixtureProportion = serde_json::from_str(&text).unwrap();
        for (a, b) in p.weights().iter().zip(back.weights()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }

        let pi = common_background_noise(&MixtureProportion::uniform(3), &[0.3, 0.2, 0.1])
            .unwrap();
        let text = serde_json::to_string(&pi).unwrap();
        assert!(text.starts_with("{\"L\":3,\"rows\":"));
        let back: MixingMatrix = serde_json::from_str(&text).unwrap();
        for (r1, r2) in pi.rows().iter().zip(back.rows()) {
            for (a, b) in r1.weights().iter().zip(r2.weights()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn discrete_distribution_validation() {
        let d = DiscreteDistribution::new(vec![0, 1, 2], vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(d.prob_of(2), 0.5);
        assert_eq!(d.prob_of(9), 0.0);
        assert!(matches!(
            DiscreteDistribution::new(vec![0, 0], vec![0.5, 0.5]),
            Err(SimplexError::DuplicateAtoms)
        ));
    }
}
