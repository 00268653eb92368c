//! Exact decontamination algorithms on mixture proportions.
//!
//! Everything here runs in proportion space: under joint irreducibility the
//! kappa operators on distributions and on their mixture proportions agree,
//! so recovering base distributions reduces to recovering simplex vertices.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;
use crate::sampling::uniform_simplex;
use crate::simplex::{
    blend, check_b1, combine, multi_sample_kappa, residue, support_set, two_sample_kappa,
    MixingMatrix, MixtureProportion, PartialLabelMatrix, SimplexError, TOL,
};

pub const DEFAULT_MAX_FACE_ITER: usize = 10_000;
pub const DEFAULT_MAX_K: usize = 10_000;

#[derive(Debug, Error)]
pub enum PopulationError {
    #[error("mixing matrix does not satisfy condition (B1)")]
    PreconditionB1,
    #[error("input proportions are rank deficient")]
    RankDeficient,
    #[error("loop cap of {0} exceeded; geometry is numerically near-degenerate")]
    LoopCapExceeded(usize),
    #[error("partial label matrix has duplicate columns")]
    DuplicateColumns,
    #[error("kappa reached 1 where a residue was required")]
    DegenerateKappa,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
}

pub type Result<T> = std::result::Result<T, PopulationError>;

/// How the last vertex of a demix recursion is recovered: one multi-sample
/// solve, or a chain of two-sample residues against the already-recovered
/// vertices. Both return the same vertex; the chain is the form the
/// finite-sample algorithm mirrors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DemixVariant {
    MultiSample,
    ResidueChain,
}

/// Output of a demix run: recovered vertices (a permutation of the basis
/// vectors when the preconditions held) plus the while-loop count of every
/// recursion level that had one, outermost first.
#[derive(Debug, Clone)]
pub struct DemixResult {
    pub vertices: Vec<MixtureProportion>,
    pub iterations_used: Vec<usize>,
}

/// Outcome of a vertex test. `permutation` is present exactly when `found`;
/// `permutation[k]` is the index of the candidate that is class k's vertex,
/// so reordering candidates by it lists the vertices in class order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexTestResult {
    pub found: bool,
    pub permutation: Option<Vec<usize>>,
}

/// Unified serialization of population results:
/// `{"vertices": [[...]], "permutation": [ints] | null, "iterations": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultJson {
    pub vertices: Vec<Vec<f64>>,
    pub permutation: Option<Vec<usize>>,
    pub iterations: Vec<usize>,
}

impl DemixResult {
    pub fn to_json(&self) -> ResultJson {
        ResultJson {
            vertices: self.vertices.iter().map(|v| v.weights().to_vec()).collect(),
            permutation: None,
            iterations: self.iterations_used.clone(),
        }
    }
}

/// Recover the base proportions of a square label-noise problem in class
/// order: output i is the multi-sample residue of row i with respect to the
/// other rows, which under (B1) is exactly `e_i`.
pub fn multiclass_decontaminate(
    contaminated: &[MixtureProportion],
) -> Result<Vec<MixtureProportion>> {
    let pi = MixingMatrix::new(contaminated.to_vec())?;
    if !check_b1(&pi)? {
        return Err(PopulationError::PreconditionB1);
    }
    let mut out = Vec::with_capacity(contaminated.len());
    for i in 0..contaminated.len() {
        let others: Vec<&MixtureProportion> = contaminated
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, p)| p)
            .collect();
        let sol = multi_sample_kappa(&contaminated[i], &others)?;
        out.push(sol.residue.ok_or(PopulationError::DegenerateKappa)?);
    }
    Ok(out)
}

/// True iff all inputs lie in the relative interior of the same face of the
/// simplex, equivalently iff every pairwise two-sample kappa is positive,
/// equivalently iff all support sets agree.
pub fn face_test(etas: &[MixtureProportion]) -> bool {
    if etas.len() <= 1 {
        return true;
    }
    let first = support_set(&etas[0], TOL.decision);
    etas[1..]
        .iter()
        .all(|e| support_set(e, TOL.decision) == first)
}

/// Recover a permutation of the simplex vertices spanned by `contaminated`.
///
/// The recursion re-blends all inputs but the first towards a random point
/// of their hull with weights 1/n, (n-1)/n until the residues with respect
/// to the first input land on a common face, demixes that face, then
/// recovers the remaining vertex from the mean of the inputs.
pub fn demix(
    contaminated: &[MixtureProportion],
    rng_seed: u64,
    variant: DemixVariant,
    max_face_iter: usize,
) -> Result<DemixResult> {
    let k = contaminated.len();
    if k < 2 {
        return Err(PopulationError::InvalidInput(
            "demix needs at least two proportions".into(),
        ));
    }
    let raw: Vec<Vec<f64>> = contaminated.iter().map(|p| p.weights().to_vec()).collect();
    if linalg::rank(&raw, TOL.decision) < k {
        return Err(PopulationError::RankDeficient);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut iterations = Vec::new();
    let vertices = demix_rec(
        contaminated.to_vec(),
        &mut rng,
        variant,
        max_face_iter,
        &mut iterations,
    )?;
    Ok(DemixResult {
        vertices,
        iterations_used: iterations,
    })
}

fn demix_rec(
    inputs: Vec<MixtureProportion>,
    rng: &mut ChaCha8Rng,
    variant: DemixVariant,
    max_face_iter: usize,
    iterations: &mut Vec<usize>,
) -> Result<Vec<MixtureProportion>> {
    let k = inputs.len();
    if k == 2 {
        let (_, q1) = residue(&inputs[0], &inputs[1])?;
        let (_, q2) = residue(&inputs[1], &inputs[0])?;
        return Ok(vec![q1, q2]);
    }

    let weights = uniform_simplex(rng, k - 1);
    let tail: Vec<&MixtureProportion> = inputs[1..].iter().collect();
    let q = combine(&tail, &weights)?;

    let mut n = 1usize;
    let mut loops = 0usize;
    let residues = loop {
        n += 1;
        loops += 1;
        if loops > max_face_iter {
            return Err(PopulationError::LoopCapExceeded(max_face_iter));
        }
        let nu = (n as f64 - 1.0) / n as f64;
        let mut rs = Vec::with_capacity(k - 1);
        for s in &inputs[1..] {
            let pulled = blend(s, &q, nu)?;
            let (_, r) = residue(&pulled, &inputs[0])?;
            rs.push(r);
        }
        if face_test(&rs) {
            break rs;
        }
    };
    iterations.push(loops);

    let mut vertices = demix_rec(residues, rng, variant, max_face_iter, iterations)?;

    let all: Vec<&MixtureProportion> = inputs.iter().collect();
    let mean = combine(&all, &vec![1.0 / k as f64; k])?;
    let last = match variant {
        DemixVariant::MultiSample => {
            let firsts: Vec<&MixtureProportion> = vertices.iter().collect();
            multi_sample_kappa(&mean, &firsts)?
                .residue
                .ok_or(PopulationError::DegenerateKappa)?
        }
        DemixVariant::ResidueChain => {
            let mut cur = mean;
            for v in &vertices {
                let (_, next) = residue(&cur, v)?;
                cur = next;
            }
            cur
        }
    };
    vertices.push(last);
    Ok(vertices)
}

/// Demixing with more contaminated distributions than bases: draw `l`
/// random convex combinations of the inputs (linearly independent with
/// probability one) and demix those.
pub fn nonsquare_demix(
    contaminated: &[MixtureProportion],
    l: usize,
    rng_seed: u64,
    max_face_iter: usize,
) -> Result<DemixResult> {
    let m = contaminated.len();
    if m < l || l < 2 {
        return Err(PopulationError::InvalidInput(format!(
            "need at least {l} inputs of dimension {l}, got {m}"
        )));
    }
    let raw: Vec<Vec<f64>> = contaminated.iter().map(|p| p.weights().to_vec()).collect();
    if linalg::rank(&raw, TOL.decision) < l {
        return Err(PopulationError::RankDeficient);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let all: Vec<&MixtureProportion> = contaminated.iter().collect();
    let mut resampled = Vec::with_capacity(l);
    for _ in 0..l {
        let w = uniform_simplex(&mut rng, m);
        resampled.push(combine(&all, &w)?);
    }
    let mut iterations = Vec::new();
    let vertices = demix_rec(
        resampled,
        &mut rng,
        DemixVariant::MultiSample,
        max_face_iter,
        &mut iterations,
    )?;
    Ok(DemixResult {
        vertices,
        iterations_used: iterations,
    })
}

/// Decide whether `candidates` is a permutation of the basis vectors and, if
/// so, how to reorder it into class order using the partial label matrix.
///
/// The candidates pass only if no candidate absorbs a positive proportion of
/// another (all are vertices) and the pattern of positive kappas between the
/// contaminated rows and the candidates matches the label matrix up to a
/// column permutation.
pub fn vertex_test(
    s: &PartialLabelMatrix,
    contaminated: &[MixtureProportion],
    candidates: &[MixtureProportion],
) -> Result<VertexTestResult> {
    if !s.columns_unique() {
        return Err(PopulationError::DuplicateColumns);
    }
    if s.m() != contaminated.len() || s.l() != candidates.len() {
        return Err(PopulationError::InvalidInput(format!(
            "label matrix is {}x{} but got {} contaminated rows and {} candidates",
            s.m(),
            s.l(),
            contaminated.len(),
            candidates.len()
        )));
    }

    let not_found = VertexTestResult {
        found: false,
        permutation: None,
    };

    for i in 0..candidates.len() {
        for j in 0..candidates.len() {
            if i != j && two_sample_kappa(&candidates[i], &candidates[j])? > TOL.decision {
                return Ok(not_found);
            }
        }
    }

    let z: Vec<Vec<bool>> = contaminated
        .iter()
        .map(|p| {
            candidates
                .iter()
                .map(|q| two_sample_kappa(p, q).map(|k| k > TOL.decision))
                .collect::<std::result::Result<Vec<bool>, SimplexError>>()
        })
        .collect::<std::result::Result<Vec<Vec<bool>>, SimplexError>>()?;

    match match_columns(&z, s) {
        Some(perm) => Ok(VertexTestResult {
            found: true,
            permutation: Some(perm),
        }),
        None => Ok(not_found),
    }
}

/// Find the column permutation aligning a binary matrix to `s`, if one
/// exists: sort both column sets lexicographically and compare.
/// Returns `perm` with `perm[k]` = column of `z` matching class k.
pub(crate) fn match_columns(z: &[Vec<bool>], s: &PartialLabelMatrix) -> Option<Vec<usize>> {
    let l = s.l();
    if z.is_empty() || z[0].len() != l || z.len() != s.m() {
        return None;
    }
    let col_of = |m: &dyn Fn(usize, usize) -> bool, j: usize| -> Vec<bool> {
        (0..s.m()).map(|i| m(i, j)).collect()
    };
    let zf = |i: usize, j: usize| z[i][j];
    let sf = |i: usize, j: usize| s.get(i, j);

    let mut z_cols: Vec<(Vec<bool>, usize)> = (0..l).map(|j| (col_of(&zf, j), j)).collect();
    let mut s_cols: Vec<(Vec<bool>, usize)> = (0..l).map(|j| (col_of(&sf, j), j)).collect();
    z_cols.sort();
    s_cols.sort();

    let mut perm = vec![0usize; l];
    for ((zc, zi), (sc, si)) in z_cols.into_iter().zip(s_cols) {
        if zc != sc {
            return None;
        }
        perm[si] = zi;
    }
    Some(perm)
}

/// Recover the base proportions of a partial label problem in class order.
///
/// Candidate vertex sets are generated for k = 2, 3, ... by repeatedly
/// pulling a random interior point towards the hull of the current
/// candidates and solving a multi-sample residue; the vertex test decides
/// when the candidates are the true vertices and how to order them.
pub fn partial_label_decontaminate(
    s: &PartialLabelMatrix,
    contaminated: &[MixtureProportion],
    rng_seed: u64,
    max_k: usize,
) -> Result<Vec<MixtureProportion>> {
    if !s.columns_unique() {
        return Err(PopulationError::DuplicateColumns);
    }
    let m = contaminated.len();
    let l = s.l();
    if s.m() != m {
        return Err(PopulationError::InvalidInput(format!(
            "label matrix has {} rows but {} contaminated proportions given",
            s.m(),
            m
        )));
    }
    if l < 2 {
        return Err(PopulationError::InvalidInput(
            "need at least two classes".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let all: Vec<&MixtureProportion> = contaminated.iter().collect();
    let q: Vec<MixtureProportion> = (0..l)
        .map(|_| {
            let w = uniform_simplex(&mut rng, m);
            combine(&all, &w)
        })
        .collect::<std::result::Result<_, SimplexError>>()?;
    let mut w: Vec<MixtureProportion> = q.clone();

    for k in 2..=(max_k.max(2)) {
        for i in 0..l {
            // Already-resolved candidates below i, fresh draws above it.
            let mut hull: Vec<&MixtureProportion> = Vec::with_capacity(l - 1);
            hull.extend(w.iter().take(i));
            hull.extend(q.iter().skip(i + 1));
            let avg = combine(&hull, &vec![1.0 / (l as f64 - 1.0); l - 1])?;
            let target = blend(&q[i], &avg, 1.0 - 1.0 / k as f64)?;
            let sol = multi_sample_kappa(&target, &hull)?;
            w[i] = sol.residue.ok_or(PopulationError::DegenerateKappa)?;
        }
        let vt = vertex_test(s, contaminated, &w)?;
        if vt.found {
            let perm = vt.permutation.expect("found implies permutation");
            return Ok(perm.into_iter().map(|j| w[j].clone()).collect());
        }
    }
    Err(PopulationError::LoopCapExceeded(max_k))
}

/// Sequential two-sample residues of `q` against each anchor in turn; when
/// the anchors are distinct vertices of a face containing `q`, the result is
/// the remaining vertex.
pub fn residue_chain(
    q: &MixtureProportion,
    anchors: &[&MixtureProportion],
) -> Result<MixtureProportion> {
    let mut cur = q.clone();
    for a in anchors {
        let (_, next) = residue(&cur, a)?;
        cur = next;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::common_background_noise;

    fn mp(w: &[f64]) -> MixtureProportion {
        MixtureProportion::new(w.to_vec()).unwrap()
    }

    fn basis_set(l: usize) -> Vec<MixtureProportion> {
        (0..l).map(|i| MixtureProportion::basis(i, l)).collect()
    }

    fn eq3_rows() -> Vec<MixtureProportion> {
        vec![
            mp(&[0.5, 0.5, 0.0]),
            mp(&[0.5, 0.0, 0.5]),
            mp(&[0.0, 0.5, 0.5]),
        ]
    }

    #[test]
    fn multiclass_identity_unchanged() {
        let rows = basis_set(3);
        let out = multiclass_decontaminate(&rows).unwrap();
        for (o, e) in out.iter().zip(&rows) {
            assert!(o.approx_eq(e, 1e-9));
        }
    }

    #[test]
    fn multiclass_common_background() {
        let bg = common_background_noise(&MixtureProportion::uniform(3), &[0.3, 0.3, 0.3])
            .unwrap();
        let out = multiclass_decontaminate(bg.rows()).unwrap();
        for (i, o) in out.iter().enumerate() {
            assert!(
                o.approx_eq(&MixtureProportion::basis(i, 3), 1e-7),
                "class {i} not recovered: {:?}",
                o
            );
        }
    }

    #[test]
    fn multiclass_resampled_eq3() {
        // Pairwise averages of the eq3 rows satisfy (B1) and decontaminate
        // in class order.
        let rows = eq3_rows();
        let resampled = vec![
            blend(&rows[0], &rows[1], 0.5).unwrap(),
            blend(&rows[0], &rows[2], 0.5).unwrap(),
            blend(&rows[1], &rows[2], 0.5).unwrap(),
        ];
        let out = multiclass_decontaminate(&resampled).unwrap();
        for (i, o) in out.iter().enumerate() {
            assert!(o.approx_eq(&MixtureProportion::basis(i, 3), 1e-7));
        }
    }

    #[test]
    fn multiclass_rejects_non_b1() {
        let rows = eq3_rows();
        assert!(matches!(
            multiclass_decontaminate(&rows),
            Err(PopulationError::PreconditionB1)
        ));
    }

    #[test]
    fn face_test_cases() {
        assert!(face_test(&[mp(&[0.5, 0.5, 0.0]), mp(&[0.3, 0.7, 0.0])]));
        assert!(!face_test(&[mp(&[1.0, 0.0, 0.0]), mp(&[0.5, 0.5, 0.0])]));
        assert!(face_test(&[mp(&[0.2, 0.8])]));
    }

    #[test]
    fn demix_base_case() {
        let r = demix(
            &[mp(&[0.8, 0.2]), mp(&[0.3, 0.7])],
            1,
            DemixVariant::MultiSample,
            DEFAULT_MAX_FACE_ITER,
        )
        .unwrap();
        assert!(r.vertices[0].approx_eq(&MixtureProportion::basis(0, 2), 1e-9));
        assert!(r.vertices[1].approx_eq(&MixtureProportion::basis(1, 2), 1e-9));
        assert!(r.iterations_used.is_empty());
    }

    #[test]
    fn demix_identity_rows() {
        for l in 2..=4 {
            let r = demix(
                &basis_set(l),
                9,
                DemixVariant::MultiSample,
                DEFAULT_MAX_FACE_ITER,
            )
            .unwrap();
            let mut hit = vec![false; l];
            for v in &r.vertices {
                let idx = v.argmax();
                assert!(v.approx_eq(&MixtureProportion::basis(idx, l), 1e-7));
                hit[idx] = true;
            }
            assert!(hit.iter().all(|&h| h));
        }
    }

    #[test]
    fn demix_eq3_many_seeds() {
        let rows = eq3_rows();
        for seed in 0..25 {
            let r = demix(&rows, seed, DemixVariant::MultiSample, DEFAULT_MAX_FACE_ITER)
                .unwrap();
            let mut hit = vec![false; 3];
            for v in &r.vertices {
                let idx = v.argmax();
                assert!(
                    v.approx_eq(&MixtureProportion::basis(idx, 3), 1e-7),
                    "seed {seed}: vertex {:?}",
                    v
                );
                hit[idx] = true;
            }
            assert!(hit.iter().all(|&h| h), "seed {seed} missed a vertex");
        }
    }

    #[test]
    fn demix_variants_agree() {
        let rows = eq3_rows();
        for seed in [0, 1, 2, 3, 4] {
            let a = demix(&rows, seed, DemixVariant::MultiSample, DEFAULT_MAX_FACE_ITER)
                .unwrap();
            let b = demix(&rows, seed, DemixVariant::ResidueChain, DEFAULT_MAX_FACE_ITER)
                .unwrap();
            for (va, vb) in a.vertices.iter().zip(&b.vertices) {
                assert!(va.approx_eq(vb, 1e-9));
            }
        }
    }

    #[test]
    fn demix_rank_deficient_rejected() {
        let rows = vec![mp(&[0.5, 0.5, 0.0]), mp(&[0.5, 0.5, 0.0]), mp(&[0.0, 0.5, 0.5])];
        assert!(matches!(
            demix(&rows, 0, DemixVariant::MultiSample, 100),
            Err(PopulationError::RankDeficient)
        ));
    }

    #[test]
    fn nonsquare_demix_recovers() {
        let mut rows = basis_set(3);
        rows.push(mp(&[1.0, 0.0, 0.0]));
        let r = nonsquare_demix(&rows, 3, 11, DEFAULT_MAX_FACE_ITER).unwrap();
        let mut hit = vec![false; 3];
        for v in &r.vertices {
            let idx = v.argmax();
            assert!(v.approx_eq(&MixtureProportion::basis(idx, 3), 1e-7));
            hit[idx] = true;
        }
        assert!(hit.iter().all(|&h| h));
    }

    #[test]
    fn nonsquare_demix_square_input_still_valid() {
        let rows = eq3_rows();
        let direct = demix(&rows, 5, DemixVariant::MultiSample, DEFAULT_MAX_FACE_ITER)
            .unwrap();
        let via_resample = nonsquare_demix(&rows, 3, 5, DEFAULT_MAX_FACE_ITER).unwrap();
        // Both recover the same vertex set (the basis), possibly reordered.
        for r in [&direct, &via_resample] {
            let mut hit = vec![false; 3];
            for v in &r.vertices {
                hit[v.argmax()] = true;
                assert!(v.approx_eq(&MixtureProportion::basis(v.argmax(), 3), 1e-7));
            }
            assert!(hit.iter().all(|&h| h));
        }
    }

    #[test]
    fn nonsquare_demix_rank_deficient() {
        let rows = vec![mp(&[0.5, 0.5, 0.0]), mp(&[0.2, 0.8, 0.0]), mp(&[0.8, 0.2, 0.0])];
        assert!(matches!(
            nonsquare_demix(&rows, 3, 0, 100),
            Err(PopulationError::RankDeficient)
        ));
    }

    #[test]
    fn vertex_test_identity() {
        let rows = eq3_rows();
        let s = PartialLabelMatrix::from_mixing(&MixingMatrix::new(rows.clone()).unwrap());
        let res = vertex_test(&s, &rows, &basis_set(3)).unwrap();
        assert!(res.found);
        assert_eq!(res.permutation.unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn vertex_test_swapped_candidates() {
        let rows = eq3_rows();
        let s = PartialLabelMatrix::from_mixing(&MixingMatrix::new(rows.clone()).unwrap());
        let candidates = vec![
            MixtureProportion::basis(1, 3),
            MixtureProportion::basis(0, 3),
            MixtureProportion::basis(2, 3),
        ];
        let res = vertex_test(&s, &rows, &candidates).unwrap();
        assert!(res.found);
        let perm = res.permutation.unwrap();
        // Reordering candidates by the permutation restores class order.
        for (k, &j) in perm.iter().enumerate() {
            assert!(candidates[j].approx_eq(&MixtureProportion::basis(k, 3), 1e-12));
        }
    }

    #[test]
    fn vertex_test_rejects_non_vertex() {
        let rows = eq3_rows();
        let s = PartialLabelMatrix::from_mixing(&MixingMatrix::new(rows.clone()).unwrap());
        let candidates = vec![
            mp(&[0.5, 0.5, 0.0]),
            MixtureProportion::basis(1, 3),
            MixtureProportion::basis(2, 3),
        ];
        let res = vertex_test(&s, &rows, &candidates).unwrap();
        assert!(!res.found);
        assert!(res.permutation.is_none());
    }

    #[test]
    fn vertex_test_duplicate_columns_rejected() {
        let s = PartialLabelMatrix::new(vec![
            vec![true, true, false],
            vec![true, true, false],
            vec![false, false, true],
        ])
        .unwrap();
        let rows = eq3_rows();
        assert!(matches!(
            vertex_test(&s, &rows, &basis_set(3)),
            Err(PopulationError::DuplicateColumns)
        ));
    }

    #[test]
    fn partial_label_eq3_and_eq4() {
        for raw in [
            vec![
                vec![0.5, 0.5, 0.0],
                vec![0.5, 0.0, 0.5],
                vec![0.0, 0.5, 0.5],
            ],
            vec![
                vec![0.1, 0.9, 0.0],
                vec![0.9, 0.0, 0.1],
                vec![0.0, 0.1, 0.9],
            ],
        ] {
            let pi = MixingMatrix::from_raw(raw).unwrap();
            let s = PartialLabelMatrix::from_mixing(&pi);
            let out =
                partial_label_decontaminate(&s, pi.rows(), 3, DEFAULT_MAX_K).unwrap();
            for (i, o) in out.iter().enumerate() {
                assert!(
                    o.approx_eq(&MixtureProportion::basis(i, 3), 1e-7),
                    "class {i}: {:?}",
                    o
                );
            }
        }
    }

    #[test]
    fn partial_label_identity_instance() {
        let pi = MixingMatrix::identity(3);
        let s = PartialLabelMatrix::from_mixing(&pi);
        let out = partial_label_decontaminate(&s, pi.rows(), 0, DEFAULT_MAX_K).unwrap();
        for (i, o) in out.iter().enumerate() {
            assert!(o.approx_eq(&MixtureProportion::basis(i, 3), 1e-7));
        }
    }

    #[test]
    fn partial_label_row_permutation_invariance() {
        let pi = MixingMatrix::from_raw(vec![
            vec![0.5, 0.5, 0.0],
            vec![0.5, 0.0, 0.5],
            vec![0.0, 0.5, 0.5],
        ])
        .unwrap();
        let s = PartialLabelMatrix::from_mixing(&pi);
        let base = partial_label_decontaminate(&s, pi.rows(), 7, DEFAULT_MAX_K).unwrap();

        let shuffled_rows = vec![pi.row(2).clone(), pi.row(0).clone(), pi.row(1).clone()];
        let s_shuffled = PartialLabelMatrix::new(vec![
            s.row(2).to_vec(),
            s.row(0).to_vec(),
            s.row(1).to_vec(),
        ])
        .unwrap();
        let shuffled =
            partial_label_decontaminate(&s_shuffled, &shuffled_rows, 7, DEFAULT_MAX_K)
                .unwrap();
        for (a, b) in base.iter().zip(&shuffled) {
            assert!(a.approx_eq(b, 1e-7));
        }
    }

    #[test]
    fn residue_chain_cases() {
        let e = basis_set(3);
        let center = MixtureProportion::uniform(3);
        let out = residue_chain(&center, &[&e[0], &e[1]]).unwrap();
        assert!(out.approx_eq(&e[2], 1e-9));

        let out = residue_chain(&mp(&[0.2, 0.8]), &[&MixtureProportion::basis(0, 2)]).unwrap();
        assert!(out.approx_eq(&MixtureProportion::basis(1, 2), 1e-9));

        let out = residue_chain(&e[2], &[&e[0], &e[1]]).unwrap();
        assert!(out.approx_eq(&e[2], 1e-9));
    }

    #[test]
    fn result_json_schema() {
        let r = DemixResult {
            vertices: vec![mp(&[1.0, 0.0])],
            iterations_used: vec![3],
        };
        let text = serde_json::to_string(&r.to_json()).unwrap();
        assert_eq!(
            text,
            "{\"vertices\":[[1.0,0.0]],\"permutation\":null,\"iterations\":[3]}"
        );
    }
}
