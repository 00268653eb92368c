//! Finite-sample decontamination: the Hat algorithms mirror the population
//! control flow with kappa-hat estimators and signed-mixture residues.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::empirical::{
    kappa_hat_multi_with, kappa_hat_two, residue_hat, CandidateFamily, EmpiricalDistribution,
    EmpiricalError, MultiMaxStrategy, SamplePool, SignedMixture, VcClassSpec, KAPPA_ONE_TOL,
};
use crate::population::{match_columns, VertexTestResult};
use crate::sampling::uniform_simplex;
use crate::simplex::PartialLabelMatrix;

pub const DEFAULT_FACE_EPSILON: f64 = 0.2;

/// Sampling-scale deviation allowance for desk-scale experiments: a third
/// of the summed DKW-shaped bounds `sqrt(ln(2(n+1)) / (2n))`. The full VC
/// allowance keeps its role in the theory-facing estimators, but below
/// roughly 1e6 points it exceeds 1/6 and forces every kappa-hat ratio above
/// any face threshold; this alternative keeps the same decay in n while
/// staying informative at experiment sizes.
pub fn desk_epsilon_n(sizes: &[usize]) -> f64 {
    sizes
        .iter()
        .map(|&n| ((2.0 * (n as f64 + 1.0)).ln() / (2.0 * n as f64)).sqrt())
        .sum::<f64>()
        / 3.0
}

#[derive(Debug, Error)]
pub enum HatError {
    #[error("kappa-hat reached {0}; residue undefined (degenerate or duplicated samples)")]
    KappaOne(f64),
    #[error("loop cap of {0} exceeded in face-test loop")]
    LoopCapExceeded(usize),
    #[error("partial label matrix has duplicate columns")]
    DuplicateColumns,
    #[error("partial label matrix violates condition (D); reduce it first")]
    ConditionDViolated,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Empirical(EmpiricalError),
}

impl From<EmpiricalError> for HatError {
    fn from(e: EmpiricalError) -> Self {
        match e {
            EmpiricalError::KappaOne(k) => HatError::KappaOne(k),
            other => HatError::Empirical(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, HatError>;

/// Where the shared deviation allowance comes from: the VC bound over all
/// sample sizes, or a fixed value (zero reproduces the population algorithms
/// on exact inputs).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EpsilonMode {
    Auto,
    /// A multiple of the Auto allowance. The VC bound's leading constant is
    /// a proof artifact; desk-scale experiments keep the sqrt(log/n) rate
    /// but shrink the constant to stay informative at moderate n.
    Scaled(f64),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HatParams {
    /// FaceTestHat threshold; correctness holds for any value in (0, 1).
    pub face_epsilon: f64,
    pub epsilon_mode: EpsilonMode,
    pub max_face_iter: usize,
    /// Redraw the random interior point after this many face-test failures
    /// at one recursion level. A draw whose limiting residue sits too close
    /// to a vertex cannot pass the face test before the pulled residues
    /// become numerically collinear; a fresh draw is almost surely benign.
    /// The total iteration budget stays `max_face_iter`.
    pub restart_after: usize,
}

pub const DEFAULT_RESTART_AFTER: usize = 16;

impl Default for HatParams {
    fn default() -> Self {
        HatParams {
            face_epsilon: DEFAULT_FACE_EPSILON,
            epsilon_mode: EpsilonMode::Auto,
            max_face_iter: crate::population::DEFAULT_MAX_FACE_ITER,
            restart_after: DEFAULT_RESTART_AFTER,
        }
    }
}

impl HatParams {
    fn eps_n(&self, pool: &SamplePool, vc: &VcClassSpec) -> f64 {
        match self.epsilon_mode {
            EpsilonMode::Auto => pool.epsilon_n(vc),
            EpsilonMode::Scaled(s) => s * pool.epsilon_n(vc),
            EpsilonMode::Fixed(e) => e,
        }
    }

    fn per_sample_eps(&self, pool: &SamplePool, vc: &VcClassSpec) -> Vec<f64> {
        match self.epsilon_mode {
            EpsilonMode::Auto => pool.per_sample_epsilons(vc),
            EpsilonMode::Scaled(s) => pool
                .per_sample_epsilons(vc)
                .iter()
                .map(|e| s * e)
                .collect(),
            EpsilonMode::Fixed(e) => vec![e; pool.count()],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HatDiagnostics {
    /// Kappa-hat values in the order they were computed.
    pub kappas: Vec<f64>,
    /// Face-test loop counts, outermost recursion level first.
    pub loop_counts: Vec<usize>,
    /// Estimator order of each final estimate.
    pub orders: Vec<i32>,
}

/// Output of a Hat pipeline: signed-mixture estimates, the class permutation
/// when a vertex test identified one, and per-stage diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HatResult {
    pub estimates: Vec<SignedMixture>,
    pub permutation: Option<Vec<usize>>,
    pub diagnostics: HatDiagnostics,
}

impl HatResult {
    /// Estimator orders are bounded by (L-1)^3 for every pipeline here.
    pub fn max_order_bound(l: usize) -> i32 {
        let k = (l.max(2) - 1) as i32;
        k * k * k
    }
}

struct Diag {
    kappas: Vec<f64>,
    loop_counts: Vec<usize>,
}

impl Diag {
    fn new() -> Self {
        Diag {
            kappas: Vec::new(),
            loop_counts: Vec::new(),
        }
    }
}

// ---------------------------------------------------------------------------
// Multiclass
// ---------------------------------------------------------------------------

/// Estimate the base distributions of a square label-noise problem in class
/// order: estimate i removes from sample i the maximal estimated proportions
/// of the other samples.
pub fn multiclass_hat(pool: &SamplePool, vc: &VcClassSpec, params: &HatParams) -> Result<HatResult> {
    let l = pool.count();
    if l < 2 {
        return Err(HatError::InvalidInput(
            "multiclass needs at least two samples".into(),
        ));
    }
    let family = pool.enumerate_candidates(vc)?;
    let eps = params.per_sample_eps(pool, vc);

    let mut estimates = Vec::with_capacity(l);
    let mut diag = Diag::new();
    for i in 0..l {
        let others: Vec<EmpiricalDistribution> = (0..l)
            .filter(|&j| j != i)
            .map(EmpiricalDistribution)
            .collect();
        let (_, nu) = kappa_hat_multi_with(
            &family,
            EmpiricalDistribution(i),
            &others,
            &eps,
            MultiMaxStrategy::Lp,
        )?;
        let kappa: f64 = nu.iter().sum();
        if kappa >= 1.0 - KAPPA_ONE_TOL {
            return Err(HatError::KappaOne(kappa));
        }
        diag.kappas.push(kappa);
        let mut coeffs = vec![0.0; l];
        coeffs[i] = 1.0 / (1.0 - kappa);
        for (o, nu_j) in others.iter().zip(&nu) {
            coeffs[o.0] = -nu_j / (1.0 - kappa);
        }
        estimates.push(SignedMixture::new(coeffs, 0).map_err(HatError::from)?);
    }
    let orders = estimates.iter().map(|e| e.order()).collect();
    Ok(HatResult {
        estimates,
        permutation: None,
        diagnostics: HatDiagnostics {
            kappas: diag.kappas,
            loop_counts: Vec::new(),
            orders,
        },
    })
}

// ---------------------------------------------------------------------------
// Face test and demixing
// ---------------------------------------------------------------------------

/// True iff every off-diagonal kappa-hat exceeds `epsilon`.
pub fn face_test_hat(
    family: &CandidateFamily,
    qhats: &[&SignedMixture],
    epsilon: f64,
    eps_n: f64,
) -> Result<bool> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(HatError::InvalidInput(format!(
            "face epsilon {epsilon} outside (0, 1)"
        )));
    }
    for (i, qi) in qhats.iter().enumerate() {
        for (j, qj) in qhats.iter().enumerate() {
            if i != j && kappa_hat_two(family, qi, qj, eps_n).map_err(HatError::from)? <= epsilon {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Finite-sample demixing of the pool's samples. Mirrors the exact recursion
/// with residue estimators and the epsilon-thresholded face test; the final
/// vertex comes from a chain of two-sample residues.
pub fn demix_hat(
    pool: &SamplePool,
    vc: &VcClassSpec,
    params: &HatParams,
    rng_seed: u64,
) -> Result<HatResult> {
    let l = pool.count();
    let inputs: Vec<SignedMixture> = (0..l).map(|i| SignedMixture::empirical(i, l)).collect();
    let family = pool.enumerate_candidates(vc)?;
    let eps_n = params.eps_n(pool, vc);
    demix_hat_mixtures(&family, inputs, params, eps_n, rng_seed)
}

/// Demixing over explicit signed mixtures (used by the partial-label
/// pipeline and the condition-(D) reduction).
pub fn demix_hat_mixtures(
    family: &CandidateFamily,
    inputs: Vec<SignedMixture>,
    params: &HatParams,
    eps_n: f64,
    rng_seed: u64,
) -> Result<HatResult> {
    if inputs.len() < 2 {
        return Err(HatError::InvalidInput(
            "demixing needs at least two inputs".into(),
        ));
    }
    let l = inputs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut diag = Diag::new();
    let estimates = demix_hat_rec(family, inputs, params, eps_n, &mut rng, &mut diag)?;
    let orders: Vec<i32> = estimates.iter().map(|e| e.order()).collect();
    debug_assert!(orders
        .iter()
        .all(|&o| o <= HatResult::max_order_bound(l)));
    Ok(HatResult {
        estimates,
        permutation: None,
        diagnostics: HatDiagnostics {
            kappas: diag.kappas,
            loop_counts: diag.loop_counts,
            orders,
        },
    })
}

fn demix_hat_rec(
    family: &CandidateFamily,
    inputs: Vec<SignedMixture>,
    params: &HatParams,
    eps_n: f64,
    rng: &mut ChaCha8Rng,
    diag: &mut Diag,
) -> Result<Vec<SignedMixture>> {
    let k = inputs.len();
    if k == 2 {
        let (k1, q1) = residue_hat(family, &inputs[0], &inputs[1], eps_n)?;
        let (k2, q2) = residue_hat(family, &inputs[1], &inputs[0], eps_n)?;
        diag.kappas.push(k1);
        diag.kappas.push(k2);
        return Ok(vec![q1, q2]);
    }

    let tail: Vec<&SignedMixture> = inputs[1..].iter().collect();
    let mut q = SignedMixture::combine(&tail, &uniform_simplex(rng, k - 1))
        .map_err(HatError::from)?;

    let mut n = 1usize;
    let mut loops = 0usize;
    let mut since_restart = 0usize;
    let residues = loop {
        n += 1;
        loops += 1;
        since_restart += 1;
        if loops > params.max_face_iter {
            return Err(HatError::LoopCapExceeded(params.max_face_iter));
        }
        let nu = (n as f64 - 1.0) / n as f64;
        let mut rs = Vec::with_capacity(k - 1);
        for s in &inputs[1..] {
            let pulled = SignedMixture::blend(s, &q, nu).map_err(HatError::from)?;
            let (kh, r) = residue_hat(family, &pulled, &inputs[0], eps_n)?;
            diag.kappas.push(kh);
            rs.push(r);
        }
        let refs: Vec<&SignedMixture> = rs.iter().collect();
        if face_test_hat(family, &refs, params.face_epsilon, eps_n)? {
            break rs;
        }
        if since_restart >= params.restart_after {
            q = SignedMixture::combine(&tail, &uniform_simplex(rng, k - 1))
                .map_err(HatError::from)?;
            n = 1;
            since_restart = 0;
        }
    };
    diag.loop_counts.push(loops);

    let mut vertices = demix_hat_rec(family, residues, params, eps_n, rng, diag)?;

    let all: Vec<&SignedMixture> = inputs.iter().collect();
    let mut last = SignedMixture::average(&all).map_err(HatError::from)?;
    for v in &vertices {
        let (kh, next) = residue_hat(family, &last, v, eps_n)?;
        diag.kappas.push(kh);
        last = next;
    }
    vertices.push(last);
    Ok(vertices)
}

// ---------------------------------------------------------------------------
// Vertex test and partial labels
// ---------------------------------------------------------------------------

/// Decide whether the candidate estimates are a permutation of the base
/// distributions using the partial label matrix: build the matrix of
/// kappa-hat values of each contaminated estimate against each candidate,
/// keep the |S| largest entries, and match columns against S.
///
/// Ties at the threshold are broken by larger kappa-hat first, then
/// row-major index, so the binarization is deterministic.
pub fn vertex_test_hat(
    s: &PartialLabelMatrix,
    family: &CandidateFamily,
    contaminated: &[SignedMixture],
    qhats: &[SignedMixture],
    eps_n: f64,
) -> Result<VertexTestResult> {
    if !s.columns_unique() {
        return Err(HatError::DuplicateColumns);
    }
    if !s.satisfies_condition_d() {
        return Err(HatError::ConditionDViolated);
    }
    let m = contaminated.len();
    let l = qhats.len();
    if s.m() != m || s.l() != l {
        return Err(HatError::InvalidInput(format!(
            "label matrix is {}x{} but got {m} contaminated and {l} candidates",
            s.m(),
            s.l()
        )));
    }

    let mut entries: Vec<(f64, usize, usize)> = Vec::with_capacity(m * l);
    for (i, c) in contaminated.iter().enumerate() {
        for (j, q) in qhats.iter().enumerate() {
            let kh = kappa_hat_two(family, c, q, eps_n).map_err(HatError::from)?;
            entries.push((kh, i, j));
        }
    }
    let ones = s.ones().min(entries.len());
    entries.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| (a.1 * l + a.2).cmp(&(b.1 * l + b.2)))
    });
    let mut z = vec![vec![false; l]; m];
    for &(_, i, j) in entries.iter().take(ones) {
        z[i][j] = true;
    }

    match match_columns(&z, s) {
        Some(perm) => Ok(VertexTestResult {
            found: true,
            permutation: Some(perm),
        }),
        None => Ok(VertexTestResult {
            found: false,
            permutation: None,
        }),
    }
}

/// End-to-end partial-label decontamination from samples: demix, then
/// vertex-test, then reorder the estimates into class order. When the vertex
/// test fails to identify a permutation the estimates are returned in
/// demixing order with `permutation` absent.
pub fn partial_label_hat(
    s: &PartialLabelMatrix,
    pool: &SamplePool,
    vc: &VcClassSpec,
    params: &HatParams,
    rng_seed: u64,
) -> Result<HatResult> {
    if !s.columns_unique() {
        return Err(HatError::DuplicateColumns);
    }
    if !s.satisfies_condition_d() {
        return Err(HatError::ConditionDViolated);
    }
    let m = pool.count();
    let l = s.l();
    if s.m() != m {
        return Err(HatError::InvalidInput(format!(
            "label matrix has {} rows, pool has {m} samples",
            s.m()
        )));
    }
    if m < l {
        return Err(HatError::InvalidInput(format!(
            "need at least {l} contaminated samples, got {m}"
        )));
    }
    let family = pool.enumerate_candidates(vc)?;
    let eps_n = params.eps_n(pool, vc);
    let contaminated: Vec<SignedMixture> =
        (0..m).map(|i| SignedMixture::empirical(i, m)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let inputs: Vec<SignedMixture> = if m == l {
        contaminated.clone()
    } else {
        // More sources than classes: demix random convex combinations, which
        // span the same hull and are linearly independent with probability 1.
        let refs: Vec<&SignedMixture> = contaminated.iter().collect();
        (0..l)
            .map(|_| {
                let w = uniform_simplex(&mut rng, m);
                SignedMixture::combine(&refs, &w).map_err(HatError::from)
            })
            .collect::<Result<_>>()?
    };

    let mut diag = Diag::new();
    let estimates = demix_hat_rec(&family, inputs, params, eps_n, &mut rng, &mut diag)?;

    let vt = vertex_test_hat(s, &family, &contaminated, &estimates, eps_n)?;
    let (estimates, permutation) = match vt.permutation {
        Some(perm) => {
            let ordered: Vec<SignedMixture> =
                perm.iter().map(|&j| estimates[j].clone()).collect();
            (ordered, Some(perm))
        }
        None => (estimates, None),
    };
    let orders: Vec<i32> = estimates.iter().map(|e| e.order()).collect();
    debug_assert!(orders
        .iter()
        .all(|&o| o <= HatResult::max_order_bound(l)));
    Ok(HatResult {
        estimates,
        permutation,
        diagnostics: HatDiagnostics {
            kappas: diag.kappas,
            loop_counts: diag.loop_counts,
            orders,
        },
    })
}

// ---------------------------------------------------------------------------
// Condition (D) reduction
// ---------------------------------------------------------------------------

/// Result of peeling sources that equal a single base distribution.
#[derive(Debug, Clone)]
pub struct ConditionDReduction {
    /// Label matrix over the remaining rows and classes; `None` when every
    /// class was pinned and nothing is left to demix.
    pub s_reduced: Option<PartialLabelMatrix>,
    /// Peeled estimates of the remaining contaminated sources, row-aligned
    /// with `kept_rows`.
    pub reduced: Vec<SignedMixture>,
    /// Original row index of each row of `s_reduced`.
    pub kept_rows: Vec<usize>,
    /// Original class index of each column of `s_reduced`.
    pub kept_classes: Vec<usize>,
    /// Classes resolved during the reduction, with their estimates.
    pub pinned: Vec<(usize, SignedMixture)>,
}

/// Reduce a partial label instance to one satisfying condition (D): any row
/// that selects a single class pins that class, and the corresponding
/// component is peeled out of every other row containing it via a residue
/// estimator. A no-op when (D) already holds.
pub fn reduce_condition_d(
    s: &PartialLabelMatrix,
    pool: &SamplePool,
    vc: &VcClassSpec,
    params: &HatParams,
) -> Result<ConditionDReduction> {
    if !s.columns_unique() {
        return Err(HatError::DuplicateColumns);
    }
    let m = pool.count();
    if s.m() != m {
        return Err(HatError::InvalidInput(format!(
            "label matrix has {} rows, pool has {m} samples",
            s.m()
        )));
    }
    let l = s.l();
    let family = pool.enumerate_candidates(vc)?;
    let eps_n = params.eps_n(pool, vc);

    let mut entries: Vec<Vec<bool>> = (0..m).map(|i| s.row(i).to_vec()).collect();
    let mut estimates: Vec<SignedMixture> =
        (0..m).map(|i| SignedMixture::empirical(i, m)).collect();
    let mut row_active = vec![true; m];
    let mut class_active = vec![true; l];
    let mut pinned: Vec<(usize, SignedMixture)> = Vec::new();

    loop {
        let singleton = (0..m).find(|&i| {
            row_active[i] && entries[i].iter().filter(|&&b| b).count() == 1
        });
        let Some(i) = singleton else {
            break;
        };
        let class = entries[i].iter().position(|&b| b).expect("singleton row");
        let pin_estimate = estimates[i].clone();
        row_active[i] = false;
        class_active[class] = false;

        for other in 0..m {
            if !row_active[other] || !entries[other][class] {
                continue;
            }
            if entries[other].iter().filter(|&&b| b).count() == 1 {
                // Duplicate pin of the same class; nothing left in this row.
                row_active[other] = false;
                entries[other][class] = false;
                continue;
            }
            let (_, peeled) = residue_hat(&family, &estimates[other], &pin_estimate, eps_n)?;
            estimates[other] = peeled;
            entries[other][class] = false;
        }
        pinned.push((class, pin_estimate));
    }

    let kept_rows: Vec<usize> = (0..m).filter(|&i| row_active[i]).collect();
    let kept_classes: Vec<usize> = (0..l).filter(|&j| class_active[j]).collect();
    let reduced: Vec<SignedMixture> = kept_rows.iter().map(|&i| estimates[i].clone()).collect();
    let s_reduced = if kept_rows.is_empty() || kept_classes.is_empty() {
        None
    } else {
        Some(
            PartialLabelMatrix::new(
                kept_rows
                    .iter()
                    .map(|&i| kept_classes.iter().map(|&j| entries[i][j]).collect())
                    .collect(),
            )
            .map_err(|e| HatError::InvalidInput(e.to_string()))?,
        )
    };
    if let Some(sr) = &s_reduced {
        debug_assert!(sr.satisfies_condition_d());
    }
    Ok(ConditionDReduction {
        s_reduced,
        reduced,
        kept_rows,
        kept_classes,
        pinned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::{SampleSet, SetFamily};

    fn one_d(points: &[f64], label: usize) -> SampleSet {
        SampleSet::new(points.iter().map(|&x| vec![x]).collect(), label).unwrap()
    }

    fn grid(lo: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + i as f64 / n as f64).collect()
    }

    fn vc(budget: usize) -> VcClassSpec {
        VcClassSpec::new(SetFamily::Intervals1d, 1, budget).unwrap()
    }

    #[test]
    fn multiclass_hat_identity_like() {
        // Well-separated samples: kappas are ~0 and estimates stay close to
        // the raw empiricals. The VC allowance is vacuous at this sample
        // size, so pin it low.
        let pool = SamplePool::new(vec![
            one_d(&grid(0.0, 200), 0),
            one_d(&grid(100.0, 200), 1),
        ])
        .unwrap();
        let params = HatParams {
            epsilon_mode: EpsilonMode::Fixed(0.02),
            ..HatParams::default()
        };
        let out = multiclass_hat(&pool, &vc(300), &params).unwrap();
        assert_eq!(out.estimates.len(), 2);
        for (i, e) in out.estimates.iter().enumerate() {
            let sum: f64 = e.coeffs().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!((e.coeffs()[i] - 1.0).abs() < 0.2);
        }
    }

    #[test]
    fn multiclass_hat_kappa_one_on_duplicates() {
        let s = one_d(&grid(0.0, 100), 0);
        let pool = SamplePool::new(vec![s.clone(), s]).unwrap();
        let params = HatParams {
            epsilon_mode: EpsilonMode::Fixed(0.0),
            ..HatParams::default()
        };
        assert!(matches!(
            multiclass_hat(&pool, &vc(300), &params),
            Err(HatError::KappaOne(_))
        ));
    }

    #[test]
    fn face_test_hat_identical_estimates() {
        let pool = SamplePool::new(vec![
            one_d(&grid(0.0, 100), 0),
            one_d(&grid(0.0, 100), 1),
        ])
        .unwrap();
        let spec = vc(200);
        let family = pool.enumerate_candidates(&spec).unwrap();
        let a = SignedMixture::empirical(0, 2);
        let b = SignedMixture::empirical(1, 2);
        assert!(face_test_hat(&family, &[&a, &b], 0.5, pool.epsilon_n(&spec)).unwrap());
        // Singleton list passes trivially.
        assert!(face_test_hat(&family, &[&a], 0.5, 0.0).unwrap());
    }

    #[test]
    fn face_test_hat_nested_supports_fail() {
        // Sample 1's support is a strict subset of sample 0's: kappa of the
        // narrow one inside the wide one is near zero.
        let wide: Vec<f64> = (0..400).map(|i| i as f64 / 40.0).collect();
        let narrow: Vec<f64> = (0..400).map(|i| 2.0 + i as f64 / 400.0).collect();
        let pool = SamplePool::new(vec![one_d(&wide, 0), one_d(&narrow, 1)]).unwrap();
        let spec = vc(400);
        let family = pool.enumerate_candidates(&spec).unwrap();
        let a = SignedMixture::empirical(0, 2);
        let b = SignedMixture::empirical(1, 2);
        assert!(!face_test_hat(&family, &[&a, &b], 0.5, 0.0).unwrap());
    }

    #[test]
    fn face_test_hat_epsilon_range() {
        let pool = SamplePool::new(vec![one_d(&grid(0.0, 10), 0)]).unwrap();
        let spec = vc(50);
        let family = pool.enumerate_candidates(&spec).unwrap();
        let a = SignedMixture::empirical(0, 1);
        assert!(matches!(
            face_test_hat(&family, &[&a], 1.5, 0.0),
            Err(HatError::InvalidInput(_))
        ));
    }

    #[test]
    fn demix_hat_duplicate_samples_diagnosed() {
        let s = one_d(&grid(0.0, 50), 0);
        let pool = SamplePool::new(vec![s.clone(), s]).unwrap();
        let params = HatParams {
            epsilon_mode: EpsilonMode::Fixed(0.0),
            ..HatParams::default()
        };
        let err = demix_hat(&pool, &vc(100), &params, 1).unwrap_err();
        assert!(matches!(
            err,
            HatError::KappaOne(_) | HatError::LoopCapExceeded(_)
        ));
    }

    #[test]
    fn demix_hat_result_is_deterministic() {
        let pool = SamplePool::new(vec![
            one_d(&grid(0.0, 60), 0),
            one_d(&grid(0.7, 60), 1),
            one_d(&grid(2.0, 60), 2),
        ])
        .unwrap();
        let params = HatParams {
            epsilon_mode: EpsilonMode::Fixed(0.05),
            ..HatParams::default()
        };
        let a = demix_hat(&pool, &vc(200), &params, 42).unwrap();
        let b = demix_hat(&pool, &vc(200), &params, 42).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn vertex_test_hat_requires_condition_d() {
        // Unique columns, but the first row pins a single class.
        let s = PartialLabelMatrix::new(vec![
            vec![true, false, false],
            vec![true, true, false],
            vec![false, true, true],
        ])
        .unwrap();
        let pool = SamplePool::new(vec![
            one_d(&grid(0.0, 10), 0),
            one_d(&grid(1.0, 10), 1),
            one_d(&grid(2.0, 10), 2),
        ])
        .unwrap();
        let spec = vc(100);
        let family = pool.enumerate_candidates(&spec).unwrap();
        let mixes: Vec<SignedMixture> =
            (0..3).map(|i| SignedMixture::empirical(i, 3)).collect();
        assert!(matches!(
            vertex_test_hat(&s, &family, &mixes, &mixes, 0.0),
            Err(HatError::ConditionDViolated)
        ));
    }

    #[test]
    fn reduce_condition_d_noop() {
        let s = PartialLabelMatrix::new(vec![
            vec![true, true, false],
            vec![true, false, true],
            vec![false, true, true],
        ])
        .unwrap();
        let pool = SamplePool::new(vec![
            one_d(&grid(0.0, 10), 0),
            one_d(&grid(1.0, 10), 1),
            one_d(&grid(2.0, 10), 2),
        ])
        .unwrap();
        let red = reduce_condition_d(&s, &pool, &vc(100), &HatParams::default()).unwrap();
        assert_eq!(red.s_reduced.as_ref().unwrap(), &s);
        assert_eq!(red.kept_rows, vec![0, 1, 2]);
        assert_eq!(red.kept_classes, vec![0, 1, 2]);
        assert!(red.pinned.is_empty());
        for (i, r) in red.reduced.iter().enumerate() {
            assert_eq!(r, &SignedMixture::empirical(i, 3));
        }
    }

    #[test]
    fn reduce_condition_d_full_degenerate() {
        // Every row a distinct singleton: everything pins, nothing remains.
        let s = PartialLabelMatrix::new(vec![
            vec![true, false],
            vec![false, true],
        ])
        .unwrap();
        let pool = SamplePool::new(vec![
            one_d(&grid(0.0, 10), 0),
            one_d(&grid(5.0, 10), 1),
        ])
        .unwrap();
        let red = reduce_condition_d(&s, &pool, &vc(60), &HatParams::default()).unwrap();
        assert!(red.s_reduced.is_none());
        assert!(red.kept_rows.is_empty());
        assert_eq!(red.pinned.len(), 2);
        let classes: Vec<usize> = red.pinned.iter().map(|(c, _)| *c).collect();
        assert_eq!(classes, vec![0, 1]);
    }
}
