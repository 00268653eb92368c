//! Finite-sample machinery: empirical distributions over samples in R^d,
//! VC candidate-set families, the kappa-hat estimators, and the signed
//! mixtures produced by recursive residue estimation.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{self, Constraint, Relation};

#[derive(Debug, Error)]
pub enum EmpiricalError {
    #[error("candidate family is empty")]
    EmptyCandidateFamily,
    #[error("kappa-hat is {0}, too close to 1 for a residue")]
    KappaOne(f64),
    #[error("delta = {0} outside (0, 2]")]
    InvalidDelta(f64),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("family {family:?} does not apply to dimension {dim}")]
    FamilyDimension { family: SetFamily, dim: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("linear program failed: {0}")]
    Lp(String),
}

pub type Result<T> = std::result::Result<T, EmpiricalError>;

pub const KAPPA_ONE_TOL: f64 = 1e-9;

/// Denominators below this are treated as zero in kappa-hat ratios even
/// when the deviation allowance is smaller. Signed-mixture evaluations
/// carry arithmetic dust proportional to their coefficient magnitudes; a
/// mass this small is never a trustworthy divisor.
pub const DENOMINATOR_FLOOR: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Sample sets
// ---------------------------------------------------------------------------

const BINARY_MAGIC: &[u8; 4] = b"MCMS";

/// An i.i.d. sample from one contaminated distribution: n points in R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    points: Vec<f64>,
    n: usize,
    dim: usize,
    pub source_label: usize,
}

impl SampleSet {
    pub fn new(rows: Vec<Vec<f64>>, source_label: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(EmpiricalError::InvalidInput("empty sample".into()));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(EmpiricalError::InvalidInput("zero-dimensional points".into()));
        }
        let mut points = Vec::with_capacity(rows.len() * dim);
        for r in &rows {
            if r.len() != dim {
                return Err(EmpiricalError::DimensionMismatch {
                    left: dim,
                    right: r.len(),
                });
            }
            points.extend_from_slice(r);
        }
        Ok(SampleSet {
            points,
            n: rows.len(),
            dim,
            source_label,
        })
    }

    pub fn from_flat(points: Vec<f64>, n: usize, dim: usize, source_label: usize) -> Result<Self> {
        if n == 0 || dim == 0 || points.len() != n * dim {
            return Err(EmpiricalError::InvalidInput(format!(
                "flat buffer of {} values does not hold {n} x {dim} points",
                points.len()
            )));
        }
        Ok(SampleSet {
            points,
            n,
            dim,
            source_label,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    /// The empirical measure of a candidate set: the fraction of sample
    /// points it contains. Always in [0, 1].
    pub fn evaluate(&self, set: &CandidateSet) -> f64 {
        let hits = self.iter_points().filter(|p| set.contains(p)).count();
        hits as f64 / self.n as f64
    }

    /// CSV: one point per row, `dim` comma-separated columns, header optional.
    pub fn from_csv_reader<R: Read>(reader: R, source_label: usize) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (idx, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                trimmed.split(',').map(|f| f.trim().parse::<f64>()).collect();
            match parsed {
                Ok(row) => rows.push(row),
                Err(e) => {
                    // A non-numeric first row is a header; anywhere else it
                    // is an error.
                    if rows.is_empty() && idx == 0 {
                        continue;
                    }
                    return Err(EmpiricalError::Parse {
                        line: idx + 1,
                        message: e.to_string(),
                    });
                }
            }
        }
        SampleSet::new(rows, source_label)
    }

    pub fn from_csv_path(path: &Path, source_label: usize) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?, source_label)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for p in self.iter_points() {
            let row: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Compact binary format: magic "MCMS", u32 n, u32 d, then n*d
    /// little-endian f64 values in row-major order.
    pub fn from_binary_reader<R: Read>(mut reader: R, source_label: usize) -> Result<Self> {
        let mut magic = [0u8; 4];
        reader.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(EmpiricalError::InvalidInput(
                "bad magic; not a sample file".into(),
            ));
        }
        let mut word = [0u8; 4];
        reader.read_exact(&mut word)?;
        let n = u32::from_le_bytes(word) as usize;
        reader.read_exact(&mut word)?;
        let dim = u32::from_le_bytes(word) as usize;
        let mut buf = vec![0u8; n * dim * 8];
        reader.read_exact(&mut buf)?;
        let points: Vec<f64> = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        SampleSet::from_flat(points, n, dim, source_label)
    }

    pub fn from_binary_path(path: &Path, source_label: usize) -> Result<Self> {
        Self::from_binary_reader(std::fs::File::open(path)?, source_label)
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&(self.n as u32).to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        for v in &self.points {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// VC class specifications and candidate sets
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetFamily {
    Intervals1d,
    AxisRectangles,
    Balls,
}

/// A finite, data-anchored candidate family standing in for a VC class:
/// intervals (V = 2), axis-aligned rectangles (V = 2d), or balls (V = d+1),
/// with at most `anchor_budget` sets enumerated per scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VcClassSpec {
    pub family: SetFamily,
    pub dim: usize,
    pub anchor_budget: usize,
}

impl VcClassSpec {
    pub fn new(family: SetFamily, dim: usize, anchor_budget: usize) -> Result<Self> {
        if dim == 0 || anchor_budget == 0 {
            return Err(EmpiricalError::InvalidInput(
                "dimension and anchor budget must be positive".into(),
            ));
        }
        if family == SetFamily::Intervals1d && dim != 1 {
            return Err(EmpiricalError::FamilyDimension { family, dim });
        }
        Ok(VcClassSpec {
            family,
            dim,
            anchor_budget,
        })
    }

    pub fn vc_dimension(&self) -> usize {
        match self.family {
            SetFamily::Intervals1d => 2,
            SetFamily::AxisRectangles => 2 * self.dim,
            SetFamily::Balls => self.dim + 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CandidateSet {
    Interval { lo: f64, hi: f64 },
    Rect { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl CandidateSet {
    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            CandidateSet::Interval { lo, hi } => *lo <= p[0] && p[0] <= *hi,
            CandidateSet::Rect { lo, hi } => p
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(x, (l, h))| l <= x && x <= h),
            CandidateSet::Ball { center, radius } => {
                let d2: f64 = p
                    .iter()
                    .zip(center)
                    .map(|(x, c)| (x - c) * (x - c))
                    .sum();
                d2.sqrt() <= *radius
            }
        }
    }
}

/// An enumerated candidate family together with the empirical measure of
/// every pool sample on every set, precomputed so that each kappa scan is a
/// cheap pass of dot products.
#[derive(Debug, Clone)]
pub struct CandidateFamily {
    sets: Vec<CandidateSet>,
    /// `values[s][i]` = empirical measure of pool sample i on set s.
    values: Vec<Vec<f64>>,
    n_samples: usize,
}

impl CandidateFamily {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn set(&self, s: usize) -> &CandidateSet {
        &self.sets[s]
    }

    pub fn sets(&self) -> &[CandidateSet] {
        &self.sets
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn basis_value(&self, s: usize, sample: usize) -> f64 {
        self.values[s][sample]
    }

    /// Evaluate a signed mixture on candidate set `s`.
    pub fn eval(&self, s: usize, m: &SignedMixture) -> f64 {
        debug_assert_eq!(m.coeffs().len(), self.n_samples);
        m.coeffs()
            .iter()
            .zip(&self.values[s])
            .map(|(c, v)| c * v)
            .sum()
    }
}

// ---------------------------------------------------------------------------
// Sample pool
// ---------------------------------------------------------------------------

/// The observed samples of one experiment, indexed in the order the
/// contaminated distributions are given. All estimators are affine
/// combinations of these empirical distributions.
#[derive(Debug, Clone)]
pub struct SamplePool {
    samples: Vec<SampleSet>,
    dim: usize,
}

impl SamplePool {
    pub fn new(samples: Vec<SampleSet>) -> Result<Self> {
        if samples.is_empty() {
            return Err(EmpiricalError::InvalidInput("no samples".into()));
        }
        let dim = samples[0].dim();
        for s in &samples {
            if s.dim() != dim {
                return Err(EmpiricalError::DimensionMismatch {
                    left: dim,
                    right: s.dim(),
                });
            }
        }
        Ok(SamplePool { samples, dim })
    }

    pub fn count(&self) -> usize {
        self.samples.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample(&self, i: usize) -> &SampleSet {
        &self.samples[i]
    }

    pub fn samples(&self) -> &[SampleSet] {
        &self.samples
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.n()).collect()
    }

    /// Per-sample deviation bounds `eps_i(1/n_i)`.
    pub fn per_sample_epsilons(&self, vc: &VcClassSpec) -> Vec<f64> {
        let v = vc.vc_dimension();
        self.samples
            .iter()
            .map(|s| vc_epsilon(v, s.n(), 1.0 / s.n() as f64).expect("delta in range"))
            .collect()
    }

    /// The shared deviation allowance `eps_n = sum_i eps_i(1/n_i)` used by
    /// every two-sample kappa-hat in an experiment.
    pub fn epsilon_n(&self, vc: &VcClassSpec) -> f64 {
        self.per_sample_epsilons(vc).iter().sum()
    }

    /// Enumerate the data-anchored candidate family. Empirical measures only
    /// change at sample points, so anchoring set boundaries at pooled order
    /// statistics loses nothing within the family.
    pub fn enumerate_candidates(&self, vc: &VcClassSpec) -> Result<CandidateFamily> {
        if vc.dim != self.dim {
            return Err(EmpiricalError::DimensionMismatch {
                left: vc.dim,
                right: self.dim,
            });
        }
        let sets = match vc.family {
            SetFamily::Intervals1d => self.interval_sets(vc.anchor_budget),
            SetFamily::AxisRectangles => self.rect_sets(vc.anchor_budget),
            SetFamily::Balls => self.ball_sets(vc.anchor_budget),
        };
        if sets.is_empty() {
            return Err(EmpiricalError::EmptyCandidateFamily);
        }
        let values = self.precompute(&sets);
        Ok(CandidateFamily {
            sets,
            values,
            n_samples: self.samples.len(),
        })
    }

    fn pooled_sorted_coord(&self, c: usize) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .samples
            .iter()
            .flat_map(|s| s.iter_points().map(move |p| p[c]))
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    fn interval_sets(&self, budget: usize) -> Vec<CandidateSet> {
        let u = self.pooled_sorted_coord(0);
        let anchors = even_rank_subset(&u, max_anchors_for_pairs(budget));
        let mut sets = Vec::new();
        for i in 0..anchors.len() {
            for j in i..anchors.len() {
                sets.push(CandidateSet::Interval {
                    lo: anchors[i],
                    hi: anchors[j],
                });
            }
        }
        sets
    }

    fn rect_sets(&self, budget: usize) -> Vec<CandidateSet> {
        let d = self.dim;
        // Pick k anchors per coordinate so that the number of rectangles,
        // (k(k+1)/2)^d, stays within budget.
        let mut k = 1usize;
        while pairs(k + 1)
            .checked_pow(d as u32)
            .is_some_and(|total| total <= budget)
        {
            k += 1;
        }
        let per_coord: Vec<Vec<(f64, f64)>> = (0..d)
            .map(|c| {
                let u = self.pooled_sorted_coord(c);
                let anchors = even_rank_subset(&u, k);
                let mut iv = Vec::new();
                for i in 0..anchors.len() {
                    for j in i..anchors.len() {
                        iv.push((anchors[i], anchors[j]));
                    }
                }
                iv
            })
            .collect();
        let mut sets = Vec::new();
        let mut idx = vec![0usize; d];
        loop {
            let lo: Vec<f64> = (0..d).map(|c| per_coord[c][idx[c]].0).collect();
            let hi: Vec<f64> = (0..d).map(|c| per_coord[c][idx[c]].1).collect();
            sets.push(CandidateSet::Rect { lo, hi });
            // Odometer over the per-coordinate interval choices.
            let mut c = 0;
            loop {
                idx[c] += 1;
                if idx[c] < per_coord[c].len() {
                    break;
                }
                idx[c] = 0;
                c += 1;
                if c == d {
                    return sets;
                }
            }
        }
    }

    fn ball_sets(&self, budget: usize) -> Vec<CandidateSet> {
        let mut pooled: Vec<Vec<f64>> = self
            .samples
            .iter()
            .flat_map(|s| s.iter_points().map(|p| p.to_vec()))
            .collect();
        pooled.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        pooled.dedup();
        // Centers and radii both scale with sqrt(budget) so that larger
        // budgets strictly extend smaller ones.
        let n_centers = (budget as f64).sqrt().floor().max(1.0) as usize;
        let radii_per_center = n_centers;
        let centers = even_rank_indices(pooled.len(), n_centers);
        let mut sets = Vec::new();
        for &ci in &centers {
            let center = &pooled[ci];
            let mut dists: Vec<f64> = pooled
                .iter()
                .map(|p| {
                    p.iter()
                        .zip(center)
                        .map(|(x, c)| (x - c) * (x - c))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect();
            dists.sort_by(f64::total_cmp);
            dists.dedup();
            for r in even_rank_subset(&dists, radii_per_center) {
                sets.push(CandidateSet::Ball {
                    center: center.clone(),
                    radius: r,
                });
            }
        }
        sets
    }

    fn precompute(&self, sets: &[CandidateSet]) -> Vec<Vec<f64>> {
        // Intervals admit a sorted-scan fast path; other families test each
        // point directly.
        let sorted: Option<Vec<Vec<f64>>> = if self.dim == 1 {
            Some(
                self.samples
                    .iter()
                    .map(|s| {
                        let mut v: Vec<f64> = s.iter_points().map(|p| p[0]).collect();
                        v.sort_by(f64::total_cmp);
                        v
                    })
                    .collect(),
            )
        } else {
            None
        };
        sets.iter()
            .map(|set| match (set, &sorted) {
                (CandidateSet::Interval { lo, hi }, Some(sorted)) => sorted
                    .iter()
                    .map(|v| {
                        let upper = v.partition_point(|x| x <= hi);
                        let lower = v.partition_point(|x| x < lo);
                        (upper - lower) as f64 / v.len() as f64
                    })
                    .collect(),
                _ => self.samples.iter().map(|s| s.evaluate(set)).collect(),
            })
            .collect()
    }
}

fn pairs(k: usize) -> usize {
    k * (k + 1) / 2
}

/// Largest anchor count whose pair count fits the budget.
fn max_anchors_for_pairs(budget: usize) -> usize {
    let mut k = 1usize;
    while pairs(k + 1) <= budget {
        k += 1;
    }
    k
}

/// The first `want` ranks of a prefix-nested, evenly spreading enumeration:
/// the endpoints first, then dyadic midpoints breadth-first. Growing `want`
/// only adds ranks, so candidate families built from larger budgets contain
/// those built from smaller ones.
fn even_rank_indices(len: usize, want: usize) -> Vec<usize> {
    if len == 0 || want == 0 {
        return Vec::new();
    }
    if want >= len {
        return (0..len).collect();
    }
    let mut seen = vec![false; len];
    let mut order = Vec::with_capacity(want);
    let take = |i: usize, order: &mut Vec<usize>, seen: &mut Vec<bool>| {
        if !seen[i] {
            seen[i] = true;
            order.push(i);
        }
    };
    take(0, &mut order, &mut seen);
    take(len - 1, &mut order, &mut seen);
    let mut queue = std::collections::VecDeque::new();
    queue.push_back((0usize, len - 1));
    while order.len() < want {
        let Some((a, b)) = queue.pop_front() else {
            break;
        };
        if b - a < 2 {
            continue;
        }
        let mid = a + (b - a) / 2;
        take(mid, &mut order, &mut seen);
        queue.push_back((a, mid));
        queue.push_back((mid, b));
    }
    order.truncate(want);
    order.sort_unstable();
    order
}

fn even_rank_subset(sorted: &[f64], want: usize) -> Vec<f64> {
    even_rank_indices(sorted.len(), want)
        .into_iter()
        .map(|i| sorted[i])
        .collect()
}

// ---------------------------------------------------------------------------
// Signed mixtures
// ---------------------------------------------------------------------------

/// An affine combination of the pool's empirical distributions: coefficients
/// sum to one but may be negative, so evaluations can leave [0, 1]. Every
/// residue estimator produced by the finite-sample algorithms has this form.
///
/// `order` tracks the recursion depth of residue estimation: a bare
/// empirical distribution has order -1, a residue of two empirical
/// distributions order 0, and each further residue adds one. Affine
/// combinations keep the maximum order of their inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedMixture {
    coeffs: Vec<f64>,
    order: i32,
}

impl SignedMixture {
    pub fn new(coeffs: Vec<f64>, order: i32) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(EmpiricalError::InvalidInput("empty coefficients".into()));
        }
        let sum: f64 = coeffs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(EmpiricalError::InvalidInput(format!(
                "coefficients sum to {sum}, expected 1"
            )));
        }
        Ok(SignedMixture { coeffs, order })
    }

    /// The i-th empirical distribution of a pool with `count` samples.
    pub fn empirical(index: usize, count: usize) -> Self {
        assert!(index < count);
        let mut coeffs = vec![0.0; count];
        coeffs[index] = 1.0;
        SignedMixture { coeffs, order: -1 }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn order(&self) -> i32 {
        self.order
    }

    /// Affine interpolation `(1 - nu) a + nu b`.
    pub fn blend(a: &Self, b: &Self, nu: f64) -> Result<Self> {
        if a.coeffs.len() != b.coeffs.len() {
            return Err(EmpiricalError::DimensionMismatch {
                left: a.coeffs.len(),
                right: b.coeffs.len(),
            });
        }
        let coeffs = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(x, y)| (1.0 - nu) * x + nu * y)
            .collect();
        Ok(SignedMixture {
            coeffs,
            order: a.order.max(b.order),
        })
    }

    /// Convex combination with the given weights.
    pub fn combine(mixtures: &[&Self], weights: &[f64]) -> Result<Self> {
        if mixtures.is_empty() || mixtures.len() != weights.len() {
            return Err(EmpiricalError::InvalidInput(
                "combine needs one weight per mixture".into(),
            ));
        }
        let m = mixtures[0].coeffs.len();
        let mut coeffs = vec![0.0; m];
        let mut order = -1;
        for (mix, &w) in mixtures.iter().zip(weights) {
            if mix.coeffs.len() != m {
                return Err(EmpiricalError::DimensionMismatch {
                    left: m,
                    right: mix.coeffs.len(),
                });
            }
            for (c, v) in coeffs.iter_mut().zip(&mix.coeffs) {
                *c += w * v;
            }
            order = order.max(mix.order);
        }
        Ok(SignedMixture { coeffs, order })
    }

    pub fn average(mixtures: &[&Self]) -> Result<Self> {
        let w = vec![1.0 / mixtures.len() as f64; mixtures.len()];
        Self::combine(mixtures, &w)
    }
}

/// Handle to one of the pool's raw empirical distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmpiricalDistribution(pub usize);

impl EmpiricalDistribution {
    pub fn as_mixture(&self, pool_count: usize) -> SignedMixture {
        SignedMixture::empirical(self.0, pool_count)
    }
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

/// VC deviation bound `3 sqrt((V ln(n+1) - ln(delta/2)) / n)`; natural logs.
pub fn vc_epsilon(v: usize, n: usize, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 2.0) {
        return Err(EmpiricalError::InvalidDelta(delta));
    }
    if n == 0 || v == 0 {
        return Err(EmpiricalError::InvalidInput(
            "sample size and VC dimension must be positive".into(),
        ));
    }
    let num = v as f64 * ((n as f64) + 1.0).ln() - (delta / 2.0).ln();
    Ok(3.0 * (num / n as f64).sqrt())
}

/// Two-sample kappa-hat: the infimum over the candidate family of
/// `(F(S) + eps_n) / (H(S) - eps_n)_+`, with the ratio taken as infinity
/// when the denominator is nonpositive. Clipped to [0, 1]; values at the cap
/// signal that no residue should be formed.
pub fn kappa_hat_two(
    family: &CandidateFamily,
    f: &SignedMixture,
    h: &SignedMixture,
    eps_n: f64,
) -> Result<f64> {
    if family.is_empty() {
        return Err(EmpiricalError::EmptyCandidateFamily);
    }
    let mut inf = f64::INFINITY;
    for s in 0..family.len() {
        let h_val = family.eval(s, h);
        let denom = h_val - eps_n;
        if denom <= 0.0 || h_val <= DENOMINATOR_FLOOR {
            continue;
        }
        let ratio = (family.eval(s, f) + eps_n) / denom;
        if ratio < inf {
            inf = ratio;
        }
    }
    Ok(inf.clamp(0.0, 1.0))
}

/// Residue estimator: removes the estimated `kappa` proportion of `h` from
/// `f` in coefficient space. The reconstruction
/// `(1 - kappa) g + kappa h = f` is an exact coefficient identity.
pub fn residue_hat(
    family: &CandidateFamily,
    f: &SignedMixture,
    h: &SignedMixture,
    eps_n: f64,
) -> Result<(f64, SignedMixture)> {
    let kappa = kappa_hat_two(family, f, h, eps_n)?;
    if kappa >= 1.0 - KAPPA_ONE_TOL {
        return Err(EmpiricalError::KappaOne(kappa));
    }
    let coeffs: Vec<f64> = f
        .coeffs()
        .iter()
        .zip(h.coeffs())
        .map(|(cf, ch)| (cf - kappa * ch) / (1.0 - kappa))
        .collect();
    let order = f.order().max(h.order()) + 1;
    Ok((kappa, SignedMixture { coeffs, order }))
}

/// How [`kappa_hat_multi`] maximizes over the mixture weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MultiMaxStrategy {
    /// Exact: substituting `nu = kappa * mu` turns the max-inf into a linear
    /// program over the removal weights.
    Lp,
    /// Deterministic simplex grid of the given resolution followed by a
    /// pairwise mass-transfer polish. Kept as an independent check of the
    /// LP route.
    GridPolish { resolution: usize },
}

pub const DEFAULT_GRID_RESOLUTION: usize = 50;

/// Multi-sample kappa-hat of sample `f0` with respect to `others`, using the
/// per-sample deviation bounds from `vc`. Returns the capped estimate and
/// `nu_hat` (one removal weight per conditioning sample).
pub fn kappa_hat_multi(
    pool: &SamplePool,
    family: &CandidateFamily,
    vc: &VcClassSpec,
    f0: EmpiricalDistribution,
    others: &[EmpiricalDistribution],
) -> Result<(f64, Vec<f64>)> {
    let eps = pool.per_sample_epsilons(vc);
    kappa_hat_multi_with(family, f0, others, &eps, MultiMaxStrategy::Lp)
}

/// Full-control variant: explicit per-pool-sample epsilons (index-aligned
/// with the pool) and an explicit maximization strategy.
pub fn kappa_hat_multi_with(
    family: &CandidateFamily,
    f0: EmpiricalDistribution,
    others: &[EmpiricalDistribution],
    eps: &[f64],
    strategy: MultiMaxStrategy,
) -> Result<(f64, Vec<f64>)> {
    if family.is_empty() {
        return Err(EmpiricalError::EmptyCandidateFamily);
    }
    if others.is_empty() {
        return Err(EmpiricalError::InvalidInput(
            "need at least one conditioning sample".into(),
        ));
    }
    if eps.len() != family.n_samples() {
        return Err(EmpiricalError::DimensionMismatch {
            left: eps.len(),
            right: family.n_samples(),
        });
    }
    let m = others.len();
    // Per set: numerator F0(S) + eps_0 and the vector F_i(S) - eps_i.
    let mut numer = Vec::with_capacity(family.len());
    let mut denom_vecs = Vec::with_capacity(family.len());
    for s in 0..family.len() {
        numer.push(family.basis_value(s, f0.0) + eps[f0.0]);
        denom_vecs.push(
            others
                .iter()
                .map(|o| family.basis_value(s, o.0) - eps[o.0])
                .collect::<Vec<f64>>(),
        );
    }

    match strategy {
        MultiMaxStrategy::Lp => {
            let mut constraints: Vec<Constraint> = numer
                .iter()
                .zip(&denom_vecs)
                .map(|(b, w)| Constraint {
                    coeffs: w.clone(),
                    relation: Relation::Le,
                    rhs: *b,
                })
                .collect();
            // Anything at or above 1 is capped, so bounding the raw optimum
            // at 2 keeps the program finite without changing the result.
            constraints.push(Constraint {
                coeffs: vec![1.0; m],
                relation: Relation::Le,
                rhs: 2.0,
            });
            let sol = lp::maximize_lex_min(&vec![1.0; m], &constraints)
                .map_err(|e| EmpiricalError::Lp(e.to_string()))?;
            let raw: f64 = sol.value.max(0.0);
            let nu: Vec<f64> = sol.x.iter().map(|v| v.max(0.0)).collect();
            if raw <= 1.0 {
                Ok((raw, nu))
            } else {
                // Cap: kappa-hat = 1, nu rescaled onto the simplex.
                Ok((1.0, nu.iter().map(|v| v / raw).collect()))
            }
        }
        MultiMaxStrategy::GridPolish { resolution } => {
            let eval_mu = |mu: &[f64]| -> f64 {
                let mut inf = f64::INFINITY;
                for s in 0..family.len() {
                    let d: f64 = mu
                        .iter()
                        .zip(&denom_vecs[s])
                        .map(|(m, w)| m * w)
                        .sum();
                    if d <= 0.0 {
                        continue;
                    }
                    let ratio = numer[s] / d;
                    if ratio < inf {
                        inf = ratio;
                    }
                }
                inf.max(0.0)
            };
            let mut best_mu = vec![0.0; m];
            best_mu[0] = 1.0;
            let mut best = eval_mu(&best_mu);
            for mu in simplex_grid(m, resolution) {
                let v = eval_mu(&mu);
                if v > best {
                    best = v;
                    best_mu = mu;
                }
            }
            // Pairwise mass-transfer polish with step halving.
            let mut step = 1.0 / resolution as f64;
            while step > 1e-7 {
                let mut improved = false;
                'outer: for from in 0..m {
                    for to in 0..m {
                        if from == to || best_mu[from] < step {
                            continue;
                        }
                        let mut cand = best_mu.clone();
                        cand[from] -= step;
                        cand[to] += step;
                        let v = eval_mu(&cand);
                        if v > best + 1e-15 {
                            best = v;
                            best_mu = cand;
                            improved = true;
                            break 'outer;
                        }
                    }
                }
                if !improved {
                    step /= 2.0;
                }
            }
            let kappa = best.min(1.0);
            let nu = best_mu.iter().map(|v| v * kappa).collect();
            Ok((kappa, nu))
        }
    }
}

/// All compositions of `resolution` into `m` nonnegative parts, as simplex
/// points, in deterministic lexicographic order.
fn simplex_grid(m: usize, resolution: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; m];
    fn rec(out: &mut Vec<Vec<f64>>, current: &mut Vec<usize>, pos: usize, left: usize, res: usize) {
        if pos == current.len() - 1 {
            current[pos] = left;
            out.push(current.iter().map(|&c| c as f64 / res as f64).collect());
            return;
        }
        for take in 0..=left {
            current[pos] = take;
            rec(out, current, pos + 1, left - take, res);
        }
    }
    rec(&mut out, &mut current, 0, resolution, resolution);
    out
}

/// Largest absolute difference of two estimators over the candidate family.
pub fn sup_deviation(
    family: &CandidateFamily,
    a: &SignedMixture,
    b: &SignedMixture,
) -> Result<f64> {
    if family.is_empty() {
        return Err(EmpiricalError::EmptyCandidateFamily);
    }
    let mut sup: f64 = 0.0;
    for s in 0..family.len() {
        sup = sup.max((family.eval(s, a) - family.eval(s, b)).abs());
    }
    Ok(sup)
}

/// Largest absolute difference between an estimator and exactly computable
/// target probabilities (`target[s]` = true probability of candidate set s).
pub fn sup_deviation_against(
    family: &CandidateFamily,
    a: &SignedMixture,
    target: &[f64],
) -> Result<f64> {
    if family.is_empty() {
        return Err(EmpiricalError::EmptyCandidateFamily);
    }
    if target.len() != family.len() {
        return Err(EmpiricalError::DimensionMismatch {
            left: target.len(),
            right: family.len(),
        });
    }
    let mut sup: f64 = 0.0;
    for s in 0..family.len() {
        sup = sup.max((family.eval(s, a) - target[s]).abs());
    }
    Ok(sup)
}
