//! Ground-truth problem generation: base distributions, mixing matrices,
//! partial-label matrices, and sampled instances with recorded seeds.
//!
//! Continuous bases are carried as generator specs with exact CDF
//! evaluation, so tests can compare estimates against true set
//! probabilities rather than against a second sample.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::empirical::{CandidateFamily, CandidateSet, EmpiricalError, SampleSet};
use crate::sampling::uniform_simplex;
use crate::simplex::{
    common_background_noise, DiscreteDistribution, MixingMatrix, MixtureProportion,
    PartialLabelMatrix, SimplexError,
};
use crate::linalg;

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("rejection sampling failed after {0} attempts")]
    RejectionExhausted(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed instance: {0}")]
    Malformed(String),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error(transparent)]
    Empirical(#[from] EmpiricalError),
}

pub type Result<T> = std::result::Result<T, SynthesisError>;

/// Mass grid for discrete base generation. Dyadic masses keep every derived
/// contaminated probability exactly representable, which the agreement
/// tests between the exact and finite-sample engines rely on.
pub const DISCRETE_MASS_DENOM: u32 = 64;

// ---------------------------------------------------------------------------
// Base distributions
// ---------------------------------------------------------------------------

/// What kind of base distributions to generate.
///
/// `DiscreteSeparable` and `GaussianBump` certify the support-separation
/// condition (each base has mass outside the union of the others' supports);
/// plain Gaussians share full support and certify only joint irreducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BaseSpec {
    DiscreteSeparable { atoms: usize },
    Gaussian1d { means: Vec<f64>, sigma: f64 },
    GaussianBump { means: Vec<f64>, sigma: f64, beta: f64 },
}

impl BaseSpec {
    pub fn certifies_separation(&self) -> bool {
        !matches!(self, BaseSpec::Gaussian1d { .. })
    }
}

/// A 1-d continuous base with exact CDF evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ContinuousBase {
    Gaussian {
        mean: f64,
        sigma: f64,
    },
    /// Gaussian carrying `1 - beta` of the mass plus a uniform bump of mass
    /// `beta` on `[bump_lo, bump_hi]`, disjoint from the Gaussian bulk.
    GaussianBump {
        mean: f64,
        sigma: f64,
        beta: f64,
        bump_lo: f64,
        bump_hi: f64,
    },
}

/// erf via its everywhere-convergent series for small |x| and a
/// complementary-function approximation in the tails; absolute error below
/// 1e-11 across the line.
fn erf(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 3.0 {
        // erf(x) = 2x e^{-x^2}/sqrt(pi) * sum_n (2x^2)^n / (2n+1)!!
        let x2 = x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut n = 1.0;
        loop {
            term *= 2.0 * x2 / (2.0 * n + 1.0);
            sum += term;
            n += 1.0;
            if term < 1e-17 * sum || n > 200.0 {
                break;
            }
        }
        2.0 * x * (-x2).exp() / std::f64::consts::PI.sqrt() * sum
    } else {
        let t = 1.0 / (1.0 + 0.5 * ax);
        let tau = t
            * (-ax * ax - 1.26551223
                + t * (1.00002368
                    + t * (0.37409196
                        + t * (0.09678418
                            + t * (-0.18628806
                                + t * (0.27886807
                                    + t * (-1.13520398
                                        + t * (1.48851587
                                            + t * (-0.82215223 + t * 0.17087277)))))))))
            .exp();
        let val = 1.0 - tau;
        if x >= 0.0 {
            val
        } else {
            -val
        }
    }
}

fn normal_cdf(x: f64, mean: f64, sigma: f64) -> f64 {
    0.5 * (1.0 + erf((x - mean) / (sigma * std::f64::consts::SQRT_2)))
}

impl ContinuousBase {
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            ContinuousBase::Gaussian { mean, sigma } => normal_cdf(x, *mean, *sigma),
            ContinuousBase::GaussianBump {
                mean,
                sigma,
                beta,
                bump_lo,
                bump_hi,
            } => {
                let bump = if x <= *bump_lo {
                    0.0
                } else if x >= *bump_hi {
                    1.0
                } else {
                    (x - bump_lo) / (bump_hi - bump_lo)
                };
                (1.0 - beta) * normal_cdf(x, *mean, *sigma) + beta * bump
            }
        }
    }

    pub fn interval_prob(&self, lo: f64, hi: f64) -> f64 {
        if hi < lo {
            return 0.0;
        }
        (self.cdf(hi) - self.cdf(lo)).max(0.0)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ContinuousBase::Gaussian { mean, sigma } => {
                Normal::new(*mean, *sigma).unwrap().sample(rng)
            }
            ContinuousBase::GaussianBump {
                mean,
                sigma,
                beta,
                bump_lo,
                bump_hi,
            } => {
                if rng.random::<f64>() < *beta {
                    bump_lo + rng.random::<f64>() * (bump_hi - bump_lo)
                } else {
                    Normal::new(*mean, *sigma).unwrap().sample(rng)
                }
            }
        }
    }
}

/// The generated base distributions of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Bases {
    Discrete { bases: Vec<DiscreteDistribution> },
    Continuous { bases: Vec<ContinuousBase> },
}

impl Bases {
    pub fn l(&self) -> usize {
        match self {
            Bases::Discrete { bases } => bases.len(),
            Bases::Continuous { bases } => bases.len(),
        }
    }

    pub fn dim(&self) -> usize {
        1
    }

    /// Exact probability of a (1-d) candidate set under base `class`.
    pub fn set_prob(&self, class: usize, set: &CandidateSet) -> f64 {
        let (lo, hi) = match set {
            CandidateSet::Interval { lo, hi } => (*lo, *hi),
            CandidateSet::Rect { lo, hi } => (lo[0], hi[0]),
            CandidateSet::Ball { center, radius } => (center[0] - radius, center[0] + radius),
        };
        match self {
            Bases::Discrete { bases } => bases[class]
                .atoms()
                .iter()
                .zip(bases[class].probs())
                .filter(|(&a, _)| {
                    let x = a as f64;
                    lo <= x && x <= hi
                })
                .map(|(_, &p)| p)
                .sum(),
            Bases::Continuous { bases } => bases[class].interval_prob(lo, hi),
        }
    }

    fn sample_point<R: Rng + ?Sized>(&self, class: usize, rng: &mut R) -> f64 {
        match self {
            Bases::Discrete { bases } => {
                let d = &bases[class];
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (&atom, &p) in d.atoms().iter().zip(d.probs()) {
                    acc += p;
                    if u < acc {
                        return atom as f64;
                    }
                }
                *d.atoms().last().unwrap() as f64
            }
            Bases::Continuous { bases } => bases[class].sample(rng),
        }
    }
}

// ---------------------------------------------------------------------------
// ProblemInstance
// ---------------------------------------------------------------------------

/// Bundled ground truth for one experiment: base distributions, mixing
/// matrix, optional partial labels, optional drawn samples, and the seed
/// that produced the samples.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub bases: Bases,
    pub mixing: MixingMatrix,
    pub partial_labels: Option<PartialLabelMatrix>,
    pub samples: Option<Vec<SampleSet>>,
    pub seed: u64,
}

impl ProblemInstance {
    pub fn new(
        bases: Bases,
        mixing: MixingMatrix,
        partial_labels: Option<PartialLabelMatrix>,
    ) -> Result<Self> {
        if bases.l() != mixing.l() {
            return Err(SynthesisError::Malformed(format!(
                "{} bases but mixing matrix has {} columns",
                bases.l(),
                mixing.l()
            )));
        }
        if let Some(s) = &partial_labels {
            if !s.consistent_with(&mixing) {
                return Err(SynthesisError::Malformed(
                    "partial labels inconsistent with mixing matrix".into(),
                ));
            }
        }
        Ok(ProblemInstance {
            bases,
            mixing,
            partial_labels,
            samples: None,
            seed: 0,
        })
    }

    pub fn l(&self) -> usize {
        self.mixing.l()
    }

    pub fn m(&self) -> usize {
        self.mixing.m()
    }

    /// Exact probability of a candidate set under contaminated row `i`.
    pub fn contaminated_set_prob(&self, row: usize, set: &CandidateSet) -> f64 {
        (0..self.l())
            .map(|j| self.mixing.entry(row, j) * self.bases.set_prob(j, set))
            .sum()
    }

    /// Exact probabilities of base `class` over a whole candidate family.
    pub fn class_probs(&self, class: usize, family: &CandidateFamily) -> Vec<f64> {
        family
            .sets()
            .iter()
            .map(|s| self.bases.set_prob(class, s))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

/// Generate `l` base distributions following `spec`.
pub fn gen_bases(spec: &BaseSpec, l: usize, rng_seed: u64) -> Result<Bases> {
    if l < 2 {
        return Err(SynthesisError::Infeasible("need at least two bases".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    match spec {
        BaseSpec::DiscreteSeparable { atoms } => {
            if *atoms < l {
                return Err(SynthesisError::Infeasible(format!(
                    "{atoms} atoms cannot give {l} classes a private atom each"
                )));
            }
            let denom = DISCRETE_MASS_DENOM;
            let shared: Vec<u64> = (l as u64..*atoms as u64).collect();
            let mut bases = Vec::with_capacity(l);
            for i in 0..l {
                let mut masses: BTreeMap<u64, u32> = BTreeMap::new();
                let private = if shared.is_empty() {
                    denom
                } else {
                    // 0.3 .. 0.8 of the mass on the private atom.
                    rng.random_range((denom * 3 / 10)..=(denom * 8 / 10))
                };
                masses.insert(i as u64, private);
                for _ in 0..(denom - private) {
                    let a = shared[rng.random_range(0..shared.len())];
                    *masses.entry(a).or_insert(0) += 1;
                }
                let (atoms_v, probs): (Vec<u64>, Vec<f64>) = masses
                    .into_iter()
                    .map(|(a, c)| (a, c as f64 / denom as f64))
                    .unzip();
                bases.push(DiscreteDistribution::new(atoms_v, probs)?);
            }
            Ok(Bases::Discrete { bases })
        }
        BaseSpec::Gaussian1d { means, sigma } => {
            if means.len() != l {
                return Err(SynthesisError::Infeasible(format!(
                    "{} means for {l} classes",
                    means.len()
                )));
            }
            if *sigma <= 0.0 {
                return Err(SynthesisError::Infeasible("sigma must be positive".into()));
            }
            Ok(Bases::Continuous {
                bases: means
                    .iter()
                    .map(|&m| ContinuousBase::Gaussian {
                        mean: m,
                        sigma: *sigma,
                    })
                    .collect(),
            })
        }
        BaseSpec::GaussianBump { means, sigma, beta } => {
            if means.len() != l {
                return Err(SynthesisError::Infeasible(format!(
                    "{} means for {l} classes",
                    means.len()
                )));
            }
            if *sigma <= 0.0 || !(0.0..1.0).contains(beta) || *beta == 0.0 {
                return Err(SynthesisError::Infeasible(
                    "need sigma > 0 and beta in (0, 1)".into(),
                ));
            }
            // Disjoint unit bump intervals beyond 10 sigma of every mean.
            let far = means.iter().cloned().fold(f64::MIN, f64::max) + 10.0 * sigma;
            Ok(Bases::Continuous {
                bases: means
                    .iter()
                    .enumerate()
                    .map(|(i, &m)| ContinuousBase::GaussianBump {
                        mean: m,
                        sigma: *sigma,
                        beta: *beta,
                        bump_lo: far + 2.0 * i as f64,
                        bump_hi: far + 2.0 * i as f64 + 1.0,
                    })
                    .collect(),
            })
        }
    }
}

/// How to generate a mixing matrix.
#[derive(Debug, Clone)]
pub enum MixingMode {
    /// Common-background rows `gamma * c + (1 - gamma) e_i` with uniform
    /// background; `noise_level` is gamma. Requires m == l; always (B1).
    B1Background,
    /// Independent rows on the simplex, rejection-sampled until the spectral
    /// condition number is below 1e6.
    FullRank,
    /// Zeroes where the label matrix is zero, random fill elsewhere,
    /// rejection-sampled to full column rank.
    PartialLabel(PartialLabelMatrix),
}

const REJECTION_CAP: usize = 1_000;
const CONDITION_CAP: f64 = 1e6;

pub fn gen_mixing(
    mode: &MixingMode,
    l: usize,
    m: usize,
    rng_seed: u64,
    noise_level: f64,
) -> Result<MixingMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    match mode {
        MixingMode::B1Background => {
            if m != l {
                return Err(SynthesisError::Infeasible(
                    "background mode needs a square matrix".into(),
                ));
            }
            if !(0.0..1.0).contains(&noise_level) {
                return Err(SynthesisError::Infeasible(format!(
                    "gamma = {noise_level} outside [0, 1)"
                )));
            }
            let c = MixtureProportion::uniform(l);
            Ok(common_background_noise(&c, &vec![noise_level; l])?)
        }
        MixingMode::FullRank => {
            for _ in 0..REJECTION_CAP {
                let rows: Vec<MixtureProportion> = (0..m)
                    .map(|_| {
                        MixtureProportion::new(uniform_simplex(&mut rng, l))
                            .expect("simplex draw is valid")
                    })
                    .collect();
                let raw: Vec<Vec<f64>> = rows.iter().map(|r| r.weights().to_vec()).collect();
                if linalg::condition_number(&raw) < CONDITION_CAP {
                    return Ok(MixingMatrix::new(rows)?);
                }
            }
            Err(SynthesisError::RejectionExhausted(REJECTION_CAP))
        }
        MixingMode::PartialLabel(s) => {
            if s.m() != m || s.l() != l {
                return Err(SynthesisError::Infeasible(format!(
                    "label matrix is {}x{}, wanted {m}x{l}",
                    s.m(),
                    s.l()
                )));
            }
            if !s.columns_unique() {
                return Err(SynthesisError::Infeasible(
                    "label matrix has duplicate columns".into(),
                ));
            }
            if (0..l).any(|j| s.column(j).iter().all(|&b| !b)) {
                return Err(SynthesisError::Infeasible(
                    "label matrix has an all-zero column".into(),
                ));
            }
            for _ in 0..REJECTION_CAP {
                let mut rows = Vec::with_capacity(m);
                for i in 0..m {
                    let support: Vec<usize> =
                        (0..l).filter(|&j| s.get(i, j)).collect();
                    let w = uniform_simplex(&mut rng, support.len());
                    let mut row = vec![0.0; l];
                    for (&j, &wv) in support.iter().zip(&w) {
                        row[j] = wv;
                    }
                    rows.push(MixtureProportion::new(row).expect("fill is valid"));
                }
                let raw: Vec<Vec<f64>> = rows.iter().map(|r| r.weights().to_vec()).collect();
                if linalg::condition_number(&raw) < CONDITION_CAP {
                    return Ok(MixingMatrix::new(rows)?);
                }
            }
            Err(SynthesisError::RejectionExhausted(REJECTION_CAP))
        }
    }
}

/// Draw i.i.d. samples for every contaminated row: first a component from
/// the row's mixture weights, then a point from that base. Row i uses its
/// own generator stream, so results do not depend on evaluation order.
pub fn sample_instance(
    instance: &ProblemInstance,
    n_per_row: &[usize],
    rng_seed: u64,
) -> Result<ProblemInstance> {
    let m = instance.m();
    if n_per_row.len() != m {
        return Err(SynthesisError::Malformed(format!(
            "{} sample sizes for {m} rows",
            n_per_row.len()
        )));
    }
    if n_per_row.iter().any(|&n| n == 0) {
        return Err(SynthesisError::Malformed("sample sizes must be positive".into()));
    }
    let mut samples = Vec::with_capacity(m);
    for (i, &n) in n_per_row.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        rng.set_stream(i as u64 + 1);
        let weights = instance.mixing.row(i);
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut class = instance.l() - 1;
            for (j, &w) in weights.weights().iter().enumerate() {
                acc += w;
                if u < acc {
                    class = j;
                    break;
                }
            }
            rows.push(vec![instance.bases.sample_point(class, &mut rng)]);
        }
        samples.push(SampleSet::new(rows, i)?);
    }
    let mut out = instance.clone();
    out.samples = Some(samples);
    out.seed = rng_seed;
    Ok(out)
}

/// A sample whose empirical distribution equals `dist` exactly: each atom
/// appears `prob * denom` times. Requires every probability to be a
/// multiple of `1/denom`.
pub fn exact_sample(dist: &DiscreteDistribution, denom: u32, label: usize) -> Result<SampleSet> {
    let mut rows = Vec::with_capacity(denom as usize);
    for (&atom, &p) in dist.atoms().iter().zip(dist.probs()) {
        let count = p * denom as f64;
        if (count - count.round()).abs() > 1e-6 {
            return Err(SynthesisError::Infeasible(format!(
                "probability {p} is not a multiple of 1/{denom}"
            )));
        }
        for _ in 0..count.round() as usize {
            rows.push(vec![atom as f64]);
        }
    }
    Ok(SampleSet::new(rows, label)?)
}

/// The discrete distribution of a contaminated row: the mixture of the
/// bases with the row's weights, over the union of atoms.
pub fn contaminated_discrete(
    bases: &[DiscreteDistribution],
    row: &MixtureProportion,
) -> Result<DiscreteDistribution> {
    let mut masses: BTreeMap<u64, f64> = BTreeMap::new();
    for (j, base) in bases.iter().enumerate() {
        let w = row.get(j);
        for (&a, &p) in base.atoms().iter().zip(base.probs()) {
            *masses.entry(a).or_insert(0.0) += w * p;
        }
    }
    let (atoms, probs): (Vec<u64>, Vec<f64>) = masses.into_iter().unzip();
    Ok(DiscreteDistribution::new(atoms, probs)?)
}

/// Named instance templates used as fixtures throughout the test suites.
pub fn builtin_instances() -> BTreeMap<String, ProblemInstance> {
    let bump_bases = gen_bases(
        &BaseSpec::GaussianBump {
            means: vec![0.0, 4.0, 8.0],
            sigma: 1.0,
            beta: 0.05,
        },
        3,
        0,
    )
    .expect("builtin bases are valid");

    let mut map = BTreeMap::new();

    let eq3 = MixingMatrix::from_raw(vec![
        vec![0.5, 0.5, 0.0],
        vec![0.5, 0.0, 0.5],
        vec![0.0, 0.5, 0.5],
    ])
    .expect("eq3 is valid");
    let s3 = PartialLabelMatrix::from_mixing(&eq3);
    map.insert(
        "eq3".to_string(),
        ProblemInstance::new(bump_bases.clone(), eq3, Some(s3)).expect("eq3 instance"),
    );

    let eq4 = MixingMatrix::from_raw(vec![
        vec![0.1, 0.9, 0.0],
        vec![0.9, 0.0, 0.1],
        vec![0.0, 0.1, 0.9],
    ])
    .expect("eq4 is valid");
    let s4 = PartialLabelMatrix::from_mixing(&eq4);
    map.insert(
        "eq4".to_string(),
        ProblemInstance::new(bump_bases.clone(), eq4, Some(s4)).expect("eq4 instance"),
    );

    let bg = common_background_noise(&MixtureProportion::uniform(3), &[0.3, 0.3, 0.3])
        .expect("background matrix");
    map.insert(
        "bg-gamma-0.3".to_string(),
        ProblemInstance::new(bump_bases.clone(), bg, None).expect("bg instance"),
    );

    // Counterexample to identifiability: two classes that always co-occur.
    let dup_pi = MixingMatrix::from_raw(vec![
        vec![0.5, 0.5, 0.0],
        vec![0.3, 0.7, 0.0],
        vec![0.0, 0.0, 1.0],
    ])
    .expect("dup-cols matrix");
    let dup_s = PartialLabelMatrix::from_mixing(&dup_pi);
    map.insert(
        "dup-cols".to_string(),
        ProblemInstance::new(bump_bases, dup_pi, Some(dup_s)).expect("dup-cols instance"),
    );

    map
}

// ---------------------------------------------------------------------------
// Directory serialization
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleFormat {
    Csv,
    Binary,
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    seed: u64,
    bases: Bases,
    mixing: MixingMatrix,
    partial_labels: Option<PartialLabelMatrix>,
    sample_files: Option<Vec<String>>,
}

impl ProblemInstance {
    /// Write `instance.json` plus one sample file per row into `dir`.
    pub fn save_dir(&self, dir: &Path, format: SampleFormat) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut sample_files = None;
        if let Some(samples) = &self.samples {
            let mut names = Vec::with_capacity(samples.len());
            for (i, s) in samples.iter().enumerate() {
                let name = match format {
                    SampleFormat::Csv => format!("samples_{i}.csv"),
                    SampleFormat::Binary => format!("samples_{i}.bin"),
                };
                let file = fs::File::create(dir.join(&name))?;
                match format {
                    SampleFormat::Csv => s.write_csv(file)?,
                    SampleFormat::Binary => s.write_binary(file)?,
                }
                names.push(name);
            }
            sample_files = Some(names);
        }
        let meta = InstanceJson {
            seed: self.seed,
            bases: self.bases.clone(),
            mixing: self.mixing.clone(),
            partial_labels: self.partial_labels.clone(),
            sample_files,
        };
        fs::write(
            dir.join("instance.json"),
            serde_json::to_string_pretty(&meta).expect("instance serializes"),
        )?;
        Ok(())
    }

    pub fn load_dir(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join("instance.json"))?;
        let meta: InstanceJson =
            serde_json::from_str(&text).map_err(|e| SynthesisError::Malformed(e.to_string()))?;
        let mut instance = ProblemInstance::new(meta.bases, meta.mixing, meta.partial_labels)?;
        instance.seed = meta.seed;
        if let Some(files) = meta.sample_files {
            let mut samples = Vec::with_capacity(files.len());
            for (i, name) in files.iter().enumerate() {
                let path = dir.join(name);
                let sample = if name.ends_with(".bin") {
                    SampleSet::from_binary_path(&path, i)?
                } else {
                    SampleSet::from_csv_path(&path, i)?
                };
                samples.push(sample);
            }
            instance.samples = Some(samples);
        }
        Ok(instance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erf_reference_values() {
        assert!((erf(0.0)).abs() < 1e-15);
        assert!((erf(1.0) - 0.8427007929497149).abs() < 1e-10);
        assert!((erf(-1.0) + 0.8427007929497149).abs() < 1e-10);
        assert!((erf(2.0) - 0.9953222650189527).abs() < 1e-10);
        assert!((erf(4.0) - 0.9999999845827421).abs() < 1e-9);
    }

    #[test]
    fn discrete_separable_certifies() {
        let bases = gen_bases(&BaseSpec::DiscreteSeparable { atoms: 5 }, 3, 7).unwrap();
        let Bases::Discrete { bases } = &bases else {
            panic!("expected discrete")
        };
        assert_eq!(bases.len(), 3);
        for (i, b) in bases.iter().enumerate() {
            // Private atom i is exclusive to class i.
            assert!(b.prob_of(i as u64) >= 0.29);
            for (j, other) in bases.iter().enumerate() {
                if i != j {
                    assert_eq!(other.prob_of(i as u64), 0.0);
                }
            }
            // Dyadic masses.
            for &p in b.probs() {
                let scaled = p * DISCRETE_MASS_DENOM as f64;
                assert!((scaled - scaled.round()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn discrete_separable_needs_enough_atoms() {
        assert!(matches!(
            gen_bases(&BaseSpec::DiscreteSeparable { atoms: 2 }, 3, 0),
            Err(SynthesisError::Infeasible(_))
        ));
    }

    #[test]
    fn gaussian_bump_bumps_disjoint() {
        let bases = gen_bases(
            &BaseSpec::GaussianBump {
                means: vec![0.0, 4.0, 8.0],
                sigma: 1.0,
                beta: 0.05,
            },
            3,
            0,
        )
        .unwrap();
        let Bases::Continuous { bases } = &bases else {
            panic!("expected continuous")
        };
        let mut intervals: Vec<(f64, f64)> = bases
            .iter()
            .map(|b| match b {
                ContinuousBase::GaussianBump {
                    bump_lo, bump_hi, ..
                } => (*bump_lo, *bump_hi),
                _ => panic!("expected bump"),
            })
            .collect();
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in intervals.windows(2) {
            assert!(w[0].1 < w[1].0);
        }
        // Bump mass is beta, and it sits beyond 10 sigma.
        for b in bases {
            let ContinuousBase::GaussianBump {
                beta,
                bump_lo,
                bump_hi,
                ..
            } = b
            else {
                panic!()
            };
            let mass = b.interval_prob(*bump_lo, *bump_hi);
            assert!((mass - beta).abs() < 1e-9);
        }
    }

    #[test]
    fn bg_mode_formula() {
        let pi = gen_mixing(&MixingMode::B1Background, 3, 3, 0, 0.3).unwrap();
        let want = MixingMatrix::from_raw(vec![
            vec![0.8, 0.1, 0.1],
            vec![0.1, 0.8, 0.1],
            vec![0.1, 0.1, 0.8],
        ])
        .unwrap();
        for i in 0..3 {
            assert!(pi.row(i).approx_eq(want.row(i), 1e-12));
        }
        assert!(crate::simplex::check_b1(&pi).unwrap());
    }

    #[test]
    fn full_rank_mode_has_rank() {
        let pi = gen_mixing(&MixingMode::FullRank, 3, 3, 5, 0.0).unwrap();
        let raw: Vec<Vec<f64>> = pi.rows().iter().map(|r| r.weights().to_vec()).collect();
        assert_eq!(crate::linalg::rank(&raw, 1e-9), 3);
    }

    #[test]
    fn partial_label_mode_respects_pattern() {
        let s = PartialLabelMatrix::new(vec![
            vec![true, true, false],
            vec![true, false, true],
            vec![false, true, true],
        ])
        .unwrap();
        let pi = gen_mixing(&MixingMode::PartialLabel(s.clone()), 3, 3, 9, 0.0).unwrap();
        assert!(s.consistent_with(&pi));

        let dup = PartialLabelMatrix::new(vec![
            vec![true, true, false],
            vec![true, true, false],
            vec![false, false, true],
        ])
        .unwrap();
        assert!(matches!(
            gen_mixing(&MixingMode::PartialLabel(dup), 3, 3, 0, 0.0),
            Err(SynthesisError::Infeasible(_))
        ));
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let inst = builtin_instances().remove("eq3").unwrap();
        let a = sample_instance(&inst, &[50, 50, 50], 13).unwrap();
        let b = sample_instance(&inst, &[50, 50, 50], 13).unwrap();
        assert_eq!(a.samples, b.samples);
        let c = sample_instance(&inst, &[50, 50, 50], 14).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn identity_mixing_samples_pure_classes() {
        let bases = gen_bases(&BaseSpec::DiscreteSeparable { atoms: 3 }, 3, 1).unwrap();
        let inst =
            ProblemInstance::new(bases, MixingMatrix::identity(3), None).unwrap();
        let sampled = sample_instance(&inst, &[500, 500, 500], 3).unwrap();
        // With 3 atoms and 3 classes every base is a point mass on its
        // private atom, so row i samples only coordinate i.
        for (i, s) in sampled.samples.unwrap().iter().enumerate() {
            assert!(s.iter_points().all(|p| p[0] == i as f64));
        }
    }

    #[test]
    fn exact_sample_matches_distribution() {
        let d = DiscreteDistribution::new(vec![0, 1, 2], vec![0.5, 0.25, 0.25]).unwrap();
        let s = exact_sample(&d, 4, 0).unwrap();
        assert_eq!(s.n(), 4);
        let within = |lo: f64, hi: f64| s.evaluate(&CandidateSet::Interval { lo, hi });
        assert_eq!(within(0.0, 0.0), 0.5);
        assert_eq!(within(1.0, 1.0), 0.25);
        assert!(matches!(
            exact_sample(&d, 3, 0),
            Err(SynthesisError::Infeasible(_))
        ));
    }

    #[test]
    fn contaminated_discrete_mixture() {
        let b0 = DiscreteDistribution::new(vec![0, 1], vec![0.5, 0.5]).unwrap();
        let b1 = DiscreteDistribution::new(vec![1, 2], vec![0.25, 0.75]).unwrap();
        let row = MixtureProportion::new(vec![0.5, 0.5]).unwrap();
        let mix = contaminated_discrete(&[b0, b1], &row).unwrap();
        assert_eq!(mix.prob_of(0), 0.25);
        assert_eq!(mix.prob_of(1), 0.375);
        assert_eq!(mix.prob_of(2), 0.375);
    }

    #[test]
    fn builtin_fixtures() {
        let map = builtin_instances();
        let eq3 = &map["eq3"];
        assert_eq!(eq3.mixing.entry(0, 0), 0.5);
        assert!(eq3.partial_labels.as_ref().unwrap().columns_unique());
        let eq4 = &map["eq4"];
        assert_eq!(eq4.mixing.entry(0, 1), 0.9);
        // Same label pattern as eq3.
        assert_eq!(eq3.partial_labels, eq4.partial_labels);
        let bg = &map["bg-gamma-0.3"];
        assert!((bg.mixing.entry(0, 0) - 0.8).abs() < 1e-12);
        let dup = &map["dup-cols"];
        assert!(!dup.partial_labels.as_ref().unwrap().columns_unique());
    }

    #[test]
    fn save_and_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let inst = builtin_instances().remove("eq3").unwrap();
        let sampled = sample_instance(&inst, &[20, 30, 40], 5).unwrap();
        for format in [SampleFormat::Csv, SampleFormat::Binary] {
            let sub = dir.path().join(format!("{format:?}"));
            sampled.save_dir(&sub, format).unwrap();
            let back = ProblemInstance::load_dir(&sub).unwrap();
            assert_eq!(back.seed, 5);
            assert_eq!(back.mixing, sampled.mixing);
            assert_eq!(back.partial_labels, sampled.partial_labels);
            assert_eq!(back.bases, sampled.bases);
            let a = sampled.samples.as_ref().unwrap();
            let b = back.samples.as_ref().unwrap();
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.n(), y.n());
                for (p, q) in x.iter_points().zip(y.iter_points()) {
                    assert_eq!(p, q);
                }
            }
        }
    }
}
