//! Experiment orchestration: resolve an instance, run the requested
//! pipeline once per seed on a worker pool, match the estimates to the
//! ground truth, and emit the report.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use decontam::empirical::{
    sup_deviation_against, CandidateFamily, SamplePool, SignedMixture, VcClassSpec,
};
use decontam::hat::{
    demix_hat, desk_epsilon_n, multiclass_hat, partial_label_hat, EpsilonMode, HatParams,
    HatResult,
};
use decontam::population::{
    demix, multiclass_decontaminate, partial_label_decontaminate, DemixVariant,
    DEFAULT_MAX_FACE_ITER, DEFAULT_MAX_K,
};
use decontam::simplex::MixtureProportion;
use decontam::synthesis::{builtin_instances, sample_instance, ProblemInstance};

use crate::config::{ConfigError, EpsAllowance, ExperimentConfig, Mode, Task};
use crate::report::{RecoveryReport, SeedReport};

/// Class-order recovery in the exact engine is correct to solver tolerance.
pub const EXACT_DEVIATION_TOL: f64 = 1e-7;
/// Desk-scale acceptance threshold for finite-sample recovery.
pub const HAT_DEVIATION_TOL: f64 = 0.25;

const MAX_MATCH_CLASSES: usize = 10;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("instance `{name}`: {message}")]
    Instance { name: String, message: String },
    #[error("estimate/truth count mismatch: {left} vs {right}")]
    CountMismatch { left: usize, right: usize },
    #[error("permutation matching supports at most {MAX_MATCH_CLASSES} classes, got {0}")]
    TooManyClasses(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

/// Resolve a builtin template name or an instance directory path.
pub fn resolve_instance(name: &str) -> Result<ProblemInstance> {
    if let Some(instance) = builtin_instances().remove(name) {
        return Ok(instance);
    }
    let path = Path::new(name);
    if path.is_dir() {
        return ProblemInstance::load_dir(path).map_err(|e| ExperimentError::Instance {
            name: name.to_string(),
            message: e.to_string(),
        });
    }
    Err(ExperimentError::Instance {
        name: name.to_string(),
        message: "not a builtin template and not an instance directory".to_string(),
    })
}

// ---------------------------------------------------------------------------
// Permutation matching
// ---------------------------------------------------------------------------

/// Advance `perm` to its lexicographic successor; false once exhausted.
fn next_permutation(perm: &mut [usize]) -> bool {
    if perm.len() < 2 {
        return false;
    }
    let mut i = perm.len() - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = perm.len() - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// Minimize the worst per-class deviation over all assignments of estimates
/// to classes. `cost[i][k]` is the deviation of estimate i from class k.
/// Returns `(perm, errors)` with `perm[k]` = estimate assigned to class k;
/// ties go to the lexicographically smallest permutation.
pub fn best_permutation(cost: &[Vec<f64>]) -> Result<(Vec<usize>, Vec<f64>)> {
    let l = cost.len();
    if l == 0 || cost.iter().any(|r| r.len() != l) {
        return Err(ExperimentError::CountMismatch {
            left: l,
            right: cost.first().map_or(0, |r| r.len()),
        });
    }
    if l > MAX_MATCH_CLASSES {
        return Err(ExperimentError::TooManyClasses(l));
    }
    let mut perm: Vec<usize> = (0..l).collect();
    let mut best_perm = perm.clone();
    let mut best_max = f64::INFINITY;
    loop {
        let max = (0..l)
            .map(|k| cost[perm[k]][k])
            .fold(f64::NEG_INFINITY, f64::max);
        if max < best_max {
            best_max = max;
            best_perm = perm.clone();
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    let errors: Vec<f64> = (0..l).map(|k| cost[best_perm[k]][k]).collect();
    Ok((best_perm, errors))
}

/// Match exact estimates against truth proportions by componentwise
/// deviation.
pub fn evaluate_recovery_exact(
    estimates: &[MixtureProportion],
    truth: &[MixtureProportion],
) -> Result<(Vec<usize>, Vec<f64>)> {
    if estimates.len() != truth.len() {
        return Err(ExperimentError::CountMismatch {
            left: estimates.len(),
            right: truth.len(),
        });
    }
    let cost: Vec<Vec<f64>> = estimates
        .iter()
        .map(|e| truth.iter().map(|t| e.max_abs_diff(t)).collect())
        .collect();
    best_permutation(&cost)
}

/// Match finite-sample estimates against exact per-class set probabilities
/// by sup deviation over the candidate family.
pub fn evaluate_recovery_hat(
    family: &CandidateFamily,
    estimates: &[SignedMixture],
    class_probs: &[Vec<f64>],
) -> Result<(Vec<usize>, Vec<f64>)> {
    if estimates.len() != class_probs.len() {
        return Err(ExperimentError::CountMismatch {
            left: estimates.len(),
            right: class_probs.len(),
        });
    }
    let cost: Vec<Vec<f64>> = estimates
        .iter()
        .map(|e| {
            class_probs
                .iter()
                .map(|t| {
                    sup_deviation_against(family, e, t).expect("family validated nonempty")
                })
                .collect()
        })
        .collect();
    best_permutation(&cost)
}

// ---------------------------------------------------------------------------
// Per-seed pipelines
// ---------------------------------------------------------------------------

fn identity(l: usize) -> Vec<usize> {
    (0..l).collect()
}

fn exact_seed(config: &ExperimentConfig, instance: &ProblemInstance, seed: u64) -> SeedReport {
    let start = Instant::now();
    let rows = instance.mixing.rows();
    let l = instance.l();
    let outcome: std::result::Result<(Vec<MixtureProportion>, bool), String> = (|| {
        match config.task {
            Task::Multiclass => multiclass_decontaminate(rows)
                .map(|v| (v, true))
                .map_err(|e| e.to_string()),
            Task::Demix => demix(rows, seed, DemixVariant::MultiSample, DEFAULT_MAX_FACE_ITER)
                .map(|r| (r.vertices, true))
                .map_err(|e| e.to_string()),
            Task::Partial => {
                let s = instance
                    .partial_labels
                    .as_ref()
                    .ok_or("instance has no partial labels")?;
                partial_label_decontaminate(s, rows, seed, DEFAULT_MAX_K)
                    .map(|v| (v, true))
                    .map_err(|e| e.to_string())
            }
        }
    })();

    match outcome {
        Ok((estimates, permutation_found)) => {
            let truth: Vec<MixtureProportion> =
                (0..l).map(|k| MixtureProportion::basis(k, l)).collect();
            match evaluate_recovery_exact(&estimates, &truth) {
                Ok((perm, errors)) => {
                    let dev_ok = errors.iter().all(|&d| d <= EXACT_DEVIATION_TOL);
                    let order_ok = match config.task {
                        Task::Demix => true,
                        _ => perm == identity(l),
                    };
                    SeedReport {
                        seed,
                        permutation_found,
                        per_class_deviation: errors,
                        kappas: Vec::new(),
                        success: dev_ok && order_ok,
                        error: None,
                        wall: start.elapsed(),
                    }
                }
                Err(e) => SeedReport {
                    seed,
                    permutation_found: false,
                    per_class_deviation: Vec::new(),
                    kappas: Vec::new(),
                    success: false,
                    error: Some(e.to_string()),
                    wall: start.elapsed(),
                },
            }
        }
        Err(message) => SeedReport {
            seed,
            permutation_found: false,
            per_class_deviation: Vec::new(),
            kappas: Vec::new(),
            success: false,
            error: Some(message),
            wall: start.elapsed(),
        },
    }
}

fn hat_seed(config: &ExperimentConfig, instance: &ProblemInstance, seed: u64) -> SeedReport {
    let start = Instant::now();
    let fail = |message: String, wall| SeedReport {
        seed,
        permutation_found: false,
        per_class_deviation: Vec::new(),
        kappas: Vec::new(),
        success: false,
        error: Some(message),
        wall,
    };

    let outcome: std::result::Result<(HatResult, SamplePool), String> = (|| {
        let sampled;
        let samples = match &instance.samples {
            Some(s) => s.clone(),
            None => {
                let n = config
                    .n_per_row
                    .as_ref()
                    .ok_or("hat mode needs n_per_row when the instance has no samples")?;
                if n.len() != instance.m() {
                    return Err(format!(
                        "n_per_row has {} entries for {} contaminated rows",
                        n.len(),
                        instance.m()
                    ));
                }
                sampled = sample_instance(instance, n, seed).map_err(|e| e.to_string())?;
                sampled.samples.expect("sampled instance has samples")
            }
        };
        let pool = SamplePool::new(samples).map_err(|e| e.to_string())?;
        let vc = VcClassSpec::new(config.vc_family, pool.dim(), config.anchor_budget)
            .map_err(|e| e.to_string())?;
        let epsilon_mode = match config.eps_n {
            EpsAllowance::Desk => EpsilonMode::Fixed(desk_epsilon_n(&pool.sizes())),
            EpsAllowance::Auto => EpsilonMode::Auto,
            EpsAllowance::Fixed(e) => EpsilonMode::Fixed(e),
        };
        let params = HatParams {
            face_epsilon: config.epsilon,
            epsilon_mode,
            ..HatParams::default()
        };
        let result = match config.task {
            Task::Multiclass => multiclass_hat(&pool, &vc, &params),
            Task::Demix => demix_hat(&pool, &vc, &params, seed),
            Task::Partial => {
                let s = instance
                    .partial_labels
                    .as_ref()
                    .ok_or("instance has no partial labels")?;
                partial_label_hat(s, &pool, &vc, &params, seed)
            }
        }
        .map_err(|e| e.to_string())?;
        Ok((result, pool))
    })();

    let (result, pool) = match outcome {
        Ok(pair) => pair,
        Err(message) => return fail(message, start.elapsed()),
    };

    let vc = match VcClassSpec::new(config.vc_family, pool.dim(), config.anchor_budget) {
        Ok(v) => v,
        Err(e) => return fail(e.to_string(), start.elapsed()),
    };
    let family = match pool.enumerate_candidates(&vc) {
        Ok(f) => f,
        Err(e) => return fail(e.to_string(), start.elapsed()),
    };
    let l = instance.l();
    let class_probs: Vec<Vec<f64>> = (0..l).map(|k| instance.class_probs(k, &family)).collect();

    let permutation_found = match config.task {
        Task::Partial => result.permutation.is_some(),
        _ => true,
    };
    match evaluate_recovery_hat(&family, &result.estimates, &class_probs) {
        Ok((perm, errors)) => {
            let dev_ok = errors.iter().all(|&d| d <= HAT_DEVIATION_TOL);
            let order_ok = match config.task {
                Task::Demix => true,
                _ => perm == identity(l),
            };
            SeedReport {
                seed,
                permutation_found,
                per_class_deviation: errors,
                kappas: result.diagnostics.kappas.clone(),
                success: dev_ok && order_ok && permutation_found,
                error: None,
                wall: start.elapsed(),
            }
        }
        Err(e) => fail(e.to_string(), start.elapsed()),
    }
}

// ---------------------------------------------------------------------------
// run_experiment
// ---------------------------------------------------------------------------

/// Run every seed of the experiment (on a worker pool when `jobs` is set),
/// assemble the report, and write `report.json` and `report.csv` under the
/// output directory when one is configured.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RecoveryReport> {
    config.validate()?;
    let instance = resolve_instance(&config.instance)?;
    if config.task == Task::Partial && instance.partial_labels.is_none() {
        return Err(ExperimentError::Instance {
            name: config.instance.clone(),
            message: "partial task needs an instance with partial labels".into(),
        });
    }
    if config.mode == Mode::Hat && instance.samples.is_none() && config.n_per_row.is_none() {
        return Err(ExperimentError::Instance {
            name: config.instance.clone(),
            message: "hat mode needs n_per_row or an instance with samples".into(),
        });
    }

    let run_seed = |&seed: &u64| -> SeedReport {
        match config.mode {
            Mode::Exact => exact_seed(config, &instance, seed),
            Mode::Hat => hat_seed(config, &instance, seed),
        }
    };

    let seed_reports: Vec<SeedReport> = match config.jobs {
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.max(1))
                .build()
                .expect("worker pool");
            pool.install(|| config.seeds.par_iter().map(run_seed).collect())
        }
        None => config.seeds.par_iter().map(run_seed).collect(),
    };

    let report = RecoveryReport::new(
        config.task,
        config.mode,
        config.instance.clone(),
        seed_reports,
    );

    if let Some(dir) = &config.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), report.to_json())?;
        let mut csv = Vec::new();
        report.write_csv(&mut csv)?;
        std::fs::write(dir.join("report.csv"), csv)?;
    }
    Ok(report)
}
