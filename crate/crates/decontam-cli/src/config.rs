//! Experiment configuration: a flat key/value text format mirroring the
//! `ExperimentConfig` fields, plus validation with field-level messages.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use decontam::empirical::SetFamily;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("missing required field `{0}`")]
    Missing(String),
}

pub type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Multiclass,
    Demix,
    Partial,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::Multiclass => write!(f, "multiclass"),
            Task::Demix => write!(f, "demix"),
            Task::Partial => write!(f, "partial"),
        }
    }
}

impl FromStr for Task {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "multiclass" => Ok(Task::Multiclass),
            "demix" => Ok(Task::Demix),
            "partial" => Ok(Task::Partial),
            other => Err(format!(
                "`{other}` is not a task (expected multiclass | demix | partial)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Hat,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Exact => write!(f, "exact"),
            Mode::Hat => write!(f, "hat"),
        }
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exact" => Ok(Mode::Exact),
            "hat" => Ok(Mode::Hat),
            other => Err(format!("`{other}` is not a mode (expected exact | hat)")),
        }
    }
}

fn parse_family(s: &str) -> std::result::Result<SetFamily, String> {
    match s {
        "intervals" | "intervals-1d" => Ok(SetFamily::Intervals1d),
        "axis-rectangles" | "rectangles" => Ok(SetFamily::AxisRectangles),
        "balls" => Ok(SetFamily::Balls),
        other => Err(format!(
            "`{other}` is not a set family (expected intervals | axis-rectangles | balls)"
        )),
    }
}

pub const DEFAULT_ANCHOR_BUDGET: usize = 512;

/// Where the kappa-hat deviation allowance comes from in hat runs.
///
/// The full VC bound is vacuous below roughly 1e6 points per sample (it
/// exceeds 1/6, which drives every kappa-hat ratio above any face
/// threshold), so the harness defaults to a DKW-shaped allowance with the
/// same sqrt(log n / n) decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsAllowance {
    Desk,
    Auto,
    Fixed(f64),
}

impl FromStr for EpsAllowance {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "desk" => Ok(EpsAllowance::Desk),
            "auto" => Ok(EpsAllowance::Auto),
            other => other
                .parse::<f64>()
                .map(EpsAllowance::Fixed)
                .map_err(|_| format!("`{other}` is not desk | auto | <float>")),
        }
    }
}

/// One experiment: which task and mode to run, on which instance, with
/// which candidate family, face-test epsilon, and seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task: Task,
    pub mode: Mode,
    /// Builtin template name or a path to a generated instance directory.
    pub instance: String,
    pub n_per_row: Option<Vec<usize>>,
    pub vc_family: SetFamily,
    pub anchor_budget: usize,
    /// FaceTestHat threshold (hat mode only).
    pub epsilon: f64,
    /// Deviation allowance for the kappa-hat estimators (hat mode only).
    pub eps_n: EpsAllowance,
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(task: Task, mode: Mode, instance: impl Into<String>) -> Self {
        ExperimentConfig {
            task,
            mode,
            instance: instance.into(),
            n_per_row: None,
            vc_family: SetFamily::Intervals1d,
            anchor_budget: DEFAULT_ANCHOR_BUDGET,
            epsilon: decontam::hat::DEFAULT_FACE_EPSILON,
            eps_n: EpsAllowance::Desk,
            seeds: vec![0],
            out: None,
            jobs: None,
        }
    }

    /// Parse the `key = value` config format. Unknown keys are rejected;
    /// `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut task = None;
        let mut mode = None;
        let mut instance = None;
        let mut n_per_row = None;
        let mut vc_family = SetFamily::Intervals1d;
        let mut anchor_budget = DEFAULT_ANCHOR_BUDGET;
        let mut epsilon = decontam::hat::DEFAULT_FACE_EPSILON;
        let mut eps_n = EpsAllowance::Desk;
        let mut seeds = vec![0u64];
        let mut out = None;
        let mut jobs = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: idx + 1,
                    text: raw.to_string(),
                });
            };
            let key = key.trim();
            let value = value.trim();
            let field_err = |message: String| ConfigError::Field {
                field: key.to_string(),
                message,
            };
            match key {
                "task" => task = Some(value.parse::<Task>().map_err(field_err)?),
                "mode" => mode = Some(value.parse::<Mode>().map_err(field_err)?),
                "instance" => instance = Some(value.to_string()),
                "n_per_row" => {
                    let parsed: std::result::Result<Vec<usize>, _> = value
                        .split(',')
                        .map(|v| v.trim().parse::<usize>())
                        .collect();
                    n_per_row = Some(parsed.map_err(|e| field_err(e.to_string()))?);
                }
                "vc_family" => vc_family = parse_family(value).map_err(field_err)?,
                "anchor_budget" => {
                    anchor_budget = value.parse().map_err(|e: std::num::ParseIntError| {
                        field_err(e.to_string())
                    })?
                }
                "epsilon" => {
                    epsilon = value.parse().map_err(|e: std::num::ParseFloatError| {
                        field_err(e.to_string())
                    })?
                }
                "eps_n" => eps_n = value.parse::<EpsAllowance>().map_err(field_err)?,
                "seeds" => {
                    let parsed: std::result::Result<Vec<u64>, _> = value
                        .split(',')
                        .map(|v| v.trim().parse::<u64>())
                        .collect();
                    seeds = parsed.map_err(|e| field_err(e.to_string()))?;
                }
                "out" => out = Some(PathBuf::from(value)),
                "jobs" => {
                    jobs = Some(value.parse().map_err(|e: std::num::ParseIntError| {
                        field_err(e.to_string())
                    })?)
                }
                other => return Err(ConfigError::UnknownField(other.to_string())),
            }
        }

        let config = ExperimentConfig {
            task: task.ok_or_else(|| ConfigError::Missing("task".into()))?,
            mode: mode.ok_or_else(|| ConfigError::Missing("mode".into()))?,
            instance: instance.ok_or_else(|| ConfigError::Missing("instance".into()))?,
            n_per_row,
            vc_family,
            anchor_budget,
            epsilon,
            eps_n,
            seeds,
            out,
            jobs,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(ConfigError::Field {
                field: "seeds".into(),
                message: "need at least one seed".into(),
            });
        }
        if !(0.0 < self.epsilon && self.epsilon < 1.0) {
            return Err(ConfigError::Field {
                field: "epsilon".into(),
                message: format!("{} outside (0, 1)", self.epsilon),
            });
        }
        if self.anchor_budget == 0 {
            return Err(ConfigError::Field {
                field: "anchor_budget".into(),
                message: "must be positive".into(),
            });
        }
        if let EpsAllowance::Fixed(e) = self.eps_n {
            if !(e >= 0.0) {
                return Err(ConfigError::Field {
                    field: "eps_n".into(),
                    message: format!("{e} must be nonnegative"),
                });
            }
        }
        if let Some(n) = &self.n_per_row {
            if n.iter().any(|&v| v == 0) {
                return Err(ConfigError::Field {
                    field: "n_per_row".into(),
                    message: "sample sizes must be positive".into(),
                });
            }
        }
        Ok(())
    }
}
