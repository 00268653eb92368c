//! Recovery reports: per-seed rows plus aggregates, written as JSON and a
//! plot-ready CSV table.
//!
//! Wall-clock timings are kept on the in-memory report for console summaries
//! but never serialized: report files must be byte-identical across repeated
//! runs with the same configuration and seeds.

use std::io::Write;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::config::{Mode, Task};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    /// For partial tasks: the vertex test identified a class permutation.
    /// For other tasks: the pipeline completed.
    pub permutation_found: bool,
    /// Per-class deviation after permutation matching; empty when the
    /// pipeline errored.
    pub per_class_deviation: Vec<f64>,
    /// Kappa diagnostics in computation order.
    pub kappas: Vec<f64>,
    pub success: bool,
    pub error: Option<String>,
    #[serde(skip)]
    pub wall: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    /// Mean per-class deviation over seeds that produced estimates.
    pub mean_deviation: Option<f64>,
    pub max_deviation: Option<f64>,
    /// Fraction of all seeds counted as successes.
    pub success_rate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub task: Task,
    pub mode: Mode,
    pub instance: String,
    pub seeds: Vec<SeedReport>,
    pub aggregate: Aggregate,
}

impl RecoveryReport {
    pub fn new(task: Task, mode: Mode, instance: String, seeds: Vec<SeedReport>) -> Self {
        let aggregate = Self::aggregate_of(&seeds);
        RecoveryReport {
            task,
            mode,
            instance,
            seeds,
            aggregate,
        }
    }

    /// Aggregates are a pure function of the per-seed rows.
    pub fn aggregate_of(seeds: &[SeedReport]) -> Aggregate {
        let devs: Vec<f64> = seeds
            .iter()
            .flat_map(|s| s.per_class_deviation.iter().copied())
            .collect();
        let mean_deviation = if devs.is_empty() {
            None
        } else {
            Some(devs.iter().sum::<f64>() / devs.len() as f64)
        };
        let max_deviation = devs.iter().copied().reduce(f64::max);
        let success_rate = if seeds.is_empty() {
            0.0
        } else {
            seeds.iter().filter(|s| s.success).count() as f64 / seeds.len() as f64
        };
        Aggregate {
            mean_deviation,
            max_deviation,
            success_rate,
        }
    }

    pub fn all_failed(&self) -> bool {
        !self.seeds.is_empty() && self.seeds.iter().all(|s| s.error.is_some())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// CSV table, one row per seed per class. Errored seeds emit a single
    /// row with `class = -1` and `deviation = nan`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# decontam recovery report, csv schema v1")?;
        writeln!(
            w,
            "# columns: task,mode,instance,seed,class,deviation,permutation_found,success"
        )?;
        writeln!(w, "task,mode,instance,seed,class,deviation,permutation_found,success")?;
        for s in &self.seeds {
            if s.per_class_deviation.is_empty() {
                writeln!(
                    w,
                    "{},{},{},{},-1,nan,{},{}",
                    self.task, self.mode, self.instance, s.seed, s.permutation_found, s.success
                )?;
            } else {
                for (class, dev) in s.per_class_deviation.iter().enumerate() {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{},{}",
                        self.task,
                        self.mode,
                        self.instance,
                        s.seed,
                        class,
                        dev,
                        s.permutation_found,
                        s.success
                    )?;
                }
            }
        }
        Ok(())
    }

    /// Console summary; the only place wall time shows up.
    pub fn summary(&self) -> String {
        let total_wall: Duration = self.seeds.iter().map(|s| s.wall).sum();
        let errors = self.seeds.iter().filter(|s| s.error.is_some()).count();
        format!(
            "{} {} on {}: {} seeds, success rate {:.3}, max deviation {}, {} errors, {:.2}s",
            self.task,
            self.mode,
            self.instance,
            self.seeds.len(),
            self.aggregate.success_rate,
            self.aggregate
                .max_deviation
                .map_or("n/a".to_string(), |d| format!("{d:.6}")),
            errors,
            total_wall.as_secs_f64()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seed_row(seed: u64, devs: Vec<f64>, success: bool) -> SeedReport {
        SeedReport {
            seed,
            permutation_found: true,
            per_class_deviation: devs,
            kappas: vec![],
            success,
            error: None,
            wall: Duration::from_millis(5),
        }
    }

    #[test]
    fn aggregate_matches_recomputation() {
        let rows = vec![
            seed_row(0, vec![0.1, 0.3], true),
            seed_row(1, vec![0.2, 0.4], false),
        ];
        let r = RecoveryReport::new(Task::Demix, Mode::Hat, "eq3".into(), rows);
        assert_eq!(r.aggregate, RecoveryReport::aggregate_of(&r.seeds));
        assert!((r.aggregate.mean_deviation.unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(r.aggregate.max_deviation, Some(0.4));
        assert_eq!(r.aggregate.success_rate, 0.5);
    }

    #[test]
    fn csv_one_row_per_seed_per_class() {
        let rows = vec![seed_row(7, vec![0.0, 0.0, 0.0], true)];
        let r = RecoveryReport::new(Task::Multiclass, Mode::Exact, "bg".into(), rows);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let data_rows: Vec<&str> = text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("task,"))
            .collect();
        assert_eq!(data_rows.len(), 3);
        assert!(data_rows[0].starts_with("multiclass,exact,bg,7,0,"));
    }

    #[test]
    fn wall_time_never_serialized() {
        let rows = vec![seed_row(0, vec![0.1], true)];
        let r = RecoveryReport::new(Task::Demix, Mode::Exact, "x".into(), rows);
        assert!(!r.to_json().contains("wall"));
    }
}
