use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use decontam::empirical::{SamplePool, SetFamily, VcClassSpec};
use decontam::hat::HatResult;
use decontam::population::ResultJson;
use decontam::simplex::MixtureProportion;
use decontam::synthesis::{builtin_instances, sample_instance, SampleFormat};

use decontam_cli::config::{ExperimentConfig, DEFAULT_ANCHOR_BUDGET};
use decontam_cli::experiment::{
    evaluate_recovery_exact, evaluate_recovery_hat, resolve_instance, run_experiment,
};

#[derive(Parser)]
#[command(
    name = "decontam",
    about = "Decontamination of mutual contamination models: generate instances, run exact and finite-sample recovery pipelines, evaluate results"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Binary,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Intervals,
    AxisRectangles,
    Balls,
}

impl From<FamilyArg> for SetFamily {
    fn from(f: FamilyArg) -> SetFamily {
        match f {
            FamilyArg::Intervals => SetFamily::Intervals1d,
            FamilyArg::AxisRectangles => SetFamily::AxisRectangles,
            FamilyArg::Balls => SetFamily::Balls,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a problem instance (ground truth plus optional samples) to a
    /// directory.
    Generate {
        /// Builtin template name (see list-instances).
        #[arg(long)]
        instance: String,
        /// Comma-separated sample sizes, one per contaminated row; omit to
        /// write ground truth only.
        #[arg(long)]
        n: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
    /// Run an experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Replace the config's seed list with a single seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker pool size for seed dispatch.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Match a result file against an instance's ground truth and print
    /// per-class errors.
    Evaluate {
        /// Builtin template name or instance directory.
        #[arg(long)]
        instance: String,
        /// Result JSON: population results ({"vertices": ...}) or a hat
        /// result ({"estimates": ...}).
        #[arg(long)]
        estimates: PathBuf,
        #[arg(long, value_enum, default_value = "intervals")]
        vc_family: FamilyArg,
        #[arg(long, default_value_t = DEFAULT_ANCHOR_BUDGET)]
        anchor_budget: usize,
    },
    /// List builtin instance templates.
    ListInstances,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode, String> {
    match command {
        Command::Generate {
            instance,
            n,
            seed,
            out,
            format,
        } => {
            let template = resolve_instance(&instance).map_err(|e| e.to_string())?;
            let full = match n {
                Some(list) => {
                    let sizes: Vec<usize> = list
                        .split(',')
                        .map(|v| v.trim().parse::<usize>().map_err(|e| e.to_string()))
                        .collect::<Result<_, String>>()?;
                    sample_instance(&template, &sizes, seed).map_err(|e| e.to_string())?
                }
                None => template,
            };
            let fmt = match format {
                FormatArg::Csv => SampleFormat::Csv,
                FormatArg::Binary => SampleFormat::Binary,
            };
            full.save_dir(&out, fmt).map_err(|e| e.to_string())?;
            println!("wrote instance to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Run {
            config,
            seed,
            out,
            jobs,
        } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| format!("{}: {e}", config.display()))?;
            let mut cfg = ExperimentConfig::parse(&text).map_err(|e| e.to_string())?;
            if let Some(s) = seed {
                cfg.seeds = vec![s];
            }
            if let Some(o) = out {
                cfg.out = Some(o);
            }
            if let Some(j) = jobs {
                cfg.jobs = Some(j);
            }
            let report = run_experiment(&cfg).map_err(|e| e.to_string())?;
            println!("{}", report.summary());
            if report.all_failed() {
                for s in &report.seeds {
                    if let Some(err) = &s.error {
                        eprintln!("seed {}: {err}", s.seed);
                    }
                }
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate {
            instance,
            estimates,
            vc_family,
            anchor_budget,
        } => {
            let inst = resolve_instance(&instance).map_err(|e| e.to_string())?;
            let text = std::fs::read_to_string(&estimates)
                .map_err(|e| format!("{}: {e}", estimates.display()))?;
            let l = inst.l();

            let (perm, errors) = if let Ok(hat) = serde_json::from_str::<HatResult>(&text) {
                let samples = inst
                    .samples
                    .clone()
                    .ok_or("hat estimates need an instance directory with samples")?;
                let pool = SamplePool::new(samples).map_err(|e| e.to_string())?;
                let vc = VcClassSpec::new(vc_family.into(), pool.dim(), anchor_budget)
                    .map_err(|e| e.to_string())?;
                let family = pool.enumerate_candidates(&vc).map_err(|e| e.to_string())?;
                let class_probs: Vec<Vec<f64>> =
                    (0..l).map(|k| inst.class_probs(k, &family)).collect();
                evaluate_recovery_hat(&family, &hat.estimates, &class_probs)
                    .map_err(|e| e.to_string())?
            } else {
                let result: ResultJson = serde_json::from_str(&text)
                    .map_err(|e| format!("unrecognized result file: {e}"))?;
                let vertices: Vec<MixtureProportion> = result
                    .vertices
                    .into_iter()
                    .map(MixtureProportion::new)
                    .collect::<Result<_, _>>()
                    .map_err(|e| e.to_string())?;
                let truth: Vec<MixtureProportion> =
                    (0..l).map(|k| MixtureProportion::basis(k, l)).collect();
                evaluate_recovery_exact(&vertices, &truth).map_err(|e| e.to_string())?
            };

            println!("permutation: {perm:?}");
            for (k, e) in errors.iter().enumerate() {
                println!("class {k}: deviation {e}");
            }
            let max = errors.iter().cloned().fold(0.0, f64::max);
            println!("max deviation: {max}");
            Ok(ExitCode::SUCCESS)
        }
        Command::ListInstances => {
            for (name, inst) in builtin_instances() {
                let labels = if inst.partial_labels.is_some() {
                    "partial labels"
                } else {
                    "no partial labels"
                };
                println!(
                    "{name}: {} classes, {} contaminated rows, {labels}",
                    inst.l(),
                    inst.m()
                );
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
