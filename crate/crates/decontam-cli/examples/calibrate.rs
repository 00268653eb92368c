//! Calibration sweep behind the finite-sample acceptance thresholds: runs
//! demix-hat on the eq3 template across sample sizes, deviation allowances,
//! and face thresholds, reporting matched deviations per trial.
//!
//! Usage: cargo run --release -p decontam-cli --example calibrate [trials]

use decontam::empirical::{SamplePool, SetFamily, VcClassSpec};
use decontam::hat::{demix_hat, desk_epsilon_n, EpsilonMode, HatParams};
use decontam::synthesis::{builtin_instances, sample_instance};
use decontam_cli::experiment::evaluate_recovery_hat;

fn main() {
    let trials: u64 = std::env::args()
        .nth(1)
        .and_then(|v| v.parse().ok())
        .unwrap_or(20);
    let inst = builtin_instances().remove("eq3").unwrap();
    let sizes = [1_000usize, 10_000, 100_000];
    let vc = VcClassSpec::new(SetFamily::Intervals1d, 1, 512).unwrap();

    type ModeFn = fn(&[usize]) -> EpsilonMode;
    let modes: [(&str, ModeFn); 3] = [
        ("auto (full VC)", |_| EpsilonMode::Auto),
        ("desk (dkw/3)", |s| EpsilonMode::Fixed(desk_epsilon_n(s))),
        ("fixed 0.01", |_| EpsilonMode::Fixed(0.01)),
    ];

    for (mode_name, mode_fn) in modes {
        for face in [0.2, 0.6] {
            let mut monotone = 0;
            let mut final_ok = 0;
            for seed in 0..trials {
                let mut devs = Vec::new();
                for (si, &n) in sizes.iter().enumerate() {
                    let sampled =
                        sample_instance(&inst, &[n; 3], 7_000 + seed * 10 + si as u64)
                            .unwrap();
                    let pool = SamplePool::new(sampled.samples.unwrap()).unwrap();
                    let params = HatParams {
                        face_epsilon: face,
                        epsilon_mode: mode_fn(&[n; 3]),
                        ..HatParams::default()
                    };
                    let dev = match demix_hat(&pool, &vc, &params, seed) {
                        Ok(result) => {
                            let family = pool.enumerate_candidates(&vc).unwrap();
                            let probs: Vec<Vec<f64>> =
                                (0..3).map(|k| inst.class_probs(k, &family)).collect();
                            let (_, errs) =
                                evaluate_recovery_hat(&family, &result.estimates, &probs)
                                    .unwrap();
                            errs.iter().cloned().fold(0.0, f64::max)
                        }
                        Err(_) => f64::INFINITY,
                    };
                    devs.push(dev);
                }
                if devs[0] >= devs[1] && devs[1] >= devs[2] {
                    monotone += 1;
                }
                if devs[2] <= 0.25 {
                    final_ok += 1;
                }
            }
            println!(
                "eps_n {mode_name:>14}, face {face}: monotone {monotone}/{trials}, final<=0.25 {final_ok}/{trials}"
            );
        }
    }
}
