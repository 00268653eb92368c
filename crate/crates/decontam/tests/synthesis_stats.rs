//! Statistical sanity of the instance sampler: drawn component frequencies
//! follow the mixing rows.

use decontam::simplex::MixingMatrix;
use decontam::synthesis::{gen_bases, sample_instance, BaseSpec, ProblemInstance};

/// 0.999 quantiles of the chi-square distribution for 1..=5 degrees of
/// freedom (standard table values).
const CHI2_CRIT_999: [f64; 5] = [10.828, 13.816, 16.266, 18.467, 20.515];

/// With one point-mass base per class, the sampled coordinate reveals the
/// component, so frequencies can be tested directly.
fn point_mass_instance(pi: MixingMatrix) -> ProblemInstance {
    let l = pi.l();
    let bases = gen_bases(&BaseSpec::DiscreteSeparable { atoms: l }, l, 0).unwrap();
    ProblemInstance::new(bases, pi, None).unwrap()
}

fn class_counts(points: &decontam::empirical::SampleSet, l: usize) -> Vec<usize> {
    let mut counts = vec![0usize; l];
    for p in points.iter_points() {
        counts[p[0] as usize] += 1;
    }
    counts
}

#[test]
fn component_frequencies_pass_chi_square() {
    let n = 100_000usize;
    for (name, raw) in [
        (
            "eq3",
            vec![
                vec![0.5, 0.5, 0.0],
                vec![0.5, 0.0, 0.5],
                vec![0.0, 0.5, 0.5],
            ],
        ),
        (
            "bg",
            vec![
                vec![0.8, 0.1, 0.1],
                vec![0.1, 0.8, 0.1],
                vec![0.1, 0.1, 0.8],
            ],
        ),
    ] {
        let pi = MixingMatrix::from_raw(raw).unwrap();
        let inst = point_mass_instance(pi.clone());
        let sampled = sample_instance(&inst, &[n; 3], 77).unwrap();
        for (i, sample) in sampled.samples.as_ref().unwrap().iter().enumerate() {
            let counts = class_counts(sample, 3);
            let support: Vec<usize> =
                (0..3).filter(|&j| pi.entry(i, j) > 0.0).collect();
            let mut chi2 = 0.0;
            for &j in &support {
                let expect = pi.entry(i, j) * n as f64;
                let diff = counts[j] as f64 - expect;
                chi2 += diff * diff / expect;
            }
            let df = support.len() - 1;
            assert!(
                chi2 < CHI2_CRIT_999[df - 1],
                "{name} row {i}: chi2 {chi2} at df {df}"
            );
            // Off-support classes are never drawn.
            for j in 0..3 {
                if !support.contains(&j) {
                    assert_eq!(counts[j], 0, "{name} row {i} drew class {j}");
                }
            }
        }
    }
}

#[test]
fn component_frequencies_within_binomial_bound() {
    // Each class frequency lands within three binomial standard deviations
    // of its mixing weight at n = 1e5.
    let n = 100_000usize;
    let pi = MixingMatrix::from_raw(vec![
        vec![0.2, 0.3, 0.5],
        vec![0.6, 0.1, 0.3],
        vec![0.25, 0.25, 0.5],
    ])
    .unwrap();
    let inst = point_mass_instance(pi.clone());
    let sampled = sample_instance(&inst, &[n; 3], 79).unwrap();
    for (i, sample) in sampled.samples.as_ref().unwrap().iter().enumerate() {
        let counts = class_counts(sample, 3);
        for j in 0..3 {
            let p = pi.entry(i, j);
            let bound = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
            let freq = counts[j] as f64 / n as f64;
            assert!(
                (freq - p).abs() <= bound,
                "row {i} class {j}: freq {freq} vs {p} (bound {bound})"
            );
        }
    }
}

#[test]
fn base_spec_separation_flags() {
    assert!(BaseSpec::DiscreteSeparable { atoms: 5 }.certifies_separation());
    assert!(BaseSpec::GaussianBump {
        means: vec![0.0, 4.0],
        sigma: 1.0,
        beta: 0.05
    }
    .certifies_separation());
    assert!(!BaseSpec::Gaussian1d {
        means: vec![0.0, 4.0],
        sigma: 1.0
    }
    .certifies_separation());
}
