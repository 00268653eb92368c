//! Instance generators shared by the property and acceptance test suites.
//! Not part of the public API surface.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::linalg;
use crate::sampling::uniform_simplex;
use crate::simplex::{MixingMatrix, MixtureProportion};

/// Random point of the simplex.
pub fn random_proportion(rng: &mut ChaCha8Rng, l: usize) -> MixtureProportion {
    MixtureProportion::new(uniform_simplex(rng, l)).expect("simplex draw")
}

/// Random row-stochastic matrix.
pub fn random_stochastic(rng: &mut ChaCha8Rng, m: usize, l: usize) -> MixingMatrix {
    MixingMatrix::new((0..m).map(|_| random_proportion(rng, l)).collect())
        .expect("rows are valid")
}

/// Random proportion on the 1/denom rational grid: an integer composition
/// of `denom` over `l` cells, with every cell positive when `positive`.
pub fn rational_proportion(
    rng: &mut ChaCha8Rng,
    l: usize,
    denom: u32,
    positive: bool,
) -> MixtureProportion {
    loop {
        let mut counts = vec![0u32; l];
        if positive {
            for c in counts.iter_mut() {
                *c = 1;
            }
        }
        let assigned: u32 = counts.iter().sum();
        for _ in 0..denom.saturating_sub(assigned) {
            counts[rng.random_range(0..l)] += 1;
        }
        if !positive || counts.iter().all(|&c| c > 0) {
            return MixtureProportion::new(
                counts.iter().map(|&c| c as f64 / denom as f64).collect(),
            )
            .expect("rational row");
        }
    }
}

/// Mixing matrix built from condition 2 of the residue-identity lemma:
/// each row decomposes as `kappa_i e_i + (1 - kappa_i) (convex combination
/// of the other rows)`. Constructed by solving the fixed point
/// `Pi = K + (I - K) W Pi` with `W` row-stochastic and zero-diagonal; the
/// Neumann series makes the solution entrywise nonnegative, and condition 2
/// holds by construction.
pub fn condition2_matrix(rng: &mut ChaCha8Rng, l: usize) -> MixingMatrix {
    assert!(l >= 2);
    loop {
        let kappas: Vec<f64> = (0..l).map(|_| rng.random_range(0.2..1.0)).collect();
        let mut w = vec![vec![0.0; l]; l];
        for (i, row) in w.iter_mut().enumerate() {
            let weights = uniform_simplex(rng, l - 1);
            let mut t = 0;
            for (j, cell) in row.iter_mut().enumerate() {
                if j != i {
                    *cell = weights[t];
                    t += 1;
                }
            }
        }
        // System matrix A = I - (I - K) W; Pi = A^{-1} K.
        let mut a = vec![vec![0.0; l]; l];
        for i in 0..l {
            for j in 0..l {
                let id = if i == j { 1.0 } else { 0.0 };
                a[i][j] = id - (1.0 - kappas[i]) * w[i][j];
            }
        }
        let Some(inv) = linalg::invert(&a, 1e-12) else {
            continue;
        };
        let rows: Vec<Vec<f64>> = (0..l)
            .map(|i| (0..l).map(|j| inv[i][j] * kappas[j]).collect())
            .collect();
        if let Ok(pi) = MixingMatrix::from_raw(
            rows.iter()
                .map(|r| r.iter().map(|&v| v.max(0.0)).collect())
                .collect(),
        ) {
            return pi;
        }
    }
}
