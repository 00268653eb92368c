//! Seeded random draws shared by the population and finite-sample
//! algorithms. Both demixing variants must consume the generator in the
//! same order, so the draw lives in one place.

use rand::Rng;

/// Uniform draw from the weight simplex (flat Dirichlet), via normalized
/// exponentials.
pub(crate) fn uniform_simplex<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    assert!(k > 0);
    loop {
        let draws: Vec<f64> = (0..k)
            .map(|_| {
                let u: f64 = rng.random::<f64>();
                -(1.0 - u).ln()
            })
            .collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 && total.is_finite() {
            return draws.iter().map(|d| d / total).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn draws_lie_on_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in 1..6 {
            let w = uniform_simplex(&mut rng, k);
            assert_eq!(w.len(), k);
            assert!(w.iter().all(|&x| x >= 0.0));
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_draw() {
        let a = uniform_simplex(&mut ChaCha8Rng::seed_from_u64(3), 4);
        let b = uniform_simplex(&mut ChaCha8Rng::seed_from_u64(3), 4);
        assert_eq!(a, b);
    }
}
