//! Synthetic inputs shared by the benchmarks.

use csaqr::simulate::{gen_replication, SimDesign};
use csaqr::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` rows of an intercept plus `p - 1` uniform regressors with a linear
/// signal and uniform noise.
pub fn linear_dataset(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut r = vec![1.0];
            r.extend((1..p).map(|_| rng.random::<f64>() * 2.0 - 1.0));
            r
        })
        .collect();
    let y = rows
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .map(|(j, x)| x / (j + 1) as f64)
                .sum::<f64>()
                + rng.random::<f64>()
        })
        .collect();
    Dataset::from_rows_unnamed(y, rows, Some(0)).expect("well-formed rows")
}

/// Training sample of the misspecified design used in the simulation study.
pub fn study_sample(n: usize, seed: u64) -> Dataset {
    gen_replication(&SimDesign::misspecified(n, 0.5, 0.5, 0.9, 1), seed)
        .expect("valid design")
        .0
}
