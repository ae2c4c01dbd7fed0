#![allow(dead_code)]

use markov_order::channel::MarkovChannel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn example1() -> MarkovChannel {
    MarkovChannel::bsc(vec![vec![0.9, 0.1], vec![0.1, 0.9]], vec![0.1, 0.3]).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random row-stochastic rows. With `sparsity > 0` entries are zeroed at that
/// rate, keeping at least one positive entry per row; the last entry of each row
/// absorbs rounding so rows sum to 1 within a few ulps.
pub fn random_rows(rng: &mut impl Rng, n: usize, sparsity: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let mut w: Vec<f64> = (0..n)
                .map(|_| if rng.random::<f64>() < sparsity { 0.0 } else { rng.random::<f64>() + 0.01 })
                .collect();
            if w.iter().all(|&v| v == 0.0) {
                let j = rng.random_range(0..n);
                w[j] = 1.0;
            }
            let total: f64 = w.iter().sum();
            let mut row: Vec<f64> = w.iter().map(|v| v / total).collect();
            let head: f64 = row[..n - 1].iter().sum();
            if row[n - 1] > 0.0 {
                row[n - 1] = (1.0 - head).max(0.0);
            }
            row
        })
        .collect()
}

/// Random dense (hence regular) BSC channel with etas drawn from `[lo, hi]`.
pub fn random_channel(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> MarkovChannel {
    loop {
        let rows = random_rows(rng, n, 0.0);
        let etas = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
        if let Ok(c) = MarkovChannel::bsc(rows, etas) {
            return c;
        }
    }
}
