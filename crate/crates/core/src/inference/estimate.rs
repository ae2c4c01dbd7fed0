//! Monte Carlo estimation of the mutual-information rate under iid inputs.
//!
//! Each trial samples one length-`n` trajectory on its own RNG stream and
//! averages the information density `log2 f(y|x) - log2 f(y)` over the block.
//! The rate is the mean over trials and the standard error comes from the
//! across-trial sample variance.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::channel::{sample_trajectory_on_stream, InputDistribution, MarkovChannel};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Workers};
use crate::inference::forward::{output_marginals, scaled_forward};

/// Block lengths below this trigger a warning; the finite-block bias is no
/// longer negligible.
pub const MIN_RECOMMENDED_N: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    /// Channel uses per trial.
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub workers: Workers,
}

impl McConfig {
    pub fn new(n: usize, trials: usize, seed: u64) -> Self {
        Self {
            n,
            trials,
            seed,
            workers: Workers::default(),
        }
    }

    pub fn with_workers(mut self, workers: Workers) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MIEstimate {
    /// Mean information rate in bits per channel use.
    pub rate_bits: f64,
    /// Standard error of the mean across trials.
    pub std_error: f64,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    #[serde(skip)]
    pub wall_clock: Duration,
    /// Per-trial rates, in trial order.
    pub trial_rates: Vec<f64>,
}

impl MIEstimate {
    /// `sqrt(se_a^2 + se_b^2)` for two independent estimates.
    pub fn combined_se(&self, other: &MIEstimate) -> f64 {
        self.std_error.hypot(other.std_error)
    }
}

pub fn estimate_mi_rate(
    c: &MarkovChannel,
    input: InputDistribution,
    cfg: &McConfig,
) -> Result<MIEstimate> {
    if cfg.trials < 2 {
        return Err(Error::InvalidArgument(format!(
            "at least 2 trials are needed for a standard error, got {}",
            cfg.trials
        )));
    }
    if cfg.n == 0 {
        return Err(Error::InvalidArgument("block length must be at least 1".into()));
    }
    if cfg.n < MIN_RECOMMENDED_N {
        log::warn!(
            "block length {} is below {MIN_RECOMMENDED_N}; the estimate carries finite-block bias",
            cfg.n
        );
    }
    let pi = c.require_regular()?.probs().to_vec();
    let table = c.emission_table();
    let marginal = output_marginals(c, input);

    let start = Instant::now();
    let rates = map_indexed(cfg.workers, cfg.trials, |trial| {
        let traj = sample_trajectory_on_stream(c, cfg.n, input, cfg.seed, trial as u64)?;
        let log_f_y_given_x = scaled_forward(
            c.transition(),
            &pi,
            traj.x
                .iter()
                .zip(&traj.y)
                .map(|(&x, &y)| table[x as usize][y as usize].as_slice()),
        );
        let log_f_y = scaled_forward(
            c.transition(),
            &pi,
            traj.y.iter().map(|&y| marginal[y as usize].as_slice()),
        );
        Ok((log_f_y_given_x - log_f_y) / (cfg.n as f64 * std::f64::consts::LN_2))
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let wall_clock = start.elapsed();

    let (mean, se) = mean_and_se(&rates);
    Ok(MIEstimate {
        rate_bits: mean,
        std_error: se,
        n: cfg.n,
        trials: cfg.trials,
        seed: cfg.seed,
        wall_clock,
        trial_rates: rates,
    })
}

/// Sample mean and standard error of the mean, summed in index order.
pub(crate) fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
    (mean, (var / count).sqrt())
}

/// Estimates at block lengths `n` and `n / 10` side by side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceCheck {
    pub full: MIEstimate,
    pub tenth: MIEstimate,
    /// `full - tenth`.
    pub difference: f64,
    pub combined_se: f64,
}

impl ConvergenceCheck {
    /// Whether the two block lengths agree within `sigmas` combined standard errors.
    pub fn settled(&self, sigmas: f64) -> bool {
        self.difference.abs() <= sigmas * self.combined_se
    }
}

pub fn convergence_diagnostic(
    c: &MarkovChannel,
    input: InputDistribution,
    cfg: &McConfig,
) -> Result<ConvergenceCheck> {
    let full = estimate_mi_rate(c, input, cfg)?;
    let short = McConfig {
        n: (cfg.n / 10).max(1),
        seed: crate::rng::derive_seed(cfg.seed, u64::MAX),
        ..*cfg
    };
    let tenth = estimate_mi_rate(c, input, &short)?;
    Ok(ConvergenceCheck {
        difference: full.rate_bits - tenth.rate_bits,
        combined_se: full.combined_se(&tenth),
        full,
        tenth,
    })
}
