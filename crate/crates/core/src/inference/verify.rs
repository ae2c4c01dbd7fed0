//! Numerical checks of the mutual-information orderings.
//!
//! * Block bound: the rate of a Markov channel is at least `I(X_1^k; Y_1^k) / k`
//!   for every `k`.
//! * Mixing bound: for `c*` in the degraded family of `c`, mixing `c` with `c*`
//!   never increases the rate above that of `c`, for jump probabilities strictly
//!   inside `(0, 1)`.
//!
//! Exact quantities come from enumeration, rates from [`estimate_mi_rate`].

use serde::Serialize;

use crate::channel::{InputDistribution, MarkovChannel};
use crate::error::{Error, Result};
use crate::inference::estimate::{estimate_mi_rate, McConfig, MIEstimate};
use crate::inference::exact::{exact_block_mi_with, MAX_EXACT_BLOCK};
use crate::ordering::{mix, DegradedChannel, MixParams};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Confirmed,
    Inconclusive,
    Violated,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Confirmed => "CONFIRMED",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::Violated => "VIOLATED",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Margins are expressed in combined standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerdictThresholds {
    /// A margin above `confirm_sigmas * se` confirms the ordering.
    pub confirm_sigmas: f64,
    /// A margin below `-violate_sigmas * se` flags a violation.
    pub violate_sigmas: f64,
}

impl Default for VerdictThresholds {
    fn default() -> Self {
        Self {
            confirm_sigmas: 2.0,
            violate_sigmas: 3.0,
        }
    }
}

impl VerdictThresholds {
    pub fn classify(&self, margin: f64, se: f64) -> Verdict {
        if margin < -self.violate_sigmas * se {
            Verdict::Violated
        } else if margin > self.confirm_sigmas * se {
            Verdict::Confirmed
        } else {
            Verdict::Inconclusive
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Margin {
    /// `I[c] - I[mix]` in bits.
    pub difference: f64,
    pub combined_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingReport {
    pub mu_grid: Vec<MixParams>,
    pub estimates_base: MIEstimate,
    pub estimates_mixed: Vec<MIEstimate>,
    pub margins: Vec<Margin>,
    pub verdicts: Vec<Verdict>,
    pub thresholds: VerdictThresholds,
    pub warnings: Vec<String>,
}

impl OrderingReport {
    pub fn any_violated(&self) -> bool {
        self.verdicts.contains(&Verdict::Violated)
    }

    pub fn count(&self, verdict: Verdict) -> usize {
        self.verdicts.iter().filter(|&&v| v == verdict).count()
    }
}

/// Compares `I[c]` against `I[mix(c, c*, mu)]` at every grid point.
///
/// The base rate uses seed label 0 and grid point `i` uses label `i + 1`, all
/// derived from `cfg.seed`, with the same `n` and trial count throughout.
pub fn check_theorem1(
    c: &MarkovChannel,
    c_star: &DegradedChannel,
    mu_grid: &[MixParams],
    input: InputDistribution,
    cfg: &McConfig,
    thresholds: VerdictThresholds,
) -> Result<OrderingReport> {
    if mu_grid.is_empty() {
        return Err(Error::InvalidArgument("empty mu grid".into()));
    }
    for params in mu_grid {
        params.require_interior()?;
    }
    let mut warnings = Vec::new();
    if !c_star.certified {
        let msg = "UncertifiedDegradation: c* was not built from c by concatenation and \
                   base-channel mixes; membership in the degraded family is assumed";
        log::warn!("{msg}");
        warnings.push(msg.to_string());
    }

    let base = estimate_mi_rate(c, input, &cfg.with_seed(derive_seed(cfg.seed, 0)))?;
    let mut estimates_mixed = Vec::with_capacity(mu_grid.len());
    let mut margins = Vec::with_capacity(mu_grid.len());
    let mut verdicts = Vec::with_capacity(mu_grid.len());
    for (i, &params) in mu_grid.iter().enumerate() {
        let mixed = mix(c, &c_star.channel, params)?;
        let est = estimate_mi_rate(&mixed, input, &cfg.with_seed(derive_seed(cfg.seed, i as u64 + 1)))?;
        let margin = Margin {
            difference: base.rate_bits - est.rate_bits,
            combined_se: base.combined_se(&est),
        };
        verdicts.push(thresholds.classify(margin.difference, margin.combined_se));
        margins.push(margin);
        estimates_mixed.push(est);
    }
    Ok(OrderingReport {
        mu_grid: mu_grid.to_vec(),
        estimates_base: base,
        estimates_mixed,
        margins,
        verdicts,
        thresholds,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockBoundRow {
    pub k: usize,
    /// `I(X_1^k; Y_1^k) / k` in bits.
    pub exact_rate: f64,
    /// `rate - exact_rate`.
    pub margin: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Report {
    pub estimate: MIEstimate,
    pub rows: Vec<BlockBoundRow>,
    pub violate_sigmas: f64,
}

impl Lemma1Report {
    pub fn any_violated(&self) -> bool {
        self.rows.iter().any(|r| r.violated)
    }
}

/// Compares the exact normalized block information for `k = 1..=k_max` with the
/// estimated rate; a row is a violation when it exceeds the rate by more than
/// `violate_sigmas` standard errors.
pub fn check_lemma1(
    c: &MarkovChannel,
    k_max: usize,
    input: InputDistribution,
    cfg: &McConfig,
    violate_sigmas: f64,
) -> Result<Lemma1Report> {
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    if k_max > MAX_EXACT_BLOCK {
        return Err(Error::BlockTooLarge {
            k: k_max,
            limit: MAX_EXACT_BLOCK,
        });
    }
    let estimate = estimate_mi_rate(c, input, cfg)?;
    let rows = (1..=k_max)
        .map(|k| {
            let exact_rate = exact_block_mi_with(c, k, input, cfg.workers)? / k as f64;
            let margin = estimate.rate_bits - exact_rate;
            Ok(BlockBoundRow {
                k,
                exact_rate,
                margin,
                violated: margin < -violate_sigmas * estimate.std_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Lemma1Report {
        estimate,
        rows,
        violate_sigmas,
    })
}

/// Rates along a sequence of channels, with margins between neighbours.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub estimates: Vec<MIEstimate>,
    /// `margins[i]` compares `estimates[i]` with `estimates[i + 1]`.
    pub margins: Vec<Margin>,
}

impl ChainReport {
    /// Every step down the chain loses rate, up to `sigmas` combined standard errors.
    pub fn non_increasing_within(&self, sigmas: f64) -> bool {
        self.margins
            .iter()
            .all(|m| m.difference >= -sigmas * m.combined_se)
    }
}

/// Estimates every channel of a degradation chain; channel `i` uses seed label `i`.
pub fn check_rate_chain(
    channels: &[MarkovChannel],
    input: InputDistribution,
    cfg: &McConfig,
) -> Result<ChainReport> {
    let estimates = channels
        .iter()
        .enumerate()
        .map(|(i, ch)| estimate_mi_rate(ch, input, &cfg.with_seed(derive_seed(cfg.seed, i as u64))))
        .collect::<Result<Vec<_>>>()?;
    let margins = estimates
        .windows(2)
        .map(|w| Margin {
            difference: w[0].rate_bits - w[1].rate_bits,
            combined_se: w[0].combined_se(&w[1]),
        })
        .collect();
    Ok(ChainReport { estimates, margins })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordering::concat_bsc;

    #[test]
    fn thresholds_are_asymmetric() {
        let t = VerdictThresholds::default();
        assert_eq!(t.classify(0.03, 0.01), Verdict::Confirmed);
        assert_eq!(t.classify(0.02, 0.01), Verdict::Inconclusive);
        assert_eq!(t.classify(-0.029, 0.01), Verdict::Inconclusive);
        assert_eq!(t.classify(-0.031, 0.01), Verdict::Violated);
    }

    #[test]
    fn boundary_mu_is_refused() {
        let c = MarkovChannel::memoryless_bsc(0.1).unwrap();
        let star = DegradedChannel::identity(&c);
        let grid = [MixParams::new(1.0, 0.5).unwrap()];
        let err = check_theorem1(
            &c,
            &star,
            &grid,
            InputDistribution::uniform(),
            &McConfig::new(1000, 2, 0),
            VerdictThresholds::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::MuOnBoundary { .. }));
    }

    #[test]
    fn uncertified_partner_warns() {
        let c = MarkovChannel::bsc(vec![vec![0.9, 0.1], vec![0.1, 0.9]], vec![0.1, 0.3]).unwrap();
        let star = DegradedChannel {
            channel: concat_bsc(&c, 0.1).unwrap(),
            certified: false,
        };
        let report = check_theorem1(
            &c,
            &star,
            &[MixParams::symmetric(0.5).unwrap()],
            InputDistribution::uniform(),
            &McConfig::new(2000, 4, 1),
            VerdictThresholds::default(),
        )
        .unwrap();
        assert_eq!(report.warnings.len(), 1);
        assert!(report.warnings[0].starts_with("UncertifiedDegradation"));
    }

    #[test]
    fn lemma1_guard() {
        let c = MarkovChannel::memoryless_bsc(0.1).unwrap();
        let err = check_lemma1(&c, 13, InputDistribution::uniform(), &McConfig::new(1000, 2, 0), 3.0)
            .unwrap_err();
        assert_eq!(err, Error::BlockTooLarge { k: 13, limit: 12 });
    }
}
