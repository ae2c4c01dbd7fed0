//! Finite-state Markov channels: per-state symbol channels, the channel pair
//! `(P, n)`, iid inputs and trajectory sampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{
    is_regular, steady_state, Regularity, StateDistribution, TransitionMatrix,
    DEFAULT_STEADY_MAX_ITER, DEFAULT_STEADY_TOL,
};
use crate::rng::StreamRng;

/// Per-state memoryless channel family. Each hidden state selects one parameter
/// of the family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolFamily {
    /// Binary symmetric channel; the parameter is the inversion probability.
    Bsc,
}

impl SymbolFamily {
    pub fn name(&self) -> &'static str {
        match self {
            SymbolFamily::Bsc => "bsc",
        }
    }

    pub fn input_alphabet_size(&self) -> usize {
        match self {
            SymbolFamily::Bsc => 2,
        }
    }

    pub fn output_alphabet_size(&self) -> usize {
        match self {
            SymbolFamily::Bsc => 2,
        }
    }

    pub fn check_param(&self, eta: f64) -> Result<()> {
        match self {
            SymbolFamily::Bsc if (0.0..=1.0).contains(&eta) => Ok(()),
            SymbolFamily::Bsc => Err(Error::ParamOutOfRange {
                name: "eta".into(),
                value: eta,
                range: "[0, 1]",
            }),
        }
    }

    /// `f(y | x)` for parameter `eta`. Arguments are assumed in range.
    #[inline]
    pub fn emission(&self, eta: f64, x: u8, y: u8) -> f64 {
        match self {
            SymbolFamily::Bsc => {
                if x == y {
                    1.0 - eta
                } else {
                    eta
                }
            }
        }
    }
}

impl std::fmt::Display for SymbolFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Checked `f(y | s, x)` for the state whose parameter is `eta`.
pub fn emission_prob(family: SymbolFamily, eta: f64, x: u8, y: u8) -> Result<f64> {
    family.check_param(eta)?;
    check_symbol("input", x, family.input_alphabet_size())?;
    check_symbol("output", y, family.output_alphabet_size())?;
    Ok(family.emission(eta, x, y))
}

fn check_symbol(kind: &str, sym: u8, size: usize) -> Result<()> {
    if (sym as usize) < size {
        Ok(())
    } else {
        Err(Error::SymbolOutOfAlphabet(format!(
            "{kind} symbol {sym} not in alphabet of size {size}"
        )))
    }
}

/// Per-state channel parameters, one per hidden state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NoiseVector(Vec<f64>);

impl NoiseVector {
    pub fn new(etas: Vec<f64>, family: SymbolFamily) -> Result<Self> {
        for &eta in &etas {
            family.check_param(eta)?;
        }
        Ok(Self(etas))
    }

    pub fn etas(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// iid Bernoulli input: each symbol is 1 with probability `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputDistribution {
    q: f64,
}

impl InputDistribution {
    pub fn new(q: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&q) {
            Ok(Self { q })
        } else {
            Err(Error::ParamOutOfRange {
                name: "q".into(),
                value: q,
                range: "[0, 1]",
            })
        }
    }

    pub fn uniform() -> Self {
        Self { q: 0.5 }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    #[inline]
    pub fn prob(&self, x: u8) -> f64 {
        if x == 1 {
            self.q
        } else {
            1.0 - self.q
        }
    }
}

/// A Markov channel `c = (P, n)` over a symbol family.
///
/// Channels built with [`MarkovChannel::new`] are regular and carry their steady
/// state. [`MarkovChannel::new_allow_irregular`] admits intermediate channels
/// (for example a mix with zero jump probabilities); those report
/// `is_regular() == false` and are refused by sampling and estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChannel {
    p: TransitionMatrix,
    noise: NoiseVector,
    family: SymbolFamily,
    regularity: Regularity,
    pi: Option<StateDistribution>,
}

impl MarkovChannel {
    pub fn new(p: TransitionMatrix, noise: NoiseVector, family: SymbolFamily) -> Result<Self> {
        let c = Self::new_allow_irregular(p, noise, family)?;
        if !c.is_regular() {
            return Err(Error::NotRegular(c.regularity.to_string()));
        }
        Ok(c)
    }

    pub fn new_allow_irregular(
        p: TransitionMatrix,
        noise: NoiseVector,
        family: SymbolFamily,
    ) -> Result<Self> {
        if noise.len() != p.num_states() {
            return Err(Error::DimensionMismatch(format!(
                "noise vector has {} entries for {} states",
                noise.len(),
                p.num_states()
            )));
        }
        for &eta in noise.etas() {
            family.check_param(eta)?;
        }
        let regularity = is_regular(&p);
        let pi = if regularity.is_regular() {
            Some(steady_state(&p, DEFAULT_STEADY_TOL, DEFAULT_STEADY_MAX_ITER)?)
        } else {
            None
        };
        Ok(Self {
            p,
            noise,
            family,
            regularity,
            pi,
        })
    }

    /// Convenience constructor for a BSC-state channel.
    pub fn bsc(rows: Vec<Vec<f64>>, etas: Vec<f64>) -> Result<Self> {
        let p = TransitionMatrix::new(rows)?;
        let noise = NoiseVector::new(etas, SymbolFamily::Bsc)?;
        Self::new(p, noise, SymbolFamily::Bsc)
    }

    /// Single-state (memoryless) BSC.
    pub fn memoryless_bsc(eta: f64) -> Result<Self> {
        Self::bsc(vec![vec![1.0]], vec![eta])
    }

    pub fn transition(&self) -> &TransitionMatrix {
        &self.p
    }

    pub fn noise(&self) -> &NoiseVector {
        &self.noise
    }

    pub fn etas(&self) -> &[f64] {
        self.noise.etas()
    }

    pub fn family(&self) -> SymbolFamily {
        self.family
    }

    pub fn num_states(&self) -> usize {
        self.p.num_states()
    }

    pub fn regularity(&self) -> Regularity {
        self.regularity
    }

    pub fn is_regular(&self) -> bool {
        self.regularity.is_regular()
    }

    /// Cached steady state; errors for channels admitted without regularity.
    pub fn steady_state(&self) -> Result<&StateDistribution> {
        self.pi
            .as_ref()
            .ok_or_else(|| Error::NotRegular(self.regularity.to_string()))
    }

    pub(crate) fn require_regular(&self) -> Result<&StateDistribution> {
        self.steady_state()
    }

    /// `f(y | s, x)` table indexed `[x][y][s]`.
    pub(crate) fn emission_table(&self) -> Vec<Vec<Vec<f64>>> {
        let nx = self.family.input_alphabet_size();
        let ny = self.family.output_alphabet_size();
        (0..nx as u8)
            .map(|x| {
                (0..ny as u8)
                    .map(|y| {
                        self.etas()
                            .iter()
                            .map(|&eta| self.family.emission(eta, x, y))
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    pub fn to_def(&self) -> ChannelDef {
        ChannelDef {
            family: self.family,
            p: self.p.to_rows(),
            n: self.etas().to_vec(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_def()).expect("channel definitions always serialize")
    }

    /// Parses a channel definition. Stochasticity and parameter ranges are
    /// enforced; regularity is recorded but not required.
    pub fn from_json(text: &str) -> Result<Self> {
        let def: ChannelDef = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        def.build()
    }
}

/// On-disk channel definition: `{"family":"bsc","P":[[...]],"n":[...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDef {
    pub family: SymbolFamily,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    pub n: Vec<f64>,
}

impl ChannelDef {
    pub fn build(self) -> Result<MarkovChannel> {
        let p = TransitionMatrix::new(self.p)?;
        let noise = NoiseVector::new(self.n, self.family)?;
        MarkovChannel::new_allow_irregular(p, noise, self.family)
    }
}

/// Sampled input, state and output sequences of equal length.
///
/// Only the states at emission times are kept; the chain's state after the last
/// symbol influences no output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub x: Vec<u8>,
    pub s: Vec<u32>,
    pub y: Vec<u8>,
    pub seed: u64,
    pub stream: u64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Samples `n` channel uses on stream 0 of `seed`.
pub fn sample_trajectory(
    c: &MarkovChannel,
    n: usize,
    input: InputDistribution,
    seed: u64,
) -> Result<Trajectory> {
    sample_trajectory_on_stream(c, n, input, seed, 0)
}

/// Samples `n` channel uses from an explicit `(seed, stream)` pair.
///
/// Per time step the draws are: input symbol, symbol-channel noise, next state.
pub fn sample_trajectory_on_stream(
    c: &MarkovChannel,
    n: usize,
    input: InputDistribution,
    seed: u64,
    stream: u64,
) -> Result<Trajectory> {
    if n == 0 {
        return Err(Error::InvalidArgument("trajectory length must be at least 1".into()));
    }
    let pi = c.require_regular()?;
    let cum_pi = cumulative(pi.probs());
    let cum_rows: Vec<Vec<f64>> = (0..c.num_states())
        .map(|i| cumulative(c.transition().row(i)))
        .collect();
    let etas = c.etas();
    let family = c.family();

    let mut rng = StreamRng::new(seed, stream);
    let mut x = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);

    let mut state = pick(&cum_pi, rng.uniform());
    for t in 0..n {
        let xt = u8::from(rng.uniform() < input.q());
        let yt = match family {
            SymbolFamily::Bsc => xt ^ u8::from(rng.uniform() < etas[state]),
        };
        x.push(xt);
        s.push(state as u32);
        y.push(yt);
        if t + 1 < n {
            state = pick(&cum_rows[state], rng.uniform());
        }
    }
    Ok(Trajectory {
        x,
        s,
        y,
        seed,
        stream,
    })
}

fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

/// Index of the first cumulative bucket exceeding `u`, skipping zero-width buckets.
#[inline]
fn pick(cum: &[f64], u: f64) -> usize {
    let last = cum.len() - 1;
    let mut prev = 0.0;
    for (i, &c) in cum.iter().enumerate() {
        if u < c && c > prev {
            return i;
        }
        prev = c;
    }
    // Rounding can leave the final sum a hair under 1; fall back to the last
    // state with positive mass.
    (0..=last)
        .rev()
        .find(|&i| cum[i] > if i == 0 { 0.0 } else { cum[i - 1] })
        .unwrap_or(last)
}

/// Natural-log joint likelihood `log f(y, s | x)` along one explicit state path.
///
/// Returns `-inf` for paths of probability zero.
pub fn joint_likelihood_given_states(
    c: &MarkovChannel,
    x: &[u8],
    s: &[u32],
    y: &[u8],
) -> Result<f64> {
    if x.len() != y.len() || x.len() != s.len() {
        return Err(Error::LengthMismatch(format!(
            "x has {}, s has {}, y has {} symbols",
            x.len(),
            s.len(),
            y.len()
        )));
    }
    let pi = c.require_regular()?;
    check_sequences(c, x, y)?;
    if let Some(&bad) = s.iter().find(|&&si| si as usize >= c.num_states()) {
        return Err(Error::SymbolOutOfAlphabet(format!(
            "state {bad} outside 0..{}",
            c.num_states()
        )));
    }
    if s.is_empty() {
        return Ok(0.0);
    }
    let family = c.family();
    let etas = c.etas();
    let mut log_p = pi.probs()[s[0] as usize].ln();
    for t in 0..s.len() {
        let st = s[t] as usize;
        log_p += family.emission(etas[st], x[t], y[t]).ln();
        if t + 1 < s.len() {
            log_p += c.transition().get(st, s[t + 1] as usize).ln();
        }
    }
    Ok(if log_p.is_nan() { f64::NEG_INFINITY } else { log_p })
}

pub(crate) fn check_sequences(c: &MarkovChannel, x: &[u8], y: &[u8]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(format!(
            "x has {} symbols, y has {}",
            x.len(),
            y.len()
        )));
    }
    check_outputs(c, y)?;
    let nx = c.family().input_alphabet_size();
    for &xt in x {
        check_symbol("input", xt, nx)?;
    }
    Ok(())
}

pub(crate) fn check_outputs(c: &MarkovChannel, y: &[u8]) -> Result<()> {
    let ny = c.family().output_alphabet_size();
    for &yt in y {
        check_symbol("output", yt, ny)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn example1() -> MarkovChannel {
        MarkovChannel::bsc(vec![vec![0.9, 0.1], vec![0.1, 0.9]], vec![0.1, 0.3]).unwrap()
    }

    #[test]
    fn emission_examples() {
        assert_abs_diff_eq!(emission_prob(SymbolFamily::Bsc, 0.1, 0, 0).unwrap(), 0.9);
        assert_eq!(emission_prob(SymbolFamily::Bsc, 0.5, 1, 0).unwrap(), 0.5);
        assert_eq!(emission_prob(SymbolFamily::Bsc, 0.0, 1, 1).unwrap(), 1.0);
        assert!(matches!(
            emission_prob(SymbolFamily::Bsc, 1.2, 0, 0),
            Err(Error::ParamOutOfRange { .. })
        ));
        assert!(emission_prob(SymbolFamily::Bsc, 0.2, 2, 0).is_err());
    }

    #[test]
    fn emissions_normalize() {
        for i in 0..=20 {
            let eta = i as f64 / 20.0;
            for x in 0..2u8 {
                let total: f64 = (0..2u8)
                    .map(|y| emission_prob(SymbolFamily::Bsc, eta, x, y).unwrap())
                    .sum();
                assert_abs_diff_eq!(total, 1.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn noiseless_and_inverting_channels() {
        let input = InputDistribution::uniform();
        let clean = MarkovChannel::memoryless_bsc(0.0).unwrap();
        let t = sample_trajectory(&clean, 5, input, 11).unwrap();
        assert_eq!(t.x, t.y);
        let flip = MarkovChannel::memoryless_bsc(1.0).unwrap();
        let t = sample_trajectory(&flip, 5, input, 11).unwrap();
        assert!(t.x.iter().zip(&t.y).all(|(a, b)| a ^ b == 1));
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let c = example1();
        let input = InputDistribution::uniform();
        let a = sample_trajectory(&c, 1000, input, 5).unwrap();
        let b = sample_trajectory(&c, 1000, input, 5).unwrap();
        let other = sample_trajectory(&c, 1000, input, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.y, other.y);
    }

    #[test]
    fn sampling_requires_regular_channel() {
        let p = TransitionMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let noise = NoiseVector::new(vec![0.1, 0.2], SymbolFamily::Bsc).unwrap();
        let c = MarkovChannel::new_allow_irregular(p, noise, SymbolFamily::Bsc).unwrap();
        assert!(!c.is_regular());
        assert!(matches!(
            sample_trajectory(&c, 10, InputDistribution::uniform(), 1),
            Err(Error::NotRegular(_))
        ));
    }

    #[test]
    fn constructor_checks_dimensions() {
        let err = MarkovChannel::bsc(vec![vec![0.9, 0.1], vec![0.1, 0.9]], vec![0.1]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn joint_likelihood_single_state_is_emission_sum() {
        let c = MarkovChannel::memoryless_bsc(0.2).unwrap();
        let x = [0, 1, 1];
        let y = [0, 0, 1];
        let lp = joint_likelihood_given_states(&c, &x, &[0, 0, 0], &y).unwrap();
        assert_abs_diff_eq!(lp, 0.8f64.ln() * 2.0 + 0.2f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn joint_likelihood_impossible_transition() {
        let c = MarkovChannel::bsc(
            vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5]],
            vec![0.1, 0.2, 0.3],
        )
        .unwrap();
        let lp = joint_likelihood_given_states(&c, &[0, 0], &[0, 2], &[0, 0]).unwrap();
        assert_eq!(lp, f64::NEG_INFINITY);
        assert!(matches!(
            joint_likelihood_given_states(&c, &[0, 0], &[0], &[0, 0]),
            Err(Error::LengthMismatch(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let c = example1();
        let back = MarkovChannel::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        let text = r#"{"family":"bsc","P":[[0.9,0.2],[0.1,0.9]],"n":[0.1,0.3]}"#;
        assert!(matches!(
            MarkovChannel::from_json(text),
            Err(Error::RowSumViolation { row: 0, .. })
        ));
        let text = r#"{"family":"bsc","P":[[1.0]],"n":[1.3]}"#;
        assert!(matches!(MarkovChannel::from_json(text), Err(Error::ParamOutOfRange { .. })));
    }

    #[test]
    fn pick_skips_empty_buckets() {
        let cum = cumulative(&[0.5, 0.0, 0.5]);
        assert_eq!(pick(&cum, 0.25), 0);
        assert_eq!(pick(&cum, 0.5), 2);
        assert_eq!(pick(&cum, 0.999_999_999_999), 2);
        let short = [0.3, 1.0 - 1e-15, 1.0 - 1e-15];
        assert_eq!(pick(&short, 1.0 - 1e-16), 1);
    }
}
