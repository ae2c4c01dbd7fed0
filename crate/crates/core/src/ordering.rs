//! Channel mixing and broken-chain degradation.
//!
//! `mix(c1, c2, mu)` joins the two state machines: from a state of `c1` the chain
//! jumps with probability `mu12` into `c2`, landing on a state drawn from `c2`'s
//! steady state, and symmetrically with `mu21`. States of `c1` keep indices
//! `0..k1`, states of `c2` become `k1..k1+k2`.
//!
//! Every channel built here from a base `c` with [`concat_bsc`] and with mixes
//! whose first operand is `c` stays in the degraded family of `c`.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelDef, MarkovChannel, NoiseVector, SymbolFamily};
use crate::error::{Error, Result};
use crate::markov::TransitionMatrix;
use crate::rng::StreamRng;

/// Jump probabilities of the mixing operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixParams {
    pub mu12: f64,
    pub mu21: f64,
}

impl MixParams {
    pub fn new(mu12: f64, mu21: f64) -> Result<Self> {
        let params = Self { mu12, mu21 };
        params.validate()?;
        Ok(params)
    }

    pub fn symmetric(mu: f64) -> Result<Self> {
        Self::new(mu, mu)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("mu12", self.mu12), ("mu21", self.mu21)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::MuOutOfRange { name, value });
            }
        }
        Ok(())
    }

    pub fn is_interior(&self) -> bool {
        self.mu12 > 0.0 && self.mu12 < 1.0 && self.mu21 > 0.0 && self.mu21 < 1.0
    }

    /// Errors unless both probabilities lie in the open interval `(0, 1)`.
    pub fn require_interior(&self) -> Result<()> {
        self.validate()?;
        if self.is_interior() {
            Ok(())
        } else {
            Err(Error::MuOnBoundary {
                mu12: self.mu12,
                mu21: self.mu21,
            })
        }
    }

    /// Long-run fraction of time spent in the first machine, `mu21 / (mu12 + mu21)`.
    pub fn first_machine_share(&self) -> Option<f64> {
        let total = self.mu12 + self.mu21;
        (total > 0.0).then(|| self.mu21 / total)
    }
}

/// Mixes two channels of the same family.
///
/// The result may be non-regular when a jump probability is 0 or 1; it is then
/// returned with `is_regular() == false`.
pub fn mix(c1: &MarkovChannel, c2: &MarkovChannel, params: MixParams) -> Result<MarkovChannel> {
    params.validate()?;
    if c1.family() != c2.family() {
        return Err(Error::FamilyMismatch {
            left: c1.family().to_string(),
            right: c2.family().to_string(),
        });
    }
    let pi1 = c1.steady_state()?.probs();
    let pi2 = c2.steady_state()?.probs();
    let (k1, k2) = (c1.num_states(), c2.num_states());
    let MixParams { mu12, mu21 } = params;

    let mut rows = Vec::with_capacity(k1 + k2);
    for i in 0..k1 {
        let row = c1.transition().row(i);
        rows.push(
            row.iter()
                .map(|p| (1.0 - mu12) * p)
                .chain(pi2.iter().map(|p| mu12 * p))
                .collect::<Vec<_>>(),
        );
    }
    for i in 0..k2 {
        let row = c2.transition().row(i);
        rows.push(
            pi1.iter()
                .map(|p| mu21 * p)
                .chain(row.iter().map(|p| (1.0 - mu21) * p))
                .collect::<Vec<_>>(),
        );
    }
    let p = TransitionMatrix::new(rows)?;
    let etas = c1.etas().iter().chain(c2.etas()).copied().collect();
    let noise = NoiseVector::new(etas, c1.family())?;
    let mixed = MarkovChannel::new_allow_irregular(p, noise, c1.family())?;
    if !mixed.is_regular() {
        log::warn!(
            "mixed channel with mu12={mu12}, mu21={mu21} is not regular: {}",
            mixed.regularity()
        );
    }
    Ok(mixed)
}

/// Cascades every state's BSC with an independent BSC of inversion probability `p`.
pub fn concat_bsc(c: &MarkovChannel, p: f64) -> Result<MarkovChannel> {
    if c.family() != SymbolFamily::Bsc {
        return Err(Error::FamilyMismatch {
            left: c.family().to_string(),
            right: SymbolFamily::Bsc.to_string(),
        });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ParamOutOfRange {
            name: "bsc_p".into(),
            value: p,
            range: "[0, 1]",
        });
    }
    let etas = c.etas().iter().map(|&eta| cascade(eta, p)).collect();
    let noise = NoiseVector::new(etas, SymbolFamily::Bsc)?;
    MarkovChannel::new_allow_irregular(c.transition().clone(), noise, SymbolFamily::Bsc)
}

/// Inversion probability of two cascaded BSCs.
#[inline]
pub fn cascade(eta: f64, p: f64) -> f64 {
    eta * (1.0 - p) + p * (1.0 - eta)
}

/// One step of a degradation recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum RecipeStep {
    /// Cascade the current channel with a BSC.
    ConcatBsc { p: f64 },
    /// Replace the current channel `cur` by `mix(partner, cur)`. The partner is
    /// the recipe's base channel unless `with` names another one.
    Mix {
        mu12: f64,
        mu21: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        with: Option<ChannelDef>,
    },
}

/// An ordered list of degradation steps, applied left to right to a base channel.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DegradationRecipe {
    pub steps: Vec<RecipeStep>,
}

/// A channel produced by a recipe, with whether membership in the base channel's
/// degraded family follows from the construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DegradedChannel {
    pub channel: MarkovChannel,
    pub certified: bool,
}

impl DegradedChannel {
    /// The base channel itself: a trivial member of its own degraded family.
    pub fn identity(c: &MarkovChannel) -> Self {
        Self {
            channel: c.clone(),
            certified: true,
        }
    }
}

impl DegradationRecipe {
    pub fn new(steps: Vec<RecipeStep>) -> Self {
        Self { steps }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let recipe: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(recipe)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("recipes always serialize")
    }

    pub fn apply(&self, base: &MarkovChannel) -> Result<DegradedChannel> {
        let mut current = base.clone();
        let mut certified = true;
        for step in &self.steps {
            current = match step {
                RecipeStep::ConcatBsc { p } => concat_bsc(&current, *p)?,
                RecipeStep::Mix { mu12, mu21, with } => {
                    let params = MixParams::new(*mu12, *mu21)?;
                    match with {
                        None => mix(base, &current, params)?,
                        Some(def) => {
                            certified = false;
                            let partner = def.clone().build()?;
                            mix(&partner, &current, params)?
                        }
                    }
                }
            };
        }
        Ok(DegradedChannel {
            channel: current,
            certified,
        })
    }

    /// Copy with every BSC concatenation probability replaced by `p`.
    pub fn with_bsc_p(&self, p: f64) -> Self {
        let steps = self
            .steps
            .iter()
            .map(|s| match s {
                RecipeStep::ConcatBsc { .. } => RecipeStep::ConcatBsc { p },
                other => other.clone(),
            })
            .collect();
        Self { steps }
    }

    /// Copy with every mix's jump probabilities replaced.
    pub fn with_mix_params(&self, mu12: Option<f64>, mu21: Option<f64>) -> Self {
        let steps = self
            .steps
            .iter()
            .map(|s| match s {
                RecipeStep::Mix {
                    mu12: a,
                    mu21: b,
                    with,
                } => RecipeStep::Mix {
                    mu12: mu12.unwrap_or(*a),
                    mu21: mu21.unwrap_or(*b),
                    with: with.clone(),
                },
                other => other.clone(),
            })
            .collect();
        Self { steps }
    }

    pub fn has_concat(&self) -> bool {
        self.steps.iter().any(|s| matches!(s, RecipeStep::ConcatBsc { .. }))
    }

    pub fn has_mix(&self) -> bool {
        self.steps.iter().any(|s| matches!(s, RecipeStep::Mix { .. }))
    }
}

/// Which channel the recursive construction mixes with at each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChainMode {
    /// `c(k+1) = mix(c, degrade(c(k)))`: grows by `|S(c)|` states per step.
    #[default]
    MixWithOriginal,
    /// `c(k+1) = mix(c(k), degrade(c(k)))`: doubles the state count per step.
    MixSuccessive,
}

/// Recursively degraded channels `c(1), ..., c(steps)` starting from `c(0) = c`,
/// where `degrade` is a BSC concatenation with `bsc_p` when given and the
/// identity otherwise.
pub fn build_degraded_chain(
    c: &MarkovChannel,
    steps: usize,
    params: MixParams,
    bsc_p: Option<f64>,
) -> Result<Vec<MarkovChannel>> {
    build_degraded_chain_with(c, steps, params, bsc_p, ChainMode::MixWithOriginal)
}

pub fn build_degraded_chain_with(
    c: &MarkovChannel,
    steps: usize,
    params: MixParams,
    bsc_p: Option<f64>,
    mode: ChainMode,
) -> Result<Vec<MarkovChannel>> {
    if steps == 0 {
        return Err(Error::InvalidArgument("a degraded chain needs at least one step".into()));
    }
    params.require_interior()?;
    let mut out: Vec<MarkovChannel> = Vec::with_capacity(steps);
    let mut current = c.clone();
    for _ in 0..steps {
        let degraded = match bsc_p {
            Some(p) => concat_bsc(&current, p)?,
            None => current.clone(),
        };
        let partner = match mode {
            ChainMode::MixWithOriginal => c,
            ChainMode::MixSuccessive => &current,
        };
        let next = mix(partner, &degraded, params)?;
        out.push(next.clone());
        current = next;
    }
    Ok(out)
}

/// A state path of a mixed chain together with the jump indicators that generated it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedPath {
    /// Global state index in the mixed channel's numbering.
    pub states: Vec<u32>,
    /// `true` where the transition into time `t + 1` was a jump between machines.
    pub jumped: Vec<bool>,
    /// Number of states belonging to the first machine.
    pub first_machine_states: usize,
}

impl MixedPath {
    pub fn in_first_machine(&self, t: usize) -> bool {
        (self.states[t] as usize) < self.first_machine_states
    }
}

/// Simulates the mixed state machine with explicit jump indicators, following the
/// operational description rather than the combined transition matrix.
pub fn simulate_mixed_states(
    c1: &MarkovChannel,
    c2: &MarkovChannel,
    params: MixParams,
    n: usize,
    seed: u64,
) -> Result<MixedPath> {
    params.validate()?;
    let pi1 = c1.steady_state()?.probs();
    let pi2 = c2.steady_state()?.probs();
    let k1 = c1.num_states();
    let a = params.first_machine_share().unwrap_or(1.0);

    let mut rng = StreamRng::new(seed, 0);
    let draw = |probs: &[f64], u: f64| -> usize {
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        probs.len() - 1
    };

    let mut states = Vec::with_capacity(n);
    let mut jumped = Vec::with_capacity(n.saturating_sub(1));
    let mut in_first = rng.uniform() < a;
    let mut local = if in_first {
        draw(pi1, rng.uniform())
    } else {
        draw(pi2, rng.uniform())
    };
    for t in 0..n {
        states.push(if in_first { local } else { k1 + local } as u32);
        if t + 1 == n {
            break;
        }
        let jump_prob = if in_first { params.mu12 } else { params.mu21 };
        let jump = rng.uniform() < jump_prob;
        let u = rng.uniform();
        if jump {
            in_first = !in_first;
            local = if in_first { draw(pi1, u) } else { draw(pi2, u) };
        } else {
            let row = if in_first {
                c1.transition().row(local)
            } else {
                c2.transition().row(local)
            };
            local = draw(row, u);
        }
        jumped.push(jump);
    }
    Ok(MixedPath {
        states,
        jumped,
        first_machine_states: k1,
    })
}
