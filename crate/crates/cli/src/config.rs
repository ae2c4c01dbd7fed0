//! Experiment configuration: a JSON file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use markov_order::channel::{InputDistribution, MarkovChannel};
use markov_order::inference::McConfig;
use markov_order::ordering::{DegradationRecipe, MixParams};
use markov_order::Workers;

pub const DEFAULT_Q: f64 = 0.5;
pub const DEFAULT_N: usize = 1_000_000;
pub const DEFAULT_TRIALS: usize = 20;
pub const DEFAULT_K_MAX: usize = 8;
pub const DEFAULT_OUT: &str = "out";
pub const DEFAULT_MU_VALUES: [f64; 3] = [0.1, 0.3, 0.5];

/// The grid of jump probabilities for ordering runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MuGridSpec {
    /// Explicit `(mu12, mu21)` pairs.
    Pairs(Vec<[f64; 2]>),
    /// Values used on both axes; the grid is their Cartesian square.
    Values(Vec<f64>),
    /// `[start, stop, count]`, inclusive on both ends, squared like `values`.
    Linspace([f64; 3]),
}

impl MuGridSpec {
    pub fn expand(&self) -> Result<Vec<MixParams>> {
        let square = |values: &[f64]| -> Result<Vec<MixParams>> {
            let mut grid = Vec::with_capacity(values.len() * values.len());
            for &a in values {
                for &b in values {
                    grid.push(MixParams::new(a, b)?);
                }
            }
            Ok(grid)
        };
        match self {
            MuGridSpec::Pairs(pairs) => pairs
                .iter()
                .map(|[a, b]| Ok(MixParams::new(*a, *b)?))
                .collect(),
            MuGridSpec::Values(values) => square(values),
            MuGridSpec::Linspace([start, stop, count]) => {
                let count = *count;
                if count < 1.0 || count.fract() != 0.0 {
                    bail!("InvalidArgument: linspace count must be a positive integer, got {count}");
                }
                let count = count as usize;
                let values: Vec<f64> = if count == 1 {
                    vec![*start]
                } else {
                    (0..count)
                        .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
                        .collect()
                };
                square(&values)
            }
        }
    }

    /// Parses `0.1,0.3,0.5` (squared), `0.1:0.5:3` (linspace) or
    /// `0.1/0.2;0.3/0.4` (pairs).
    pub fn parse(text: &str) -> Result<Self> {
        let nums = |s: &str, sep: char| -> Result<Vec<f64>> {
            s.split(sep)
                .filter(|p| !p.trim().is_empty())
                .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad number {p:?}")))
                .collect()
        };
        if text.contains('/') {
            let pairs = text
                .split(';')
                .filter(|p| !p.trim().is_empty())
                .map(|p| {
                    let v = nums(p, '/')?;
                    match v.as_slice() {
                        [a, b] => Ok([*a, *b]),
                        _ => bail!("pair {p:?} must be mu12/mu21"),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(MuGridSpec::Pairs(pairs))
        } else if text.contains(':') {
            match nums(text, ':')?.as_slice() {
                [a, b, n] => Ok(MuGridSpec::Linspace([*a, *b, *n])),
                _ => bail!("linspace must be start:stop:count"),
            }
        } else {
            Ok(MuGridSpec::Values(nums(text, ',')?))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Inversion probability of every BSC concatenation in the recipe.
    BscP,
    /// Both jump probabilities of every mix in the recipe.
    Mu,
    Mu12,
    Mu21,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::BscP => "bsc_p",
            SweepParam::Mu => "mu",
            SweepParam::Mu12 => "mu12",
            SweepParam::Mu21 => "mu21",
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "bsc_p" => SweepParam::BscP,
            "mu" => SweepParam::Mu,
            "mu12" => SweepParam::Mu12,
            "mu21" => SweepParam::Mu21,
            other => bail!("unknown sweep parameter {other:?} (bsc_p, mu, mu12, mu21)"),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// Contents of a `--config` file. Every field is optional; relative paths are
/// resolved against the file's directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub channel: Option<PathBuf>,
    pub recipe: Option<PathBuf>,
    pub q: Option<f64>,
    pub n: Option<usize>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub mu_grid: Option<MuGridSpec>,
    pub k_max: Option<usize>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub sweep: Option<SweepSpec>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .with_context(|| format!("Parse: config {}", path.display()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for p in [&mut cfg.channel, &mut cfg.recipe, &mut cfg.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Fills unset fields from `other`.
    pub fn or(self, other: ExperimentConfig) -> Self {
        Self {
            channel: self.channel.or(other.channel),
            recipe: self.recipe.or(other.recipe),
            q: self.q.or(other.q),
            n: self.n.or(other.n),
            trials: self.trials.or(other.trials),
            seed: self.seed.or(other.seed),
            mu_grid: self.mu_grid.or(other.mu_grid),
            k_max: self.k_max.or(other.k_max),
            out: self.out.or(other.out),
            workers: self.workers.or(other.workers),
            sweep: self.sweep.or(other.sweep),
        }
    }
}

pub fn load_channel(path: &Path) -> Result<MarkovChannel> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading channel {}", path.display()))?;
    MarkovChannel::from_json(&text).with_context(|| format!("channel {}", path.display()))
}

pub fn load_recipe(path: &Path) -> Result<DegradationRecipe> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading recipe {}", path.display()))?;
    DegradationRecipe::from_json(&text).with_context(|| format!("recipe {}", path.display()))
}

/// A configuration with every file loaded and every default applied.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub channel_id: String,
    pub channel: MarkovChannel,
    pub recipe: Option<DegradationRecipe>,
    pub input: InputDistribution,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub mu_grid: Option<MuGridSpec>,
    pub k_max: usize,
    pub out: PathBuf,
    pub workers: Workers,
    pub sweep: Option<SweepSpec>,
}

impl Resolved {
    pub fn from_config(cfg: ExperimentConfig) -> Result<Self> {
        let channel_path = cfg
            .channel
            .context("InvalidArgument: no channel file given (--channel or \"channel\" in the config)")?;
        let channel = load_channel(&channel_path)?;
        let channel_id = channel_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "channel".into());
        let recipe = cfg.recipe.as_deref().map(load_recipe).transpose()?;
        let input = InputDistribution::new(cfg.q.unwrap_or(DEFAULT_Q))?;
        if cfg.workers == Some(0) {
            bail!("InvalidArgument: worker count must be at least 1");
        }
        Ok(Self {
            channel_id,
            channel,
            recipe,
            input,
            n: cfg.n.unwrap_or(DEFAULT_N),
            trials: cfg.trials.unwrap_or(DEFAULT_TRIALS),
            seed: cfg.seed.unwrap_or(0),
            mu_grid: cfg.mu_grid,
            k_max: cfg.k_max.unwrap_or(DEFAULT_K_MAX),
            out: cfg.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            workers: Workers(cfg.workers),
            sweep: cfg.sweep,
        })
    }

    pub fn mc(&self) -> McConfig {
        McConfig::new(self.n, self.trials, self.seed).with_workers(self.workers)
    }

    pub fn grid(&self) -> Result<Vec<MixParams>> {
        self.mu_grid
            .clone()
            .unwrap_or(MuGridSpec::Values(DEFAULT_MU_VALUES.to_vec()))
            .expand()
    }

    /// Short digest of everything that determines the numeric results: channel
    /// and recipe contents, input law, block length, trials, seed, grid, k_max and
    /// sweep axis. Paths, output directory and worker count are excluded.
    pub fn config_hash(&self, command: &str) -> String {
        let doc = serde_json::json!({
            "command": command,
            "channel": self.channel.to_def(),
            "recipe": self.recipe,
            "q": self.input.q(),
            "n": self.n,
            "trials": self.trials,
            "seed": self.seed,
            "mu_grid": self.mu_grid,
            "k_max": self.k_max,
            "sweep": self.sweep,
        });
        let digest = Sha256::digest(doc.to_string().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}
