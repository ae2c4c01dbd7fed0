use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use markov_order::channel::MarkovChannel;
use markov_order::inference::{
    check_lemma1, check_theorem1, estimate_mi_rate, genie_state_upper_bound,
    memoryless_lower_bound, MIEstimate, Verdict, VerdictThresholds,
};
use markov_order::markov::{d_step_deviation, Regularity, StateDistribution};
use markov_order::ordering::{mix, DegradationRecipe, DegradedChannel, MixParams, RecipeStep};
use markov_order::rng::derive_seed;

use crate::config::{load_channel, Resolved, SweepParam};
use crate::output::{num, write_file, Plot, Point, Provenance, Series, Table};

/// How a successful run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Clean,
    /// At least one VIOLATED verdict.
    Violated,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Clean => 0,
            Outcome::Violated => 1,
        }
    }
}

/// Destinations for human-facing output, so commands can run inside tests.
pub struct Io<'a> {
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
}

/// Files written by a command.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Artifacts {
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

pub fn cmd_mix(
    channel1: &Path,
    channel2: &Path,
    mu12: f64,
    mu21: f64,
    io: &mut Io<'_>,
) -> Result<Outcome> {
    let c1 = load_channel(channel1)?;
    let c2 = load_channel(channel2)?;
    let mixed = mix(&c1, &c2, MixParams::new(mu12, mu21)?)?;
    if let Regularity::NotRegular(why) = mixed.regularity() {
        writeln!(
            io.stderr,
            "warning: NotRegular: the mixed chain is not regular ({}); it has no unique steady state",
            Regularity::NotRegular(why)
        )?;
    }
    writeln!(io.stdout, "{}", mixed.to_json())?;
    Ok(Outcome::Clean)
}

#[derive(Serialize)]
struct SteadyStateReport<'a> {
    num_states: usize,
    regularity: Regularity,
    #[serde(skip_serializing_if = "Option::is_none")]
    pi: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    deviation: Option<markov_order::markov::DeviationReport>,
}

pub fn cmd_steady_state(channel: &Path, deviation: Option<u32>, io: &mut Io<'_>) -> Result<Outcome> {
    let c = load_channel(channel)?;
    let regularity = c.regularity();
    let pi: Option<&StateDistribution> = c.steady_state().ok();
    let deviation = match (deviation, pi) {
        (Some(d), Some(_)) => Some(d_step_deviation(c.transition(), d)?),
        _ => None,
    };
    let report = SteadyStateReport {
        num_states: c.num_states(),
        regularity,
        pi: pi.map(|p| p.probs()),
        residual: pi.map(|p| p.residual(c.transition())),
        deviation,
    };
    writeln!(io.stdout, "{}", serde_json::to_string_pretty(&report)?)?;
    if pi.is_none() {
        bail!("NotRegular: {regularity}");
    }
    Ok(Outcome::Clean)
}

fn bounds(c: &MarkovChannel, r: &Resolved) -> Result<(f64, f64)> {
    Ok((
        memoryless_lower_bound(c, r.input)?,
        genie_state_upper_bound(c, r.input)?,
    ))
}

fn provenance(r: &Resolved, command: &str) -> Provenance {
    Provenance {
        seed: r.seed,
        config_hash: r.config_hash(command),
    }
}

fn out_path(r: &Resolved, name: &str) -> PathBuf {
    r.out.join(name)
}

pub const MI_COLUMNS: [&str; 9] = [
    "channel_id",
    "q",
    "n",
    "trials",
    "seed",
    "rate_bits",
    "std_error",
    "lower_bound",
    "upper_bound",
];

/// Estimates the information rate of the configured channel. The CSV row goes to
/// standard output, and to `mi.csv` when an output directory was configured.
pub fn cmd_mi(r: &Resolved, write_file: bool, io: &mut Io<'_>) -> Result<(Outcome, Artifacts)> {
    let started = Instant::now();
    let est = estimate_mi_rate(&r.channel, r.input, &r.mc())?;
    let (lo, hi) = bounds(&r.channel, r)?;
    let mut table = Table::new(&MI_COLUMNS, provenance(r, "mi"));
    table.push(vec![
        r.channel_id.clone(),
        num(r.input.q()),
        r.n.to_string(),
        r.trials.to_string(),
        r.seed.to_string(),
        num(est.rate_bits),
        num(est.std_error),
        num(lo),
        num(hi),
    ]);
    let csv = table.to_csv()?;
    write!(io.stdout, "{csv}")?;
    let mut artifacts = Artifacts::default();
    if write_file {
        let path = out_path(r, "mi.csv");
        crate::output::write_file(&path, &csv)?;
        artifacts.csv = Some(path);
    }
    writeln!(io.stderr, "mi: {:.2?} elapsed", started.elapsed())?;
    Ok((Outcome::Clean, artifacts))
}

pub const ORDER_COLUMNS: [&str; 15] = [
    "point",
    "mu12",
    "mu21",
    "num_states",
    "base_rate",
    "base_se",
    "mixed_rate",
    "mixed_se",
    "margin",
    "combined_se",
    "verdict",
    "n",
    "trials",
    "seed",
    "point_seed",
];

/// Checks `I[c] >= I[mix(c, c*, mu)]` on every grid point, where `c*` is the
/// recipe applied to `c` (or `c` itself without a recipe).
pub fn cmd_order(r: &Resolved, io: &mut Io<'_>) -> Result<(Outcome, Artifacts)> {
    let started = Instant::now();
    let grid = r.grid()?;
    for p in &grid {
        p.require_interior()?;
    }
    let c_star = match &r.recipe {
        Some(recipe) => recipe.apply(&r.channel)?,
        None => {
            writeln!(io.stderr, "note: no recipe given; comparing c with mix(c, c, mu)")?;
            DegradedChannel::identity(&r.channel)
        }
    };
    let report = check_theorem1(
        &r.channel,
        &c_star,
        &grid,
        r.input,
        &r.mc(),
        VerdictThresholds::default(),
    )?;
    for w in &report.warnings {
        writeln!(io.stderr, "warning: {w}")?;
    }

    let prov = provenance(r, "order");
    let base = &report.estimates_base;
    let mut table = Table::new(&ORDER_COLUMNS, prov.clone());
    for (i, params) in report.mu_grid.iter().enumerate() {
        let est = &report.estimates_mixed[i];
        let margin = report.margins[i];
        table.push(vec![
            i.to_string(),
            num(params.mu12),
            num(params.mu21),
            (r.channel.num_states() + c_star.channel.num_states()).to_string(),
            num(base.rate_bits),
            num(base.std_error),
            num(est.rate_bits),
            num(est.std_error),
            num(margin.difference),
            num(margin.combined_se),
            report.verdicts[i].as_str().to_string(),
            r.n.to_string(),
            r.trials.to_string(),
            r.seed.to_string(),
            est.seed.to_string(),
        ]);
    }
    let csv_path = out_path(r, "order.csv");
    table.write(&csv_path)?;

    let plot = Plot {
        title: format!("Rate margin I[c] - I[mix(c, c*, mu)], {}", r.channel_id),
        x_label: "(mu12, mu21)".into(),
        y_label: "margin (bits/use), bars = 2 SE".into(),
        series: vec![Series {
            name: "margin".into(),
            points: report
                .margins
                .iter()
                .enumerate()
                .map(|(i, m)| Point {
                    x: i as f64,
                    y: m.difference,
                    err: 2.0 * m.combined_se,
                })
                .collect(),
            connect: false,
        }],
        hlines: vec![(0.0, "0".into())],
        x_tick_labels: Some(
            report
                .mu_grid
                .iter()
                .map(|p| format!("({}, {})", p.mu12, p.mu21))
                .collect(),
        ),
    };
    let svg_path = out_path(r, "order.svg");
    write_file(&svg_path, &plot.to_svg(&prov))?;

    writeln!(
        io.stdout,
        "base rate {:.6} +/- {:.6} bits/use; {} CONFIRMED, {} INCONCLUSIVE, {} VIOLATED",
        base.rate_bits,
        base.std_error,
        report.count(Verdict::Confirmed),
        report.count(Verdict::Inconclusive),
        report.count(Verdict::Violated),
    )?;
    writeln!(io.stdout, "wrote {} and {}", csv_path.display(), svg_path.display())?;
    writeln!(io.stderr, "order: {:.2?} elapsed", started.elapsed())?;
    let outcome = if report.any_violated() {
        Outcome::Violated
    } else {
        Outcome::Clean
    };
    Ok((
        outcome,
        Artifacts {
            csv: Some(csv_path),
            svg: Some(svg_path),
        },
    ))
}

pub const LEMMA1_COLUMNS: [&str; 9] = [
    "k", "exact_rate", "mc_rate", "mc_se", "margin", "verdict", "n", "trials", "seed",
];

/// Violation threshold, in standard errors, for the block bound.
pub const LEMMA1_SIGMAS: f64 = 3.0;

/// Compares `(1/k) I(X^k; Y^k)` for `k = 1..=k_max` with the estimated rate.
pub fn cmd_lemma1(r: &Resolved, io: &mut Io<'_>) -> Result<(Outcome, Artifacts)> {
    let started = Instant::now();
    let report = check_lemma1(&r.channel, r.k_max, r.input, &r.mc(), LEMMA1_SIGMAS)?;
    let mut table = Table::new(&LEMMA1_COLUMNS, provenance(r, "lemma1"));
    for row in &report.rows {
        table.push(vec![
            row.k.to_string(),
            num(row.exact_rate),
            num(report.estimate.rate_bits),
            num(report.estimate.std_error),
            num(row.margin),
            if row.violated { "VIOLATED" } else { "OK" }.to_string(),
            r.n.to_string(),
            r.trials.to_string(),
            r.seed.to_string(),
        ]);
    }
    let path = out_path(r, "lemma1.csv");
    table.write(&path)?;
    let violations = report.rows.iter().filter(|row| row.violated).count();
    writeln!(
        io.stdout,
        "rate {:.6} +/- {:.6} bits/use; {} of {} block bounds VIOLATED",
        report.estimate.rate_bits,
        report.estimate.std_error,
        violations,
        report.rows.len()
    )?;
    writeln!(io.stdout, "wrote {}", path.display())?;
    writeln!(io.stderr, "lemma1: {:.2?} elapsed", started.elapsed())?;
    let outcome = if report.any_violated() {
        Outcome::Violated
    } else {
        Outcome::Clean
    };
    Ok((
        outcome,
        Artifacts {
            csv: Some(path),
            svg: None,
        },
    ))
}

/// The recipe evaluated at one point of a sweep axis. A recipe lacking the swept
/// operation gets one: a leading BSC concatenation for `bsc_p`, a trailing
/// base-channel mix for the jump probabilities.
pub fn recipe_at(recipe: Option<&DegradationRecipe>, param: SweepParam, value: f64) -> DegradationRecipe {
    let base = recipe.cloned().unwrap_or_default();
    match param {
        SweepParam::BscP if base.has_concat() => base.with_bsc_p(value),
        SweepParam::BscP => {
            let mut steps = vec![RecipeStep::ConcatBsc { p: value }];
            steps.extend(base.steps);
            DegradationRecipe::new(steps)
        }
        _ => {
            let (mu12, mu21) = match param {
                SweepParam::Mu => (Some(value), Some(value)),
                SweepParam::Mu12 => (Some(value), None),
                _ => (None, Some(value)),
            };
            if base.has_mix() {
                base.with_mix_params(mu12, mu21)
            } else {
                let mut steps = base.steps;
                steps.push(RecipeStep::Mix {
                    mu12: mu12.unwrap_or(value),
                    mu21: mu21.unwrap_or(value),
                    with: None,
                });
                DegradationRecipe::new(steps)
            }
        }
    }
}

pub const SWEEP_COLUMNS: [&str; 14] = [
    "param",
    "value",
    "num_states",
    "rate_bits",
    "std_error",
    "lower_bound",
    "upper_bound",
    "base_rate",
    "base_se",
    "n",
    "trials",
    "seed",
    "point_seed",
    "channel_id",
];

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub num_states: usize,
    pub estimate: MIEstimate,
}

/// Estimates the rate of `recipe(value)` applied to the channel for every value
/// on the axis, next to the base channel's own rate.
pub fn cmd_sweep(r: &Resolved, io: &mut Io<'_>) -> Result<(Outcome, Artifacts)> {
    let started = Instant::now();
    let sweep = match &r.sweep {
        Some(s) if !s.values.is_empty() => s,
        _ => bail!("EmptySweep: the sweep axis has no values"),
    };
    let param = sweep.param;
    let channels = sweep
        .values
        .iter()
        .map(|&v| {
            let recipe = recipe_at(r.recipe.as_ref(), param, v);
            let degraded = recipe
                .apply(&r.channel)
                .with_context(|| format!("{} = {v}", param.name()))?;
            Ok(degraded.channel)
        })
        .collect::<Result<Vec<_>>>()?;

    let cfg = r.mc();
    let base = estimate_mi_rate(&r.channel, r.input, &cfg.with_seed(derive_seed(r.seed, 0)))?;
    let mut points = Vec::with_capacity(channels.len());
    for (i, (ch, &value)) in channels.iter().zip(&sweep.values).enumerate() {
        let estimate = estimate_mi_rate(ch, r.input, &cfg.with_seed(derive_seed(r.seed, i as u64 + 1)))?;
        points.push(SweepPoint {
            value,
            num_states: ch.num_states(),
            estimate,
        });
    }

    let prov = provenance(r, "sweep");
    let mut table = Table::new(&SWEEP_COLUMNS, prov.clone());
    for (p, ch) in points.iter().zip(&channels) {
        let (lo, hi) = bounds(ch, r)?;
        table.push(vec![
            param.name().to_string(),
            num(p.value),
            p.num_states.to_string(),
            num(p.estimate.rate_bits),
            num(p.estimate.std_error),
            num(lo),
            num(hi),
            num(base.rate_bits),
            num(base.std_error),
            r.n.to_string(),
            r.trials.to_string(),
            r.seed.to_string(),
            p.estimate.seed.to_string(),
            r.channel_id.clone(),
        ]);
    }
    let csv_path = out_path(r, "sweep.csv");
    table.write(&csv_path)?;

    let plot = Plot {
        title: format!("Information rate vs {}, {}", param.name(), r.channel_id),
        x_label: param.name().into(),
        y_label: "rate (bits/use), bars = 2 SE".into(),
        series: vec![Series {
            name: "degraded".into(),
            points: points
                .iter()
                .map(|p| Point {
                    x: p.value,
                    y: p.estimate.rate_bits,
                    err: 2.0 * p.estimate.std_error,
                })
                .collect(),
            connect: true,
        }],
        hlines: vec![(base.rate_bits, "base".into())],
        x_tick_labels: None,
    };
    let svg_path = out_path(r, "sweep.svg");
    write_file(&svg_path, &plot.to_svg(&prov))?;

    writeln!(
        io.stdout,
        "base rate {:.6} +/- {:.6}; {} sweep points over {}",
        base.rate_bits,
        base.std_error,
        points.len(),
        param.name()
    )?;
    writeln!(io.stdout, "wrote {} and {}", csv_path.display(), svg_path.display())?;
    writeln!(io.stderr, "sweep: {:.2?} elapsed", started.elapsed())?;
    Ok((
        Outcome::Clean,
        Artifacts {
            csv: Some(csv_path),
            svg: Some(svg_path),
        },
    ))
}
