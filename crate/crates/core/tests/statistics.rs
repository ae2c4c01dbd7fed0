//! Statistical properties of the sampler, the estimator and the orderings.
//! All randomness is seeded, so every check here is deterministic.

mod common;

use rand::Rng;

use common::{example1, random_channel, rng};
use markov_order::channel::{sample_trajectory, InputDistribution, MarkovChannel};
use markov_order::inference::{
    binary_entropy, check_lemma1, check_theorem1, convergence_diagnostic, estimate_mi_rate,
    exact_block_mi, genie_state_upper_bound, memoryless_lower_bound, McConfig, Verdict,
    VerdictThresholds,
};
use markov_order::ordering::{
    build_degraded_chain, concat_bsc, mix, simulate_mixed_states, DegradationRecipe,
    DegradedChannel, MixParams, RecipeStep,
};

const N_LONG: usize = 1_000_000;

#[test]
fn example1_occupancy_and_error_rate() {
    let c = example1();
    let t = sample_trajectory(&c, N_LONG, InputDistribution::uniform(), 2024).unwrap();
    let n = N_LONG as f64;
    // Second eigenvalue 0.8: the time average has variance inflated by (1+l)/(1-l).
    let lambda: f64 = 0.8;
    let n_eff = n * (1.0 - lambda) / (1.0 + lambda);
    let frac0 = t.s.iter().filter(|&&s| s == 0).count() as f64 / n;
    let sigma_state = (0.25 / n_eff).sqrt();
    assert!((frac0 - 0.5).abs() < 3.0 * sigma_state, "occupancy {frac0}");

    // Error indicators: variance p(1-p) plus the state-driven autocovariance
    // Var(eta_s) * lambda^k summed over both sides.
    let p_bar = 0.2;
    let var_eta = 0.01;
    let var_mean = (p_bar * (1.0 - p_bar) + 2.0 * var_eta * lambda / (1.0 - lambda)) / n;
    let errors = t.x.iter().zip(&t.y).filter(|(a, b)| a != b).count() as f64 / n;
    assert!((errors - p_bar).abs() < 3.0 * var_mean.sqrt(), "error rate {errors}");
}

#[test]
fn occupancy_converges_to_steady_state_on_random_chains() {
    let mut r = rng(11);
    for _ in 0..5 {
        let n_states = r.random_range(2..=4);
        let c = random_channel(&mut r, n_states, 0.05, 0.45);
        let t = sample_trajectory(&c, N_LONG, InputDistribution::uniform(), r.random()).unwrap();
        let pi = c.steady_state().unwrap().probs();
        // Crude mixing-time bound from the one-step deviation.
        let delta = markov_order::markov::d_step_deviation(c.transition(), 1).unwrap().delta;
        let slowdown = (1.0 + delta) / (1.0 - delta.min(0.99));
        let n_eff = N_LONG as f64 / slowdown;
        for (s, &p) in pi.iter().enumerate() {
            let freq = t.s.iter().filter(|&&v| v as usize == s).count() as f64 / N_LONG as f64;
            let tol = 3.0 * 5.0 * (p * (1.0 - p) / n_eff).sqrt();
            assert!((freq - p).abs() < tol, "state {s}: {freq} vs {p}");
        }
    }
}

#[test]
fn inputs_are_independent_of_states() {
    let c = example1();
    let t = sample_trajectory(&c, N_LONG, InputDistribution::uniform(), 99).unwrap();
    let n = N_LONG as f64;
    let mx = t.x.iter().map(|&v| v as f64).sum::<f64>() / n;
    let ms = t.s.iter().map(|&v| v as f64).sum::<f64>() / n;
    let (mut cov, mut vx, mut vs) = (0.0, 0.0, 0.0);
    for (&x, &s) in t.x.iter().zip(&t.s) {
        let (dx, ds) = (x as f64 - mx, s as f64 - ms);
        cov += dx * ds;
        vx += dx * dx;
        vs += ds * ds;
    }
    let corr = cov / (vx * vs).sqrt();
    // x is iid, so the sample correlation has standard deviation 1/sqrt(n).
    assert!(corr.abs() < 3.0 / n.sqrt(), "corr {corr}");
}

#[test]
fn trajectories_are_reproducible() {
    let c = example1();
    let u = InputDistribution::new(0.3).unwrap();
    let a = sample_trajectory(&c, 10_000, u, 5).unwrap();
    let b = sample_trajectory(&c, 10_000, u, 5).unwrap();
    assert_eq!(a, b);
}

#[test]
fn estimates_sit_between_bounds() {
    let mut r = rng(12);
    let u = InputDistribution::uniform();
    let mut corpus = vec![example1(), MarkovChannel::memoryless_bsc(0.2).unwrap()];
    for n in 2..=4 {
        corpus.push(random_channel(&mut r, n, 0.0, 0.5));
        corpus.push(random_channel(&mut r, n, 0.05, 0.45));
    }
    for (i, c) in corpus.iter().enumerate() {
        let est = estimate_mi_rate(c, u, &McConfig::new(20_000, 10, i as u64)).unwrap();
        let lo = memoryless_lower_bound(c, u).unwrap();
        let hi = genie_state_upper_bound(c, u).unwrap();
        assert!(lo <= hi + 1e-15);
        assert!(est.rate_bits >= lo - 3.0 * est.std_error, "{i}: {} < {lo}", est.rate_bits);
        assert!(est.rate_bits <= hi + 3.0 * est.std_error, "{i}: {} > {hi}", est.rate_bits);
    }
}

#[test]
fn information_density_is_finite_for_interior_etas() {
    let mut r = rng(13);
    for n in 1..=4 {
        let c = random_channel(&mut r, n, 0.01, 0.99);
        let est = estimate_mi_rate(&c, InputDistribution::uniform(), &McConfig::new(5_000, 6, 1)).unwrap();
        assert!(est.trial_rates.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn memoryless_block_information_is_linear() {
    let c = MarkovChannel::memoryless_bsc(0.1).unwrap();
    let u = InputDistribution::uniform();
    let closed = 1.0 - binary_entropy(0.1);
    for k in 1..=10 {
        let per = exact_block_mi(&c, k, u).unwrap() / k as f64;
        assert!((per - closed).abs() < 1e-12, "k={k}: {per}");
    }
}

/// Mixing a channel with a copy of itself re-draws the state from the steady
/// state at every jump, so the output process is that of the single chain
/// `(1 - mu) P + mu 1 pi` rather than of `c`.
fn lumped_self_mix(c: &MarkovChannel, mu: f64) -> MarkovChannel {
    let pi = c.steady_state().unwrap().probs();
    let rows = (0..c.num_states())
        .map(|i| {
            c.transition()
                .row(i)
                .iter()
                .zip(pi)
                .map(|(p, q)| (1.0 - mu) * p + mu * q)
                .collect()
        })
        .collect();
    MarkovChannel::bsc(rows, c.etas().to_vec()).unwrap()
}

#[test]
fn self_mix_equals_lumped_chain_exactly() {
    let c = example1();
    let u = InputDistribution::uniform();
    for mu in [0.1, 0.5] {
        let m = mix(&c, &c, MixParams::symmetric(mu).unwrap()).unwrap();
        let lumped = lumped_self_mix(&c, mu);
        for k in 1..=6 {
            let a = exact_block_mi(&m, k, u).unwrap();
            let b = exact_block_mi(&lumped, k, u).unwrap();
            assert!((a - b).abs() < 1e-12, "mu={mu} k={k}: {a} vs {b}");
            if k >= 2 {
                assert!(a < exact_block_mi(&c, k, u).unwrap());
            }
        }
    }
}

#[test]
fn self_mix_rate_matches_lumped_chain() {
    let c = example1();
    let u = InputDistribution::uniform();
    let cfg = McConfig::new(100_000, 20, 31);
    let base = estimate_mi_rate(&c, u, &cfg).unwrap();
    for (i, mu) in [0.1, 0.5].into_iter().enumerate() {
        let m = mix(&c, &c, MixParams::symmetric(mu).unwrap()).unwrap();
        let est = estimate_mi_rate(&m, u, &cfg.with_seed(100 + i as u64)).unwrap();
        let lumped = estimate_mi_rate(&lumped_self_mix(&c, mu), u, &cfg.with_seed(200 + i as u64)).unwrap();
        let diff = (lumped.rate_bits - est.rate_bits).abs();
        assert!(diff <= 3.0 * lumped.combined_se(&est), "mu={mu}: diff {diff}");
        assert!(est.rate_bits <= base.rate_bits + 2.0 * base.combined_se(&est));
    }
}

#[test]
fn standard_error_shrinks_with_trials() {
    let c = example1();
    let u = InputDistribution::uniform();
    let se: Vec<f64> = [5, 20, 80]
        .iter()
        .map(|&trials| estimate_mi_rate(&c, u, &McConfig::new(10_000, trials, 8)).unwrap().std_error)
        .collect();
    // Quadrupling the trials halves the SE, up to a factor of 2.
    for w in se.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.0..=4.0).contains(&ratio), "SE ratio {ratio} from {se:?}");
    }
}

#[test]
fn block_bound_holds_on_random_channels() {
    let mut r = rng(14);
    let u = InputDistribution::uniform();
    for i in 0..6 {
        let n = 2 + i % 3;
        let c = random_channel(&mut r, n, 0.05, 0.45);
        let report = check_lemma1(&c, 8, u, &McConfig::new(20_000, 10, i as u64), 3.0).unwrap();
        assert!(!report.any_violated(), "{report:?}");
        // Normalized block information never decreases with k for these chains.
        assert!(report.rows.windows(2).all(|w| w[1].exact_rate >= w[0].exact_rate - 1e-12));
    }
}

#[test]
fn block_bound_equality_for_memoryless_channel() {
    let c = MarkovChannel::memoryless_bsc(0.1).unwrap();
    let report =
        check_lemma1(&c, 6, InputDistribution::uniform(), &McConfig::new(20_000, 10, 3), 3.0).unwrap();
    let first = report.rows[0].exact_rate;
    assert!(report.rows.iter().all(|r| (r.exact_rate - first).abs() < 1e-12));
    assert!(!report.any_violated());
}

#[test]
fn pure_noise_channel_has_zero_everything() {
    let c = MarkovChannel::bsc(vec![vec![0.8, 0.2], vec![0.4, 0.6]], vec![0.5, 0.5]).unwrap();
    let report =
        check_lemma1(&c, 4, InputDistribution::uniform(), &McConfig::new(2_000, 4, 3), 3.0).unwrap();
    assert!(report.estimate.rate_bits.abs() < 1e-12);
    assert!(report.rows.iter().all(|r| r.exact_rate.abs() < 1e-12));
}

#[test]
fn mixing_ordering_holds_on_random_recipes() {
    let mut r = rng(15);
    let u = InputDistribution::uniform();
    let grid: Vec<MixParams> = [0.1, 0.3, 0.5]
        .iter()
        .flat_map(|&a| [0.1, 0.3, 0.5].map(|b| MixParams::new(a, b).unwrap()))
        .collect();
    for i in 0..3 {
        let c = random_channel(&mut r, 2, 0.05, 0.3);
        let recipe = DegradationRecipe::new(vec![
            RecipeStep::ConcatBsc { p: r.random_range(0.02..0.2) },
            RecipeStep::Mix { mu12: 0.2, mu21: 0.4, with: None },
        ]);
        let star = recipe.apply(&c).unwrap();
        assert!(star.certified);
        let report = check_theorem1(
            &c,
            &star,
            &grid,
            u,
            &McConfig::new(20_000, 10, i),
            VerdictThresholds::default(),
        )
        .unwrap();
        assert!(!report.any_violated(), "{:?}", report.verdicts);
    }
}

#[test]
fn trivial_member_never_violates() {
    let c = example1();
    let report = check_theorem1(
        &c,
        &DegradedChannel::identity(&c),
        &[MixParams::symmetric(0.3).unwrap(), MixParams::new(0.1, 0.5).unwrap()],
        InputDistribution::uniform(),
        &McConfig::new(50_000, 20, 4),
        VerdictThresholds::default(),
    )
    .unwrap();
    assert!(report.verdicts.iter().all(|v| *v != Verdict::Violated), "{report:?}");
    assert!(report.margins.iter().all(|m| m.difference > -3.0 * m.combined_se));
}

#[test]
fn degraded_chain_sizes() {
    let c = example1();
    let params = MixParams::symmetric(0.1).unwrap();
    let chain = build_degraded_chain(&c, 4, params, Some(0.1)).unwrap();
    let sizes: Vec<_> = chain.iter().map(MarkovChannel::num_states).collect();
    assert_eq!(sizes, vec![4, 6, 8, 10]);
    let plain = build_degraded_chain(&c, 1, params, None).unwrap();
    assert_eq!(plain[0].num_states(), 4);
    assert_eq!(plain[0], mix(&c, &c, params).unwrap());
}

/// Jump indicators split the mixed chain into segments; inside a segment the
/// transitions follow the originating machine and every entry is drawn from that
/// machine's steady state.
#[test]
fn side_information_recovers_segment_dynamics() {
    let c = example1();
    let c_star = concat_bsc(&c, 0.1).unwrap();
    let params = MixParams::new(0.2, 0.3).unwrap();
    let path = simulate_mixed_states(&c, &c_star, params, 400_000, 17).unwrap();
    let mixed = mix(&c, &c_star, params).unwrap();
    let k = mixed.num_states();

    let mut within = vec![vec![0usize; k]; k];
    let mut all = vec![vec![0usize; k]; k];
    let mut entries = [vec![0usize; 2], vec![0usize; 2]];
    for t in 0..path.states.len() - 1 {
        let (a, b) = (path.states[t] as usize, path.states[t + 1] as usize);
        all[a][b] += 1;
        if path.jumped[t] {
            entries[usize::from(b >= 2)][b % 2] += 1;
        } else {
            within[a][b] += 1;
            assert_eq!(a < 2, b < 2, "segment crossed machines without a jump");
        }
    }
    let check_rows = |counts: &Vec<Vec<usize>>, expect: &dyn Fn(usize, usize) -> f64, rows: std::ops::Range<usize>| {
        for a in rows {
            let total: usize = counts[a].iter().sum();
            for b in 0..k {
                let p = expect(a, b);
                let freq = counts[a][b] as f64 / total as f64;
                let sigma = (p * (1.0 - p) / total as f64).sqrt().max(1e-12);
                assert!((freq - p).abs() < 5.0 * sigma, "{a}->{b}: {freq} vs {p}");
            }
        }
    };
    // Inside segments: the base channel's P (identical for c and c*).
    let p = c.transition().clone();
    check_rows(&within, &|a, b| if (a < 2) == (b < 2) { p.get(a % 2, b % 2) } else { 0.0 }, 0..k);
    // Without side information the path follows the combined matrix.
    check_rows(&all, &|a, b| mixed.transition().get(a, b), 0..k);
    // Entries after a jump follow the steady state of the destination.
    for machine in &entries {
        let total = (machine[0] + machine[1]) as f64;
        let f0 = machine[0] as f64 / total;
        assert!((f0 - 0.5).abs() < 5.0 * (0.25 / total).sqrt());
    }
}

#[test]
fn convergence_diagnostic_settles_on_example1() {
    let check = convergence_diagnostic(&example1(), InputDistribution::uniform(), &McConfig::new(50_000, 10, 5))
        .unwrap();
    assert_eq!(check.tenth.n, 5_000);
    // Shorter blocks under-estimate the rate by at most a few SE here.
    assert!(check.difference > -3.0 * check.combined_se);
}
