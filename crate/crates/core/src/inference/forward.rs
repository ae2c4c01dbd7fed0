//! Scaled forward (alpha) recursions over the hidden state chain.
//!
//! The state vector is renormalized after every symbol and the logs of the
//! normalizers are accumulated, which keeps the recursion exact up to rounding
//! for sequences of any length.

use crate::channel::{check_outputs, check_sequences, InputDistribution, MarkovChannel};
use crate::error::Result;
use crate::markov::TransitionMatrix;

/// Natural-log `log f(y | x)`, marginalized over all state paths.
///
/// Returns `-inf` when the observation is impossible.
pub fn forward_log_f_y_given_x(c: &MarkovChannel, x: &[u8], y: &[u8]) -> Result<f64> {
    check_sequences(c, x, y)?;
    let pi = c.require_regular()?;
    let table = c.emission_table();
    Ok(scaled_forward(
        c.transition(),
        pi.probs(),
        x.iter().zip(y).map(|(&xt, &yt)| table[xt as usize][yt as usize].as_slice()),
    ))
}

/// Natural-log `log f(y)` under an iid input, using the per-state output law
/// `f(y | s) = sum_x q(x) f(y | s, x)`.
pub fn forward_log_f_y(c: &MarkovChannel, input: InputDistribution, y: &[u8]) -> Result<f64> {
    check_outputs(c, y)?;
    let pi = c.require_regular()?;
    let marginal = output_marginals(c, input);
    Ok(scaled_forward(
        c.transition(),
        pi.probs(),
        y.iter().map(|&yt| marginal[yt as usize].as_slice()),
    ))
}

/// `f(y | s)` indexed `[y][s]`.
pub(crate) fn output_marginals(c: &MarkovChannel, input: InputDistribution) -> Vec<Vec<f64>> {
    let table = c.emission_table();
    let ny = c.family().output_alphabet_size();
    (0..ny)
        .map(|y| {
            (0..c.num_states())
                .map(|s| {
                    table
                        .iter()
                        .enumerate()
                        .map(|(x, by_y)| input.prob(x as u8) * by_y[y][s])
                        .sum()
                })
                .collect()
        })
        .collect()
}

/// Forward recursion over per-step emission vectors (indexed by state).
pub(crate) fn scaled_forward<'a, I>(p: &TransitionMatrix, pi: &[f64], emissions: I) -> f64
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let n = pi.len();
    let mut alpha = pi.to_vec();
    let mut next = vec![0.0; n];
    let mut log_total = 0.0;
    for (t, e) in emissions.into_iter().enumerate() {
        if t > 0 {
            next.iter_mut().for_each(|v| *v = 0.0);
            for (i, &ai) in alpha.iter().enumerate() {
                if ai == 0.0 {
                    continue;
                }
                for (nj, &pij) in next.iter_mut().zip(p.row(i)) {
                    *nj += ai * pij;
                }
            }
            std::mem::swap(&mut alpha, &mut next);
        }
        let mut norm = 0.0;
        for (a, &ej) in alpha.iter_mut().zip(e) {
            *a *= ej;
            norm += *a;
        }
        if norm <= 0.0 {
            return f64::NEG_INFINITY;
        }
        alpha.iter_mut().for_each(|a| *a /= norm);
        log_total += norm.ln();
    }
    log_total
}
