//! Exact block mutual information by enumerating every input and output block.

use crate::channel::{InputDistribution, MarkovChannel};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Workers};
use crate::inference::forward::output_marginals;
use crate::markov::TransitionMatrix;

/// Largest block length accepted by [`exact_block_mi`].
pub const MAX_EXACT_BLOCK: usize = 12;

/// `I(X_1^k; Y_1^k)` in bits for an iid input.
///
/// Cost grows as `(|X| |Y|)^k`; blocks longer than [`MAX_EXACT_BLOCK`] are refused.
pub fn exact_block_mi(c: &MarkovChannel, k: usize, input: InputDistribution) -> Result<f64> {
    exact_block_mi_with(c, k, input, Workers::default())
}

pub fn exact_block_mi_with(
    c: &MarkovChannel,
    k: usize,
    input: InputDistribution,
    workers: Workers,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("block length must be at least 1".into()));
    }
    if k > MAX_EXACT_BLOCK {
        return Err(Error::BlockTooLarge {
            k,
            limit: MAX_EXACT_BLOCK,
        });
    }
    let pi = c.require_regular()?.probs().to_vec();
    let nx = c.family().input_alphabet_size();
    let ny = c.family().output_alphabet_size();

    let table = c.emission_table();
    let input_probs: Vec<f64> = (0..nx).map(|x| input.prob(x as u8)).collect();

    // f(y) for every output block, indexed by the base-|Y| number y_1 y_2 ... y_k.
    let marginal = output_marginals(c, input);
    let mut f_y = vec![0.0; ny.pow(k as u32)];
    {
        let mut levels = vec![vec![0.0; pi.len()]; k + 1];
        levels[0].copy_from_slice(&pi);
        let mut pred = vec![0.0; pi.len()];
        output_table(c.transition(), &marginal, &mut levels, &mut pred, 0, 0, &mut f_y);
    }

    // Split the joint enumeration on the first symbol pair for the workers; the
    // partial sums come back in index order.
    let pairs = nx * ny;
    let partial = map_indexed(workers, pairs, |first| {
        let (x1, y1) = (first / ny, first % ny);
        let px = input_probs[x1];
        if px == 0.0 {
            return 0.0;
        }
        let mut levels = vec![vec![0.0; pi.len()]; k + 1];
        levels[1]
            .iter_mut()
            .zip(&pi)
            .zip(&table[x1][y1])
            .for_each(|((a, p), e)| *a = p * e);
        let mut walk = JointWalk {
            p: c.transition(),
            table: &table,
            input_probs: &input_probs,
            f_y: &f_y,
            ny,
            k,
            preds: vec![vec![0.0; pi.len()]; k + 1],
            acc: 0.0,
        };
        walk.descend(&mut levels, 1, px, y1);
        walk.acc
    });
    Ok(partial.iter().sum::<f64>().max(0.0))
}

/// Fills `out[y] = f(y)` by depth-first enumeration of output blocks.
/// `levels[d]` holds the unnormalized forward vector after `d` symbols.
fn output_table(
    p: &TransitionMatrix,
    marginal: &[Vec<f64>],
    levels: &mut [Vec<f64>],
    pred: &mut [f64],
    depth: usize,
    y_index: usize,
    out: &mut [f64],
) {
    let k = levels.len() - 1;
    if depth == k {
        out[y_index] = levels[k].iter().sum();
        return;
    }
    let ny = marginal.len();
    for y in 0..ny {
        {
            let (head, tail) = levels.split_at_mut(depth + 1);
            let cur = &head[depth];
            let child = &mut tail[0];
            if depth == 0 {
                child.iter_mut().zip(cur).zip(&marginal[y]).for_each(|((c, a), e)| *c = a * e);
            } else {
                propagate(p, cur, pred);
                child.iter_mut().zip(pred.iter()).zip(&marginal[y]).for_each(|((c, a), e)| *c = a * e);
            }
        }
        output_table(p, marginal, levels, pred, depth + 1, y_index * ny + y, out);
    }
}

struct JointWalk<'a> {
    p: &'a TransitionMatrix,
    table: &'a [Vec<Vec<f64>>],
    input_probs: &'a [f64],
    f_y: &'a [f64],
    ny: usize,
    k: usize,
    preds: Vec<Vec<f64>>,
    acc: f64,
}

impl JointWalk<'_> {
    fn descend(&mut self, levels: &mut [Vec<f64>], depth: usize, px: f64, y_index: usize) {
        if depth == self.k {
            let f_yx: f64 = levels[depth].iter().sum();
            if f_yx > 0.0 {
                self.acc += px * f_yx * (f_yx / self.f_y[y_index]).log2();
            }
            return;
        }
        // Per-depth scratch, taken out of `self` for the duration of the loop.
        let mut pred = std::mem::take(&mut self.preds[depth]);
        propagate(self.p, &levels[depth], &mut pred);
        if pred.iter().all(|&v| v == 0.0) {
            self.preds[depth] = pred;
            return;
        }
        for (x, &qx) in self.input_probs.iter().enumerate() {
            if qx == 0.0 {
                continue;
            }
            for y in 0..self.ny {
                let child = &mut levels[depth + 1];
                child
                    .iter_mut()
                    .zip(&pred)
                    .zip(&self.table[x][y])
                    .for_each(|((c, a), e)| *c = a * e);
                self.descend(levels, depth + 1, px * qx, y_index * self.ny + y);
            }
        }
        self.preds[depth] = pred;
    }
}

/// `out = v P`.
fn propagate(p: &TransitionMatrix, v: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (i, &vi) in v.iter().enumerate() {
        if vi == 0.0 {
            continue;
        }
        for (o, &pij) in out.iter_mut().zip(p.row(i)) {
            *o += vi * pij;
        }
    }
}
