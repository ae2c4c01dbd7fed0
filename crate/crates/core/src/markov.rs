//! Stochastic-matrix algebra for the hidden state chain.
//!
//! [`TransitionMatrix`] is a validated row-stochastic matrix, stored dense and
//! row-major. Entry `(i, j)` is the probability of moving from state `i` to
//! state `j` in one step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on row sums accepted by [`TransitionMatrix::new`].
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Default residual tolerance for [`steady_state`].
pub const DEFAULT_STEADY_TOL: f64 = 1e-12;

/// Default iteration cap for [`steady_state`].
pub const DEFAULT_STEADY_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl TransitionMatrix {
    /// Validates a square matrix of transition probabilities.
    ///
    /// Rows must sum to one within [`ROW_SUM_TOL`]; nothing is renormalized.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::NonSquare {
                    rows: dim,
                    row: i,
                    cols: row.len(),
                });
            }
            for (j, &value) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&value) {
                    return Err(Error::NegativeEntry { row: i, col: j, value });
                }
            }
            let deviation = row.iter().sum::<f64>() - 1.0;
            if deviation.abs() > ROW_SUM_TOL {
                return Err(Error::RowSumViolation { row: i, deviation });
            }
            entries.extend_from_slice(row);
        }
        Ok(Self { dim, entries })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let rows = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(rows)
    }

    pub fn num_states(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.entries[from * self.dim + to]
    }

    #[inline]
    pub fn row(&self, from: usize) -> &[f64] {
        &self.entries[from * self.dim..(from + 1) * self.dim]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    /// Row vector times matrix: `(v P)_j = sum_i v_i P_ij`.
    pub fn left_mul(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(self.row(i)) {
                *o += vi * p;
            }
        }
        out
    }

    /// Matrix power `P^d` as plain rows. Rows of the result are not re-validated,
    /// since rounding drifts their sums slightly for large `d`.
    pub fn power(&self, d: u32) -> Vec<Vec<f64>> {
        let n = self.dim;
        let mut result: Vec<f64> = (0..n * n)
            .map(|k| if k / n == k % n { 1.0 } else { 0.0 })
            .collect();
        let mut base = self.entries.clone();
        let mut e = d;
        while e > 0 {
            if e & 1 == 1 {
                result = dense_mul(&result, &base, n);
            }
            e >>= 1;
            if e > 0 {
                base = dense_mul(&base, &base, n);
            }
        }
        result.chunks(n).map(<[f64]>::to_vec).collect()
    }

    /// Sparsity pattern: `true` where the entry is strictly positive.
    pub(crate) fn support(&self) -> Vec<bool> {
        self.entries.iter().map(|&p| p > 0.0).collect()
    }
}

fn dense_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

impl Serialize for TransitionMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for TransitionMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        TransitionMatrix::new(rows).map_err(serde::de::Error::custom)
    }
}

/// A probability vector over the hidden states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateDistribution {
    probs: Vec<f64>,
}

impl StateDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument("empty distribution".into()));
        }
        if let Some((i, &p)) = probs.iter().enumerate().find(|(_, p)| p.is_nan() || **p < 0.0) {
            return Err(Error::NegativeEntry { row: 0, col: i, value: p });
        }
        let deviation = probs.iter().sum::<f64>() - 1.0;
        if deviation.abs() > ROW_SUM_TOL {
            return Err(Error::RowSumViolation { row: 0, deviation });
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `max_j |(pi P)_j - pi_j|`.
    pub fn residual(&self, p: &TransitionMatrix) -> f64 {
        p.left_mul(&self.probs)
            .iter()
            .zip(&self.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Why a chain failed the regularity test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Irregularity {
    /// Some state cannot reach some other state.
    Reducible,
    /// Irreducible, but the return times share a common divisor `period > 1`.
    Periodic { period: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum Regularity {
    /// `P^m` is entrywise positive, `m` the smallest such power.
    Regular { m: usize },
    NotRegular(Irregularity),
}

impl Regularity {
    pub fn is_regular(&self) -> bool {
        matches!(self, Regularity::Regular { .. })
    }
}

impl std::fmt::Display for Regularity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regularity::Regular { m } => write!(f, "regular (P^{m} > 0)"),
            Regularity::NotRegular(Irregularity::Reducible) => write!(f, "reducible chain"),
            Regularity::NotRegular(Irregularity::Periodic { period }) => {
                write!(f, "periodic chain with period {period}")
            }
        }
    }
}

/// Tests whether some power of `p` is strictly positive, up to the Wielandt bound
/// `(n-1)^2 + 1`.
pub fn is_regular(p: &TransitionMatrix) -> Regularity {
    let n = p.num_states();
    let support = p.support();
    let bound = (n - 1) * (n - 1) + 1;

    let mut power = support.clone();
    for m in 1..=bound {
        if power.iter().all(|&b| b) {
            return Regularity::Regular { m };
        }
        if m < bound {
            power = bool_mul(&power, &support, n);
        }
    }
    Regularity::NotRegular(classify_failure(&support, n))
}

fn bool_mul(a: &[bool], b: &[bool], n: usize) -> Vec<bool> {
    let mut out = vec![false; n * n];
    for i in 0..n {
        for k in 0..n {
            if !a[i * n + k] {
                continue;
            }
            for j in 0..n {
                out[i * n + j] |= b[k * n + j];
            }
        }
    }
    out
}

fn classify_failure(support: &[bool], n: usize) -> Irregularity {
    // Transitive closure by repeated squaring of (I + A).
    let mut reach: Vec<bool> = (0..n * n).map(|k| support[k] || k / n == k % n).collect();
    let mut steps = 1;
    while steps < n {
        reach = bool_mul(&reach, &reach, n);
        steps *= 2;
    }
    if reach.iter().any(|&r| !r) {
        return Irregularity::Reducible;
    }
    // Irreducible: the period is the gcd of the lengths of all closed walks through
    // state 0 up to length 3n. Any simple cycle is reachable from 0 and back within
    // 2(n-1) steps, so both detours (with and without the cycle) fall in range.
    let mut period = 0;
    let mut walk = support.to_vec();
    for len in 1..=3 * n {
        if walk[0] {
            period = gcd(period, len);
        }
        walk = bool_mul(&walk, support, n);
    }
    Irregularity::Periodic { period }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Steady-state distribution by power iteration from the uniform vector.
///
/// Stops once `max_j |(pi P)_j - pi_j| < tol`.
pub fn steady_state(p: &TransitionMatrix, tol: f64, max_iter: usize) -> Result<StateDistribution> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let regularity = is_regular(p);
    if !regularity.is_regular() {
        return Err(Error::NotRegular(regularity.to_string()));
    }
    let n = p.num_states();
    let mut pi = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let mut next = p.left_mul(&pi);
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        residual = next
            .iter()
            .zip(&pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        pi = next;
        if residual < tol {
            break;
        }
    }
    let dist = StateDistribution { probs: pi };
    // The loop tests the residual of the previous iterate; confirm on the returned one.
    let residual_now = dist.residual(p);
    if residual_now < tol {
        Ok(dist)
    } else {
        Err(Error::NoConvergence {
            iterations: max_iter,
            residual: residual.min(residual_now),
        })
    }
}

/// Deviation of the `d`-step transition law from the steady state, in ratio form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationReport {
    pub d: u32,
    /// `max_{i,j} |P^d(i,j) / pi_j - 1|`.
    pub delta: f64,
}

/// Smallest `delta` with `pi_j (1 - delta) <= P^d(i, j) <= pi_j (1 + delta)` for all `i, j`.
pub fn d_step_deviation(p: &TransitionMatrix, d: u32) -> Result<DeviationReport> {
    if d == 0 {
        return Err(Error::InvalidArgument("d must be a positive step count".into()));
    }
    let pi = steady_state(p, DEFAULT_STEADY_TOL, DEFAULT_STEADY_MAX_ITER)?;
    deviation_against(p, &pi, d)
}

pub(crate) fn deviation_against(
    p: &TransitionMatrix,
    pi: &StateDistribution,
    d: u32,
) -> Result<DeviationReport> {
    if let Some(state) = pi.probs().iter().position(|&x| x <= 0.0) {
        return Err(Error::ZeroSteadyStateProb { state });
    }
    let pd = p.power(d);
    let delta = pd
        .iter()
        .flat_map(|row| row.iter().zip(pi.probs()).map(|(pij, pj)| (pij / pj - 1.0).abs()))
        .fold(0.0, f64::max);
    Ok(DeviationReport { d, delta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ge() -> TransitionMatrix {
        TransitionMatrix::new(vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap()
    }

    #[test]
    fn validates_gilbert_elliott_matrix() {
        let p = ge();
        assert_eq!(p.num_states(), 2);
        assert_eq!(p.get(0, 1), 0.1);
    }

    #[test]
    fn single_state_is_valid() {
        let p = TransitionMatrix::new(vec![vec![1.0]]).unwrap();
        assert_eq!(p.num_states(), 1);
    }

    #[test]
    fn row_sum_violation_reports_row_and_deviation() {
        let err = TransitionMatrix::new(vec![vec![0.9, 0.2], vec![0.1, 0.9]]).unwrap_err();
        match err {
            Error::RowSumViolation { row, deviation } => {
                assert_eq!(row, 0);
                assert_abs_diff_eq!(deviation, 0.1, epsilon = 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_non_square_and_negative() {
        assert!(matches!(
            TransitionMatrix::new(vec![vec![0.5, 0.5], vec![1.0]]),
            Err(Error::NonSquare { .. })
        ));
        assert!(matches!(
            TransitionMatrix::new(vec![vec![1.5, -0.5], vec![0.5, 0.5]]),
            Err(Error::NegativeEntry { row: 0, col: 0, .. })
        ));
        assert!(matches!(TransitionMatrix::new(vec![]), Err(Error::EmptyMatrix)));
    }

    #[test]
    fn steady_state_examples() {
        let pi = steady_state(&ge(), 1e-12, 100_000).unwrap();
        assert_abs_diff_eq!(pi.probs()[0], 0.5, epsilon = 1e-12);
        let one = TransitionMatrix::new(vec![vec![1.0]]).unwrap();
        assert_eq!(steady_state(&one, 1e-12, 10).unwrap().probs(), &[1.0]);
    }

    #[test]
    fn steady_state_rejects_periodic_chain() {
        let flip = TransitionMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(steady_state(&flip, 1e-12, 100), Err(Error::NotRegular(_))));
    }

    #[test]
    fn steady_state_reports_no_convergence() {
        let slow = TransitionMatrix::new(vec![vec![0.999, 0.001], vec![0.002, 0.998]]).unwrap();
        assert!(matches!(
            steady_state(&slow, 1e-12, 3),
            Err(Error::NoConvergence { iterations: 3, .. })
        ));
    }

    #[test]
    fn regularity_diagnostics() {
        assert_eq!(is_regular(&ge()), Regularity::Regular { m: 1 });
        let flip = TransitionMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(
            is_regular(&flip),
            Regularity::NotRegular(Irregularity::Periodic { period: 2 })
        );
        let id = TransitionMatrix::identity(3).unwrap();
        assert_eq!(is_regular(&id), Regularity::NotRegular(Irregularity::Reducible));
        // Cycle with a shortcut needs a higher power.
        let p = TransitionMatrix::new(vec![
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.5, 0.5, 0.0],
        ])
        .unwrap();
        assert_eq!(is_regular(&p), Regularity::Regular { m: 5 });
    }

    #[test]
    fn deviation_of_symmetric_chain() {
        let r = d_step_deviation(&ge(), 1).unwrap();
        assert_abs_diff_eq!(r.delta, 0.8, epsilon = 1e-12);
        let r = d_step_deviation(&ge(), 10).unwrap();
        assert_abs_diff_eq!(r.delta, 0.8f64.powi(10), epsilon = 1e-12);
        let one = TransitionMatrix::new(vec![vec![1.0]]).unwrap();
        assert_eq!(d_step_deviation(&one, 7).unwrap().delta, 0.0);
        assert!(d_step_deviation(&ge(), 0).is_err());
    }

    #[test]
    fn deviation_rejects_zero_steady_mass() {
        let p = ge();
        let pi = StateDistribution { probs: vec![1.0, 0.0] };
        assert_eq!(
            deviation_against(&p, &pi, 1),
            Err(Error::ZeroSteadyStateProb { state: 1 })
        );
    }

    #[test]
    fn power_matches_closed_form() {
        let p5 = ge().power(5);
        assert_abs_diff_eq!(p5[0][0], 0.5 * (1.0 + 0.8f64.powi(5)), epsilon = 1e-14);
        assert_eq!(ge().power(0), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn serde_roundtrip_validates() {
        let p: TransitionMatrix = serde_json::from_str("[[0.9,0.1],[0.1,0.9]]").unwrap();
        assert_eq!(p, ge());
        assert!(serde_json::from_str::<TransitionMatrix>("[[0.9,0.2],[0.1,0.9]]").is_err());
    }
}
