//! Closed-form sanity rails for BSC-state channels.

use crate::channel::{InputDistribution, MarkovChannel, SymbolFamily};
use crate::error::Result;

/// Binary entropy in bits, with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |v: f64| if v <= 0.0 { 0.0 } else { -v * v.log2() };
    term(p) + term(1.0 - p)
}

/// Mutual information of a memoryless BSC with inversion probability `eta` under
/// a Bernoulli(`q`) input, in bits.
pub fn bsc_mutual_information(eta: f64, input: InputDistribution) -> f64 {
    let q = input.q();
    let p_one = q * (1.0 - eta) + (1.0 - q) * eta;
    (binary_entropy(p_one) - binary_entropy(eta)).max(0.0)
}

/// Rate achievable if the receiver were told the state sequence:
/// `sum_i pi_i I_BSC(eta_i)`.
pub fn genie_state_upper_bound(c: &MarkovChannel, input: InputDistribution) -> Result<f64> {
    let pi = c.require_regular()?;
    match c.family() {
        SymbolFamily::Bsc => Ok(pi
            .probs()
            .iter()
            .zip(c.etas())
            .map(|(p, &eta)| p * bsc_mutual_information(eta, input))
            .sum()),
    }
}

/// Mutual information of the memoryless BSC with the average inversion
/// probability `sum_i pi_i eta_i`.
pub fn memoryless_lower_bound(c: &MarkovChannel, input: InputDistribution) -> Result<f64> {
    let pi = c.require_regular()?;
    match c.family() {
        SymbolFamily::Bsc => {
            let mean_eta: f64 = pi.probs().iter().zip(c.etas()).map(|(p, e)| p * e).sum();
            Ok(bsc_mutual_information(mean_eta, input))
        }
    }
}
