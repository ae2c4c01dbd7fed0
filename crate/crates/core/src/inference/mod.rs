//! Likelihoods, exact block information, rate estimation and ordering checks.

pub mod bounds;
pub mod estimate;
pub mod exact;
pub mod forward;
pub mod verify;

pub use bounds::{
    binary_entropy, bsc_mutual_information, genie_state_upper_bound, memoryless_lower_bound,
};
pub use estimate::{
    convergence_diagnostic, estimate_mi_rate, ConvergenceCheck, McConfig, MIEstimate,
    MIN_RECOMMENDED_N,
};
pub use exact::{exact_block_mi, exact_block_mi_with, MAX_EXACT_BLOCK};
pub use forward::{forward_log_f_y, forward_log_f_y_given_x};
pub use verify::{
    check_lemma1, check_rate_chain, check_theorem1, BlockBoundRow, ChainReport, Lemma1Report,
    Margin, OrderingReport, Verdict, VerdictThresholds,
};
