//! Finite-state Markov channels and their ordering by mutual information.
//!
//! A channel is a hidden, input-independent regular Markov chain whose state
//! picks the parameter of a memoryless symbol channel (a BSC here). The crate
//! provides
//!
//! * stochastic-matrix utilities ([`markov`]),
//! * channel construction, trajectory sampling and path likelihoods ([`channel`]),
//! * the mixing operator and broken-chain degradations ([`ordering`]),
//! * forward recursions, exact block information, Monte Carlo rate estimates and
//!   the ordering checks built on them ([`inference`]).
//!
//! Monte Carlo trials run on rayon when the `parallel` feature is enabled (the
//! default) and sequentially otherwise. Results are bit-identical either way.
//!
//! ```
//! use markov_order::{channel::MarkovChannel, ordering::{concat_bsc, mix, MixParams}};
//!
//! let c = MarkovChannel::bsc(vec![vec![0.9, 0.1], vec![0.1, 0.9]], vec![0.1, 0.3])?;
//! let c_star = concat_bsc(&c, 0.1)?;
//! let mixed = mix(&c, &c_star, MixParams::symmetric(0.1)?)?;
//! assert_eq!(mixed.num_states(), 4);
//! # Ok::<(), markov_order::Error>(())
//! ```

pub mod channel;
pub mod error;
pub mod exec;
pub mod inference;
pub mod markov;
pub mod ordering;
pub mod rng;

pub use error::{Error, Result};
pub use exec::Workers;
