//! Weighted signal temporal logic (WSTL) robustness and preference-based
//! weight learning.
//!
//! The crate is `no_std` and only needs `alloc`. It covers:
//!
//! * [`signal`]: multi-channel discrete-time signals over the extended reals,
//!   including Boolean channels encoded as `±∞`;
//! * [`formula`]: the parametric WSTL syntax tree, its textual grammar, and
//!   weight-slot bookkeeping;
//! * [`robustness`]: traditional STL robustness, weighted robustness, the
//!   log-sum-exp smoothing and reverse-mode weight gradients;
//! * [`learn`]: the pairwise preference objective, normalization into the
//!   unit box, and the random-sampling and gradient-based solvers;
//! * [`scenarios`]: the stop-sign and pedestrian driving rules, kinematic
//!   trajectory generators and pair construction;
//! * [`baselines`]: Fourier features, the Bradley-Terry baseline, splits and
//!   accuracy/safety metrics.
//!
//! File formats, the command-line tool and the elicitation service live in
//! the companion `wstlpref` crate.
#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baselines;
mod error;
pub mod formula;
pub mod learn;
pub(crate) mod math;
pub mod robustness;
pub mod scenarios;
pub mod signal;

pub use error::{Error, Result};
pub use formula::{Formula, Interval, SlotId, SlotTable, WeightSlot, WeightValuation};
pub use robustness::{
    grad_weights, rho, soft_max, soft_min, soft_wstl_robustness, wstl_robustness, ComputationGraph,
    SoftConfig,
};
pub use signal::{Channel, ChannelKind, PredicateFn, Signal};
