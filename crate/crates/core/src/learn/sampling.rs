use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::{Rng, RngCore};

use super::objective::{PairStats, Problem};
use super::{Diagnostics, LearnConfig, LearnResult, PreferenceDataset, SolverKind};
use crate::formula::Formula;
use crate::Result;

/// Draws `cfg.n_samples` valuations uniformly from `(0, 1]^n` and keeps the
/// best by satisfied pairs, then margin-satisfied pairs, then mean margin.
/// Ties go to the earliest draw.
pub fn random_sampling_solve<R: RngCore + ?Sized>(
    dataset: &PreferenceDataset<'_>,
    phi: &Formula,
    cfg: &LearnConfig,
    rng: &mut R,
) -> Result<LearnResult> {
    cfg.validate()?;
    let problem = Problem::new(dataset, phi)?;
    problem.require_learnable()?;
    let n = problem.params.len();
    let mut params = Vec::with_capacity(n);
    let mut best: Option<(Vec<f64>, PairStats)> = None;
    for _ in 0..cfg.n_samples {
        params.clear();
        params.extend((0..n).map(|_| unit_open_closed(rng)));
        let stats = problem.stats(&problem.flat(&params), cfg.margin_fraction);
        let better = match &best {
            None => true,
            Some((_, b)) => rank(&stats, b) == Ordering::Greater,
        };
        if better {
            best = Some((params.clone(), stats));
        }
    }
    let (params, stats) = best.expect("n_samples > 0");
    Ok(LearnResult::from_stats(
        problem.table.valuation(&problem.flat(&params)),
        stats,
        SolverKind::RandomSampling,
        Diagnostics {
            iterations: cfg.n_samples,
            ..Diagnostics::default()
        },
    ))
}

/// Uniform on `(0, 1]`.
pub(crate) fn unit_open_closed<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.gen::<f64>()
}

fn rank(a: &PairStats, b: &PairStats) -> Ordering {
    a.satisfied
        .cmp(&b.satisfied)
        .then(a.margin_satisfied.cmp(&b.margin_satisfied))
        .then(
            a.mean_margin
                .partial_cmp(&b.mean_margin)
                .unwrap_or(Ordering::Equal),
        )
}
