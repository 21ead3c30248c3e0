use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::normalize::normalize_flat;
use super::objective::Problem;
use super::sampling::unit_open_closed;
use super::{Diagnostics, LearnConfig, LearnResult, PreferenceDataset, SolverKind};
use crate::formula::Formula;
use crate::Result;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Result of one descent run.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartOutcome {
    pub index: usize,
    /// Parameters of the lowest-loss iterate.
    pub params: Vec<f64>,
    pub initial_loss: f64,
    /// Full-dataset loss of `params`.
    pub loss: f64,
    pub iterations: usize,
    /// The loss or gradient became non-finite and the run stopped early.
    pub diverged: bool,
    /// Full-dataset loss of every accepted (improving) iterate, in order.
    pub accepted_losses: Vec<f64>,
}

/// Adam descent on the surrogate loss with random restarts.
///
/// Restart 0 starts from the all-ones valuation; the others from uniform
/// draws on `(0, 1]^n`. Each restart gets its own RNG seeded up front, so the
/// restarts may run in any order or in parallel and still combine to the
/// same result via [`GradientSolver::finish`].
#[derive(Debug)]
pub struct GradientSolver {
    problem: Problem,
    cfg: LearnConfig,
}

impl GradientSolver {
    pub fn new(dataset: &PreferenceDataset<'_>, phi: &Formula, cfg: &LearnConfig) -> Result<Self> {
        cfg.validate()?;
        let problem = Problem::new(dataset, phi)?;
        problem.require_learnable()?;
        Ok(GradientSolver {
            problem,
            cfg: cfg.clone(),
        })
    }

    pub fn restart_seeds<R: RngCore + ?Sized>(&self, rng: &mut R) -> Vec<u64> {
        (0..self.cfg.restarts).map(|_| rng.next_u64()).collect()
    }

    pub fn run_restart(&self, index: usize, seed: u64) -> Result<RestartOutcome> {
        let p = &self.problem;
        let cfg = &self.cfg;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = p.params.len();
        let mut params: Vec<f64> = if index == 0 {
            vec![1.0; n]
        } else {
            (0..n).map(|_| unit_open_closed(&mut rng)).collect()
        };
        let init_sq: f64 = params.iter().map(|w| w * w).sum();
        let initial_loss = p.loss(&params, init_sq, None, cfg)?;
        let mut best = (params.clone(), initial_loss);
        let mut accepted_losses = vec![initial_loss];
        let mut prev = initial_loss;
        let mut m = vec![0.0; n];
        let mut v = vec![0.0; n];
        let mut iterations = 0;
        let mut diverged = !initial_loss.is_finite();
        let batch = cfg.batch_size.min(p.pairs.len());
        while !diverged && iterations < cfg.max_iters {
            let picks = index::sample(&mut rng, p.pairs.len(), batch).into_vec();
            let g = p.loss_gradient(&params, init_sq, &picks, cfg)?;
            if g.iter().any(|x| !x.is_finite()) {
                diverged = true;
                break;
            }
            iterations += 1;
            let k = iterations as i32;
            let c1 = 1.0 - libm::pow(ADAM_BETA1, k as f64);
            let c2 = 1.0 - libm::pow(ADAM_BETA2, k as f64);
            for i in 0..n {
                m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
                v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
                let step = cfg.learning_rate * (m[i] / c1) / (libm::sqrt(v[i] / c2) + ADAM_EPS);
                params[i] = (params[i] - step).max(cfg.w_floor);
            }
            let loss = p.loss(&params, init_sq, None, cfg)?;
            if !loss.is_finite() {
                diverged = true;
                break;
            }
            if loss < best.1 {
                best = (params.clone(), loss);
                accepted_losses.push(loss);
            }
            if libm::fabs(prev - loss) < cfg.loss_tol {
                break;
            }
            prev = loss;
        }
        Ok(RestartOutcome {
            index,
            params: best.0,
            initial_loss,
            loss: best.1,
            iterations,
            diverged,
            accepted_losses,
        })
    }

    /// Picks the restart with the most satisfied pairs (then the lowest
    /// loss, then the lowest index) and rescales it into the unit box.
    pub fn finish(&self, outcomes: &[RestartOutcome]) -> Result<LearnResult> {
        let p = &self.problem;
        let mut best: Option<(&RestartOutcome, usize)> = None;
        for o in outcomes {
            let sat = p.stats(&p.flat(&o.params), self.cfg.margin_fraction).satisfied;
            let better = match best {
                None => true,
                Some((b, bs)) => sat > bs || (sat == bs && o.loss < b.loss),
            };
            if better {
                best = Some((o, sat));
            }
        }
        let (o, _) = best.expect("at least one restart");
        let mut flat = p.flat(&o.params);
        // Pinned constants cannot be rescaled; such valuations are returned
        // as found.
        if normalize_flat(&p.table, &mut flat).is_err() {
            flat = p.flat(&o.params);
        }
        let stats = p.stats(&flat, self.cfg.margin_fraction);
        Ok(LearnResult::from_stats(
            p.table.valuation(&flat),
            stats,
            SolverKind::Gradient,
            Diagnostics {
                iterations: o.iterations,
                initial_loss: Some(o.initial_loss),
                final_loss: Some(o.loss),
                restart: Some(o.index),
            },
        ))
    }
}

/// Runs every restart sequentially and combines them.
pub fn gradient_solve<R: RngCore + ?Sized>(
    dataset: &PreferenceDataset<'_>,
    phi: &Formula,
    cfg: &LearnConfig,
    rng: &mut R,
) -> Result<LearnResult> {
    let solver = GradientSolver::new(dataset, phi, cfg)?;
    let outcomes = solver
        .restart_seeds(rng)
        .into_iter()
        .enumerate()
        .map(|(i, seed)| solver.run_restart(i, seed))
        .collect::<Result<Vec<_>>>()?;
    solver.finish(&outcomes)
}
