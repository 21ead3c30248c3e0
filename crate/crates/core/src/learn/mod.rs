//! Learning weight valuations from pairwise preferences.
//!
//! A [`PreferenceDataset`] lists ordered pairs `(preferred, rejected)` over a
//! slice of signals. The objective is the number of pairs whose weighted
//! robustness at `t = 0` is strictly ordered the same way. Two solvers are
//! provided: uniform sampling of the unit box ([`random_sampling_solve`]) and
//! Adam descent on a smooth surrogate ([`gradient_solve`]). Every returned
//! valuation is strictly positive, so a satisfying signal always outranks a
//! violating one.

mod gradient;
mod normalize;
mod objective;
mod sampling;

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

pub use gradient::{gradient_solve, GradientSolver, RestartOutcome};
pub use normalize::{normalize_flat, normalize_to_domain};
pub use objective::{surrogate_loss, PairStats};
pub use sampling::random_sampling_solve;

use crate::formula::{Formula, WeightValuation};
use crate::robustness::wstl_robustness;
use crate::signal::Signal;
use crate::{Error, Result};
use objective::Problem;

/// Ordered preference pairs over a borrowed signal store.
#[derive(Debug, Clone)]
pub struct PreferenceDataset<'a> {
    signals: &'a [Signal],
    pairs: Vec<(usize, usize)>,
}

impl<'a> PreferenceDataset<'a> {
    /// `pairs` hold `(preferred, rejected)` indices into `signals`.
    pub fn new(signals: &'a [Signal], pairs: Vec<(usize, usize)>) -> Result<Self> {
        for &(a, b) in &pairs {
            for id in [a, b] {
                if id >= signals.len() {
                    return Err(Error::UnknownSignal(id.to_string()));
                }
            }
            if a == b {
                return Err(Error::SelfPair(a.to_string()));
            }
        }
        Ok(PreferenceDataset { signals, pairs })
    }

    pub fn signals(&self) -> &'a [Signal] {
        self.signals
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// The pairs at the given positions, over the same store.
    pub fn subset(&self, positions: &[usize]) -> Self {
        PreferenceDataset {
            signals: self.signals,
            pairs: positions.iter().map(|&i| self.pairs[i]).collect(),
        }
    }
}

/// Solver settings.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnConfig {
    pub n_samples: usize,
    pub margin_fraction: f64,
    /// Logistic steepness of the surrogate loss.
    pub m: f64,
    /// Margin shift of the surrogate loss.
    pub epsilon: f64,
    /// Regularizer strength.
    pub theta: f64,
    pub beta: f64,
    pub inf_sentinel: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub loss_tol: f64,
    pub restarts: usize,
    pub max_iters: usize,
    /// Lower bound weights are projected onto after each step.
    pub w_floor: f64,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            n_samples: 1000,
            margin_fraction: 0.05,
            m: 1e3,
            epsilon: 0.01,
            theta: 0.01,
            beta: 1e10,
            inf_sentinel: crate::robustness::DEFAULT_INF_SENTINEL,
            learning_rate: 1e-5,
            batch_size: 5,
            loss_tol: 1e-6,
            restarts: 11,
            max_iters: 5000,
            w_floor: 1e-6,
        }
    }
}

impl LearnConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("m", self.m),
            ("epsilon", self.epsilon),
            ("theta", self.theta),
            ("beta", self.beta),
            ("inf_sentinel", self.inf_sentinel),
            ("learning_rate", self.learning_rate),
            ("loss_tol", self.loss_tol),
            ("w_floor", self.w_floor),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        let counts = [
            ("n_samples", self.n_samples),
            ("batch_size", self.batch_size),
            ("restarts", self.restarts),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if !(0.0..1.0).contains(&self.margin_fraction) {
            return Err(Error::InvalidConfig(format!(
                "margin_fraction must lie in [0, 1), got {}",
                self.margin_fraction
            )));
        }
        Ok(())
    }

    pub fn soft(&self) -> crate::SoftConfig {
        crate::SoftConfig {
            beta: self.beta,
            inf_sentinel: self.inf_sentinel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    RandomSampling,
    Gradient,
    StlBaseline,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::RandomSampling => "random_sampling",
            SolverKind::Gradient => "gradient",
            SolverKind::StlBaseline => "stl_baseline",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "random_sampling" => Some(SolverKind::RandomSampling),
            "gradient" => Some(SolverKind::Gradient),
            "stl_baseline" => Some(SolverKind::StlBaseline),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    /// Descent steps of the selected restart, or valuations drawn.
    pub iterations: usize,
    /// Full-dataset surrogate loss at the selected restart's start.
    pub initial_loss: Option<f64>,
    /// Full-dataset surrogate loss of the selected restart's best iterate.
    pub final_loss: Option<f64>,
    pub restart: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnResult {
    pub valuation: WeightValuation,
    pub satisfied_pairs: usize,
    pub margin_satisfied_pairs: usize,
    pub mean_margin: f64,
    pub total_pairs: usize,
    pub solver: SolverKind,
    pub diagnostics: Diagnostics,
}

impl LearnResult {
    pub fn accuracy(&self) -> f64 {
        if self.total_pairs == 0 {
            0.0
        } else {
            self.satisfied_pairs as f64 / self.total_pairs as f64
        }
    }

    fn from_stats(
        valuation: WeightValuation,
        stats: PairStats,
        solver: SolverKind,
        diagnostics: Diagnostics,
    ) -> Self {
        LearnResult {
            valuation,
            satisfied_pairs: stats.satisfied,
            margin_satisfied_pairs: stats.margin_satisfied,
            mean_margin: stats.mean_margin,
            total_pairs: stats.total,
            solver,
            diagnostics,
        }
    }
}

/// Number of pairs with `r(preferred) > r(rejected)` at `t = 0`.
pub fn count_satisfied(dataset: &PreferenceDataset<'_>, phi: &Formula, w: &WeightValuation) -> Result<usize> {
    Ok(pair_stats(dataset, phi, w, 0.0)?.satisfied)
}

/// Satisfied and margin-satisfied counts of a valuation.
pub fn pair_stats(
    dataset: &PreferenceDataset<'_>,
    phi: &Formula,
    w: &WeightValuation,
    margin_fraction: f64,
) -> Result<PairStats> {
    let problem = Problem::new(dataset, phi)?;
    let flat = problem.table.flatten(w)?;
    Ok(problem.stats(&flat, margin_fraction))
}

/// The unit-weight (traditional STL) valuation scored on `dataset`.
pub fn stl_baseline(
    dataset: &PreferenceDataset<'_>,
    phi: &Formula,
    cfg: &LearnConfig,
) -> Result<LearnResult> {
    let problem = Problem::new(dataset, phi)?;
    let flat = problem.table.filled(1.0);
    let stats = problem.stats(&flat, cfg.margin_fraction);
    Ok(LearnResult::from_stats(
        problem.table.valuation(&flat),
        stats,
        SolverKind::StlBaseline,
        Diagnostics::default(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preference {
    First,
    Second,
    Tie,
}

/// Compares the weighted robustness of two signals at `t = 0`; differences
/// of at most `margin` are ties.
pub fn predict(
    phi: &Formula,
    w: &WeightValuation,
    s1: &Signal,
    s2: &Signal,
    margin: f64,
) -> Result<Preference> {
    let r1 = wstl_robustness(s1, phi, w, 0)?;
    let r2 = wstl_robustness(s2, phi, w, 0)?;
    Ok(compare(r1, r2, margin))
}

pub(crate) fn compare(r1: f64, r2: f64, margin: f64) -> Preference {
    if r1 == r2 {
        return Preference::Tie;
    }
    // Infinite differences are never within the margin.
    let d = r1 - r2;
    if d > margin {
        Preference::First
    } else if d < -margin {
        Preference::Second
    } else {
        Preference::Tie
    }
}

#[cfg(test)]
mod tests;
