//! Driving-rule scenarios: formulas, kinematic trajectory generators,
//! rejection-sampled datasets, and preference-pair construction.

mod pedestrian;
mod stop;

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, RngCore};

pub use pedestrian::{pedestrian_formula, PedestrianParams, PedestrianSpec};
pub use stop::{stop_sign_formula, StopParams, StopSignSpec};

use crate::formula::{Formula, SlotTable};
use crate::robustness::ComputationGraph;
use crate::signal::Signal;
use crate::{Error, Result};

/// Tolerance used to build the Boolean "stopped" channel from the speed.
pub const STOPPED_EQ_TOL: f64 = 1e-9;

/// Closed interval of reals to sample from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub min: f64,
    pub max: f64,
}

impl Span {
    pub const fn new(min: f64, max: f64) -> Self {
        Span { min, max }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.min <= x && x <= self.max
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.min.is_finite() && self.max.is_finite() && self.min <= self.max {
            Ok(())
        } else {
            Err(Error::InvalidConfig(alloc::format!(
                "{name}: empty range [{}, {}]",
                self.min,
                self.max
            )))
        }
    }

    fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.min == self.max {
            self.min
        } else {
            rng.gen_range(self.min..=self.max)
        }
    }
}

/// Closed interval of step counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepSpan {
    pub min: usize,
    pub max: usize,
}

impl StepSpan {
    pub const fn new(min: usize, max: usize) -> Self {
        StepSpan { min, max }
    }

    pub fn contains(&self, k: usize) -> bool {
        self.min <= k && k <= self.max
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.min <= self.max {
            Ok(())
        } else {
            Err(Error::InvalidConfig(alloc::format!(
                "{name}: empty range [{}, {}]",
                self.min,
                self.max
            )))
        }
    }

    fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> usize {
        rng.gen_range(self.min..=self.max)
    }
}

fn check(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::ParamsOutOfRange(String::from(what)))
    }
}

/// A rule, a parameter distribution, and a trajectory generator.
#[allow(clippy::len_without_is_empty)]
pub trait Scenario {
    type Params;

    fn validate(&self) -> Result<()>;
    /// Number of samples per trajectory.
    fn len(&self) -> usize;
    fn formula(&self) -> Formula;
    fn sample_params<R: RngCore + ?Sized>(&self, rng: &mut R) -> Self::Params;
    /// Deterministic trajectory for the given parameters.
    fn generate(&self, params: &Self::Params) -> Result<Signal>;
}

/// Generated signals plus the rejection-sampling bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedDataset {
    pub signals: Vec<Signal>,
    pub draws: usize,
}

impl GeneratedDataset {
    pub fn acceptance_rate(&self) -> f64 {
        self.signals.len() as f64 / self.draws as f64
    }
}

const ACCEPTANCE_CHECK_DRAWS: usize = 100_000;
const MIN_ACCEPTANCE: f64 = 0.01;

/// Unit-weight robustness at `t = 0` of a scenario formula.
pub fn rule_robustness(phi: &Formula, s: &Signal) -> Result<f64> {
    let table = SlotTable::new(phi, Some(s.t_final()))?;
    ComputationGraph::build(phi, &table, s, 0)?.robustness(&table.filled(1.0), 0)
}

/// Draws trajectories until `n` of them strictly satisfy (or strictly
/// violate) the scenario rule.
pub fn generate_dataset<S: Scenario, R: RngCore + ?Sized>(
    spec: &S,
    n: usize,
    satisfying: bool,
    rng: &mut R,
) -> Result<GeneratedDataset> {
    if n == 0 {
        return Err(Error::InvalidConfig(String::from("n must be positive")));
    }
    spec.validate()?;
    let phi = spec.formula();
    let mut signals = Vec::with_capacity(n);
    let mut draws = 0;
    while signals.len() < n {
        if draws >= ACCEPTANCE_CHECK_DRAWS && (signals.len() as f64) < MIN_ACCEPTANCE * draws as f64 {
            return Err(Error::LowAcceptance {
                accepted: signals.len(),
                draws,
            });
        }
        draws += 1;
        let s = spec.generate(&spec.sample_params(rng))?;
        let r = rule_robustness(&phi, &s)?;
        if (satisfying && r > 0.0) || (!satisfying && r < 0.0) {
            signals.push(s);
        }
    }
    Ok(GeneratedDataset { signals, draws })
}

/// An unordered pair of signal indices and their distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPair {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSet {
    pub pairs: Vec<ScoredPair>,
    pub threshold: f64,
    pub channels: Vec<String>,
}

/// Picks `n_pairs` distinct unordered pairs whose Euclidean distance over
/// `channels` strictly exceeds `threshold`, uniformly among all such pairs.
pub fn build_pairs<S: AsRef<str>, R: RngCore + ?Sized>(
    signals: &[Signal],
    n_pairs: usize,
    threshold: f64,
    channels: &[S],
    rng: &mut R,
) -> Result<PairSet> {
    let mut candidates = Vec::new();
    for a in 0..signals.len() {
        for b in a + 1..signals.len() {
            let distance = signals[a].euclidean_distance(&signals[b], channels)?;
            if distance > threshold {
                candidates.push(ScoredPair { a, b, distance });
            }
        }
    }
    if candidates.len() < n_pairs {
        return Err(Error::InfeasiblePairs {
            requested: n_pairs,
            available: candidates.len(),
            threshold,
        });
    }
    let pairs = index::sample(rng, candidates.len(), n_pairs)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    Ok(PairSet {
        pairs,
        threshold,
        channels: channels.iter().map(|c| String::from(c.as_ref())).collect(),
    })
}

/// Integrates one step of constant deceleration `decel` from speed `v`,
/// stopping at `floor`. Returns the distance covered and the new speed.
fn brake_step(v: f64, decel: f64, floor: f64, dt: f64) -> (f64, f64) {
    if v <= floor {
        return (v * dt, v);
    }
    let v_next = v - decel * dt;
    if v_next >= floor {
        (v * dt - 0.5 * decel * dt * dt, v_next)
    } else {
        let tau = (v - floor) / decel;
        (v * tau - 0.5 * decel * tau * tau + floor * (dt - tau), floor)
    }
}

/// Same as [`brake_step`] but accelerating towards a ceiling.
fn accel_step(v: f64, accel: f64, ceiling: f64, dt: f64) -> (f64, f64) {
    if v >= ceiling || accel == 0.0 {
        return (v * dt, v);
    }
    let v_next = v + accel * dt;
    if v_next <= ceiling {
        (v * dt + 0.5 * accel * dt * dt, v_next)
    } else {
        let tau = (ceiling - v) / accel;
        (v * tau + 0.5 * accel * tau * tau + ceiling * (dt - tau), ceiling)
    }
}
