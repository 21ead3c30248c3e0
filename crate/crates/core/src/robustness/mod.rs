//! Robustness semantics.
//!
//! * [`rho`]: traditional STL robustness (weights ignored), by recursion.
//! * [`wstl_robustness`]: weighted robustness, where each operand of `&`,
//!   `|`, and each time offset of a temporal window is scaled by its weight
//!   before the `min`/`max`.
//! * [`soft_wstl_robustness`] and [`grad_weights`]: the same recursion with
//!   `min`/`max` replaced by log-sum-exp smoothing, and its exact gradient.
//!
//! Both weighted semantics use the half-open prefix `[t, t')` inside Until,
//! with the minimum over an empty prefix equal to `+∞`.

mod graph;
mod soft;
mod stl;

use alloc::collections::BTreeMap;

pub use graph::{ComputationGraph, NodeId};
pub use soft::{soft_max, soft_min};
pub use stl::rho;

use crate::formula::{Formula, SlotId, SlotTable, WeightValuation};
use crate::signal::Signal;
use crate::{Error, Result};

/// Default value substituted for `±∞` in the smooth path.
pub const DEFAULT_INF_SENTINEL: f64 = 1e6;

/// Smoothing parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftConfig {
    /// Softness coefficient; larger is closer to the hard `min`/`max`.
    pub beta: f64,
    /// Finite stand-in for `+∞` (and its negation for `-∞`).
    pub inf_sentinel: f64,
}

impl SoftConfig {
    pub fn new(beta: f64) -> Self {
        SoftConfig {
            beta,
            inf_sentinel: DEFAULT_INF_SENTINEL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig(alloc::format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if !(self.inf_sentinel > 0.0 && self.inf_sentinel.is_finite()) {
            return Err(Error::InvalidConfig(alloc::format!(
                "inf_sentinel must be positive and finite, got {}",
                self.inf_sentinel
            )));
        }
        Ok(())
    }
}

impl Default for SoftConfig {
    fn default() -> Self {
        SoftConfig::new(1e10)
    }
}

fn prepare(
    s: &Signal,
    phi: &Formula,
    w: &WeightValuation,
    t: usize,
) -> Result<(SlotTable, alloc::vec::Vec<f64>, ComputationGraph)> {
    let table = SlotTable::new(phi, Some(s.t_final()))?;
    let flat = table.flatten(w)?;
    let graph = ComputationGraph::build(phi, &table, s, t)?;
    Ok((table, flat, graph))
}

/// Weighted robustness `r(s, φ_w, t)`.
pub fn wstl_robustness(s: &Signal, phi: &Formula, w: &WeightValuation, t: usize) -> Result<f64> {
    let (_, flat, graph) = prepare(s, phi, w, t)?;
    graph.robustness(&flat, t)
}

/// Smooth weighted robustness.
pub fn soft_wstl_robustness(
    s: &Signal,
    phi: &Formula,
    w: &WeightValuation,
    cfg: &SoftConfig,
    t: usize,
) -> Result<f64> {
    let (_, flat, graph) = prepare(s, phi, w, t)?;
    graph.soft_robustness(&flat, cfg, t)
}

/// Gradient of the smooth weighted robustness with respect to every
/// parameter slot. Slots the evaluation never touches get `0`.
pub fn grad_weights(
    s: &Signal,
    phi: &Formula,
    w: &WeightValuation,
    cfg: &SoftConfig,
    t: usize,
) -> Result<BTreeMap<SlotId, f64>> {
    let (table, flat, graph) = prepare(s, phi, w, t)?;
    let (_, grad) = graph.soft_gradient(&flat, cfg, t)?;
    Ok(table
        .slots()
        .iter()
        .zip(grad)
        .filter(|(slot, _)| slot.is_parameter())
        .map(|(slot, g)| (slot.id.clone(), g))
        .collect())
}
