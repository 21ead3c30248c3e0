use alloc::vec;
use alloc::vec::Vec;

use super::{LearnConfig, PreferenceDataset};
use crate::formula::{Formula, SlotTable, WeightValuation};
use crate::math;
use crate::robustness::ComputationGraph;
use crate::{Error, Result};

/// Agreement of one valuation with a set of pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStats {
    pub total: usize,
    pub satisfied: usize,
    /// Pairs whose margin exceeds `margin_fraction` of the robustness range.
    pub margin_satisfied: usize,
    /// Mean of `r⁺ − r⁻`, with infinite differences clamped to `±range`.
    pub mean_margin: f64,
    /// `max − min` over the finite robustness values of all signals.
    pub range: f64,
}

/// Graphs at `t = 0` for every signal a dataset references, built once and
/// evaluated for many weight vectors.
#[derive(Debug)]
pub(crate) struct Problem {
    pub table: SlotTable,
    pub params: Vec<usize>,
    graphs: Vec<ComputationGraph>,
    /// Pairs as indices into `graphs`.
    pub pairs: Vec<(usize, usize)>,
}

impl Problem {
    pub fn new(dataset: &PreferenceDataset<'_>, phi: &Formula) -> Result<Self> {
        let signals = dataset.signals();
        let horizon = dataset.pairs().first().map(|&(a, _)| signals[a].t_final());
        let table = SlotTable::new(phi, horizon)?;
        let mut local = vec![usize::MAX; signals.len()];
        let mut graphs = Vec::new();
        let mut pairs = Vec::with_capacity(dataset.len());
        for &(a, b) in dataset.pairs() {
            let mut map = |id: usize| -> Result<usize> {
                if local[id] == usize::MAX {
                    graphs.push(ComputationGraph::build(phi, &table, &signals[id], 0)?);
                    local[id] = graphs.len() - 1;
                }
                Ok(local[id])
            };
            let a = map(a)?;
            let b = map(b)?;
            pairs.push((a, b));
        }
        let params = table.parameter_indices();
        Ok(Problem {
            table,
            params,
            graphs,
            pairs,
        })
    }

    pub fn require_learnable(&self) -> Result<()> {
        if self.pairs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if self.params.is_empty() {
            return Err(Error::NoParameters);
        }
        Ok(())
    }

    /// Flat weight vector with the constants filled in and the given
    /// parameter values.
    pub fn flat(&self, params: &[f64]) -> Vec<f64> {
        let mut flat = self.table.filled(1.0);
        self.table.scatter_parameters(params, &mut flat);
        flat
    }

    pub fn params_of(&self, flat: &[f64]) -> Vec<f64> {
        self.params.iter().map(|&i| flat[i]).collect()
    }

    pub fn hard_values(&self, flat: &[f64]) -> Vec<f64> {
        self.graphs
            .iter()
            .map(|g| g.robustness(flat, 0).expect("graph built at t = 0"))
            .collect()
    }

    pub fn stats(&self, flat: &[f64], margin_fraction: f64) -> PairStats {
        stats_of(&self.hard_values(flat), &self.pairs, margin_fraction)
    }

    fn soft_values(&self, flat: &[f64], cfg: &LearnConfig) -> Result<Vec<f64>> {
        let soft = cfg.soft();
        self.graphs
            .iter()
            .map(|g| g.soft_robustness(flat, &soft, 0))
            .collect()
    }

    /// Surrogate loss over the pairs at `batch` positions (all pairs when
    /// `None`).
    pub fn loss(
        &self,
        params: &[f64],
        init_sq_norm: f64,
        batch: Option<&[usize]>,
        cfg: &LearnConfig,
    ) -> Result<f64> {
        let values = self.soft_values(&self.flat(params), cfg)?;
        let term =
            |&(a, b): &(usize, usize)| math::inv_one_plus_exp(cfg.m * (values[a] - values[b] - cfg.epsilon));
        let data: f64 = match batch {
            Some(idx) => idx.iter().map(|&i| term(&self.pairs[i])).sum(),
            None => self.pairs.iter().map(term).sum(),
        };
        Ok(data + regularizer(params, init_sq_norm, cfg.theta).0)
    }

    /// Gradient of the batch loss with respect to the parameters.
    pub fn loss_gradient(
        &self,
        params: &[f64],
        init_sq_norm: f64,
        batch: &[usize],
        cfg: &LearnConfig,
    ) -> Result<Vec<f64>> {
        let flat = self.flat(params);
        let soft = cfg.soft();
        let mut grad_flat = vec![0.0; flat.len()];
        for &i in batch {
            let (a, b) = self.pairs[i];
            let (ra, ga) = self.graphs[a].soft_gradient(&flat, &soft, 0)?;
            let (rb, gb) = self.graphs[b].soft_gradient(&flat, &soft, 0)?;
            let s = math::inv_one_plus_exp(cfg.m * (ra - rb - cfg.epsilon));
            // d/dd (1 + e^{M(d-ε)})^{-1} = -M s (1 - s)
            let dd = -cfg.m * s * (1.0 - s);
            if dd != 0.0 {
                for ((g, x), y) in grad_flat.iter_mut().zip(&ga).zip(&gb) {
                    *g += dd * (x - y);
                }
            }
        }
        let (_, dreg) = regularizer(params, init_sq_norm, cfg.theta);
        Ok(self
            .params
            .iter()
            .zip(params)
            .map(|(&i, w)| grad_flat[i] + dreg * 2.0 * w)
            .collect())
    }
}

/// `ln(1 + θ·exp(‖w‖² − ‖w₀‖²))` and its derivative with respect to `‖w‖²`.
fn regularizer(params: &[f64], init_sq_norm: f64, theta: f64) -> (f64, f64) {
    let sq: f64 = params.iter().map(|w| w * w).sum();
    let z = sq - init_sq_norm + math::ln(theta);
    (softplus(z), math::inv_one_plus_exp(-z))
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + math::ln_1p(math::exp(-math::abs(z)))
}

pub(crate) fn stats_of(values: &[f64], pairs: &[(usize, usize)], margin_fraction: f64) -> PairStats {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values.iter().filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let range = if hi >= lo { hi - lo } else { 0.0 };
    let mut satisfied = 0;
    let mut margin_satisfied = 0;
    let mut margin_sum = 0.0;
    for &(a, b) in pairs {
        let (ra, rb) = (values[a], values[b]);
        if ra > rb {
            satisfied += 1;
        }
        let d = if ra.is_finite() && rb.is_finite() {
            if ra - rb > margin_fraction * range {
                margin_satisfied += 1;
            }
            ra - rb
        } else if ra > rb {
            margin_satisfied += 1;
            range
        } else if ra < rb {
            -range
        } else {
            0.0
        };
        margin_sum += d;
    }
    PairStats {
        total: pairs.len(),
        satisfied,
        margin_satisfied,
        mean_margin: if pairs.is_empty() {
            0.0
        } else {
            margin_sum / pairs.len() as f64
        },
        range,
    }
}

/// Surrogate loss of `w` on `batch`: the logistic penalty on each pair's
/// smooth robustness margin plus the norm-drift regularizer against the
/// starting valuation `w_init`.
pub fn surrogate_loss(
    batch: &PreferenceDataset<'_>,
    phi: &Formula,
    w: &WeightValuation,
    w_init: &WeightValuation,
    cfg: &LearnConfig,
) -> Result<f64> {
    let problem = Problem::new(batch, phi)?;
    let params = problem.params_of(&problem.table.flatten(w)?);
    let init = problem.params_of(&problem.table.flatten(w_init)?);
    let init_sq: f64 = init.iter().map(|w| w * w).sum();
    problem.loss(&params, init_sq, None, cfg)
}
