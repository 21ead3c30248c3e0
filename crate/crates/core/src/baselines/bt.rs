use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::RngCore;

use super::features::{feature_vector, FeatureVector, NUM_FEATURES};
use crate::formula::Formula;
use crate::learn::{Preference, PreferenceDataset};
use crate::math;
use crate::signal::Signal;
use crate::{Error, Result};

/// Bradley-Terry fitting settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BtConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Use one full-batch gradient step per epoch instead of per-pair SGD.
    pub full_batch: bool,
}

impl Default for BtConfig {
    fn default() -> Self {
        BtConfig {
            learning_rate: 0.1,
            epochs: 200,
            full_batch: false,
        }
    }
}

/// Linear utility over standardized features:
/// `P(s⁺ ≻ s⁻) = e^{⟨v,ψ⁺⟩} / (e^{⟨v,ψ⁺⟩} + e^{⟨v,ψ⁻⟩})`.
#[derive(Debug, Clone, PartialEq)]
pub struct BTModel {
    pub v: FeatureVector,
    pub mean: FeatureVector,
    pub std: FeatureVector,
    pub phi_stl: Formula,
}

impl BTModel {
    pub fn standardize(&self, raw: &FeatureVector) -> FeatureVector {
        let mut out = [0.0; NUM_FEATURES];
        for i in 0..NUM_FEATURES {
            out[i] = (raw[i] - self.mean[i]) / self.std[i];
        }
        out
    }

    pub fn utility(&self, s: &Signal) -> Result<f64> {
        Ok(dot(
            &self.v,
            &self.standardize(&feature_vector(s, &self.phi_stl)?),
        ))
    }
}

fn dot(a: &FeatureVector, b: &FeatureVector) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn diff(a: &FeatureVector, b: &FeatureVector) -> FeatureVector {
    let mut d = [0.0; NUM_FEATURES];
    for i in 0..NUM_FEATURES {
        d[i] = a[i] - b[i];
    }
    d
}

/// Probability the model assigns to `plus ≻ minus`, given standardized
/// features.
pub fn bt_probability(v: &FeatureVector, plus: &FeatureVector, minus: &FeatureVector) -> f64 {
    math::inv_one_plus_exp(-dot(v, &diff(plus, minus)))
}

/// One stochastic ascent step on `ln P(plus ≻ minus)`.
pub fn bt_step(v: &mut FeatureVector, plus: &FeatureVector, minus: &FeatureVector, lr: f64) {
    let p = bt_probability(v, plus, minus);
    let d = diff(plus, minus);
    for i in 0..NUM_FEATURES {
        v[i] += lr * (1.0 - p) * d[i];
    }
}

/// Mean negative log-likelihood of `pairs` over standardized features.
pub fn bt_nll(v: &FeatureVector, pairs: &[(FeatureVector, FeatureVector)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let total: f64 = pairs
        .iter()
        .map(|(p, m)| {
            // -ln σ(z) = ln(1 + e^{-z})
            let z = dot(v, &diff(p, m));
            (-z).max(0.0) + math::ln_1p(math::exp(-math::abs(z)))
        })
        .sum();
    total / pairs.len() as f64
}

/// Fits a Bradley-Terry model; see [`bt_fit_traced`].
pub fn bt_fit<R: RngCore + ?Sized>(
    dataset: &PreferenceDataset<'_>,
    phi_stl: &Formula,
    cfg: &BtConfig,
    rng: &mut R,
) -> Result<BTModel> {
    Ok(bt_fit_traced(dataset, phi_stl, cfg, rng)?.0)
}

/// Fits a Bradley-Terry model from `v = 0` and returns the mean negative
/// log-likelihood after each epoch. Features are standardized with the
/// mean and standard deviation over the distinct training signals; a zero
/// deviation is replaced by one.
pub fn bt_fit_traced<R: RngCore + ?Sized>(
    dataset: &PreferenceDataset<'_>,
    phi_stl: &Formula,
    cfg: &BtConfig,
    rng: &mut R,
) -> Result<(BTModel, Vec<f64>)> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::InvalidConfig("learning_rate must be positive".into()));
    }
    let mut raw = BTreeMap::new();
    for &(a, b) in dataset.pairs() {
        for id in [a, b] {
            if let alloc::collections::btree_map::Entry::Vacant(e) = raw.entry(id) {
                e.insert(feature_vector(&dataset.signals()[id], phi_stl)?);
            }
        }
    }
    let n = raw.len() as f64;
    let mut mean = [0.0; NUM_FEATURES];
    let mut std = [0.0; NUM_FEATURES];
    for f in raw.values() {
        for i in 0..NUM_FEATURES {
            mean[i] += f[i] / n;
        }
    }
    for f in raw.values() {
        for i in 0..NUM_FEATURES {
            std[i] += (f[i] - mean[i]) * (f[i] - mean[i]) / n;
        }
    }
    for s in std.iter_mut() {
        *s = math::sqrt(*s);
        if !(*s > 1e-12) {
            *s = 1.0;
        }
    }
    let mut model = BTModel {
        v: [0.0; NUM_FEATURES],
        mean,
        std,
        phi_stl: phi_stl.clone(),
    };
    let pairs: Vec<(FeatureVector, FeatureVector)> = dataset
        .pairs()
        .iter()
        .map(|(a, b)| (model.standardize(&raw[a]), model.standardize(&raw[b])))
        .collect();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        if cfg.full_batch {
            let mut g = [0.0; NUM_FEATURES];
            for (p, m) in &pairs {
                let prob = bt_probability(&model.v, p, m);
                let d = diff(p, m);
                for i in 0..NUM_FEATURES {
                    g[i] += (1.0 - prob) * d[i] / pairs.len() as f64;
                }
            }
            for (v, g) in model.v.iter_mut().zip(&g) {
                *v += cfg.learning_rate * g;
            }
        } else {
            order.shuffle(rng);
            for &k in &order {
                let (p, m) = &pairs[k];
                bt_step(&mut model.v, p, m, cfg.learning_rate);
            }
        }
        history.push(bt_nll(&model.v, &pairs));
    }
    Ok((model, history))
}

/// `First` iff the first signal has strictly higher utility; ties go to
/// the second.
pub fn bt_predict(model: &BTModel, s1: &Signal, s2: &Signal) -> Result<Preference> {
    Ok(if model.utility(s1)? > model.utility(s2)? {
        Preference::First
    } else {
        Preference::Second
    })
}
