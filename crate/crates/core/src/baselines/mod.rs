//! Baselines and evaluation: Fourier features, the Bradley-Terry model,
//! train/test splits, accuracy, and the safe-versus-unsafe preference test.

mod bt;
mod features;

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use bt::{bt_fit, bt_fit_traced, bt_nll, bt_predict, bt_probability, bt_step, BTModel, BtConfig};
pub use features::{feature_vector, FeatureVector, NUM_BINS, NUM_FEATURES};

use crate::formula::{Formula, SlotTable, WeightValuation};
use crate::learn::{
    gradient_solve, random_sampling_solve, stl_baseline, LearnConfig, Preference, PreferenceDataset,
};
use crate::math;
use crate::robustness::ComputationGraph;
use crate::signal::Signal;
use crate::{Error, Result};

/// Anything that can choose between two signals.
pub trait Predictor {
    fn predict(&self, s1: &Signal, s2: &Signal) -> Result<Preference>;
}

impl<F> Predictor for F
where
    F: Fn(&Signal, &Signal) -> Result<Preference>,
{
    fn predict(&self, s1: &Signal, s2: &Signal) -> Result<Preference> {
        self(s1, s2)
    }
}

/// Weighted-robustness predictor at `t = 0`.
#[derive(Debug, Clone)]
pub struct WstlPredictor {
    phi: Formula,
    valuation: WeightValuation,
    margin: f64,
}

impl WstlPredictor {
    pub fn new(phi: Formula, valuation: WeightValuation) -> Self {
        WstlPredictor {
            phi,
            valuation,
            margin: 0.0,
        }
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn robustness(&self, s: &Signal) -> Result<f64> {
        let table = SlotTable::new(&self.phi, Some(s.t_final()))?;
        let flat = table.flatten(&self.valuation)?;
        ComputationGraph::build(&self.phi, &table, s, 0)?.robustness(&flat, 0)
    }
}

impl Predictor for WstlPredictor {
    fn predict(&self, s1: &Signal, s2: &Signal) -> Result<Preference> {
        Ok(crate::learn::compare(
            self.robustness(s1)?,
            self.robustness(s2)?,
            self.margin,
        ))
    }
}

impl Predictor for BTModel {
    fn predict(&self, s1: &Signal, s2: &Signal) -> Result<Preference> {
        bt_predict(self, s1, s2)
    }
}

/// Fraction of pairs for which the predictor picks the preferred signal
/// (given first). An empty set scores 0.
pub fn accuracy<P: Predictor + ?Sized>(predictor: &P, dataset: &PreferenceDataset<'_>) -> Result<f64> {
    if dataset.is_empty() {
        return Ok(0.0);
    }
    let signals = dataset.signals();
    let mut hits = 0;
    for &(a, b) in dataset.pairs() {
        if predictor.predict(&signals[a], &signals[b])? == Preference::First {
            hits += 1;
        }
    }
    Ok(hits as f64 / dataset.len() as f64)
}

/// Forms `n_pairs` random (satisfying, violating) pairs, satisfying signal
/// first, and returns the fraction where the predictor picks it.
pub fn safety_eval<P: Predictor + ?Sized, R: RngCore + ?Sized>(
    predictor: &P,
    satisfying: &[Signal],
    violating: &[Signal],
    n_pairs: usize,
    rng: &mut R,
) -> Result<f64> {
    if satisfying.is_empty() || violating.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if n_pairs == 0 {
        return Ok(0.0);
    }
    let mut hits = 0;
    for _ in 0..n_pairs {
        let s = &satisfying[rng.gen_range(0..satisfying.len())];
        let v = &violating[rng.gen_range(0..violating.len())];
        if predictor.predict(s, v)? == Preference::First {
            hits += 1;
        }
    }
    Ok(hits as f64 / n_pairs as f64)
}

/// One train/test partition of pair positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Seed of the shuffle that produced this split.
    pub seed: u64,
}

/// `n_splits` independent shuffles of `0..n`, each cut after
/// `round(ratio·n)` positions.
pub fn make_splits<R: RngCore + ?Sized>(
    n: usize,
    n_splits: usize,
    ratio: f64,
    rng: &mut R,
) -> Result<Vec<Split>> {
    if n < 2 {
        return Err(Error::InvalidConfig(
            "at least two pairs are needed to split".into(),
        ));
    }
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::InvalidConfig("split ratio must lie in [0, 1]".into()));
    }
    let cut = (math::round(ratio * n as f64) as usize).min(n);
    Ok((0..n_splits)
        .map(|_| {
            let seed = rng.next_u64();
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let test = order.split_off(cut);
            Split {
                train: order,
                test,
                seed,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Unit weights (traditional robustness).
    Stl,
    RandomSampling,
    Gradient,
    BradleyTerry,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Stl => "STL",
            Method::RandomSampling => "WSTL-RS",
            Method::Gradient => "WSTL-GB",
            Method::BradleyTerry => "BT",
        }
    }
}

/// Train and test accuracy of one method on every split.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodScores {
    pub method: Method,
    pub train: Vec<f64>,
    pub test: Vec<f64>,
}

impl MethodScores {
    pub fn mean_train(&self) -> f64 {
        mean(&self.train)
    }

    pub fn mean_test(&self) -> f64 {
        mean(&self.test)
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Settings of the split protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    pub methods: Vec<Method>,
    pub n_splits: usize,
    pub ratio: f64,
    pub learn: LearnConfig,
    pub bt: BtConfig,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            methods: alloc::vec![
                Method::Stl,
                Method::RandomSampling,
                Method::Gradient,
                Method::BradleyTerry
            ],
            n_splits: 10,
            ratio: 0.7,
            learn: LearnConfig::default(),
            bt: BtConfig::default(),
        }
    }
}

/// Fits every method on each split's training pairs (selection sees
/// training data only) and scores it on both halves.
pub fn cross_validate<R: RngCore + ?Sized>(
    dataset: &PreferenceDataset<'_>,
    phi: &Formula,
    protocol: &Protocol,
    rng: &mut R,
) -> Result<Vec<MethodScores>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let splits = make_splits(dataset.len(), protocol.n_splits, protocol.ratio, rng)?;
    let mut scores: Vec<MethodScores> = protocol
        .methods
        .iter()
        .map(|&method| MethodScores {
            method,
            train: Vec::new(),
            test: Vec::new(),
        })
        .collect();
    let phi_stl = phi.unpinned();
    for split in &splits {
        let train = dataset.subset(&split.train);
        let test = dataset.subset(&split.test);
        let mut split_rng = ChaCha8Rng::seed_from_u64(split.seed);
        for entry in scores.iter_mut() {
            let predictor: alloc::boxed::Box<dyn Predictor> = match entry.method {
                Method::Stl => alloc::boxed::Box::new(WstlPredictor::new(
                    phi.clone(),
                    stl_baseline(&train, phi, &protocol.learn)?.valuation,
                )),
                Method::RandomSampling => alloc::boxed::Box::new(WstlPredictor::new(
                    phi.clone(),
                    random_sampling_solve(&train, phi, &protocol.learn, &mut split_rng)?.valuation,
                )),
                Method::Gradient => alloc::boxed::Box::new(WstlPredictor::new(
                    phi.clone(),
                    gradient_solve(&train, phi, &protocol.learn, &mut split_rng)?.valuation,
                )),
                Method::BradleyTerry => {
                    alloc::boxed::Box::new(bt_fit(&train, &phi_stl, &protocol.bt, &mut split_rng)?)
                }
            };
            entry.train.push(accuracy(predictor.as_ref(), &train)?);
            entry.test.push(accuracy(predictor.as_ref(), &test)?);
        }
    }
    Ok(scores)
}
