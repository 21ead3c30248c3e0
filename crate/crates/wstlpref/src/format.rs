//! Versioned JSON documents.
//!
//! Non-finite reals are written as the strings `"inf"`, `"-inf"` and `"nan"`
//! since JSON numbers cannot carry them.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use wstlpref_core::learn::{Diagnostics, LearnResult, SolverKind};
use wstlpref_core::{Channel, Formula, Signal, SlotId, WeightValuation};

use crate::error::{Error, Result};
use crate::store::{Document, FORMAT_VERSION};

/// Serde adapter for a single extended real.
pub mod real {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    struct RealVisitor;

    impl Visitor<'_> for RealVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(RealVisitor)
    }
}

/// Serde adapter for a vector of extended reals.
pub mod reals {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct R(#[serde(with = "super::real")] f64);

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| R(*x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<R>::deserialize(d)?.into_iter().map(|r| r.0).collect())
    }
}

/// Serde adapter for an optional extended real.
pub mod opt_real {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct R(#[serde(with = "super::real")] f64);

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.map(R).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<R>::deserialize(d)?.map(|r| r.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelRecord {
    pub name: String,
    /// `"real"` or `"boolean"`.
    pub kind: String,
    #[serde(with = "reals")]
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalRecord {
    pub id: String,
    pub dt: f64,
    pub channels: Vec<ChannelRecord>,
}

impl SignalRecord {
    pub fn from_signal(id: impl Into<String>, s: &Signal) -> Self {
        SignalRecord {
            id: id.into(),
            dt: s.dt(),
            channels: s
                .channels()
                .iter()
                .map(|c| ChannelRecord {
                    name: c.name.clone(),
                    kind: c.kind.as_str().to_owned(),
                    samples: s.channel(&c.name).expect("channel exists").to_vec(),
                })
                .collect(),
        }
    }

    pub fn to_signal(&self) -> std::result::Result<Signal, String> {
        let mut channels = Vec::with_capacity(self.channels.len());
        let mut samples = Vec::with_capacity(self.channels.len());
        for c in &self.channels {
            let ch = match c.kind.as_str() {
                "real" => Channel::real(c.name.clone()),
                "boolean" => Channel::boolean(c.name.clone()),
                other => return Err(format!("channel `{}` has unknown kind `{other}`", c.name)),
            };
            channels.push(ch);
            samples.push(c.samples.clone());
        }
        Signal::new(self.dt, channels, samples).map_err(|e| format!("signal `{}`: {e}", self.id))
    }
}

/// A set of signals, usually produced by one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetFile {
    pub kind: String,
    pub version: u32,
    /// `"stop"`, `"pedestrian"`, or absent for imported data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    /// Position of the stop line or crosswalk, for display.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marker: Option<f64>,
    /// Rule the signals were generated against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
    pub signals: Vec<SignalRecord>,
}

impl Document for DatasetFile {
    const KIND: &'static str = "dataset";
}

impl DatasetFile {
    pub fn new(signals: Vec<SignalRecord>) -> Self {
        DatasetFile {
            kind: Self::KIND.to_owned(),
            version: FORMAT_VERSION,
            scenario: None,
            marker: None,
            formula: None,
            signals,
        }
    }

    /// Decodes every signal and checks that ids are unique.
    pub fn decode(&self, path: &Path) -> Result<LoadedDataset> {
        let mut index = HashMap::with_capacity(self.signals.len());
        let mut signals = Vec::with_capacity(self.signals.len());
        for (i, rec) in self.signals.iter().enumerate() {
            if index.insert(rec.id.clone(), i).is_some() {
                return Err(Error::format(path, format!("duplicate signal id `{}`", rec.id)));
            }
            signals.push(rec.to_signal().map_err(|m| Error::format(path, m))?);
        }
        Ok(LoadedDataset {
            ids: self.signals.iter().map(|r| r.id.clone()).collect(),
            index,
            signals,
        })
    }

    pub fn formula(&self, path: &Path) -> Result<Formula> {
        let text = self
            .formula
            .as_deref()
            .ok_or_else(|| Error::format(path, "dataset carries no formula; pass one explicitly"))?;
        Ok(wstlpref_core::formula::parse(text)?)
    }
}

/// Decoded signals with an id lookup.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub ids: Vec<String>,
    pub index: HashMap<String, usize>,
    pub signals: Vec<Signal>,
}

impl LoadedDataset {
    pub fn position(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::Core(wstlpref_core::Error::UnknownSignal(id.to_owned())))
    }

    /// Common `t_final` of the signals, required by unbounded formulas.
    pub fn horizon(&self) -> Result<usize> {
        let first = self
            .signals
            .first()
            .ok_or_else(|| Error::Invalid("dataset has no signals".to_owned()))?
            .t_final();
        if self.signals.iter().any(|s| s.t_final() != first) {
            return Err(Error::Invalid(
                "signals in the dataset differ in length".to_owned(),
            ));
        }
        Ok(first)
    }
}

/// Provenance of a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub kind: String,
    pub version: u32,
    pub scenario: String,
    pub dataset: String,
    pub spec: serde_json::Value,
    pub seed: u64,
    pub n: usize,
    pub satisfying: bool,
    pub draws: usize,
    pub acceptance_rate: f64,
}

impl Document for Manifest {
    const KIND: &'static str = "manifest";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairRecord {
    pub first: String,
    pub second: String,
    pub distance: f64,
}

/// Unordered comparison pairs over a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairsFile {
    pub kind: String,
    pub version: u32,
    pub dataset: String,
    pub threshold: f64,
    pub channels: Vec<String>,
    pub pairs: Vec<PairRecord>,
}

impl Document for PairsFile {
    const KIND: &'static str = "pairs";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreferenceRecord {
    pub preferred: String,
    pub rejected: String,
}

/// Ordered pairs, each `(preferred, rejected)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreferenceFile {
    pub kind: String,
    pub version: u32,
    pub dataset: String,
    pub pairs: Vec<PreferenceRecord>,
}

impl Document for PreferenceFile {
    const KIND: &'static str = "preferences";
}

impl PreferenceFile {
    pub fn new(dataset: String, pairs: Vec<PreferenceRecord>) -> Self {
        PreferenceFile {
            kind: Self::KIND.to_owned(),
            version: FORMAT_VERSION,
            dataset,
            pairs,
        }
    }

    /// Index pairs into `data`.
    pub fn index_pairs(&self, data: &LoadedDataset) -> Result<Vec<(usize, usize)>> {
        self.pairs
            .iter()
            .map(|p| Ok((data.position(&p.preferred)?, data.position(&p.rejected)?)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsRecord {
    pub iterations: usize,
    #[serde(with = "opt_real", default)]
    pub initial_loss: Option<f64>,
    #[serde(with = "opt_real", default)]
    pub final_loss: Option<f64>,
    #[serde(default)]
    pub restart: Option<usize>,
}

/// Output of a solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultFile {
    pub kind: String,
    pub version: u32,
    pub solver: String,
    pub formula: String,
    /// Trace horizon the slot layout was built for.
    pub horizon: Option<usize>,
    /// Dataset the valuation was learned on.
    pub dataset: String,
    /// Preference or session file the valuation was learned from.
    pub source: String,
    pub seed: u64,
    pub valuation: BTreeMap<String, f64>,
    pub satisfied_pairs: usize,
    pub margin_satisfied_pairs: usize,
    #[serde(with = "real")]
    pub mean_margin: f64,
    pub total_pairs: usize,
    pub diagnostics: DiagnosticsRecord,
}

impl Document for ResultFile {
    const KIND: &'static str = "result";
}

impl ResultFile {
    pub fn from_result(
        r: &LearnResult,
        phi: &Formula,
        horizon: Option<usize>,
        dataset: String,
        source: String,
        seed: u64,
    ) -> Self {
        let d: &Diagnostics = &r.diagnostics;
        ResultFile {
            kind: Self::KIND.to_owned(),
            version: FORMAT_VERSION,
            solver: r.solver.as_str().to_owned(),
            formula: phi.to_string(),
            horizon,
            dataset,
            source,
            seed,
            valuation: valuation_to_map(&r.valuation),
            satisfied_pairs: r.satisfied_pairs,
            margin_satisfied_pairs: r.margin_satisfied_pairs,
            mean_margin: r.mean_margin,
            total_pairs: r.total_pairs,
            diagnostics: DiagnosticsRecord {
                iterations: d.iterations,
                initial_loss: d.initial_loss,
                final_loss: d.final_loss,
                restart: d.restart,
            },
        }
    }

    pub fn to_result(&self, path: &Path) -> Result<LearnResult> {
        let solver = SolverKind::parse(&self.solver)
            .ok_or_else(|| Error::format(path, format!("unknown solver `{}`", self.solver)))?;
        Ok(LearnResult {
            valuation: map_to_valuation(&self.valuation, path)?,
            satisfied_pairs: self.satisfied_pairs,
            margin_satisfied_pairs: self.margin_satisfied_pairs,
            mean_margin: self.mean_margin,
            total_pairs: self.total_pairs,
            solver,
            diagnostics: Diagnostics {
                iterations: self.diagnostics.iterations,
                initial_loss: self.diagnostics.initial_loss,
                final_loss: self.diagnostics.final_loss,
                restart: self.diagnostics.restart,
            },
        })
    }
}

/// A bare valuation, e.g. the output of `normalize`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsFile {
    pub kind: String,
    pub version: u32,
    pub formula: String,
    pub horizon: Option<usize>,
    pub valuation: BTreeMap<String, f64>,
}

impl Document for WeightsFile {
    const KIND: &'static str = "weights";
}

impl WeightsFile {
    pub fn new(phi: &Formula, horizon: Option<usize>, w: &WeightValuation) -> Self {
        WeightsFile {
            kind: Self::KIND.to_owned(),
            version: FORMAT_VERSION,
            formula: phi.to_string(),
            horizon,
            valuation: valuation_to_map(w),
        }
    }
}

pub fn valuation_to_map(w: &WeightValuation) -> BTreeMap<String, f64> {
    w.iter().map(|(id, v)| (id.to_string(), v)).collect()
}

pub fn map_to_valuation(map: &BTreeMap<String, f64>, path: &Path) -> Result<WeightValuation> {
    map.iter()
        .map(|(k, v)| {
            let id: SlotId = k
                .parse()
                .map_err(|_| Error::format(path, format!("invalid slot id `{k}`")))?;
            Ok((id, *v))
        })
        .collect()
}

/// Formula and valuation from either a result or a weights file.
pub fn load_weights(path: &Path) -> Result<(Formula, WeightValuation)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (formula, map) = match crate::store::parse::<ResultFile>(path, &bytes) {
        Ok(r) => (r.formula, r.valuation),
        Err(Error::Format { .. }) => {
            let w: WeightsFile = crate::store::parse(path, &bytes)?;
            (w.formula, w.valuation)
        }
        Err(e) => return Err(e),
    };
    let phi = wstlpref_core::formula::parse(&formula)?;
    Ok((phi, map_to_valuation(&map, path)?))
}
