//! Elicitation sessions: one participant answering every pair of a pair set.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{DatasetFile, LoadedDataset, PairsFile, PreferenceFile, PreferenceRecord};
use crate::store::{self, Document, FORMAT_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    First,
    Second,
    Unanswered,
}

/// Screen position of a signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Session {
    pub kind: String,
    pub version: u32,
    pub id: String,
    #[serde(default)]
    pub scenario: Option<String>,
    /// Reference to the pairs file.
    pub pairs: String,
    pub seed: u64,
    /// Per pair: whether the second signal is shown on the left.
    pub swapped: Vec<bool>,
    pub choices: Vec<Choice>,
    /// Number of accepted submissions; never decreases.
    pub revision: u64,
    /// Seconds since the Unix epoch.
    pub created: u64,
    pub updated: u64,
}

impl Document for Session {
    const KIND: &'static str = "session";
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

impl Session {
    /// A fresh session whose left/right placement is drawn from `seed`.
    pub fn new(id: String, scenario: Option<String>, pairs: String, n_pairs: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = now();
        Session {
            kind: Self::KIND.to_owned(),
            version: FORMAT_VERSION,
            id,
            scenario,
            pairs,
            seed,
            swapped: (0..n_pairs).map(|_| rng.gen_bool(0.5)).collect(),
            choices: vec![Choice::Unanswered; n_pairs],
            revision: 0,
            created: t,
            updated: t,
        }
    }

    pub fn total(&self) -> usize {
        self.choices.len()
    }

    pub fn answered(&self) -> usize {
        self.choices.iter().filter(|c| **c != Choice::Unanswered).count()
    }

    pub fn is_complete(&self) -> bool {
        self.answered() == self.total()
    }

    pub fn progress(&self) -> f64 {
        if self.total() == 0 {
            1.0
        } else {
            self.answered() as f64 / self.total() as f64
        }
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index < self.total() {
            Ok(())
        } else {
            Err(Error::Invalid(format!(
                "pair index {index} out of range (session has {} pairs)",
                self.total()
            )))
        }
    }

    /// Records that the signal shown on `side` was preferred. Answering again
    /// overwrites the earlier choice.
    pub fn record(&mut self, index: usize, side: Side) -> Result<()> {
        self.check_index(index)?;
        let left_is_first = !self.swapped[index];
        self.choices[index] = if (side == Side::Left) == left_is_first {
            Choice::First
        } else {
            Choice::Second
        };
        self.revision += 1;
        self.updated = now().max(self.updated);
        Ok(())
    }

    /// The side chosen for pair `index`, if answered.
    pub fn chosen_side(&self, index: usize) -> Result<Option<Side>> {
        self.check_index(index)?;
        let left_is_first = !self.swapped[index];
        Ok(match self.choices[index] {
            Choice::Unanswered => None,
            Choice::First if left_is_first => Some(Side::Left),
            Choice::Second if !left_is_first => Some(Side::Left),
            _ => Some(Side::Right),
        })
    }

    fn validate(&self, path: &Path, n_pairs: usize) -> Result<()> {
        if self.choices.len() != n_pairs || self.swapped.len() != n_pairs {
            return Err(Error::format(
                path,
                format!(
                    "session has {} choices and {} placements but the pair set has {n_pairs} pairs",
                    self.choices.len(),
                    self.swapped.len()
                ),
            ));
        }
        let answered = self.answered() as u64;
        if self.revision < answered {
            return Err(Error::format(
                path,
                format!(
                    "revision {} is below the {answered} answered pairs",
                    self.revision
                ),
            ));
        }
        Ok(())
    }
}

/// A session together with its pair set and signals.
#[derive(Debug, Clone)]
pub struct LoadedSession {
    pub path: PathBuf,
    pub session: Session,
    pub pairs: PairsFile,
    pub dataset_path: PathBuf,
    pub dataset: DatasetFile,
    pub data: LoadedDataset,
}

impl LoadedSession {
    /// Loads an existing session, refusing files that do not match their
    /// pair set.
    pub fn open(path: &Path) -> Result<Self> {
        let session: Session = store::load(path)?;
        let pairs_path = store::resolve(path, &session.pairs)?;
        Self::assemble(path.to_owned(), session, &pairs_path)
    }

    /// Starts a new session over `pairs_path` and writes it to `path`.
    pub fn create(path: &Path, pairs_path: &Path, id: String, seed: u64) -> Result<Self> {
        let pairs: PairsFile = store::load(pairs_path)?;
        let dataset_path = store::resolve(pairs_path, &pairs.dataset)?;
        let dataset: DatasetFile = store::load(&dataset_path)?;
        let reference = store::reference(path, pairs_path)?;
        let session = Session::new(id, dataset.scenario.clone(), reference, pairs.pairs.len(), seed);
        let loaded = Self::assemble(path.to_owned(), session, pairs_path)?;
        loaded.save()?;
        Ok(loaded)
    }

    /// Opens `path` if it exists and otherwise creates it.
    pub fn open_or_create(path: &Path, pairs_path: &Path, id: String, seed: u64) -> Result<Self> {
        if path.exists() {
            let s = Self::open(path)?;
            let wanted = std::fs::canonicalize(pairs_path).map_err(|e| Error::io(pairs_path, e))?;
            let have = std::fs::canonicalize(store::resolve(path, &s.session.pairs)?)
                .map_err(|e| Error::io(path, e))?;
            if wanted != have {
                return Err(Error::Mismatch(format!(
                    "session {} belongs to {}, not {}",
                    path.display(),
                    have.display(),
                    wanted.display()
                )));
            }
            Ok(s)
        } else {
            Self::create(path, pairs_path, id, seed)
        }
    }

    fn assemble(path: PathBuf, session: Session, pairs_path: &Path) -> Result<Self> {
        let pairs: PairsFile = store::load(pairs_path)?;
        session.validate(&path, pairs.pairs.len())?;
        let dataset_path = store::resolve(pairs_path, &pairs.dataset)?;
        let dataset: DatasetFile = store::load(&dataset_path)?;
        let data = dataset.decode(&dataset_path)?;
        for p in &pairs.pairs {
            data.position(&p.first)?;
            data.position(&p.second)?;
        }
        Ok(LoadedSession {
            path,
            session,
            pairs,
            dataset_path,
            dataset,
            data,
        })
    }

    pub fn save(&self) -> Result<()> {
        store::save(&self.path, &self.session)
    }

    /// Applies a choice and persists it before returning. On a write failure
    /// the in-memory state is left unchanged.
    pub fn submit(&mut self, index: usize, side: Side) -> Result<()> {
        let mut next = self.session.clone();
        next.record(index, side)?;
        store::save(&self.path, &next)?;
        self.session = next;
        Ok(())
    }

    /// Signal ids shown on the left and right for pair `index`.
    pub fn placement(&self, index: usize) -> Result<(&str, &str)> {
        self.session.check_index(index)?;
        let p = &self.pairs.pairs[index];
        Ok(if self.session.swapped[index] {
            (&p.second, &p.first)
        } else {
            (&p.first, &p.second)
        })
    }

    /// Preference file of a completed session. The output only depends on
    /// the pair set, the dataset location and the choices.
    pub fn export(&self) -> Result<PreferenceFile> {
        if !self.session.is_complete() {
            return Err(Error::IncompleteSession {
                answered: self.session.answered(),
                total: self.session.total(),
            });
        }
        let pairs = self
            .pairs
            .pairs
            .iter()
            .zip(&self.session.choices)
            .map(|(p, c)| {
                let (preferred, rejected) = match c {
                    Choice::First => (&p.first, &p.second),
                    _ => (&p.second, &p.first),
                };
                PreferenceRecord {
                    preferred: preferred.clone(),
                    rejected: rejected.clone(),
                }
            })
            .collect();
        Ok(PreferenceFile::new(
            store::absolute_reference(&self.dataset_path)?,
            pairs,
        ))
    }
}
