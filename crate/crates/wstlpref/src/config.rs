//! Configuration file.
//!
//! A JSON object in which every section and every field is optional;
//! missing values fall back to the library defaults. Unknown keys are
//! rejected so that typos do not pass silently.
//!
//! ```json
//! {
//!   "learn": { "n_samples": 1000, "restarts": 11, "max_iters": 5000 },
//!   "bt": { "learning_rate": 0.1, "epochs": 200, "full_batch": false },
//!   "eval": { "splits": 10, "ratio": 0.7 },
//!   "pairs": { "threshold": 10.0, "channels": ["x", "v"] },
//!   "stop": { "x_stop": 20.0, "initial_speed": [6.0, 12.0] },
//!   "pedestrian": { "x_cross": 30.0, "yield_probability": 0.7 }
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use wstlpref_core::baselines::BtConfig;
use wstlpref_core::learn::LearnConfig;
use wstlpref_core::scenarios::{PedestrianSpec, Span, StepSpan, StopSignSpec};

use crate::error::{Error, Result};

pub const DEFAULT_PAIR_THRESHOLD: f64 = 10.0;
pub const DEFAULT_PAIR_CHANNELS: [&str; 2] = ["x", "v"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub version: Option<u32>,
    #[serde(default)]
    pub learn: LearnSection,
    #[serde(default)]
    pub bt: BtSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub pairs: PairsSection,
    #[serde(default)]
    pub stop: StopSection,
    #[serde(default)]
    pub pedestrian: PedestrianSection,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let cfg: Config = serde_json::from_slice(&bytes).map_err(|source| Error::Json {
            path: path.to_owned(),
            source,
        })?;
        if let Some(v) = cfg.version {
            if v != crate::store::FORMAT_VERSION {
                return Err(Error::format(path, format!("unsupported config version {v}")));
            }
        }
        Ok(cfg)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Config::default()), Config::load)
    }
}

macro_rules! overlay {
    ($src:expr, $dst:expr; $($field:ident),* $(,)?) => {
        $( if let Some(v) = $src.$field { $dst.$field = v.into(); } )*
    };
}

/// Optional [`LearnConfig`] fields; also used for command-line overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct LearnSection {
    /// Valuations drawn by the random-sampling solver
    #[arg(long)]
    pub n_samples: Option<usize>,
    /// Margin, as a fraction of the robustness range, for margin statistics
    #[arg(long)]
    pub margin_fraction: Option<f64>,
    /// Logistic steepness of the surrogate loss
    #[arg(long)]
    pub m: Option<f64>,
    /// Margin shift of the surrogate loss
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Regularizer strength
    #[arg(long)]
    pub theta: Option<f64>,
    /// Smoothing sharpness of soft min/max
    #[arg(long)]
    pub beta: Option<f64>,
    /// Finite stand-in for infinite leaf values in soft robustness
    #[arg(long)]
    pub inf_sentinel: Option<f64>,
    /// Adam step size
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Pairs per mini-batch
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Stop when the loss changes by less than this
    #[arg(long)]
    pub loss_tol: Option<f64>,
    /// Gradient-solver restarts
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Descent steps per restart
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Lower bound on weights during descent
    #[arg(long)]
    pub w_floor: Option<f64>,
}

impl LearnSection {
    pub fn apply(&self, cfg: &mut LearnConfig) {
        overlay!(self, cfg; n_samples, margin_fraction, m, epsilon, theta, beta, inf_sentinel,
            learning_rate, batch_size, loss_tol, restarts, max_iters, w_floor);
    }

    /// Defaults, then this section, then `overrides`.
    pub fn resolve(&self, overrides: &LearnSection) -> Result<LearnConfig> {
        let mut cfg = LearnConfig::default();
        self.apply(&mut cfg);
        overrides.apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BtSection {
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub full_batch: Option<bool>,
}

impl BtSection {
    pub fn resolve(&self) -> BtConfig {
        let mut cfg = BtConfig::default();
        overlay!(self, cfg; learning_rate, epochs, full_batch);
        cfg
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub splits: Option<usize>,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairsSection {
    pub threshold: Option<f64>,
    pub channels: Option<Vec<String>>,
}

/// `[min, max]` in files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanRecord(pub f64, pub f64);

impl From<SpanRecord> for Span {
    fn from(r: SpanRecord) -> Self {
        Span::new(r.0, r.1)
    }
}

impl From<Span> for SpanRecord {
    fn from(s: Span) -> Self {
        SpanRecord(s.min, s.max)
    }
}

/// `[min, max]` step counts in files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSpanRecord(pub usize, pub usize);

impl From<StepSpanRecord> for StepSpan {
    fn from(r: StepSpanRecord) -> Self {
        StepSpan::new(r.0, r.1)
    }
}

impl From<StepSpan> for StepSpanRecord {
    fn from(s: StepSpan) -> Self {
        StepSpanRecord(s.min, s.max)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSection {
    pub x_stop: Option<f64>,
    pub len: Option<usize>,
    pub dt: Option<f64>,
    pub initial_speed: Option<SpanRecord>,
    pub deceleration: Option<SpanRecord>,
    pub brake_start: Option<StepSpanRecord>,
    pub stop_slack: Option<f64>,
    pub rolling_probability: Option<f64>,
    pub rolling_speed: Option<SpanRecord>,
}

impl StopSection {
    pub fn resolve(&self) -> StopSignSpec {
        let mut spec = StopSignSpec::default();
        overlay!(self, spec; x_stop, len, dt, initial_speed, deceleration, brake_start,
            stop_slack, rolling_probability, rolling_speed);
        spec
    }

    /// Fully populated section describing `spec`.
    pub fn describe(spec: &StopSignSpec) -> Self {
        StopSection {
            x_stop: Some(spec.x_stop),
            len: Some(spec.len),
            dt: Some(spec.dt),
            initial_speed: Some(spec.initial_speed.into()),
            deceleration: Some(spec.deceleration.into()),
            brake_start: Some(spec.brake_start.into()),
            stop_slack: Some(spec.stop_slack),
            rolling_probability: Some(spec.rolling_probability),
            rolling_speed: Some(spec.rolling_speed.into()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PedestrianSection {
    pub x_cross: Option<f64>,
    pub v_lim: Option<f64>,
    pub len: Option<usize>,
    pub dt: Option<f64>,
    pub initial_speed: Option<SpanRecord>,
    pub deceleration: Option<SpanRecord>,
    pub acceleration: Option<SpanRecord>,
    pub brake_start: Option<StepSpanRecord>,
    pub stop_offset: Option<SpanRecord>,
    pub entry: Option<StepSpanRecord>,
    pub duration: Option<StepSpanRecord>,
    pub resume_delay: Option<StepSpanRecord>,
    pub yield_probability: Option<f64>,
}

impl PedestrianSection {
    pub fn resolve(&self) -> PedestrianSpec {
        let mut spec = PedestrianSpec::default();
        overlay!(self, spec; x_cross, v_lim, len, dt, initial_speed, deceleration, acceleration,
            brake_start, stop_offset, entry, duration, resume_delay, yield_probability);
        spec
    }

    pub fn describe(spec: &PedestrianSpec) -> Self {
        PedestrianSection {
            x_cross: Some(spec.x_cross),
            v_lim: Some(spec.v_lim),
            len: Some(spec.len),
            dt: Some(spec.dt),
            initial_speed: Some(spec.initial_speed.into()),
            deceleration: Some(spec.deceleration.into()),
            acceleration: Some(spec.acceleration.into()),
            brake_start: Some(spec.brake_start.into()),
            stop_offset: Some(spec.stop_offset.into()),
            entry: Some(spec.entry.into()),
            duration: Some(spec.duration.into()),
            resume_delay: Some(spec.resume_delay.into()),
            yield_probability: Some(spec.yield_probability),
        }
    }
}
