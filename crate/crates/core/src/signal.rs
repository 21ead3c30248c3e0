//! Discrete-time multi-channel signals over the extended reals.
//!
//! Time is an integer sample index in `0..=t_final`; `dt` is carried along as
//! metadata and never enters the semantics. Boolean channels hold only `+∞`
//! (true) and `-∞` (false).

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::math;
use crate::{Error, Result};

/// Default tolerance for the equality-to-indicator transform.
pub const DEFAULT_EQ_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    Real,
    Boolean,
}

impl ChannelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ChannelKind::Real => "real",
            ChannelKind::Boolean => "boolean",
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Channel {
    pub name: String,
    pub kind: ChannelKind,
}

impl Channel {
    pub fn real(name: impl Into<String>) -> Self {
        Channel {
            name: name.into(),
            kind: ChannelKind::Real,
        }
    }

    pub fn boolean(name: impl Into<String>) -> Self {
        Channel {
            name: name.into(),
            kind: ChannelKind::Boolean,
        }
    }
}

/// Encodes a truth value the way Boolean channels store it.
#[inline]
pub fn bool_value(b: bool) -> f64 {
    if b {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    }
}

fn is_valid_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// An immutable multi-channel signal. Samples are stored per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    channels: Vec<Channel>,
    samples: Vec<Vec<f64>>,
    dt: f64,
}

impl Signal {
    /// Builds a signal from channel descriptors and one sample vector per
    /// channel.
    pub fn new(dt: f64, channels: Vec<Channel>, samples: Vec<Vec<f64>>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidSignal(format!("dt must be positive, got {dt}")));
        }
        if channels.is_empty() {
            return Err(Error::InvalidSignal("signal has no channels".to_owned()));
        }
        if channels.len() != samples.len() {
            return Err(Error::InvalidSignal(format!(
                "{} channel descriptors but {} sample rows",
                channels.len(),
                samples.len()
            )));
        }
        let len = samples[0].len();
        if len == 0 {
            return Err(Error::InvalidSignal("signal has no samples".to_owned()));
        }
        for (i, (ch, row)) in channels.iter().zip(&samples).enumerate() {
            if !is_valid_identifier(&ch.name) {
                return Err(Error::InvalidSignal(format!(
                    "invalid channel name `{}`",
                    ch.name
                )));
            }
            if channels[..i].iter().any(|c| c.name == ch.name) {
                return Err(Error::DuplicateChannel(ch.name.clone()));
            }
            if row.len() != len {
                return Err(Error::InvalidSignal(format!(
                    "channel `{}` has {} samples, expected {len}",
                    ch.name,
                    row.len()
                )));
            }
            if row.iter().any(|v| v.is_nan()) {
                return Err(Error::InvalidSignal(format!(
                    "channel `{}` contains NaN",
                    ch.name
                )));
            }
            if ch.kind == ChannelKind::Boolean && row.iter().any(|v| v.is_finite()) {
                return Err(Error::InvalidSignal(format!(
                    "boolean channel `{}` must contain only inf/-inf",
                    ch.name
                )));
            }
        }
        Ok(Signal {
            channels,
            samples,
            dt,
        })
    }

    /// Convenience constructor for signals made only of real channels.
    pub fn from_real<S: AsRef<str>>(dt: f64, channels: &[(S, Vec<f64>)]) -> Result<Self> {
        let (descs, rows) = channels
            .iter()
            .map(|(name, row)| (Channel::real(name.as_ref()), row.clone()))
            .unzip();
        Signal::new(dt, descs, rows)
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of samples, `t_final + 1`.
    pub fn len(&self) -> usize {
        self.samples[0].len()
    }

    /// Always false; a signal has at least one sample.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t_final(&self) -> usize {
        self.len() - 1
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.name == name)
    }

    pub fn channel(&self, name: &str) -> Result<&[f64]> {
        self.channel_index(name)
            .map(|i| self.samples[i].as_slice())
            .ok_or_else(|| Error::UnknownChannel(name.to_owned()))
    }

    /// Sample row of channel `index`.
    pub fn row(&self, index: usize) -> &[f64] {
        &self.samples[index]
    }

    pub fn value_at(&self, channel: &str, t: usize) -> Result<f64> {
        let row = self.channel(channel)?;
        row.get(t).copied().ok_or(Error::TimeOutOfRange {
            t,
            t_final: self.t_final(),
        })
    }

    /// Returns a copy of the signal with a Boolean channel `name` that is true
    /// exactly where `|f(s(t))| <= eq_tol`.
    pub fn append_indicator_channel(&self, f: &PredicateFn, name: &str, eq_tol: f64) -> Result<Self> {
        if self.channel_index(name).is_some() {
            return Err(Error::DuplicateChannel(name.to_owned()));
        }
        let resolved = f.resolve(self)?;
        let mut row = Vec::with_capacity(self.len());
        for t in 0..self.len() {
            let value = resolved.eval(self, t)?;
            if !value.is_finite() {
                return Err(Error::UndefinedPredicate(format!(
                    "indicator source evaluates to {value} at t = {t}"
                )));
            }
            row.push(bool_value(math::abs(value) <= eq_tol));
        }
        let mut channels = self.channels.clone();
        channels.push(Channel::boolean(name));
        let mut samples = self.samples.clone();
        samples.push(row);
        Signal::new(self.dt, channels, samples)
    }

    /// Euclidean distance between two signals over the listed real channels.
    pub fn euclidean_distance<S: AsRef<str>>(&self, other: &Signal, channels: &[S]) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::Mismatch(format!(
                "lengths {} and {} differ",
                self.len(),
                other.len()
            )));
        }
        let mut acc = 0.0;
        for name in channels {
            let name = name.as_ref();
            let (a, b) = (self.real_channel(name)?, other.real_channel(name)?);
            for (x, y) in a.iter().zip(b) {
                let d = x - y;
                if d.is_nan() {
                    return Err(Error::Mismatch(format!(
                        "channel `{name}` has non-finite samples"
                    )));
                }
                acc += d * d;
            }
        }
        Ok(math::sqrt(acc))
    }

    fn real_channel(&self, name: &str) -> Result<&[f64]> {
        let i = self
            .channel_index(name)
            .ok_or_else(|| Error::UnknownChannel(name.to_owned()))?;
        if self.channels[i].kind != ChannelKind::Real {
            return Err(Error::Mismatch(format!("channel `{name}` is not real-valued")));
        }
        Ok(&self.samples[i])
    }
}

/// An affine map `Σ coeff_i · s_i(t) + offset` over named channels.
#[derive(Debug, Clone, PartialEq)]
pub struct PredicateFn {
    pub terms: Vec<(String, f64)>,
    pub offset: f64,
}

impl PredicateFn {
    pub fn new(terms: Vec<(String, f64)>, offset: f64) -> Self {
        PredicateFn { terms, offset }
    }

    /// The identity on one channel, `f(s) = s_name`.
    pub fn channel(name: impl Into<String>) -> Self {
        PredicateFn {
            terms: alloc::vec![(name.into(), 1.0)],
            offset: 0.0,
        }
    }

    /// `-f`.
    pub fn negated(&self) -> Self {
        PredicateFn {
            terms: self.terms.iter().map(|(n, c)| (n.clone(), -c)).collect(),
            offset: -self.offset,
        }
    }

    /// Resolves channel names against a signal layout.
    pub fn resolve(&self, s: &Signal) -> Result<ResolvedPredicate> {
        let mut terms = Vec::with_capacity(self.terms.len());
        let mut has_boolean = false;
        for (name, coeff) in &self.terms {
            let idx = s
                .channel_index(name)
                .ok_or_else(|| Error::UnknownChannel(name.clone()))?;
            if *coeff == 0.0 {
                continue;
            }
            if let Some(slot) = terms.iter_mut().find(|(i, _)| *i == idx) {
                slot.1 += *coeff;
            } else {
                terms.push((idx, *coeff));
            }
            has_boolean |= s.channels[idx].kind == ChannelKind::Boolean;
        }
        terms.retain(|(_, c)| *c != 0.0);
        if has_boolean && terms.len() > 1 {
            return Err(Error::UndefinedPredicate(
                "a boolean channel must be the only term of its predicate".to_owned(),
            ));
        }
        Ok(ResolvedPredicate {
            terms,
            offset: self.offset,
        })
    }

    pub fn eval(&self, s: &Signal, t: usize) -> Result<f64> {
        if t > s.t_final() {
            return Err(Error::TimeOutOfRange {
                t,
                t_final: s.t_final(),
            });
        }
        self.resolve(s)?.eval(s, t)
    }
}

/// A [`PredicateFn`] bound to channel indices of a particular signal layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedPredicate {
    terms: Vec<(usize, f64)>,
    offset: f64,
}

impl ResolvedPredicate {
    pub fn eval(&self, s: &Signal, t: usize) -> Result<f64> {
        let mut acc = self.offset;
        for &(idx, coeff) in &self.terms {
            acc += coeff * s.samples[idx][t];
        }
        if acc.is_nan() {
            return Err(Error::UndefinedPredicate(format!(
                "opposite infinities at t = {t}"
            )));
        }
        Ok(acc)
    }
}
