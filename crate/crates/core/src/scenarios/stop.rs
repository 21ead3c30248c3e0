use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::{brake_step, check, Scenario, Span, StepSpan, STOPPED_EQ_TOL};
use crate::formula::{Formula, Interval};
use crate::signal::{PredicateFn, Signal};
use crate::{Error, Result};

/// Approach to a stop sign.
///
/// `x` is the remaining distance to a reference point beyond the stop line,
/// so the vehicle has not passed the line while `x ≥ x_stop`; `v ≥ 0` is the
/// speed. The Boolean channel `b` holds exactly when the vehicle is stopped.
#[derive(Debug, Clone, PartialEq)]
pub struct StopSignSpec {
    pub x_stop: f64,
    pub len: usize,
    pub dt: f64,
    pub initial_speed: Span,
    pub deceleration: Span,
    /// Cruise steps before braking begins.
    pub brake_start: StepSpan,
    /// The planned stopping point lies within `±stop_slack` of the line.
    pub stop_slack: f64,
    /// Chance that a draw is a rolling stop that never reaches zero speed.
    pub rolling_probability: f64,
    pub rolling_speed: Span,
}

impl Default for StopSignSpec {
    fn default() -> Self {
        StopSignSpec {
            x_stop: 20.0,
            len: 60,
            dt: 0.1,
            initial_speed: Span::new(6.0, 12.0),
            deceleration: Span::new(2.5, 6.0),
            brake_start: StepSpan::new(0, 15),
            stop_slack: 3.0,
            rolling_probability: 0.4,
            rolling_speed: Span::new(0.3, 2.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopParams {
    pub initial_speed: f64,
    pub deceleration: f64,
    pub brake_start: usize,
    /// Planned stopping point relative to the line; positive is short of it.
    pub stop_offset: f64,
    /// Speed the braking phase ends at; `0` for a full stop.
    pub floor_speed: f64,
}

/// `◇□(x − x_stop ≥ 0 ∧ b) ∧ □(v ≥ 0 ∨ b)` with every weight a parameter.
///
/// The equality `v = 0` is replaced by the Boolean channel `b`. The speed
/// clause is relaxed by `b` so that the standstill at the end of every
/// stopping trace does not pin its robustness to zero.
pub fn stop_sign_formula(spec: &StopSignSpec) -> Formula {
    let before_line = Formula::pred(PredicateFn::new(vec![("x".into(), 1.0)], -spec.x_stop));
    let stopped = Formula::pred(PredicateFn::channel("b"));
    let forward = Formula::pred(PredicateFn::channel("v"));
    Formula::and(
        Formula::eventually(
            Interval::UNBOUNDED,
            Formula::always(Interval::UNBOUNDED, Formula::and(before_line, stopped.clone())),
        ),
        Formula::always(Interval::UNBOUNDED, Formula::or(forward, stopped)),
    )
}

impl StopSignSpec {
    /// Initial distance that makes the planned stop land at
    /// `x_stop + stop_offset`.
    fn initial_position(&self, p: &StopParams) -> f64 {
        let cruise = p.initial_speed * p.brake_start as f64 * self.dt;
        let braking = if p.deceleration > 0.0 {
            p.initial_speed * p.initial_speed / (2.0 * p.deceleration)
        } else {
            0.0
        };
        self.x_stop + p.stop_offset + cruise + braking
    }

    fn check_params(&self, p: &StopParams) -> Result<()> {
        check(self.initial_speed.contains(p.initial_speed), "initial speed")?;
        check(self.deceleration.contains(p.deceleration), "deceleration")?;
        check(self.brake_start.contains(p.brake_start), "brake start")?;
        check(
            p.stop_offset.is_finite() && p.stop_offset.abs() <= self.stop_slack,
            "stop offset",
        )?;
        check(
            p.floor_speed == 0.0 || self.rolling_speed.contains(p.floor_speed),
            "floor speed",
        )
    }
}

impl Scenario for StopSignSpec {
    type Params = StopParams;

    fn validate(&self) -> Result<()> {
        if !(self.x_stop > 0.0 && self.x_stop.is_finite()) {
            return Err(Error::InvalidConfig("x_stop must be positive".into()));
        }
        if self.len == 0 || !(self.dt > 0.0) {
            return Err(Error::InvalidConfig(
                "trace length and dt must be positive".into(),
            ));
        }
        self.initial_speed.validate("initial_speed")?;
        self.deceleration.validate("deceleration")?;
        self.rolling_speed.validate("rolling_speed")?;
        self.brake_start.validate("brake_start")?;
        if self.initial_speed.min < 0.0 || self.deceleration.min < 0.0 || self.rolling_speed.min <= 0.0 {
            return Err(Error::InvalidConfig(
                "speeds and decelerations must be nonnegative".into(),
            ));
        }
        if !(self.stop_slack >= 0.0) || !(0.0..=1.0).contains(&self.rolling_probability) {
            return Err(Error::InvalidConfig(
                "stop_slack or rolling_probability out of range".into(),
            ));
        }
        Ok(())
    }

    fn len(&self) -> usize {
        self.len
    }

    fn formula(&self) -> Formula {
        stop_sign_formula(self)
    }

    fn sample_params<R: RngCore + ?Sized>(&self, rng: &mut R) -> StopParams {
        let rolling = rng.gen_bool(self.rolling_probability);
        StopParams {
            initial_speed: self.initial_speed.sample(rng),
            deceleration: self.deceleration.sample(rng),
            brake_start: self.brake_start.sample(rng),
            stop_offset: Span::new(-self.stop_slack, self.stop_slack).sample(rng),
            floor_speed: if rolling {
                self.rolling_speed.sample(rng)
            } else {
                0.0
            },
        }
    }

    /// Cruise, then brake at constant deceleration down to the floor speed
    /// and hold it.
    fn generate(&self, p: &StopParams) -> Result<Signal> {
        self.check_params(p)?;
        let mut x = Vec::with_capacity(self.len);
        let mut v = Vec::with_capacity(self.len);
        let (mut xk, mut vk) = (self.initial_position(p), p.initial_speed);
        for k in 0..self.len {
            x.push(xk);
            v.push(vk);
            let (dist, next) = if k < p.brake_start {
                (vk * self.dt, vk)
            } else {
                brake_step(vk, p.deceleration, p.floor_speed.min(vk), self.dt)
            };
            xk -= dist;
            vk = next;
        }
        let s = Signal::from_real(self.dt, &[("x", x), ("v", v)])?;
        s.append_indicator_channel(&PredicateFn::channel("v"), "b", STOPPED_EQ_TOL)
    }
}
