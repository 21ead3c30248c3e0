use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::{accel_step, brake_step, check, Scenario, Span, StepSpan};
use crate::formula::{Formula, Interval};
use crate::signal::{bool_value, Channel, PredicateFn, Signal};
use crate::{Error, Result};

/// Approach to a crosswalk a pedestrian may occupy.
///
/// `x` is the distance travelled, so the vehicle is short of the crosswalk
/// while `x ≤ x_cross`; `v` is the speed and the Boolean channel `p` marks
/// the pedestrian's presence.
#[derive(Debug, Clone, PartialEq)]
pub struct PedestrianSpec {
    pub x_cross: f64,
    pub v_lim: f64,
    pub len: usize,
    pub dt: f64,
    pub initial_speed: Span,
    pub deceleration: Span,
    pub acceleration: Span,
    pub brake_start: StepSpan,
    /// Planned stop, measured back from the crosswalk.
    pub stop_offset: Span,
    /// Step the pedestrian arrives at.
    pub entry: StepSpan,
    /// Steps the pedestrian stays; zero means never present.
    pub duration: StepSpan,
    /// Steps the vehicle waits after the pedestrian leaves.
    pub resume_delay: StepSpan,
    /// Chance that a draw brakes for the crosswalk at all.
    pub yield_probability: f64,
}

impl Default for PedestrianSpec {
    fn default() -> Self {
        PedestrianSpec {
            x_cross: 30.0,
            v_lim: 12.0,
            len: 60,
            dt: 0.1,
            initial_speed: Span::new(6.0, 13.0),
            deceleration: Span::new(2.5, 6.0),
            acceleration: Span::new(1.0, 3.0),
            brake_start: StepSpan::new(0, 15),
            stop_offset: Span::new(-2.0, 5.0),
            entry: StepSpan::new(0, 25),
            duration: StepSpan::new(0, 30),
            resume_delay: StepSpan::new(0, 10),
            yield_probability: 0.7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PedestrianParams {
    pub initial_speed: f64,
    pub deceleration: f64,
    pub acceleration: f64,
    pub brake_start: usize,
    pub stop_offset: f64,
    pub entry: usize,
    pub duration: usize,
    pub resume_delay: usize,
    pub yields: bool,
}

/// `□((p ∧ x − x_cross ≤ 0) ⟹ ((x − x_cross ≤ 0) U ¬p) ∧ (v ≤ v_lim))`
/// with every weight a parameter; the implication binds loosest, so the
/// speed limit is part of its consequent.
pub fn pedestrian_formula(spec: &PedestrianSpec) -> Formula {
    let short_of = || Formula::pred(PredicateFn::new(vec![("x".into(), -1.0)], spec.x_cross));
    let present = || Formula::pred(PredicateFn::channel("p"));
    let under_limit = Formula::pred(PredicateFn::new(vec![("v".into(), -1.0)], spec.v_lim));
    Formula::always(
        Interval::UNBOUNDED,
        Formula::implies(
            Formula::and(present(), short_of()),
            Formula::and(
                Formula::until(short_of(), Interval::UNBOUNDED, Formula::not(present())),
                under_limit,
            ),
        ),
    )
}

impl PedestrianSpec {
    fn check_params(&self, p: &PedestrianParams) -> Result<()> {
        check(self.initial_speed.contains(p.initial_speed), "initial speed")?;
        check(self.deceleration.contains(p.deceleration), "deceleration")?;
        check(self.acceleration.contains(p.acceleration), "acceleration")?;
        check(self.brake_start.contains(p.brake_start), "brake start")?;
        check(self.stop_offset.contains(p.stop_offset), "stop offset")?;
        check(self.entry.contains(p.entry), "entry step")?;
        check(self.duration.contains(p.duration), "duration")?;
        check(self.resume_delay.contains(p.resume_delay), "resume delay")?;
        check(
            p.entry + p.duration < self.len || p.duration == 0,
            "pedestrian schedule",
        )
    }
}

impl Scenario for PedestrianSpec {
    type Params = PedestrianParams;

    fn validate(&self) -> Result<()> {
        if !(self.v_lim > 0.0 && self.v_lim.is_finite()) || !self.x_cross.is_finite() {
            return Err(Error::InvalidConfig(
                "v_lim must be positive and x_cross finite".into(),
            ));
        }
        if self.len == 0 || !(self.dt > 0.0) {
            return Err(Error::InvalidConfig(
                "trace length and dt must be positive".into(),
            ));
        }
        self.initial_speed.validate("initial_speed")?;
        self.deceleration.validate("deceleration")?;
        self.acceleration.validate("acceleration")?;
        self.stop_offset.validate("stop_offset")?;
        self.brake_start.validate("brake_start")?;
        self.entry.validate("entry")?;
        self.duration.validate("duration")?;
        self.resume_delay.validate("resume_delay")?;
        if self.initial_speed.min < 0.0 || self.deceleration.min <= 0.0 || self.acceleration.min < 0.0 {
            return Err(Error::InvalidConfig(
                "speeds and accelerations out of range".into(),
            ));
        }
        if self.entry.max + self.duration.max >= self.len {
            return Err(Error::InvalidConfig(
                "pedestrian schedule must end within the trace".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.yield_probability) {
            return Err(Error::InvalidConfig("yield_probability out of range".into()));
        }
        Ok(())
    }

    fn len(&self) -> usize {
        self.len
    }

    fn formula(&self) -> Formula {
        pedestrian_formula(self)
    }

    fn sample_params<R: RngCore + ?Sized>(&self, rng: &mut R) -> PedestrianParams {
        PedestrianParams {
            initial_speed: self.initial_speed.sample(rng),
            deceleration: self.deceleration.sample(rng),
            acceleration: self.acceleration.sample(rng),
            brake_start: self.brake_start.sample(rng),
            stop_offset: self.stop_offset.sample(rng),
            entry: self.entry.sample(rng),
            duration: self.duration.sample(rng),
            resume_delay: self.resume_delay.sample(rng),
            yields: rng.gen_bool(self.yield_probability),
        }
    }

    /// Cruise; if yielding, brake to a stop `stop_offset` before the
    /// crosswalk, wait until `resume_delay` steps after the pedestrian
    /// leaves, then accelerate back to the initial speed.
    fn generate(&self, p: &PedestrianParams) -> Result<Signal> {
        self.check_params(p)?;
        let v0 = p.initial_speed;
        let cruise = v0 * p.brake_start as f64 * self.dt;
        let braking = v0 * v0 / (2.0 * p.deceleration);
        let exit = p.entry + p.duration;
        let resume = if p.duration == 0 { 0 } else { exit + p.resume_delay };
        let mut x = Vec::with_capacity(self.len);
        let mut v = Vec::with_capacity(self.len);
        let mut present = Vec::with_capacity(self.len);
        let (mut xk, mut vk) = (self.x_cross - p.stop_offset - cruise - braking, v0);
        let mut stopped = false;
        for k in 0..self.len {
            x.push(xk);
            v.push(vk);
            present.push(bool_value(p.duration > 0 && p.entry <= k && k < exit));
            stopped |= vk == 0.0;
            let (dist, next) = if !p.yields || k < p.brake_start {
                (vk * self.dt, vk)
            } else if !stopped || k < resume {
                brake_step(vk, p.deceleration, 0.0, self.dt)
            } else {
                accel_step(vk, p.acceleration, v0, self.dt)
            };
            xk += dist;
            vk = next;
        }
        Signal::new(
            self.dt,
            vec![Channel::real("x"), Channel::real("v"), Channel::boolean("p")],
            vec![x, v, present],
        )
    }
}
