//! Traditional STL robustness by direct recursion over the syntax tree.
//!
//! Weights are ignored. This evaluator shares no code with the computation
//! graph and serves as the reference the weighted semantics are checked
//! against.

use crate::formula::Formula;
use crate::signal::Signal;
use crate::{Error, Result};

/// Robustness `ρ(s, φ, t)`. The inner Until window is `[t, t')`.
pub fn rho(s: &Signal, phi: &Formula, t: usize) -> Result<f64> {
    let t_final = s.t_final();
    if t > t_final {
        return Err(Error::TimeOutOfRange { t, t_final });
    }
    match phi {
        Formula::True => Ok(f64::INFINITY),
        Formula::Pred(f) => f.eval(s, t),
        Formula::Not(c) => Ok(-rho(s, c, t)?),
        Formula::And { left, right, .. } => Ok(rho(s, left, t)?.min(rho(s, right, t)?)),
        Formula::Or { left, right, .. } => Ok(rho(s, left, t)?.max(rho(s, right, t)?)),
        Formula::Always { child, interval, .. } => {
            let (lo, hi) = interval.window(t, t_final).ok_or(Error::IntervalBeyondTrace)?;
            let mut acc = f64::INFINITY;
            for tp in lo..=hi {
                acc = acc.min(rho(s, child, tp)?);
            }
            Ok(acc)
        }
        Formula::Eventually { child, interval, .. } => {
            let (lo, hi) = interval.window(t, t_final).ok_or(Error::IntervalBeyondTrace)?;
            let mut acc = f64::NEG_INFINITY;
            for tp in lo..=hi {
                acc = acc.max(rho(s, child, tp)?);
            }
            Ok(acc)
        }
        Formula::Until {
            left,
            right,
            interval,
            ..
        } => {
            let (lo, hi) = interval.window(t, t_final).ok_or(Error::IntervalBeyondTrace)?;
            let mut acc = f64::NEG_INFINITY;
            for tp in lo..=hi {
                let mut hold = f64::INFINITY;
                for tpp in t..tp {
                    hold = hold.min(rho(s, left, tpp)?);
                }
                acc = acc.max(rho(s, right, tp)?.min(hold));
            }
            Ok(acc)
        }
    }
}
