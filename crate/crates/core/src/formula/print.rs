use core::fmt::{self, Display, Write};

use super::{Formula, Interval, Pins};
use crate::signal::PredicateFn;

impl Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.b {
            Some(b) => write!(f, "[{},{}]", self.a, b),
            None => write!(f, "[{},inf]", self.a),
        }
    }
}

impl Display for PredicateFn {
    /// Prints the affine expression followed by `>= 0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (name, coeff) in &self.terms {
            let (neg, mag) = (coeff.is_sign_negative(), coeff.abs());
            match (first, neg) {
                (true, true) => f.write_char('-')?,
                (true, false) => {}
                (false, true) => f.write_str(" - ")?,
                (false, false) => f.write_str(" + ")?,
            }
            if mag == 1.0 {
                f.write_str(name)?;
            } else {
                write!(f, "{mag}*{name}")?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.offset)?;
        } else if self.offset != 0.0 {
            let sep = if self.offset < 0.0 { " - " } else { " + " };
            write!(f, "{sep}{}", self.offset.abs())?;
        }
        f.write_str(" >= 0")
    }
}

fn write_pins(f: &mut fmt::Formatter<'_>, pins: &Pins) -> fmt::Result {
    if let Some(pins) = pins {
        f.write_char('{')?;
        for (i, p) in pins.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match p {
                Some(v) => write!(f, "{v}")?,
                None => f.write_char('?')?,
            }
        }
        f.write_char('}')?;
    }
    Ok(())
}

fn write_interval(f: &mut fmt::Formatter<'_>, interval: &Interval) -> fmt::Result {
    if *interval != Interval::UNBOUNDED {
        write!(f, "{interval}")?;
    }
    Ok(())
}

/// Writes `child`, parenthesized unless it is an atom.
fn operand(f: &mut fmt::Formatter<'_>, child: &Formula) -> fmt::Result {
    match child {
        Formula::True => f.write_str("true"),
        _ => write!(f, "({child})"),
    }
}

impl Display for Formula {
    /// Canonical, fully parenthesized form accepted by [`super::parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::Pred(p) => write!(f, "{p}"),
            Formula::Not(c) => {
                f.write_char('!')?;
                operand(f, c)
            }
            Formula::And { left, right, pins } | Formula::Or { left, right, pins } => {
                let op = if matches!(self, Formula::And { .. }) {
                    '&'
                } else {
                    '|'
                };
                operand(f, left)?;
                write!(f, " {op}")?;
                write_pins(f, pins)?;
                f.write_char(' ')?;
                operand(f, right)
            }
            Formula::Until {
                left,
                right,
                interval,
                pins,
            } => {
                operand(f, left)?;
                f.write_str(" U")?;
                write_interval(f, interval)?;
                write_pins(f, pins)?;
                f.write_char(' ')?;
                operand(f, right)
            }
            Formula::Always {
                child,
                interval,
                pins,
            }
            | Formula::Eventually {
                child,
                interval,
                pins,
            } => {
                f.write_char(if matches!(self, Formula::Always { .. }) {
                    'G'
                } else {
                    'F'
                })?;
                write_interval(f, interval)?;
                write_pins(f, pins)?;
                f.write_char(' ')?;
                operand(f, child)
            }
        }
    }
}
