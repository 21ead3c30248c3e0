//! Parametric WSTL formulas.
//!
//! A [`Formula`] is an immutable syntax tree. Weighted operators (`&`, `|`,
//! `U`, `G`, `F`) own a block of weight slots; each slot is either a free
//! parameter or a pinned positive constant. Weight values are kept outside
//! the tree in a [`WeightValuation`], laid out by a [`SlotTable`].
//!
//! Textual grammar (whitespace-insensitive):
//!
//! ```text
//! formula   ::= implies
//! implies   ::= or [ "=>" [pins] implies ]          (right associative)
//! or        ::= and { "|" [pins] and }
//! and       ::= until { "&" [pins] until }
//! until     ::= unary { "U" [interval] [pins] unary }
//! unary     ::= "!" unary
//!             | ("G" | "F") [interval] [pins] unary
//!             | atom
//! atom      ::= "true" | "(" formula ")" | predicate
//! predicate ::= affine [ (">=" | "<=") affine ]     (bare affine means ">= 0")
//! affine    ::= ["+" | "-"] term { ("+" | "-") term }
//! term      ::= number [ "*" ident ] | ident
//! interval  ::= "[" int "," (int | "inf") "]"
//! pins      ::= "{" (number | "?") { "," (number | "?") } "}"
//! ident     ::= [A-Za-z_][A-Za-z0-9_]*   (except the keywords true, F, G, U)
//! ```
//!
//! An omitted interval means `[0, inf]`. `a => b` is read as `!a | b` with the
//! disjunction carrying the weights. `x <= c` is stored as `c - x >= 0`.

mod parser;
mod print;
mod slots;

use alloc::boxed::Box;
use alloc::vec::Vec;

pub use parser::{parse, ParseError};
pub use slots::{OpKind, SlotId, SlotStatus, SlotTable, WeightSlot, WeightValuation, WeightedNode};

use crate::signal::PredicateFn;
use crate::{Error, Result};

/// Inclusive time window `[a, b]`; `b = None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    pub a: usize,
    pub b: Option<usize>,
}

impl Interval {
    pub const UNBOUNDED: Interval = Interval { a: 0, b: None };

    pub fn bounded(a: usize, b: usize) -> Result<Self> {
        if a > b {
            return Err(Error::InvalidConfig(alloc::format!(
                "interval [{a},{b}] has a > b"
            )));
        }
        Ok(Interval { a, b: Some(b) })
    }

    pub fn from(a: usize) -> Self {
        Interval { a, b: None }
    }

    pub fn is_bounded(&self) -> bool {
        self.b.is_some()
    }

    /// Weight block length. Unbounded windows are sized for evaluation at
    /// `t = 0` on a trace ending at `horizon`.
    pub fn block_len(&self, horizon: Option<usize>) -> Result<usize> {
        match (self.b, horizon) {
            (Some(b), _) => Ok(b - self.a + 1),
            (None, Some(h)) if self.a <= h => Ok(h - self.a + 1),
            (None, Some(_)) => Err(Error::IntervalBeyondTrace),
            (None, None) => Err(Error::HorizonRequired),
        }
    }

    /// Effective window `[t + a, min(t + b, t_final)]` at time `t`, or `None`
    /// when it starts past the end of the trace.
    pub fn window(&self, t: usize, t_final: usize) -> Option<(usize, usize)> {
        let lo = t + self.a;
        if lo > t_final {
            return None;
        }
        let hi = match self.b {
            Some(b) => (t + b).min(t_final),
            None => t_final,
        };
        Some((lo, hi))
    }
}

/// Optional per-slot constants for one weighted operator. `None` leaves every
/// slot free; otherwise one entry per slot, `None` marking a free slot.
pub type Pins = Option<Vec<Option<f64>>>;

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    Pred(PredicateFn),
    Not(Box<Formula>),
    And {
        left: Box<Formula>,
        right: Box<Formula>,
        pins: Pins,
    },
    Or {
        left: Box<Formula>,
        right: Box<Formula>,
        pins: Pins,
    },
    Until {
        left: Box<Formula>,
        right: Box<Formula>,
        interval: Interval,
        pins: Pins,
    },
    Always {
        child: Box<Formula>,
        interval: Interval,
        pins: Pins,
    },
    Eventually {
        child: Box<Formula>,
        interval: Interval,
        pins: Pins,
    },
}

impl Formula {
    pub fn pred(f: PredicateFn) -> Self {
        Formula::Pred(f)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(child: Formula) -> Self {
        Formula::Not(Box::new(child))
    }

    pub fn and(left: Formula, right: Formula) -> Self {
        Formula::And {
            left: Box::new(left),
            right: Box::new(right),
            pins: None,
        }
    }

    pub fn or(left: Formula, right: Formula) -> Self {
        Formula::Or {
            left: Box::new(left),
            right: Box::new(right),
            pins: None,
        }
    }

    pub fn implies(antecedent: Formula, consequent: Formula) -> Self {
        Formula::or(Formula::not(antecedent), consequent)
    }

    pub fn until(left: Formula, interval: Interval, right: Formula) -> Self {
        Formula::Until {
            left: Box::new(left),
            right: Box::new(right),
            interval,
            pins: None,
        }
    }

    pub fn always(interval: Interval, child: Formula) -> Self {
        Formula::Always {
            child: Box::new(child),
            interval,
            pins: None,
        }
    }

    pub fn eventually(interval: Interval, child: Formula) -> Self {
        Formula::Eventually {
            child: Box::new(child),
            interval,
            pins: None,
        }
    }

    /// Children in slot-path order.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::True | Formula::Pred(_) => Vec::new(),
            Formula::Not(c) => alloc::vec![&**c],
            Formula::Always { child, .. } | Formula::Eventually { child, .. } => {
                alloc::vec![&**child]
            }
            Formula::And { left, right, .. }
            | Formula::Or { left, right, .. }
            | Formula::Until { left, right, .. } => alloc::vec![&**left, &**right],
        }
    }

    /// Operator kind when this node carries weights.
    pub fn op_kind(&self) -> Option<OpKind> {
        match self {
            Formula::True | Formula::Pred(_) | Formula::Not(_) => None,
            Formula::And { .. } => Some(OpKind::And),
            Formula::Or { .. } => Some(OpKind::Or),
            Formula::Until { .. } => Some(OpKind::Until),
            Formula::Always { .. } => Some(OpKind::Always),
            Formula::Eventually { .. } => Some(OpKind::Eventually),
        }
    }

    pub fn pins(&self) -> Option<&[Option<f64>]> {
        match self {
            Formula::And { pins, .. }
            | Formula::Or { pins, .. }
            | Formula::Until { pins, .. }
            | Formula::Always { pins, .. }
            | Formula::Eventually { pins, .. } => pins.as_deref(),
            _ => None,
        }
    }

    /// Number of weight slots this node owns (not counting children).
    pub fn own_block_len(&self, horizon: Option<usize>) -> Result<usize> {
        match self {
            Formula::True | Formula::Pred(_) | Formula::Not(_) => Ok(0),
            Formula::And { .. } | Formula::Or { .. } => Ok(2),
            Formula::Until { interval, .. } => Ok(2 * interval.block_len(horizon)?),
            Formula::Always { interval, .. } | Formula::Eventually { interval, .. } => {
                interval.block_len(horizon)
            }
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// Height of the tree, a leaf having depth 1.
    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    pub fn has_unbounded(&self) -> bool {
        let own = match self {
            Formula::Until { interval, .. }
            | Formula::Always { interval, .. }
            | Formula::Eventually { interval, .. } => !interval.is_bounded(),
            _ => false,
        };
        own || self.children().iter().any(|c| c.has_unbounded())
    }

    /// The same tree with every pin removed.
    pub fn unpinned(&self) -> Formula {
        let b = |f: &Formula| Box::new(f.unpinned());
        match self {
            Formula::True => Formula::True,
            Formula::Pred(p) => Formula::Pred(p.clone()),
            Formula::Not(c) => Formula::Not(b(c)),
            Formula::And { left, right, .. } => Formula::And {
                left: b(left),
                right: b(right),
                pins: None,
            },
            Formula::Or { left, right, .. } => Formula::Or {
                left: b(left),
                right: b(right),
                pins: None,
            },
            Formula::Until {
                left,
                right,
                interval,
                ..
            } => Formula::Until {
                left: b(left),
                right: b(right),
                interval: *interval,
                pins: None,
            },
            Formula::Always { child, interval, .. } => Formula::Always {
                child: b(child),
                interval: *interval,
                pins: None,
            },
            Formula::Eventually { child, interval, .. } => Formula::Eventually {
                child: b(child),
                interval: *interval,
                pins: None,
            },
        }
    }

    /// Ordered weight slots (pre-order, left to right).
    pub fn weight_slots(&self, horizon: Option<usize>) -> Result<Vec<WeightSlot>> {
        Ok(SlotTable::new(self, horizon)?.slots().to_vec())
    }

    /// Slots of the weighted operator nearest the root, looking through
    /// negations.
    pub fn root_weight_slots(&self, horizon: Option<usize>) -> Result<Vec<SlotId>> {
        let table = SlotTable::new(self, horizon)?;
        let node = table.root_node().ok_or(Error::NoWeightedOperator)?;
        Ok(table.slots()[node.base..node.base + node.len]
            .iter()
            .map(|s| s.id.clone())
            .collect())
    }

    /// Weighted nodes grouped by level; the root-most weighted operator is at
    /// level 1 and each weighted ancestor adds one.
    pub fn levels(&self) -> alloc::collections::BTreeMap<usize, Vec<(Vec<u8>, OpKind)>> {
        let mut out = alloc::collections::BTreeMap::new();
        let mut path = Vec::new();
        collect_levels(self, 0, &mut path, &mut out);
        out
    }
}

fn collect_levels(
    f: &Formula,
    weighted_above: usize,
    path: &mut Vec<u8>,
    out: &mut alloc::collections::BTreeMap<usize, Vec<(Vec<u8>, OpKind)>>,
) {
    let mut below = weighted_above;
    if let Some(kind) = f.op_kind() {
        below += 1;
        out.entry(below).or_default().push((path.clone(), kind));
    }
    for (i, c) in f.children().into_iter().enumerate() {
        path.push(i as u8);
        collect_levels(c, below, path, out);
        path.pop();
    }
}
