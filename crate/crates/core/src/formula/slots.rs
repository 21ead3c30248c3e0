use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use super::Formula;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpKind {
    And,
    Or,
    Until,
    Always,
    Eventually,
}

/// Stable address of one weight: the node path from the root (child indices)
/// plus the offset inside that node's block.
///
/// Printed as `r.0.1:3`; `r:0` is the first slot of the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlotId {
    pub path: Vec<u8>,
    pub offset: usize,
}

impl SlotId {
    pub fn new(path: Vec<u8>, offset: usize) -> Self {
        SlotId { path, offset }
    }
}

impl fmt::Display for SlotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("r")?;
        for p in &self.path {
            write!(f, ".{p}")?;
        }
        write!(f, ":{}", self.offset)
    }
}

impl FromStr for SlotId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::UnknownSlot(s.to_string());
        let (path, offset) = s.split_once(':').ok_or_else(bad)?;
        let mut parts = path.split('.');
        if parts.next() != Some("r") {
            return Err(bad());
        }
        let path = parts
            .map(|p| p.parse::<u8>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let offset = offset.parse().map_err(|_| bad())?;
        Ok(SlotId { path, offset })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlotStatus {
    Parameter,
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSlot {
    pub id: SlotId,
    pub status: SlotStatus,
}

impl WeightSlot {
    pub fn is_parameter(&self) -> bool {
        self.status == SlotStatus::Parameter
    }
}

/// One weighted operator and the contiguous range of slots it owns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedNode {
    pub path: Vec<u8>,
    pub kind: OpKind,
    /// First slot index in the table.
    pub base: usize,
    pub len: usize,
    /// 1 for the root-most weighted operator.
    pub level: usize,
    /// Index (into [`SlotTable::nodes`]) of the nearest weighted ancestor.
    pub parent: Option<usize>,
    /// Which child of the weighted parent this node sits under (through
    /// negations): 0 = left or only child, 1 = right.
    pub side: u8,
}

/// The slot layout of a formula for a given horizon.
///
/// Slots are numbered in pre-order, left to right, so the flat index order
/// matches the ordering of [`SlotId`].
#[derive(Debug, Clone, PartialEq)]
pub struct SlotTable {
    slots: Vec<WeightSlot>,
    nodes: Vec<WeightedNode>,
    horizon: Option<usize>,
}

impl SlotTable {
    /// Lays out the slots of `formula`. `horizon` (the last sample index of
    /// the traces to be evaluated) is required when the formula has
    /// unbounded temporal operators.
    pub fn new(formula: &Formula, horizon: Option<usize>) -> Result<Self> {
        let mut table = SlotTable {
            slots: Vec::new(),
            nodes: Vec::new(),
            horizon: if formula.has_unbounded() { horizon } else { None },
        };
        let mut path = Vec::new();
        table.visit(formula, horizon, &mut path, None, 0)?;
        Ok(table)
    }

    fn visit(
        &mut self,
        f: &Formula,
        horizon: Option<usize>,
        path: &mut Vec<u8>,
        parent: Option<usize>,
        side: u8,
    ) -> Result<()> {
        let mut here = parent;
        if let Some(kind) = f.op_kind() {
            let len = f.own_block_len(horizon)?;
            let base = self.slots.len();
            match f.pins() {
                Some(pins) if pins.len() != len => {
                    return Err(Error::PinnedBlockLength {
                        path: SlotId::new(path.clone(), 0).to_string(),
                        expected: len,
                        found: pins.len(),
                    })
                }
                pins => {
                    for offset in 0..len {
                        let status = match pins.and_then(|p| p[offset]) {
                            Some(v) => SlotStatus::Constant(v),
                            None => SlotStatus::Parameter,
                        };
                        self.slots.push(WeightSlot {
                            id: SlotId::new(path.clone(), offset),
                            status,
                        });
                    }
                }
            }
            let level = parent.map_or(1, |p| self.nodes[p].level + 1);
            self.nodes.push(WeightedNode {
                path: path.clone(),
                kind,
                base,
                len,
                level,
                parent,
                side,
            });
            here = Some(self.nodes.len() - 1);
        }
        for (i, c) in f.children().into_iter().enumerate() {
            // Negation passes its parent's side through unchanged.
            let child_side = if here == parent { side } else { i as u8 };
            path.push(i as u8);
            self.visit(c, horizon, path, here, child_side)?;
            path.pop();
        }
        Ok(())
    }

    pub fn slots(&self) -> &[WeightSlot] {
        &self.slots
    }

    /// Weighted operators in pre-order.
    pub fn nodes(&self) -> &[WeightedNode] {
        &self.nodes
    }

    /// Horizon the unbounded blocks were sized for; `None` when the formula
    /// has only bounded intervals.
    pub fn horizon(&self) -> Option<usize> {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn root_node(&self) -> Option<&WeightedNode> {
        self.nodes.first()
    }

    /// Flat indices of the parameter slots.
    pub fn parameter_indices(&self) -> Vec<usize> {
        (0..self.slots.len())
            .filter(|&i| self.slots[i].is_parameter())
            .collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.slots.iter().filter(|s| s.is_parameter()).count()
    }

    pub fn index_of(&self, id: &SlotId) -> Option<usize> {
        self.slots.binary_search_by(|s| s.id.cmp(id)).ok()
    }

    /// Full flat weight vector: parameters from `valuation`, constants from
    /// the pins.
    pub fn flatten(&self, valuation: &WeightValuation) -> Result<Vec<f64>> {
        for (id, _) in valuation.iter() {
            match self.index_of(id) {
                Some(i) if self.slots[i].is_parameter() => {}
                _ => return Err(Error::UnknownSlot(id.to_string())),
            }
        }
        self.slots
            .iter()
            .map(|slot| {
                let v = match slot.status {
                    SlotStatus::Constant(c) => c,
                    SlotStatus::Parameter => valuation
                        .get(&slot.id)
                        .ok_or_else(|| Error::MissingWeight(slot.id.to_string()))?,
                };
                check_weight(&slot.id, v)?;
                Ok(v)
            })
            .collect()
    }

    /// Valuation of the parameter slots read from a flat vector.
    pub fn valuation(&self, flat: &[f64]) -> WeightValuation {
        debug_assert_eq!(flat.len(), self.slots.len());
        WeightValuation(
            self.slots
                .iter()
                .zip(flat)
                .filter(|(s, _)| s.is_parameter())
                .map(|(s, v)| (s.id.clone(), *v))
                .collect(),
        )
    }

    /// Writes parameter values (in parameter order) into a flat vector that
    /// already holds the constants.
    pub fn scatter_parameters(&self, params: &[f64], flat: &mut [f64]) {
        let mut it = params.iter();
        for (slot, out) in self.slots.iter().zip(flat.iter_mut()) {
            if slot.is_parameter() {
                *out = *it.next().expect("parameter vector too short");
            }
        }
    }

    /// Flat vector with every parameter set to `value`.
    pub fn filled(&self, value: f64) -> Vec<f64> {
        self.slots
            .iter()
            .map(|s| match s.status {
                SlotStatus::Constant(c) => c,
                SlotStatus::Parameter => value,
            })
            .collect()
    }

    /// The all-ones valuation of the parameters (traditional STL weights).
    pub fn unit_valuation(&self) -> WeightValuation {
        self.valuation(&self.filled(1.0))
    }
}

fn check_weight(id: &SlotId, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidWeight {
            slot: id.to_string(),
            value: v,
        })
    }
}

/// Positive values for the parameter slots of a formula.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightValuation(BTreeMap<SlotId, f64>);

impl WeightValuation {
    pub fn new() -> Self {
        WeightValuation(BTreeMap::new())
    }

    pub fn insert(&mut self, id: SlotId, value: f64) -> Option<f64> {
        self.0.insert(id, value)
    }

    pub fn get(&self, id: &SlotId) -> Option<f64> {
        self.0.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SlotId, f64)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }

    /// Checks strict positivity of every entry.
    pub fn validate(&self) -> Result<()> {
        self.iter().try_for_each(|(id, v)| check_weight(id, v))
    }

    /// Builds a valuation for slots listed in table order.
    pub fn from_values(table: &SlotTable, params: &[f64]) -> Result<Self> {
        let ids: Vec<_> = table
            .slots()
            .iter()
            .filter(|s| s.is_parameter())
            .map(|s| s.id.clone())
            .collect();
        if ids.len() != params.len() {
            return Err(Error::InvalidConfig(format!(
                "{} parameter values for {} parameter slots",
                params.len(),
                ids.len()
            )));
        }
        Ok(WeightValuation(
            ids.into_iter().zip(params.iter().copied()).collect(),
        ))
    }
}

impl FromIterator<(SlotId, f64)> for WeightValuation {
    fn from_iter<I: IntoIterator<Item = (SlotId, f64)>>(iter: I) -> Self {
        WeightValuation(iter.into_iter().collect())
    }
}
