use crate::formula::{Formula, OpKind, SlotStatus, SlotTable, WeightValuation};
use crate::{Error, Result};

/// Rescales a valuation into `(0, 1]^n` without changing the order of
/// robustness values between signals.
///
/// Works bottom-up: each weighted node's block is divided by its maximum and
/// the parent entries that multiply that node's robustness absorb the
/// factor; the root block is finally divided by its maximum, which scales
/// every robustness value at the root by the same positive constant.
/// `horizon` is the trace horizon the slots were laid out for (needed only
/// for unbounded operators).
pub fn normalize_to_domain(
    phi: &Formula,
    w: &WeightValuation,
    horizon: Option<usize>,
) -> Result<WeightValuation> {
    let table = SlotTable::new(phi, horizon)?;
    let mut flat = table.flatten(w)?;
    normalize_flat(&table, &mut flat)?;
    Ok(table.valuation(&flat))
}

/// In-place version of [`normalize_to_domain`] on a flat weight vector.
pub fn normalize_flat(table: &SlotTable, flat: &mut [f64]) -> Result<()> {
    if table
        .slots()
        .iter()
        .any(|s| matches!(s.status, SlotStatus::Constant(_)))
    {
        return Err(Error::ConstantSlots);
    }
    for (slot, &v) in table.slots().iter().zip(flat.iter()) {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidWeight {
                slot: alloc::string::ToString::to_string(&slot.id),
                value: v,
            });
        }
    }
    let nodes = table.nodes();
    let depth = nodes.iter().map(|n| n.level).max().unwrap_or(0);
    for level in (2..=depth).rev() {
        for node in nodes.iter().filter(|n| n.level == level) {
            let block = &mut flat[node.base..node.base + node.len];
            let m = block.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            block.iter_mut().for_each(|x| *x /= m);
            let parent = &nodes[node.parent.expect("non-root node has a parent")];
            let (start, end) = match parent.kind {
                OpKind::And | OpKind::Or => {
                    let i = parent.base + node.side as usize;
                    (i, i + 1)
                }
                OpKind::Always | OpKind::Eventually => (parent.base, parent.base + parent.len),
                OpKind::Until => {
                    // The right operand is scaled by the first half, the
                    // left operand's prefix minimum by the second.
                    let half = parent.len / 2;
                    if node.side == 1 {
                        (parent.base, parent.base + half)
                    } else {
                        (parent.base + half, parent.base + parent.len)
                    }
                }
            };
            flat[start..end].iter_mut().for_each(|x| *x *= m);
        }
    }
    for root in nodes.iter().filter(|n| n.level == 1) {
        let block = &mut flat[root.base..root.base + root.len];
        let m = block.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        block.iter_mut().for_each(|x| *x /= m);
    }
    Ok(())
}
