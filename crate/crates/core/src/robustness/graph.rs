//! Computation graph for weighted robustness.
//!
//! The graph is built once per (formula, slot layout, signal) and does not
//! depend on weight values, so it can be re-evaluated cheaply for many
//! valuations. Nodes are created on demand, one per (subformula, time) pair
//! plus one running-minimum node per step of each Until prefix. Every node
//! only refers to nodes created before it, so index order is a topological
//! order.

use alloc::vec;
use alloc::vec::Vec;

use super::soft::{soft_max, soft_max_weights, soft_min};
use super::SoftConfig;
use crate::formula::{Formula, Interval, SlotTable};
use crate::math;
use crate::signal::{ResolvedPredicate, Signal};
use crate::{Error, Result};

const NO_SLOT: u32 = u32::MAX;
const UNVISITED: u32 = u32::MAX;
const UNDEFINED: u32 = u32::MAX - 1;

pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Leaf(f64),
    Neg,
    Min,
    Max,
}

#[derive(Debug, Clone, Copy)]
struct Node {
    op: Op,
    start: u32,
    end: u32,
}

#[derive(Debug, Clone, Copy)]
struct Operand {
    node: NodeId,
    slot: u32,
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    True,
    /// Index into `ComputationGraph::pred_values`.
    Pred(usize),
    Not,
    And,
    Or,
    Until(Interval),
    Always(Interval),
    Eventually(Interval),
}

#[derive(Debug, Clone, Copy)]
struct Sub {
    kind: Kind,
    children: [usize; 2],
    base: usize,
    /// Half of the Until block: offset of the `w2` entries.
    half: usize,
}

/// Topologically ordered robustness graph for one signal.
#[derive(Debug, Clone)]
pub struct ComputationGraph {
    nodes: Vec<Node>,
    operands: Vec<Operand>,
    subs: Vec<Sub>,
    /// Predicate values per time; NaN marks an undefined evaluation.
    pred_values: Vec<Vec<f64>>,
    /// `memo[sub * len + t]`: node of subformula `sub` at time `t`.
    memo: Vec<u32>,
    len: usize,
    num_slots: usize,
    roots: Vec<Option<NodeId>>,
    top: Option<NodeId>,
}

impl ComputationGraph {
    /// Builds the graph needed to evaluate the formula at time `t`.
    pub fn build(formula: &Formula, table: &SlotTable, signal: &Signal, t: usize) -> Result<Self> {
        let mut g = Self::skeleton(formula, table, signal)?;
        if t > signal.t_final() {
            return Err(Error::TimeOutOfRange {
                t,
                t_final: signal.t_final(),
            });
        }
        let root = g.demand(0, t)?.ok_or(Error::IntervalBeyondTrace)?;
        g.roots = vec![None; g.len];
        g.roots[t] = Some(root);
        Ok(g)
    }

    /// Builds the graph for every time index; times whose windows fall off
    /// the end of the trace have no root.
    pub fn build_trace(formula: &Formula, table: &SlotTable, signal: &Signal) -> Result<Self> {
        let mut g = Self::skeleton(formula, table, signal)?;
        g.roots = (0..g.len).map(|t| g.demand(0, t)).collect::<Result<_>>()?;
        Ok(g)
    }

    fn skeleton(formula: &Formula, table: &SlotTable, signal: &Signal) -> Result<Self> {
        if let Some(h) = table.horizon() {
            if h != signal.t_final() {
                return Err(Error::HorizonMismatch {
                    expected: Some(h),
                    found: signal.t_final(),
                });
            }
        }
        let mut subs = Vec::with_capacity(formula.size());
        let mut pred_values = Vec::new();
        let mut blocks = table.nodes().iter();
        flatten(formula, signal, &mut blocks, &mut subs, &mut pred_values)?;
        let len = signal.len();
        Ok(ComputationGraph {
            nodes: Vec::new(),
            operands: Vec::new(),
            memo: vec![UNVISITED; subs.len() * len],
            subs,
            pred_values,
            len,
            num_slots: table.len(),
            roots: Vec::new(),
            top: None,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_slots(&self) -> usize {
        self.num_slots
    }

    pub fn root(&self, t: usize) -> Option<NodeId> {
        self.roots.get(t).copied().flatten()
    }

    fn push(&mut self, op: Op, operands: &[Operand]) -> NodeId {
        let start = self.operands.len() as u32;
        self.operands.extend_from_slice(operands);
        self.nodes.push(Node {
            op,
            start,
            end: self.operands.len() as u32,
        });
        (self.nodes.len() - 1) as NodeId
    }

    fn top(&mut self) -> NodeId {
        match self.top {
            Some(n) => n,
            None => {
                let n = self.push(Op::Leaf(f64::INFINITY), &[]);
                self.top = Some(n);
                n
            }
        }
    }

    /// Node for subformula `sub` at time `t`, or `None` when a temporal
    /// window it needs lies entirely beyond the trace.
    fn demand(&mut self, sub: usize, t: usize) -> Result<Option<NodeId>> {
        let key = sub * self.len + t;
        match self.memo[key] {
            UNVISITED => {}
            UNDEFINED => return Ok(None),
            n => return Ok(Some(n)),
        }
        let node = self.create(sub, t)?;
        self.memo[key] = node.unwrap_or(UNDEFINED);
        Ok(node)
    }

    fn create(&mut self, sub: usize, t: usize) -> Result<Option<NodeId>> {
        let t_final = self.len - 1;
        let Sub {
            kind,
            children: [c0, c1],
            base,
            half,
        } = self.subs[sub];
        let unweighted = |node| Operand { node, slot: NO_SLOT };
        let weighted = |node, slot: usize| Operand {
            node,
            slot: slot as u32,
        };
        let node = match kind {
            Kind::True => self.top(),
            Kind::Pred(p) => {
                let value = self.pred_values[p][t];
                if value.is_nan() {
                    return Err(Error::UndefinedPredicate(alloc::format!(
                        "opposite infinities at t = {t}"
                    )));
                }
                self.push(Op::Leaf(value), &[])
            }
            Kind::Not => {
                let Some(c) = self.demand(c0, t)? else {
                    return Ok(None);
                };
                self.push(Op::Neg, &[unweighted(c)])
            }
            Kind::And | Kind::Or => {
                let (Some(l), Some(r)) = (self.demand(c0, t)?, self.demand(c1, t)?) else {
                    return Ok(None);
                };
                let op = if matches!(kind, Kind::And) {
                    Op::Min
                } else {
                    Op::Max
                };
                self.push(op, &[weighted(l, base), weighted(r, base + 1)])
            }
            Kind::Always(interval) | Kind::Eventually(interval) => {
                let Some((lo, hi)) = interval.window(t, t_final) else {
                    return Ok(None);
                };
                let mut ops = Vec::with_capacity(hi - lo + 1);
                for tp in lo..=hi {
                    let Some(c) = self.demand(c0, tp)? else {
                        return Ok(None);
                    };
                    ops.push(weighted(c, base + (tp - t - interval.a)));
                }
                let op = if matches!(kind, Kind::Always(_)) {
                    Op::Min
                } else {
                    Op::Max
                };
                self.push(op, &ops)
            }
            Kind::Until(interval) => {
                let Some((lo, hi)) = interval.window(t, t_final) else {
                    return Ok(None);
                };
                // Running minimum of the left operand over [t, t').
                let mut hold: Option<NodeId> = None;
                let mut next = t;
                let mut terms = Vec::with_capacity(hi - lo + 1);
                for tp in lo..=hi {
                    while next < tp {
                        let Some(l) = self.demand(c0, next)? else {
                            return Ok(None);
                        };
                        hold = Some(match hold {
                            None => l,
                            Some(h) => self.push(Op::Min, &[unweighted(h), unweighted(l)]),
                        });
                        next += 1;
                    }
                    let Some(r) = self.demand(c1, tp)? else {
                        return Ok(None);
                    };
                    let h = match hold {
                        Some(h) => h,
                        None => self.top(),
                    };
                    let k = tp - t - interval.a;
                    let term = self.push(Op::Min, &[weighted(r, base + k), weighted(h, base + half + k)]);
                    terms.push(unweighted(term));
                }
                self.push(Op::Max, &terms)
            }
        };
        Ok(Some(node))
    }

    /// Hard weighted robustness of every node.
    pub fn eval_hard(&self, weights: &[f64]) -> Vec<f64> {
        debug_assert_eq!(weights.len(), self.num_slots);
        let mut values = vec![0.0; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            let ops = &self.operands[node.start as usize..node.end as usize];
            values[i] = match node.op {
                Op::Leaf(v) => v,
                Op::Neg => -values[ops[0].node as usize],
                Op::Min => ops
                    .iter()
                    .map(|o| scaled(&values, weights, o))
                    .fold(f64::INFINITY, f64::min),
                Op::Max => ops
                    .iter()
                    .map(|o| scaled(&values, weights, o))
                    .fold(f64::NEG_INFINITY, f64::max),
            };
        }
        values
    }

    /// Hard weighted robustness at time `t`.
    pub fn robustness(&self, weights: &[f64], t: usize) -> Result<f64> {
        let root = self.root(t).ok_or(Error::IntervalBeyondTrace)?;
        Ok(self.eval_hard(weights)[root as usize])
    }

    fn soft_leaves(&self, cfg: &SoftConfig) -> Result<()> {
        for node in &self.nodes {
            if let Op::Leaf(v) = node.op {
                if v.is_finite() && math::abs(v) > cfg.inf_sentinel {
                    return Err(Error::SentinelTooSmall {
                        sentinel: cfg.inf_sentinel,
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }

    /// Smooth robustness of every node; infinite leaves become `±sentinel`.
    pub fn eval_soft(&self, weights: &[f64], cfg: &SoftConfig) -> Result<Vec<f64>> {
        cfg.validate()?;
        self.soft_leaves(cfg)?;
        let mut values = vec![0.0; self.nodes.len()];
        let mut buf = Vec::new();
        for (i, node) in self.nodes.iter().enumerate() {
            let ops = &self.operands[node.start as usize..node.end as usize];
            values[i] = match node.op {
                Op::Leaf(v) => clamp_leaf(v, cfg.inf_sentinel),
                Op::Neg => -values[ops[0].node as usize],
                Op::Min | Op::Max => {
                    buf.clear();
                    buf.extend(ops.iter().map(|o| scaled(&values, weights, o)));
                    if node.op == Op::Min {
                        soft_min(&buf, cfg.beta)
                    } else {
                        soft_max(&buf, cfg.beta)
                    }
                }
            };
        }
        Ok(values)
    }

    pub fn soft_robustness(&self, weights: &[f64], cfg: &SoftConfig, t: usize) -> Result<f64> {
        let root = self.root(t).ok_or(Error::IntervalBeyondTrace)?;
        Ok(self.eval_soft(weights, cfg)?[root as usize])
    }

    /// Smooth robustness at `t` and its gradient with respect to every slot
    /// of the flat weight vector (reverse mode).
    pub fn soft_gradient(&self, weights: &[f64], cfg: &SoftConfig, t: usize) -> Result<(f64, Vec<f64>)> {
        let root = self.root(t).ok_or(Error::IntervalBeyondTrace)? as usize;
        let values = self.eval_soft(weights, cfg)?;
        let mut adjoint = vec![0.0; root + 1];
        adjoint[root] = 1.0;
        let mut grad = vec![0.0; self.num_slots];
        let mut terms = Vec::new();
        let mut probs = Vec::new();
        for i in (0..=root).rev() {
            let upstream = adjoint[i];
            if upstream == 0.0 {
                continue;
            }
            let node = self.nodes[i];
            let ops = &self.operands[node.start as usize..node.end as usize];
            match node.op {
                Op::Leaf(_) => {}
                Op::Neg => adjoint[ops[0].node as usize] -= upstream,
                Op::Min | Op::Max => {
                    terms.clear();
                    terms.extend(ops.iter().map(|o| scaled(&values, weights, o)));
                    probs.resize(terms.len(), 0.0);
                    let sign = if node.op == Op::Max { 1.0 } else { -1.0 };
                    soft_max_weights(&terms, cfg.beta, sign, &mut probs);
                    for (o, p) in ops.iter().zip(&probs) {
                        let d = upstream * p;
                        let child = o.node as usize;
                        if o.slot == NO_SLOT {
                            adjoint[child] += d;
                        } else {
                            let w = weights[o.slot as usize];
                            adjoint[child] += d * w;
                            grad[o.slot as usize] += d * values[child];
                        }
                    }
                }
            }
        }
        Ok((values[root], grad))
    }

    /// Hard values of every subformula at every time (`None` where
    /// undefined or not needed), in subformula pre-order.
    pub fn subformula_values(&self, weights: &[f64]) -> Vec<Vec<Option<f64>>> {
        let values = self.eval_hard(weights);
        (0..self.subs.len())
            .map(|sub| {
                (0..self.len)
                    .map(|t| match self.memo[sub * self.len + t] {
                        UNVISITED | UNDEFINED => None,
                        n => Some(values[n as usize]),
                    })
                    .collect()
            })
            .collect()
    }
}

#[inline]
fn scaled(values: &[f64], weights: &[f64], o: &Operand) -> f64 {
    let v = values[o.node as usize];
    if o.slot == NO_SLOT {
        v
    } else {
        weights[o.slot as usize] * v
    }
}

#[inline]
fn clamp_leaf(v: f64, sentinel: f64) -> f64 {
    if v == f64::INFINITY {
        sentinel
    } else if v == f64::NEG_INFINITY {
        -sentinel
    } else {
        v
    }
}

fn flatten<'a>(
    f: &Formula,
    signal: &Signal,
    blocks: &mut impl Iterator<Item = &'a crate::formula::WeightedNode>,
    out: &mut Vec<Sub>,
    preds: &mut Vec<Vec<f64>>,
) -> Result<usize> {
    let me = out.len();
    let (base, half) = if f.op_kind().is_some() {
        let b = blocks.next().expect("slot table does not match formula");
        (b.base, b.len / 2)
    } else {
        (0, 0)
    };
    let kind = match f {
        Formula::True => Kind::True,
        Formula::Pred(p) => {
            let resolved: ResolvedPredicate = p.resolve(signal)?;
            preds.push(
                (0..signal.len())
                    .map(|t| resolved.eval(signal, t).unwrap_or(f64::NAN))
                    .collect(),
            );
            Kind::Pred(preds.len() - 1)
        }
        Formula::Not(_) => Kind::Not,
        Formula::And { .. } => Kind::And,
        Formula::Or { .. } => Kind::Or,
        Formula::Until { interval, .. } => Kind::Until(*interval),
        Formula::Always { interval, .. } => Kind::Always(*interval),
        Formula::Eventually { interval, .. } => Kind::Eventually(*interval),
    };
    out.push(Sub {
        kind,
        children: [0, 0],
        base,
        half,
    });
    let mut children = [0, 0];
    for (i, c) in f.children().into_iter().enumerate() {
        children[i] = flatten(c, signal, blocks, out, preds)?;
    }
    out[me].children = children;
    Ok(me)
}
