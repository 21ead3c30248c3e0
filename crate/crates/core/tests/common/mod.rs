//! Random instances and fixtures shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use wstlpref_core::formula::parse;
use wstlpref_core::signal::{bool_value, Channel, PredicateFn};
use wstlpref_core::{Formula, Interval, Signal, SlotTable, WeightValuation};

pub const REAL_CHANNELS: [&str; 3] = ["a", "b", "c"];

/// Shape of the random formulas and signals.
#[derive(Debug, Clone, Copy)]
pub struct Gen {
    /// Maximum syntax-tree depth (a predicate has depth 1).
    pub max_depth: usize,
    /// Include the Boolean channel `p` and the constant `true`.
    pub infinite: bool,
    pub unbounded: bool,
    pub max_a: usize,
    pub max_width: usize,
    pub min_len: usize,
    pub max_len: usize,
}

impl Default for Gen {
    fn default() -> Self {
        Gen {
            max_depth: 4,
            infinite: true,
            unbounded: true,
            max_a: 2,
            max_width: 3,
            min_len: 3,
            max_len: 10,
        }
    }
}

impl Gen {
    pub fn finite() -> Self {
        Gen {
            infinite: false,
            ..Gen::default()
        }
    }

    pub fn formula<R: Rng>(&self, rng: &mut R) -> Formula {
        self.node(rng, self.max_depth)
    }

    fn node<R: Rng>(&self, rng: &mut R, depth: usize) -> Formula {
        if depth <= 1 || rng.gen_bool(0.25) {
            return self.leaf(rng);
        }
        let d = depth - 1;
        match rng.gen_range(0..6) {
            0 => Formula::not(self.node(rng, d)),
            1 => Formula::and(self.node(rng, d), self.node(rng, d)),
            2 => Formula::or(self.node(rng, d), self.node(rng, d)),
            3 => Formula::until(self.node(rng, d), self.interval(rng), self.node(rng, d)),
            4 => Formula::always(self.interval(rng), self.node(rng, d)),
            _ => Formula::eventually(self.interval(rng), self.node(rng, d)),
        }
    }

    fn interval<R: Rng>(&self, rng: &mut R) -> Interval {
        let a = rng.gen_range(0..=self.max_a);
        if self.unbounded && rng.gen_bool(0.2) {
            Interval::from(a)
        } else {
            Interval::bounded(a, a + rng.gen_range(0..=self.max_width)).unwrap()
        }
    }

    fn leaf<R: Rng>(&self, rng: &mut R) -> Formula {
        if self.infinite {
            match rng.gen_range(0..10) {
                0 => return Formula::True,
                1 => return Formula::pred(PredicateFn::channel("p")),
                2 => return Formula::pred(PredicateFn::channel("p").negated()),
                _ => {}
            }
        }
        let ch = REAL_CHANNELS[rng.gen_range(0..REAL_CHANNELS.len())];
        let coef = rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        Formula::pred(PredicateFn::new(
            vec![(ch.into(), coef)],
            rng.gen_range(-1.0..1.0),
        ))
    }

    pub fn signal<R: Rng>(&self, rng: &mut R, len: usize) -> Signal {
        let mut channels: Vec<Channel> = REAL_CHANNELS.iter().map(|c| Channel::real(*c)).collect();
        let mut samples: Vec<Vec<f64>> = REAL_CHANNELS
            .iter()
            .map(|_| (0..len).map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect();
        if self.infinite {
            channels.push(Channel::boolean("p"));
            samples.push((0..len).map(|_| bool_value(rng.gen_bool(0.5))).collect());
        }
        Signal::new(1.0, channels, samples).unwrap()
    }

    pub fn len<R: Rng>(&self, rng: &mut R) -> usize {
        rng.gen_range(self.min_len..=self.max_len)
    }
}

/// Log-uniform positive weights in `[0.1, 10]`.
pub fn positive_valuation<R: Rng>(rng: &mut R, table: &SlotTable) -> WeightValuation {
    let params: Vec<f64> = (0..table.num_parameters())
        .map(|_| 10f64.powf(rng.gen_range(-1.0..1.0)))
        .collect();
    WeightValuation::from_values(table, &params).unwrap()
}

/// Uniform weights in `(0, 1]`.
pub fn unit_box_valuation<R: Rng>(rng: &mut R, table: &SlotTable) -> WeightValuation {
    let params: Vec<f64> = (0..table.num_parameters())
        .map(|_| 1.0 - rng.gen::<f64>())
        .collect();
    WeightValuation::from_values(table, &params).unwrap()
}

/// A formula and a signal on which robustness at `t = 0` is defined.
pub struct Instance {
    pub phi: Formula,
    pub signal: Signal,
    pub table: SlotTable,
}

pub fn instance<R: Rng>(gen: &Gen, rng: &mut R) -> Instance {
    loop {
        let phi = gen.formula(rng);
        let len = gen.len(rng);
        let signal = gen.signal(rng, len);
        if wstlpref_core::rho(&signal, &phi, 0).is_ok() {
            let table = SlotTable::new(&phi, Some(signal.t_final())).unwrap();
            return Instance { phi, signal, table };
        }
    }
}

/// Smallest gap between distinct finite predicate values of an instance's
/// leaves (a proxy for ties in the hard min/max).
pub fn leaf_gap(phi: &Formula, s: &Signal) -> f64 {
    let mut values = Vec::new();
    collect_leaves(phi, s, &mut values);
    values.retain(|v: &f64| v.is_finite());
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.dedup();
    values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

fn collect_leaves(phi: &Formula, s: &Signal, out: &mut Vec<f64>) {
    if let Formula::Pred(f) = phi {
        for t in 0..s.len() {
            out.push(f.eval(s, t).unwrap());
        }
    }
    for c in phi.children() {
        collect_leaves(c, s, out);
    }
}

pub fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

pub fn example_signal() -> Signal {
    Signal::from_real(
        1.0,
        &[
            ("s1", vec![1.0, -1.0, -2.0, -2.0]),
            ("s2", vec![1.0, 1.0, 1.0, 2.0]),
        ],
    )
    .unwrap()
}

/// `◇[0,3](¬(s1 ≥ 0) ∧ s2 ≥ 0)`, written with the negation folded in.
pub fn example_formula() -> Formula {
    parse("F[0,3](-s1 >= 0 & s2 >= 0)").unwrap()
}

/// Weights for the worked example: the `◇` block, then the `∧` block.
pub fn example_valuation(phi: &Formula, ev: [f64; 4], and: [f64; 2]) -> WeightValuation {
    let table = SlotTable::new(phi, None).unwrap();
    let mut vals = ev.to_vec();
    vals.extend(and);
    WeightValuation::from_values(&table, &vals).unwrap()
}
