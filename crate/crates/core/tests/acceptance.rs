//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the summary lines are
//! always printed; the process exits nonzero if any criterion fails.

mod common;

use std::cmp::Ordering;
use std::panic::{self, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use wstlpref_core::baselines::{bt_fit, safety_eval, BtConfig, WstlPredictor};
use wstlpref_core::learn::{
    count_satisfied, gradient_solve, normalize_to_domain, random_sampling_solve, stl_baseline,
    GradientSolver, LearnConfig, PreferenceDataset,
};
use wstlpref_core::scenarios::{generate_dataset, Scenario, StopSignSpec};
use wstlpref_core::{
    grad_weights, rho, soft_wstl_robustness, wstl_robustness, Formula, Signal, SlotTable, SoftConfig,
    WeightValuation,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ms(d: Duration) -> String {
    format!("{:.3} ms", d.as_secs_f64() * 1e3)
}

type Criterion = (u32, &'static str, Box<dyn Fn() -> Outcome>);

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "worked example exactness", Box::new(worked_example)),
        (2, "normalization into the unit box", Box::new(normalization)),
        (3, "soundness", Box::new(soundness)),
        (4, "unit-weight neutrality", Box::new(neutrality)),
        (5, "root homogeneity", Box::new(homogeneity)),
        (6, "gradient check", Box::new(gradient_check)),
        (7, "soft convergence", Box::new(soft_convergence)),
        (
            8,
            "synthetic recovery",
            Box::new(|| {
                let r = recovery();
                outcome(r.pass, r.detail.clone())
            }),
        ),
        (9, "safety of learned valuations", Box::new(safety)),
        (10, "brute-force optimality", Box::new(brute_force)),
        (11, "evaluation performance", Box::new(performance)),
    ];
    let mut failed = 0;
    for (id, name, run) in &criteria {
        let result = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {} {name}: {}",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn worked_example() -> Outcome {
    let start = Instant::now();
    let s = example_signal();
    let phi = example_formula();
    let w = example_valuation(&phi, [1.5, 0.3, 3.0, 1.2], [1.0, 2.0]);
    let rho0 = rho(&s, &phi, 0).unwrap();
    let r0 = wstl_robustness(&s, &phi, &w, 0).unwrap();
    let elapsed = start.elapsed();
    let pass = rho0.to_bits() == 2f64.to_bits()
        && r0.to_bits() == 6f64.to_bits()
        && elapsed < Duration::from_millis(1);
    outcome(pass, format!("rho = {rho0}, r = {r0}, {}", ms(elapsed)))
}

fn within_ulps(got: f64, want: f64, ulps: u64) -> bool {
    (got.to_bits() as i64 - want.to_bits() as i64).unsigned_abs() <= ulps
}

fn normalization() -> Outcome {
    let phi = example_formula();
    let w = example_valuation(&phi, [1.5, 0.3, 3.0, 1.2], [1.0, 2.0]);
    let n = normalize_to_domain(&phi, &w, None).unwrap();
    let got: Vec<f64> = n.iter().map(|(_, v)| v).collect();
    let want: [f64; 6] = [0.5, 0.1, 1.0, 0.4, 0.5, 1.0];
    // 0.3·2/6 and 1.2·2/6 are not representable as the decimals 0.1 and
    // 0.4; the correctly rounded results sit one ulp below them.
    let exact_ok = got.len() == 6
        && [0, 2, 4, 5]
            .iter()
            .all(|&i| got[i].to_bits() == want[i].to_bits())
        && [1, 3].iter().all(|&i| within_ulps(got[i], want[i], 1));

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let gen = Gen::default();
    let mut order_ok = 0;
    let mut worst = 0.0f64;
    let total = 100;
    for _ in 0..total {
        let inst = loop {
            let inst = instance(&gen, &mut rng);
            if !inst.table.nodes().is_empty() {
                break inst;
            }
        };
        let other = gen.signal(&mut rng, inst.signal.len());
        let w = positive_valuation(&mut rng, &inst.table);
        let wn = normalize_to_domain(&inst.phi, &w, Some(inst.signal.t_final())).unwrap();
        let in_box = wn.iter().all(|(_, v)| v > 0.0 && v <= 1.0);
        let before = [&inst.signal, &other].map(|s| wstl_robustness(s, &inst.phi, &w, 0).unwrap());
        let after = [&inst.signal, &other].map(|s| wstl_robustness(s, &inst.phi, &wn, 0).unwrap());
        let order = before[0].partial_cmp(&before[1]) == after[0].partial_cmp(&after[1]);
        let signs = (0..2).all(|i| sign(before[i]) == sign(after[i]));
        let scales: Vec<f64> = (0..2)
            .filter(|&i| before[i].is_finite() && before[i] != 0.0)
            .map(|i| after[i] / before[i])
            .collect();
        let common = match scales.as_slice() {
            [c1, c2] => {
                let rel = (c1 - c2).abs() / c1.abs();
                worst = worst.max(rel);
                rel <= 1e-9 && *c1 > 0.0
            }
            [c] => *c > 0.0,
            _ => true,
        };
        let inf_ok = (0..2).all(|i| before[i].is_finite() || before[i] == after[i]);
        if in_box && order && signs && common && inf_ok {
            order_ok += 1;
        }
    }
    outcome(
        exact_ok && order_ok == total,
        format!("example weights -> {got:?}; order and common scale kept on {order_ok}/{total} pairs (worst scale mismatch {worst:.1e})"),
    )
}

fn sound_instances() -> Vec<(Instance, WeightValuation)> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let gen = Gen::default();
    (0..1000)
        .map(|_| {
            let inst = instance(&gen, &mut rng);
            let w = positive_valuation(&mut rng, &inst.table);
            (inst, w)
        })
        .collect()
}

fn soundness() -> Outcome {
    let start = Instant::now();
    let instances = sound_instances();
    let mut agree = 0;
    let mut infinite = 0;
    for (inst, w) in &instances {
        let r = wstl_robustness(&inst.signal, &inst.phi, w, 0).unwrap();
        let p = rho(&inst.signal, &inst.phi, 0).unwrap();
        if sign(r) == sign(p) {
            agree += 1;
        }
        if r.is_infinite() {
            infinite += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        agree == instances.len() && elapsed < Duration::from_secs(10),
        format!(
            "sign agreement on {agree}/{} instances ({infinite} with infinite robustness), {}",
            instances.len(),
            ms(elapsed)
        ),
    )
}

fn neutrality() -> Outcome {
    let instances = sound_instances();
    let mut equal = 0;
    for (inst, _) in &instances {
        let unit = inst.table.unit_valuation();
        let r = wstl_robustness(&inst.signal, &inst.phi, &unit, 0).unwrap();
        let p = rho(&inst.signal, &inst.phi, 0).unwrap();
        if r.to_bits() == p.to_bits() {
            equal += 1;
        }
    }
    outcome(
        equal == instances.len(),
        format!("bitwise equal on {equal}/{} instances", instances.len()),
    )
}

fn homogeneity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let gen = Gen::default();
    let mut ok = 0;
    let total = 100;
    for _ in 0..total {
        let inst = loop {
            let inst = instance(&gen, &mut rng);
            if !inst.table.nodes().is_empty() {
                break inst;
            }
        };
        let w = positive_valuation(&mut rng, &inst.table);
        let root = inst.phi.root_weight_slots(Some(inst.signal.t_final())).unwrap();
        let r = wstl_robustness(&inst.signal, &inst.phi, &w, 0).unwrap();
        let all = [0.5, 2.0, 10.0].iter().all(|&alpha| {
            let scaled: WeightValuation = w
                .iter()
                .map(|(id, v)| (id.clone(), if root.contains(id) { alpha * v } else { v }))
                .collect();
            let rs = wstl_robustness(&inst.signal, &inst.phi, &scaled, 0).unwrap();
            let want = alpha * r;
            if want.is_finite() {
                (rs - want).abs() <= 1e-12 * want.abs()
            } else {
                rs == want
            }
        });
        if all {
            ok += 1;
        }
    }
    outcome(ok == total, format!("exact scaling on {ok}/{total} instances"))
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let gen = Gen::default();
    let cfg = SoftConfig::new(50.0);
    let total = 100;
    let mut ok = 0;
    let mut worst = 0.0f64;
    for _ in 0..total {
        let inst = loop {
            let inst = instance(&gen, &mut rng);
            if inst.table.num_parameters() > 0 && leaf_gap(&inst.phi, &inst.signal) >= 1e-3 {
                break inst;
            }
        };
        let w = positive_valuation(&mut rng, &inst.table);
        let g = grad_weights(&inst.signal, &inst.phi, &w, &cfg, 0).unwrap();
        let f = |w: &WeightValuation| soft_wstl_robustness(&inst.signal, &inst.phi, w, &cfg, 0).unwrap();
        let mut err = 0.0f64;
        let mut scale = 0.0f64;
        for (id, v) in w.iter() {
            let h = 1e-6 * v.abs().max(1.0);
            let mut up = w.clone();
            up.insert(id.clone(), v + h);
            let mut down = w.clone();
            down.insert(id.clone(), v - h);
            let fd = (f(&up) - f(&down)) / (2.0 * h);
            err = err.max((fd - g[id]).abs());
            scale = scale.max(fd.abs()).max(g[id].abs());
        }
        let rel = if scale > 0.0 { err / scale } else { 0.0 };
        worst = worst.max(rel);
        if rel <= 1e-4 {
            ok += 1;
        }
    }
    outcome(
        ok >= 99,
        format!("relative error <= 1e-4 on {ok}/{total} instances (worst {worst:.1e})"),
    )
}

fn soft_convergence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let gen = Gen::finite();
    let cfg = SoftConfig::new(1e4);
    let total = 200;
    let mut ok = 0;
    let mut worst = 0.0f64;
    for _ in 0..total {
        let inst = loop {
            let inst = instance(&gen, &mut rng);
            if leaf_gap(&inst.phi, &inst.signal) >= 1e-3 {
                break inst;
            }
        };
        let w = unit_box_valuation(&mut rng, &inst.table);
        let hard = wstl_robustness(&inst.signal, &inst.phi, &w, 0).unwrap();
        let soft = soft_wstl_robustness(&inst.signal, &inst.phi, &w, &cfg, 0).unwrap();
        let rel = (soft - hard).abs() / (1.0 + hard.abs());
        worst = worst.max(rel);
        if rel <= 1e-3 {
            ok += 1;
        }
    }
    outcome(
        ok == total,
        format!("|soft - hard| <= 1e-3(1+|hard|) on {ok}/{total} instances (worst {worst:.1e})"),
    )
}

/// Stop-scenario signals with preferences drawn from a hidden valuation.
struct Synthetic {
    phi: Formula,
    signals: Vec<Signal>,
    pairs: Vec<(usize, usize)>,
}

fn synthetic(seed: u64) -> Synthetic {
    let spec = StopSignSpec::default();
    let phi = spec.formula();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signals = generate_dataset(&spec, 100, true, &mut rng).unwrap().signals;
    let table = SlotTable::new(&phi, Some(signals[0].t_final())).unwrap();
    let hidden = unit_box_valuation(&mut rng, &table);
    let r: Vec<f64> = signals
        .iter()
        .map(|s| wstl_robustness(s, &phi, &hidden, 0).unwrap())
        .collect();
    let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut candidates = Vec::new();
    for i in 0..r.len() {
        for j in i + 1..r.len() {
            if (r[i] - r[j]).abs() > 0.05 * (hi - lo) {
                candidates.push(if r[i] > r[j] { (i, j) } else { (j, i) });
            }
        }
    }
    let pairs = index::sample(&mut rng, candidates.len(), 35)
        .into_iter()
        .map(|k| candidates[k])
        .collect();
    Synthetic { phi, signals, pairs }
}

struct Recovery {
    pass: bool,
    detail: String,
    /// Every valuation the solvers returned.
    valuations: Vec<WeightValuation>,
    /// The first training set.
    data: Synthetic,
}

static RECOVERY: OnceLock<Recovery> = OnceLock::new();

fn recovery() -> &'static Recovery {
    RECOVERY.get_or_init(run_recovery)
}

fn run_recovery() -> Recovery {
    let start = Instant::now();
    let cfg = LearnConfig::default();
    let mut accuracies = Vec::new();
    let mut dominates = true;
    let mut valuations = Vec::new();
    let mut first = None;
    for seed in 0..10 {
        let data = synthetic(100 + seed);
        let ds = PreferenceDataset::new(&data.signals, data.pairs.clone()).unwrap();
        let rs = random_sampling_solve(&ds, &data.phi, &cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let base = stl_baseline(&ds, &data.phi, &cfg).unwrap();
        dominates &= rs.satisfied_pairs >= base.satisfied_pairs;
        accuracies.push(rs.accuracy());
        valuations.push(rs.valuation);
        if first.is_none() {
            first = Some(data);
        }
    }
    let data = first.unwrap();
    let ds = PreferenceDataset::new(&data.signals, data.pairs.clone()).unwrap();
    let gb_cfg = LearnConfig {
        restarts: 1,
        ..LearnConfig::default()
    };
    let solver = GradientSolver::new(&ds, &data.phi, &gb_cfg).unwrap();
    let seeds = solver.restart_seeds(&mut ChaCha8Rng::seed_from_u64(0));
    let ones = solver.run_restart(0, seeds[0]).unwrap();
    let gb = solver.finish(std::slice::from_ref(&ones)).unwrap();
    valuations.push(gb.valuation);

    let mut sorted = accuracies.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let median = (sorted[4] + sorted[5]) / 2.0;
    let elapsed = start.elapsed();
    let pass =
        median >= 0.9 && dominates && ones.loss < ones.initial_loss && elapsed < Duration::from_secs(120);
    let detail = format!(
        "RS median train accuracy {:.3} (min {:.3}), >= STL on every seed: {dominates}; \
         GB from all-ones: loss {:.6} -> {:.6} in {} steps; {:.1} s",
        median,
        sorted[0],
        ones.initial_loss,
        ones.loss,
        ones.iterations,
        elapsed.as_secs_f64()
    );
    Recovery {
        pass,
        detail,
        valuations,
        data,
    }
}

fn safety() -> Outcome {
    let Recovery { valuations, data, .. } = recovery();
    let mut valuations = valuations.clone();
    let spec = StopSignSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let good = generate_dataset(&spec, 100, true, &mut rng).unwrap().signals;
    let bad = generate_dataset(&spec, 100, false, &mut rng).unwrap().signals;
    // A gradient run with several restarts as well.
    let ds = PreferenceDataset::new(&data.signals, data.pairs.clone()).unwrap();
    let cfg = LearnConfig {
        restarts: 3,
        max_iters: 100,
        ..LearnConfig::default()
    };
    valuations.push(gradient_solve(&ds, &data.phi, &cfg, &mut rng).unwrap().valuation);

    let mut perfect = 0;
    for w in &valuations {
        let predictor = WstlPredictor::new(data.phi.clone(), w.clone());
        let score = safety_eval(&predictor, &good, &bad, 100, &mut ChaCha8Rng::seed_from_u64(10)).unwrap();
        if score == 1.0 {
            perfect += 1;
        }
    }
    let bt = bt_fit(
        &ds,
        &data.phi,
        &BtConfig::default(),
        &mut ChaCha8Rng::seed_from_u64(11),
    )
    .unwrap();
    let bt_score = safety_eval(&bt, &good, &bad, 100, &mut ChaCha8Rng::seed_from_u64(10)).unwrap();
    outcome(
        perfect == valuations.len(),
        format!(
            "{perfect}/{} learned valuations prefer the satisfying signal in 100/100 pairs; \
             Bradley-Terry (satisfying-only training) scores {:.0}% (reported, not asserted)",
            valuations.len(),
            bt_score * 100.0
        ),
    )
}

fn brute_force() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let gen = Gen {
        max_depth: 3,
        ..Gen::finite()
    };
    let cfg = LearnConfig {
        n_samples: 20_000,
        margin_fraction: 0.0,
        ..LearnConfig::default()
    };
    let grid: Vec<f64> = (1..=20).map(|k| k as f64 * 0.05).collect();
    let total = 20;
    let mut ok = 0;
    let mut summary = Vec::new();
    for _ in 0..total {
        let (phi, signals, table) = loop {
            let inst = instance(&gen, &mut rng);
            let n = inst.table.num_parameters();
            if (1..=3).contains(&n) {
                let mut signals = vec![inst.signal.clone()];
                signals.extend((0..4).map(|_| gen.signal(&mut rng, inst.signal.len())));
                break (inst.phi, signals, inst.table);
            }
        };
        let n_pairs = rng.gen_range(1..=4);
        let pairs: Vec<(usize, usize)> = (0..n_pairs)
            .map(|_| {
                let v = index::sample(&mut rng, signals.len(), 2).into_vec();
                (v[0], v[1])
            })
            .collect();
        let ds = PreferenceDataset::new(&signals, pairs).unwrap();
        let rs = random_sampling_solve(&ds, &phi, &cfg, &mut rng).unwrap();
        let n = table.num_parameters();
        let mut best = 0;
        let mut point = vec![0usize; n];
        loop {
            let params: Vec<f64> = point.iter().map(|&k| grid[k]).collect();
            let w = WeightValuation::from_values(&table, &params).unwrap();
            best = best.max(count_satisfied(&ds, &phi, &w).unwrap());
            // Odometer increment over the grid.
            let mut i = 0;
            while i < n {
                point[i] += 1;
                if point[i] < grid.len() {
                    break;
                }
                point[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
        if rs.satisfied_pairs >= best {
            ok += 1;
        }
        summary.push(format!("{}/{}", rs.satisfied_pairs, best));
    }
    let elapsed = start.elapsed();
    outcome(
        ok == total && elapsed < Duration::from_secs(60),
        format!(
            "sampling >= grid on {ok}/{total} instances (sampled/grid: {}), {:.1} s",
            summary.join(" "),
            elapsed.as_secs_f64()
        ),
    )
}

fn performance() -> Outcome {
    let spec = StopSignSpec::default();
    let phi = spec.formula();
    let signals = generate_dataset(&spec, 100, true, &mut ChaCha8Rng::seed_from_u64(13))
        .unwrap()
        .signals;
    let table = SlotTable::new(&phi, Some(signals[0].t_final())).unwrap();
    let w = unit_box_valuation(&mut ChaCha8Rng::seed_from_u64(14), &table);
    let start = Instant::now();
    let mut positive = 0;
    for s in &signals {
        if wstl_robustness(s, &phi, &w, 0).unwrap() > 0.0 {
            positive += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        elapsed < Duration::from_secs(1) && positive == signals.len(),
        format!(
            "100 signals of length {} evaluated in {}",
            signals[0].len(),
            ms(elapsed)
        ),
    )
}
