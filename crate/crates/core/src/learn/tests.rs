use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::formula::{parse, SlotTable};

fn example_signal() -> Signal {
    Signal::from_real(
        1.0,
        &[
            ("s1", vec![1.0, -1.0, -2.0, -2.0]),
            ("s2", vec![1.0, 1.0, 1.0, 2.0]),
        ],
    )
    .unwrap()
}

fn example_formula() -> Formula {
    parse("F[0,3](-s1 >= 0 & s2 >= 0)").unwrap()
}

fn valuation(phi: &Formula, values: &[f64]) -> WeightValuation {
    WeightValuation::from_values(&SlotTable::new(phi, None).unwrap(), values).unwrap()
}

#[test]
fn dataset_validation() {
    let signals = vec![example_signal()];
    assert_eq!(
        PreferenceDataset::new(&signals, vec![(0, 0)]).unwrap_err(),
        Error::SelfPair("0".into())
    );
    assert!(matches!(
        PreferenceDataset::new(&signals, vec![(0, 3)]),
        Err(Error::UnknownSignal(_))
    ));
}

#[test]
fn identical_signals_are_not_satisfied() {
    let phi = example_formula();
    let signals = vec![example_signal(), example_signal()];
    let ds = PreferenceDataset::new(&signals, vec![(0, 1)]).unwrap();
    let w = SlotTable::new(&phi, None).unwrap().unit_valuation();
    assert_eq!(count_satisfied(&ds, &phi, &w).unwrap(), 0);
}

#[test]
fn negated_channel_is_worse() {
    let phi = example_formula();
    let s = example_signal();
    let neg = Signal::from_real(
        1.0,
        &[
            ("s1", s.channel("s1").unwrap().to_vec()),
            ("s2", vec![-1.0, -1.0, -1.0, -2.0]),
        ],
    )
    .unwrap();
    let w = SlotTable::new(&phi, None).unwrap().unit_valuation();
    assert_eq!(crate::wstl_robustness(&neg, &phi, &w, 0).unwrap(), -1.0);
    let signals = vec![s, neg];
    let ds = PreferenceDataset::new(&signals, vec![(0, 1)]).unwrap();
    assert_eq!(count_satisfied(&ds, &phi, &w).unwrap(), 1);
}

#[test]
fn normalization_of_example_valuation() {
    let phi = example_formula();
    let w = valuation(&phi, &[1.5, 0.3, 3.0, 1.2, 1.0, 2.0]);
    let n = normalize_to_domain(&phi, &w, None).unwrap();
    let values: Vec<f64> = n.iter().map(|(_, v)| v).collect();
    assert_eq!(&values[4..], &[0.5, 1.0]);
    // 1.5·2/6 and 3·2/6 are exact; 0.3·2/6 and 1.2·2/6 land within an ulp.
    assert_eq!(values[0], 0.5);
    assert_eq!(values[2], 1.0);
    for (got, want) in [(values[1], 0.1), (values[3], 0.4)] {
        assert!((got - want).abs() <= 2.0 * f64::EPSILON * want, "{got} vs {want}");
    }
}

#[test]
fn normalization_fixed_point() {
    let phi = parse("G[0,2](a >= 0 | F[0,1] b >= 0)").unwrap();
    let table = SlotTable::new(&phi, None).unwrap();
    // Every block already peaks at exactly one.
    let w = valuation(&phi, &[1.0, 0.2, 0.7, 0.3, 1.0, 1.0, 0.5]);
    assert_eq!(table.len(), 7);
    assert_eq!(normalize_to_domain(&phi, &w, None).unwrap(), w);
}

#[test]
fn normalization_rejects_constants() {
    let phi = parse("a >= 0 &{2, ?} b >= 0").unwrap();
    let table = SlotTable::new(&phi, None).unwrap();
    let w = WeightValuation::from_values(&table, &[1.0]).unwrap();
    assert_eq!(normalize_to_domain(&phi, &w, None), Err(Error::ConstantSlots));
}

#[test]
fn normalization_scales_until_halves() {
    let phi = parse("(F[0,1] a >= 0) U[0,1] (G[0,1] b >= 0)").unwrap();
    let s = Signal::from_real(1.0, &[("a", vec![1.0, -2.0, 3.0]), ("b", vec![2.0, 1.0, -1.0])]).unwrap();
    let table = SlotTable::new(&phi, None).unwrap();
    let raw = [0.7, 2.5, 1.1, 3.0, 4.0, 0.2, 5.0, 0.5];
    let w = WeightValuation::from_values(&table, &raw).unwrap();
    let n = normalize_to_domain(&phi, &w, None).unwrap();
    assert!(n.iter().all(|(_, v)| v > 0.0 && v <= 1.0));
    let before = crate::wstl_robustness(&s, &phi, &w, 0).unwrap();
    let after = crate::wstl_robustness(&s, &phi, &n, 0).unwrap();
    assert!(before != 0.0);
    let c = after / before;
    assert!(c > 0.0);
    for t in 0..2 {
        let b = crate::wstl_robustness(&s, &phi, &w, t).unwrap();
        let a = crate::wstl_robustness(&s, &phi, &n, t).unwrap();
        assert!(
            (a - c * b).abs() <= 1e-12 * (1.0 + a.abs()),
            "t={t}: {a} vs {}",
            c * b
        );
    }
}

#[test]
fn surrogate_terms() {
    let phi = parse("a >= 0 & b >= 0").unwrap();
    let cfg = LearnConfig::default();
    let plus = Signal::from_real(1.0, &[("a", vec![1.0]), ("b", vec![5.0])]).unwrap();
    let mut minus_a = 1.0 - cfg.epsilon;
    let mut signals = vec![
        plus.clone(),
        Signal::from_real(1.0, &[("a", vec![minus_a]), ("b", vec![5.0])]).unwrap(),
    ];
    let ds = PreferenceDataset::new(&signals, vec![(0, 1)]).unwrap();
    let w = SlotTable::new(&phi, None).unwrap().unit_valuation();
    let loss = surrogate_loss(&ds, &phi, &w, &w, &cfg).unwrap();
    let reg = libm::log1p(cfg.theta);
    assert!((loss - (0.5 + reg)).abs() < 1e-9, "{loss}");

    minus_a = 1.0 - 0.02;
    signals[1] = Signal::from_real(1.0, &[("a", vec![minus_a]), ("b", vec![5.0])]).unwrap();
    let ds = PreferenceDataset::new(&signals, vec![(0, 1)]).unwrap();
    let loss = surrogate_loss(&ds, &phi, &w, &w, &cfg).unwrap();
    let expected = 1.0 / (1.0 + libm::exp(10.0));
    assert!((loss - reg - expected).abs() < 1e-9, "{}", loss - reg);
    assert!((expected - 4.54e-5).abs() < 1e-7);
}

#[test]
fn loss_gradient_matches_finite_differences() {
    let phi = parse("F[0,2](a >= 0 & b >= 0)").unwrap();
    let signals = vec![
        Signal::from_real(1.0, &[("a", vec![0.3, 0.1, 0.5]), ("b", vec![0.2, 0.4, 0.6])]).unwrap(),
        Signal::from_real(
            1.0,
            &[("a", vec![0.25, 0.35, 0.15]), ("b", vec![0.45, 0.05, 0.3])],
        )
        .unwrap(),
    ];
    let ds = PreferenceDataset::new(&signals, vec![(0, 1), (1, 0)]).unwrap();
    let cfg = LearnConfig {
        beta: 30.0,
        m: 5.0,
        ..LearnConfig::default()
    };
    let problem = Problem::new(&ds, &phi).unwrap();
    let params = vec![0.9, 0.4, 0.7, 0.6, 1.1];
    let init_sq = 2.0;
    let g = problem.loss_gradient(&params, init_sq, &[0, 1], &cfg).unwrap();
    for i in 0..params.len() {
        let h = 1e-6;
        let mut up = params.clone();
        up[i] += h;
        let mut down = params.clone();
        down[i] -= h;
        let fd = (problem.loss(&up, init_sq, None, &cfg).unwrap()
            - problem.loss(&down, init_sq, None, &cfg).unwrap())
            / (2.0 * h);
        assert!(
            (fd - g[i]).abs() <= 1e-6 * (1.0 + fd.abs()),
            "slot {i}: {fd} vs {}",
            g[i]
        );
    }
}

fn toy_problem() -> (Formula, Vec<Signal>, Vec<(usize, usize)>) {
    let phi = parse("G[0,3](x >= 0) & F[0,3](y >= 0)").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let signals: Vec<Signal> = (0..12)
        .map(|_| {
            use rand::Rng;
            let x = (0..4).map(|_| rng.gen_range(0.1..2.0)).collect();
            let y = (0..4).map(|_| rng.gen_range(-1.0..2.0)).collect();
            Signal::from_real(1.0, &[("x", x), ("y", y)]).unwrap()
        })
        .collect();
    let pairs = (0..11).map(|i| (i, i + 1)).collect();
    (phi, signals, pairs)
}

#[test]
fn sampling_is_deterministic_and_safe() {
    let (phi, signals, pairs) = toy_problem();
    let ds = PreferenceDataset::new(&signals, pairs).unwrap();
    let cfg = LearnConfig {
        n_samples: 200,
        ..LearnConfig::default()
    };
    let a = random_sampling_solve(&ds, &phi, &cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let b = random_sampling_solve(&ds, &phi, &cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    assert_eq!(a, b);
    assert!(a.valuation.iter().all(|(_, v)| v > 0.0 && v <= 1.0));
    assert_eq!(
        a.satisfied_pairs,
        count_satisfied(&ds, &phi, &a.valuation).unwrap()
    );
    let base = stl_baseline(&ds, &phi, &cfg).unwrap();
    assert_eq!(
        base.valuation,
        SlotTable::new(&phi, None).unwrap().unit_valuation()
    );
}

#[test]
fn solvers_reject_empty_and_parameterless_inputs() {
    let (phi, signals, _) = toy_problem();
    let cfg = LearnConfig::default();
    let empty = PreferenceDataset::new(&signals, vec![]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert_eq!(
        random_sampling_solve(&empty, &phi, &cfg, &mut rng).unwrap_err(),
        Error::EmptyDataset
    );
    let pinned = parse("G[0,0]{1}(x >= 0)").unwrap();
    let ds = PreferenceDataset::new(&signals, vec![(0, 1)]).unwrap();
    assert_eq!(
        gradient_solve(&ds, &pinned, &cfg, &mut rng).unwrap_err(),
        Error::NoParameters
    );
}

#[test]
fn zero_iterations_return_the_best_start() {
    let (phi, signals, pairs) = toy_problem();
    let ds = PreferenceDataset::new(&signals, pairs).unwrap();
    let cfg = LearnConfig {
        max_iters: 0,
        restarts: 1,
        ..LearnConfig::default()
    };
    let r = gradient_solve(&ds, &phi, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!(r.diagnostics.iterations, 0);
    assert_eq!(r.diagnostics.restart, Some(0));
    assert_eq!(r.valuation, SlotTable::new(&phi, None).unwrap().unit_valuation());
    assert_eq!(r.diagnostics.initial_loss, r.diagnostics.final_loss);
}

#[test]
fn gradient_descent_lowers_the_loss() {
    let (phi, signals, pairs) = toy_problem();
    let ds = PreferenceDataset::new(&signals, pairs).unwrap();
    let cfg = LearnConfig {
        max_iters: 200,
        restarts: 3,
        beta: 50.0,
        learning_rate: 1e-2,
        ..LearnConfig::default()
    };
    let solver = GradientSolver::new(&ds, &phi, &cfg).unwrap();
    let seeds = solver.restart_seeds(&mut ChaCha8Rng::seed_from_u64(5));
    let outcomes: Vec<_> = seeds
        .iter()
        .enumerate()
        .map(|(i, &s)| solver.run_restart(i, s).unwrap())
        .collect();
    for o in &outcomes {
        assert!(o.loss <= o.initial_loss);
        assert!(o.accepted_losses.windows(2).all(|w| w[1] < w[0]));
        assert!(o.params.iter().all(|&w| w >= cfg.w_floor));
    }
    let r = solver.finish(&outcomes).unwrap();
    let base = stl_baseline(&ds, &phi, &cfg).unwrap();
    let ones = &outcomes[0];
    assert!(ones.loss < ones.initial_loss);
    assert!(r.satisfied_pairs >= base.satisfied_pairs);
    let again = gradient_solve(&ds, &phi, &cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    assert_eq!(r, again);
}

#[test]
fn predictions() {
    let phi = example_formula();
    let s = example_signal();
    let w = valuation(&phi, &[1.5, 0.3, 3.0, 1.2, 1.0, 2.0]);
    let unit = SlotTable::new(&phi, None).unwrap().unit_valuation();
    // r(s) = 6 under w, and 2 under unit weights; a shifted copy scores 2 under w.
    assert_eq!(compare(6.0, 2.0, 0.0), Preference::First);
    assert_eq!(predict(&phi, &w, &s, &s, 0.0).unwrap(), Preference::Tie);
    let bad = Signal::from_real(1.0, &[("s1", vec![1.0; 4]), ("s2", vec![1.0; 4])]).unwrap();
    for v in [&w, &unit] {
        assert_eq!(predict(&phi, v, &s, &bad, 0.0).unwrap(), Preference::First);
        assert_eq!(predict(&phi, v, &bad, &s, 0.0).unwrap(), Preference::Second);
    }
    assert_eq!(compare(f64::INFINITY, 1e300, 1e301), Preference::First);
    assert_eq!(compare(1.0, 1.05, 0.1), Preference::Tie);
}
