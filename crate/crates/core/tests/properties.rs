mod common;

use common::{brute_min_cover, from_le, naive_fixed, naive_geometric, naive_linear, naive_stream};
use num_bigint::BigUint;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nsp::automata::{build_counter_transducer, build_queue_transducer, build_reverse_pda, oracle_for, run_transducer, QueueKind, Transducer};
use nsp::dataset::{generate_dataset, Dataset, GenerateOptions};
use nsp::digitstream::{find_digit_entry, frame_stream, make_digit_instance, make_reverse_instance, DigitTask, StreamConfig};
use nsp::harness::{error_rate, TaskKind};
use nsp::logicwidth::{complexity_search, minimize_sop, BinaryCatalog, MinimizeMode, SearchOptions, TruthTable};
use nsp::numgrid::{list_rule_catalog, make_number_grid_instance, CatalogRule};
use nsp::sequence::{digits_le, eval_recurrence, from_digits_le, sample_initial_terms, SeedContext, SequenceError, SequenceRule, SplitRole, Term};

fn big(v: i128) -> Term {
    BigUint::try_from(v).unwrap()
}

fn small(t: &Term) -> i128 {
    i128::try_from(t).unwrap()
}

/// Stream of the shortest prefix of terms that fills `length` tokens.
fn stream_from(terms_of: impl Fn(usize) -> Option<Vec<i128>>, base: u32, length: usize) -> Option<Vec<u32>> {
    for count in 1..=length {
        let terms = terms_of(count)?;
        let tokens: usize = terms.iter().map(|&t| common::le_digits(t, base).len() + 1).sum();
        if tokens >= length {
            return Some(naive_stream(&terms, base, length));
        }
    }
    unreachable!("every term adds at least two tokens")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn recurrence_matches_naive_loop(
        coeffs in prop::collection::vec(-3i64..=3, 1..=4),
        seed_terms in prop::collection::vec(0i128..1000, 4),
        extra in 0usize..26,
    ) {
        let k = coeffs.len();
        let init = &seed_terms[..k];
        let count = k + extra;
        let rule = SequenceRule::LinearRecurrence { coefficients: coeffs.clone() };
        let init_big: Vec<Term> = init.iter().map(|&v| big(v)).collect();
        match (naive_linear(&coeffs, init, count), eval_recurrence(&rule, &init_big, count)) {
            (Some(expected), Ok(got)) => prop_assert_eq!(got.iter().map(small).collect::<Vec<_>>(), expected),
            (None, Err(SequenceError::NegativeTerm { .. })) => {}
            (a, b) => prop_assert!(false, "naive {:?} vs library {:?}", a, b),
        }
    }
}

proptest! {
    #[test]
    fn special_rules_match_naive(first in 0i128..100_000, diff in -40i64..40, count in 1usize..30) {
        let rule = SequenceRule::FixedDifference { difference: diff };
        match (naive_fixed(diff, first, count), eval_recurrence(&rule, &[big(first)], count)) {
            (Some(expected), Ok(got)) => prop_assert_eq!(got.iter().map(small).collect::<Vec<_>>(), expected),
            (None, Err(SequenceError::NegativeTerm { .. })) => {}
            (a, b) => prop_assert!(false, "naive {:?} vs library {:?}", a, b),
        }
        let geo = SequenceRule::RoundedGeometric { ratio_num: 13, ratio_den: 10 };
        let got = eval_recurrence(&geo, &[big(first)], count).unwrap();
        prop_assert_eq!(got.iter().map(small).collect::<Vec<_>>(), naive_geometric(13, 10, first, count));
    }

    #[test]
    fn digits_round_trip(base in 2u32..=16, width in 1usize..12, raw in any::<u64>()) {
        let limit = (base as u128).pow(width as u32);
        let v = (raw as u128 % limit) as i128;
        let digits = digits_le(&big(v), base, width).unwrap();
        prop_assert_eq!(digits.len(), width);
        prop_assert!(digits.iter().all(|&d| d < base));
        prop_assert_eq!(small(&from_digits_le(&digits, base)), v);
        prop_assert_eq!(from_le(&digits, base), v);
    }

    #[test]
    fn sampling_is_deterministic(master in any::<u64>(), stream in any::<u64>(), arity in 1usize..5) {
        let entry = &list_rule_catalog()[0];
        let seed = SeedContext::new(master, stream);
        let a = sample_initial_terms(&entry.train, arity, &seed).unwrap();
        let b = sample_initial_terms(&entry.train, arity, &seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.iter().all(|t| entry.train.contains_term(t)));
    }

    #[test]
    fn grids_rederive_and_respect_splits(entry_ix in 0usize..8, validation in any::<bool>(), stream in any::<u64>()) {
        let entry = &list_rule_catalog()[entry_ix];
        let role = if validation { SplitRole::Validation } else { SplitRole::Train };
        let split = entry.split(role);
        let config = entry.default_config(None);
        let inst = make_number_grid_instance(entry, &config, &split, &SeedContext::new(5, stream)).unwrap();
        let SequenceRule::LinearRecurrence { coefficients } = &inst.rule else { panic!("linear") };
        if let CatalogRule::Single(rule) = &entry.rule {
            prop_assert_eq!(rule, &inst.rule);
        } else {
            prop_assert!(entry.rule.members().contains(&inst.rule));
        }
        let rows: Vec<i128> = inst.input.iter().map(|r| from_le(r, 10)).collect();
        let k = coefficients.len();
        let derived = naive_linear(coefficients, &rows[config.n - k..], k + config.s).unwrap();
        let targets: Vec<i128> = inst.target.iter().map(|r| from_le(r, 10)).collect();
        prop_assert_eq!(&derived[k..], &targets[..]);
        prop_assert!(inst.initial_terms.iter().all(|t| split.contains_term(t)));
        prop_assert!(inst.input.iter().chain(&inst.target).all(|r| r.len() == config.l));
    }

    #[test]
    fn streams_follow_layout(task_ix in 0usize..4, validation in any::<bool>(), stream in any::<u64>()) {
        let name = ["fixed-difference-17", "arith-digit", "fib-digit", "geometric-digit"][task_ix];
        let entry = find_digit_entry(name).unwrap();
        let role = if validation { SplitRole::Validation } else { SplitRole::Train };
        let config = StreamConfig::default();
        let inst = make_digit_instance(&entry.task, &config, &entry.split(role), &SeedContext::new(9, stream)).unwrap();
        let init: Vec<i128> = inst.initial_terms.iter().map(small).collect();
        let task = entry.task.clone();
        let expected = stream_from(
            |count| match task {
                DigitTask::FixedDifference { difference } => naive_fixed(difference, init[0], count),
                DigitTask::Arithmetic => naive_linear(&[2, -1], &init, count.max(2)),
                DigitTask::Fibonacci => naive_linear(&[1, 1], &init, count.max(2)),
                DigitTask::Geometric { .. } => Some(naive_geometric(13, 10, init[0], count)),
                DigitTask::Reverse => unreachable!(),
            },
            10,
            24,
        )
        .unwrap();
        let (input, target) = frame_stream(&expected, 12, 10);
        prop_assert_eq!(&inst.input, &input);
        prop_assert_eq!(&inst.target, &target);
        // exactly n leading delimiters and s trailing delimiters
        prop_assert!(inst.target[..12].iter().all(|&t| t == 11) && inst.target[12] != 11);
        prop_assert!(inst.input[12..].iter().all(|&t| t == 11) && inst.input[11] != 11);
        prop_assert!(inst.initial_terms.iter().all(|t| entry.split(role).contains_term(t)));
    }

    #[test]
    fn reverse_targets_mirror_inputs(m in 1usize..=64, stream in any::<u64>()) {
        let inst = make_reverse_instance(m, 10, &SeedContext::new(3, stream)).unwrap();
        let head: Vec<u32> = inst.input[..m].iter().rev().copied().collect();
        prop_assert_eq!(&inst.target[m..], &head[..]);
        prop_assert!(inst.input[m..].iter().all(|&t| t == 11));
        let mut pda = build_reverse_pda(10);
        prop_assert_eq!(run_transducer(&mut pda, &inst.input).unwrap(), inst.target);
        prop_assert_eq!(pda.high_water(), m);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn oracles_match_generated_targets(task_ix in 0usize..5, validation in any::<bool>(), stream in any::<u64>()) {
        let name = ["fixed-difference-17", "arith-digit", "fib-digit", "geometric-digit", "reverse"][task_ix];
        let entry = find_digit_entry(name).unwrap();
        let role = if validation { SplitRole::Validation } else { SplitRole::Train };
        let inst = make_digit_instance(&entry.task, &StreamConfig::default(), &entry.split(role), &SeedContext::new(17, stream)).unwrap();
        let mut machine = oracle_for(&entry.task, 10, 6).unwrap();
        prop_assert_eq!(run_transducer(machine.as_mut(), &inst.input).unwrap(), inst.target);
    }

    #[test]
    fn queue_machines_beyond_catalog_ranges(
        a in 0i128..1_000_000,
        b in 0i128..1_000_000,
        base in 2u32..=16,
        n in 4usize..40,
        s in 1usize..40,
    ) {
        let (lo, hi) = (a.min(b), a.max(b));
        for kind in [QueueKind::Fibonacci, QueueKind::Arithmetic] {
            let stream = stream_from(
                |count| match kind {
                    QueueKind::Fibonacci => naive_linear(&[1, 1], &[a, b], count.max(2)),
                    _ => naive_linear(&[2, -1], &[lo, hi], count.max(2)),
                },
                base,
                n + s,
            )
            .unwrap();
            // the machine needs two complete terms before the delimiters
            let blanks = stream[..n].iter().filter(|&&t| t == base).count();
            if blanks < 2 {
                continue;
            }
            let (input, target) = frame_stream(&stream, n, base);
            let mut m = build_queue_transducer(kind, base).unwrap();
            prop_assert_eq!(run_transducer(&mut m, &input).unwrap(), target);
        }
    }

    #[test]
    fn geometric_queue_any_base(a in 0i128..1_000_000, base in 2u32..=16, extra in 1u64..16, n in 2usize..30, s in 1usize..40) {
        let num = base as u64 + extra;
        let stream = stream_from(|count| Some(naive_geometric(num as i128, base as i128, a, count)), base, n + s).unwrap();
        if !stream[..n].contains(&base) {
            return Ok(());
        }
        let (input, target) = frame_stream(&stream, n, base);
        let mut m = build_queue_transducer(QueueKind::Geometric { num, den: base as u64 }, base).unwrap();
        prop_assert_eq!(run_transducer(&mut m, &input).unwrap(), target);
    }

    #[test]
    fn counter_any_base(first in 0i128..100_000, diff in 1i64..60, base in 2u32..=16, n in 2usize..30, s in 1usize..30) {
        let stream = stream_from(|count| naive_fixed(diff, first, count), base, n + s).unwrap();
        if !stream[..n].contains(&base) {
            return Ok(());
        }
        let (input, target) = frame_stream(&stream, n, base);
        let mut m = build_counter_transducer(diff, base, 24).unwrap();
        prop_assert_eq!(run_transducer(&mut m, &input).unwrap(), target);
    }
}

#[test]
fn counter_storage_is_constant_in_length() {
    let terms = naive_fixed(17, 1234, 100).unwrap();
    let mut sizes = Vec::new();
    for n in [12, 24, 48] {
        let stream = naive_stream(&terms, 10, 2 * n);
        let (input, target) = frame_stream(&stream, n, 10);
        let mut m = build_counter_transducer(17, 10, 6).unwrap();
        assert_eq!(run_transducer(&mut m, &input).unwrap(), target);
        let report = m.storage();
        sizes.push((report.fixed_cells, report.state_bound, m.register_count()));
    }
    assert!(sizes.windows(2).all(|w| w[0] == w[1]), "{sizes:?}");
}

#[test]
fn mixture_frequencies_are_uniform() {
    let entry = list_rule_catalog().into_iter().find(|e| e.name == "mixture-number").unwrap();
    let members = entry.rule.members().to_vec();
    let config = entry.default_config(None);
    let mut counts = vec![0usize; members.len()];
    let total = 10_000;
    for i in 0..total {
        let inst = make_number_grid_instance(&entry, &config, &entry.train, &SeedContext::new(2024, i)).unwrap();
        counts[members.iter().position(|r| *r == inst.rule).unwrap()] += 1;
    }
    let p = 1.0 / members.len() as f64;
    let sigma = (total as f64 * p * (1.0 - p)).sqrt();
    for c in &counts {
        assert!((*c as f64 - total as f64 * p).abs() <= 3.0 * sigma, "{counts:?}");
    }
}

fn random_table(rng: &mut ChaCha8Rng, inputs: usize, outputs: usize, dc_rate: f64) -> TruthTable {
    let mut t = TruthTable::new(inputs, outputs).unwrap();
    for r in 0..1 << inputs {
        let mut on = 0;
        let mut dc = 0;
        for j in 0..outputs {
            if rng.gen_bool(dc_rate) {
                dc |= 1 << j;
            } else if rng.gen_bool(0.5) {
                on |= 1 << j;
            }
        }
        t.set_row(r, on, dc);
    }
    t
}

fn rows(t: &TruthTable) -> (Vec<u32>, Vec<u32>) {
    ((0..t.rows()).map(|r| t.on(r)).collect(), (0..t.rows()).map(|r| t.dc(r)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn exact_covers_are_valid_and_minimum(seed in any::<u64>(), inputs in 1usize..=4, outputs in 1usize..=3, dc_rate in 0.0f64..0.4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = random_table(&mut rng, inputs, outputs, dc_rate);
        let cover = minimize_sop(&table, MinimizeMode::Exact).unwrap();
        for r in 0..table.rows() {
            let value = cover.terms.iter().filter(|t| t.cube.contains(r as u32)).fold(0, |a, t| a | t.outputs);
            prop_assert_eq!(value & !table.dc(r), table.on(r));
        }
        let (on, dc) = rows(&table);
        prop_assert_eq!(cover.term_count(), brute_min_cover(inputs, outputs, &on, &dc));
        let heuristic = minimize_sop(&table, MinimizeMode::Heuristic).unwrap();
        prop_assert!(heuristic.implements(&table));
        prop_assert!(heuristic.term_count() >= cover.term_count());
    }

    #[test]
    fn dont_cares_never_increase_width(seed in any::<u64>(), inputs in 2usize..=6, outputs in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut table = random_table(&mut rng, inputs, outputs, 0.1);
        let before = minimize_sop(&table, MinimizeMode::Exact).unwrap().term_count();
        let r = rng.gen_range(0..table.rows());
        table.set_dont_care(r, table.output_mask());
        let after = minimize_sop(&table, MinimizeMode::Exact).unwrap();
        prop_assert!(after.implements(&table));
        prop_assert!(after.term_count() <= before);
    }

    #[test]
    fn complexity_is_catalog_order_independent(seed in any::<u64>(), target in prop::collection::vec(-3i64..=3, 2..=3)) {
        prop_assume!(target.iter().any(|&c| c != 0));
        let forward = BinaryCatalog::bounded(3);
        let mut members = forward.members().to_vec();
        members.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let shuffled = BinaryCatalog::from_members(members);
        let opts = SearchOptions::default();
        let a = complexity_search(&target, &forward, &opts).unwrap();
        let b = complexity_search(&target, &shuffled, &opts).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.plan.root.coefficients(target.len()), target.clone());
        prop_assert_eq!(a.plan.compound_width, a.plan.members.iter().map(|m| m.width).sum::<u64>());
        prop_assert!(a.chain_complexity >= a.complexity);
    }

    #[test]
    fn datasets_round_trip(task_ix in 0usize..13, validation in any::<bool>(), seed in any::<u64>()) {
        let names: Vec<&str> = list_rule_catalog().iter().map(|e| e.name)
            .chain(["fixed-difference-17", "arith-digit", "fib-digit", "geometric-digit", "reverse"]).collect();
        let role = if validation { SplitRole::Validation } else { SplitRole::Train };
        let ds = generate_dataset(&GenerateOptions::new(names[task_ix], role, 4, seed)).unwrap();
        let bytes = ds.to_bytes();
        let parsed = Dataset::read_from(bytes.as_slice()).unwrap();
        prop_assert_eq!(parsed.to_bytes(), bytes);
    }
}

#[test]
fn random_predictions_err_at_binomial_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for (task, alphabet, kind) in [
        ("fib-number", 10u32, TaskKind::NumberLevel { l: 8, s: 4 }),
        ("fib-digit", 12, TaskKind::DigitLevel { n: 12, s: 12 }),
    ] {
        let ds = generate_dataset(&GenerateOptions::new(task, SplitRole::Validation, 2000, 1)).unwrap();
        let targets: Vec<Vec<u32>> = ds.instances.iter().map(|i| i.target.clone()).collect();
        let preds: Vec<Vec<u32>> = targets
            .iter()
            .map(|t| t.iter().map(|_| rng.gen_range(0..alphabet)).collect())
            .collect();
        let report = error_rate(&preds, &targets, kind).unwrap();
        let p = 1.0 - 1.0 / alphabet as f64;
        let band = |n: f64| 3.0 * (p * (1.0 - p) / n).sqrt();
        let overall = report.error_rate().value();
        assert!((overall - p).abs() <= band(report.total_predictions as f64), "{task}: {overall}");
        for (pos, total) in &report.position_totals {
            let wrong = report.positions.get(pos).copied().unwrap_or(0) as f64;
            let rate = wrong / *total as f64;
            assert!((rate - p).abs() <= band(*total as f64), "{task} {pos}: {rate}");
        }

        // instance order does not matter
        let mut order: Vec<usize> = (0..targets.len()).collect();
        order.shuffle(&mut rng);
        let p2: Vec<Vec<u32>> = order.iter().map(|&i| preds[i].clone()).collect();
        let t2: Vec<Vec<u32>> = order.iter().map(|&i| targets[i].clone()).collect();
        let shuffled = error_rate(&p2, &t2, kind).unwrap();
        assert_eq!(shuffled.error_rate(), report.error_rate());
        assert_eq!(shuffled.positions, report.positions);
    }
}

#[test]
fn oracle_for_each_kind_resets_between_runs() {
    let entry = find_digit_entry("fib-digit").unwrap();
    let mut m: Box<dyn Transducer> = oracle_for(&entry.task, 10, 0).unwrap();
    for stream in 0..50 {
        let inst = make_digit_instance(&entry.task, &StreamConfig::default(), &entry.train, &SeedContext::new(1, stream)).unwrap();
        assert_eq!(run_transducer(m.as_mut(), &inst.input).unwrap(), inst.target);
    }
}
