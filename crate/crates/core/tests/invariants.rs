//! Property tests for the structural invariants: budget arithmetic never
//! drifts, canonical predicates ignore conjunct order, the downward walk
//! stays on its lattice, and any byte-level ledger mutation is caught.

use std::sync::OnceLock;

use dpbroker::cache::CacheKey;
use dpbroker::dp::{
    accuracy, closed_form_accuracy, relative_error, tolerance_satisfied, BudgetAccountant,
    LaplaceParams, RngBundle,
};
use dpbroker::ledger::{verify_bytes, Ledger, LedgerRecord};
use dpbroker::search::{adjust_epsilon_with, AdjustFailure, SearchParams};
use dpbroker::table::{parse_csv, parse_schema_sidecar, Cmp, Conjunct, Constant};
use dpbroker::{AggregateFunction, Eps, Error, NType, Predicate, QueryRequest};
use proptest::prelude::*;

proptest! {
    // Micro-epsilon arithmetic round-trips through f64 and JSON without
    // losing a unit.
    #[test]
    fn eps_round_trips(micros in 0i64..=100_000_000) {
        let eps = Eps::from_micros(micros);
        prop_assert_eq!(Eps::from_f64(eps.as_f64()), eps);
        let json = serde_json::to_string(&eps).unwrap();
        let back: Eps = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, eps);
        let display: f64 = eps.to_string().parse().unwrap();
        prop_assert_eq!(Eps::from_f64(display), eps);
    }

    // The accountant is an exact integer machine: type totals always add up,
    // an unaffordable charge is rejected, and rejection changes nothing.
    #[test]
    fn accountant_conserves_budget(
        total in 1i64..=20_000_000,
        charges in prop::collection::vec((1i64..=2_000_000, prop::bool::ANY), 0..40),
    ) {
        let total = Eps::from_micros(total);
        let mut acct = BudgetAccountant::new(total).unwrap();
        for (i, &(amount, portion)) in charges.iter().enumerate() {
            let amount = Eps::from_micros(amount);
            let n_type = if portion { NType::Portion } else { NType::Whole };
            let affordable = acct.can_afford(amount);
            let before = acct.spent_sequential();
            match acct.charge(&format!("q{i}"), amount, n_type) {
                Ok(()) => {
                    prop_assert!(affordable);
                    prop_assert_eq!(acct.spent_sequential(), before + amount);
                }
                Err(Error::BudgetExceeded { .. }) => {
                    prop_assert!(!affordable);
                    prop_assert_eq!(acct.spent_sequential(), before);
                }
                Err(other) => return Err(TestCaseError::fail(format!("{other}"))),
            }
            prop_assert_eq!(
                acct.spent_for(NType::Whole) + acct.spent_for(NType::Portion),
                acct.spent_sequential()
            );
            prop_assert_eq!(acct.remaining() + acct.spent_sequential(), total);
            prop_assert!(acct.spent_sequential() <= total);
        }
    }

    // Relative error is clamped to [0, 1], so accuracy stays in [0, 1] no
    // matter how wild the noisy value is.
    #[test]
    fn accuracy_stays_in_unit_interval(
        true_val in prop::num::f64::NORMAL.prop_filter("nonzero", |v| *v != 0.0),
        noisy in prop::num::f64::NORMAL,
    ) {
        let r = relative_error(true_val, noisy).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
        let a = accuracy(r);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    // The tolerance band is symmetric and inclusive at both edges.
    #[test]
    fn tolerance_band_is_symmetric(
        a_req in 0.5f64..0.999,
        tau in 0.001f64..0.2,
        delta in -0.5f64..0.5,
    ) {
        let inside = tolerance_satisfied(a_req + delta, a_req, tau);
        let mirrored = tolerance_satisfied(a_req - delta, a_req, tau);
        prop_assert_eq!(inside, mirrored);
        prop_assert_eq!(inside, delta.abs() <= tau + 1e-12);
        prop_assert!(tolerance_satisfied(a_req + tau, a_req, tau));
        prop_assert!(tolerance_satisfied(a_req - tau, a_req, tau));
    }

    // The downward walk only ever lands on epsilon_def - j * eta, never at
    // or above the default, never under the floor, and never takes more
    // steps than the lattice has candidates.
    #[test]
    fn adjust_walk_stays_on_its_lattice(
        def in 100_000i64..=2_000_000,
        eta in 100i64..=50_000,
        floor in 1_000i64..=50_000,
        t in 50.0f64..5000.0,
        a_req in 0.85f64..0.99,
    ) {
        prop_assume!(floor < def);
        let params = SearchParams {
            epsilon_def: Eps::from_micros(def),
            eta: Eps::from_micros(eta),
            tau: 0.02,
            epsilon_floor: Eps::from_micros(floor),
            estimation_samples: 1,
        };
        let lattice = ((def - floor) / eta + 1) as u32;
        match adjust_epsilon_with(&params, a_req, |eps| {
            closed_form_accuracy(t, 1.0 / eps.as_f64()).unwrap()
        }) {
            Ok(adj) => {
                prop_assert_eq!(
                    adj.epsilon,
                    params.epsilon_def - Eps::from_micros(eta * adj.decrements as i64)
                );
                prop_assert!(adj.epsilon >= params.epsilon_floor);
                prop_assert!(adj.epsilon < params.epsilon_def);
                prop_assert!(adj.decrements >= 1 && adj.decrements <= lattice);
            }
            Err(AdjustFailure::FloorReached) => {
                // Analytic accuracy still overshoots on the lowest candidate.
                let lowest = Eps::from_micros(def - (((def - floor) / eta) * eta));
                let a = closed_form_accuracy(t, 1.0 / lowest.as_f64()).unwrap();
                prop_assert!(a > a_req + params.tau);
            }
            Err(AdjustFailure::BandMissed) => {
                let first = params.epsilon_def - params.eta;
                let a = closed_form_accuracy(t, 1.0 / first.as_f64()).unwrap();
                prop_assert!(a < a_req - params.tau);
            }
        }
    }

    // Conjunct order never changes what a predicate means: canonical text
    // and cache identity are permutation blind.
    #[test]
    fn predicate_canonical_ignores_order(
        conjuncts in prop::collection::vec(
            (
                prop::sample::select(vec!["age", "fnlwgt", "hours-per-week"]),
                prop::sample::select(vec![Cmp::Eq, Cmp::Lt, Cmp::Ge, Cmp::Ne]),
                -1000i32..=100_000,
            ),
            1..5,
        ),
        swap in prop::bool::ANY,
    ) {
        let build = |list: &[(&str, Cmp, i32)]| {
            Predicate::new(
                list.iter()
                    .map(|&(attr, cmp, v)| Conjunct {
                        attr: attr.to_string(),
                        cmp,
                        constant: Constant::Num(v as f64),
                    })
                    .collect(),
            )
        };
        let forward = build(&conjuncts);
        let mut shuffled = conjuncts.clone();
        shuffled.reverse();
        if swap && shuffled.len() > 1 {
            let mid = shuffled.len() / 2;
            shuffled.swap(0, mid);
        }
        let backward = build(&shuffled);
        prop_assert_eq!(forward.canonical(), backward.canonical());

        let request = |p: Predicate| QueryRequest {
            query_id: "a".into(),
            user_id: "b".into(),
            a_req: 0.95,
            function: AggregateFunction::count(),
            n_type: NType::Portion,
            predicate: p,
        };
        prop_assert_eq!(
            CacheKey::from_request(&request(forward)),
            CacheKey::from_request(&request(backward))
        );
    }

    // Identical seeds reproduce identical release streams; the estimation
    // stream for one query never disturbs another's.
    #[test]
    fn rng_streams_are_stable(seed in prop::num::u64::ANY, seq in 0u64..1000) {
        let mut a = RngBundle::new(seed);
        let mut b = RngBundle::new(seed);
        let params = LaplaceParams::new(0.5, 1.0).unwrap();
        let draw_a = dpbroker::dp::laplace_sample(&params, a.release_rng());
        // Interleaved estimation draws must not shift the release stream.
        let mut est = b.estimation_rng(seq);
        let _ = dpbroker::dp::laplace_sample(&params, &mut est);
        let draw_b = dpbroker::dp::laplace_sample(&params, b.release_rng());
        prop_assert_eq!(draw_a.to_bits(), draw_b.to_bits());
    }

    // Arbitrary bytes never panic the CSV or sidecar parsers.
    #[test]
    fn loaders_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..2000)) {
        let _ = parse_csv(&bytes, None);
        if let Ok(text) = std::str::from_utf8(&bytes) {
            let _ = parse_schema_sidecar(text);
        }
    }

    // Any single-byte change to a ledger file is detected on the changed
    // line: not just bit flips, any replacement value.
    #[test]
    fn ledger_detects_any_byte_replacement(
        pos_pick in prop::num::u64::ANY,
        replacement in any::<u8>(),
    ) {
        let clean = chain_bytes();
        let pos = (pos_pick % clean.len() as u64) as usize;
        prop_assume!(clean[pos] != replacement);
        let mut tampered = clean.to_vec();
        tampered[pos] = replacement;
        let report = verify_bytes(&tampered);
        let line = clean[..pos].iter().filter(|&&b| b == b'\n').count() as u64;
        prop_assert!(!report.ok);
        prop_assert_eq!(report.first_bad_index, Some(line));
    }
}

/// One clean chain, built once: creating ledgers per proptest case would
/// spend the whole budget on fsync.
fn chain_bytes() -> &'static [u8] {
    static BYTES: OnceLock<Vec<u8>> = OnceLock::new();
    BYTES.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chain.ledger");
        let mut ledger = Ledger::create(&path, Eps::from_f64(9.0), 1_700_000_000_000).unwrap();
        for i in 0..20u64 {
            ledger
                .append(LedgerRecord {
                    seq: 0,
                    query_id: format!("q{i}"),
                    user_id: format!("u{}", i % 3),
                    function: dpbroker::FunctionKind::Count,
                    attribute: None,
                    n_type: if i % 2 == 0 { NType::Whole } else { NType::Portion },
                    predicate: "age>=40".into(),
                    epsilon_spent: Eps::from_micros(5_000 + i as i64),
                    a_req: 0.95,
                    a_act_estimate: 0.951,
                    released_value: 10.0 + i as f64 * 0.731,
                    timestamp_ms: 1_700_000_000_100 + i,
                })
                .unwrap();
        }
        std::fs::read(&path).unwrap()
    })
}
