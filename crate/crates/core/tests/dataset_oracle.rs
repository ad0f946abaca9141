//! Fixture values computed by tools/scan_oracle.py, an independent Python
//! implementation that reads the generated CSV with the stdlib csv module
//! and evaluates each case with plain Python arithmetic. Regenerate with:
//!
//! ```text
//! dpbroker bench gen-data --out census.csv --rows 32561 --seed 1
//! tools/scan_oracle.py census.csv
//! ```

use dpbroker::synth::{census_schema, census_table, write_csv, DEFAULT_ROWS};
use dpbroker::table::{
    load_csv, selection_size, true_value, AggregateFunction, Cmp, Conjunct, Constant, Predicate,
};
use dpbroker::{DataTable, FunctionKind};

struct Case {
    function: FunctionKind,
    target: Option<&'static str>,
    conjuncts: &'static [(&'static str, Cmp, &'static str, f64)],
    n: usize,
    value: f64,
}

// (attr, cmp, text, num): text set means a categorical constant.
const NUM: &str = "";

const CASES: &[Case] = &[
    Case {
        function: FunctionKind::Count,
        target: None,
        conjuncts: &[("age", Cmp::Lt, NUM, 30.0), ("sex", Cmp::Eq, "Male", 0.0)],
        n: 5485,
        value: 5485.0,
    },
    Case {
        function: FunctionKind::Count,
        target: None,
        conjuncts: &[("education", Cmp::Eq, "Bachelors", 0.0)],
        n: 5395,
        value: 5395.0,
    },
    Case {
        function: FunctionKind::Average,
        target: Some("capital-gain"),
        conjuncts: &[],
        n: 32561,
        value: 1027.0557722428673,
    },
    Case {
        function: FunctionKind::Average,
        target: Some("hours-per-week"),
        conjuncts: &[
            ("income", Cmp::Eq, ">50K", 0.0),
            ("marital-status", Cmp::Eq, "Married-civ-spouse", 0.0),
        ],
        n: 3577,
        value: 40.57729941291585,
    },
    Case {
        function: FunctionKind::Maximum,
        target: Some("capital-loss"),
        conjuncts: &[("age", Cmp::Ge, NUM, 40.0), ("workclass", Cmp::Eq, "Private", 0.0)],
        n: 10679,
        value: 2837.0,
    },
    Case {
        function: FunctionKind::Minimum,
        target: Some("fnlwgt"),
        conjuncts: &[("race", Cmp::Eq, "White", 0.0)],
        n: 27754,
        value: 13610.0,
    },
    Case {
        function: FunctionKind::Average,
        target: Some("age"),
        conjuncts: &[
            ("native-country", Cmp::Eq, "United-States", 0.0),
            ("sex", Cmp::Eq, "Female", 0.0),
        ],
        n: 9669,
        value: 38.94156582893784,
    },
    Case {
        function: FunctionKind::Count,
        target: None,
        conjuncts: &[("age", Cmp::Ge, NUM, 65.0)],
        n: 891,
        value: 891.0,
    },
    Case {
        function: FunctionKind::Maximum,
        target: Some("capital-gain"),
        conjuncts: &[],
        n: 32561,
        value: 99999.0,
    },
    Case {
        function: FunctionKind::Minimum,
        target: Some("age"),
        conjuncts: &[
            ("occupation", Cmp::Eq, "Prof-specialty", 0.0),
            ("income", Cmp::Eq, "<=50K", 0.0),
        ],
        n: 3137,
        value: 17.0,
    },
];

fn predicate(case: &Case) -> Predicate {
    Predicate::new(
        case.conjuncts
            .iter()
            .map(|&(attr, cmp, text, num)| Conjunct {
                attr: attr.to_string(),
                cmp,
                constant: if text.is_empty() {
                    Constant::Num(num)
                } else {
                    Constant::Text(text.to_string())
                },
            })
            .collect(),
    )
}

fn check(table: &DataTable, label: &str) {
    for (i, case) in CASES.iter().enumerate() {
        let pred = predicate(case);
        let f = AggregateFunction::new(case.function, case.target.map(str::to_string));
        assert_eq!(selection_size(table, &pred), case.n, "{label} case {i} selection size");
        let got = true_value(table, &f, &pred).unwrap();
        if case.function == FunctionKind::Average {
            // The oracle sums with fsum, the table sums pairwise; agreement
            // is to rounding, not to the bit.
            let tol = 1e-12 * case.value.abs();
            assert!(
                (got - case.value).abs() <= tol,
                "{label} case {i}: {got} vs oracle {}",
                case.value
            );
        } else {
            assert_eq!(got, case.value, "{label} case {i}");
        }
    }
}

#[test]
fn generated_table_matches_python_oracle() {
    let table = census_table(DEFAULT_ROWS, 1);
    assert_eq!(table.n(), 32561);
    check(&table, "in-memory");
}

#[test]
fn csv_round_trip_preserves_every_aggregate_bit() {
    let table = census_table(DEFAULT_ROWS, 1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("census.csv");
    write_csv(&table, &path).unwrap();

    let schema = census_schema();
    let outcome = load_csv(&path, Some(&schema)).unwrap();
    assert_eq!(outcome.rejected_rows, 0);
    check(&outcome.table, "reloaded");

    // Same bits, not just same tolerance: shortest-roundtrip formatting
    // must reproduce each aggregate exactly.
    for (i, case) in CASES.iter().enumerate() {
        let pred = predicate(case);
        let f = AggregateFunction::new(case.function, case.target.map(str::to_string));
        let a = true_value(&table, &f, &pred).unwrap();
        let b = true_value(&outcome.table, &f, &pred).unwrap();
        assert_eq!(a.to_bits(), b.to_bits(), "case {i} drifted across the round trip");
    }
}
