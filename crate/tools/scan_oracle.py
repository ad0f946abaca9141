#!/usr/bin/env python3
"""Independent aggregate oracle for the synthetic census CSV.

Reads the CSV with the stdlib csv module and evaluates a fixed list of
predicated aggregates with plain Python arithmetic, sharing no code with
the Rust implementation. One line per case, ready to freeze into the
dataset fixture test.

Usage: scan_oracle.py <census.csv>
"""

import csv
import math
import sys

NUMERIC = {
    "age",
    "fnlwgt",
    "education-num",
    "capital-gain",
    "capital-loss",
    "hours-per-week",
}

OPS = {
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}

CASES = [
    ("count", None, [("age", "<", 30.0), ("sex", "=", "Male")]),
    ("count", None, [("education", "=", "Bachelors")]),
    ("average", "capital-gain", []),
    (
        "average",
        "hours-per-week",
        [("income", "=", ">50K"), ("marital-status", "=", "Married-civ-spouse")],
    ),
    ("maximum", "capital-loss", [("age", ">=", 40.0), ("workclass", "=", "Private")]),
    ("minimum", "fnlwgt", [("race", "=", "White")]),
    (
        "average",
        "age",
        [("native-country", "=", "United-States"), ("sex", "=", "Female")],
    ),
    ("count", None, [("age", ">=", 65.0)]),
    ("maximum", "capital-gain", []),
    (
        "minimum",
        "age",
        [("occupation", "=", "Prof-specialty"), ("income", "=", "<=50K")],
    ),
]


def matches(row, pred):
    for attr, op, want in pred:
        have = row[attr]
        if attr in NUMERIC:
            have = float(have)
        if not OPS[op](have, want):
            return False
    return True


def main():
    path = sys.argv[1]
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    print(f"rows: {len(rows)}")
    for i, (func, attr, pred) in enumerate(CASES):
        chosen = [r for r in rows if matches(r, pred)]
        n = len(chosen)
        if func == "count":
            value = float(n)
        else:
            values = [float(r[attr]) for r in chosen]
            if func == "average":
                value = math.fsum(values) / n
            elif func == "maximum":
                value = max(values)
            else:
                value = min(values)
        print(f"case {i}: {func} n={n} value={value!r}")


if __name__ == "__main__":
    main()
