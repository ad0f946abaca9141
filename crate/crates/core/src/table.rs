//! Immutable tabular data: schema handling, CSV loading with row rejection,
//! conjunctive predicates, and exact aggregate evaluation.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

impl ColumnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Numeric => "numeric",
            ColumnKind::Categorical => "categorical",
        }
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ordered attribute list; names are unique.
#[derive(Debug, Clone)]
pub struct Schema {
    names: Vec<String>,
    kinds: Vec<ColumnKind>,
    by_name: HashMap<String, usize>,
}

impl Schema {
    pub fn new(columns: Vec<(String, ColumnKind)>) -> Result<Schema> {
        let mut by_name = HashMap::with_capacity(columns.len());
        let mut names = Vec::with_capacity(columns.len());
        let mut kinds = Vec::with_capacity(columns.len());
        for (i, (name, kind)) in columns.into_iter().enumerate() {
            if by_name.insert(name.clone(), i).is_some() {
                return Err(Error::DuplicateAttribute(name));
            }
            names.push(name);
            kinds.push(kind);
        }
        Ok(Schema { names, kinds, by_name })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    pub fn kind(&self, idx: usize) -> ColumnKind {
        self.kinds[idx]
    }

    pub fn kind_of(&self, name: &str) -> Option<ColumnKind> {
        self.index_of(name).map(|i| self.kinds[i])
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, ColumnKind)> {
        self.names.iter().map(String::as_str).zip(self.kinds.iter().copied())
    }
}

/// Parses sidecar text: one `name:kind` line per column, `#` comments and
/// blank lines ignored, kind one of `numeric` / `categorical`.
pub fn parse_schema_sidecar(text: &str) -> Result<Schema> {
    let mut columns = Vec::new();
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, kind) = line
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("schema line `{line}` is not name:kind")))?;
        let kind = match kind.trim() {
            "numeric" => ColumnKind::Numeric,
            "categorical" => ColumnKind::Categorical,
            other => {
                return Err(Error::Config(format!(
                    "unknown column kind `{other}` (expected numeric or categorical)"
                )))
            }
        };
        columns.push((name.trim().to_string(), kind));
    }
    if columns.is_empty() {
        return Err(Error::Config("schema sidecar lists no columns".into()));
    }
    Schema::new(columns)
}

pub fn load_schema_sidecar(path: &Path) -> Result<Schema> {
    parse_schema_sidecar(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Clone)]
enum ColumnData {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

/// Immutable table; all mutation happens at load time.
#[derive(Debug, Clone)]
pub struct DataTable {
    schema: Schema,
    cols: Vec<ColumnData>,
    rows: usize,
}

#[derive(Debug)]
pub struct LoadOutcome {
    pub table: DataTable,
    /// Rows dropped for arity mismatch or unparseable numeric cells.
    pub rejected_rows: usize,
}

fn parse_numeric(cell: &str) -> Option<f64> {
    let cell = cell.trim();
    if cell.is_empty() {
        return None;
    }
    f64::from_str(cell).ok().filter(|v| v.is_finite())
}

impl DataTable {
    /// Builds a table from typed columns. Column lengths must agree.
    pub fn from_columns(schema: Schema, numeric: Vec<(usize, Vec<f64>)>, categorical: Vec<(usize, Vec<String>)>) -> Result<DataTable> {
        let mut slots: Vec<Option<ColumnData>> = (0..schema.len()).map(|_| None).collect();
        let mut rows = None;
        let mut place = |idx: usize, data: ColumnData, len: usize| -> Result<()> {
            if idx >= slots.len() || slots[idx].is_some() {
                return Err(Error::Config(format!("bad column slot {idx}")));
            }
            match rows {
                None => rows = Some(len),
                Some(r) if r == len => {}
                Some(r) => {
                    return Err(Error::Config(format!(
                        "column {idx} has {len} rows, expected {r}"
                    )))
                }
            }
            slots[idx] = Some(data);
            Ok(())
        };
        for (idx, v) in numeric {
            let len = v.len();
            place(idx, ColumnData::Numeric(v), len)?;
        }
        for (idx, v) in categorical {
            let len = v.len();
            place(idx, ColumnData::Categorical(v), len)?;
        }
        let cols = slots
            .into_iter()
            .enumerate()
            .map(|(i, s)| s.ok_or_else(|| Error::Config(format!("column {i} missing"))))
            .collect::<Result<Vec<_>>>()?;
        for (i, c) in cols.iter().enumerate() {
            let is_num = matches!(c, ColumnData::Numeric(_));
            let declared = schema.kind(i) == ColumnKind::Numeric;
            if is_num != declared {
                return Err(Error::KindMismatch {
                    attr: schema.name(i).to_string(),
                    expected: schema.kind(i).as_str(),
                    actual: if is_num { "numeric" } else { "categorical" },
                });
            }
        }
        Ok(DataTable { rows: rows.unwrap_or(0), schema, cols })
    }

    pub fn n(&self) -> usize {
        self.rows
    }

    pub fn m(&self) -> usize {
        self.schema.len()
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    fn numeric_cell(&self, col: usize, row: usize) -> f64 {
        match &self.cols[col] {
            ColumnData::Numeric(v) => v[row],
            ColumnData::Categorical(_) => unreachable!("validated numeric column"),
        }
    }

    fn categorical_cell(&self, col: usize, row: usize) -> &str {
        match &self.cols[col] {
            ColumnData::Categorical(v) => &v[row],
            ColumnData::Numeric(_) => unreachable!("validated categorical column"),
        }
    }

    pub fn numeric_column(&self, name: &str) -> Option<&[f64]> {
        match &self.cols[self.schema.index_of(name)?] {
            ColumnData::Numeric(v) => Some(v),
            ColumnData::Categorical(_) => None,
        }
    }

    pub fn categorical_column(&self, name: &str) -> Option<&[String]> {
        match &self.cols[self.schema.index_of(name)?] {
            ColumnData::Categorical(v) => Some(v),
            ColumnData::Numeric(_) => None,
        }
    }

    pub fn render_cell(&self, col: usize, row: usize) -> String {
        match &self.cols[col] {
            ColumnData::Numeric(v) => format_num(v[row]),
            ColumnData::Categorical(v) => v[row].clone(),
        }
    }
}

/// Parses CSV bytes (header row first). Column kinds come from `hint` when
/// given, otherwise a column is numeric when a strict majority of its
/// non-empty cells parse as finite numbers. Rows that do not fit the typed
/// schema are dropped and counted, never patched.
pub fn parse_csv(bytes: &[u8], hint: Option<&Schema>) -> Result<LoadOutcome> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(bytes);
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(Error::Config("csv has no header row".into()));
    }
    let mut records = Vec::new();
    for rec in reader.into_records() {
        records.push(rec?);
    }

    let kinds: Vec<ColumnKind> = match hint {
        Some(schema) => {
            if schema.len() != headers.len() {
                return Err(Error::Config(format!(
                    "schema hint lists {} columns, csv has {}",
                    schema.len(),
                    headers.len()
                )));
            }
            headers
                .iter()
                .map(|h| {
                    schema
                        .kind_of(h)
                        .ok_or_else(|| Error::UnknownAttribute(h.clone()))
                })
                .collect::<Result<_>>()?
        }
        None => infer_kinds(&headers, &records),
    };

    let schema = Schema::new(headers.iter().cloned().zip(kinds.iter().copied()).collect())?;
    let width = headers.len();
    let mut cols: Vec<ColumnData> = kinds
        .iter()
        .map(|k| match k {
            ColumnKind::Numeric => ColumnData::Numeric(Vec::with_capacity(records.len())),
            ColumnKind::Categorical => ColumnData::Categorical(Vec::with_capacity(records.len())),
        })
        .collect();

    let mut rejected = 0usize;
    let mut parsed_row: Vec<f64> = vec![0.0; width];
    let mut rows = 0usize;
    'rows: for rec in &records {
        if rec.len() != width {
            rejected += 1;
            continue;
        }
        for (j, cell) in rec.iter().enumerate() {
            if kinds[j] == ColumnKind::Numeric {
                match parse_numeric(cell) {
                    Some(v) => parsed_row[j] = v,
                    None => {
                        rejected += 1;
                        continue 'rows;
                    }
                }
            }
        }
        for (j, cell) in rec.iter().enumerate() {
            match &mut cols[j] {
                ColumnData::Numeric(v) => v.push(parsed_row[j]),
                ColumnData::Categorical(v) => v.push(cell.trim().to_string()),
            }
        }
        rows += 1;
    }

    Ok(LoadOutcome {
        table: DataTable { schema, cols, rows },
        rejected_rows: rejected,
    })
}

fn infer_kinds(headers: &[String], records: &[csv::StringRecord]) -> Vec<ColumnKind> {
    let width = headers.len();
    let mut numeric_hits = vec![0usize; width];
    let mut non_empty = vec![0usize; width];
    for rec in records {
        if rec.len() != width {
            continue;
        }
        for (j, cell) in rec.iter().enumerate() {
            if cell.trim().is_empty() {
                continue;
            }
            non_empty[j] += 1;
            if parse_numeric(cell).is_some() {
                numeric_hits[j] += 1;
            }
        }
    }
    (0..width)
        .map(|j| {
            if non_empty[j] > 0 && numeric_hits[j] * 2 > non_empty[j] {
                ColumnKind::Numeric
            } else {
                ColumnKind::Categorical
            }
        })
        .collect()
}

pub fn load_csv(path: &Path, hint: Option<&Schema>) -> Result<LoadOutcome> {
    parse_csv(&std::fs::read(path)?, hint)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cmp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Cmp {
    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Eq => "=",
            Cmp::Ne => "!=",
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
        }
    }

    pub fn parse(s: &str) -> Option<Cmp> {
        Some(match s {
            "=" | "==" => Cmp::Eq,
            "!=" => Cmp::Ne,
            "<" => Cmp::Lt,
            "<=" => Cmp::Le,
            ">" => Cmp::Gt,
            ">=" => Cmp::Ge,
            _ => return None,
        })
    }

    /// Ordering comparators are defined on numeric attributes only.
    pub fn is_ordering(self) -> bool {
        !matches!(self, Cmp::Eq | Cmp::Ne)
    }
}

impl fmt::Display for Cmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constant {
    Num(f64),
    Text(String),
}

/// Rust's f64 Display is the shortest representation that round-trips, so
/// it is stable across writes and replays. Negative zero collapses to "0".
pub(crate) fn format_num(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

impl Constant {
    fn canonical(&self) -> String {
        match self {
            Constant::Num(v) => format_num(*v),
            Constant::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conjunct {
    pub attr: String,
    pub cmp: Cmp,
    pub constant: Constant,
}

impl Conjunct {
    fn canonical(&self) -> String {
        format!("{}{}{}", self.attr, self.cmp.symbol(), self.constant.canonical())
    }
}

/// Conjunction of attribute comparisons; empty selects every row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Predicate {
    conjuncts: Vec<Conjunct>,
}

impl Predicate {
    pub fn new(conjuncts: Vec<Conjunct>) -> Predicate {
        Predicate { conjuncts }
    }

    pub fn conjuncts(&self) -> &[Conjunct] {
        &self.conjuncts
    }

    pub fn is_empty(&self) -> bool {
        self.conjuncts.is_empty()
    }

    pub fn validate(&self, schema: &Schema) -> Result<()> {
        for c in &self.conjuncts {
            let kind = schema
                .kind_of(&c.attr)
                .ok_or_else(|| Error::UnknownAttribute(c.attr.clone()))?;
            if c.cmp.is_ordering() && kind != ColumnKind::Numeric {
                return Err(Error::OrderingOnCategorical {
                    attr: c.attr.clone(),
                    cmp: c.cmp.symbol(),
                });
            }
            match (&c.constant, kind) {
                (Constant::Num(v), ColumnKind::Numeric) => {
                    if !v.is_finite() {
                        return Err(Error::Config(format!(
                            "constant for `{}` must be finite",
                            c.attr
                        )));
                    }
                }
                (Constant::Text(_), ColumnKind::Categorical) => {}
                (Constant::Num(_), ColumnKind::Categorical) => {
                    return Err(Error::KindMismatch {
                        attr: c.attr.clone(),
                        expected: "categorical",
                        actual: "numeric",
                    })
                }
                (Constant::Text(_), ColumnKind::Numeric) => {
                    return Err(Error::KindMismatch {
                        attr: c.attr.clone(),
                        expected: "numeric",
                        actual: "categorical",
                    })
                }
            }
        }
        Ok(())
    }

    /// Canonical text form: conjuncts sorted, `&`-joined, shortest numeric
    /// constants. Equal predicates canonicalize identically regardless of
    /// conjunct order, which is what cache keys and ledger replay rely on.
    pub fn canonical(&self) -> String {
        let mut parts: Vec<String> = self.conjuncts.iter().map(Conjunct::canonical).collect();
        parts.sort_unstable();
        parts.join("&")
    }

    fn matches(&self, table: &DataTable, row: usize) -> bool {
        self.conjuncts.iter().all(|c| {
            let col = table
                .schema
                .index_of(&c.attr)
                .expect("predicate validated against schema");
            match (&c.constant, table.schema.kind(col)) {
                (Constant::Num(k), ColumnKind::Numeric) => {
                    let v = table.numeric_cell(col, row);
                    match c.cmp {
                        Cmp::Eq => v == *k,
                        Cmp::Ne => v != *k,
                        Cmp::Lt => v < *k,
                        Cmp::Le => v <= *k,
                        Cmp::Gt => v > *k,
                        Cmp::Ge => v >= *k,
                    }
                }
                (Constant::Text(k), ColumnKind::Categorical) => {
                    let v = table.categorical_cell(col, row);
                    match c.cmp {
                        Cmp::Eq => v == k,
                        Cmp::Ne => v != k,
                        _ => unreachable!("validated: no ordering on categorical"),
                    }
                }
                _ => unreachable!("validated constant kind"),
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionKind {
    Count,
    Average,
    Maximum,
    Minimum,
}

impl FunctionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FunctionKind::Count => "count",
            FunctionKind::Average => "average",
            FunctionKind::Maximum => "maximum",
            FunctionKind::Minimum => "minimum",
        }
    }

    pub fn parse(s: &str) -> Option<FunctionKind> {
        Some(match s {
            "count" => FunctionKind::Count,
            "average" => FunctionKind::Average,
            "maximum" => FunctionKind::Maximum,
            "minimum" => FunctionKind::Minimum,
            _ => return None,
        })
    }

    pub const ALL: [FunctionKind; 4] = [
        FunctionKind::Count,
        FunctionKind::Average,
        FunctionKind::Maximum,
        FunctionKind::Minimum,
    ];
}

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Aggregate over the predicate's selection. `target` is ignored for Count
/// and must name a numeric attribute for the others.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateFunction {
    pub kind: FunctionKind,
    pub target: Option<String>,
}

impl AggregateFunction {
    pub fn count() -> AggregateFunction {
        AggregateFunction { kind: FunctionKind::Count, target: None }
    }

    pub fn new(kind: FunctionKind, target: Option<String>) -> AggregateFunction {
        AggregateFunction { kind, target }
    }

    pub fn validate(&self, schema: &Schema) -> Result<()> {
        if self.kind == FunctionKind::Count {
            return Ok(());
        }
        let attr = self
            .target
            .as_deref()
            .ok_or(Error::MissingTarget { kind: self.kind.as_str() })?;
        match schema.kind_of(attr) {
            None => Err(Error::UnknownAttribute(attr.to_string())),
            Some(ColumnKind::Numeric) => Ok(()),
            Some(ColumnKind::Categorical) => Err(Error::KindMismatch {
                attr: attr.to_string(),
                expected: "numeric",
                actual: "categorical",
            }),
        }
    }
}

pub fn selection_size(table: &DataTable, pred: &Predicate) -> usize {
    (0..table.rows).filter(|&r| pred.matches(table, r)).count()
}

/// Splitting the sum keeps float error O(log n) instead of O(n), so repeated
/// loads of the same data always produce the same Average bit pattern.
fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 32 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Exact (noise-free) aggregate; the private release path adds noise on top.
pub fn true_value(table: &DataTable, f: &AggregateFunction, pred: &Predicate) -> Result<f64> {
    f.validate(&table.schema)?;
    pred.validate(&table.schema)?;
    if f.kind == FunctionKind::Count {
        return Ok(selection_size(table, pred) as f64);
    }
    let col = table
        .schema
        .index_of(f.target.as_deref().expect("validated target"))
        .expect("validated target");
    let selected: Vec<f64> = (0..table.rows)
        .filter(|&r| pred.matches(table, r))
        .map(|r| table.numeric_cell(col, r))
        .collect();
    if selected.is_empty() {
        return Err(Error::EmptySelection { kind: f.kind.as_str() });
    }
    Ok(match f.kind {
        FunctionKind::Count => unreachable!(),
        FunctionKind::Average => pairwise_sum(&selected) / selected.len() as f64,
        FunctionKind::Maximum => selected.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        FunctionKind::Minimum => selected.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn num(attr: &str, cmp: Cmp, v: f64) -> Conjunct {
        Conjunct { attr: attr.into(), cmp, constant: Constant::Num(v) }
    }

    fn text(attr: &str, cmp: Cmp, v: &str) -> Conjunct {
        Conjunct { attr: attr.into(), cmp, constant: Constant::Text(v.into()) }
    }

    #[test]
    fn single_cell_csv() {
        let out = parse_csv(b"age\n30\n", None).unwrap();
        assert_eq!(out.table.n(), 1);
        assert_eq!(out.table.m(), 1);
        assert_eq!(out.rejected_rows, 0);
        assert_eq!(out.table.schema().kind_of("age"), Some(ColumnKind::Numeric));
        let v = true_value(&out.table, &AggregateFunction::count(), &Predicate::default()).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn bad_numeric_token_rejects_row() {
        let out = parse_csv(b"age,job\n30,clerk\nforty,clerk\n50,nurse\n", None).unwrap();
        assert_eq!(out.table.n(), 2);
        assert_eq!(out.rejected_rows, 1);
    }

    #[test]
    fn arity_mismatch_rejects_row() {
        let out = parse_csv(b"a,b\n1,2\n3\n4,5\n", None).unwrap();
        assert_eq!(out.table.n(), 2);
        assert_eq!(out.rejected_rows, 1);
    }

    #[test]
    fn hint_overrides_inference() {
        let schema = parse_schema_sidecar("age:categorical\njob:categorical\n").unwrap();
        let out = parse_csv(b"age,job\n30,clerk\nforty,clerk\n", Some(&schema)).unwrap();
        assert_eq!(out.table.n(), 2);
        assert_eq!(out.rejected_rows, 0);
        assert_eq!(out.table.schema().kind_of("age"), Some(ColumnKind::Categorical));
    }

    #[test]
    fn non_finite_tokens_are_not_numeric() {
        let out = parse_csv(b"x\ninf\nNaN\n1\n", None).unwrap();
        // Only one of three non-empty cells parses finite, so the column
        // falls back to categorical and nothing is rejected.
        assert_eq!(out.table.schema().kind_of("x"), Some(ColumnKind::Categorical));
        assert_eq!(out.table.n(), 3);
    }

    #[test]
    fn sidecar_rejects_garbage() {
        assert!(parse_schema_sidecar("age numeric").is_err());
        assert!(parse_schema_sidecar("age:integer").is_err());
        assert!(parse_schema_sidecar("a:numeric\na:categorical").is_err());
    }

    fn sample_table() -> DataTable {
        parse_csv(
            b"age,education,hours\n\
              23,Bachelors,40\n\
              41,HS-grad,50\n\
              19,Bachelors,20\n\
              64,Doctorate,60\n\
              33,HS-grad,40\n",
            None,
        )
        .unwrap()
        .table
    }

    #[test]
    fn count_matches_selection_size() {
        let t = sample_table();
        let p = Predicate::new(vec![text("education", Cmp::Eq, "Bachelors")]);
        assert_eq!(selection_size(&t, &p), 2);
        let v = true_value(&t, &AggregateFunction::count(), &p).unwrap();
        assert_eq!(v, 2.0);
        let under25 = Predicate::new(vec![num("age", Cmp::Lt, 25.0)]);
        assert_eq!(selection_size(&t, &under25), 2);
    }

    #[test]
    fn ordered_aggregates() {
        let t = sample_table();
        let all = Predicate::default();
        let avg = AggregateFunction::new(FunctionKind::Average, Some("hours".into()));
        let max = AggregateFunction::new(FunctionKind::Maximum, Some("hours".into()));
        let min = AggregateFunction::new(FunctionKind::Minimum, Some("hours".into()));
        let a = true_value(&t, &avg, &all).unwrap();
        let hi = true_value(&t, &max, &all).unwrap();
        let lo = true_value(&t, &min, &all).unwrap();
        assert_eq!(a, 42.0);
        assert_eq!(hi, 60.0);
        assert_eq!(lo, 20.0);
        assert!(lo <= a && a <= hi);
    }

    #[test]
    fn empty_selection_is_an_error_for_ordered_aggregates() {
        let t = sample_table();
        let p = Predicate::new(vec![num("age", Cmp::Gt, 100.0)]);
        let min = AggregateFunction::new(FunctionKind::Minimum, Some("hours".into()));
        assert!(matches!(
            true_value(&t, &min, &p),
            Err(Error::EmptySelection { .. })
        ));
        // Count over the same empty selection is defined and zero.
        assert_eq!(true_value(&t, &AggregateFunction::count(), &p).unwrap(), 0.0);
    }

    #[test]
    fn predicate_validation_errors() {
        let t = sample_table();
        let unknown = Predicate::new(vec![num("wage", Cmp::Lt, 10.0)]);
        assert!(matches!(
            unknown.validate(t.schema()),
            Err(Error::UnknownAttribute(_))
        ));
        let ordered_cat = Predicate::new(vec![text("education", Cmp::Lt, "HS-grad")]);
        assert!(matches!(
            ordered_cat.validate(t.schema()),
            Err(Error::OrderingOnCategorical { .. })
        ));
        let wrong_kind = Predicate::new(vec![num("education", Cmp::Eq, 3.0)]);
        assert!(matches!(
            wrong_kind.validate(t.schema()),
            Err(Error::KindMismatch { .. })
        ));
    }

    #[test]
    fn canonical_predicate_is_order_insensitive() {
        let a = Predicate::new(vec![
            text("education", Cmp::Eq, "Bachelors"),
            num("age", Cmp::Lt, 25.0),
        ]);
        let b = Predicate::new(vec![
            num("age", Cmp::Lt, 25.0),
            text("education", Cmp::Eq, "Bachelors"),
        ]);
        assert_eq!(a.canonical(), b.canonical());
        assert_eq!(a.canonical(), "age<25&education=Bachelors");
        assert_eq!(Predicate::default().canonical(), "");
    }

    #[test]
    fn aggregate_function_validation() {
        let t = sample_table();
        let no_target = AggregateFunction::new(FunctionKind::Average, None);
        assert!(matches!(
            no_target.validate(t.schema()),
            Err(Error::MissingTarget { .. })
        ));
        let cat_target = AggregateFunction::new(FunctionKind::Maximum, Some("education".into()));
        assert!(matches!(
            cat_target.validate(t.schema()),
            Err(Error::KindMismatch { .. })
        ));
    }
}
