//! Seeded generator for a census-shaped benchmark table: 15 mixed-type
//! attributes whose marginals echo well-known adult-income survey data.
//! Same seed, same table, bit for bit.

use std::path::Path;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{LogNormal, Normal};

use crate::error::Result;
use crate::table::{ColumnKind, DataTable, Schema};

pub const DEFAULT_ROWS: usize = 32_561;

const WORKCLASS: [(&str, f64); 9] = [
    ("Private", 0.697),
    ("Self-emp-not-inc", 0.079),
    ("Local-gov", 0.064),
    ("?", 0.056),
    ("State-gov", 0.040),
    ("Self-emp-inc", 0.034),
    ("Federal-gov", 0.029),
    ("Without-pay", 0.0004),
    ("Never-worked", 0.0002),
];

// Education level, its years-of-schooling code, and its frequency.
const EDUCATION: [(&str, f64, f64); 16] = [
    ("HS-grad", 9.0, 0.3226),
    ("Some-college", 10.0, 0.2234),
    ("Bachelors", 13.0, 0.1646),
    ("Masters", 14.0, 0.0529),
    ("Assoc-voc", 11.0, 0.0424),
    ("11th", 7.0, 0.0361),
    ("Assoc-acdm", 12.0, 0.0328),
    ("10th", 6.0, 0.0287),
    ("7th-8th", 4.0, 0.0198),
    ("Prof-school", 15.0, 0.0177),
    ("9th", 5.0, 0.0158),
    ("12th", 8.0, 0.0133),
    ("Doctorate", 16.0, 0.0127),
    ("5th-6th", 3.0, 0.0102),
    ("1st-4th", 2.0, 0.0052),
    ("Preschool", 1.0, 0.0016),
];

const MARITAL: [(&str, f64); 7] = [
    ("Married-civ-spouse", 0.4582),
    ("Never-married", 0.3280),
    ("Divorced", 0.1365),
    ("Separated", 0.0315),
    ("Widowed", 0.0305),
    ("Married-spouse-absent", 0.0129),
    ("Married-AF-spouse", 0.0007),
];

const OCCUPATION: [(&str, f64); 15] = [
    ("Prof-specialty", 0.1270),
    ("Craft-repair", 0.1259),
    ("Exec-managerial", 0.1249),
    ("Adm-clerical", 0.1158),
    ("Sales", 0.1121),
    ("Other-service", 0.1011),
    ("Machine-op-inspct", 0.0615),
    ("?", 0.0566),
    ("Transport-moving", 0.0490),
    ("Handlers-cleaners", 0.0421),
    ("Farming-fishing", 0.0305),
    ("Tech-support", 0.0285),
    ("Protective-serv", 0.0199),
    ("Priv-house-serv", 0.0046),
    ("Armed-Forces", 0.0003),
];

const RELATIONSHIP: [(&str, f64); 6] = [
    ("Husband", 0.4054),
    ("Not-in-family", 0.2551),
    ("Own-child", 0.1558),
    ("Unmarried", 0.1059),
    ("Wife", 0.0481),
    ("Other-relative", 0.0297),
];

const RACE: [(&str, f64); 5] = [
    ("White", 0.8543),
    ("Black", 0.0959),
    ("Asian-Pac-Islander", 0.0319),
    ("Amer-Indian-Eskimo", 0.0096),
    ("Other", 0.0083),
];

const SEX: [(&str, f64); 2] = [("Male", 0.6692), ("Female", 0.3308)];

const COUNTRY: [(&str, f64); 16] = [
    ("United-States", 0.8959),
    ("Mexico", 0.0197),
    ("?", 0.0179),
    ("Philippines", 0.0061),
    ("Germany", 0.0042),
    ("Canada", 0.0037),
    ("Puerto-Rico", 0.0035),
    ("El-Salvador", 0.0033),
    ("India", 0.0031),
    ("Cuba", 0.0029),
    ("England", 0.0028),
    ("Jamaica", 0.0025),
    ("South", 0.0022),
    ("China", 0.0023),
    ("Italy", 0.0022),
    ("Other-country", 0.0277),
];

const INCOME: [(&str, f64); 2] = [("<=50K", 0.7592), (">50K", 0.2408)];

const COLUMNS: [(&str, ColumnKind); 15] = [
    ("age", ColumnKind::Numeric),
    ("workclass", ColumnKind::Categorical),
    ("fnlwgt", ColumnKind::Numeric),
    ("education", ColumnKind::Categorical),
    ("education-num", ColumnKind::Numeric),
    ("marital-status", ColumnKind::Categorical),
    ("occupation", ColumnKind::Categorical),
    ("relationship", ColumnKind::Categorical),
    ("race", ColumnKind::Categorical),
    ("sex", ColumnKind::Categorical),
    ("capital-gain", ColumnKind::Numeric),
    ("capital-loss", ColumnKind::Numeric),
    ("hours-per-week", ColumnKind::Numeric),
    ("native-country", ColumnKind::Categorical),
    ("income", ColumnKind::Categorical),
];

pub fn census_schema() -> Schema {
    Schema::new(COLUMNS.iter().map(|&(n, k)| (n.to_string(), k)).collect())
        .expect("column names are unique")
}

fn rounded_clamped(v: f64, lo: f64, hi: f64) -> f64 {
    v.round().clamp(lo, hi)
}

pub fn census_table(rows: usize, seed: u64) -> DataTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let age_d = Normal::new(38.58, 13.64).unwrap();
    let fnlwgt_d = LogNormal::new(12.0, 0.6).unwrap();
    let hours_d = Normal::new(40.44, 12.35).unwrap();
    let loss_d = Normal::new(1870.0, 380.0).unwrap();
    // Capital gains skew heavily toward high earners; the 99999 value is a
    // reporting ceiling that shows up as a spike in the real survey too.
    let gain_hi = LogNormal::new(8.9, 0.7).unwrap();
    let gain_lo = LogNormal::new(7.9, 0.8).unwrap();

    let pick = |weights: &[f64]| WeightedIndex::new(weights).unwrap();
    let workclass_d = pick(&WORKCLASS.map(|(_, w)| w));
    let education_d = pick(&EDUCATION.map(|(_, _, w)| w));
    let marital_d = pick(&MARITAL.map(|(_, w)| w));
    let occupation_d = pick(&OCCUPATION.map(|(_, w)| w));
    let relationship_d = pick(&RELATIONSHIP.map(|(_, w)| w));
    let race_d = pick(&RACE.map(|(_, w)| w));
    let sex_d = pick(&SEX.map(|(_, w)| w));
    let country_d = pick(&COUNTRY.map(|(_, w)| w));
    let income_d = pick(&INCOME.map(|(_, w)| w));

    let mut age = Vec::with_capacity(rows);
    let mut workclass = Vec::with_capacity(rows);
    let mut fnlwgt = Vec::with_capacity(rows);
    let mut education = Vec::with_capacity(rows);
    let mut education_num = Vec::with_capacity(rows);
    let mut marital = Vec::with_capacity(rows);
    let mut occupation = Vec::with_capacity(rows);
    let mut relationship = Vec::with_capacity(rows);
    let mut race = Vec::with_capacity(rows);
    let mut sex = Vec::with_capacity(rows);
    let mut gain = Vec::with_capacity(rows);
    let mut loss = Vec::with_capacity(rows);
    let mut hours = Vec::with_capacity(rows);
    let mut country = Vec::with_capacity(rows);
    let mut income = Vec::with_capacity(rows);

    for _ in 0..rows {
        let earns_more = income_d.sample(&mut rng) == 1;
        let edu = EDUCATION[education_d.sample(&mut rng)];

        age.push(rounded_clamped(age_d.sample(&mut rng), 17.0, 90.0));
        workclass.push(WORKCLASS[workclass_d.sample(&mut rng)].0.to_string());
        fnlwgt.push(rounded_clamped(fnlwgt_d.sample(&mut rng), 12_285.0, 1_500_000.0));
        education.push(edu.0.to_string());
        education_num.push(edu.1);
        marital.push(MARITAL[marital_d.sample(&mut rng)].0.to_string());
        occupation.push(OCCUPATION[occupation_d.sample(&mut rng)].0.to_string());
        relationship.push(RELATIONSHIP[relationship_d.sample(&mut rng)].0.to_string());
        race.push(RACE[race_d.sample(&mut rng)].0.to_string());
        sex.push(SEX[sex_d.sample(&mut rng)].0.to_string());

        let (p_zero, p_spike, gain_d) =
            if earns_more { (0.78, 0.015, &gain_hi) } else { (0.95, 0.001, &gain_lo) };
        let roll: f64 = rng.gen();
        gain.push(if roll < p_zero {
            0.0
        } else if roll < p_zero + p_spike {
            99_999.0
        } else {
            rounded_clamped(gain_d.sample(&mut rng), 1.0, 99_999.0)
        });

        loss.push(if rng.gen::<f64>() < 0.9533 {
            0.0
        } else {
            rounded_clamped(loss_d.sample(&mut rng), 155.0, 4356.0)
        });
        hours.push(rounded_clamped(hours_d.sample(&mut rng), 1.0, 99.0));
        country.push(COUNTRY[country_d.sample(&mut rng)].0.to_string());
        income.push(INCOME[if earns_more { 1 } else { 0 }].0.to_string());
    }

    DataTable::from_columns(
        census_schema(),
        vec![(0, age), (2, fnlwgt), (4, education_num), (10, gain), (11, loss), (12, hours)],
        vec![
            (1, workclass),
            (3, education),
            (5, marital),
            (6, occupation),
            (7, relationship),
            (8, race),
            (9, sex),
            (13, country),
            (14, income),
        ],
    )
    .expect("generated columns match the schema")
}

pub fn write_csv(table: &DataTable, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(table.schema().columns().map(|(n, _)| n))?;
    for row in 0..table.n() {
        w.write_record((0..table.m()).map(|col| table.render_cell(col, row)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_census_csv(path: &Path, rows: usize, seed: u64) -> Result<()> {
    write_csv(&census_table(rows, seed), path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{load_csv, selection_size, Cmp, Conjunct, Constant, Predicate};

    #[test]
    fn generation_is_deterministic() {
        let a = census_table(500, 9);
        let b = census_table(500, 9);
        assert_eq!(a.n(), 500);
        let col_a = a.numeric_column("capital-gain").unwrap();
        let col_b = b.numeric_column("capital-gain").unwrap();
        assert!(col_a.iter().zip(col_b).all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = census_table(500, 10);
        let col_c = c.numeric_column("capital-gain").unwrap();
        assert!(col_a.iter().zip(col_c).any(|(x, y)| x != y));
    }

    #[test]
    fn marginals_land_near_their_targets() {
        let t = census_table(DEFAULT_ROWS, 1);
        assert_eq!(t.n(), DEFAULT_ROWS);
        assert_eq!(t.m(), 15);

        let age = t.numeric_column("age").unwrap();
        let mean = age.iter().sum::<f64>() / age.len() as f64;
        assert!((mean - 38.58).abs() < 1.0, "age mean {mean}");
        assert!(age.iter().all(|&a| (17.0..=90.0).contains(&a) && a.fract() == 0.0));

        let sex = t.categorical_column("sex").unwrap();
        let male = sex.iter().filter(|s| *s == "Male").count() as f64 / sex.len() as f64;
        assert!((male - 0.6692).abs() < 0.02, "male share {male}");

        let gain = t.numeric_column("capital-gain").unwrap();
        let zero = gain.iter().filter(|&&g| g == 0.0).count() as f64 / gain.len() as f64;
        assert!((0.88..=0.93).contains(&zero), "zero-gain share {zero}");
        let gain_mean = gain.iter().sum::<f64>() / gain.len() as f64;
        assert!((500.0..=1800.0).contains(&gain_mean), "gain mean {gain_mean}");

        // The benchmark workloads rely on gains concentrating among high
        // earners.
        let income = t.categorical_column("income").unwrap();
        let mean_of = |want: &str| {
            let (sum, n) = income
                .iter()
                .zip(gain)
                .filter(|(i, _)| *i == want)
                .fold((0.0, 0usize), |(s, n), (_, g)| (s + g, n + 1));
            sum / n as f64
        };
        assert!(mean_of(">50K") > 3.0 * mean_of("<=50K"));

        let fnlwgt = t.numeric_column("fnlwgt").unwrap();
        let min = fnlwgt.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((12_285.0..=30_000.0).contains(&min), "fnlwgt min {min}");
    }

    #[test]
    fn csv_roundtrip_preserves_every_cell() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("census.csv");
        let t = census_table(800, 4);
        write_csv(&t, &path).unwrap();
        let back = load_csv(&path, None).unwrap();
        assert_eq!(back.rejected_rows, 0);
        assert_eq!(back.table.n(), 800);
        for (name, kind) in t.schema().columns() {
            assert_eq!(back.table.schema().kind_of(name), Some(kind), "column {name}");
        }
        let a = t.numeric_column("fnlwgt").unwrap();
        let b = back.table.numeric_column("fnlwgt").unwrap();
        assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));

        let pred = Predicate::new(vec![Conjunct {
            attr: "education".into(),
            cmp: Cmp::Eq,
            constant: Constant::Text("Bachelors".into()),
        }]);
        assert_eq!(selection_size(&t, &pred), selection_size(&back.table, &pred));
    }
}
