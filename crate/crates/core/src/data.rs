//! Credit-data ingestion: the space-separated 20-attribute format, one-hot
//! encoding to the 59-column representation, correlation-validated
//! train/test splits, and a schema-valid synthetic generator for
//! environments without the original file.
//!
//! Encoding rules: each multi-category attribute expands to one indicator
//! column per category present in the data (catalog order), the two binary
//! attributes (telephone, foreign worker) collapse to a single
//! positive-code indicator, numeric attributes pass through. Columns keep
//! attribute order, so feature `l` is stable across runs; qubit `l` maps to
//! column `l` everywhere downstream.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::Bits;

pub mod synth;

/// Columns produced by the full one-hot encoding of the credit schema.
pub const FULL_ENCODED_COLUMNS: usize = 59;

#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected {expected} fields, got {got}")]
    WrongTokenCount { line: usize, expected: usize, got: usize },
    #[error("line {line}: cannot parse {token:?} as a number for attribute `{attribute}`")]
    BadNumber { line: usize, attribute: &'static str, token: String },
    #[error("line {line}: code {code:?} is not in the catalog of attribute `{attribute}`")]
    UnknownCode { line: usize, attribute: &'static str, code: String },
    #[error("line {line}: label must be 1 or 2, got {got:?}")]
    BadLabel { line: usize, got: String },
    #[error("encoding drift: expected {expected} columns, got {got}")]
    EncodingDrift { expected: usize, got: usize },
    #[error("duplicate feature name {0:?}")]
    DuplicateName(String),
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("zero variance makes the correlation undefined")]
    ZeroVariance,
    #[error("vectors have lengths {n1} and {n2}; need equal lengths >= 2")]
    BadVectors { n1: usize, n2: usize },
    #[error("subset has {got} bits but the dataset has {expected} columns")]
    SubsetLength { expected: usize, got: usize },
    #[error(
        "no acceptable split after {attempts} attempts; worst offender `{feature}` with relative difference {rel_diff:.3}"
    )]
    SplitRetriesExhausted { attempts: usize, feature: String, rel_diff: f64 },
    #[error("feature {0:?} not found in the dataset")]
    MissingFeature(String),
    #[error("csv parse error at line {line}: {reason}")]
    Csv { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttrKind {
    /// One indicator column per category present.
    Categorical(&'static [&'static str]),
    /// Passes through as a single real column.
    Numeric,
    /// Two-code attribute collapsed to a single indicator of `positive`.
    Binary { codes: [&'static str; 2], positive: &'static str },
}

#[derive(Debug, Clone, Copy)]
pub struct AttributeSpec {
    pub name: &'static str,
    pub kind: AttrKind,
}

/// The 20-attribute credit schema (13 categorical, 7 numeric).
pub const ATTRIBUTES: [AttributeSpec; 20] = [
    AttributeSpec {
        name: "checking_status",
        kind: AttrKind::Categorical(&["A11", "A12", "A13", "A14"]),
    },
    AttributeSpec { name: "duration", kind: AttrKind::Numeric },
    AttributeSpec {
        name: "credit_history",
        kind: AttrKind::Categorical(&["A30", "A31", "A32", "A33", "A34"]),
    },
    AttributeSpec {
        name: "purpose",
        kind: AttrKind::Categorical(&[
            "A40", "A41", "A42", "A43", "A44", "A45", "A46", "A47", "A48", "A49", "A410",
        ]),
    },
    AttributeSpec { name: "credit_amount", kind: AttrKind::Numeric },
    AttributeSpec {
        name: "savings",
        kind: AttrKind::Categorical(&["A61", "A62", "A63", "A64", "A65"]),
    },
    AttributeSpec {
        name: "employment_since",
        kind: AttrKind::Categorical(&["A71", "A72", "A73", "A74", "A75"]),
    },
    AttributeSpec { name: "installment_rate", kind: AttrKind::Numeric },
    AttributeSpec {
        name: "personal_status_sex",
        kind: AttrKind::Categorical(&["A91", "A92", "A93", "A94", "A95"]),
    },
    AttributeSpec {
        name: "other_debtors",
        kind: AttrKind::Categorical(&["A101", "A102", "A103"]),
    },
    AttributeSpec { name: "residence_since", kind: AttrKind::Numeric },
    AttributeSpec {
        name: "property",
        kind: AttrKind::Categorical(&["A121", "A122", "A123", "A124"]),
    },
    AttributeSpec { name: "age", kind: AttrKind::Numeric },
    AttributeSpec {
        name: "other_installment_plans",
        kind: AttrKind::Categorical(&["A141", "A142", "A143"]),
    },
    AttributeSpec {
        name: "housing",
        kind: AttrKind::Categorical(&["A151", "A152", "A153"]),
    },
    AttributeSpec { name: "existing_credits", kind: AttrKind::Numeric },
    AttributeSpec {
        name: "job",
        kind: AttrKind::Categorical(&["A171", "A172", "A173", "A174"]),
    },
    AttributeSpec { name: "people_liable", kind: AttrKind::Numeric },
    AttributeSpec {
        name: "telephone",
        kind: AttrKind::Binary { codes: ["A191", "A192"], positive: "A192" },
    },
    AttributeSpec {
        name: "foreign_worker",
        kind: AttrKind::Binary { codes: ["A201", "A202"], positive: "A201" },
    },
];

/// Reference 20-feature subset for the benchmark configurations (the most
/// important features of the full encoding under backward elimination with
/// log-loss scoring on the canonical split).
pub const REDUCED_20_REFERENCE: [&str; 20] = [
    "checking_status_A11",
    "savings_A65",
    "employment_since_A71",
    "employment_since_A72",
    "employment_since_A74",
    "personal_status_sex_A93",
    "other_debtors_A102",
    "other_debtors_A103",
    "property_A124",
    "other_installment_plans_A141",
    "other_installment_plans_A143",
    "housing_A151",
    "housing_A153",
    "housing_A152",
    "employment_since_A75",
    "personal_status_sex_A94",
    "credit_history_A32",
    "residence_since",
    "job_A174",
    "other_installment_plans_A142",
];

/// One attribute value of a raw row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RawValue {
    /// Index into the attribute's catalog code list.
    Code(usize),
    Num(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub values: Vec<RawValue>,
    /// 1 = good credit, 0 = bad (remapped from the source's 1/2).
    pub label: u8,
}

/// Parsed, catalog-validated rows in the source attribute order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub rows: Vec<RawRow>,
}

impl RawDataset {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }
}

/// Parses the space-separated credit format: 20 attribute tokens + label.
pub fn parse_german(reader: impl Read) -> Result<RawDataset, DataError> {
    let reader = BufReader::new(reader);
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != ATTRIBUTES.len() + 1 {
            return Err(DataError::WrongTokenCount {
                line: lineno,
                expected: ATTRIBUTES.len() + 1,
                got: tokens.len(),
            });
        }
        let mut values = Vec::with_capacity(ATTRIBUTES.len());
        for (attr, token) in ATTRIBUTES.iter().zip(&tokens) {
            let value = match attr.kind {
                AttrKind::Numeric => RawValue::Num(token.parse::<f64>().map_err(|_| {
                    DataError::BadNumber {
                        line: lineno,
                        attribute: attr.name,
                        token: (*token).to_string(),
                    }
                })?),
                AttrKind::Categorical(codes) => RawValue::Code(
                    codes.iter().position(|c| c == token).ok_or_else(|| {
                        DataError::UnknownCode {
                            line: lineno,
                            attribute: attr.name,
                            code: (*token).to_string(),
                        }
                    })?,
                ),
                AttrKind::Binary { codes, .. } => RawValue::Code(
                    codes.iter().position(|c| c == token).ok_or_else(|| {
                        DataError::UnknownCode {
                            line: lineno,
                            attribute: attr.name,
                            code: (*token).to_string(),
                        }
                    })?,
                ),
            };
            values.push(value);
        }
        let label = match *tokens.last().expect("token count checked") {
            "1" => 1, // good
            "2" => 0, // bad
            other => return Err(DataError::BadLabel { line: lineno, got: other.to_string() }),
        };
        rows.push(RawRow { values, label });
    }
    Ok(RawDataset { rows })
}

pub fn load_german(path: impl AsRef<Path>) -> Result<RawDataset, DataError> {
    parse_german(std::fs::File::open(path)?)
}

/// An encoded feature matrix with labels and stable column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl Dataset {
    pub fn from_parts(
        names: Vec<String>,
        x: DMatrix<f64>,
        y: DVector<f64>,
    ) -> Result<Self, DataError> {
        if names.len() != x.ncols() {
            return Err(DataError::Shape(format!(
                "{} names for {} columns",
                names.len(),
                x.ncols()
            )));
        }
        if x.nrows() != y.len() {
            return Err(DataError::Shape(format!(
                "{} rows but {} labels",
                x.nrows(),
                y.len()
            )));
        }
        for (i, a) in names.iter().enumerate() {
            if names[..i].contains(a) {
                return Err(DataError::DuplicateName(a.clone()));
            }
        }
        for i in 0..x.nrows() {
            for j in 0..x.ncols() {
                if !x[(i, j)].is_finite() {
                    return Err(DataError::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self { names, x, y })
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn labels(&self) -> &DVector<f64> {
        &self.y
    }

    /// Columns where the subset bit is 1, order preserved; labels retained
    /// even for the empty subset.
    pub fn select_columns(&self, subset: Bits) -> Result<Dataset, DataError> {
        if subset.len() != self.n_features() {
            return Err(DataError::SubsetLength { expected: self.n_features(), got: subset.len() });
        }
        let keep: Vec<usize> = subset.ones_iter().collect();
        let mut x = DMatrix::<f64>::zeros(self.n_rows(), keep.len());
        let mut names = Vec::with_capacity(keep.len());
        for (new_j, &j) in keep.iter().enumerate() {
            x.set_column(new_j, &self.x.column(j));
            names.push(self.names[j].clone());
        }
        Ok(Dataset { names, x, y: self.y.clone() })
    }

    /// Row subset in the given index order.
    pub fn subset_rows(&self, indices: &[usize]) -> Dataset {
        let mut x = DMatrix::<f64>::zeros(indices.len(), self.n_features());
        let mut y = DVector::<f64>::zeros(indices.len());
        for (new_i, &i) in indices.iter().enumerate() {
            x.set_row(new_i, &self.x.row(i));
            y[new_i] = self.y[i];
        }
        Dataset { names: self.names.clone(), x, y }
    }

    /// Subset mask for the given column names (order-insensitive).
    pub fn subset_for_names(&self, wanted: &[&str]) -> Result<Bits, DataError> {
        let mut bits = Bits::zeros(self.n_features());
        for name in wanted {
            let j = self
                .names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| DataError::MissingFeature((*name).to_string()))?;
            bits = bits.with_bit(j, true);
        }
        Ok(bits)
    }

    /// Keeps only the first `k` columns (diagnostic views).
    pub fn first_k(&self, k: usize) -> Result<Dataset, DataError> {
        let mut bits = Bits::zeros(self.n_features());
        for j in 0..k.min(self.n_features()) {
            bits = bits.with_bit(j, true);
        }
        self.select_columns(bits)
    }

    /// Writes `name,...,label` rows. Lines starting with `#` are for
    /// metadata and are skipped by [`Dataset::read_csv`].
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{},label", self.names.join(","))?;
        for i in 0..self.n_rows() {
            let mut line = String::new();
            for j in 0..self.n_features() {
                line.push_str(&format!("{},", self.x[(i, j)]));
            }
            line.push_str(&format!("{}", self.y[i]));
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Generic numeric-CSV ingestion (secondary path; no 59-column
    /// assertion). Expects a header whose last column is `label`.
    pub fn read_csv(reader: impl Read) -> Result<Dataset, DataError> {
        let reader = BufReader::new(reader);
        let mut names: Option<Vec<String>> = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut labels: Vec<f64> = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            match &names {
                None => {
                    if fields.last() != Some(&"label") {
                        return Err(DataError::Csv {
                            line: lineno,
                            reason: "last header column must be `label`".into(),
                        });
                    }
                    names =
                        Some(fields[..fields.len() - 1].iter().map(|s| s.to_string()).collect());
                }
                Some(names) => {
                    if fields.len() != names.len() + 1 {
                        return Err(DataError::Csv {
                            line: lineno,
                            reason: format!(
                                "expected {} fields, got {}",
                                names.len() + 1,
                                fields.len()
                            ),
                        });
                    }
                    let mut row = Vec::with_capacity(names.len());
                    for f in &fields[..fields.len() - 1] {
                        row.push(f.parse::<f64>().map_err(|e| DataError::Csv {
                            line: lineno,
                            reason: format!("{e}"),
                        })?);
                    }
                    labels.push(fields[fields.len() - 1].parse::<f64>().map_err(|e| {
                        DataError::Csv { line: lineno, reason: format!("{e}") }
                    })?);
                    rows.push(row);
                }
            }
        }
        let names = names.ok_or(DataError::Csv { line: 0, reason: "empty file".into() })?;
        let ncols = names.len();
        let x = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
        Dataset::from_parts(names, x, DVector::from_vec(labels))
    }
}

/// One-hot encodes a validated raw dataset. The column count is asserted
/// against the schema's expected 59; a mismatch signals encoding drift
/// (e.g. a category missing from the input entirely).
pub fn one_hot_encode(raw: &RawDataset) -> Result<Dataset, DataError> {
    // which categories actually occur, per attribute
    let mut present: Vec<Vec<bool>> = ATTRIBUTES
        .iter()
        .map(|attr| match attr.kind {
            AttrKind::Categorical(codes) => vec![false; codes.len()],
            _ => Vec::new(),
        })
        .collect();
    for row in &raw.rows {
        for (a, value) in row.values.iter().enumerate() {
            if let (AttrKind::Categorical(_), RawValue::Code(c)) = (ATTRIBUTES[a].kind, value) {
                present[a][*c] = true;
            }
        }
    }

    let mut names: Vec<String> = Vec::new();
    // (attribute, Some(code index) for indicators / None for numeric+binary)
    let mut layout: Vec<(usize, Option<usize>)> = Vec::new();
    for (a, attr) in ATTRIBUTES.iter().enumerate() {
        match attr.kind {
            AttrKind::Numeric => {
                names.push(attr.name.to_string());
                layout.push((a, None));
            }
            AttrKind::Categorical(codes) => {
                for (c, code) in codes.iter().enumerate() {
                    if present[a][c] {
                        names.push(format!("{}_{}", attr.name, code));
                        layout.push((a, Some(c)));
                    }
                }
            }
            AttrKind::Binary { positive, .. } => {
                names.push(format!("{}_{}", attr.name, positive));
                layout.push((a, None));
            }
        }
    }
    if names.len() != FULL_ENCODED_COLUMNS {
        return Err(DataError::EncodingDrift {
            expected: FULL_ENCODED_COLUMNS,
            got: names.len(),
        });
    }

    let mut x = DMatrix::<f64>::zeros(raw.rows.len(), names.len());
    let mut y = DVector::<f64>::zeros(raw.rows.len());
    for (i, row) in raw.rows.iter().enumerate() {
        y[i] = f64::from(row.label);
        for (j, &(a, code)) in layout.iter().enumerate() {
            let value = &row.values[a];
            x[(i, j)] = match (ATTRIBUTES[a].kind, value, code) {
                (AttrKind::Numeric, RawValue::Num(v), None) => *v,
                (AttrKind::Categorical(_), RawValue::Code(c), Some(expect)) => {
                    f64::from(*c == expect)
                }
                (AttrKind::Binary { codes, positive }, RawValue::Code(c), None) => {
                    f64::from(codes[*c] == positive)
                }
                _ => unreachable!("raw rows are catalog-validated"),
            };
        }
    }
    Dataset::from_parts(names, x, y)
}

/// Product-moment correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, DataError> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(DataError::BadVectors { n1: x.len(), n2: y.len() });
    }
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Err(DataError::ZeroVariance);
    }
    Ok(cov / (var_x.sqrt() * var_y.sqrt()))
}

/// Correlation guard threshold: relative differences are only meaningful
/// for features whose coefficient is not negligible.
pub const PEARSON_GUARD: f64 = 0.05;
/// Maximum admissible train/test relative difference for guarded features.
pub const PEARSON_MAX_REL_DIFF: f64 = 0.10;
/// Sampling-noise slack: between-half correlation differences within this
/// many standard errors are indistinguishable from noise, so they also
/// pass. Without this floor no 59-feature split of ~1000 rows is ever
/// acceptable (the between-half noise of r is ≈ sqrt(2/n_half) ≈ 0.06,
/// which dwarfs 10% of a small coefficient).
pub const PEARSON_NOISE_SIGMAS: f64 = 2.5;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureCorrelation {
    pub name: String,
    /// `None` when the feature has zero variance in that half.
    pub r_train: Option<f64>,
    pub r_test: Option<f64>,
    pub rel_diff: Option<f64>,
    pub abs_diff: Option<f64>,
    /// Whether the stability criterion applies (max |r| ≥ the 0.05 guard).
    pub guarded: bool,
    /// Criterion outcome: within 10% relative, or within the noise floor.
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PearsonReport {
    pub features: Vec<FeatureCorrelation>,
    /// Absolute-difference slack granted by sampling noise.
    pub noise_floor: f64,
}

impl PearsonReport {
    /// Every guarded feature within the stability criterion?
    pub fn acceptable(&self) -> bool {
        self.features.iter().all(|f| f.pass)
    }

    /// Guarded feature with the largest relative difference.
    pub fn worst(&self) -> Option<(&str, f64)> {
        self.features
            .iter()
            .filter(|f| f.guarded)
            .filter_map(|f| f.rel_diff.map(|d| (f.name.as_str(), d)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Per-feature label correlations on both halves.
pub fn pearson_report(train: &Dataset, test: &Dataset) -> PearsonReport {
    let noise_floor = PEARSON_NOISE_SIGMAS
        * (1.0 / train.n_rows() as f64 + 1.0 / test.n_rows() as f64).sqrt();
    let features = (0..train.n_features())
        .map(|j| {
            let col_train: Vec<f64> = train.features().column(j).iter().copied().collect();
            let col_test: Vec<f64> = test.features().column(j).iter().copied().collect();
            let r_train = pearson(&col_train, train.labels().as_slice()).ok();
            let r_test = pearson(&col_test, test.labels().as_slice()).ok();
            let (rel_diff, abs_diff, guarded) = match (r_train, r_test) {
                (Some(a), Some(b)) => {
                    let scale = a.abs().max(b.abs());
                    let guarded = scale >= PEARSON_GUARD;
                    (
                        Some((a - b).abs() / scale.max(f64::MIN_POSITIVE)),
                        Some((a - b).abs()),
                        guarded,
                    )
                }
                _ => (None, None, false),
            };
            let pass = !guarded
                || rel_diff.is_some_and(|d| d <= PEARSON_MAX_REL_DIFF)
                || abs_diff.is_some_and(|d| d <= noise_floor);
            FeatureCorrelation {
                name: train.names()[j].clone(),
                r_train,
                r_test,
                rel_diff,
                abs_diff,
                guarded,
                pass,
            }
        })
        .collect();
    PearsonReport { features, noise_floor }
}

/// A validated train/test split with its correlation report.
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub report: PearsonReport,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
    /// Shuffle attempt that satisfied the criterion (0-based).
    pub attempt: usize,
}

/// Seeded shuffle split; reshuffles until every guarded feature's train/test
/// correlation agrees within 10% relative (or within the sampling-noise
/// floor), or `max_retries` attempts are exhausted.
pub fn split(
    dataset: &Dataset,
    ratio: f64,
    seed: u64,
    max_retries: usize,
) -> Result<SplitPair, DataError> {
    assert!(ratio > 0.0 && ratio < 1.0, "ratio must lie in (0,1)");
    use rand::seq::SliceRandom;
    let n = dataset.n_rows();
    let train_n = (ratio * n as f64).floor() as usize;
    let mut worst: Option<(String, f64)> = None;
    for attempt in 0..max_retries.max(1) {
        let mut rng = crate::seed::rng_from(seed, &[crate::seed::domain::SPLIT, attempt as u64]);
        let mut indices: Vec<usize> = (0..n).collect();
        indices.shuffle(&mut rng);
        let train_indices = indices[..train_n].to_vec();
        let test_indices = indices[train_n..].to_vec();
        let train = dataset.subset_rows(&train_indices);
        let test = dataset.subset_rows(&test_indices);
        let report = pearson_report(&train, &test);
        if report.acceptable() {
            return Ok(SplitPair { train, test, report, train_indices, test_indices, seed, attempt });
        }
        if let Some((name, diff)) = report.worst() {
            if worst.as_ref().is_none_or(|(_, w)| diff < *w) {
                worst = Some((name.to_string(), diff));
            }
        }
    }
    let (feature, rel_diff) = worst.unwrap_or(("<none>".into(), f64::NAN));
    Err(DataError::SplitRetriesExhausted { attempts: max_retries.max(1), feature, rel_diff })
}

impl fmt::Display for PearsonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "feature,r_train,r_test,rel_diff,abs_diff,guarded,pass")?;
        for c in &self.features {
            let fmt_opt = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x:.6}"));
            writeln!(
                f,
                "{},{},{},{},{},{},{}",
                c.name,
                fmt_opt(c.r_train),
                fmt_opt(c.r_test),
                fmt_opt(c.rel_diff),
                fmt_opt(c.abs_diff),
                c.guarded,
                c.pass
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample_file(rows: usize) -> String {
        let raw = synth::synthetic_raw(rows, 11);
        let mut buffer = Vec::new();
        synth::write_german_format(&raw, &mut buffer).unwrap();
        String::from_utf8(buffer).unwrap()
    }

    #[test]
    fn parses_and_validates_the_format() {
        let text = sample_file(50);
        let raw = parse_german(text.as_bytes()).unwrap();
        assert_eq!(raw.n_rows(), 50);
    }

    #[test]
    fn truncated_row_names_the_line() {
        let mut text = sample_file(16);
        text.push_str("A11 6 A34\n");
        match parse_german(text.as_bytes()) {
            Err(DataError::WrongTokenCount { line: 17, expected: 21, got: 3 }) => {}
            other => panic!("expected token-count error on line 17, got {other:?}"),
        }
    }

    #[test]
    fn unknown_code_is_rejected() {
        // corrupt the first token (checking_status) of the first line
        let text = sample_file(16);
        let rest = text.split_once(' ').unwrap().1;
        let bad = format!("A99 {rest}");
        match parse_german(bad.as_bytes()) {
            Err(DataError::UnknownCode { line: 1, attribute: "checking_status", code }) => {
                assert_eq!(code, "A99");
            }
            other => panic!("expected unknown-code error, got {other:?}"),
        }
    }

    #[test]
    fn encoding_yields_59_columns_with_proper_indicators() {
        let raw = synth::synthetic_raw(400, 5);
        let data = one_hot_encode(&raw).unwrap();
        assert_eq!(data.n_features(), FULL_ENCODED_COLUMNS);
        // multi-category indicator groups sum to 1 per row
        let checking: Vec<usize> = data
            .names()
            .iter()
            .enumerate()
            .filter(|(_, n)| n.starts_with("checking_status_"))
            .map(|(j, _)| j)
            .collect();
        assert_eq!(checking.len(), 4);
        for i in 0..data.n_rows() {
            let sum: f64 = checking.iter().map(|&j| data.features()[(i, j)]).sum();
            assert_abs_diff_eq!(sum, 1.0);
        }
        // binary attributes collapse to exactly one column
        assert_eq!(
            data.names().iter().filter(|n| n.starts_with("telephone")).count(),
            1
        );
        assert_eq!(
            data.names().iter().filter(|n| n.starts_with("foreign_worker")).count(),
            1
        );
    }

    #[test]
    fn encoded_design_matrix_is_rank_deficient() {
        let raw = synth::synthetic_raw(300, 6);
        let data = one_hot_encode(&raw).unwrap();
        let rank = data.features().clone().rank(1e-9);
        assert!(
            rank < FULL_ENCODED_COLUMNS,
            "one-hot groups are linearly dependent, rank was {rank}"
        );
    }

    #[test]
    fn encoding_is_order_stable() {
        let raw = synth::synthetic_raw(120, 9);
        let a = one_hot_encode(&raw).unwrap();
        let b = one_hot_encode(&raw).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.names(), b.names());
    }

    #[test]
    fn pearson_basics() {
        let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let double: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let negate: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_abs_diff_eq!(pearson(&x, &double).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pearson(&x, &negate).unwrap(), -1.0, epsilon = 1e-12);
        assert!(matches!(pearson(&x, &vec![1.0; 50]), Err(DataError::ZeroVariance)));
    }

    #[test]
    fn independent_noise_has_small_correlation() {
        use rand::Rng;
        let mut rng = crate::seed::rng_from(3, &[99]);
        let x: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        assert!(pearson(&x, &y).unwrap().abs() < 0.05);
    }

    #[test]
    fn split_is_deterministic_and_respects_criterion() {
        let raw = synth::synthetic_raw(600, 21);
        let data = one_hot_encode(&raw).unwrap();
        let a = split(&data, 0.5, 7, 200).unwrap();
        let b = split(&data, 0.5, 7, 200).unwrap();
        assert_eq!(a.train_indices, b.train_indices);
        assert_eq!(a.train.n_rows(), 300);
        assert_eq!(a.test.n_rows(), 300);
        assert!(a.report.acceptable());
        // row-disjoint
        let mut all: Vec<usize> =
            a.train_indices.iter().chain(&a.test_indices).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..600).collect::<Vec<_>>());
    }

    #[test]
    fn duplicated_halves_give_zero_differences() {
        let raw = synth::synthetic_raw(100, 2);
        let data = one_hot_encode(&raw).unwrap();
        let report = pearson_report(&data, &data);
        for f in &report.features {
            if let Some(d) = f.rel_diff {
                assert_abs_diff_eq!(d, 0.0);
            }
        }
        assert!(report.acceptable());
    }

    #[test]
    fn select_columns_maps_bit_l_to_feature_l() {
        let raw = synth::synthetic_raw(40, 4);
        let data = one_hot_encode(&raw).unwrap();
        let all = data.select_columns(Bits::ones(59)).unwrap();
        assert_eq!(all.names(), data.names());

        let none = data.select_columns(Bits::zeros(59)).unwrap();
        assert_eq!(none.n_features(), 0);
        assert_eq!(none.labels(), data.labels());

        for l in [0usize, 7, 58] {
            let only = data.select_columns(Bits::zeros(59).with_bit(l, true)).unwrap();
            assert_eq!(only.names(), &[data.names()[l].clone()]);
        }

        assert!(matches!(
            data.select_columns(Bits::zeros(3)),
            Err(DataError::SubsetLength { expected: 59, got: 3 })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let raw = synth::synthetic_raw(25, 8);
        let data = one_hot_encode(&raw).unwrap();
        let mut buffer = Vec::new();
        data.write_csv(&mut buffer).unwrap();
        let back = Dataset::read_csv(buffer.as_slice()).unwrap();
        assert_eq!(back.names(), data.names());
        assert_eq!(back.n_rows(), data.n_rows());
        for i in 0..data.n_rows() {
            assert_eq!(back.labels()[i], data.labels()[i]);
            for j in 0..data.n_features() {
                assert_eq!(back.features()[(i, j)], data.features()[(i, j)]);
            }
        }
    }

    #[test]
    fn reference_reduced_list_matches_encoded_names() {
        let raw = synth::synthetic_raw(200, 12);
        let data = one_hot_encode(&raw).unwrap();
        let bits = data
            .subset_for_names(&REDUCED_20_REFERENCE.to_vec())
            .unwrap();
        assert_eq!(bits.count_ones(), 20);
        let reduced = data.select_columns(bits).unwrap();
        assert_eq!(reduced.n_features(), 20);
    }
}
