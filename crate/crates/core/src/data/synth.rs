//! Schema-valid synthetic credit data.
//!
//! Stand-in for environments where the original file is unavailable: same
//! 20-attribute format, catalog codes restricted to the categories that
//! occur in the official data (so the encoding still yields 59 columns),
//! labels drawn from a logistic model over a handful of attributes so that
//! feature selection has real structure to find. Deterministic per seed.

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::seed::{domain, rng_from};

use super::{AttrKind, RawDataset, RawRow, RawValue, ATTRIBUTES};

/// Codes that never occur in the official file; excluded so the one-hot
/// assertion holds.
const ABSENT_CODES: [&str; 2] = ["A47", "A95"];

fn weighted_choice(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.random::<f64>().max(1e-12);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Per-code admission weights; zero for the catalog codes absent from the
/// official data.
fn code_weights(attr: usize) -> Vec<f64> {
    let codes = match ATTRIBUTES[attr].kind {
        AttrKind::Categorical(codes) => codes,
        AttrKind::Binary { .. } => return vec![0.4, 0.6],
        AttrKind::Numeric => return Vec::new(),
    };
    codes
        .iter()
        .enumerate()
        .map(|(i, code)| {
            if ABSENT_CODES.contains(code) {
                0.0
            } else {
                // mildly skewed marginals: earlier codes a bit more common
                1.0 / (1.0 + 0.35 * i as f64)
            }
        })
        .collect()
}

fn numeric_value(attr: usize, rng: &mut ChaCha8Rng) -> f64 {
    match ATTRIBUTES[attr].name {
        "duration" => (4.0 + 60.0 * rng.random::<f64>().powf(1.7)).round(),
        "credit_amount" => (8.0 + 0.55 * standard_normal(rng)).exp().clamp(250.0, 18424.0).round(),
        "installment_rate" => f64::from(rng.random_range(1u8..=4)),
        "residence_since" => f64::from(rng.random_range(1u8..=4)),
        "age" => (19.0 + 55.0 * rng.random::<f64>().powf(1.6)).round().min(75.0),
        "existing_credits" => f64::from(weighted_choice(rng, &[5.0, 3.0, 1.0, 0.4]) as u8 + 1),
        "people_liable" => f64::from(weighted_choice(rng, &[5.0, 1.0]) as u8 + 1),
        other => unreachable!("unknown numeric attribute {other}"),
    }
}

/// Log-odds contribution of one attribute value toward a *good* label.
fn signal(attr: usize, value: &RawValue) -> f64 {
    let name = ATTRIBUTES[attr].name;
    match (name, value) {
        ("checking_status", RawValue::Code(c)) => [-1.1, -0.35, 0.45, 0.95][*c],
        ("credit_history", RawValue::Code(c)) => [-0.9, -0.5, 0.1, -0.1, 0.6][*c],
        ("savings", RawValue::Code(c)) => [-0.4, -0.1, 0.15, 0.4, 0.45][*c],
        ("employment_since", RawValue::Code(c)) => [-0.55, -0.3, 0.0, 0.3, 0.4][*c],
        ("personal_status_sex", RawValue::Code(c)) => [-0.2, -0.1, 0.25, 0.05, 0.0][*c],
        ("other_debtors", RawValue::Code(c)) => [0.0, -0.35, 0.45][*c],
        ("property", RawValue::Code(c)) => [0.3, 0.1, 0.0, -0.45][*c],
        ("other_installment_plans", RawValue::Code(c)) => [-0.4, -0.25, 0.25][*c],
        ("housing", RawValue::Code(c)) => [-0.25, 0.25, -0.1][*c],
        ("duration", RawValue::Num(v)) => -0.028 * (v - 21.0),
        ("credit_amount", RawValue::Num(v)) => -0.00011 * (v - 3300.0),
        ("age", RawValue::Num(v)) => 0.013 * (v - 35.0),
        _ => 0.0,
    }
}

/// Generates `rows` schema-valid rows. Every expected category is patched to
/// occur at least once so the 59-column encoding invariant holds even for
/// small row counts.
pub fn synthetic_raw(rows: usize, seed: u64) -> RawDataset {
    // the largest category set (purpose) has 10 present codes; presence
    // patching needs at least that many distinct rows per attribute
    assert!(rows >= 16, "need at least 16 rows to cover every category");
    let mut rng = rng_from(seed, &[domain::SYNTH]);
    let mut out = Vec::with_capacity(rows);
    for _ in 0..rows {
        let mut values = Vec::with_capacity(ATTRIBUTES.len());
        for (a, attr) in ATTRIBUTES.iter().enumerate() {
            let value = match attr.kind {
                AttrKind::Numeric => RawValue::Num(numeric_value(a, &mut rng)),
                _ => RawValue::Code(weighted_choice(&mut rng, &code_weights(a))),
            };
            values.push(value);
        }
        let z: f64 = 2.0 + values.iter().enumerate().map(|(a, v)| signal(a, v)).sum::<f64>();
        let p_good = 1.0 / (1.0 + (-z).exp());
        let label = u8::from(rng.random::<f64>() < p_good);
        out.push(RawRow { values, label });
    }

    // force-present every expected category, round-robin over early rows
    let mut patch_row = 0usize;
    for (a, attr) in ATTRIBUTES.iter().enumerate() {
        let codes: &[&str] = match attr.kind {
            AttrKind::Categorical(codes) => codes,
            AttrKind::Binary { .. } => {
                for c in 0..2 {
                    if !out.iter().any(|r| r.values[a] == RawValue::Code(c)) {
                        out[patch_row % rows].values[a] = RawValue::Code(c);
                        patch_row += 1;
                    }
                }
                continue;
            }
            AttrKind::Numeric => continue,
        };
        for (c, code) in codes.iter().enumerate() {
            if ABSENT_CODES.contains(code) {
                continue;
            }
            if !out.iter().any(|r| r.values[a] == RawValue::Code(c)) {
                out[patch_row % rows].values[a] = RawValue::Code(c);
                patch_row += 1;
            }
        }
    }

    RawDataset { rows: out }
}

/// Writes rows in the source format: 20 space-separated tokens plus the
/// 1 (good) / 2 (bad) label.
pub fn write_german_format(raw: &RawDataset, mut w: impl Write) -> std::io::Result<()> {
    for row in &raw.rows {
        let mut line = String::new();
        for (a, value) in row.values.iter().enumerate() {
            match (ATTRIBUTES[a].kind, value) {
                (AttrKind::Categorical(codes), RawValue::Code(c)) => {
                    line.push_str(codes[*c]);
                }
                (AttrKind::Binary { codes, .. }, RawValue::Code(c)) => {
                    line.push_str(codes[*c]);
                }
                (AttrKind::Numeric, RawValue::Num(v)) => {
                    line.push_str(&format!("{v}"));
                }
                _ => unreachable!("raw rows are schema-consistent"),
            }
            line.push(' ');
        }
        line.push_str(if row.label == 1 { "1" } else { "2" });
        writeln!(w, "{line}")?;
    }
    Ok(())
}
