//! The committed 132-pair fixture and a leaf-by-leaf comparison of a
//! concordance report against the values its generator script computed.
//!
//! Counts, medians, quantiles, means and rank sums are single roundings of
//! integer ratios and must be bit-identical. Fields that pass through a
//! square root, a long floating reduction or a special function are
//! compared at `FLOAT_REL_TOL`, since two independent libraries do not
//! agree to the last ulp there.

#![allow(dead_code)]

use std::path::PathBuf;

use serde_json::Value;

pub fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../stats/tests/fixtures/fixture132")
}

pub fn csv_path() -> PathBuf {
    dir().join("pairs.csv")
}

pub fn expected() -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir().join("expected.json")).unwrap()).unwrap()
}

pub const FLOAT_REL_TOL: f64 = 1e-12;

pub const FLOAT_FIELDS: [&str; 12] = [
    ".abs_diff.sd",
    ".wilcoxon.p",
    ".wilcoxon.z",
    ".paired_t.t",
    ".paired_t.p",
    ".spearman.rho",
    ".spearman.p",
    ".icc31.value",
    ".icc31.ci95_low",
    ".icc31.ci95_high",
    ".icc31.ms_rows",
    ".icc31.ms_error",
];

#[derive(Debug, Default)]
pub struct Comparison {
    pub exact_fields: usize,
    pub float_fields: usize,
    pub max_rel_err: f64,
    pub mismatches: Vec<String>,
}

fn walk(path: &str, want: &Value, got: &Value, c: &mut Comparison) {
    match want {
        Value::Object(map) => {
            for (k, w) in map {
                walk(&format!("{path}.{k}"), w, got.get(k).unwrap_or(&Value::Null), c);
            }
        }
        Value::Number(w) if FLOAT_FIELDS.contains(&path) => {
            c.float_fields += 1;
            let (w, g) = (w.as_f64().unwrap(), got.as_f64().unwrap_or(f64::NAN));
            let rel = (g - w).abs() / w.abs().max(f64::MIN_POSITIVE);
            c.max_rel_err = c.max_rel_err.max(rel);
            if rel.is_nan() || rel > FLOAT_REL_TOL {
                c.mismatches.push(format!("{path}: expected {w}, got {g} (rel {rel:.1e})"));
            }
        }
        Value::Number(w) => {
            c.exact_fields += 1;
            let same = matches!((w.as_f64(), got.as_f64()), (Some(a), Some(b)) if a.to_bits() == b.to_bits());
            if !same {
                c.mismatches.push(format!("{path}: expected {w}, got {got}"));
            }
        }
        other => {
            c.exact_fields += 1;
            if other != got {
                c.mismatches.push(format!("{path}: expected {other}, got {got}"));
            }
        }
    }
}

/// Compares every expected leaf against `report`.
pub fn compare(report: &Value) -> Comparison {
    let mut c = Comparison::default();
    walk("", &expected(), report, &mut c);
    c
}
