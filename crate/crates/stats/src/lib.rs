//! Statistics for comparing self-administered and chatbot-administered
//! PHQ-9 scores: agreement, paired and group tests, 2×2 contingency tests
//! and the report built from a paired-score CSV.
//!
//! Degenerate inputs (zero variance, all-zero differences, separation) give
//! [`Outcome::NotApplicable`] rather than an error or a NaN.

mod anova;
mod contingency;
mod correlation;
mod descriptive;
mod dichotomise;
mod dist;
mod icc;
mod logistic;
mod multiple;
pub mod rank;
mod record;
mod report;
mod ttest;
mod wilcoxon;

pub use anova::{oneway_anova, Anova};
pub use contingency::{chi2_yates, contingency_test, fisher_exact, ChiSquare, ContingencyMethod, ContingencyResult, FisherResult, Table2x2};
pub use correlation::{spearman_rho, Spearman};
pub use descriptive::{category_shift, descriptives, mean, median, quantile_type7, sample_sd, AbsDiff, Descriptives, SignedDiff};
pub use dichotomise::{dichotomise, DichotomyRule};
pub use icc::{icc31, Icc};
pub use logistic::{log_likelihood, logistic_trend, LogisticTrend};
pub use multiple::holm_bonferroni;
pub use record::{read_pairs, read_pairs_from_reader, Demographics, Endpoints, PairedRecord, Rating};
pub use report::{
    concordance_report, contingency_report, groups_report, ConcordanceReport, ContingencyReport, Endpoint, Factor,
    FactorResult, GroupSummary, GroupTest, GroupsReport, Grouping,
};
pub use ttest::{paired_t, two_group_t, TTest};
pub use wilcoxon::{wilcoxon_signed_rank, Wilcoxon, WilcoxonMethod, EXACT_WILCOXON_MAX_N};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ALPHA: f64 = 0.05;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("{path}: row {row}: {message}")]
    Csv { path: String, row: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A test result, or the reason the test does not apply to this data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome<T> {
    Computed(T),
    NotApplicable { reason: String },
}

impl<T> Outcome<T> {
    pub fn na(reason: impl Into<String>) -> Self {
        Outcome::NotApplicable { reason: reason.into() }
    }

    pub fn computed(&self) -> Option<&T> {
        match self {
            Outcome::Computed(t) => Some(t),
            Outcome::NotApplicable { .. } => None,
        }
    }

    pub fn is_applicable(&self) -> bool {
        matches!(self, Outcome::Computed(_))
    }

    #[track_caller]
    pub fn unwrap(self) -> T {
        match self {
            Outcome::Computed(t) => t,
            Outcome::NotApplicable { reason } => panic!("not applicable: {reason}"),
        }
    }
}

/// JSON has no infinity; non-finite values are written as strings.
pub(crate) mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            v.serialize(s)
        } else {
            s.serialize_str(if v.is_nan() { "nan" } else if *v > 0.0 { "inf" } else { "-inf" })
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}
