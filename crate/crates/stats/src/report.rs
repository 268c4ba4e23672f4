use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use screener_core::exec::Execution;
use screener_core::protocol::classify_severity;
use serde::{Deserialize, Serialize};

use crate::anova::{oneway_anova, Anova};
use crate::contingency::{contingency_test, ContingencyResult, Table2x2};
use crate::correlation::{spearman_rho, Spearman};
use crate::descriptive::{category_shift, descriptives, mean, sample_sd, AbsDiff, SignedDiff};
use crate::dichotomise::{dichotomise, DichotomyRule};
use crate::icc::{icc31, Icc};
use crate::logistic::{logistic_trend, LogisticTrend};
use crate::multiple::holm_bonferroni;
use crate::record::{PairedRecord, Rating};
use crate::ttest::{paired_t, two_group_t, TTest};
use crate::wilcoxon::{wilcoxon_signed_rank, Wilcoxon};
use crate::{Outcome, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcordanceReport {
    pub n: usize,
    pub identical_count: usize,
    pub abs_diff: AbsDiff,
    pub signed_diff: SignedDiff,
    pub wilcoxon: Outcome<Wilcoxon>,
    pub paired_t: Outcome<TTest>,
    pub spearman: Outcome<Spearman>,
    pub icc31: Outcome<Icc>,
    pub category_shift_count: usize,
}

/// Agreement between self-administered and chatbot totals.
pub fn concordance_report(records: &[PairedRecord], exec: Execution) -> Result<ConcordanceReport, StatsError> {
    let pairs: Vec<(f64, f64)> = records.iter().map(PairedRecord::pair).collect();
    let desc = descriptives(&pairs)?;
    let diffs: Vec<f64> = pairs.iter().map(|(s, b)| b - s).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    let shifts = category_shift(&records.iter().map(|r| (r.self_score, r.bot_score)).collect::<Vec<_>>())?;

    let ((wilcoxon, paired), (spearman, icc)) = exec.join(
        || exec.join(|| wilcoxon_signed_rank(&diffs), || paired_t(&diffs)),
        || exec.join(|| spearman_rho(&xs, &ys), || icc31(&pairs)),
    );
    Ok(ConcordanceReport {
        n: desc.n,
        identical_count: desc.identical_count,
        abs_diff: desc.abs_diff,
        signed_diff: desc.signed_diff,
        wilcoxon,
        paired_t: paired,
        spearman: spearman?,
        icc31: icc,
        category_shift_count: shifts,
    })
}

/// Demographic used to split participants for a rating comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    Country,
    AgeGroup,
    Gender,
    Ethnicity,
    Education,
    Employment,
    MhExperience,
    ChatbotExperience,
}

impl Grouping {
    const NAMES: [(&'static str, Grouping); 8] = [
        ("country", Grouping::Country),
        ("age_group", Grouping::AgeGroup),
        ("gender", Grouping::Gender),
        ("ethnicity", Grouping::Ethnicity),
        ("education", Grouping::Education),
        ("employment", Grouping::Employment),
        ("mh_experience", Grouping::MhExperience),
        ("chatbot_experience", Grouping::ChatbotExperience),
    ];

    fn label(self, r: &PairedRecord) -> Option<String> {
        let d = &r.demographics;
        let yes_no = |b: Option<bool>| b.map(|b| if b { "yes" } else { "no" }.to_string());
        match self {
            Grouping::Country => d.country.clone(),
            Grouping::AgeGroup => d.age_group.clone(),
            Grouping::Gender => d.gender.clone(),
            Grouping::Ethnicity => d.ethnicity.clone(),
            Grouping::Education => d.education.clone(),
            Grouping::Employment => d.employment.clone(),
            Grouping::MhExperience => yes_no(d.mh_experience),
            Grouping::ChatbotExperience => yes_no(d.chatbot_experience),
        }
    }
}

impl FromStr for Grouping {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, StatsError> {
        Grouping::NAMES
            .iter()
            .find(|(n, _)| *n == s)
            .map(|(_, g)| *g)
            .ok_or_else(|| StatsError::InvalidValue(format!("unknown grouping {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub label: String,
    pub n: usize,
    pub mean: f64,
    pub sd: Option<f64>,
}

/// Student's t for two groups, one-way ANOVA for three or more.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", content = "result", rename_all = "snake_case")]
pub enum GroupTest {
    StudentT(Outcome<TTest>),
    Anova(Outcome<Anova>),
    NotApplicable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupsReport {
    pub rating: Rating,
    pub grouping: Grouping,
    /// Sorted by label.
    pub groups: Vec<GroupSummary>,
    /// Records missing the rating or the grouping field.
    pub excluded: usize,
    pub test: GroupTest,
}

pub fn groups_report(records: &[PairedRecord], rating: Rating, grouping: Grouping) -> GroupsReport {
    let mut by: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut excluded = 0;
    for r in records {
        match (grouping.label(r), r.rating(rating)) {
            (Some(label), Some(v)) => by.entry(label).or_default().push(f64::from(v)),
            _ => excluded += 1,
        }
    }
    let groups = by
        .iter()
        .map(|(label, v)| GroupSummary { label: label.clone(), n: v.len(), mean: mean(v), sd: sample_sd(v) })
        .collect();
    let values: Vec<Vec<f64>> = by.into_values().collect();
    let test = match values.len() {
        0 | 1 => GroupTest::NotApplicable("fewer than two groups".into()),
        2 => GroupTest::StudentT(two_group_t(&values[0], &values[1])),
        _ => GroupTest::Anova(oneway_anova(&values)),
    };
    GroupsReport { rating, grouping, groups, excluded, test }
}

/// Binary survey outcome tested against each factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    TrustBot,
    PreferBot,
    Recommend,
}

impl Endpoint {
    fn value(self, r: &PairedRecord) -> Option<bool> {
        match self {
            Endpoint::TrustBot => r.endpoints.trust_bot,
            Endpoint::PreferBot => r.endpoints.prefer_bot,
            Endpoint::Recommend => r.endpoints.recommend,
        }
    }
}

impl FromStr for Endpoint {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, StatsError> {
        match s {
            "trust_bot" => Ok(Endpoint::TrustBot),
            "prefer_bot" => Ok(Endpoint::PreferBot),
            "recommend" => Ok(Endpoint::Recommend),
            _ => Err(StatsError::InvalidValue(format!("unknown endpoint {s:?}"))),
        }
    }
}

/// Two-level participant characteristic forming the rows of a 2×2 table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    /// UK vs elsewhere.
    Country,
    /// Female vs male; other answers are excluded.
    Gender,
    Age,
    Ethnicity,
    Education,
    MhExperience,
    ChatbotExperience,
}

impl Factor {
    pub const ALL: [Factor; 7] = [
        Factor::Country,
        Factor::Gender,
        Factor::Age,
        Factor::Ethnicity,
        Factor::Education,
        Factor::MhExperience,
        Factor::ChatbotExperience,
    ];

    pub fn labels(self) -> (&'static str, &'static str) {
        match self {
            Factor::Country => ("UK", "other"),
            Factor::Gender => ("female", "male"),
            Factor::Age => DichotomyRule::Age.labels(),
            Factor::Ethnicity => DichotomyRule::Ethnicity.labels(),
            Factor::Education => DichotomyRule::Education.labels(),
            Factor::MhExperience | Factor::ChatbotExperience => ("yes", "no"),
        }
    }

    fn level(self, r: &PairedRecord) -> Option<bool> {
        let d = &r.demographics;
        match self {
            Factor::Country => {
                let c = d.country.as_deref()?.trim().to_lowercase();
                Some(matches!(c.as_str(), "uk" | "gb" | "united kingdom"))
            }
            Factor::Gender => match d.gender.as_deref()?.trim().to_lowercase().as_str() {
                "female" | "f" | "woman" => Some(true),
                "male" | "m" | "man" => Some(false),
                _ => None,
            },
            Factor::Age => dichotomise(r, DichotomyRule::Age),
            Factor::Ethnicity => dichotomise(r, DichotomyRule::Ethnicity),
            Factor::Education => dichotomise(r, DichotomyRule::Education),
            Factor::MhExperience => d.mh_experience,
            Factor::ChatbotExperience => d.chatbot_experience,
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Factor::Country => "country",
            Factor::Gender => "gender",
            Factor::Age => "age",
            Factor::Ethnicity => "ethnicity",
            Factor::Education => "education",
            Factor::MhExperience => "mh_experience",
            Factor::ChatbotExperience => "chatbot_experience",
        };
        f.write_str(name)
    }
}

impl FromStr for Factor {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, StatsError> {
        let s = if s == "age_group" { "age" } else { s };
        Factor::ALL
            .into_iter()
            .find(|f| f.to_string() == s)
            .ok_or_else(|| StatsError::InvalidValue(format!("unknown factor {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorResult {
    pub factor: Factor,
    /// Row labels; columns are endpoint yes / no.
    pub levels: [String; 2],
    pub n: usize,
    pub excluded: usize,
    pub result: Outcome<ContingencyResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyReport {
    pub endpoint: Endpoint,
    pub factors: Vec<FactorResult>,
    /// Endpoint against self-reported severity band as an ordinal predictor.
    pub severity_trend: Outcome<LogisticTrend>,
}

fn factor_table(records: &[PairedRecord], factor: Factor, endpoint: Endpoint) -> FactorResult {
    let mut cells = [0u64; 4];
    let mut excluded = 0;
    for r in records {
        match (factor.level(r), endpoint.value(r)) {
            (Some(row), Some(col)) => cells[usize::from(!row) * 2 + usize::from(!col)] += 1,
            _ => excluded += 1,
        }
    }
    let table = Table2x2::new(cells[0], cells[1], cells[2], cells[3]);
    let (yes, no) = factor.labels();
    FactorResult {
        factor,
        levels: [yes.to_string(), no.to_string()],
        n: table.total() as usize,
        excluded,
        result: contingency_test(&table),
    }
}

/// 2×2 tests of `endpoint` against each factor, Holm-adjusted across the
/// factors whose test applies.
pub fn contingency_report(
    records: &[PairedRecord],
    factors: &[Factor],
    endpoint: Endpoint,
    exec: Execution,
) -> Result<ContingencyReport, StatsError> {
    let mut results = exec.map(factors, |f| factor_table(records, *f, endpoint));
    let raw: Vec<f64> = results.iter().filter_map(|r| r.result.computed().map(|c| c.p)).collect();
    if !raw.is_empty() {
        let mut adjusted = holm_bonferroni(&raw)?.into_iter();
        for r in &mut results {
            if let Outcome::Computed(c) = &mut r.result {
                c.p_adjusted = adjusted.next();
            }
        }
    }

    let (mut y, mut x) = (Vec::new(), Vec::new());
    for r in records {
        if let Some(v) = endpoint.value(r) {
            let band = classify_severity(i64::from(r.self_score)).map_err(|e| StatsError::InvalidValue(e.to_string()))?;
            y.push(v);
            x.push(band.ordinal() as f64);
        }
    }
    let severity_trend = if y.is_empty() { Outcome::na("no endpoint values") } else { logistic_trend(&y, &x)? };
    Ok(ContingencyReport { endpoint, factors: results, severity_trend })
}
