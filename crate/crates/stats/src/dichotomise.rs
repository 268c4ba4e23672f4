use serde::{Deserialize, Serialize};

use crate::record::PairedRecord;

/// Fixed two-level splits of multi-level demographics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DichotomyRule {
    /// Age group upper bound ≤ 34 vs ≥ 35.
    Age,
    /// White vs non-White.
    Ethnicity,
    /// Degree vs non-degree.
    Education,
}

impl DichotomyRule {
    /// Labels for `true` and `false`.
    pub fn labels(self) -> (&'static str, &'static str) {
        match self {
            DichotomyRule::Age => ("age <= 34", "age >= 35"),
            DichotomyRule::Ethnicity => ("White", "non-White"),
            DichotomyRule::Education => ("degree", "non-degree"),
        }
    }
}

fn declined(v: &str) -> bool {
    let v = v.to_lowercase();
    v.contains("prefer not") || v.is_empty()
}

fn upper_age(group: &str) -> Option<u32> {
    let nums: Vec<u32> = group
        .split(|c: char| !c.is_ascii_digit())
        .filter(|s| !s.is_empty())
        .filter_map(|s| s.parse().ok())
        .collect();
    nums.last().copied()
}

/// `None` when the field is missing, declined or unparseable.
pub fn dichotomise(record: &PairedRecord, rule: DichotomyRule) -> Option<bool> {
    let d = &record.demographics;
    match rule {
        DichotomyRule::Age => {
            let group = d.age_group.as_deref()?;
            upper_age(group).map(|upper| upper <= 34)
        }
        DichotomyRule::Ethnicity => {
            let e = d.ethnicity.as_deref().filter(|e| !declined(e))?;
            Some(e.trim().to_lowercase().starts_with("white"))
        }
        DichotomyRule::Education => {
            let e = d.education.as_deref().filter(|e| !declined(e))?.to_lowercase();
            Some(e.contains("degree") && !e.starts_with("no") && !e.starts_with("non"))
        }
    }
}
