use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::answer::ItemScore;
use super::instrument::ITEM_COUNT;
use super::ProtocolError;

/// PHQ-9 severity band with inclusive total-score ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SeverityBand {
    MinimalNone,
    Mild,
    Moderate,
    ModeratelySevere,
    Severe,
}

impl SeverityBand {
    pub const ALL: [SeverityBand; 5] = [
        SeverityBand::MinimalNone,
        SeverityBand::Mild,
        SeverityBand::Moderate,
        SeverityBand::ModeratelySevere,
        SeverityBand::Severe,
    ];

    pub fn range(self) -> RangeInclusive<u8> {
        match self {
            SeverityBand::MinimalNone => 0..=4,
            SeverityBand::Mild => 5..=9,
            SeverityBand::Moderate => 10..=14,
            SeverityBand::ModeratelySevere => 15..=19,
            SeverityBand::Severe => 20..=27,
        }
    }

    /// Position in [`SeverityBand::ALL`]; indexes localized label tables.
    pub fn ordinal(self) -> usize {
        self as usize
    }
}

pub fn classify_severity(total: i64) -> Result<SeverityBand, ProtocolError> {
    let band = match total {
        0..=4 => SeverityBand::MinimalNone,
        5..=9 => SeverityBand::Mild,
        10..=14 => SeverityBand::Moderate,
        15..=19 => SeverityBand::ModeratelySevere,
        20..=27 => SeverityBand::Severe,
        _ => return Err(ProtocolError::TotalOutOfRange(total)),
    };
    Ok(band)
}

pub fn score_total(item_scores: &[ItemScore]) -> Result<u8, ProtocolError> {
    if item_scores.len() != ITEM_COUNT {
        return Err(ProtocolError::Incomplete { got: item_scores.len() });
    }
    Ok(item_scores.iter().map(|s| s.value()).sum())
}

/// A completed PHQ-9: nine item scores with their total and band.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawResult")]
pub struct Phq9Result {
    item_scores: [ItemScore; ITEM_COUNT],
    total: u8,
    severity: SeverityBand,
}

#[derive(Deserialize)]
struct RawResult {
    item_scores: Vec<ItemScore>,
    total: u8,
    severity: SeverityBand,
}

impl TryFrom<RawResult> for Phq9Result {
    type Error = String;

    fn try_from(raw: RawResult) -> Result<Self, Self::Error> {
        let r = Phq9Result::from_scores(&raw.item_scores).map_err(|e| e.to_string())?;
        if r.total != raw.total || r.severity != raw.severity {
            return Err(format!(
                "stored total/severity ({}, {:?}) disagree with item scores ({}, {:?})",
                raw.total, raw.severity, r.total, r.severity
            ));
        }
        Ok(r)
    }
}

impl Phq9Result {
    pub fn from_scores(item_scores: &[ItemScore]) -> Result<Self, ProtocolError> {
        let total = score_total(item_scores)?;
        let severity = classify_severity(i64::from(total))?;
        let mut scores = [ItemScore::new(0)?; ITEM_COUNT];
        scores.copy_from_slice(item_scores);
        Ok(Phq9Result { item_scores: scores, total, severity })
    }

    pub fn item_scores(&self) -> &[ItemScore; ITEM_COUNT] {
        &self.item_scores
    }

    pub fn total(&self) -> u8 {
        self.total
    }

    pub fn severity(&self) -> SeverityBand {
        self.severity
    }

    /// Score of a 1-based item.
    pub fn item(&self, index: u8) -> Option<ItemScore> {
        self.item_scores.get(usize::from(index).checked_sub(1)?).copied()
    }
}
