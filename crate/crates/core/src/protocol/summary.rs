use serde::{Deserialize, Serialize};

use super::answer::ItemScore;
use super::instrument::{Instrument, SELF_HARM_ITEM};
use super::severity::{Phq9Result, SeverityBand};
use super::ProtocolError;
use crate::lang::Language;
use crate::messages::Messages;
use crate::safety::HelplineEntry;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryItem {
    pub index: u8,
    pub text: String,
    pub score: ItemScore,
    /// Anchor label of the recorded bracket, in the session language.
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HelplineSection {
    pub title: String,
    pub entries: Vec<HelplineEntry>,
}

/// End-of-screening report returned to the user and by the result endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryDocument {
    pub lang: Language,
    pub title: String,
    pub items: Vec<SummaryItem>,
    pub total: u8,
    pub max_total: u8,
    pub severity: SeverityBand,
    pub severity_label: String,
    pub interpretation: String,
    pub recommendations: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub helplines: Option<HelplineSection>,
}

impl SummaryDocument {
    /// Plain-text rendering appended to the bot's closing message.
    pub fn render_text(&self, messages: &Messages) -> String {
        let m = messages.get(self.lang);
        let mut out = format!("{}\n", self.title);
        for item in &self.items {
            out.push_str(&format!(
                "{}. {}: {} ({} {})\n",
                item.index, item.text, item.answer, m.item_score_word, item.score
            ));
        }
        out.push_str(&format!("{}: {}/{}\n", m.total_label, self.total, self.max_total));
        out.push_str(&format!("{}: {}\n", m.severity_label, self.severity_label));
        out.push_str(&self.interpretation);
        out.push('\n');
        for r in &self.recommendations {
            out.push_str(&format!("- {r}\n"));
        }
        if let Some(section) = &self.helplines {
            out.push_str(&format!("{}\n", section.title));
            for e in &section.entries {
                out.push_str(&format!("- {}: {}\n", e.name, e.contact));
            }
        }
        out.trim_end().to_string()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SummaryBuilder<'a> {
    pub instrument: &'a Instrument,
    pub messages: &'a Messages,
}

impl Default for SummaryBuilder<'static> {
    fn default() -> Self {
        SummaryBuilder { instrument: Instrument::builtin(), messages: Messages::builtin() }
    }
}

impl SummaryBuilder<'_> {
    /// Builds the summary. Helplines are attached when the self-harm item is
    /// scored above zero.
    pub fn build(
        &self,
        result: &Phq9Result,
        lang: Language,
        helplines: &[HelplineEntry],
    ) -> Result<SummaryDocument, ProtocolError> {
        let m = self.messages.get(lang);
        let mut items = Vec::with_capacity(9);
        for (item, score) in self.instrument.items().iter().zip(result.item_scores()) {
            let text = item.prompts.get(&lang).ok_or(ProtocolError::MissingTranslation(lang))?;
            let labels = item.options.get(&lang).ok_or(ProtocolError::MissingTranslation(lang))?;
            items.push(SummaryItem {
                index: item.index,
                text: text.clone(),
                score: *score,
                answer: labels[usize::from(score.value())].clone(),
            });
        }
        let band = result.severity().ordinal();
        let self_harm = result.item(SELF_HARM_ITEM).is_some_and(|s| s.value() >= 1);
        let helplines = (self_harm && !helplines.is_empty()).then(|| HelplineSection {
            title: m.helplines_title.clone(),
            entries: helplines.to_vec(),
        });
        Ok(SummaryDocument {
            lang,
            title: m.summary_title.clone(),
            items,
            total: result.total(),
            max_total: 27,
            severity: result.severity(),
            severity_label: m.bands[band].clone(),
            interpretation: m.interpretations[band].clone(),
            recommendations: m.recommendations[band].clone(),
            helplines,
        })
    }
}

/// Summary against the built-in instrument and messages. `lang` is a
/// language code such as `en` or `zh`.
pub fn build_summary(
    result: &Phq9Result,
    lang: &str,
    helplines: &[HelplineEntry],
) -> Result<SummaryDocument, ProtocolError> {
    let lang: Language =
        lang.parse().map_err(|_| ProtocolError::UnsupportedLanguage(lang.to_string()))?;
    SummaryBuilder::default().build(result, lang, helplines)
}
