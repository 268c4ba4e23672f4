use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::StatsError;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demographics {
    pub country: Option<String>,
    pub age_group: Option<String>,
    pub gender: Option<String>,
    pub ethnicity: Option<String>,
    pub education: Option<String>,
    pub employment: Option<String>,
    pub mh_experience: Option<bool>,
    pub chatbot_experience: Option<bool>,
}

/// Binary survey endpoints used by the contingency analysis.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endpoints {
    pub trust_bot: Option<bool>,
    pub prefer_bot: Option<bool>,
    pub recommend: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rating {
    Q17,
    Q18,
    Q19,
    Q20,
}

impl Rating {
    pub const ALL: [Rating; 4] = [Rating::Q17, Rating::Q18, Rating::Q19, Rating::Q20];

    pub fn column(self) -> &'static str {
        match self {
            Rating::Q17 => "q17",
            Rating::Q18 => "q18",
            Rating::Q19 => "q19",
            Rating::Q20 => "q20",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for Rating {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, StatsError> {
        Rating::ALL
            .into_iter()
            .find(|r| r.column().eq_ignore_ascii_case(s))
            .ok_or_else(|| StatsError::InvalidValue(format!("unknown rating {s:?}; expected q17..q20")))
    }
}

/// One participant's two PHQ-9 totals plus optional survey fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairedRecord {
    pub participant_id: String,
    pub self_score: u8,
    pub bot_score: u8,
    pub demographics: Demographics,
    /// q17..q20, each 0–10.
    pub ratings: [Option<u8>; 4],
    pub endpoints: Endpoints,
}

impl PairedRecord {
    pub fn new(id: &str, self_score: u8, bot_score: u8) -> Self {
        PairedRecord {
            participant_id: id.to_string(),
            self_score,
            bot_score,
            demographics: Demographics::default(),
            ratings: [None; 4],
            endpoints: Endpoints::default(),
        }
    }

    pub fn rating(&self, r: Rating) -> Option<u8> {
        self.ratings[r.index()]
    }

    pub fn pair(&self) -> (f64, f64) {
        (f64::from(self.self_score), f64::from(self.bot_score))
    }
}

const REQUIRED: [&str; 3] = ["participant_id", "self_score", "bot_score"];
const OPTIONAL: [&str; 15] = [
    "country",
    "age_group",
    "gender",
    "ethnicity",
    "education",
    "employment",
    "mh_experience",
    "chatbot_experience",
    "q17",
    "q18",
    "q19",
    "q20",
    "trust_bot",
    "prefer_bot",
    "recommend",
];

fn parse_bool(v: &str) -> Option<bool> {
    match v.trim().to_lowercase().as_str() {
        "true" | "yes" | "y" | "1" => Some(true),
        "false" | "no" | "n" | "0" => Some(false),
        _ => None,
    }
}

pub fn read_pairs(path: &Path) -> Result<Vec<PairedRecord>, StatsError> {
    let file = std::fs::File::open(path)?;
    read_pairs_from_reader(file, &path.display().to_string())
}

/// Parses the paired-score CSV. Columns are matched by header name; the
/// first three are required, the rest optional, empty cells are missing.
pub fn read_pairs_from_reader(reader: impl Read, name: &str) -> Result<Vec<PairedRecord>, StatsError> {
    let err = |row: usize, message: String| StatsError::Csv { path: name.to_string(), row, message };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| err(1, e.to_string()))?.clone();
    for h in &headers {
        if !REQUIRED.contains(&h) && !OPTIONAL.contains(&h) {
            return Err(err(1, format!("unknown column {h:?}")));
        }
    }
    let col = |name: &str| headers.iter().position(|h| h == name);
    for name in REQUIRED {
        if col(name).is_none() {
            return Err(err(1, format!("missing column {name:?}")));
        }
    }
    let idx: Vec<(&str, Option<usize>)> = REQUIRED.iter().chain(&OPTIONAL).map(|n| (*n, col(n))).collect();

    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| err(line, e.to_string()))?;
        let get = |name: &str| -> Option<&str> {
            let (_, c) = idx.iter().find(|(n, _)| *n == name)?;
            row.get((*c)?).filter(|v| !v.is_empty())
        };
        let score = |name: &str| -> Result<u8, StatsError> {
            let raw = get(name).ok_or_else(|| err(line, format!("{name} is empty")))?;
            raw.parse::<u8>()
                .ok()
                .filter(|s| *s <= 27)
                .ok_or_else(|| err(line, format!("{name} {raw:?} is not a total in 0..=27")))
        };
        let flag = |name: &str| -> Result<Option<bool>, StatsError> {
            get(name).map(|v| parse_bool(v).ok_or_else(|| err(line, format!("{name} {v:?} is not a boolean")))).transpose()
        };
        let text = |name: &str| get(name).map(str::to_string);
        let id = get("participant_id").ok_or_else(|| err(line, "participant_id is empty".into()))?;
        let mut rec = PairedRecord::new(id, score("self_score")?, score("bot_score")?);
        rec.demographics = Demographics {
            country: text("country"),
            age_group: text("age_group"),
            gender: text("gender"),
            ethnicity: text("ethnicity"),
            education: text("education"),
            employment: text("employment"),
            mh_experience: flag("mh_experience")?,
            chatbot_experience: flag("chatbot_experience")?,
        };
        for r in Rating::ALL {
            rec.ratings[r.index()] = get(r.column())
                .map(|v| {
                    v.parse::<u8>()
                        .ok()
                        .filter(|x| *x <= 10)
                        .ok_or_else(|| err(line, format!("{} {v:?} is not a rating in 0..=10", r.column())))
                })
                .transpose()?;
        }
        rec.endpoints =
            Endpoints { trust_bot: flag("trust_bot")?, prefer_bot: flag("prefer_bot")?, recommend: flag("recommend")? };
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_and_full_rows() {
        let csv = "participant_id,self_score,bot_score,age_group,mh_experience,q19,recommend\n\
                   p1,5,7,25-34,yes,8,1\n\
                   p2,0,0,,,,\n";
        let recs = read_pairs_from_reader(csv.as_bytes(), "t").unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].demographics.mh_experience, Some(true));
        assert_eq!(recs[0].rating(Rating::Q19), Some(8));
        assert_eq!(recs[0].endpoints.recommend, Some(true));
        assert_eq!(recs[1].demographics.age_group, None);
    }

    #[test]
    fn rejects_bad_values() {
        for body in ["p1,28,3", "p1,-1,3", "p1,3,x", ",3,3"] {
            let csv = format!("participant_id,self_score,bot_score\n{body}\n");
            assert!(read_pairs_from_reader(csv.as_bytes(), "t").is_err(), "{body}");
        }
        let csv = "participant_id,self_score,bot_score,q17\np1,1,1,11\n";
        assert!(read_pairs_from_reader(csv.as_bytes(), "t").is_err());
        let csv = "participant_id,self_score,bot_score,email\np1,1,1,x\n";
        assert!(read_pairs_from_reader(csv.as_bytes(), "t").is_err());
        let csv = "participant_id,self_score\np1,1\n";
        assert!(read_pairs_from_reader(csv.as_bytes(), "t").is_err());
    }
}
