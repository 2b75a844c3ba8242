//! Response CSV import: header binding, cell parsing, missing-data policy and
//! normalization of level codes to unit scores.

use std::collections::{BTreeMap, HashMap, HashSet};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::questionnaire::{Questionnaire, Scale, PARTICIPANT_ID_COLUMN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RawAnswer {
    Level(u32),
    Missing,
}

impl RawAnswer {
    pub fn level(self) -> Option<u32> {
        match self {
            RawAnswer::Level(code) => Some(code),
            RawAnswer::Missing => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParticipantRecord {
    pub participant_id: String,
    pub demographics: BTreeMap<String, String>,
    /// Keyed by question id, in questionnaire order.
    pub answers: IndexMap<String, RawAnswer>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    /// Drop any participant with an unanswered question.
    #[default]
    ExcludeParticipant,
    /// Score unanswered questions as the lowest level.
    TreatAsZero,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseSet {
    pub questionnaire_version: String,
    pub participants: Vec<ParticipantRecord>,
    pub policy_applied: MissingPolicy,
    pub warnings: Vec<String>,
    /// Data rows read from the file, before the missing policy was applied.
    pub rows_read: usize,
    pub demographics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IngestError {
    #[error("response file is empty")]
    Empty,
    #[error("malformed CSV at line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("header mismatch: expected columns {expected:?}; missing {missing:?}; unexpected {unexpected:?}")]
    HeaderMismatch {
        expected: Vec<String>,
        missing: Vec<String>,
        unexpected: Vec<String>,
    },
    #[error("demographic column \"{0}\" collides with participant_id or a question id")]
    DemographicConflict(String),
    #[error("line {line}: participant_id is empty")]
    EmptyParticipantId { line: u64 },
    #[error("line {line}: duplicate participant_id \"{id}\" (first seen at line {first_line})")]
    DuplicateParticipant {
        line: u64,
        id: String,
        first_line: u64,
    },
    #[error("line {line}, column {column}: \"{value}\" is not an integer answer code")]
    InvalidCell {
        line: u64,
        column: String,
        value: String,
    },
    #[error("out_of_range: line {line}, column {column}: answer {value} outside 0..={max}")]
    OutOfRange {
        line: u64,
        column: String,
        value: String,
        max: u32,
    },
    #[error("answer code {code} outside 0..={max}")]
    CodeOutOfRange { code: u32, max: u32 },
}

impl ResponseSet {
    /// Same questionnaire, policy and demographics, no participants.
    pub fn emptied(&self) -> ResponseSet {
        ResponseSet {
            questionnaire_version: self.questionnaire_version.clone(),
            participants: Vec::new(),
            policy_applied: self.policy_applied,
            warnings: Vec::new(),
            rows_read: 0,
            demographics: self.demographics.clone(),
        }
    }
}

/// Maps a level code linearly onto `[0, 1]`: `code / (L - 1)`.
pub fn normalize(code: u32, scale: &Scale) -> Result<f64, IngestError> {
    let max = scale.max_code();
    if code > max {
        return Err(IngestError::CodeOutOfRange { code, max });
    }
    Ok(f64::from(code) / f64::from(max))
}

fn csv_error(e: csv::Error) -> IngestError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    let message = match e.kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => format!("row has {len} fields, header has {expected_len}"),
        csv::ErrorKind::Utf8 { .. } => "invalid UTF-8".to_string(),
        _ => e.to_string(),
    };
    IngestError::Csv { line, message }
}

fn parse_cell(raw: &str, line: u64, column: &str, max: u32) -> Result<RawAnswer, IngestError> {
    let cell = raw.trim();
    if cell.is_empty() {
        return Ok(RawAnswer::Missing);
    }
    let digits = cell.strip_prefix('-').unwrap_or(cell);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(IngestError::InvalidCell {
            line,
            column: column.to_string(),
            value: raw.to_string(),
        });
    }
    match cell.parse::<u32>() {
        Ok(code) if code <= max => Ok(RawAnswer::Level(code)),
        _ => Err(IngestError::OutOfRange {
            line,
            column: column.to_string(),
            value: cell.to_string(),
            max,
        }),
    }
}

fn check_header(
    header: &csv::StringRecord,
    q: &Questionnaire,
    demographics: &[String],
) -> Result<(), IngestError> {
    let expected: Vec<String> = std::iter::once(PARTICIPANT_ID_COLUMN.to_string())
        .chain(demographics.iter().cloned())
        .chain(q.questions.iter().map(|x| x.id.clone()))
        .collect();
    let wanted: HashSet<&str> = expected[1..].iter().map(String::as_str).collect();

    let mut unexpected = Vec::new();
    let mut found = HashSet::new();
    let mut columns = header.iter();
    match columns.next() {
        Some(PARTICIPANT_ID_COLUMN) => {}
        Some(other) => unexpected.push(other.to_string()),
        None => {}
    }
    for name in columns {
        if !wanted.contains(name) || !found.insert(name) {
            unexpected.push(name.to_string());
        }
    }
    let mut missing: Vec<String> = Vec::new();
    if header.get(0) != Some(PARTICIPANT_ID_COLUMN) {
        missing.push(PARTICIPANT_ID_COLUMN.to_string());
    }
    missing.extend(
        expected[1..]
            .iter()
            .filter(|name| !found.contains(name.as_str()))
            .cloned(),
    );
    if missing.is_empty() && unexpected.is_empty() {
        Ok(())
    } else {
        Err(IngestError::HeaderMismatch {
            expected,
            missing,
            unexpected,
        })
    }
}

/// Reads a response CSV for questionnaire `q`.
///
/// Answers are bound to questions by header name, so question columns may
/// appear in any order after `participant_id`. Every declared demographic
/// column must be present and no other columns are allowed. Blank cells are
/// missing answers and are resolved by `policy`; each affected participant
/// produces one warning.
pub fn parse_responses(
    csv_bytes: &[u8],
    q: &Questionnaire,
    demographics: &[String],
    policy: MissingPolicy,
) -> Result<ResponseSet, IngestError> {
    let bytes = csv_bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(csv_bytes);
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Err(IngestError::Empty);
    }

    let mut declared = HashSet::new();
    for name in demographics {
        let clashes = name == PARTICIPANT_ID_COLUMN || q.questions.iter().any(|x| &x.id == name);
        if clashes || !declared.insert(name.as_str()) {
            return Err(IngestError::DemographicConflict(name.clone()));
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::Headers)
        .from_reader(bytes);
    let header = reader.headers().map_err(csv_error)?.clone();
    check_header(&header, q, demographics)?;

    let index: HashMap<&str, usize> = header.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let demographic_columns: Vec<(&String, usize)> = demographics
        .iter()
        .map(|d| (d, index[d.as_str()]))
        .collect();
    let question_columns: Vec<(&String, usize)> = q
        .questions
        .iter()
        .map(|x| (&x.id, index[x.id.as_str()]))
        .collect();
    let max = q.scale.max_code();

    let mut participants = Vec::new();
    let mut warnings = Vec::new();
    let mut first_seen: HashMap<String, u64> = HashMap::new();
    let mut rows_read = 0;

    let mut record = csv::StringRecord::new();
    while reader.read_record(&mut record).map_err(csv_error)? {
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        rows_read += 1;

        let id = record.get(0).unwrap_or("").trim().to_string();
        if id.is_empty() {
            return Err(IngestError::EmptyParticipantId { line });
        }
        if let Some(&first_line) = first_seen.get(&id) {
            return Err(IngestError::DuplicateParticipant {
                line,
                id,
                first_line,
            });
        }
        first_seen.insert(id.clone(), line);

        let demographics: BTreeMap<String, String> = demographic_columns
            .iter()
            .map(|(name, col)| ((*name).clone(), record[*col].trim().to_string()))
            .collect();

        let mut answers = IndexMap::with_capacity(question_columns.len());
        let mut missing = Vec::new();
        for (id, col) in &question_columns {
            let answer = parse_cell(&record[*col], line, id, max)?;
            if answer == RawAnswer::Missing {
                missing.push(id.as_str());
            }
            answers.insert((*id).clone(), answer);
        }

        if !missing.is_empty() {
            let list = missing.join(", ");
            match policy {
                MissingPolicy::ExcludeParticipant => {
                    warnings.push(format!(
                        "participant {id} (line {line}) excluded: missing answers for {list}"
                    ));
                    continue;
                }
                MissingPolicy::TreatAsZero => {
                    warnings.push(format!(
                        "participant {id} (line {line}): missing answers for {list} scored as 0"
                    ));
                    for answer in answers.values_mut() {
                        if *answer == RawAnswer::Missing {
                            *answer = RawAnswer::Level(0);
                        }
                    }
                }
            }
        }

        participants.push(ParticipantRecord {
            participant_id: id,
            demographics,
            answers,
        });
    }

    Ok(ResponseSet {
        questionnaire_version: q.structure_version.clone(),
        participants,
        policy_applied: policy,
        warnings,
        rows_read,
        demographics: demographics.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::questionnaire::default_scale;
    use proptest::prelude::*;

    fn header(q: &Questionnaire) -> String {
        crate::questionnaire::csv_header(q, &[])
    }

    fn row(id: &str, cells: &[&str]) -> String {
        format!("{id},{}\n", cells.join(","))
    }

    #[test]
    fn normalize_endpoints_and_midpoint() {
        let scale = default_scale();
        assert_eq!(normalize(4, &scale).unwrap(), 1.0);
        assert_eq!(normalize(0, &scale).unwrap(), 0.0);
        assert_eq!(normalize(2, &scale).unwrap(), 0.5);
        let all: Vec<f64> = (0..5).map(|c| normalize(c, &scale).unwrap()).collect();
        assert_eq!(all, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(
            normalize(5, &scale),
            Err(IngestError::CodeOutOfRange { code: 5, max: 4 })
        );
    }

    proptest! {
        #[test]
        fn normalize_strictly_increasing(levels in 2usize..12) {
            let scale = Scale::new(
                (0..levels as u32)
                    .map(|code| crate::questionnaire::ScaleLevel { code, label: format!("l{code}") })
                    .collect(),
            ).unwrap();
            let values: Vec<f64> = (0..levels as u32).map(|c| normalize(c, &scale).unwrap()).collect();
            prop_assert_eq!(values[0], 0.0);
            prop_assert_eq!(*values.last().unwrap(), 1.0);
            for w in values.windows(2) {
                prop_assert!(w[0] < w[1]);
            }
        }
    }

    #[test]
    fn three_complete_rows() {
        let q = fixtures::pharmacy_questionnaire();
        let mut csv = header(&q);
        for (i, v) in ["0", "2", "4"].iter().enumerate() {
            csv.push_str(&row(&format!("p{i}"), &[*v; 20]));
        }
        let rs = parse_responses(csv.as_bytes(), &q, &[], MissingPolicy::default()).unwrap();
        assert_eq!(rs.participants.len(), 3);
        assert!(rs.warnings.is_empty());
        assert_eq!(rs.rows_read, 3);
        assert_eq!(rs.participants[1].answers["Q_A26"], RawAnswer::Level(2));
        assert_eq!(rs.participants[2].participant_id, "p2");
    }

    #[test]
    fn blank_cell_excludes_participant() {
        let q = fixtures::pharmacy_questionnaire();
        let mut cells = ["3"; 20];
        cells[7] = "";
        let csv = format!("{}{}{}", header(&q), row("a", &["1"; 20]), row("b", &cells));
        let rs =
            parse_responses(csv.as_bytes(), &q, &[], MissingPolicy::ExcludeParticipant).unwrap();
        assert_eq!(rs.participants.len(), 1);
        assert_eq!(rs.warnings.len(), 1);
        assert!(rs.warnings[0].contains("participant b (line 3) excluded"));
        assert!(rs.warnings[0].contains("Q_A23"));
    }

    #[test]
    fn blank_cell_treated_as_zero() {
        let q = fixtures::pharmacy_questionnaire();
        let mut cells = ["3"; 20];
        cells[0] = " ";
        let csv = format!("{}{}", header(&q), row("b", &cells));
        let rs = parse_responses(csv.as_bytes(), &q, &[], MissingPolicy::TreatAsZero).unwrap();
        assert_eq!(rs.participants.len(), 1);
        assert_eq!(rs.participants[0].answers["Q_A11"], RawAnswer::Level(0));
        assert_eq!(rs.warnings.len(), 1);
    }

    #[test]
    fn out_of_range_cell() {
        let q = fixtures::pharmacy_questionnaire();
        let mut cells = ["3"; 20];
        cells[2] = "7";
        let csv = format!("{}{}", header(&q), row("a", &cells));
        let err = parse_responses(csv.as_bytes(), &q, &[], MissingPolicy::default()).unwrap_err();
        assert_eq!(
            err,
            IngestError::OutOfRange {
                line: 2,
                column: "Q_A13".into(),
                value: "7".into(),
                max: 4
            }
        );
        let mut cells = ["3"; 20];
        cells[2] = "-1";
        let csv = format!("{}{}", header(&q), row("a", &cells));
        let err = parse_responses(csv.as_bytes(), &q, &[], MissingPolicy::default()).unwrap_err();
        assert!(matches!(err, IngestError::OutOfRange { .. }));
    }

    #[test]
    fn non_integer_cell() {
        let q = fixtures::pharmacy_questionnaire();
        let mut cells = ["3"; 20];
        cells[19] = "2.5";
        let csv = format!("{}{}", header(&q), row("a", &cells));
        let err = parse_responses(csv.as_bytes(), &q, &[], MissingPolicy::default()).unwrap_err();
        assert_eq!(
            err,
            IngestError::InvalidCell {
                line: 2,
                column: "Q_A45".into(),
                value: "2.5".into()
            }
        );
    }

    #[test]
    fn duplicate_participant() {
        let q = fixtures::pharmacy_questionnaire();
        let csv = format!(
            "{}{}{}",
            header(&q),
            row("a", &["1"; 20]),
            row("a", &["2"; 20])
        );
        let err = parse_responses(csv.as_bytes(), &q, &[], MissingPolicy::default()).unwrap_err();
        assert_eq!(
            err,
            IngestError::DuplicateParticipant {
                line: 3,
                id: "a".into(),
                first_line: 2
            }
        );
    }

    #[test]
    fn missing_and_unexpected_columns() {
        let q = fixtures::pharmacy_questionnaire();
        let csv = header(&q).replace("Q_A26", "Q_A62");
        let err = parse_responses(csv.as_bytes(), &q, &[], MissingPolicy::default()).unwrap_err();
        match err {
            IngestError::HeaderMismatch {
                missing,
                unexpected,
                ..
            } => {
                assert_eq!(missing, vec!["Q_A26".to_string()]);
                assert_eq!(unexpected, vec!["Q_A62".to_string()]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn undeclared_demographic_is_rejected() {
        let q = fixtures::pharmacy_questionnaire();
        let csv = crate::questionnaire::csv_header(&q, &["gender".into()]);
        let err = parse_responses(csv.as_bytes(), &q, &[], MissingPolicy::default()).unwrap_err();
        assert!(
            matches!(err, IngestError::HeaderMismatch { ref unexpected, .. } if unexpected == &["gender"])
        );
        let rs = parse_responses(
            csv.as_bytes(),
            &q,
            &["gender".into()],
            MissingPolicy::default(),
        )
        .unwrap();
        assert!(rs.participants.is_empty());
    }

    #[test]
    fn columns_bound_by_name_and_crlf() {
        let q = fixtures::pharmacy_questionnaire();
        let mut names: Vec<String> = q.questions.iter().map(|x| x.id.clone()).collect();
        names.reverse();
        let mut csv = format!("participant_id,gender,{}\r\n", names.join(","));
        let cells: Vec<String> = (0..20).map(|i| (i % 5).to_string()).collect();
        csv.push_str(&format!("x,F,{}\r\n", cells.join(",")));
        let rs = parse_responses(
            csv.as_bytes(),
            &q,
            &["gender".into()],
            MissingPolicy::default(),
        )
        .unwrap();
        let p = &rs.participants[0];
        // reversed: the first column after gender is Q_A45
        assert_eq!(p.answers["Q_A45"], RawAnswer::Level(0));
        assert_eq!(p.answers["Q_A11"], RawAnswer::Level(4));
        assert_eq!(p.demographics["gender"], "F");
        assert_eq!(p.answers.keys().next().unwrap(), "Q_A11");
    }

    #[test]
    fn empty_file() {
        let q = fixtures::pharmacy_questionnaire();
        assert_eq!(
            parse_responses(b"", &q, &[], MissingPolicy::default()),
            Err(IngestError::Empty)
        );
        assert_eq!(
            parse_responses(b"\n  \n", &q, &[], MissingPolicy::default()),
            Err(IngestError::Empty)
        );
    }

    #[test]
    fn ragged_row() {
        let q = fixtures::pharmacy_questionnaire();
        let csv = format!("{}a,1,2\n", header(&q));
        let err = parse_responses(csv.as_bytes(), &q, &[], MissingPolicy::default()).unwrap_err();
        assert!(matches!(err, IngestError::Csv { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn demographic_cannot_shadow_question() {
        let q = fixtures::pharmacy_questionnaire();
        let err = parse_responses(
            b"participant_id\n",
            &q,
            &["Q_A11".into()],
            MissingPolicy::default(),
        )
        .unwrap_err();
        assert_eq!(err, IngestError::DemographicConflict("Q_A11".into()));
    }

    proptest! {
        #[test]
        fn policy_accounting(mask in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 20), 1..15)) {
            let q = fixtures::pharmacy_questionnaire();
            let mut csv = header(&q);
            for (i, blanks) in mask.iter().enumerate() {
                let cells: Vec<&str> = blanks.iter().map(|b| if *b { "" } else { "2" }).collect();
                csv.push_str(&row(&format!("p{i}"), &cells));
            }
            let ex = parse_responses(csv.as_bytes(), &q, &[], MissingPolicy::ExcludeParticipant).unwrap();
            prop_assert!(ex.participants.len() + ex.warnings.len() >= mask.len());
            for p in &ex.participants {
                prop_assert!(p.answers.values().all(|a| *a != RawAnswer::Missing));
            }
            let zero = parse_responses(csv.as_bytes(), &q, &[], MissingPolicy::TreatAsZero).unwrap();
            prop_assert_eq!(zero.participants.len(), mask.len());
            let again = parse_responses(csv.as_bytes(), &q, &[], MissingPolicy::TreatAsZero).unwrap();
            prop_assert_eq!(zero, again);
        }
    }
}
