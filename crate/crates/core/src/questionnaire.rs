//! Measurement scale, questionnaire template generation and coverage checks.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::{from_json, DocumentError};
use crate::goal_structure::{GoalStructure, Status};
use crate::violation::{join_violations, Violation, ViolationCode};

pub const PARTICIPANT_ID_COLUMN: &str = "participant_id";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleLevel {
    pub code: u32,
    pub label: String,
}

/// Ordered answer levels with codes `0..L`, `L >= 2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ScaleLevel>", into = "Vec<ScaleLevel>")]
pub struct Scale {
    levels: Vec<ScaleLevel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScaleError {
    #[error("scale needs at least 2 levels, got {0}")]
    TooFewLevels(usize),
    #[error("scale level at position {position} has code {code}, expected {position}")]
    CodeGap { position: usize, code: u32 },
    #[error("scale level {0} has an empty label")]
    EmptyLabel(u32),
}

impl Scale {
    pub fn new(levels: Vec<ScaleLevel>) -> Result<Self, ScaleError> {
        if levels.len() < 2 {
            return Err(ScaleError::TooFewLevels(levels.len()));
        }
        for (position, level) in levels.iter().enumerate() {
            if level.code as usize != position {
                return Err(ScaleError::CodeGap {
                    position,
                    code: level.code,
                });
            }
            if level.label.trim().is_empty() {
                return Err(ScaleError::EmptyLabel(level.code));
            }
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[ScaleLevel] {
        &self.levels
    }

    /// Number of levels, `L`.
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn max_code(&self) -> u32 {
        (self.levels.len() - 1) as u32
    }
}

impl TryFrom<Vec<ScaleLevel>> for Scale {
    type Error = ScaleError;

    fn try_from(levels: Vec<ScaleLevel>) -> Result<Self, Self::Error> {
        Scale::new(levels)
    }
}

impl From<Scale> for Vec<ScaleLevel> {
    fn from(scale: Scale) -> Self {
        scale.levels
    }
}

/// The five-level agreement scale used in the course evaluation survey.
pub fn default_scale() -> Scale {
    let labels = [
        "Disagree at all",
        "Up to 30% agree",
        "31-50% agree",
        "51-75% agree",
        "76-100% agree",
    ];
    Scale::new(
        labels
            .iter()
            .zip(0u32..)
            .map(|(label, code)| ScaleLevel {
                code,
                label: (*label).to_string(),
            })
            .collect(),
    )
    .expect("default scale is well-formed")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Question {
    pub id: String,
    pub text: String,
    pub sub_goal: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Questionnaire {
    pub structure_version: String,
    pub status: Status,
    pub scale: Scale,
    pub questions: Vec<Question>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuestionnaireFormat {
    Markdown,
    CsvHeader,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuestionnaireError {
    #[error("structure_not_confirmed: goal structure must be confirmed before a questionnaire is prepared")]
    StructureNotConfirmed,
    #[error("invalid questionnaire: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

impl Questionnaire {
    /// Questions measuring `sub_goal`, in questionnaire order.
    pub fn questions_for<'a>(&'a self, sub_goal: &'a str) -> impl Iterator<Item = &'a Question> {
        self.questions
            .iter()
            .filter(move |q| q.sub_goal == sub_goal)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("questionnaire serializes");
        s.push('\n');
        s
    }
}

pub fn parse_questionnaire(document: &[u8]) -> Result<Questionnaire, DocumentError> {
    from_json(document)
}

/// One placeholder question per sub goal, on the default scale, as a draft.
pub fn generate_template(gs: &GoalStructure) -> Result<Questionnaire, QuestionnaireError> {
    if gs.status != Status::Confirmed {
        return Err(QuestionnaireError::StructureNotConfirmed);
    }
    let questions = gs
        .sub_goals()
        .map(|sg| Question {
            id: format!("Q_{}", sg.id),
            text: format!(
                "To what extent do you agree that \"{}\" met your expectations?",
                sg.label
            ),
            sub_goal: sg.id.clone(),
        })
        .collect();
    Ok(Questionnaire {
        structure_version: gs.version.clone(),
        status: Status::Draft,
        scale: default_scale(),
        questions,
    })
}

/// Coverage and reference checks of `q` against its goal structure.
pub fn validate_questionnaire(q: &Questionnaire, gs: &GoalStructure) -> Vec<Violation> {
    let mut out = Vec::new();
    if q.questions.is_empty() {
        out.push(Violation::new(
            ViolationCode::EmptyQuestionnaire,
            "questions",
            "questionnaire has no questions",
        ));
    }
    if q.structure_version != gs.version {
        out.push(Violation::new(
            ViolationCode::VersionMismatch,
            "structure_version",
            format!(
                "questionnaire targets structure version \"{}\" but the structure is \"{}\"",
                q.structure_version, gs.version
            ),
        ));
    }

    let sub_ids: HashSet<&str> = gs.sub_goals().map(|s| s.id.as_str()).collect();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    let mut covered: HashSet<&str> = HashSet::new();
    for (i, question) in q.questions.iter().enumerate() {
        let path = format!("questions[{i}]");
        if question.id.trim().is_empty() || question.id == PARTICIPANT_ID_COLUMN {
            out.push(Violation::new(
                ViolationCode::EmptyId,
                path.clone(),
                format!(
                    "question id \"{}\" is not usable as a column name",
                    question.id
                ),
            ));
        } else if let Some(first) = seen.get(question.id.as_str()) {
            out.push(Violation::new(
                ViolationCode::DuplicateQuestionId,
                path.clone(),
                format!(
                    "question id \"{}\" already used at questions[{first}]",
                    question.id
                ),
            ));
        } else {
            seen.insert(&question.id, i);
        }
        if sub_ids.contains(question.sub_goal.as_str()) {
            covered.insert(&question.sub_goal);
        } else {
            out.push(Violation::new(
                ViolationCode::UnknownSubGoal,
                format!("{path}.sub_goal"),
                format!(
                    "question \"{}\" references unknown sub goal \"{}\"",
                    question.id, question.sub_goal
                ),
            ));
        }
    }

    for (i, key) in gs.key_goals.iter().enumerate() {
        for (j, sub) in key.sub_goals.iter().enumerate() {
            if !covered.contains(sub.id.as_str()) {
                out.push(Violation::new(
                    ViolationCode::UncoveredSubGoal,
                    format!("key_goals[{i}].sub_goals[{j}]"),
                    format!("sub goal \"{}\" is not measured by any question", sub.id),
                ));
            }
        }
    }
    out
}

/// Validated copy of `q` with status confirmed.
pub fn confirm_questionnaire(
    q: &Questionnaire,
    gs: &GoalStructure,
) -> Result<Questionnaire, QuestionnaireError> {
    let violations = validate_questionnaire(q, gs);
    if !violations.is_empty() {
        return Err(QuestionnaireError::Invalid(violations));
    }
    let mut confirmed = q.clone();
    confirmed.status = Status::Confirmed;
    Ok(confirmed)
}

pub fn render_questionnaire(
    q: &Questionnaire,
    gs: &GoalStructure,
    format: QuestionnaireFormat,
) -> Result<String, QuestionnaireError> {
    let violations = validate_questionnaire(q, gs);
    if !violations.is_empty() {
        return Err(QuestionnaireError::Invalid(violations));
    }
    Ok(match format {
        QuestionnaireFormat::Markdown => render_markdown(q, gs),
        QuestionnaireFormat::CsvHeader => csv_header(q, &[]),
    })
}

/// Header line of the response CSV: participant id, demographics, then question ids.
pub fn csv_header(q: &Questionnaire, demographics: &[String]) -> String {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let columns = std::iter::once(PARTICIPANT_ID_COLUMN)
        .chain(demographics.iter().map(String::as_str))
        .chain(q.questions.iter().map(|q| q.id.as_str()));
    writer
        .write_record(columns)
        .expect("writing to memory cannot fail");
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

pub(crate) fn md_escape(text: &str) -> String {
    text.replace('|', "\\|").replace('\n', " ")
}

fn render_markdown(q: &Questionnaire, gs: &GoalStructure) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {}", md_escape(&gs.title));
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "Structure version: {}",
        md_escape(&q.structure_version)
    );
    for key in &gs.key_goals {
        let _ = writeln!(out);
        let _ = writeln!(out, "## {} {}", md_escape(&key.id), md_escape(&key.label));
        let _ = writeln!(out);
        let mut header = String::from("| No. | Question | Sub goal |");
        let mut rule = String::from("|---:|---|---|");
        for level in q.scale.levels() {
            let _ = write!(header, " {} |", md_escape(&level.label));
            rule.push_str(":-:|");
        }
        let _ = writeln!(out, "{header}");
        let _ = writeln!(out, "{rule}");
        let blanks = " |".repeat(q.scale.len());
        let mut number = 0;
        for sub in &key.sub_goals {
            for question in q.questions_for(&sub.id) {
                number += 1;
                let _ = writeln!(
                    out,
                    "| {number} | {} | {} |{blanks}",
                    md_escape(&question.text),
                    md_escape(&sub.id)
                );
            }
        }
    }
    out
}
