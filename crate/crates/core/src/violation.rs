use std::fmt;

use serde::{Deserialize, Serialize};

/// Machine-readable category of a structural or coverage problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationCode {
    EmptyStructure,
    EmptyKeyGoal,
    EmptyId,
    DuplicateId,
    MissingConfirmation,
    EmptyQuestionnaire,
    DuplicateQuestionId,
    UnknownSubGoal,
    UncoveredSubGoal,
    VersionMismatch,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::EmptyStructure => "empty_structure",
            ViolationCode::EmptyKeyGoal => "empty_key_goal",
            ViolationCode::EmptyId => "empty_id",
            ViolationCode::DuplicateId => "duplicate_id",
            ViolationCode::MissingConfirmation => "missing_confirmation",
            ViolationCode::EmptyQuestionnaire => "empty_questionnaire",
            ViolationCode::DuplicateQuestionId => "duplicate_question_id",
            ViolationCode::UnknownSubGoal => "unknown_sub_goal",
            ViolationCode::UncoveredSubGoal => "uncovered_sub_goal",
            ViolationCode::VersionMismatch => "version_mismatch",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A single invariant breach, located by a document path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(code: ViolationCode, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            code,
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Renders as `code: path: message`, the line format used by the CLI.
impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.code, self.path, self.message)
    }
}

pub(crate) fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
