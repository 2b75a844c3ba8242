//! Two-level evaluation goal hierarchy: key goals, each supported by sub goals.
//!
//! A structure starts as a draft, is edited and validated until it is clean,
//! and is then confirmed by its approvers. Only confirmed structures feed the
//! questionnaire generator.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::{from_json, DocumentError};
use crate::violation::{join_violations, Violation, ViolationCode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Draft,
    Confirmed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Confirmation {
    pub approvers: Vec<String>,
    pub date: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubGoal {
    pub id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyGoal {
    pub id: String,
    pub label: String,
    pub sub_goals: Vec<SubGoal>,
}

/// The goal hierarchy in document order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalStructure {
    pub title: String,
    pub version: String,
    pub status: Status,
    #[serde(default)]
    pub confirmation: Option<Confirmation>,
    pub key_goals: Vec<KeyGoal>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error("invalid goal structure: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfirmError {
    #[error("structure cannot be confirmed: {}", join_violations(.0))]
    Violations(Vec<Violation>),
    #[error("empty_approvers: at least one approver is required")]
    EmptyApprovers,
}

impl GoalStructure {
    pub fn sub_goals(&self) -> impl Iterator<Item = &SubGoal> {
        self.key_goals.iter().flat_map(|k| k.sub_goals.iter())
    }

    pub fn sub_goal_count(&self) -> usize {
        self.key_goals.iter().map(|k| k.sub_goals.len()).sum()
    }

    pub fn key_goal(&self, id: &str) -> Option<&KeyGoal> {
        self.key_goals.iter().find(|k| k.id == id)
    }

    /// Key goal owning the given sub goal.
    pub fn parent_of(&self, sub_goal_id: &str) -> Option<&KeyGoal> {
        self.key_goals
            .iter()
            .find(|k| k.sub_goals.iter().any(|s| s.id == sub_goal_id))
    }

    pub fn is_confirmed(&self) -> bool {
        self.status == Status::Confirmed
    }

    /// Pretty-printed JSON in the goal-structure file format.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("goal structure serializes");
        s.push('\n');
        s
    }
}

/// Parses a goal-structure document and rejects it unless every invariant holds.
pub fn parse_structure(document: &[u8]) -> Result<GoalStructure, StructureError> {
    let gs: GoalStructure = from_json(document)?;
    let violations = validate_structure(&gs);
    if violations.is_empty() {
        Ok(gs)
    } else {
        Err(StructureError::Invalid(violations))
    }
}

/// Parses without invariant checks, for tools that report violations themselves.
pub fn parse_structure_unchecked(document: &[u8]) -> Result<GoalStructure, DocumentError> {
    from_json(document)
}

/// Lists every invariant breach; an empty list means the structure is sound.
pub fn validate_structure(gs: &GoalStructure) -> Vec<Violation> {
    let mut out = Vec::new();
    if gs.key_goals.is_empty() {
        out.push(Violation::new(
            ViolationCode::EmptyStructure,
            "key_goals",
            "structure defines no key goals",
        ));
    }

    // first occurrence path per id
    let mut seen: HashMap<String, String> = HashMap::new();
    let mut check_id = |id: &str, path: String, out: &mut Vec<Violation>| {
        if id.trim().is_empty() {
            out.push(Violation::new(
                ViolationCode::EmptyId,
                path,
                "id must be non-empty",
            ));
            return;
        }
        match seen.get(id) {
            Some(first) => out.push(Violation::new(
                ViolationCode::DuplicateId,
                path,
                format!("id \"{id}\" already used at {first}"),
            )),
            None => {
                seen.insert(id.to_string(), path);
            }
        }
    };

    for (i, key) in gs.key_goals.iter().enumerate() {
        let key_path = format!("key_goals[{i}]");
        check_id(&key.id, key_path.clone(), &mut out);
        if key.sub_goals.is_empty() {
            out.push(Violation::new(
                ViolationCode::EmptyKeyGoal,
                format!("{key_path}.sub_goals"),
                format!("key goal \"{}\" has zero sub goals", key.id),
            ));
        }
        for (j, sub) in key.sub_goals.iter().enumerate() {
            check_id(&sub.id, format!("{key_path}.sub_goals[{j}]"), &mut out);
        }
    }

    if gs.status == Status::Confirmed && gs.confirmation.is_none() {
        out.push(Violation::new(
            ViolationCode::MissingConfirmation,
            "confirmation",
            "status is confirmed but no confirmation record is present",
        ));
    }
    out
}

/// Returns a confirmed copy of `gs`; the input is left untouched.
pub fn confirm_structure(
    gs: &GoalStructure,
    approvers: &[String],
    date: &str,
) -> Result<GoalStructure, ConfirmError> {
    let violations = validate_structure(gs);
    if !violations.is_empty() {
        return Err(ConfirmError::Violations(violations));
    }
    if approvers.iter().all(|a| a.trim().is_empty()) {
        return Err(ConfirmError::EmptyApprovers);
    }
    let mut confirmed = gs.clone();
    confirmed.status = Status::Confirmed;
    confirmed.confirmation = Some(Confirmation {
        approvers: approvers.to_vec(),
        date: date.to_string(),
    });
    Ok(confirmed)
}
