//! The bundled course-evaluation goal structure (four key goals, twenty sub
//! goals) and its confirmed questionnaire.

use crate::goal_structure::{parse_structure, GoalStructure};
use crate::questionnaire::{parse_questionnaire, Questionnaire};

pub const PHARMACY_STRUCTURE_JSON: &str = include_str!("../fixtures/pharmacy_structure.json");
pub const PHARMACY_QUESTIONNAIRE_JSON: &str =
    include_str!("../fixtures/pharmacy_questionnaire.json");

pub fn pharmacy_structure() -> GoalStructure {
    parse_structure(PHARMACY_STRUCTURE_JSON.as_bytes()).expect("bundled structure is valid")
}

pub fn pharmacy_questionnaire() -> Questionnaire {
    parse_questionnaire(PHARMACY_QUESTIONNAIRE_JSON.as_bytes())
        .expect("bundled questionnaire parses")
}
