//! Structure-oriented evaluation of courses.
//!
//! The pipeline runs in the order of the modules below: a goal structure is
//! defined and confirmed, a questionnaire is prepared against it, survey
//! responses are imported, scored and finally reported.

pub mod document;
pub mod fixtures;
pub mod goal_structure;
pub mod ingest;
pub mod questionnaire;
pub mod report;
pub mod scoring;
pub mod simulate;
pub mod violation;

pub use document::DocumentError;
pub use goal_structure::{
    confirm_structure, parse_structure, validate_structure, ConfirmError, GoalStructure, KeyGoal,
    Status, StructureError, SubGoal,
};
pub use ingest::{
    normalize, parse_responses, IngestError, MissingPolicy, ParticipantRecord, RawAnswer,
    ResponseSet,
};
pub use questionnaire::{
    confirm_questionnaire, default_scale, generate_template, parse_questionnaire,
    render_questionnaire, validate_questionnaire, Question, Questionnaire, QuestionnaireError,
    QuestionnaireFormat, Scale, ScaleLevel,
};
pub use report::{
    build_report, parse_report_json, render_report, Participation, ReportError, ReportFormat,
    ReportOptions, ScoreReport,
};
pub use scoring::{
    key_goal_score, participant_score, score_all, sub_goal_score, AggregateScores,
    ParticipantScore, ScoringError,
};
pub use simulate::{simulate_responses, SimulateError};
pub use violation::{Violation, ViolationCode};
