//! Evaluation scores at four levels.
//!
//! Sub goals of one key goal combine in parallel (any one reached is enough):
//! `Q_i = 1 - prod_j (1 - q_ij)`. Key goals combine in series (all must be
//! reached): `Q = prod_i Q_i`. Cross-participant aggregates are arithmetic
//! means summed in participant order, so results are bit-reproducible.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::goal_structure::GoalStructure;
use crate::ingest::{normalize, ParticipantRecord, RawAnswer, ResponseSet};
use crate::questionnaire::{validate_questionnaire, Questionnaire};
use crate::violation::{join_violations, Violation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantScore {
    pub participant_id: String,
    /// `q_ij` per sub goal, structure order.
    pub sub_goal_scores: IndexMap<String, f64>,
    /// `Q_i` per key goal, structure order.
    pub key_goal_scores: IndexMap<String, f64>,
    pub overall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregateScores {
    pub general: f64,
    #[serde(rename = "key_goals")]
    pub key_goal: IndexMap<String, f64>,
    #[serde(rename = "sub_goals")]
    pub sub_goal: IndexMap<String, f64>,
    #[serde(rename = "n")]
    pub n_participants: usize,
    #[serde(rename = "n_max")]
    pub n_overall_max: usize,
    #[serde(rename = "n_zero")]
    pub n_overall_zero: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoringError {
    #[error("cannot combine an empty list of scores")]
    EmptyInput,
    #[error("score {0} lies outside [0, 1]")]
    ValueOutOfRange(f64),
    #[error("sub goal \"{0}\" is not measured by any question")]
    NoQuestions(String),
    #[error("participant \"{participant}\" has no answer for question \"{question}\"")]
    MissingAnswer {
        participant: String,
        question: String,
    },
    #[error("participant \"{participant}\" answered {code} to \"{question}\", outside the scale")]
    AnswerOutOfRange {
        participant: String,
        question: String,
        code: u32,
    },
    #[error("questionnaire does not fit the goal structure: {}", join_violations(.0))]
    InvalidQuestionnaire(Vec<Violation>),
    #[error("no_data: no participants left to score")]
    NoData,
}

fn check_unit(values: &[f64]) -> Result<(), ScoringError> {
    if values.is_empty() {
        return Err(ScoringError::EmptyInput);
    }
    match values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(v) => Err(ScoringError::ValueOutOfRange(*v)),
        None => Ok(()),
    }
}

/// Mean of the normalized answers to the questions measuring `sub_goal`.
pub fn sub_goal_score(
    participant: &ParticipantRecord,
    sub_goal: &str,
    q: &Questionnaire,
) -> Result<f64, ScoringError> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for question in q.questions_for(sub_goal) {
        let code = match participant.answers.get(&question.id) {
            Some(RawAnswer::Level(code)) => *code,
            Some(RawAnswer::Missing) | None => {
                return Err(ScoringError::MissingAnswer {
                    participant: participant.participant_id.clone(),
                    question: question.id.clone(),
                })
            }
        };
        sum += normalize(code, &q.scale).map_err(|_| ScoringError::AnswerOutOfRange {
            participant: participant.participant_id.clone(),
            question: question.id.clone(),
            code,
        })?;
        count += 1;
    }
    if count == 0 {
        return Err(ScoringError::NoQuestions(sub_goal.to_string()));
    }
    Ok(sum / count as f64)
}

/// Parallel combination: `1 - prod (1 - q_ij)`.
pub fn key_goal_score(sub_scores: &[f64]) -> Result<f64, ScoringError> {
    check_unit(sub_scores)?;
    Ok(parallel(sub_scores))
}

/// Series combination: `prod Q_i`.
pub fn participant_score(key_scores: &[f64]) -> Result<f64, ScoringError> {
    check_unit(key_scores)?;
    Ok(series(key_scores))
}

fn parallel(sub_scores: &[f64]) -> f64 {
    let miss: f64 = sub_scores.iter().map(|q| 1.0 - q).product();
    let best = sub_scores.iter().copied().fold(0.0, f64::max);
    // the complement can round a hair below the best branch; the exact value never is
    (1.0 - miss).max(best)
}

fn series(key_scores: &[f64]) -> f64 {
    key_scores.iter().product()
}

/// (sub goal id, question indices)
type SubPlan<'a> = (&'a str, Vec<usize>);

/// Question positions per sub goal, resolved once for a whole run.
struct Plan<'a> {
    questions: &'a Questionnaire,
    /// (key goal id, sub goal plans)
    key_goals: Vec<(&'a str, Vec<SubPlan<'a>>)>,
    sub_template: IndexMap<String, f64>,
    key_template: IndexMap<String, f64>,
}

impl<'a> Plan<'a> {
    fn new(q: &'a Questionnaire, gs: &'a GoalStructure) -> Self {
        let key_goals: Vec<(&str, Vec<SubPlan>)> = gs
            .key_goals
            .iter()
            .map(|key| {
                let subs = key
                    .sub_goals
                    .iter()
                    .map(|sub| {
                        let idx = q
                            .questions
                            .iter()
                            .enumerate()
                            .filter(|(_, x)| x.sub_goal == sub.id)
                            .map(|(i, _)| i)
                            .collect();
                        (sub.id.as_str(), idx)
                    })
                    .collect();
                (key.id.as_str(), subs)
            })
            .collect();
        let sub_template = gs.sub_goals().map(|s| (s.id.clone(), 0.0)).collect();
        let key_template = gs.key_goals.iter().map(|k| (k.id.clone(), 0.0)).collect();
        Self {
            questions: q,
            key_goals,
            sub_template,
            key_template,
        }
    }

    fn answer(&self, p: &ParticipantRecord, question: usize) -> Result<f64, ScoringError> {
        let id = &self.questions.questions[question].id;
        // ingest stores answers in questionnaire order; fall back to a lookup otherwise
        let raw = match p.answers.get_index(question) {
            Some((key, raw)) if key == id => Some(raw),
            _ => p.answers.get(id),
        };
        let code = match raw {
            Some(RawAnswer::Level(code)) => *code,
            _ => {
                return Err(ScoringError::MissingAnswer {
                    participant: p.participant_id.clone(),
                    question: id.clone(),
                })
            }
        };
        normalize(code, &self.questions.scale).map_err(|_| ScoringError::AnswerOutOfRange {
            participant: p.participant_id.clone(),
            question: id.clone(),
            code,
        })
    }

    fn score(&self, p: &ParticipantRecord) -> Result<ParticipantScore, ScoringError> {
        let mut sub_goal_scores = self.sub_template.clone();
        let mut key_goal_scores = self.key_template.clone();
        let mut key_values = Vec::with_capacity(self.key_goals.len());
        let mut sub_slot = 0;
        let mut values = Vec::new();
        for (key_slot, (_, subs)) in self.key_goals.iter().enumerate() {
            values.clear();
            for (_, questions) in subs {
                let mut sum = 0.0;
                for &question in questions {
                    sum += self.answer(p, question)?;
                }
                let value = sum / questions.len() as f64;
                sub_goal_scores[sub_slot] = value;
                sub_slot += 1;
                values.push(value);
            }
            let key_value = parallel(&values);
            key_goal_scores[key_slot] = key_value;
            key_values.push(key_value);
        }
        Ok(ParticipantScore {
            participant_id: p.participant_id.clone(),
            sub_goal_scores,
            key_goal_scores,
            overall: series(&key_values),
        })
    }
}

/// Means over `scores` in slice order. `scores` must be non-empty and share one structure.
pub fn aggregate(scores: &[ParticipantScore]) -> Result<AggregateScores, ScoringError> {
    let first = scores.first().ok_or(ScoringError::NoData)?;
    let n = scores.len() as f64;
    let mut key_goal: IndexMap<String, f64> = first
        .key_goal_scores
        .keys()
        .map(|k| (k.clone(), 0.0))
        .collect();
    let mut sub_goal: IndexMap<String, f64> = first
        .sub_goal_scores
        .keys()
        .map(|k| (k.clone(), 0.0))
        .collect();
    let mut general = 0.0;
    let (mut n_max, mut n_zero) = (0, 0);
    for s in scores {
        general += s.overall;
        for (acc, v) in key_goal.values_mut().zip(s.key_goal_scores.values()) {
            *acc += v;
        }
        for (acc, v) in sub_goal.values_mut().zip(s.sub_goal_scores.values()) {
            *acc += v;
        }
        if s.overall == 1.0 {
            n_max += 1;
        } else if s.overall == 0.0 {
            n_zero += 1;
        }
    }
    key_goal.values_mut().for_each(|v| *v /= n);
    sub_goal.values_mut().for_each(|v| *v /= n);
    Ok(AggregateScores {
        general: general / n,
        key_goal,
        sub_goal,
        n_participants: scores.len(),
        n_overall_max: n_max,
        n_overall_zero: n_zero,
    })
}

/// Scores every retained participant and aggregates over them.
pub fn score_all(
    rs: &ResponseSet,
    q: &Questionnaire,
    gs: &GoalStructure,
) -> Result<(Vec<ParticipantScore>, AggregateScores), ScoringError> {
    let violations = validate_questionnaire(q, gs);
    if !violations.is_empty() {
        return Err(ScoringError::InvalidQuestionnaire(violations));
    }
    if rs.participants.is_empty() {
        return Err(ScoringError::NoData);
    }
    let plan = Plan::new(q, gs);
    let scores = rs
        .participants
        .iter()
        .map(|p| plan.score(p))
        .collect::<Result<Vec<_>, _>>()?;
    let aggregates = aggregate(&scores)?;
    Ok((scores, aggregates))
}
