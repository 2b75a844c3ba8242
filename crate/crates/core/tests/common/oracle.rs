//! Naive reference evaluator over a raw answer matrix.
//!
//! Deliberately shares nothing with the engine: it works on plain vectors,
//! resolves missing answers itself, and evaluates the any-of combination by
//! inclusion-exclusion over all non-empty subsets of sub goals instead of
//! the complement product.

#![allow(dead_code)]

use rand::Rng;

pub const LEVELS: u32 = 5;

/// Goal tree by shape only: `shape[i][j]` = number of questions of sub goal j of key goal i.
#[derive(Debug, Clone)]
pub struct Instance {
    pub shape: Vec<Vec<usize>>,
    /// One row per participant, one cell per question in tree order.
    pub rows: Vec<Vec<Option<u32>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub participants: Vec<OracleParticipant>,
    pub general: f64,
    pub key: Vec<f64>,
    pub sub: Vec<Vec<f64>>,
    pub n_max: usize,
    pub n_zero: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleParticipant {
    pub row: usize,
    pub sub: Vec<Vec<f64>>,
    pub key: Vec<f64>,
    pub overall: f64,
}

impl Instance {
    pub fn question_count(&self) -> usize {
        self.shape.iter().flatten().sum()
    }

    pub fn random(rng: &mut impl Rng, with_missing: bool) -> Self {
        let keys = rng.gen_range(1..=5);
        let shape: Vec<Vec<usize>> = (0..keys)
            .map(|_| {
                let subs = rng.gen_range(1..=6);
                (0..subs)
                    .map(|_| {
                        if rng.gen_bool(0.2) {
                            rng.gen_range(2..=3)
                        } else {
                            1
                        }
                    })
                    .collect()
            })
            .collect();
        let questions: usize = shape.iter().flatten().sum();
        let n = rng.gen_range(1..=50);
        let rows = (0..n)
            .map(|_| {
                (0..questions)
                    .map(|_| {
                        if with_missing && rng.gen_bool(0.02) {
                            None
                        } else {
                            Some(rng.gen_range(0..LEVELS))
                        }
                    })
                    .collect()
            })
            .collect();
        Instance { shape, rows }
    }

    pub fn key_id(i: usize) -> String {
        format!("K{}", i + 1)
    }

    pub fn sub_id(i: usize, j: usize) -> String {
        format!("S{}_{}", i + 1, j + 1)
    }

    pub fn question_id(i: usize, j: usize, k: usize) -> String {
        format!("q{}_{}_{}", i + 1, j + 1, k + 1)
    }

    pub fn structure_json(&self) -> String {
        let keys: Vec<String> = self
            .shape
            .iter()
            .enumerate()
            .map(|(i, subs)| {
                let subs: Vec<String> = (0..subs.len())
                    .map(|j| {
                        format!(
                            r#"{{"id": "{}", "label": "sub {i} {j}"}}"#,
                            Self::sub_id(i, j)
                        )
                    })
                    .collect();
                format!(
                    r#"{{"id": "{}", "label": "key {i}", "sub_goals": [{}]}}"#,
                    Self::key_id(i),
                    subs.join(", ")
                )
            })
            .collect();
        format!(
            r#"{{"title": "random", "version": "r1", "status": "confirmed",
                "confirmation": {{"approvers": ["oracle"], "date": "today"}},
                "key_goals": [{}]}}"#,
            keys.join(", ")
        )
    }

    pub fn questionnaire_json(&self) -> String {
        let mut questions = Vec::new();
        for (i, subs) in self.shape.iter().enumerate() {
            for (j, count) in subs.iter().enumerate() {
                for k in 0..*count {
                    questions.push(format!(
                        r#"{{"id": "{}", "text": "?", "sub_goal": "{}"}}"#,
                        Self::question_id(i, j, k),
                        Self::sub_id(i, j)
                    ));
                }
            }
        }
        let scale: Vec<String> = (0..LEVELS)
            .map(|c| format!(r#"{{"code": {c}, "label": "level {c}"}}"#))
            .collect();
        format!(
            r#"{{"structure_version": "r1", "status": "confirmed", "scale": [{}], "questions": [{}]}}"#,
            scale.join(", "),
            questions.join(", ")
        )
    }

    pub fn csv(&self) -> String {
        let mut header = vec!["participant_id".to_string()];
        for (i, subs) in self.shape.iter().enumerate() {
            for (j, count) in subs.iter().enumerate() {
                for k in 0..*count {
                    header.push(Self::question_id(i, j, k));
                }
            }
        }
        let mut out = header.join(",");
        out.push('\n');
        for (r, row) in self.rows.iter().enumerate() {
            out.push_str(&format!("r{r}"));
            for cell in row {
                out.push(',');
                if let Some(v) = cell {
                    out.push_str(&v.to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

fn any_of(values: &[f64]) -> f64 {
    let n = values.len();
    let mut total = 0.0;
    for mask in 1u32..(1 << n) {
        let mut term = 1.0;
        for (b, v) in values.iter().enumerate() {
            if mask & (1 << b) != 0 {
                term *= v;
            }
        }
        if mask.count_ones() % 2 == 1 {
            total += term;
        } else {
            total -= term;
        }
    }
    total
}

fn all_of(values: &[f64]) -> f64 {
    let mut acc = 1.0;
    for v in values {
        acc *= v;
    }
    acc
}

/// Evaluates the instance; `zero_fill` selects the policy (true = missing scored as level 0).
pub fn evaluate(inst: &Instance, zero_fill: bool) -> Option<OracleResult> {
    let mut participants = Vec::new();
    for (r, row) in inst.rows.iter().enumerate() {
        if !zero_fill && row.iter().any(Option::is_none) {
            continue;
        }
        let mut cursor = 0;
        let mut sub = Vec::new();
        let mut key = Vec::new();
        for subs in &inst.shape {
            let mut sub_values = Vec::new();
            for count in subs {
                let mut total = 0.0;
                for _ in 0..*count {
                    let code = row[cursor].unwrap_or(0);
                    total += code as f64 / (LEVELS - 1) as f64;
                    cursor += 1;
                }
                sub_values.push(total / *count as f64);
            }
            key.push(any_of(&sub_values));
            sub.push(sub_values);
        }
        let overall = all_of(&key);
        participants.push(OracleParticipant {
            row: r,
            sub,
            key,
            overall,
        });
    }
    if participants.is_empty() {
        return None;
    }
    let n = participants.len() as f64;
    let mean = |f: &dyn Fn(&OracleParticipant) -> f64| participants.iter().map(f).sum::<f64>() / n;
    let general = mean(&|p| p.overall);
    let key = (0..inst.shape.len()).map(|i| mean(&|p| p.key[i])).collect();
    let sub = inst
        .shape
        .iter()
        .enumerate()
        .map(|(i, subs)| (0..subs.len()).map(|j| mean(&|p| p.sub[i][j])).collect())
        .collect();
    let n_max = participants
        .iter()
        .filter(|p| (p.overall - 1.0).abs() < 1e-9)
        .count();
    let n_zero = participants
        .iter()
        .filter(|p| p.overall.abs() < 1e-9)
        .count();
    Some(OracleResult {
        participants,
        general,
        key,
        sub,
        n_max,
        n_zero,
    })
}
