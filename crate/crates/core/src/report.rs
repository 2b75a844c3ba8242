//! Report assembly and rendering (markdown, JSON, CSV).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::{from_json, DocumentError};
use crate::goal_structure::{GoalStructure, KeyGoal};
use crate::ingest::ResponseSet;
use crate::questionnaire::{md_escape, Questionnaire};
use crate::scoring::{score_all, AggregateScores, ParticipantScore, ScoringError};

pub const HISTOGRAM_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Participation {
    pub respondents: u64,
    pub enrolled: u64,
    /// Percentage rounded half-up to two decimals.
    pub rate_percent: f64,
}

impl Participation {
    pub fn new(respondents: u64, enrolled: u64) -> Result<Self, ReportError> {
        if enrolled == 0 || enrolled < respondents {
            return Err(ReportError::Enrollment {
                respondents,
                enrolled,
            });
        }
        // hundredths of a percent, half-up, in exact integer arithmetic
        let scaled = u128::from(respondents) * 10_000;
        let enrolled_wide = u128::from(enrolled);
        let hundredths = (2 * scaled + enrolled_wide) / (2 * enrolled_wide);
        Ok(Self {
            respondents,
            enrolled,
            rate_percent: hundredths as f64 / 100.0,
        })
    }

    /// The rate as printed, e.g. `51.98%`.
    pub fn rate_label(&self) -> String {
        format!("{}%", fixed2(self.rate_percent))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub title: String,
    pub version: String,
    pub generated_at: String,
    /// Goal ids and labels in structure order.
    pub goals: Vec<KeyGoal>,
    pub aggregates: AggregateScores,
    pub participants: Vec<ParticipantScore>,
    pub histogram: [usize; HISTOGRAM_BINS],
    pub participation: Option<Participation>,
    /// demographic key -> group value -> aggregates over that group
    pub groups: Option<BTreeMap<String, BTreeMap<String, AggregateScores>>>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReportOptions {
    /// `(respondents, enrolled)`.
    pub participation: Option<(u64, u64)>,
    pub group_by: Vec<String>,
    pub generated_at: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error("group-by key \"{0}\" is not a declared demographic column")]
    UnknownGroupKey(String),
    #[error(
        "enrolled count {enrolled} must be positive and at least the {respondents} respondents"
    )]
    Enrollment { respondents: u64, enrolled: u64 },
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

/// Rounds half-up to two decimals, working on the shortest decimal form of `x`
/// so that a printed `0.745` becomes `0.75`.
pub fn fixed2(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let text = format!("{}", x.abs());
    let (int_part, frac_part) = text.split_once('.').unwrap_or((&text, ""));
    let digit = |i: usize| u128::from(frac_part.as_bytes().get(i).map_or(0, |b| b - b'0'));
    let int: u128 = int_part.parse().unwrap_or(0);
    let mut hundredths = int * 100 + digit(0) * 10 + digit(1);
    if digit(2) >= 5 {
        hundredths += 1;
    }
    let sign = if x.is_sign_negative() && hundredths != 0 {
        "-"
    } else {
        ""
    };
    format!("{sign}{}.{:02}", hundredths / 100, hundredths % 100)
}

fn histogram(scores: &[ParticipantScore]) -> [usize; HISTOGRAM_BINS] {
    let mut bins = [0; HISTOGRAM_BINS];
    for s in scores {
        let bin = ((s.overall * HISTOGRAM_BINS as f64).floor() as usize).min(HISTOGRAM_BINS - 1);
        bins[bin] += 1;
    }
    bins
}

/// Collects the four score levels and optional participation and group blocks.
///
/// Group blocks rerun the full scoring over each group's participants.
pub fn build_report(
    scores: &[ParticipantScore],
    aggregates: &AggregateScores,
    gs: &GoalStructure,
    q: &Questionnaire,
    rs: &ResponseSet,
    options: &ReportOptions,
) -> Result<ScoreReport, ReportError> {
    let participation = options
        .participation
        .map(|(respondents, enrolled)| Participation::new(respondents, enrolled))
        .transpose()?;

    let groups = if options.group_by.is_empty() {
        None
    } else {
        let mut groups = BTreeMap::new();
        for key in &options.group_by {
            if !rs.demographics.contains(key) {
                return Err(ReportError::UnknownGroupKey(key.clone()));
            }
            let mut members: BTreeMap<String, ResponseSet> = BTreeMap::new();
            for p in &rs.participants {
                let value = p.demographics.get(key).cloned().unwrap_or_default();
                members
                    .entry(value)
                    .or_insert_with(|| rs.emptied())
                    .participants
                    .push(p.clone());
            }
            let mut by_value = BTreeMap::new();
            for (value, subset) in members {
                let (_, agg) = score_all(&subset, q, gs)?;
                by_value.insert(value, agg);
            }
            groups.insert(key.clone(), by_value);
        }
        Some(groups)
    };

    Ok(ScoreReport {
        title: gs.title.clone(),
        version: gs.version.clone(),
        generated_at: options.generated_at.clone(),
        goals: gs.key_goals.clone(),
        aggregates: aggregates.clone(),
        participants: scores.to_vec(),
        histogram: histogram(scores),
        participation,
        groups,
        warnings: rs.warnings.clone(),
    })
}

impl ScoreReport {
    /// Sub-goal ids holding the lowest and highest aggregate; ties are all included.
    pub fn extreme_sub_goals(&self) -> (Vec<&str>, Vec<&str>) {
        let values = &self.aggregates.sub_goal;
        let min = values.values().copied().fold(f64::INFINITY, f64::min);
        let max = values.values().copied().fold(f64::NEG_INFINITY, f64::max);
        let pick = |target: f64| {
            values
                .iter()
                .filter(|(_, v)| **v == target)
                .map(|(k, _)| k.as_str())
                .collect()
        };
        (pick(min), pick(max))
    }
}

pub fn render_report(r: &ScoreReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Markdown => render_markdown(r).into_bytes(),
        ReportFormat::Json => render_json(r).into_bytes(),
        ReportFormat::Csv => render_csv(r).into_bytes(),
    }
}

fn render_markdown(r: &ScoreReport) -> String {
    let agg = &r.aggregates;
    let mut out = String::new();
    let _ = writeln!(out, "# Evaluation report: {}", md_escape(&r.title));
    let _ = writeln!(out);
    let _ = writeln!(out, "Structure version: {}", md_escape(&r.version));
    let _ = writeln!(out, "Generated: {}", md_escape(&r.generated_at));

    let _ = writeln!(out, "\n## General\n");
    let _ = writeln!(out, "| Metric | Value |");
    let _ = writeln!(out, "|---|---:|");
    let _ = writeln!(
        out,
        "| General evaluation score | {} |",
        fixed2(agg.general)
    );
    let _ = writeln!(out, "| Participants scored | {} |", agg.n_participants);

    let _ = writeln!(out, "\n## Key goals\n");
    let _ = writeln!(out, "| Key goal | Score | Label |");
    let _ = writeln!(out, "|---|---:|---|");
    for key in &r.goals {
        let score = agg.key_goal.get(&key.id).copied().unwrap_or(f64::NAN);
        let _ = writeln!(
            out,
            "| {} | {} | {} |",
            md_escape(&key.id),
            fixed2(score),
            md_escape(&key.label)
        );
    }

    let (lowest, highest) = r.extreme_sub_goals();
    let _ = writeln!(out, "\n## Sub goals");
    for key in &r.goals {
        let _ = writeln!(
            out,
            "\n### {} {}\n",
            md_escape(&key.id),
            md_escape(&key.label)
        );
        let _ = writeln!(out, "| Sub goal | Score | Label | Note |");
        let _ = writeln!(out, "|---|---:|---|---|");
        for sub in &key.sub_goals {
            let score = agg.sub_goal.get(&sub.id).copied().unwrap_or(f64::NAN);
            let mut notes = Vec::new();
            if lowest.contains(&sub.id.as_str()) {
                notes.push("lowest");
            }
            if highest.contains(&sub.id.as_str()) {
                notes.push("highest");
            }
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} |",
                md_escape(&sub.id),
                fixed2(score),
                md_escape(&sub.label),
                notes.join(", ")
            );
        }
    }

    let _ = writeln!(out, "\n## Distribution\n");
    let _ = writeln!(out, "| Statistic | Count |");
    let _ = writeln!(out, "|---|---:|");
    let _ = writeln!(out, "| Participants | {} |", agg.n_participants);
    let _ = writeln!(out, "| Overall score exactly 1 | {} |", agg.n_overall_max);
    let _ = writeln!(out, "| Overall score exactly 0 | {} |", agg.n_overall_zero);
    let _ = writeln!(out);
    let _ = writeln!(out, "| Overall score | Participants |");
    let _ = writeln!(out, "|---|---:|");
    for (i, count) in r.histogram.iter().enumerate() {
        let close = if i + 1 == HISTOGRAM_BINS { "]" } else { ")" };
        let _ = writeln!(
            out,
            "| [{}, {}{} | {} |",
            fixed2(i as f64 / HISTOGRAM_BINS as f64),
            fixed2((i + 1) as f64 / HISTOGRAM_BINS as f64),
            close,
            count
        );
    }

    let _ = writeln!(out, "\n## Participation\n");
    match &r.participation {
        Some(p) => {
            let _ = writeln!(out, "| Respondents | Enrolled | Rate |");
            let _ = writeln!(out, "|---:|---:|---:|");
            let _ = writeln!(
                out,
                "| {} | {} | {} |",
                p.respondents,
                p.enrolled,
                p.rate_label()
            );
        }
        None => {
            let _ = writeln!(out, "Not provided.");
        }
    }

    let _ = writeln!(out, "\n## Groups\n");
    match &r.groups {
        Some(groups) => {
            let mut first = true;
            for (key, by_value) in groups {
                if !first {
                    let _ = writeln!(out);
                }
                first = false;
                let _ = writeln!(out, "### {}\n", md_escape(key));
                let mut header = String::from("| Group | Participants | General |");
                let mut rule = String::from("|---|---:|---:|");
                for goal in &r.goals {
                    let _ = write!(header, " {} |", md_escape(&goal.id));
                    rule.push_str("---:|");
                }
                let _ = writeln!(out, "{header}");
                let _ = writeln!(out, "{rule}");
                for (value, group) in by_value {
                    let _ = write!(
                        out,
                        "| {} | {} | {} |",
                        md_escape(value),
                        group.n_participants,
                        fixed2(group.general)
                    );
                    for goal in &r.goals {
                        let score = group.key_goal.get(&goal.id).copied().unwrap_or(f64::NAN);
                        let _ = write!(out, " {} |", fixed2(score));
                    }
                    let _ = writeln!(out);
                }
            }
        }
        None => {
            let _ = writeln!(out, "None.");
        }
    }

    let _ = writeln!(out, "\n## Warnings\n");
    if r.warnings.is_empty() {
        let _ = writeln!(out, "None.");
    } else {
        for w in &r.warnings {
            let _ = writeln!(out, "- {}", w);
        }
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonSubGoal {
    id: String,
    label: String,
    score: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonKeyGoal {
    id: String,
    label: String,
    score: f64,
    sub_goals: Vec<JsonSubGoal>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonParticipant {
    id: String,
    overall: f64,
    key_goals: IndexMap<String, f64>,
    sub_goals: IndexMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonDistribution {
    n: usize,
    n_max: usize,
    n_zero: usize,
    histogram: [usize; HISTOGRAM_BINS],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonReport {
    title: String,
    version: String,
    generated_at: String,
    general: f64,
    key_goals: Vec<JsonKeyGoal>,
    participants: Vec<JsonParticipant>,
    distribution: JsonDistribution,
    participation: Option<Participation>,
    groups: Option<BTreeMap<String, BTreeMap<String, AggregateScores>>>,
    warnings: Vec<String>,
}

fn render_json(r: &ScoreReport) -> String {
    let agg = &r.aggregates;
    let wire = JsonReport {
        title: r.title.clone(),
        version: r.version.clone(),
        generated_at: r.generated_at.clone(),
        general: agg.general,
        key_goals: r
            .goals
            .iter()
            .map(|k| JsonKeyGoal {
                id: k.id.clone(),
                label: k.label.clone(),
                score: agg.key_goal.get(&k.id).copied().unwrap_or(f64::NAN),
                sub_goals: k
                    .sub_goals
                    .iter()
                    .map(|s| JsonSubGoal {
                        id: s.id.clone(),
                        label: s.label.clone(),
                        score: agg.sub_goal.get(&s.id).copied().unwrap_or(f64::NAN),
                    })
                    .collect(),
            })
            .collect(),
        participants: r
            .participants
            .iter()
            .map(|p| JsonParticipant {
                id: p.participant_id.clone(),
                overall: p.overall,
                key_goals: p.key_goal_scores.clone(),
                sub_goals: p.sub_goal_scores.clone(),
            })
            .collect(),
        distribution: JsonDistribution {
            n: agg.n_participants,
            n_max: agg.n_overall_max,
            n_zero: agg.n_overall_zero,
            histogram: r.histogram,
        },
        participation: r.participation,
        groups: r.groups.clone(),
        warnings: r.warnings.clone(),
    };
    let mut s = serde_json::to_string_pretty(&wire).expect("report serializes");
    s.push('\n');
    s
}

/// Reads a report back from its JSON rendering.
pub fn parse_report_json(bytes: &[u8]) -> Result<ScoreReport, DocumentError> {
    let wire: JsonReport = from_json(bytes)?;
    let mut key_goal = IndexMap::new();
    let mut sub_goal = IndexMap::new();
    let mut goals = Vec::with_capacity(wire.key_goals.len());
    for k in wire.key_goals {
        key_goal.insert(k.id.clone(), k.score);
        let mut subs = Vec::with_capacity(k.sub_goals.len());
        for s in k.sub_goals {
            sub_goal.insert(s.id.clone(), s.score);
            subs.push(crate::goal_structure::SubGoal {
                id: s.id,
                label: s.label,
            });
        }
        goals.push(KeyGoal {
            id: k.id,
            label: k.label,
            sub_goals: subs,
        });
    }
    Ok(ScoreReport {
        title: wire.title,
        version: wire.version,
        generated_at: wire.generated_at,
        goals,
        aggregates: AggregateScores {
            general: wire.general,
            key_goal,
            sub_goal,
            n_participants: wire.distribution.n,
            n_overall_max: wire.distribution.n_max,
            n_overall_zero: wire.distribution.n_zero,
        },
        participants: wire
            .participants
            .into_iter()
            .map(|p| ParticipantScore {
                participant_id: p.id,
                sub_goal_scores: p.sub_goals,
                key_goal_scores: p.key_goals,
                overall: p.overall,
            })
            .collect(),
        histogram: wire.distribution.histogram,
        participation: wire.participation,
        groups: wire.groups,
        warnings: wire.warnings,
    })
}

struct CsvSections {
    out: String,
}

impl CsvSections {
    fn section<I, R>(&mut self, name: &str, header: &[&str], rows: I)
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator,
        R::Item: AsRef<[u8]>,
    {
        if !self.out.is_empty() {
            self.out.push('\n');
        }
        let _ = writeln!(self.out, "# {name}");
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .flexible(true)
            .from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        for row in rows {
            w.write_record(row).expect("in-memory write");
        }
        let bytes = w.into_inner().expect("in-memory flush");
        self.out
            .push_str(&String::from_utf8(bytes).expect("utf-8 fields"));
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn render_csv(r: &ScoreReport) -> String {
    let agg = &r.aggregates;
    let mut doc = CsvSections { out: String::new() };

    doc.section(
        "general",
        &["title", "version", "generated_at", "general", "n"],
        [vec![
            r.title.clone(),
            r.version.clone(),
            r.generated_at.clone(),
            num(agg.general),
            agg.n_participants.to_string(),
        ]],
    );

    doc.section(
        "key_goals",
        &["id", "label", "score"],
        r.goals.iter().map(|k| {
            vec![
                k.id.clone(),
                k.label.clone(),
                num(agg.key_goal.get(&k.id).copied().unwrap_or(f64::NAN)),
            ]
        }),
    );

    doc.section(
        "sub_goals",
        &["key_goal", "id", "label", "score"],
        r.goals.iter().flat_map(|k| {
            k.sub_goals.iter().map(move |s| {
                vec![
                    k.id.clone(),
                    s.id.clone(),
                    s.label.clone(),
                    num(agg.sub_goal.get(&s.id).copied().unwrap_or(f64::NAN)),
                ]
            })
        }),
    );

    let mut participant_header = vec!["participant_id".to_string(), "overall".to_string()];
    participant_header.extend(r.goals.iter().map(|k| k.id.clone()));
    participant_header.extend(
        r.goals
            .iter()
            .flat_map(|k| k.sub_goals.iter().map(|s| s.id.clone())),
    );
    let header_refs: Vec<&str> = participant_header.iter().map(String::as_str).collect();
    doc.section(
        "participants",
        &header_refs,
        r.participants.iter().map(|p| {
            let mut row = vec![p.participant_id.clone(), num(p.overall)];
            row.extend(p.key_goal_scores.values().map(|v| num(*v)));
            row.extend(p.sub_goal_scores.values().map(|v| num(*v)));
            row
        }),
    );

    doc.section(
        "distribution",
        &["n", "n_max", "n_zero"],
        [[agg.n_participants, agg.n_overall_max, agg.n_overall_zero].map(|v| v.to_string())],
    );

    doc.section(
        "histogram",
        &["bin", "lower", "upper", "count"],
        r.histogram.iter().enumerate().map(|(i, count)| {
            vec![
                i.to_string(),
                num(i as f64 / HISTOGRAM_BINS as f64),
                num((i + 1) as f64 / HISTOGRAM_BINS as f64),
                count.to_string(),
            ]
        }),
    );

    doc.section(
        "participation",
        &["respondents", "enrolled", "rate_percent"],
        r.participation.iter().map(|p| {
            vec![
                p.respondents.to_string(),
                p.enrolled.to_string(),
                fixed2(p.rate_percent),
            ]
        }),
    );

    let mut group_header = vec![
        "key".to_string(),
        "value".to_string(),
        "n".to_string(),
        "general".to_string(),
    ];
    group_header.extend(r.goals.iter().map(|k| k.id.clone()));
    let group_refs: Vec<&str> = group_header.iter().map(String::as_str).collect();
    let group_rows: Vec<Vec<String>> = r
        .groups
        .iter()
        .flatten()
        .flat_map(|(key, by_value)| {
            by_value.iter().map(move |(value, g)| {
                let mut row = vec![
                    key.clone(),
                    value.clone(),
                    g.n_participants.to_string(),
                    num(g.general),
                ];
                row.extend(
                    r.goals
                        .iter()
                        .map(|k| num(g.key_goal.get(&k.id).copied().unwrap_or(f64::NAN))),
                );
                row
            })
        })
        .collect();
    doc.section("groups", &group_refs, group_rows);

    doc.section(
        "warnings",
        &["warning"],
        r.warnings.iter().map(|w| [w.as_str()]),
    );
    doc.out
}
