//! Command implementations behind the `sure` binary.
//!
//! Reports go to the supplied stdout writer (or an output file); every
//! diagnostic goes to stderr. Output files are written to a temporary file
//! in the destination directory and renamed into place, so a failed run never
//! leaves a partial file behind.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use sure_core::goal_structure::parse_structure_unchecked;
use sure_core::{
    build_report, generate_template, parse_questionnaire, parse_responses, render_report,
    score_all, simulate_responses, validate_questionnaire, validate_structure, GoalStructure,
    MissingPolicy, Questionnaire, QuestionnaireError, ReportFormat, ReportOptions, ScoringError,
    Status, Violation,
};

/// Timestamp written instead of the clock under `--reproducible`.
pub const EPOCH_TIMESTAMP: &str = "1970-01-01T00:00:00Z";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    ValidationFailed,
    InputError,
    InternalError,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::ValidationFailed => 1,
            ExitStatus::InputError => 2,
            ExitStatus::InternalError => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "sure",
    version,
    about = "Structure-oriented course evaluation toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PolicyArg {
    Exclude,
    Zero,
}

impl From<PolicyArg> for MissingPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Exclude => MissingPolicy::ExcludeParticipant,
            PolicyArg::Zero => MissingPolicy::TreatAsZero,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Markdown,
    Json,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Markdown => ReportFormat::Markdown,
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a goal-structure file and list every violation.
    Validate { structure: PathBuf },
    /// Write a questionnaire template for a confirmed goal structure.
    Template { structure: PathBuf, out: PathBuf },
    /// Check a questionnaire against its goal structure.
    Check {
        structure: PathBuf,
        questionnaire: PathBuf,
    },
    /// Score a response CSV and render the report.
    Score {
        structure: PathBuf,
        questionnaire: PathBuf,
        responses: PathBuf,
        #[arg(long, value_enum, default_value = "exclude")]
        policy: PolicyArg,
        /// Demographic columns present in the CSV, comma separated.
        #[arg(long, value_delimiter = ',')]
        demographics: Vec<String>,
        /// Number of enrolled students, for the participation rate.
        #[arg(long)]
        enrolled: Option<u64>,
        /// Demographic column(s) to break scores down by.
        #[arg(long, value_delimiter = ',')]
        group_by: Vec<String>,
        #[arg(long, value_enum, default_value = "markdown")]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use a fixed timestamp so repeated runs are byte-identical.
        #[arg(long)]
        reproducible: bool,
    },
    /// Generate a synthetic response CSV.
    Simulate {
        structure: PathBuf,
        questionnaire: PathBuf,
        #[arg(long)]
        participants: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        out: PathBuf,
    },
}

#[derive(Debug)]
struct Failure {
    status: ExitStatus,
    lines: Vec<String>,
}

impl Failure {
    fn input(msg: impl Into<String>) -> Self {
        Self {
            status: ExitStatus::InputError,
            lines: vec![format!("error: {}", msg.into())],
        }
    }

    fn validation(lines: Vec<String>) -> Self {
        Self {
            status: ExitStatus::ValidationFailed,
            lines,
        }
    }

    fn internal(msg: impl Into<String>) -> Self {
        Self {
            status: ExitStatus::InternalError,
            lines: vec![format!("internal error: {}", msg.into())],
        }
    }
}

type CmdResult = Result<(), Failure>;

/// Runs one command, writing the result to `stdout` and diagnostics to `stderr`.
pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> ExitStatus {
    let outcome = match cli.command {
        Command::Validate { structure } => cmd_validate(&structure, stdout),
        Command::Template { structure, out } => cmd_template(&structure, &out, stdout),
        Command::Check {
            structure,
            questionnaire,
        } => cmd_check(&structure, &questionnaire, stdout),
        Command::Score {
            structure,
            questionnaire,
            responses,
            policy,
            demographics,
            enrolled,
            group_by,
            format,
            out,
            reproducible,
        } => cmd_score(
            &ScoreArgs {
                structure,
                questionnaire,
                responses,
                policy: policy.into(),
                demographics,
                enrolled,
                group_by,
                format: format.into(),
                out,
                reproducible,
            },
            stdout,
            stderr,
        ),
        Command::Simulate {
            structure,
            questionnaire,
            participants,
            seed,
            out,
        } => cmd_simulate(&structure, &questionnaire, participants, seed, &out, stdout),
    };
    match outcome {
        Ok(()) => ExitStatus::Success,
        Err(failure) => {
            for line in &failure.lines {
                let _ = writeln!(stderr, "{line}");
            }
            failure.status
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn violation_lines(violations: &[Violation]) -> Vec<String> {
    violations.iter().map(ToString::to_string).collect()
}

fn load_structure(path: &Path) -> Result<(GoalStructure, Vec<Violation>), Failure> {
    let bytes = read(path)?;
    let gs = parse_structure_unchecked(&bytes)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let violations = validate_structure(&gs);
    Ok((gs, violations))
}

/// Structure that must be clean; violations are input errors here.
fn load_valid_structure(path: &Path) -> Result<GoalStructure, Failure> {
    let (gs, violations) = load_structure(path)?;
    if violations.is_empty() {
        Ok(gs)
    } else {
        let mut lines = vec![format!("error: {}: invalid goal structure", path.display())];
        lines.extend(violation_lines(&violations));
        Err(Failure {
            status: ExitStatus::InputError,
            lines,
        })
    }
}

fn load_questionnaire(path: &Path, gs: &GoalStructure) -> Result<Questionnaire, Failure> {
    let bytes = read(path)?;
    let q = parse_questionnaire(&bytes)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let violations = validate_questionnaire(&q, gs);
    if !violations.is_empty() {
        let mut lines = vec![format!(
            "error: {}: questionnaire does not fit the goal structure",
            path.display()
        )];
        lines.extend(violation_lines(&violations));
        return Err(Failure {
            status: ExitStatus::InputError,
            lines,
        });
    }
    Ok(q)
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
fn write_atomic(path: &Path, bytes: &[u8]) -> CmdResult {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)
        .map_err(|e| Failure::input(format!("{}: cannot create output: {e}", path.display())))?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.flush())
        .map_err(|e| Failure::internal(format!("{}: {e}", path.display())))?;
    // temp files are created 0600; outputs are ordinary files
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let _ = fs::set_permissions(tmp.path(), fs::Permissions::from_mode(0o644));
    }
    tmp.persist(path)
        .map_err(|e| Failure::internal(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

fn emit(stdout: &mut dyn Write, text: impl AsRef<[u8]>) -> CmdResult {
    match stdout.write_all(text.as_ref()) {
        // reader went away (e.g. `| head`); nothing left to report to
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        other => other.map_err(|e| Failure::internal(format!("writing output: {e}"))),
    }
}

fn cmd_validate(structure: &Path, stdout: &mut dyn Write) -> CmdResult {
    let (gs, violations) = load_structure(structure)?;
    if !violations.is_empty() {
        return Err(Failure::validation(violation_lines(&violations)));
    }
    emit(
        stdout,
        format!(
            "valid: {} key goals, {} sub goals, status {}\n",
            gs.key_goals.len(),
            gs.sub_goal_count(),
            if gs.is_confirmed() {
                "confirmed"
            } else {
                "draft"
            }
        ),
    )
}

fn cmd_template(structure: &Path, out: &Path, stdout: &mut dyn Write) -> CmdResult {
    let (gs, violations) = load_structure(structure)?;
    if !violations.is_empty() {
        return Err(Failure::validation(violation_lines(&violations)));
    }
    let q = match generate_template(&gs) {
        Ok(q) => q,
        Err(QuestionnaireError::StructureNotConfirmed) => {
            return Err(Failure::validation(vec![format!(
                "structure_not_confirmed: {}: goal structure is a draft; confirm it before preparing a questionnaire",
                structure.display()
            )]))
        }
        Err(e) => return Err(Failure::internal(e.to_string())),
    };
    write_atomic(out, q.to_json().as_bytes())?;
    emit(stdout, format!("{} questions\n", q.questions.len()))
}

fn cmd_check(structure: &Path, questionnaire: &Path, stdout: &mut dyn Write) -> CmdResult {
    let gs = load_valid_structure(structure)?;
    let bytes = read(questionnaire)?;
    let q = parse_questionnaire(&bytes)
        .map_err(|e| Failure::input(format!("{}: {e}", questionnaire.display())))?;
    let violations = validate_questionnaire(&q, &gs);
    if !violations.is_empty() {
        return Err(Failure::validation(violation_lines(&violations)));
    }
    emit(
        stdout,
        format!(
            "valid: {} questions covering {} sub goals, status {}\n",
            q.questions.len(),
            gs.sub_goal_count(),
            if q.status == Status::Confirmed {
                "confirmed"
            } else {
                "draft"
            }
        ),
    )
}

struct ScoreArgs {
    structure: PathBuf,
    questionnaire: PathBuf,
    responses: PathBuf,
    policy: MissingPolicy,
    demographics: Vec<String>,
    enrolled: Option<u64>,
    group_by: Vec<String>,
    format: ReportFormat,
    out: Option<PathBuf>,
    reproducible: bool,
}

fn cmd_score(args: &ScoreArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CmdResult {
    let gs = load_valid_structure(&args.structure)?;
    let q = load_questionnaire(&args.questionnaire, &gs)?;
    let csv = read(&args.responses)?;
    let rs = parse_responses(&csv, &q, &args.demographics, args.policy)
        .map_err(|e| Failure::input(format!("{}: {e}", args.responses.display())))?;
    for w in &rs.warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }

    let (scores, aggregates) = match score_all(&rs, &q, &gs) {
        Ok(v) => v,
        Err(ScoringError::NoData) => {
            return Err(Failure::validation(vec![format!(
                "no_data: {}: no participants left to score ({} rows read)",
                args.responses.display(),
                rs.rows_read
            )]))
        }
        Err(e) => return Err(Failure::input(e.to_string())),
    };

    let generated_at = if args.reproducible {
        EPOCH_TIMESTAMP.to_string()
    } else {
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
    };
    let options = ReportOptions {
        participation: args
            .enrolled
            .map(|enrolled| (rs.rows_read as u64, enrolled)),
        group_by: args.group_by.clone(),
        generated_at,
    };
    let report = build_report(&scores, &aggregates, &gs, &q, &rs, &options)
        .map_err(|e| Failure::input(e.to_string()))?;
    let bytes = render_report(&report, args.format);
    match &args.out {
        Some(path) => write_atomic(path, &bytes),
        None => emit(stdout, bytes),
    }
}

fn cmd_simulate(
    structure: &Path,
    questionnaire: &Path,
    participants: usize,
    seed: u64,
    out: &Path,
    stdout: &mut dyn Write,
) -> CmdResult {
    if participants < 1 {
        return Err(Failure::input("--participants must be at least 1"));
    }
    let gs = load_valid_structure(structure)?;
    let q = load_questionnaire(questionnaire, &gs)?;
    let csv =
        simulate_responses(&q, participants, seed).map_err(|e| Failure::input(e.to_string()))?;
    write_atomic(out, csv.as_bytes())?;
    emit(stdout, format!("{participants} participants written\n"))
}
