//! Workload ingestion: raw log rows to deduplicated, labeled, split datasets.

mod aggregate;
mod parse;
mod pipeline;
mod session;
mod split;
pub(crate) mod stats;

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::sqltext::SyntacticProfile;
use crate::{Error, Result};

pub use aggregate::dedup_and_aggregate;
pub use parse::{parse_workload_file, parse_workload_str, Delimiter, FormatSpec, ParseOutcome, SkipReport, SkippedRow};
pub use pipeline::{build_dataset, PipelineStats};
pub use session::{sample_one_per_session, sessionize, Session, SESSION_GAP_SECS};
pub use split::{split, Fractions};
pub use stats::{label_stats, ClassShare, LabelStats, NumericSummary};

/// Statement text substituted for empty log statements.
pub const EMPTY_STATEMENT: &str = "Empty";

/// Ternary execution outcome of a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    Severe,
    Success,
    NonSevere,
}

impl ErrorClass {
    pub const ALL: [ErrorClass; 3] = [ErrorClass::Severe, ErrorClass::Success, ErrorClass::NonSevere];

    pub fn code(self) -> i8 {
        match self {
            ErrorClass::Severe => -1,
            ErrorClass::Success => 0,
            ErrorClass::NonSevere => 1,
        }
    }

    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            -1 => Some(ErrorClass::Severe),
            0 => Some(ErrorClass::Success),
            1 => Some(ErrorClass::NonSevere),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorClass::Severe => "severe",
            ErrorClass::Success => "success",
            ErrorClass::NonSevere => "non_severe",
        }
    }
}

/// Category of client that produced a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionClass {
    NoWebHit,
    Unknown,
    Bot,
    Admin,
    Program,
    Anonymous,
    Browser,
}

impl SessionClass {
    pub const ALL: [SessionClass; 7] = [
        SessionClass::NoWebHit,
        SessionClass::Unknown,
        SessionClass::Bot,
        SessionClass::Admin,
        SessionClass::Program,
        SessionClass::Anonymous,
        SessionClass::Browser,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SessionClass::NoWebHit => "no_web_hit",
            SessionClass::Unknown => "unknown",
            SessionClass::Bot => "bot",
            SessionClass::Admin => "admin",
            SessionClass::Program => "program",
            SessionClass::Anonymous => "anonymous",
            SessionClass::Browser => "browser",
        }
    }
}

impl FromStr for SessionClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        SessionClass::ALL
            .into_iter()
            .find(|c| c.name() == norm)
            .ok_or_else(|| Error::InvalidInput(format!("unknown session class `{s}`")))
    }
}

/// One raw row of a query log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryLogEntry {
    pub source_key: String,
    /// `None` when the workload file carries no timestamp column.
    pub timestamp: Option<DateTime<Utc>>,
    pub statement: String,
    pub error_class: Option<ErrorClass>,
    pub cpu_time_s: Option<f64>,
    /// `-1` marks a query that did not run.
    pub answer_rows: Option<i64>,
    pub session_class: Option<SessionClass>,
    pub user_key: Option<String>,
    pub opt_cost_estimate: Option<f64>,
}

impl QueryLogEntry {
    /// Entry with only a statement; empty statements become [`EMPTY_STATEMENT`].
    pub fn new(statement: impl Into<String>) -> Self {
        QueryLogEntry {
            source_key: String::new(),
            timestamp: None,
            statement: normalize_statement(statement.into()),
            error_class: None,
            cpu_time_s: None,
            answer_rows: None,
            session_class: None,
            user_key: None,
            opt_cost_estimate: None,
        }
    }
}

pub(crate) fn normalize_statement(statement: String) -> String {
    if statement.trim().is_empty() {
        EMPTY_STATEMENT.to_string()
    } else {
        statement
    }
}

/// Aggregated labels of one distinct statement. Numeric labels are means.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    pub error_class: Option<ErrorClass>,
    pub cpu_time_s: Option<f64>,
    pub answer_rows: Option<f64>,
    pub session_class: Option<SessionClass>,
}

/// A distinct statement with its aggregated labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledQuery {
    pub statement: String,
    pub labels: Labels,
    pub multiplicity: usize,
    pub profile: Option<SyntacticProfile>,
    pub user_key: Option<String>,
    pub opt_cost_estimate: Option<f64>,
}

/// The four facilitation problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Error,
    Cpu,
    Rows,
    Session,
}

/// Value of a task label: a class index or a real number in original units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Label {
    Class(usize),
    Value(f64),
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Error, Task::Cpu, Task::Rows, Task::Session];

    pub fn name(self) -> &'static str {
        match self {
            Task::Error => "error",
            Task::Cpu => "cpu",
            Task::Rows => "rows",
            Task::Session => "session",
        }
    }

    pub fn is_classification(self) -> bool {
        matches!(self, Task::Error | Task::Session)
    }

    /// Class names in index order; empty for regression tasks.
    pub fn class_names(self) -> Vec<&'static str> {
        match self {
            Task::Error => ErrorClass::ALL.iter().map(|c| c.name()).collect(),
            Task::Session => SessionClass::ALL.iter().map(|c| c.name()).collect(),
            Task::Cpu | Task::Rows => Vec::new(),
        }
    }

    pub fn num_outputs(self) -> usize {
        match self {
            Task::Error => ErrorClass::ALL.len(),
            Task::Session => SessionClass::ALL.len(),
            Task::Cpu | Task::Rows => 1,
        }
    }

    pub fn label(self, query: &LabeledQuery) -> Option<Label> {
        let l = &query.labels;
        match self {
            Task::Error => l
                .error_class
                .map(|c| Label::Class(ErrorClass::ALL.iter().position(|x| *x == c).unwrap())),
            Task::Session => l
                .session_class
                .map(|c| Label::Class(SessionClass::ALL.iter().position(|x| *x == c).unwrap())),
            Task::Cpu => l.cpu_time_s.map(Label::Value),
            Task::Rows => l.answer_rows.map(Label::Value),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "error" => Ok(Task::Error),
            "cpu" | "busy" => Ok(Task::Cpu),
            "rows" | "answer" => Ok(Task::Rows),
            "session" => Ok(Task::Session),
            _ => Err(Error::InvalidInput(format!("unknown task `{s}`"))),
        }
    }
}

/// Problem setting, determining how a workload is split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    HomogeneousInstance,
    HomogeneousSchema,
    HeterogeneousSchema,
}

impl Setting {
    pub fn name(self) -> &'static str {
        match self {
            Setting::HomogeneousInstance => "homogeneous_instance",
            Setting::HomogeneousSchema => "homogeneous_schema",
            Setting::HeterogeneousSchema => "heterogeneous_schema",
        }
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "homogeneous_instance" | "instance" => Ok(Setting::HomogeneousInstance),
            "homogeneous_schema" | "schema" => Ok(Setting::HomogeneousSchema),
            "heterogeneous_schema" | "heterogeneous" => Ok(Setting::HeterogeneousSchema),
            _ => Err(Error::InvalidInput(format!("unknown setting `{s}`"))),
        }
    }
}

/// Train/validation/test partition of a deduplicated workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub setting: Setting,
    pub seed: u64,
    pub train: Vec<LabeledQuery>,
    pub validation: Vec<LabeledQuery>,
    pub test: Vec<LabeledQuery>,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all(&self) -> impl Iterator<Item = &LabeledQuery> {
        self.train.iter().chain(&self.validation).chain(&self.test)
    }

    pub fn all_mut(&mut self) -> impl Iterator<Item = &mut LabeledQuery> {
        self.train
            .iter_mut()
            .chain(self.validation.iter_mut())
            .chain(self.test.iter_mut())
    }
}
