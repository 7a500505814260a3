use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::metric::MetricKind;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// One rejected row of a tabular input.
#[derive(Debug, Clone, PartialEq)]
pub struct RowIssue {
    /// 1-based line number in the source file, when known.
    pub line: Option<usize>,
    pub id: String,
    pub reason: String,
}

impl core::fmt::Display for RowIssue {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line} ({}): {}", self.id, self.reason),
            None => write!(f, "{}: {}", self.id, self.reason),
        }
    }
}

fn join_issues(issues: &[RowIssue]) -> String {
    let mut out = String::new();
    for (i, issue) in issues.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        out.push_str(&alloc::format!("{issue}"));
    }
    out
}

fn preview_ids(ids: &[String], total: usize) -> String {
    let mut out = ids.join(", ");
    if total > ids.len() {
        out.push_str(&alloc::format!(" and {} more", total - ids.len()));
    }
    out
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} too short: need at least {needed} samples, got {got}")]
    TooShort {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("{0}: input is silent (all samples zero)")]
    Silent(&'static str),

    #[error("duplicate utterance id `{0}`")]
    DuplicateId(String),

    #[error("invalid utterance `{id}`: {reason}")]
    InvalidUtterance { id: String, reason: String },

    #[error("snapshot `{0}` is empty")]
    EmptySnapshot(String),

    #[error("metric {metric} missing for {total_missing} utterance(s): {}", preview_ids(.missing, *.total_missing))]
    MissingCoverage {
        metric: MetricKind,
        /// At most 20 ids; `total_missing` carries the full count.
        missing: Vec<String>,
        total_missing: usize,
    },

    #[error("{metric} mean {value} is not above the epsilon floor; ratio orientation undefined")]
    NonPositiveMean { metric: MetricKind, value: f64 },

    #[error("no aggregate for {0}; it was not requested or has no coverage")]
    MissingAggregate(MetricKind),

    #[error("hours of the raw snapshot must be positive")]
    ZeroRawHours,

    #[error("rejected rows: {}", join_issues(.0))]
    InvalidRows(Vec<RowIssue>),

    #[error("cepstral sequences are incompatible: {0}")]
    IncompatibleCepstra(String),

    #[error("empty overlap between sequences")]
    EmptyOverlap,

    #[error("decay curve never reaches {0} dB")]
    DecayRangeNotReached(i32),

    #[error("statistic undefined: {0}")]
    Undefined(&'static str),

    #[error("raw and processed snapshots are not aligned: {0}")]
    Misaligned(String),

    #[error("configuration `{config}`: {source}")]
    Config {
        config: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn missing_coverage(metric: MetricKind, missing: Vec<String>) -> Self {
        let total_missing = missing.len();
        let missing = missing.into_iter().take(20).collect();
        Error::MissingCoverage {
            metric,
            missing,
            total_missing,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
