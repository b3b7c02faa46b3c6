//! Challenge bookkeeping: manifests, evaluation conditions, aggregation
//! across datasets and the JSON report.

mod conditions;
pub mod json;
mod manifest;
mod report;

use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub use conditions::{
    aggregate, evaluate_condition, pitch_gate, ConditionResult, EvaluationCondition,
    PITCH_CORRELATION_THRESHOLD, STANDARD_MIN_TARGET_EERS,
};
pub use manifest::{load_manifest, Manifest, ManifestEntry};
pub use report::{generate_report, DatasetMetrics, EvaluationReport, ReportInputs, REPORT_SCHEMA};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error(
        "{path}:{line}: duplicate utterance id {utterance_id} (first seen on line {first_line})"
    )]
    DuplicateUtterance {
        path: PathBuf,
        line: usize,
        first_line: usize,
        utterance_id: String,
    },
    #[error("{path}:{line}: audio file {file} does not exist")]
    MissingFile {
        path: PathBuf,
        line: usize,
        file: PathBuf,
    },
    #[error("invalid manifest: {0}")]
    Invalid(String),
    #[error("manifests do not pair up: {0}")]
    Unpaired(String),
    #[error("report is missing metrics: {}", .0.join(", "))]
    MissingMetrics(Vec<String>),
}
