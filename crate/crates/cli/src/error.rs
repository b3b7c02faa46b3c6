use std::path::PathBuf;
use std::process::ExitCode;

use anonkit_core::{AnonError, AsrError, AsvError, Error, PitchError, ProtocolError, SynthError};
use thiserror::Error;

/// A metric could not be computed, or at least one utterance failed.
pub const EXIT_FAILURE: u8 = 1;
/// Bad configuration, unreadable inputs, or inconsistent protocol files.
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("cannot read config {path}: {message}")]
    ConfigFile { path: PathBuf, message: String },
    #[error("{0}")]
    Metric(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) | CliError::ConfigFile { .. } => EXIT_USAGE,
            CliError::Metric(_) => EXIT_FAILURE,
            CliError::Core(e) => core_exit_code(e),
        })
    }
}

macro_rules! from_core {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        }
    )*};
}

from_core!(
    AnonError,
    AsrError,
    AsvError,
    PitchError,
    ProtocolError,
    SynthError
);

fn protocol_code(e: &ProtocolError) -> u8 {
    match e {
        ProtocolError::MissingMetrics(_) => EXIT_FAILURE,
        _ => EXIT_USAGE,
    }
}

/// Maps library errors onto the two failure exit codes.
pub fn core_exit_code(e: &Error) -> u8 {
    match e {
        Error::Protocol(p) => protocol_code(p),
        Error::Anon(a) => match a {
            AnonError::InvalidConfig(_) => EXIT_USAGE,
            AnonError::Protocol(p) => protocol_code(p),
            _ => EXIT_FAILURE,
        },
        Error::Asv(a) => match a {
            AsvError::Config(_) | AsvError::Io { .. } | AsvError::Parse { .. } => EXIT_USAGE,
            AsvError::Protocol(p) => protocol_code(p),
            AsvError::Anon(AnonError::InvalidConfig(_)) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        },
        Error::Pitch(p) => match p {
            PitchError::Protocol(p) => protocol_code(p),
            PitchError::InvalidParameter(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        },
        Error::Asr(a) => match a {
            AsrError::EmptyReference => EXIT_FAILURE,
            _ => EXIT_USAGE,
        },
        Error::Synth(s) => match s {
            SynthError::InvalidConfig(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        },
        Error::Audio(_) | Error::Dsp(_) => EXIT_FAILURE,
    }
}
