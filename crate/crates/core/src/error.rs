//! Error types for the analysis pipeline.

use std::path::PathBuf;
use thiserror::Error;

/// Errors raised while parsing or validating input files.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: file is empty")]
    EmptyFile { path: PathBuf },
    #[error("{path}: malformed WAV header: {detail}")]
    MalformedHeader { path: PathBuf, detail: String },
    #[error("{path}: unsupported WAV encoding: {detail}")]
    UnsupportedEncoding { path: PathBuf, detail: String },
    #[error("{path}:{line}: {detail}")]
    Syntax {
        path: PathBuf,
        line: usize,
        detail: String,
    },
    #[error("{path}:{line}: timestamps not strictly increasing")]
    NonMonotone { path: PathBuf, line: usize },
    #[error("{path}: sample rate {found:.3} Hz deviates more than 1% from {required} Hz")]
    BadRate {
        path: PathBuf,
        found: f64,
        required: f64,
    },
    #[error("annotation: unknown gender code {code:?}")]
    UnknownGender { code: String },
    #[error("annotation: unknown role code {code:?}")]
    UnknownRole { code: String },
    #[error("annotation: turn references unknown speaker {id:?}")]
    UnknownSpeaker { id: String },
    #[error("annotation: turn references unknown task {id:?}")]
    UnknownTask { id: String },
    #[error("annotation: speaker {speaker:?} has overlapping turns at {t0:.3}s and {t1:.3}s")]
    OverlappingTurns { speaker: String, t0: f64, t1: f64 },
    #[error("annotation: turn [{start:.3}, {end:.3}] of {speaker:?} lies outside task {task:?}")]
    TurnOutsideTask {
        speaker: String,
        task: String,
        start: f64,
        end: f64,
    },
    #[error("annotation: word [{start:.3}, {end:.3}] of {speaker:?} is not nested in any turn")]
    WordOutsideTurn {
        speaker: String,
        start: f64,
        end: f64,
    },
    #[error("annotation: interval [{start:.3}, {end:.3}] has non-positive length")]
    EmptyInterval { start: f64, end: f64 },
}

/// Errors from contour and signal primitives.
#[derive(Debug, Error)]
pub enum DspError {
    #[error("track has no valid samples")]
    AllInvalid,
    #[error("track too short: {len} samples, need at least {min}")]
    TooShort { len: usize, min: usize },
    #[error("non-positive f0 value {value} at sample {index}")]
    NonPositive { index: usize, value: f64 },
    #[error("sample rate {rate} Hz too low for band-pass upper cutoff {cutoff} Hz")]
    RateTooLow { rate: f64, cutoff: f64 },
}

/// Errors from prosodic structure extraction.
#[derive(Debug, Error)]
pub enum StructureError {
    #[error(
        "accent bootstrap: empty {class} seed class; adjust the word duration \
         thresholds t_a/t_na"
    )]
    EmptySeed { class: &'static str },
    #[error("accent bootstrap: all feature weights are zero; seed clusters do not separate")]
    ZeroWeights,
}

/// Errors from turn pairing.
#[derive(Debug, Error)]
pub enum EntrainError {
    #[error("different-dialog pairing needs at least two dialogs with disjoint speaker pairs")]
    NoDisjointDialogs,
}

/// Errors from the statistics layer.
#[derive(Debug, Error)]
pub enum StatsError {
    #[error("task {task_id:?} has zero duration")]
    ZeroDuration { task_id: String },
    #[error("mixed model: {0}")]
    Singular(String),
}

/// Errors from the synthetic dyad generator.
#[derive(Debug, Error)]
pub enum SynthError {
    #[error("synth config: {0}")]
    InvalidConfig(String),
}

/// Crate-level error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Entrain(#[from] EntrainError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{0}")]
    Other(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
