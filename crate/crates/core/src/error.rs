use thiserror::Error;

use crate::device::{Chirality, Polarity};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeviceError {
    #[error("chirality (0,0) does not describe a tube")]
    ZeroChirality,
    #[error("chirality ({n},{m}) is not canonical: m must not exceed n")]
    NonCanonicalChirality { n: u32, m: u32 },
    #[error("chirality {0} is metallic and has no threshold voltage")]
    Metallic(Chirality),
    #[error("device needs at least one tube")]
    NoTubes,
    #[error("{what} must be positive and finite, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("threshold {vth} V has the wrong sign for a {polarity}-type device")]
    ThresholdSign { polarity: Polarity, vth: f64 },
}

/// Netlist lexing/parsing failure with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("malformed number '{0}'")]
    BadNumber(String),
    #[error("unknown suffix '{suffix}' in '{token}'")]
    UnknownSuffix { token: String, suffix: String },
    #[error("unknown element letter '{0}'")]
    UnknownElement(char),
    #[error("unknown directive '{0}'")]
    UnknownDirective(String),
    #[error("expected {0}")]
    Expected(&'static str),
    #[error("unexpected token '{0}'")]
    Unexpected(String),
    #[error("duplicate element name '{0}'")]
    DuplicateElement(String),
    #[error("switch control '{0}' does not name a voltage source")]
    DanglingReference(String),
    #[error("malformed chirality '{0}'")]
    BadChirality(String),
    #[error("invalid device: {0}")]
    Device(#[from] DeviceError),
    #[error("invalid element: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuildError {
    #[error("trit sequence is empty")]
    EmptySequence,
    #[error("invalid trit {0}: expected 0, 1 or 2")]
    InvalidTrit(u8),
    #[error("invalid cell parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Device(#[from] DeviceError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("circuit is not valid: {0}")]
    InvalidCircuit(String),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("Newton iteration did not converge at t = {time:e} s after {iterations} iterations (worst node '{worst_node}')")]
    NonConvergence {
        time: f64,
        iterations: usize,
        worst_node: String,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("waveform has no trace named '{0}'")]
    MissingTrace(String),
    #[error("cycle {cycle} is outside the simulated schedule of {cycles} cycles")]
    BadCycle { cycle: usize, cycles: usize },
    #[error("storage node never crossed {threshold} V during the write of cycle {cycle}")]
    TargetNeverReached { cycle: usize, threshold: f64 },
    #[error("bit-line never fell to {threshold} V during the read of cycle {cycle}")]
    ExcursionNeverReached { cycle: usize, threshold: f64 },
    #[error("word-line has no {edge} edge in cycle {cycle}")]
    MissingEdge { cycle: usize, edge: &'static str },
    #[error("sense output moved between bands near the end of the window")]
    Ambiguous,
    #[error("empty measurement window")]
    EmptyWindow,
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("malformed waveform file: {0}")]
    Format(String),
}
