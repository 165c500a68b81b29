//! Crate-wide error type, grouped by pipeline stage so the CLI can map
//! failures to distinct exit codes.

use std::path::PathBuf;

use thiserror::Error;

/// Pipeline stage a failure belongs to. Drives the CLI exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Log,
    Manifest,
    Acquire,
    Assembly,
    Metrics,
    Simulate,
}

impl Stage {
    /// Process exit code for failures in this stage. 0 is reserved for success,
    /// 1 for unclassified errors.
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 2,
            Stage::Log => 3,
            Stage::Manifest => 4,
            Stage::Acquire => 5,
            Stage::Assembly => 6,
            Stage::Metrics => 7,
            Stage::Simulate => 8,
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Stage::Config => "config",
            Stage::Log => "log",
            Stage::Manifest => "manifest",
            Stage::Acquire => "acquire",
            Stage::Assembly => "assembly",
            Stage::Metrics => "metrics",
            Stage::Simulate => "simulate",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    // ---- configuration / CLI ----
    #[error("configuration error: {0}")]
    Config(String),

    // ---- video log parsing ----
    #[error("log schema error: column {column:?} not found in header of {path}")]
    LogSchema { column: String, path: PathBuf },
    #[error("log row error at {path}:{line}: {message}")]
    LogRow {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("empty log: {0} contains no data rows")]
    EmptyLog(PathBuf),
    #[error("log structure error in {path}: {message}")]
    LogStructure { path: PathBuf, message: String },

    // ---- manifest ----
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("unsupported manifest profile {found:?}: only the DASH full profile is supported")]
    UnsupportedProfile { found: String },
    #[error("unsupported manifest: byte-range segment addressing ({0})")]
    ByteRangeAddressing(String),
    #[error("unknown bitrate {rep_level} kbps: not a ladder entry (nearest: {nearest})")]
    UnknownBitrate { rep_level: u32, nearest: String },

    // ---- acquisition ----
    #[error("acquisition error: {0}")]
    Acquire(String),
    #[error("missing segment for index {index} at rep_level {rep_level} kbps: {path}")]
    MissingSegment {
        index: u64,
        rep_level: u32,
        path: PathBuf,
    },
    #[error("download failed for {url}: {message}")]
    Download { url: String, message: String },

    // ---- assembly ----
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("assembly failed at segment {index}: {message}")]
    AssemblyJob { index: u64, message: String },
    #[error("toolchain error running {tool}: {message}")]
    Toolchain { tool: String, message: String },

    // ---- metrics ----
    #[error("metric domain error: {0}")]
    MetricDomain(String),
    #[error("non-finite metric result: {0}")]
    NonFinite(String),

    // ---- simulation ----
    #[error("simulation error: {0}")]
    Simulation(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stage family this error belongs to.
    pub fn stage(&self) -> Stage {
        match self {
            Error::Config(_) => Stage::Config,
            Error::LogSchema { .. }
            | Error::LogRow { .. }
            | Error::EmptyLog(_)
            | Error::LogStructure { .. } => Stage::Log,
            Error::Manifest(_)
            | Error::UnsupportedProfile { .. }
            | Error::ByteRangeAddressing(_)
            | Error::UnknownBitrate { .. } => Stage::Manifest,
            Error::Acquire(_)
            | Error::MissingSegment { .. }
            | Error::Download { .. }
            | Error::Io { .. } => Stage::Acquire,
            Error::Assembly(_) | Error::AssemblyJob { .. } | Error::Toolchain { .. } => {
                Stage::Assembly
            }
            Error::MetricDomain(_) | Error::NonFinite(_) => Stage::Metrics,
            Error::Simulation(_) => Stage::Simulate,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
