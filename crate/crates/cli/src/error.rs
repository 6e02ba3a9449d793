//! Uniform exit-code scheme: 0 success, 2 config or format problem,
//! 3 operating-system I/O failure, 4 placement exhaustion during mask
//! generation, 5 violated precondition (e.g. empty contour set).

use std::fmt;

use nucleoforge_core::io::IoError;
use nucleoforge_core::loss::LossError;
use nucleoforge_core::quality::QualityError;
use nucleoforge_core::seg::SegError;
use nucleoforge_core::synth::SynthError;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_EXHAUSTED: i32 = 4;
pub const EXIT_PRECONDITION: i32 = 5;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Exhausted(String),
    Precondition(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
            CliError::Exhausted(_) => EXIT_EXHAUSTED,
            CliError::Precondition(_) => EXIT_PRECONDITION,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m)
            | CliError::Io(m)
            | CliError::Exhausted(m)
            | CliError::Precondition(m) => f.write_str(m),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        if e.is_os_failure() {
            CliError::Io(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidConfig(_) => CliError::Config(e.to_string()),
            SynthError::PlacementExhausted { .. } => CliError::Exhausted(e.to_string()),
            SynthError::Io(inner) => inner.into(),
        }
    }
}

impl From<LossError> for CliError {
    fn from(e: LossError) -> Self {
        match e {
            LossError::InvalidParams(_) => CliError::Config(e.to_string()),
            LossError::NotAContourPixel { .. }
            | LossError::EmptyContourSet
            | LossError::ScoreOutOfRange { .. } => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<QualityError> for CliError {
    fn from(e: QualityError) -> Self {
        CliError::Precondition(e.to_string())
    }
}

impl From<SegError> for CliError {
    fn from(e: SegError) -> Self {
        CliError::Precondition(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
