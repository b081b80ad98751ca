use std::fmt::Display;
use std::path::Path;
use std::process::ExitCode;

use dsage_core::dsl::{parse_kb_bytes, ParseError};
use dsage_core::kb::KnowledgeBase;
use dsage_core::seed::seed_kb;

/// Why a command failed; each kind maps to a stable exit status.
#[derive(Debug)]
pub enum Failure {
    /// 1: parse, validation or catalog errors. Lines are printed as-is.
    Invalid(Vec<String>),
    /// 2: bad command-line input.
    Usage(String),
    /// 3: storage, network or I/O errors.
    Io(String),
}

impl Failure {
    pub fn invalid(message: impl Display) -> Self {
        Failure::Invalid(vec![message.to_string()])
    }

    pub fn io(what: impl Display, e: impl Display) -> Self {
        Failure::Io(format!("{what}: {e}"))
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Invalid(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        })
    }

    pub fn report(&self) {
        match self {
            Failure::Invalid(lines) => lines.iter().for_each(|l| eprintln!("{l}")),
            Failure::Usage(m) => eprintln!("usage error: {m}"),
            Failure::Io(m) => eprintln!("error: {m}"),
        }
    }
}

pub type Outcome = Result<(), Failure>;

pub fn parse_errors(errors: &[ParseError]) -> Failure {
    Failure::Invalid(errors.iter().map(ToString::to_string).collect())
}

pub fn read_kb(path: &Path) -> Result<KnowledgeBase, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::io(path.display(), e))?;
    parse_kb_bytes(&path.display().to_string(), &bytes).map_err(|e| parse_errors(&e))
}

pub fn kb_or_seed(path: Option<&Path>) -> Result<KnowledgeBase, Failure> {
    path.map_or_else(|| Ok(seed_kb()), read_kb)
}
