//! Persistence for knowledge-base snapshots and consultation sessions.
//!
//! Snapshots are content-addressed: a knowledge base is stored as its
//! canonical `.dkb` text under the SHA-256 of that text, and a `HEAD`
//! pointer names the current version. Sessions pin the version they were
//! created against, so editing the knowledge base never changes the results
//! of an existing session until it is explicitly rebased.
//!
//! [`SnapshotStore`] and [`SessionStore`] are the backend seam;
//! [`FsStore`] implements both on a plain directory tree and
//! [`AdvisoryStore`] layers the consultation workflow on top.

use std::fmt;

use dsage_core::dsl::{serialize_kb, ParseError};
use dsage_core::inference::InferenceError;
use dsage_core::kb::{KbError, KnowledgeBase};
use sha2::{Digest, Sha256};
use thiserror::Error;

mod fs;
mod session;
mod workflow;

pub use fs::FsStore;
pub use session::{Session, SessionId, SESSION_FORMAT};
pub use workflow::{AdvisoryStore, Rebase};

/// SHA-256 of a knowledge base's canonical text, as 64 lowercase hex digits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KbVersion(String);

impl KbVersion {
    pub fn of_text(text: &str) -> Self {
        Self::of_bytes(text.as_bytes())
    }

    pub fn of_bytes(bytes: &[u8]) -> Self {
        KbVersion(hex::encode(Sha256::digest(bytes)))
    }

    pub fn parse(s: &str) -> Option<Self> {
        (s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')))
            .then(|| KbVersion(s.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for KbVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Version identifier of `kb`.
pub fn digest(kb: &KnowledgeBase) -> KbVersion {
    KbVersion::of_text(&serialize_kb(kb))
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("snapshot {0} does not exist")]
    MissingSnapshot(KbVersion),
    #[error("snapshot {expected} is corrupt: content hashes to {actual}")]
    DigestMismatch { expected: KbVersion, actual: KbVersion },
    #[error("snapshot {version} does not parse: {}", first_error(.errors))]
    UnparsableSnapshot {
        version: KbVersion,
        errors: Vec<ParseError>,
    },
    #[error("store has no current knowledge base")]
    NoHead,
    #[error("knowledge base is at {}, not {}", show(.current), show(.expected))]
    Conflict {
        expected: Option<KbVersion>,
        current: Option<KbVersion>,
    },
    #[error("no session {0}")]
    UnknownSession(String),
    #[error("corrupt session record: {0}")]
    CorruptSession(String),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Observation(#[from] InferenceError),
}

fn show(v: &Option<KbVersion>) -> &str {
    v.as_ref().map_or("<none>", KbVersion::as_str)
}

fn first_error(errors: &[ParseError]) -> String {
    errors.first().map(|e| e.to_string()).unwrap_or_default()
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

/// Immutable, content-addressed knowledge-base snapshots plus a movable head.
pub trait SnapshotStore: Send + Sync {
    /// Stores `kb` and returns its version. Idempotent.
    fn put_snapshot(&self, kb: &KnowledgeBase) -> Result<KbVersion>;
    /// Loads a snapshot, verifying that its content matches its version.
    fn get_snapshot(&self, version: &KbVersion) -> Result<KnowledgeBase>;
    fn head(&self) -> Result<Option<KbVersion>>;
    /// Moves the head to `new` if it currently equals `expected`.
    fn compare_and_set_head(&self, expected: Option<&KbVersion>, new: &KbVersion) -> Result<()>;
}

pub trait SessionStore: Send + Sync {
    fn save_session(&self, session: &Session) -> Result<()>;
    fn load_session(&self, id: &SessionId) -> Result<Session>;
    fn list_sessions(&self) -> Result<Vec<SessionId>>;
}
