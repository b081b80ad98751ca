//! Directory-tree backend.
//!
//! ```text
//! <root>/kb/<sha256>.dkb       canonical snapshot text
//! <root>/kb/HEAD               current version, one line
//! <root>/sessions/<id>.session session records
//! ```
//!
//! Every write goes to a temporary file that is renamed into place, so a
//! crash leaves either the old or the new content.

use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use dsage_core::dsl::{parse_kb_named, serialize_kb};
use dsage_core::kb::KnowledgeBase;

use crate::{
    KbVersion, Result, Session, SessionId, SessionStore, SnapshotStore, StoreError,
};

#[derive(Debug)]
pub struct FsStore {
    root: PathBuf,
    head_lock: Mutex<()>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().expect("store paths have a parent");
    let tmp = dir.join(format!(
        ".{}.{:016x}.tmp",
        path.file_name().unwrap().to_string_lossy(),
        rand::random::<u64>()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io_err(path))
}

impl FsStore {
    /// Opens (creating if needed) a store rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        for dir in [root.join("kb"), root.join("sessions")] {
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        }
        Ok(FsStore {
            root,
            head_lock: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn snapshot_path(&self, version: &KbVersion) -> PathBuf {
        self.root.join("kb").join(format!("{version}.dkb"))
    }

    pub fn session_path(&self, id: &SessionId) -> PathBuf {
        self.root.join("sessions").join(format!("{id}.session"))
    }

    fn head_path(&self) -> PathBuf {
        self.root.join("kb").join("HEAD")
    }

    fn read_head(&self) -> Result<Option<KbVersion>> {
        let path = self.head_path();
        match fs::read_to_string(&path) {
            Ok(text) => KbVersion::parse(text.trim())
                .map(Some)
                .ok_or_else(|| StoreError::Io {
                    path: path.display().to_string(),
                    source: std::io::Error::new(ErrorKind::InvalidData, "malformed HEAD"),
                }),
            Err(e) if e.kind() == ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io_err(&path)(e)),
        }
    }
}

impl SnapshotStore for FsStore {
    fn put_snapshot(&self, kb: &KnowledgeBase) -> Result<KbVersion> {
        let text = serialize_kb(kb);
        let version = KbVersion::of_text(&text);
        let path = self.snapshot_path(&version);
        if !path.exists() {
            write_atomic(&path, &text)?;
        }
        Ok(version)
    }

    fn get_snapshot(&self, version: &KbVersion) -> Result<KnowledgeBase> {
        let path = self.snapshot_path(version);
        let text = match fs::read(&path) {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == ErrorKind::NotFound => {
                return Err(StoreError::MissingSnapshot(version.clone()))
            }
            Err(e) => return Err(io_err(&path)(e)),
        };
        let actual = KbVersion::of_bytes(&text);
        if &actual != version {
            return Err(StoreError::DigestMismatch {
                expected: version.clone(),
                actual,
            });
        }
        let text = String::from_utf8_lossy(&text);
        parse_kb_named(&format!("{version}.dkb"), &text).map_err(|errors| {
            StoreError::UnparsableSnapshot {
                version: version.clone(),
                errors,
            }
        })
    }

    fn head(&self) -> Result<Option<KbVersion>> {
        let _guard = self.head_lock.lock().unwrap_or_else(|p| p.into_inner());
        self.read_head()
    }

    fn compare_and_set_head(&self, expected: Option<&KbVersion>, new: &KbVersion) -> Result<()> {
        let _guard = self.head_lock.lock().unwrap_or_else(|p| p.into_inner());
        let current = self.read_head()?;
        if current.as_ref() != expected {
            return Err(StoreError::Conflict {
                expected: expected.cloned(),
                current,
            });
        }
        if !self.snapshot_path(new).exists() {
            return Err(StoreError::MissingSnapshot(new.clone()));
        }
        write_atomic(&self.head_path(), &format!("{new}\n"))
    }
}

impl SessionStore for FsStore {
    fn save_session(&self, session: &Session) -> Result<()> {
        write_atomic(&self.session_path(&session.id), &session.to_record())
    }

    fn load_session(&self, id: &SessionId) -> Result<Session> {
        let path = self.session_path(id);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == ErrorKind::NotFound => {
                return Err(StoreError::UnknownSession(id.to_string()))
            }
            Err(e) => return Err(io_err(&path)(e)),
        };
        let session = Session::from_record(&text)?;
        if &session.id != id {
            return Err(StoreError::CorruptSession(format!(
                "{} holds session {}",
                path.display(),
                session.id
            )));
        }
        Ok(session)
    }

    fn list_sessions(&self) -> Result<Vec<SessionId>> {
        let dir = self.root.join("sessions");
        let mut ids: Vec<SessionId> = fs::read_dir(&dir)
            .map_err(io_err(&dir))?
            .filter_map(|entry| {
                let name = entry.ok()?.file_name();
                SessionId::parse(name.to_str()?.strip_suffix(".session")?)
            })
            .collect();
        ids.sort();
        Ok(ids)
    }
}
