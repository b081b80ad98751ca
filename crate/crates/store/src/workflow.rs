use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use dsage_core::inference::{run, Observation};
use dsage_core::kb::{FactKey, KbError, KnowledgeBase};
use dsage_core::seed::seed_kb;

use crate::{
    FsStore, KbVersion, Result, Session, SessionId, SessionStore, SnapshotStore, StoreError,
};

/// Outcome of moving a session onto the current knowledge base.
#[derive(Debug, Clone, PartialEq)]
pub struct Rebase {
    pub session: Session,
    pub from: KbVersion,
    /// Observations that the new catalog no longer accepts; they are removed.
    pub dropped: Vec<Observation>,
}

impl Rebase {
    pub fn changed(&self) -> bool {
        self.from != self.session.kb_version
    }
}

/// Consultation workflow over a storage backend.
///
/// Operations on one session are serialized; knowledge-base edits are
/// serialized against each other and checked against the caller's expected
/// version, so a stale editor gets [`StoreError::Conflict`] instead of
/// silently overwriting someone else's change.
pub struct AdvisoryStore<B = FsStore> {
    backend: B,
    edit_lock: Mutex<()>,
    session_locks: Mutex<HashMap<SessionId, Arc<Mutex<()>>>>,
    kb_cache: RwLock<HashMap<KbVersion, Arc<KnowledgeBase>>>,
}

impl AdvisoryStore<FsStore> {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        Ok(Self::new(FsStore::open(root)?))
    }
}

impl<B: SnapshotStore + SessionStore> AdvisoryStore<B> {
    pub fn new(backend: B) -> Self {
        AdvisoryStore {
            backend,
            edit_lock: Mutex::new(()),
            session_locks: Mutex::new(HashMap::new()),
            kb_cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    /// Installs the seed knowledge base if the store has none yet.
    /// Returns the head version and whether it was just created.
    pub fn ensure_seeded(&self) -> Result<(KbVersion, bool)> {
        let _guard = lock(&self.edit_lock);
        if let Some(head) = self.backend.head()? {
            return Ok((head, false));
        }
        let version = self.backend.put_snapshot(&seed_kb())?;
        self.backend.compare_and_set_head(None, &version)?;
        Ok((version, true))
    }

    pub fn head(&self) -> Result<KbVersion> {
        self.backend.head()?.ok_or(StoreError::NoHead)
    }

    pub fn kb(&self, version: &KbVersion) -> Result<Arc<KnowledgeBase>> {
        if let Some(kb) = self.kb_cache.read().unwrap_or_else(|p| p.into_inner()).get(version) {
            return Ok(kb.clone());
        }
        let kb = Arc::new(self.backend.get_snapshot(version)?);
        self.kb_cache
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .insert(version.clone(), kb.clone());
        Ok(kb)
    }

    pub fn current(&self) -> Result<(KbVersion, Arc<KnowledgeBase>)> {
        let head = self.head()?;
        let kb = self.kb(&head)?;
        Ok((head, kb))
    }

    /// Applies `edit` to the knowledge base at `expected` and makes the
    /// result the new head. Fails with a conflict if the head has moved.
    pub fn edit_kb(
        &self,
        expected: &KbVersion,
        edit: impl FnOnce(&KnowledgeBase) -> Result<KnowledgeBase, KbError>,
    ) -> Result<KbVersion> {
        let _guard = lock(&self.edit_lock);
        let head = self.head()?;
        if &head != expected {
            return Err(StoreError::Conflict {
                expected: Some(expected.clone()),
                current: Some(head),
            });
        }
        let next = edit(&*self.kb(&head)?)?;
        let report = next.validate();
        if !report.is_empty() {
            return Err(KbError::Invalid(report).into());
        }
        let version = self.backend.put_snapshot(&next)?;
        if version != head {
            self.backend.compare_and_set_head(Some(&head), &version)?;
        }
        Ok(version)
    }

    pub fn create_session(&self) -> Result<Session> {
        let session = Session::new(self.head()?);
        self.backend.save_session(&session)?;
        Ok(session)
    }

    pub fn session(&self, id: &str) -> Result<Session> {
        self.backend.load_session(&parse_id(id)?)
    }

    /// Records an observation, replacing any earlier one for the same fact.
    pub fn add_observation(&self, id: &str, obs: Observation) -> Result<Session> {
        self.update(id, |s, kb| {
            kb.check_condition(&obs.condition)
                .map_err(dsage_core::inference::InferenceError::from)?;
            s.wm.insert(obs);
            s.last_result = None;
            Ok(())
        })
    }

    /// Returns the session and whether the fact had been observed.
    pub fn remove_observation(&self, id: &str, key: &FactKey) -> Result<(Session, bool)> {
        let mut removed = false;
        let session = self.update(id, |s, _| {
            removed = s.wm.remove(key).is_some();
            if removed {
                s.last_result = None;
            }
            Ok(())
        })?;
        Ok((session, removed))
    }

    /// Replaces the whole working memory; all-or-nothing.
    pub fn replace_observations(&self, id: &str, observations: Vec<Observation>) -> Result<Session> {
        self.update(id, |s, kb| {
            for obs in &observations {
                kb.check_condition(&obs.condition)
                    .map_err(dsage_core::inference::InferenceError::from)?;
            }
            s.wm = observations.into_iter().collect();
            s.last_result = None;
            Ok(())
        })
    }

    /// Runs inference against the session's pinned knowledge base and stores
    /// the result in `last_result`.
    pub fn advise(&self, id: &str) -> Result<(Session, Arc<KnowledgeBase>)> {
        let mut pinned = None;
        let session = self.update(id, |s, kb| {
            s.last_result = Some(run(kb, &s.wm)?);
            pinned = Some(kb.clone());
            Ok(())
        })?;
        Ok((session, Arc::new(pinned.expect("update ran the closure"))))
    }

    /// Re-pins the session to the current head, dropping observations the
    /// new catalog rejects.
    pub fn rebase(&self, id: &str) -> Result<Rebase> {
        let head = self.head()?;
        let new_kb = self.kb(&head)?;
        let mut from = None;
        let mut dropped = Vec::new();
        let session = self.update(id, |s, _| {
            from = Some(s.kb_version.clone());
            if s.kb_version == head {
                return Ok(());
            }
            let (keep, drop): (Vec<_>, Vec<_>) = s
                .wm
                .iter()
                .cloned()
                .partition(|o| new_kb.check_condition(&o.condition).is_ok());
            dropped = drop;
            s.wm = keep.into_iter().collect();
            s.kb_version = head.clone();
            s.last_result = None;
            Ok(())
        })?;
        Ok(Rebase {
            session,
            from: from.expect("update ran the closure"),
            dropped,
        })
    }

    fn update(
        &self,
        id: &str,
        change: impl FnOnce(&mut Session, &KnowledgeBase) -> Result<()>,
    ) -> Result<Session> {
        let id = parse_id(id)?;
        let slot = lock(&self.session_locks).entry(id.clone()).or_default().clone();
        let _guard = lock(&slot);
        let mut session = self.backend.load_session(&id)?;
        let kb = self.kb(&session.kb_version)?;
        change(&mut session, &kb)?;
        self.backend.save_session(&session)?;
        Ok(session)
    }
}

fn parse_id(id: &str) -> Result<SessionId> {
    SessionId::parse(id).ok_or_else(|| StoreError::UnknownSession(id.to_string()))
}

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}
