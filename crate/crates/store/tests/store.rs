use std::fs;
use std::sync::Arc;
use std::thread;

use chrono::{TimeZone, Utc};
use dsage_core::advisory::advise;
use dsage_core::cf::CertaintyFactor;
use dsage_core::inference::{run, Observation, WorkingMemory};
use dsage_core::kb::{Condition, FactKey, Relation};
use dsage_core::seed::seed_kb;
use dsage_store::{
    digest, AdvisoryStore, FsStore, KbVersion, Session, SessionStore, SnapshotStore, StoreError,
};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, TestRunner};

fn cf(v: f64) -> CertaintyFactor {
    CertaintyFactor::new(v).unwrap()
}

fn obs(object: &str, value: &str, c: f64) -> Observation {
    Observation::new(Condition::new(object, Relation::Is, value), cf(c))
}

fn seeded() -> (tempfile::TempDir, AdvisoryStore) {
    let dir = tempfile::tempdir().unwrap();
    let store = AdvisoryStore::open(dir.path()).unwrap();
    let (_, created) = store.ensure_seeded().unwrap();
    assert!(created);
    (dir, store)
}

#[test]
fn seed_snapshot_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let fs_store = FsStore::open(dir.path()).unwrap();
    let v = fs_store.put_snapshot(&seed_kb()).unwrap();
    assert_eq!(v, digest(&seed_kb()));
    assert_eq!(fs_store.put_snapshot(&seed_kb()).unwrap(), v, "idempotent");
    assert_eq!(fs_store.get_snapshot(&v).unwrap(), seed_kb());
}

#[test]
fn tampered_snapshot_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let fs_store = FsStore::open(dir.path()).unwrap();
    let v = fs_store.put_snapshot(&seed_kb()).unwrap();
    let path = fs_store.snapshot_path(&v);
    let mut bytes = fs::read(&path).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x01;
    fs::write(&path, bytes).unwrap();
    match fs_store.get_snapshot(&v) {
        Err(StoreError::DigestMismatch { expected, actual }) => {
            assert_eq!(expected, v);
            assert_ne!(actual, v);
        }
        other => panic!("expected digest mismatch, got {other:?}"),
    }
}

#[test]
fn missing_snapshot_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let fs_store = FsStore::open(dir.path()).unwrap();
    let v = KbVersion::of_text("nothing stored");
    assert!(matches!(fs_store.get_snapshot(&v), Err(StoreError::MissingSnapshot(m)) if m == v));
}

#[test]
fn seeding_happens_once_and_survives_reopen() {
    let (dir, store) = seeded();
    let head = store.head().unwrap();
    drop(store);
    let again = AdvisoryStore::open(dir.path()).unwrap();
    assert_eq!(again.ensure_seeded().unwrap(), (head.clone(), false));
    assert_eq!(*again.kb(&head).unwrap(), seed_kb());
}

#[test]
fn observation_lifecycle() {
    let (_dir, store) = seeded();
    let s = store.create_session().unwrap();
    let id = s.id.to_string();

    let s1 = store.add_observation(&id, obs("umphenjane", "blooming", 0.90)).unwrap();
    assert_eq!(s1.wm.len(), 1);

    let s2 = store.add_observation(&id, obs("umphenjane", "blooming", 0.3)).unwrap();
    assert_eq!(s2.wm.len(), 1);
    let key = FactKey::new("umphenjane", "blooming");
    assert_eq!(s2.wm.get(&key).unwrap().cf, cf(0.3));

    let (s3, removed) = store.remove_observation(&id, &key).unwrap();
    assert!(removed);
    assert_eq!(s3.wm, s.wm);

    let err = store.add_observation(&id, obs("rainbow", "seen", 1.0)).unwrap_err();
    assert!(matches!(err, StoreError::Observation(_)), "{err}");
    let err = store.add_observation(&id, obs("umphenjane", "purple", 1.0)).unwrap_err();
    assert!(matches!(err, StoreError::Observation(_)), "{err}");

    assert!(matches!(
        store.session(&"0".repeat(32)),
        Err(StoreError::UnknownSession(_))
    ));
    assert!(matches!(store.session("../x"), Err(StoreError::UnknownSession(_))));
}

#[test]
fn advise_stores_result_and_is_idempotent() {
    let (_dir, store) = seeded();
    let id = store.create_session().unwrap().id.to_string();
    store
        .replace_observations(
            &id,
            vec![
                obs("umphenjane", "blooming", 0.9),
                obs("soil_moisture", "high", 0.5),
                obs("phezukomkhono", "sighted", 0.8),
                obs("humidity", "high", 0.7),
            ],
        )
        .unwrap();
    let (first, kb) = store.advise(&id).unwrap();
    let (second, _) = store.advise(&id).unwrap();
    assert_eq!(first, second);
    let result = first.last_result.clone().unwrap();
    assert_eq!(result, run(&kb, &first.wm).unwrap());
    assert_eq!(advise(&kb, &result), advise(&kb, second.last_result.as_ref().unwrap()));
    assert_eq!(store.session(&id).unwrap(), first, "persisted");

    let s = store.add_observation(&id, obs("humidity", "high", 0.1)).unwrap();
    assert!(s.last_result.is_none(), "changes invalidate the stored result");
}

#[test]
fn empty_session_advises_nothing() {
    let (_dir, store) = seeded();
    let id = store.create_session().unwrap().id.to_string();
    let (s, kb) = store.advise(&id).unwrap();
    assert!(advise(&kb, s.last_result.as_ref().unwrap()).is_empty());
}

#[test]
fn stale_edits_conflict() {
    let (_dir, store) = seeded();
    let v0 = store.head().unwrap();
    let v1 = store
        .edit_kb(&v0, |kb| kb.delete_rule(&"RC2".into()))
        .unwrap();
    assert_ne!(v0, v1);
    let err = store
        .edit_kb(&v0, |kb| kb.delete_rule(&"RC5".into()))
        .unwrap_err();
    match err {
        StoreError::Conflict { expected, current } => {
            assert_eq!(expected, Some(v0.clone()));
            assert_eq!(current, Some(v1.clone()));
        }
        other => panic!("{other}"),
    }
    assert_eq!(store.head().unwrap(), v1);
    // Old snapshots stay readable.
    assert_eq!(*store.kb(&v0).unwrap(), seed_kb());
}

#[test]
fn concurrent_editors_exactly_one_wins() {
    let (_dir, store) = seeded();
    let store = Arc::new(store);
    let v0 = store.head().unwrap();
    let ids = ["RC2", "RC5", "RC6", "RC10", "RC15", "RC21", "RC30", "R25"];
    let handles: Vec<_> = ids
        .iter()
        .map(|id| {
            let store = store.clone();
            let v0 = v0.clone();
            let id = id.to_string();
            thread::spawn(move || store.edit_kb(&v0, |kb| kb.delete_rule(&id.as_str().into())))
        })
        .collect();
    let outcomes: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert_eq!(outcomes.iter().filter(|o| o.is_ok()).count(), 1);
    assert!(outcomes
        .iter()
        .filter_map(|o| o.as_ref().err())
        .all(|e| matches!(e, StoreError::Conflict { .. })));
    assert_eq!(store.kb(&store.head().unwrap()).unwrap().rules.len(), 8);
}

#[test]
fn invalid_edits_leave_head_alone() {
    let (_dir, store) = seeded();
    let v0 = store.head().unwrap();
    let err = store.edit_kb(&v0, |kb| kb.delete_indicator("umphenjane")).unwrap_err();
    assert!(matches!(err, StoreError::Kb(_)));
    assert_eq!(store.head().unwrap(), v0);
}

#[test]
fn sessions_stay_pinned_until_rebased() {
    let (_dir, store) = seeded();
    let v0 = store.head().unwrap();
    let id = store.create_session().unwrap().id.to_string();
    store.add_observation(&id, obs("umphenjane", "blooming", 0.9)).unwrap();
    store.add_observation(&id, obs("humidity", "high", 0.7)).unwrap();

    let v1 = store
        .edit_kb(&v0, |kb| {
            let mut next = kb.clone();
            next.rules.retain(|r| !r.premises.iter().any(|p| p.object == "humidity"));
            next.delete_indicator("humidity")
        })
        .unwrap();

    // Pinned: still accepts the old catalog.
    store.add_observation(&id, obs("humidity", "low", 0.2)).unwrap();
    assert_eq!(store.session(&id).unwrap().kb_version, v0);

    let rebase = store.rebase(&id).unwrap();
    assert!(rebase.changed());
    assert_eq!(rebase.from, v0);
    assert_eq!(rebase.session.kb_version, v1);
    assert_eq!(rebase.dropped.len(), 2);
    assert!(rebase.dropped.iter().all(|o| o.condition.object == "humidity"));
    assert_eq!(rebase.session.wm.len(), 1);

    let again = store.rebase(&id).unwrap();
    assert!(!again.changed());
    assert!(again.dropped.is_empty());
}

#[test]
fn list_sessions_finds_created_ones() {
    let (_dir, store) = seeded();
    let mut ids: Vec<_> = (0..5).map(|_| store.create_session().unwrap().id).collect();
    ids.sort();
    assert_eq!(store.backend().list_sessions().unwrap(), ids);
}

/// Random sessions over the seed catalog, with and without a stored result.
fn session_strategy(version: KbVersion) -> impl Strategy<Value = Session> {
    let kb = seed_kb();
    let keys: Vec<(String, Relation, String)> = kb
        .catalog
        .values()
        .flat_map(|i| i.states.iter().map(move |s| (i.name.clone(), s.relation, s.value.clone())))
        .collect();
    let n = keys.len();
    (
        prop::collection::vec(prop::option::weighted(0.2, (0.0f64..=1.0, any::<bool>())), n),
        0i64..4_102_444_800,
        0u32..1_000_000_000,
        any::<bool>(),
    )
        .prop_map(move |(picks, secs, nanos, with_result)| {
            let wm: WorkingMemory = keys
                .iter()
                .zip(picks)
                .filter_map(|((o, r, v), p)| {
                    p.map(|(c, assumed)| {
                        let cond = Condition::new(o, *r, v);
                        if assumed {
                            Observation::assumed(cond)
                        } else {
                            Observation::new(cond, cf(c))
                        }
                    })
                })
                .collect();
            let mut s = Session::new(version.clone());
            s.created_at = Utc.timestamp_opt(secs, nanos).unwrap();
            s.last_result = with_result.then(|| run(&kb, &wm).unwrap());
            s.wm = wm;
            s
        })
}

#[test]
fn hundred_random_sessions_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let fs_store = FsStore::open(dir.path()).unwrap();
    let version = fs_store.put_snapshot(&seed_kb()).unwrap();
    let strategy = session_strategy(version);
    let mut runner = TestRunner::new(Config::with_cases(100));
    let mut written = Vec::new();
    for _ in 0..100 {
        let s = strategy.new_tree(&mut runner).unwrap().current();
        fs_store.save_session(&s).unwrap();
        written.push(s);
    }
    assert_eq!(fs_store.list_sessions().unwrap().len(), 100);
    for s in &written {
        assert_eq!(&fs_store.load_session(&s.id).unwrap(), s);
    }
}
