mod common;

use std::sync::Arc;

use assocpin_service::{load_or_create_vault, AppState, UserStore};
use axum::http::StatusCode;
use common::{config, sample_user, Client, SAMPLE_PAIRS};

fn boot(dir: &std::path::Path) -> (Client, Arc<AppState>) {
    let store = UserStore::open(&dir.join("users.jsonl")).unwrap();
    let vault = load_or_create_vault(&dir.join("vault.key")).unwrap();
    let state = Arc::new(AppState::new(config(None), store, Some(vault)));
    (Client::new(Arc::clone(&state)), state)
}

#[tokio::test]
async fn restart_keeps_users_and_drops_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let (c, state) = boot(dir.path());
    for (user, mode) in [("h", "hash-only"), ("p", "plaintext-recoverable")] {
        assert_eq!(c.create_user(sample_user(user, mode)).await.status, StatusCode::CREATED);
    }
    let mut wrong = SAMPLE_PAIRS;
    wrong[3].1 = 4;
    assert_eq!(c.login("h", &wrong).await.json()["result"], "failure");
    let in_flight = c.open_ok("p").await;
    let before_h = state.store().get("h").unwrap();
    let before_p = state.store().get("p").unwrap();
    drop((c, state));

    let (c, state) = boot(dir.path());
    assert_eq!(state.store().len(), 2);
    assert_eq!(state.store().get("h").unwrap(), before_h);
    assert_eq!(state.store().get("p").unwrap(), before_p);
    assert_eq!(before_h.failed_attempts, 1);
    assert_eq!(c.action(&in_flight.token, "commit").await.status, StatusCode::NOT_FOUND);
    for user in ["h", "p"] {
        assert_eq!(c.login(user, &SAMPLE_PAIRS).await.json()["result"], "success");
    }
    assert_eq!(state.store().get("h").unwrap().failed_attempts, 0);
    assert_eq!(c.create_user(sample_user("p", "hash-only")).await.status, StatusCode::CONFLICT);

    // last record per user wins on replay
    let lines = std::fs::read_to_string(dir.path().join("users.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 5);
    let (_, again) = boot(dir.path());
    assert_eq!(again.store().get("h").unwrap().failed_attempts, 0);
}

#[tokio::test]
async fn wrong_vault_key_cannot_open_sealed_users() {
    let dir = tempfile::tempdir().unwrap();
    let (c, _) = boot(dir.path());
    c.create_user(sample_user("p", "plaintext-recoverable")).await;
    drop(c);
    std::fs::remove_file(dir.path().join("vault.key")).unwrap();
    let (c, _) = boot(dir.path());
    assert_eq!(c.open("p").await.status, StatusCode::INTERNAL_SERVER_ERROR);
}

#[test]
fn corrupt_store_is_reported_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("users.jsonl");
    std::fs::write(&path, "\n{broken\n").unwrap();
    let err = UserStore::open(&path).unwrap_err().to_string();
    assert!(err.contains(":2:"), "{err}");
}

#[test]
fn vault_key_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k");
    load_or_create_vault(&path).unwrap();
    let key = std::fs::read_to_string(&path).unwrap();
    load_or_create_vault(&path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), key);
    std::fs::write(&path, "abcd").unwrap();
    assert!(load_or_create_vault(&path).is_err());
}
