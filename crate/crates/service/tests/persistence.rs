mod common;

use axum::http::StatusCode;
use common::*;
use outfit_service::state::StateFile;

#[tokio::test]
async fn users_ingested_items_and_cache_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.json");
    let first = {
        let (_, app) = app_with_state(Some(path.clone()));
        assert_eq!(like(&app, "ana", &["top-00", "bottom-01"], true).await.json()["version"], 1);
        assert_eq!(ingest(&app, &record("late-shoe", "shoes", 4)).await.status, StatusCode::OK);
        let body = get(&app, "/outfits?anchor=top-02&occasion=work").await;
        // The anonymous fill is written by the next mutation.
        like(&app, "ana", &["shoes-00"], false).await;
        body
    };

    let file: StateFile = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(file.version, 1);
    assert_eq!(file.users["ana"].version, 2);
    assert_eq!(file.ingested.len(), 1);

    let (state, app) = app_with_state(Some(path.clone()));
    assert!(state.snapshot().engine.catalog().contains("late-shoe"));
    assert_eq!(state.snapshot().version, 1);
    assert_eq!(state.user("ana").await.version, 2);
    let again = get(&app, "/outfits?anchor=top-02&occasion=work").await;
    assert_eq!(again.cache.as_deref(), Some("hit"));
    assert_eq!(again.bytes, first.bytes);
    assert_eq!(like(&app, "ana", &["top-03"], true).await.json()["version"], 3);
}

#[tokio::test]
async fn cache_is_dropped_when_the_configuration_changes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.json");
    {
        let (state, app) = app_with_state(Some(path.clone()));
        get(&app, "/outfits?anchor=top-02&occasion=work").await;
        state.persist().await.unwrap();
    }
    let mut file: StateFile = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(file.cache.len(), 1);
    file.config_hash = "something-else".into();
    std::fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();

    let (state, app) = app_with_state(Some(path));
    assert_eq!(state.cache_len(), 0);
    assert_eq!(get(&app, "/outfits?anchor=top-02&occasion=work").await.cache.as_deref(), Some("miss"));
}

#[tokio::test]
async fn unknown_state_format_refuses_to_start() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.json");
    std::fs::write(&path, r#"{"format":"other","version":9,"config_hash":"","base_catalog":"","snapshot_version":0,"ingested":[],"users":{},"cache":{"entries":[]}}"#).unwrap();
    assert!(outfit_service::AppState::open(engine(), path).is_err());
}
