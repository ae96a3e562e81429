#![allow(dead_code)]

use std::sync::Arc;

use assocpin_service::api::{BoardView, OpenResponse, StepResponse};
use assocpin_service::{router, AppState, ServiceConfig, UserStore};
use axum::body::Body;
use axum::http::{HeaderMap, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

#[derive(Debug)]
pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub bytes: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes).unwrap_or(Value::Null)
    }

    pub fn parse<T: serde::de::DeserializeOwned>(&self) -> T {
        serde_json::from_slice(&self.bytes)
            .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.bytes)))
    }

    /// Everything a client receives, for leak scans.
    pub fn raw(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.headers {
            s.push_str(&format!("{k}: {}\n", v.to_str().unwrap_or("")));
        }
        s.push_str(&String::from_utf8_lossy(&self.bytes));
        s
    }
}

#[derive(Clone)]
pub struct Client {
    router: Router,
}

impl Client {
    pub fn new(state: Arc<AppState>) -> Self {
        Client {
            router: router(state),
        }
    }

    pub async fn post_raw(&self, path: &str, body: &str) -> Reply {
        let req = Request::builder()
            .method("POST")
            .uri(path)
            .header("content-type", "application/json")
            .body(Body::from(body.to_owned()))
            .unwrap();
        let resp = self.router.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let headers = resp.headers().clone();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        Reply { status, headers, bytes }
    }

    pub async fn post(&self, path: &str, body: Value) -> Reply {
        self.post_raw(path, &body.to_string()).await
    }

    pub async fn create_user(&self, body: Value) -> Reply {
        self.post("/users", body).await
    }

    pub async fn open(&self, user_id: &str) -> Reply {
        self.post("/sessions", json!({ "user_id": user_id })).await
    }

    pub async fn open_ok(&self, user_id: &str) -> OpenResponse {
        let r = self.open(user_id).await;
        assert_eq!(r.status, StatusCode::CREATED, "{}", r.raw());
        r.parse()
    }

    pub async fn action(&self, token: &str, what: &str) -> Reply {
        self.post_raw(&format!("/sessions/{token}/{what}"), "").await
    }

    pub async fn move_by(&self, token: &str, delta: (i64, i64)) -> Reply {
        self.post(
            &format!("/sessions/{token}/move"),
            json!({ "kind": "relative", "delta": [delta.0, delta.1] }),
        )
        .await
    }

    /// Move so cursor symbol `m` sits over fixed symbol `f`, then commit.
    pub async fn enter(&self, token: &str, view: &BoardView, f: usize, m: usize) -> (Reply, Reply) {
        let mv = self.move_by(token, delta_for(view, f, m)).await;
        assert_eq!(mv.status, StatusCode::OK, "{}", mv.raw());
        let commit = self.action(token, "commit").await;
        (mv, commit)
    }

    /// Enter all pairs and finalize; returns the finalize reply.
    pub async fn login(&self, user_id: &str, pairs: &[(usize, usize)]) -> Reply {
        let open = self.open_ok(user_id).await;
        let mut view = open.board_view;
        for &(f, m) in pairs {
            let (_, c) = self.enter(&open.token, &view, f, m).await;
            assert_eq!(c.status, StatusCode::OK, "{}", c.raw());
            view = c.parse::<StepResponse>().board_view;
        }
        self.action(&open.token, "finalize").await
    }
}

pub fn config(seed: Option<u64>) -> ServiceConfig {
    ServiceConfig {
        test_seed: seed,
        ..ServiceConfig::default()
    }
}

pub fn memory_app(config: ServiceConfig) -> (Client, Arc<AppState>) {
    let vault = assocpin_core::credential::Vault::new([9; 32]);
    let state = Arc::new(AppState::new(config, UserStore::in_memory(), Some(vault)));
    (Client::new(Arc::clone(&state)), state)
}

/// Relative move that puts cursor symbol `m` over fixed symbol `f`.
pub fn delta_for(view: &BoardView, f: usize, m: usize) -> (i64, i64) {
    let cols = view.cols;
    let p = view.fixed.iter().position(|&s| s == f).expect("fixed symbol on board");
    let c = view.cursor.iter().position(|&s| s == Some(m)).expect("cursor symbol visible");
    let want = (
        (p / cols) as i64 - (c / cols) as i64,
        (p % cols) as i64 - (c % cols) as i64,
    );
    (want.0 - view.offset.drow as i64, want.1 - view.offset.dcol as i64)
}

pub fn sample_user(user_id: &str, mode: &str) -> Value {
    json!({
        "user_id": user_id,
        "mode": mode,
        "id_password": "3141",
        "ui_password": "CAHB",
    })
}

/// (3,C),(1,A),(4,H),(1,B) as symbol indices.
pub const SAMPLE_PAIRS: [(usize, usize); 4] = [(2, 2), (0, 0), (3, 7), (0, 1)];
