use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use assocpin_core::board::Side;
use assocpin_core::credential::{split_legacy_pin, Credentials, StorageMode, StoredCredential, Vault};
use assocpin_core::rng::{self, DetRng};
use assocpin_core::session::{profile_credentials, EngineConfig, LoginSession, SessionEngine, SessionError};
use assocpin_core::Verdict;
use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use rand::{Rng, RngCore};
use serde::de::DeserializeOwned;
use serde_json::json;
use thiserror::Error;

use crate::api::{
    absolute_cell, BoardChoice, BoardView, CreateUser, CreatedUser, FinalizeResponse, MoveOrder,
    MoveResponse, OpenRequest, OpenResponse, StepResponse, PRESET_3X3,
};
use crate::store::{StoreError, UserRecord, UserStore};

pub const DEFAULT_LOCKOUT_THRESHOLD: u32 = 5;
pub const DEFAULT_IDLE_TIMEOUT: Duration = Duration::from_secs(120);
const MAX_USER_ID_LEN: usize = 128;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub lockout_threshold: u32,
    pub idle_timeout: Duration,
    /// Fixes tokens and board shuffles. Test mode only.
    pub test_seed: Option<u64>,
    pub engine: EngineConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            lockout_threshold: DEFAULT_LOCKOUT_THRESHOLD,
            idle_timeout: DEFAULT_IDLE_TIMEOUT,
            test_seed: None,
            engine: EngineConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("user already exists")]
    Conflict,
    #[error("unknown or expired session")]
    NoSession,
    #[error("account locked")]
    Locked,
    #[error("{0}")]
    State(String),
    /// Same body as a failed finalize, so unknown users look like failures.
    #[error("authentication failed")]
    AuthFailed,
    #[error("{0}")]
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self {
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Conflict | ApiError::State(_) => StatusCode::CONFLICT,
            ApiError::NoSession => StatusCode::NOT_FOUND,
            ApiError::Locked => StatusCode::LOCKED,
            ApiError::AuthFailed => StatusCode::UNAUTHORIZED,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = match &self {
            ApiError::AuthFailed => json!({ "result": Verdict::Failure }),
            other => json!({ "error": other.to_string() }),
        };
        (status, Json(body)).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::NotInProgress(_)
            | SessionError::AllStepsEntered { .. }
            | SessionError::NothingToReset
            | SessionError::Incomplete { .. } => ApiError::State(e.to_string()),
            SessionError::CandidateCeiling { .. } => ApiError::Internal(e.to_string()),
            other => ApiError::BadRequest(other.to_string()),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Duplicate => ApiError::Conflict,
            StoreError::Unknown => ApiError::AuthFailed,
            other => ApiError::Internal(other.to_string()),
        }
    }
}

struct Slot {
    session: LoginSession,
    user_id: String,
    last_seen: Instant,
}

type SlotRef = Arc<tokio::sync::Mutex<Slot>>;

pub struct AppState {
    engine: SessionEngine,
    store: UserStore,
    config: ServiceConfig,
    sessions: Mutex<HashMap<String, SlotRef>>,
    rng: Mutex<DetRng>,
}

impl AppState {
    pub fn new(config: ServiceConfig, store: UserStore, vault: Option<Vault>) -> Self {
        let seed = config.test_seed.unwrap_or_else(rng::entropy_seed);
        AppState {
            engine: SessionEngine::new(config.engine, vault),
            store,
            config,
            sessions: Mutex::new(HashMap::new()),
            rng: Mutex::new(rng::seeded(seed)),
        }
    }

    pub fn store(&self) -> &UserStore {
        &self.store
    }

    pub fn live_sessions(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }

    fn fresh_token_and_seed(&self) -> (String, u64) {
        let mut rng = self.rng.lock().unwrap();
        let mut token = [0u8; 16];
        rng.fill_bytes(&mut token);
        (hex::encode(token), rng.random())
    }

    /// Locked slot for `token`, dropping it if it sat idle too long.
    async fn slot(&self, token: &str) -> Result<(SlotRef, tokio::sync::OwnedMutexGuard<Slot>), ApiError> {
        let slot = self
            .sessions
            .lock()
            .unwrap()
            .get(token)
            .cloned()
            .ok_or(ApiError::NoSession)?;
        let mut guard = Arc::clone(&slot).lock_owned().await;
        if guard.last_seen.elapsed() > self.config.idle_timeout {
            self.sessions.lock().unwrap().remove(token);
            return Err(ApiError::NoSession);
        }
        guard.last_seen = Instant::now();
        Ok((slot, guard))
    }

    fn prune_idle(&self) {
        let idle = self.config.idle_timeout;
        self.sessions.lock().unwrap().retain(|_, slot| match slot.try_lock() {
            Ok(s) => s.last_seen.elapsed() <= idle,
            Err(_) => true,
        });
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/users", post(create_user))
        .route("/sessions", post(open_login))
        .route("/sessions/{token}/move", post(apply_move))
        .route("/sessions/{token}/commit", post(commit))
        .route("/sessions/{token}/reset", post(reset))
        .route("/sessions/{token}/finalize", post(finalize))
        .with_state(state)
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("malformed request: {e}")))
}

fn bad(e: impl std::fmt::Display) -> ApiError {
    ApiError::BadRequest(e.to_string())
}

/// Credentials and board from a registration request.
pub fn build_user(
    req: &CreateUser,
    engine: &SessionEngine,
) -> Result<UserRecord, ApiError> {
    if req.user_id.is_empty() || req.user_id.len() > MAX_USER_ID_LEN {
        return Err(bad("user_id must be 1 to 128 bytes"));
    }
    let board = req
        .board
        .clone()
        .unwrap_or_else(|| BoardChoice::Preset(PRESET_3X3.into()))
        .resolve()
        .map_err(bad)?;
    let sources = [req.ui_password.is_some(), req.legacy_pin.is_some(), req.profile.is_some()];
    if sources.iter().filter(|&&s| s).count() != 1 {
        return Err(bad("give exactly one of ui_password, legacy_pin or profile"));
    }

    let id_indices = |req: &CreateUser| -> Result<Vec<usize>, ApiError> {
        let id = req.id_password.as_ref().ok_or_else(|| bad("id_password is required"))?;
        id.tokens()
            .iter()
            .map(|s| board.index_of(Side::Fixed, s).map_err(bad))
            .collect()
    };

    let creds = if let Some(ui) = &req.ui_password {
        let id = req.id_password.as_ref().ok_or_else(|| bad("id_password is required"))?;
        Credentials::from_labels(&board, &id.tokens(), &ui.tokens()).map_err(bad)?
    } else if let Some(pin) = &req.legacy_pin {
        if req.id_password.is_some() {
            return Err(bad("legacy_pin replaces id_password"));
        }
        let m = req.ui_length.ok_or_else(|| bad("legacy_pin needs ui_length"))?;
        split_legacy_pin(&board, &pin.tokens(), m).map_err(bad)?
    } else {
        let bank = req.profile.as_ref().expect("checked above");
        let answers = req.answers.as_ref().ok_or_else(|| bad("profile needs answers"))?;
        profile_credentials(&board, id_indices(req)?, bank, answers)?
    };

    if req.mode == StorageMode::HashOnly {
        if req.display_l.is_some() {
            return Err(bad(SessionError::PartialDisplayNeedsRecoverable));
        }
        let ceiling = engine.config().candidate_ceiling;
        let count = (board.n() as u128).checked_pow(creds.k() as u32);
        if count.is_none_or(|c| c > ceiling) {
            return Err(bad(format!(
                "hash-only validation of a length-{} password exceeds the candidate ceiling {ceiling}",
                creds.k()
            )));
        }
    }
    let credential = StoredCredential::create(&req.user_id, &creds, req.mode, engine.vault()).map_err(bad)?;
    let record = UserRecord::new(credential, board, req.profile.clone(), req.display_l);
    // a throwaway session catches bad display settings now rather than at login
    engine.begin_for(&record.entry(), record.display_l, 0)?;
    Ok(record)
}

async fn create_user(State(app): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateUser = parse(&body)?;
    let record = build_user(&req, &app.engine)?;
    let reply = CreatedUser {
        user_id: record.user_id.clone(),
        mode: record.credential.mode,
        k: record.credential.id_len,
        created_at: record.created_at,
    };
    app.store.insert_new(record)?;
    Ok((StatusCode::CREATED, Json(reply)).into_response())
}

async fn open_login(State(app): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: OpenRequest = parse(&body)?;
    let record = app.store.get(&req.user_id).ok_or(ApiError::AuthFailed)?;
    if record.failed_attempts >= app.config.lockout_threshold {
        return Err(ApiError::Locked);
    }
    app.prune_idle();
    let (token, seed) = app.fresh_token_and_seed();
    let session = app
        .engine
        .begin_for(&record.entry(), record.display_l, seed)
        .map_err(|e| ApiError::Internal(e.to_string()))?;
    let reply = OpenResponse {
        token: token.clone(),
        board_view: BoardView::of(&session),
        k: session.k(),
    };
    let slot = Slot {
        session,
        user_id: record.user_id,
        last_seen: Instant::now(),
    };
    app.sessions
        .lock()
        .unwrap()
        .insert(token, Arc::new(tokio::sync::Mutex::new(slot)));
    Ok((StatusCode::CREATED, Json(reply)).into_response())
}

async fn apply_move(
    State(app): State<Arc<AppState>>,
    Path(token): Path<String>,
    body: Bytes,
) -> Result<Json<MoveResponse>, ApiError> {
    let (_, mut slot) = app.slot(&token).await?;
    let order: MoveOrder = parse(&body)?;
    match order {
        MoveOrder::Relative { drow, dcol } => {
            slot.session.move_cursor((drow, dcol))?;
        }
        MoveOrder::Absolute { x, y } => {
            let cell = absolute_cell(x, y, slot.session.spec().dims());
            slot.session.place_origin_at(cell)?;
        }
    }
    Ok(Json(MoveResponse {
        board_view: BoardView::of(&slot.session),
    }))
}

async fn commit(
    State(app): State<Arc<AppState>>,
    Path(token): Path<String>,
) -> Result<Json<StepResponse>, ApiError> {
    let (_, mut slot) = app.slot(&token).await?;
    let ack = slot.session.commit_current()?;
    Ok(Json(StepResponse {
        entered: ack.entered,
        board_view: BoardView::of(&slot.session),
    }))
}

async fn reset(
    State(app): State<Arc<AppState>>,
    Path(token): Path<String>,
) -> Result<Json<StepResponse>, ApiError> {
    let (_, mut slot) = app.slot(&token).await?;
    let ack = slot.session.reset_last()?;
    Ok(Json(StepResponse {
        entered: ack.entered,
        board_view: BoardView::of(&slot.session),
    }))
}

async fn finalize(
    State(app): State<Arc<AppState>>,
    Path(token): Path<String>,
) -> Result<Json<FinalizeResponse>, ApiError> {
    let (_, mut slot) = app.slot(&token).await?;
    if slot.session.entered() != slot.session.k() {
        return Err(SessionError::Incomplete {
            entered: slot.session.entered(),
            k: slot.session.k(),
        }
        .into());
    }
    app.sessions.lock().unwrap().remove(&token);
    let user_id = slot.user_id.clone();
    let record = app.store.get(&user_id).ok_or(ApiError::NoSession)?;
    let report = app
        .engine
        .validate_with_report(&mut slot.session, &record.credential)?;
    app.store.update(&user_id, |r| match report.verdict {
        Verdict::Success => r.failed_attempts = 0,
        Verdict::Failure => r.failed_attempts = r.failed_attempts.saturating_add(1),
    })?;
    Ok(Json(FinalizeResponse {
        result: report.verdict,
    }))
}
