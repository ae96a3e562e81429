//! HTTP/JSON login service for two-layer torus PIN entry.
//!
//! Users register once; each login opens a server-side session, the client
//! moves the cursor board and commits steps, then finalizes for a verdict.

pub mod api;
pub mod app;
pub mod store;

pub use app::{router, ApiError, AppState, ServiceConfig};
pub use store::{load_or_create_vault, UserRecord, UserStore};
