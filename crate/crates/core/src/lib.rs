//! Associative two-password PIN entry on a two-layer torus keyboard.
//!
//! A fixed board of ID symbols is overlaid by a moveable cursor board of UI
//! symbols that wraps at both edges. The user proves knowledge of an ID
//! password by aligning, at each step, the secret UI symbol over the secret ID
//! symbol and committing. Every cursor symbol sits over some fixed symbol, so
//! an observer who records the screen learns only that one of `n` pairs was
//! intended at each step.
//!
//! Module map:
//!
//! - [`board`]: torus geometry, layouts, alignment, shuffling, partial display.
//! - [`credential`]: credentials, legacy PIN splitting, salted iterated hashing,
//!   sealed storage.
//! - [`session`]: the login lifecycle (commit, reset, validate).
//! - [`transcript`]: what an observer records from a finished session.
//! - [`profile`]: UI passwords derived from profile questions.
//! - [`attack`]: candidate enumeration, intersection and mouse-logger attacks.

pub mod attack;
pub mod board;
pub mod credential;
pub mod profile;
pub mod rng;
pub mod session;
pub mod transcript;

pub use board::{
    torus_wrap, Alignment, BoardError, BoardSpec, BoardState, Cell, DisplaySubset, Pair,
    ShuffleScope, TorusOffset,
};
pub use credential::{Credentials, StoredCredential, StorageMode};
pub use session::{LoginSession, SessionEngine, SessionError, SessionStatus, StepAck, Verdict};
pub use transcript::{ObservedStep, SessionTranscript};
