//! Login sessions.
//!
//! A [`LoginSession`] walks through `k` entry steps. Each step shows a freshly
//! shuffled [`BoardState`]; the user translates the cursor board and commits.
//! The only thing a commit returns is the number of entered keys; whether the
//! step matched stays inside the session until [`SessionEngine::validate_session`].
//!
//! Two validation modes exist. With a plaintext-recoverable credential the
//! engine unseals the expected pairs and checks every committed alignment.
//! With a hash-only credential it enumerates every pair sequence the
//! committed boards allow (`n^k`, or `l^k` under partial display), hashes
//! each, and compares against the stored digest.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::board::{BoardError, BoardSpec, BoardState, Cell, DisplaySubset, Pair, ShuffleScope, TorusOffset};
use crate::credential::{CredentialError, Credentials, StorageMode, StoredCredential, Vault};
use crate::profile::{self, ProfileAnswerSet, ProfileError, ProfileQuestionBank};
use crate::rng::{self, DetRng};
use crate::transcript::{ObservedStep, SessionTranscript};

pub const DEFAULT_CANDIDATE_CEILING: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("unknown user")]
    UnknownUser,
    #[error("user already exists")]
    DuplicateUser,
    #[error("a session needs at least one step")]
    ZeroLength,
    #[error("session is {0:?}, not in progress")]
    NotInProgress(SessionStatus),
    #[error("all {k} steps already entered")]
    AllStepsEntered { k: usize },
    #[error("no entered step to reset")]
    NothingToReset,
    #[error("session incomplete: {entered} of {k} steps entered")]
    Incomplete { entered: usize, k: usize },
    #[error("{count} candidates exceed the validation ceiling of {ceiling}")]
    CandidateCeiling { count: u128, ceiling: u128 },
    #[error("partial display needs the UI password, which hash-only storage does not keep")]
    PartialDisplayNeedsRecoverable,
    #[error("profile bank has {bank} choices but the board has {board} keys")]
    ProfileMismatch { bank: usize, board: usize },
    #[error(transparent)]
    Board(#[from] BoardError),
    #[error(transparent)]
    Credential(#[from] CredentialError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionStatus {
    InProgress,
    ValidatedSuccess,
    ValidatedFailure,
    Aborted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Success,
    Failure,
}

/// Reply to a commit or reset: the asterisk count and nothing else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepAck {
    pub entered: usize,
}

/// Replayable user actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "lowercase")]
pub enum SessionEvent {
    Move { drow: i64, dcol: i64 },
    Place { row: usize, col: usize },
    Commit,
    Reset,
}

#[derive(Debug, Clone)]
pub(crate) struct StepRecord {
    pub(crate) state: BoardState,
    pub(crate) visible: DisplaySubset,
    pub(crate) matched: bool,
}

impl StepRecord {
    fn accepts(&self, pair: Pair) -> bool {
        self.visible.contains(pair.cursor) && self.state.alignment().aligns(pair)
    }

    /// Pairs an observer cannot rule out at this step.
    fn displayable_pairs(&self) -> Vec<Pair> {
        self.state
            .alignment()
            .pairs()
            .filter(|p| self.visible.contains(p.cursor))
            .collect()
    }
}

/// Everything needed to start a session, independent of user storage.
#[derive(Debug, Clone)]
pub struct SessionSetup {
    pub spec: Arc<BoardSpec>,
    pub k: usize,
    /// Cursor symbols shown per step; `None` shows all `n`.
    pub display_l: Option<usize>,
    pub seed: u64,
    pub scope: ShuffleScope,
    /// Expected pairs, known only when the credential is recoverable.
    pub expected: Option<Vec<Pair>>,
    /// Question order for profile-derived UI passwords.
    pub ui_order: Option<Vec<usize>>,
    /// Cursor skin per step.
    pub skins: Option<Vec<String>>,
}

impl SessionSetup {
    pub fn new(spec: Arc<BoardSpec>, k: usize, seed: u64) -> Self {
        SessionSetup {
            spec,
            k,
            display_l: None,
            seed,
            scope: ShuffleScope::Both,
            expected: None,
            ui_order: None,
            skins: None,
        }
    }

    pub fn expecting(mut self, pairs: Vec<Pair>) -> Self {
        self.expected = Some(pairs);
        self
    }

    pub fn display(mut self, l: usize) -> Self {
        self.display_l = Some(l);
        self
    }
}

#[derive(Debug, Clone)]
pub struct LoginSession {
    id: String,
    spec: Arc<BoardSpec>,
    k: usize,
    display_l: usize,
    status: SessionStatus,
    steps: Vec<StepRecord>,
    current: BoardState,
    current_visible: DisplaySubset,
    expected: Option<Vec<Pair>>,
    ui_order: Option<Vec<usize>>,
    skins: Option<Vec<String>>,
    scope: ShuffleScope,
    rng: DetRng,
}

impl LoginSession {
    pub fn begin(setup: SessionSetup) -> Result<Self, SessionError> {
        let SessionSetup {
            spec,
            k,
            display_l,
            seed,
            scope,
            expected,
            ui_order,
            skins,
        } = setup;
        if k == 0 {
            return Err(SessionError::ZeroLength);
        }
        let n = spec.n();
        let display_l = display_l.unwrap_or(n);
        if display_l < 2 || display_l > n {
            return Err(BoardError::VisibleCount { l: display_l, n }.into());
        }
        if display_l < n && expected.is_none() {
            return Err(SessionError::PartialDisplayNeedsRecoverable);
        }
        let mut rng = rng::seeded(seed);
        let current = BoardState::identity(Arc::clone(&spec)).shuffle_with(&mut rng, scope);
        let mut session = LoginSession {
            id: rng::random_hex(16),
            spec,
            k,
            display_l,
            status: SessionStatus::InProgress,
            steps: Vec::with_capacity(k),
            current_visible: DisplaySubset::all(n),
            current,
            expected,
            ui_order,
            skins,
            scope,
            rng,
        };
        session.current_visible = session.draw_visible()?;
        Ok(session)
    }

    fn draw_visible(&mut self) -> Result<DisplaySubset, SessionError> {
        let n = self.spec.n();
        if self.display_l == n {
            return Ok(DisplaySubset::all(n));
        }
        let step = self.steps.len().min(self.k - 1);
        let correct = self
            .expected
            .as_ref()
            .map(|e| e[step].cursor)
            .ok_or(SessionError::PartialDisplayNeedsRecoverable)?;
        Ok(self
            .current
            .visible_subset_with(correct, self.display_l, &mut self.rng)?)
    }

    fn reshuffle(&mut self) -> Result<(), SessionError> {
        self.current = self.current.shuffle_with(&mut self.rng, self.scope);
        self.current_visible = self.draw_visible()?;
        Ok(())
    }

    fn ensure_in_progress(&self) -> Result<(), SessionError> {
        match self.status {
            SessionStatus::InProgress => Ok(()),
            other => Err(SessionError::NotInProgress(other)),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn spec(&self) -> &Arc<BoardSpec> {
        &self.spec
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn display_l(&self) -> usize {
        self.display_l
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    /// Number of committed, un-reset steps.
    pub fn entered(&self) -> usize {
        self.steps.len()
    }

    pub fn current(&self) -> &BoardState {
        &self.current
    }

    pub fn current_visible(&self) -> &DisplaySubset {
        &self.current_visible
    }

    pub fn current_skin(&self) -> &str {
        self.skins
            .as_ref()
            .and_then(|s| s.get(self.steps.len().min(self.k - 1)))
            .map(String::as_str)
            .unwrap_or_else(|| self.spec.cursor_skin())
    }

    pub fn ui_order(&self) -> Option<&[usize]> {
        self.ui_order.as_deref()
    }

    pub fn move_cursor(&mut self, delta: (i64, i64)) -> Result<&BoardState, SessionError> {
        self.ensure_in_progress()?;
        self.current = self.current.move_cursor(delta);
        Ok(&self.current)
    }

    /// Put the pointer-origin cell of the cursor board over `target`.
    pub fn place_origin_at(&mut self, target: Cell) -> Result<&BoardState, SessionError> {
        self.ensure_in_progress()?;
        let target = self.spec.cell(target.row, target.col)?;
        self.current = self.current.place_origin_at(target);
        Ok(&self.current)
    }

    pub fn commit_step(&mut self, offset: TorusOffset) -> Result<StepAck, SessionError> {
        self.ensure_in_progress()?;
        if self.steps.len() == self.k {
            return Err(SessionError::AllStepsEntered { k: self.k });
        }
        let (rows, cols) = self.spec.dims();
        if offset.drow >= rows || offset.dcol >= cols {
            return Err(BoardError::CellOutOfRange {
                row: offset.drow,
                col: offset.dcol,
            }
            .into());
        }
        let mut record = StepRecord {
            state: self.current.with_offset(offset),
            visible: self.current_visible.clone(),
            matched: false,
        };
        if let Some(expected) = &self.expected {
            record.matched = record.accepts(expected[self.steps.len()]);
        }
        self.steps.push(record);
        self.reshuffle()?;
        Ok(StepAck {
            entered: self.steps.len(),
        })
    }

    /// Commit at the offset currently on screen.
    pub fn commit_current(&mut self) -> Result<StepAck, SessionError> {
        let offset = self.current.offset();
        self.commit_step(offset)
    }

    pub fn reset_last(&mut self) -> Result<StepAck, SessionError> {
        self.ensure_in_progress()?;
        if self.steps.pop().is_none() {
            return Err(SessionError::NothingToReset);
        }
        self.reshuffle()?;
        Ok(StepAck {
            entered: self.steps.len(),
        })
    }

    pub fn abort(&mut self) {
        if self.status == SessionStatus::InProgress {
            self.status = SessionStatus::Aborted;
        }
    }

    pub fn apply(&mut self, event: SessionEvent) -> Result<Option<StepAck>, SessionError> {
        match event {
            SessionEvent::Move { drow, dcol } => self.move_cursor((drow, dcol)).map(|_| None),
            SessionEvent::Place { row, col } => self.place_origin_at(Cell { row, col }).map(|_| None),
            SessionEvent::Commit => self.commit_current().map(Some),
            SessionEvent::Reset => self.reset_last().map(Some),
        }
    }

    /// What an observer recording the screen captured. Needs all `k` steps.
    pub fn transcript(&self) -> Result<SessionTranscript, SessionError> {
        if self.steps.len() != self.k {
            return Err(SessionError::Incomplete {
                entered: self.steps.len(),
                k: self.k,
            });
        }
        let steps = self
            .steps
            .iter()
            .map(|r| ObservedStep {
                committed_offset: r.state.offset(),
                board: r.state.clone(),
                visible: r.visible.clone(),
            })
            .collect();
        Ok(SessionTranscript::new(Arc::clone(&self.spec), steps))
    }

    #[cfg(test)]
    pub(crate) fn match_bits(&self) -> Vec<bool> {
        self.steps.iter().map(|r| r.matched).collect()
    }

    fn plaintext_verdict(&self, creds: &Credentials) -> bool {
        if creds.k() != self.k {
            return false;
        }
        let expected = match &self.ui_order {
            Some(order) if order.len() == creds.m() => creds.expected_pairs_ordered(order),
            Some(_) => return false,
            None => creds.expected_pairs(),
        };
        self.steps
            .iter()
            .zip(&expected)
            .fold(true, |ok, (r, &p)| r.accepts(p) & ok)
    }

    fn hash_only_verdict(
        &self,
        stored: &StoredCredential,
        ceiling: u128,
    ) -> Result<(bool, u64), SessionError> {
        let sets: Vec<Vec<Pair>> = self.steps.iter().map(StepRecord::displayable_pairs).collect();
        let count: u128 = sets.iter().map(|s| s.len() as u128).product();
        if count > ceiling {
            return Err(SessionError::CandidateCeiling { count, ceiling });
        }
        let (k, m) = (self.k, stored.ui_len);
        if stored.id_len != k || m == 0 || m > k {
            return Ok((false, 0));
        }
        let order: Vec<usize> = match &self.ui_order {
            Some(o) if o.len() == m => o.clone(),
            Some(_) => return Ok((false, 0)),
            None => (0..m).collect(),
        };

        let mut idx = vec![0usize; k];
        let mut id = vec![0usize; k];
        let mut ui_steps = vec![0usize; m];
        let mut ui = vec![0usize; m];
        let mut found = false;
        let mut hashed = 0u64;
        loop {
            let mut consistent = true;
            for (i, set) in sets.iter().enumerate() {
                let p = set[idx[i]];
                id[i] = p.fixed;
                if i < m {
                    ui_steps[i] = p.cursor;
                } else if ui_steps[i % m] != p.cursor {
                    consistent = false;
                }
            }
            if consistent {
                for (j, &q) in order.iter().enumerate() {
                    ui[q] = ui_steps[j];
                }
                hashed += 1;
                found |= stored.verify(&id, &ui);
            }
            // odometer over the per-step candidate sets
            let mut pos = k;
            loop {
                if pos == 0 {
                    return Ok((found, hashed));
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < sets[pos].len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineConfig {
    pub candidate_ceiling: u128,
    pub shuffle_scope: ShuffleScope,
    /// Draw a new question order for every profile login.
    pub redraw_profile_order: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            candidate_ceiling: DEFAULT_CANDIDATE_CEILING,
            shuffle_scope: ShuffleScope::Both,
            redraw_profile_order: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct UserEntry {
    pub spec: Arc<BoardSpec>,
    pub credential: StoredCredential,
    pub profile: Option<Arc<ProfileQuestionBank>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationReport {
    pub verdict: Verdict,
    /// Candidate digests computed (hash-only mode; zero otherwise).
    pub candidates_hashed: u64,
}

#[derive(Debug, Default)]
pub struct SessionEngine {
    config: EngineConfig,
    vault: Option<Vault>,
    users: HashMap<String, UserEntry>,
}

impl SessionEngine {
    pub fn new(config: EngineConfig, vault: Option<Vault>) -> Self {
        SessionEngine {
            config,
            vault,
            users: HashMap::new(),
        }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn vault(&self) -> Option<&Vault> {
        self.vault.as_ref()
    }

    pub fn register(
        &mut self,
        user_id: &str,
        spec: Arc<BoardSpec>,
        creds: &Credentials,
        mode: StorageMode,
    ) -> Result<&UserEntry, SessionError> {
        if self.users.contains_key(user_id) {
            return Err(SessionError::DuplicateUser);
        }
        let credential = StoredCredential::create(user_id, creds, mode, self.vault.as_ref())?;
        self.insert(UserEntry {
            spec,
            credential,
            profile: None,
        })
    }

    /// Register a user whose UI password is the answer set of a profile.
    pub fn register_profile(
        &mut self,
        user_id: &str,
        spec: Arc<BoardSpec>,
        id_password: Vec<usize>,
        bank: Arc<ProfileQuestionBank>,
        answers: &ProfileAnswerSet,
        mode: StorageMode,
    ) -> Result<&UserEntry, SessionError> {
        if self.users.contains_key(user_id) {
            return Err(SessionError::DuplicateUser);
        }
        let creds = profile_credentials(&spec, id_password, &bank, answers)?;
        let credential = StoredCredential::create(user_id, &creds, mode, self.vault.as_ref())?;
        self.insert(UserEntry {
            spec,
            credential,
            profile: Some(bank),
        })
    }

    pub fn insert(&mut self, entry: UserEntry) -> Result<&UserEntry, SessionError> {
        use std::collections::hash_map::Entry;
        match self.users.entry(entry.credential.user_id.clone()) {
            Entry::Occupied(_) => Err(SessionError::DuplicateUser),
            Entry::Vacant(v) => Ok(v.insert(entry)),
        }
    }

    pub fn user(&self, user_id: &str) -> Result<&UserEntry, SessionError> {
        self.users.get(user_id).ok_or(SessionError::UnknownUser)
    }

    pub fn begin_session(
        &self,
        user_id: &str,
        display_l: Option<usize>,
        seed: u64,
    ) -> Result<LoginSession, SessionError> {
        self.begin_for(self.user(user_id)?, display_l, seed)
    }

    pub fn begin_for(
        &self,
        user: &UserEntry,
        display_l: Option<usize>,
        seed: u64,
    ) -> Result<LoginSession, SessionError> {
        let stored = &user.credential;
        let m = stored.ui_len;
        let mut setup = SessionSetup::new(Arc::clone(&user.spec), stored.id_len, seed);
        setup.display_l = display_l;
        setup.scope = self.config.shuffle_scope;

        if let Some(bank) = &user.profile {
            let order = if self.config.redraw_profile_order {
                profile::draw_order(m, &mut rng::stream(seed, 1))
            } else {
                (0..m).collect()
            };
            setup.skins = Some(
                (0..stored.id_len)
                    .map(|i| bank.questions()[order[i % m]].skin.clone())
                    .collect(),
            );
            setup.ui_order = Some(order);
        }
        if stored.mode == StorageMode::PlaintextRecoverable {
            let creds = stored.recover(self.vault.as_ref())?;
            setup.expected = Some(match &setup.ui_order {
                Some(order) => creds.expected_pairs_ordered(order),
                None => creds.expected_pairs(),
            });
        }
        LoginSession::begin(setup)
    }

    pub fn validate_session(
        &self,
        session: &mut LoginSession,
        stored: &StoredCredential,
    ) -> Result<Verdict, SessionError> {
        self.validate_with_report(session, stored).map(|r| r.verdict)
    }

    pub fn validate_with_report(
        &self,
        session: &mut LoginSession,
        stored: &StoredCredential,
    ) -> Result<ValidationReport, SessionError> {
        session.ensure_in_progress()?;
        if session.entered() != session.k {
            return Err(SessionError::Incomplete {
                entered: session.entered(),
                k: session.k,
            });
        }
        let (ok, candidates_hashed) = match stored.mode {
            StorageMode::PlaintextRecoverable => {
                let creds = stored.recover(self.vault.as_ref())?;
                (session.plaintext_verdict(&creds), 0)
            }
            StorageMode::HashOnly => session.hash_only_verdict(stored, self.config.candidate_ceiling)?,
        };
        let verdict = if ok { Verdict::Success } else { Verdict::Failure };
        session.status = match verdict {
            Verdict::Success => SessionStatus::ValidatedSuccess,
            Verdict::Failure => SessionStatus::ValidatedFailure,
        };
        Ok(ValidationReport {
            verdict,
            candidates_hashed,
        })
    }
}

/// Credentials whose UI password is the profile answers in question order.
pub fn profile_credentials(
    spec: &BoardSpec,
    id_password: Vec<usize>,
    bank: &ProfileQuestionBank,
    answers: &ProfileAnswerSet,
) -> Result<Credentials, SessionError> {
    if bank.n() != spec.n() {
        return Err(SessionError::ProfileMismatch {
            bank: bank.n(),
            board: spec.n(),
        });
    }
    let ui = bank.answer_symbols(answers)?;
    Ok(Credentials::new(spec, id_password, ui)?)
}
