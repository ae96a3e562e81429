//! Observer attack experiments behind the `assocpin-sim` CLI.

use std::io::Write;
use std::sync::Arc;

use assocpin_core::attack::{intersect_sessions, BreakReport};
use assocpin_core::board::BoardSpec;
use assocpin_core::credential::Credentials;
use assocpin_core::session::{LoginSession, SessionSetup};
use assocpin_core::transcript::SessionTranscript;
use serde::Serialize;

pub type Error = Box<dyn std::error::Error + Send + Sync>;

/// Named boards for the two stock shapes, neutral symbols otherwise.
pub fn board_spec(rows: usize, cols: usize) -> Result<BoardSpec, Error> {
    Ok(match (rows, cols) {
        (3, 3) => BoardSpec::digits_letters_3x3(),
        (2, 5) => BoardSpec::digits_colors_2x5(),
        _ => BoardSpec::generic(rows, cols)?,
    })
}

pub fn write_outcomes_csv<W: Write>(out: W, report: &BreakReport) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trial", "sessions_needed"])?;
    for o in &report.outcomes {
        let needed = o.sessions_needed.map(|s| s.to_string()).unwrap_or_default();
        w.write_record([o.trial.to_string(), needed])?;
    }
    w.flush()?;
    Ok(())
}

/// Transcript of a session where every step was entered correctly.
pub fn record_session(
    spec: Arc<BoardSpec>,
    id: &[String],
    ui: &[String],
    display_l: Option<usize>,
    seed: u64,
) -> Result<SessionTranscript, Error> {
    let creds = Credentials::from_labels(&spec, id, ui)?;
    let mut setup = SessionSetup::new(Arc::clone(&spec), creds.k(), seed).expecting(creds.expected_pairs());
    setup.display_l = display_l;
    let mut session = LoginSession::begin(setup)?;
    for p in creds.expected_pairs() {
        let o = session.current().offset_aligning(p)?;
        session.commit_step(o)?;
    }
    Ok(session.transcript()?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Analysis {
    pub sessions: usize,
    pub position_counts: Vec<usize>,
    pub total: u128,
    pub id_sequence_count: u128,
}

pub fn analyze(transcripts: &[SessionTranscript]) -> Result<Analysis, Error> {
    let set = intersect_sessions(transcripts)?;
    Ok(Analysis {
        sessions: transcripts.len(),
        position_counts: set.position_counts(),
        total: set.total(),
        id_sequence_count: set.id_sequence_count(),
    })
}
