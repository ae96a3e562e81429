//! Observer transcripts.
//!
//! A transcript is what an omniscient passive observer records of a finished
//! session: the board shown at each step, the offset at which the user
//! committed, and which cursor symbols were visible. It never carries match
//! bits or credentials. Transcripts are versioned JSON.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::board::{BoardSpec, BoardState, DisplaySubset, TorusOffset};

pub const TRANSCRIPT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("unsupported transcript version {0}")]
    Version(u32),
    #[error("step {0} does not match the transcript board")]
    SpecMismatch(usize),
    #[error("step {0}: committed offset differs from the recorded board offset")]
    OffsetMismatch(usize),
    #[error("step {0}: visible symbols inconsistent with the board")]
    BadVisible(usize),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservedStep {
    /// Board as displayed at commit time, at the committed offset.
    pub board: BoardState,
    pub committed_offset: TorusOffset,
    pub visible: DisplaySubset,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionTranscript {
    pub version: u32,
    pub spec: Arc<BoardSpec>,
    pub steps: Vec<ObservedStep>,
}

impl SessionTranscript {
    pub fn new(spec: Arc<BoardSpec>, steps: Vec<ObservedStep>) -> Self {
        SessionTranscript {
            version: TRANSCRIPT_VERSION,
            spec,
            steps,
        }
    }

    pub fn k(&self) -> usize {
        self.steps.len()
    }

    pub fn validate(&self) -> Result<(), TranscriptError> {
        if self.version != TRANSCRIPT_VERSION {
            return Err(TranscriptError::Version(self.version));
        }
        let n = self.spec.n();
        for (i, step) in self.steps.iter().enumerate() {
            if step.board.spec() != self.spec.as_ref() {
                return Err(TranscriptError::SpecMismatch(i));
            }
            if step.board.offset() != step.committed_offset {
                return Err(TranscriptError::OffsetMismatch(i));
            }
            if step.visible.len() < 2 || step.visible.iter().any(|m| m >= n) {
                return Err(TranscriptError::BadVisible(i));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("transcript serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TranscriptError> {
        let t: SessionTranscript = serde_json::from_str(text)?;
        t.validate()?;
        Ok(t)
    }
}
