//! What passive observers learn.
//!
//! An observer who records the screen sees, at each step, the board and the
//! offset at which the user committed. Every fixed key is covered by some
//! cursor key, so each step leaves `n` candidate pairs (`l` under partial
//! display) and one session leaves `n^k` candidate password sequences.
//! Recording several sessions of the same credentials and intersecting the
//! per-step pair sets shrinks them; [`sessions_to_break`] measures how fast.
//!
//! A mouse logger sees pointer positions but not the random pointer origin,
//! so it cannot tell which offset was committed.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::board::{BoardSpec, Cell, Pair, ShuffleScope, TorusOffset};
use crate::rng;
use crate::session::{LoginSession, SessionError, SessionSetup};
use crate::transcript::{ObservedStep, SessionTranscript};

pub const DEFAULT_MAX_SESSIONS: usize = 1000;

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("no transcripts given")]
    NoTranscripts,
    #[error("transcript {index} does not match the first one's board or length")]
    ShapeMismatch { index: usize },
    #[error("pointer trace has {trace} positions for {steps} steps")]
    TraceLength { trace: usize, steps: usize },
    #[error(transparent)]
    Session(#[from] SessionError),
}

/// Per-step sets of (fixed, cursor) pairs still consistent with what was seen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    per_position: Vec<BTreeSet<Pair>>,
}

impl CandidateSet {
    pub fn new(per_position: Vec<BTreeSet<Pair>>) -> Self {
        CandidateSet { per_position }
    }

    pub fn positions(&self) -> &[BTreeSet<Pair>] {
        &self.per_position
    }

    pub fn k(&self) -> usize {
        self.per_position.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_position.is_empty()
    }

    pub fn position_counts(&self) -> Vec<usize> {
        self.per_position.iter().map(BTreeSet::len).collect()
    }

    /// Number of (ID, UI) pair sequences; 1 for the empty structure.
    pub fn total(&self) -> u128 {
        self.per_position.iter().map(|s| s.len() as u128).product()
    }

    /// Number of distinct ID passwords among the candidates.
    pub fn id_sequence_count(&self) -> u128 {
        self.per_position
            .iter()
            .map(|s| s.iter().map(|p| p.fixed).collect::<BTreeSet<_>>().len() as u128)
            .product()
    }

    pub fn is_singleton(&self) -> bool {
        !self.is_empty() && self.total() == 1
    }

    pub fn contains(&self, sequence: &[Pair]) -> bool {
        sequence.len() == self.per_position.len()
            && self
                .per_position
                .iter()
                .zip(sequence)
                .all(|(set, p)| set.contains(p))
    }

    pub fn intersect(&self, other: &CandidateSet) -> CandidateSet {
        CandidateSet {
            per_position: self
                .per_position
                .iter()
                .zip(&other.per_position)
                .map(|(a, b)| a.intersection(b).copied().collect())
                .collect(),
        }
    }

    /// Every candidate sequence, in lexicographic order.
    pub fn sequences(&self) -> Sequences<'_> {
        let sets: Vec<Vec<Pair>> = self
            .per_position
            .iter()
            .map(|s| s.iter().copied().collect())
            .collect();
        let done = sets.is_empty() || sets.iter().any(Vec::is_empty);
        Sequences {
            idx: vec![0; sets.len()],
            sets,
            done,
            _set: std::marker::PhantomData,
        }
    }
}

pub struct Sequences<'a> {
    sets: Vec<Vec<Pair>>,
    idx: Vec<usize>,
    done: bool,
    _set: std::marker::PhantomData<&'a CandidateSet>,
}

impl Iterator for Sequences<'_> {
    type Item = Vec<Pair>;

    fn next(&mut self) -> Option<Vec<Pair>> {
        if self.done {
            return None;
        }
        let item = self
            .idx
            .iter()
            .zip(&self.sets)
            .map(|(&i, s)| s[i])
            .collect();
        self.done = true;
        for pos in (0..self.sets.len()).rev() {
            self.idx[pos] += 1;
            if self.idx[pos] < self.sets[pos].len() {
                self.done = false;
                break;
            }
            self.idx[pos] = 0;
        }
        Some(item)
    }
}

/// Pairs aligned at the committed offset, restricted to visible cursor symbols.
pub fn step_pairs(step: &ObservedStep) -> BTreeSet<Pair> {
    pairs_at(step, step.committed_offset)
}

fn pairs_at(step: &ObservedStep, offset: TorusOffset) -> BTreeSet<Pair> {
    step.board
        .with_offset(offset)
        .alignment()
        .pairs()
        .filter(|p| step.visible.contains(p.cursor))
        .collect()
}

pub fn candidates_single_session(transcript: &SessionTranscript) -> CandidateSet {
    CandidateSet::new(transcript.steps.iter().map(step_pairs).collect())
}

fn check_shapes<'a>(
    transcripts: impl IntoIterator<Item = &'a SessionTranscript>,
) -> Result<(), AttackError> {
    let mut iter = transcripts.into_iter();
    let first = iter.next().ok_or(AttackError::NoTranscripts)?;
    for (i, t) in iter.enumerate() {
        if t.spec != first.spec || t.k() != first.k() {
            return Err(AttackError::ShapeMismatch { index: i + 1 });
        }
    }
    Ok(())
}

/// Intersect the per-step candidate pairs of several sessions.
pub fn intersect_sessions(transcripts: &[SessionTranscript]) -> Result<CandidateSet, AttackError> {
    check_shapes(transcripts)?;
    let mut acc = candidates_single_session(&transcripts[0]);
    for t in &transcripts[1..] {
        acc = acc.intersect(&candidates_single_session(t));
    }
    Ok(acc)
}

/// Pointer positions a mouse logger records at each commit, in cells from the
/// board's top-left corner. The logger never sees the pointer origin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointerTrace {
    pub positions: Vec<Cell>,
}

impl PointerTrace {
    /// The trace a logger would have captured during `transcript`'s session.
    pub fn record(transcript: &SessionTranscript) -> Self {
        PointerTrace {
            positions: transcript.steps.iter().map(|s| s.board.pointer_cell()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OriginKnowledge {
    /// Origins are random and unknown to the logger.
    Hidden,
    /// Ablation: the logger learns each step's pointer origin.
    Disclosed,
}

/// Candidates a mouse logger can derive from pointer traces.
///
/// Only the pointer positions, layouts and visible sets are read from the
/// transcripts; committed offsets are what the logger is trying to recover.
pub fn mouse_log_inference(
    observations: &[(PointerTrace, SessionTranscript)],
    knowledge: OriginKnowledge,
) -> Result<CandidateSet, AttackError> {
    if observations.is_empty() {
        return Ok(CandidateSet::new(Vec::new()));
    }
    check_shapes(observations.iter().map(|(_, t)| t))?;
    let mut acc: Option<CandidateSet> = None;
    for (trace, transcript) in observations {
        if trace.positions.len() != transcript.k() {
            return Err(AttackError::TraceLength {
                trace: trace.positions.len(),
                steps: transcript.k(),
            });
        }
        let dims = transcript.spec.dims();
        let per_position = transcript
            .steps
            .iter()
            .zip(&trace.positions)
            .map(|(step, &pointer)| {
                let offset_for = |origin: Cell| {
                    TorusOffset::wrapped(
                        (
                            pointer.row as i64 - origin.row as i64,
                            pointer.col as i64 - origin.col as i64,
                        ),
                        dims,
                    )
                };
                match knowledge {
                    OriginKnowledge::Disclosed => pairs_at(step, offset_for(step.board.pointer_origin())),
                    OriginKnowledge::Hidden => (0..transcript.spec.n())
                        .map(|i| Cell::from_index(i, dims.1))
                        .flat_map(|origin| pairs_at(step, offset_for(origin)))
                        .collect(),
                }
            })
            .collect();
        let set = CandidateSet::new(per_position);
        acc = Some(match acc {
            None => set,
            Some(prev) => prev.intersect(&set),
        });
    }
    Ok(acc.expect("observations is non-empty"))
}

#[derive(Debug, Clone)]
pub struct BreakConfig {
    pub spec: Arc<BoardSpec>,
    pub k: usize,
    pub display_l: Option<usize>,
    pub trials: usize,
    /// Trials still ambiguous after this many sessions are reported as censored.
    pub max_sessions: usize,
    pub seed: u64,
    pub scope: ShuffleScope,
}

impl BreakConfig {
    pub fn new(spec: Arc<BoardSpec>, k: usize, trials: usize, seed: u64) -> Self {
        BreakConfig {
            spec,
            k,
            display_l: None,
            trials,
            max_sessions: DEFAULT_MAX_SESSIONS,
            seed,
            scope: ShuffleScope::Both,
        }
    }

    /// Sequence count an observer faces after one full session.
    pub fn single_session_count(&self) -> u128 {
        let l = self.display_l.unwrap_or(self.spec.n()) as u128;
        l.pow(self.k as u32)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    /// Sessions after which one candidate sequence remained; `None` if censored.
    pub sessions_needed: Option<usize>,
    /// Per-position candidate counts after each session.
    pub position_counts: Vec<Vec<usize>>,
    /// Whether the true sequence survived every intersection.
    pub truth_retained: bool,
}

impl TrialOutcome {
    pub fn totals(&self) -> Vec<u128> {
        self.position_counts
            .iter()
            .map(|c| c.iter().map(|&x| x as u128).product())
            .collect()
    }
}

/// One trial with its ground truth and recordings.
#[derive(Debug, Clone)]
pub struct TrialRun {
    pub truth: Vec<Pair>,
    pub transcripts: Vec<SessionTranscript>,
    pub outcome: TrialOutcome,
}

/// Simulate one trial: random credentials, then sessions entered correctly
/// until the intersected candidates collapse to one sequence.
pub fn run_trial(config: &BreakConfig, trial: usize) -> Result<TrialRun, AttackError> {
    let mut rng = rng::stream(config.seed, trial as u64);
    let n = config.spec.n();
    let truth: Vec<Pair> = (0..config.k)
        .map(|_| Pair::new(rng.random_range(0..n), rng.random_range(0..n)))
        .collect();

    let mut transcripts = Vec::new();
    let mut candidates: Option<CandidateSet> = None;
    let mut position_counts = Vec::new();
    let mut truth_retained = true;
    let mut sessions_needed = None;
    for s in 1..=config.max_sessions {
        let mut setup = SessionSetup::new(Arc::clone(&config.spec), config.k, rng.random())
            .expecting(truth.clone());
        setup.display_l = config.display_l;
        setup.scope = config.scope;
        let mut session = LoginSession::begin(setup)?;
        for &p in &truth {
            let offset = session.current().offset_aligning(p).map_err(SessionError::from)?;
            session.commit_step(offset)?;
        }
        let transcript = session.transcript()?;
        let single = candidates_single_session(&transcript);
        let next = match candidates {
            None => single,
            Some(prev) => prev.intersect(&single),
        };
        truth_retained &= next.contains(&truth);
        position_counts.push(next.position_counts());
        transcripts.push(transcript);
        let done = next.is_singleton();
        candidates = Some(next);
        if done {
            sessions_needed = Some(s);
            break;
        }
    }
    Ok(TrialRun {
        truth,
        transcripts,
        outcome: TrialOutcome {
            trial,
            sessions_needed,
            position_counts,
            truth_retained,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakSummary {
    pub trials: usize,
    pub broken: usize,
    pub censored: usize,
    /// Mean over broken trials.
    pub mean: Option<f64>,
    /// Nearest-rank percentiles over all trials; `None` when the rank falls
    /// on a censored trial.
    pub p50: Option<usize>,
    pub p90: Option<usize>,
    pub max: Option<usize>,
    pub exact_single_session_count: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakReport {
    pub outcomes: Vec<TrialOutcome>,
    pub summary: BreakSummary,
}

fn nearest_rank(sorted: &[Option<usize>], q: f64) -> Option<usize> {
    if sorted.is_empty() {
        return None;
    }
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Monte Carlo distribution of sessions needed to pin down the credentials.
pub fn sessions_to_break(config: &BreakConfig) -> Result<BreakReport, AttackError> {
    let outcomes: Vec<TrialOutcome> = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, t).map(|r| r.outcome))
        .collect::<Result<_, _>>()?;

    let mut needed: Vec<Option<usize>> = outcomes.iter().map(|o| o.sessions_needed).collect();
    // censored trials sort last
    needed.sort_by_key(|x| x.unwrap_or(usize::MAX));
    let broken: Vec<usize> = needed.iter().flatten().copied().collect();
    let summary = BreakSummary {
        trials: config.trials,
        broken: broken.len(),
        censored: config.trials - broken.len(),
        mean: (!broken.is_empty())
            .then(|| broken.iter().sum::<usize>() as f64 / broken.len() as f64),
        p50: nearest_rank(&needed, 0.5),
        p90: nearest_rank(&needed, 0.9),
        max: if broken.len() == config.trials {
            broken.last().copied()
        } else {
            None
        },
        exact_single_session_count: config.single_session_count(),
    };
    Ok(BreakReport { outcomes, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::board::BoardState;

    fn spec3() -> Arc<BoardSpec> {
        Arc::new(BoardSpec::digits_letters_3x3())
    }

    fn session_transcript(spec: &Arc<BoardSpec>, truth: &[Pair], l: Option<usize>, seed: u64) -> SessionTranscript {
        let mut setup = SessionSetup::new(Arc::clone(spec), truth.len(), seed).expecting(truth.to_vec());
        setup.display_l = l;
        let mut s = LoginSession::begin(setup).unwrap();
        for &p in truth {
            let o = s.current().offset_aligning(p).unwrap();
            s.commit_step(o).unwrap();
        }
        s.transcript().unwrap()
    }

    fn truth4() -> Vec<Pair> {
        vec![Pair::new(2, 2), Pair::new(0, 0), Pair::new(3, 7), Pair::new(0, 1)]
    }

    #[test]
    fn single_session_counts() {
        let spec = spec3();
        let t = session_transcript(&spec, &truth4(), None, 1);
        let c = candidates_single_session(&t);
        assert_eq!(c.total(), 6561);
        assert_eq!(c.sequences().count(), 6561);
        assert!(c.contains(&truth4()));

        let t = session_transcript(&spec, &truth4(), Some(2), 1);
        let c = candidates_single_session(&t);
        assert_eq!(c.total(), 16);
        assert!(c.contains(&truth4()));

        let t = session_transcript(&spec, &truth4()[..1], None, 4);
        let c = candidates_single_session(&t);
        assert_eq!(c.total(), 9);
        assert!(c.contains(&truth4()[..1]));
    }

    #[test]
    fn intersection_basics() {
        let spec = spec3();
        let a = session_transcript(&spec, &truth4(), None, 1);
        let b = session_transcript(&spec, &truth4(), None, 2);
        let single = candidates_single_session(&a);
        assert_eq!(intersect_sessions(std::slice::from_ref(&a)).unwrap(), single);
        assert_eq!(intersect_sessions(&[a.clone(), a.clone()]).unwrap(), single);
        let both = intersect_sessions(&[a.clone(), b]).unwrap();
        assert!(both.contains(&truth4()));
        assert!(both.position_counts().iter().zip(single.position_counts()).all(|(x, y)| *x <= y));

        let short = session_transcript(&spec, &truth4()[..3], None, 3);
        assert!(matches!(
            intersect_sessions(&[a.clone(), short]),
            Err(AttackError::ShapeMismatch { index: 1 })
        ));
        let other = session_transcript(&Arc::new(BoardSpec::generic(3, 3).unwrap().with_skins("x", "y")), &truth4(), None, 3);
        assert!(intersect_sessions(&[a, other]).is_err());
        assert!(matches!(intersect_sessions(&[]), Err(AttackError::NoTranscripts)));
    }

    #[test]
    fn sequences_enumerates_product() {
        let set = CandidateSet::new(vec![
            [Pair::new(0, 0), Pair::new(1, 1)].into(),
            [Pair::new(2, 2)].into(),
            [Pair::new(0, 3), Pair::new(1, 4), Pair::new(2, 5)].into(),
        ]);
        let all: Vec<_> = set.sequences().collect();
        assert_eq!(all.len(), 6);
        assert!(all.iter().all(|s| set.contains(s)));
        assert_eq!(CandidateSet::new(vec![]).sequences().count(), 0);
    }

    #[test]
    fn mouse_logger() {
        let spec = spec3();
        let t = session_transcript(&spec, &truth4(), None, 17);
        let trace = PointerTrace::record(&t);
        let obs = vec![(trace, t.clone())];
        let hidden = mouse_log_inference(&obs, OriginKnowledge::Hidden).unwrap();
        assert_eq!(hidden.id_sequence_count(), 6561);
        assert_eq!(hidden.position_counts(), vec![81; 4]);
        let disclosed = mouse_log_inference(&obs, OriginKnowledge::Disclosed).unwrap();
        assert_eq!(disclosed, candidates_single_session(&t));
        assert_eq!(disclosed.total(), 6561);

        assert!(mouse_log_inference(&[], OriginKnowledge::Hidden).unwrap().is_empty());
        let bad = vec![(PointerTrace { positions: vec![] }, t)];
        assert!(matches!(
            mouse_log_inference(&bad, OriginKnowledge::Hidden),
            Err(AttackError::TraceLength { .. })
        ));
    }

    #[test]
    fn trial_is_deterministic_and_monotone() {
        let cfg = BreakConfig::new(spec3(), 4, 1, 5);
        let a = run_trial(&cfg, 0).unwrap();
        let b = run_trial(&cfg, 0).unwrap();
        assert_eq!(a.outcome, b.outcome);
        assert!(a.outcome.truth_retained);
        let totals = a.outcome.totals();
        assert_eq!(totals[0], 6561);
        assert!(totals.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*totals.last().unwrap(), 1);
    }

    #[test]
    fn two_key_board_never_breaks() {
        // with two keys the true pair forces the whole bijection, so the
        // other pair is aligned in every session
        let spec = Arc::new(BoardSpec::ribbon(2).unwrap());
        let mut cfg = BreakConfig::new(spec, 1, 50, 3);
        cfg.max_sessions = 20;
        let report = sessions_to_break(&cfg).unwrap();
        assert_eq!(report.summary.broken, 0);
        assert_eq!(report.summary.censored, 50);
        for o in &report.outcomes {
            assert!(o.position_counts.iter().all(|c| c == &vec![2]));
        }
    }

    #[test]
    fn identity_board_pairs() {
        // sanity link between alignment and step_pairs
        let spec = spec3();
        let step = ObservedStep {
            board: BoardState::identity(Arc::clone(&spec)),
            committed_offset: TorusOffset::ZERO,
            visible: crate::board::DisplaySubset::all(9),
        };
        let pairs = step_pairs(&step);
        assert!((0..9).all(|i| pairs.contains(&Pair::new(i, i))));
    }

    #[test]
    fn summary_percentiles() {
        let v = vec![Some(2), Some(3), Some(3), Some(5), None];
        assert_eq!(nearest_rank(&v, 0.5), Some(3));
        assert_eq!(nearest_rank(&v, 0.9), None);
    }
}
