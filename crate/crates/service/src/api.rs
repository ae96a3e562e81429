//! JSON bodies exchanged with clients.

use assocpin_core::board::{BoardSpec, Cell, TorusOffset};
use assocpin_core::credential::StorageMode;
use assocpin_core::profile::{ProfileAnswerSet, ProfileQuestionBank};
use assocpin_core::session::LoginSession;
use assocpin_core::Verdict;
use serde::{Deserialize, Serialize};

pub const PRESET_3X3: &str = "digits-letters-3x3";
pub const PRESET_2X5: &str = "digits-colors-2x5";

/// A board preset name or a full custom board.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum BoardChoice {
    Preset(String),
    Custom(BoardSpec),
}

impl BoardChoice {
    pub fn resolve(&self) -> Result<BoardSpec, String> {
        match self {
            BoardChoice::Preset(name) => match name.as_str() {
                PRESET_3X3 => Ok(BoardSpec::digits_letters_3x3()),
                PRESET_2X5 => Ok(BoardSpec::digits_colors_2x5()),
                other => Err(format!("unknown board preset {other:?}")),
            },
            BoardChoice::Custom(spec) => Ok(spec.clone()),
        }
    }
}

/// Symbols given either as a list or as a string of one-character symbols.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Symbols {
    Text(String),
    List(Vec<String>),
}

impl Symbols {
    pub fn tokens(&self) -> Vec<String> {
        match self {
            Symbols::Text(s) => assocpin_core::credential::pin_tokens(s),
            Symbols::List(v) => v.clone(),
        }
    }
}

/// Registration request. Exactly one of `ui_password`, `legacy_pin` or
/// `profile` supplies the UI secret.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateUser {
    pub user_id: String,
    #[serde(default)]
    pub board: Option<BoardChoice>,
    #[serde(default)]
    pub mode: StorageMode,
    #[serde(default)]
    pub id_password: Option<Symbols>,
    #[serde(default)]
    pub ui_password: Option<Symbols>,
    #[serde(default)]
    pub legacy_pin: Option<Symbols>,
    #[serde(default)]
    pub ui_length: Option<usize>,
    #[serde(default)]
    pub profile: Option<ProfileQuestionBank>,
    #[serde(default)]
    pub answers: Option<ProfileAnswerSet>,
    #[serde(default)]
    pub display_l: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreatedUser {
    pub user_id: String,
    pub mode: StorageMode,
    pub k: usize,
    pub created_at: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpenRequest {
    pub user_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoardView {
    pub rows: usize,
    pub cols: usize,
    pub fixed: Vec<usize>,
    /// Hidden cursor symbols are null under partial display.
    pub cursor: Vec<Option<usize>>,
    pub offset: TorusOffset,
    pub skin: String,
    pub entered: usize,
    pub l: usize,
}

impl BoardView {
    pub fn of(session: &LoginSession) -> Self {
        let board = session.current();
        let visible = session.current_visible();
        BoardView {
            rows: board.spec().rows(),
            cols: board.spec().cols(),
            fixed: board.fixed_layout().to_vec(),
            cursor: board
                .cursor_layout()
                .iter()
                .map(|&m| visible.contains(m).then_some(m))
                .collect(),
            offset: board.offset(),
            skin: session.current_skin().to_owned(),
            entered: session.entered(),
            l: session.display_l(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenResponse {
    pub token: String,
    pub board_view: BoardView,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveResponse {
    pub board_view: BoardView,
}

/// Reply to commit and reset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepResponse {
    pub entered: usize,
    pub board_view: BoardView,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalizeResponse {
    pub result: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    Relative,
    Absolute,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMoveOrder {
    kind: MoveKind,
    #[serde(default)]
    delta: Option<[i64; 2]>,
    #[serde(default)]
    position: Option<[f64; 2]>,
}

/// Cursor control order. Relative orders carry `delta: [drow, dcol]`;
/// absolute orders carry `position: [x, y]` in `[0, 1]`, x across columns.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(try_from = "RawMoveOrder")]
pub enum MoveOrder {
    Relative { drow: i64, dcol: i64 },
    Absolute { x: f64, y: f64 },
}

impl TryFrom<RawMoveOrder> for MoveOrder {
    type Error = String;

    fn try_from(raw: RawMoveOrder) -> Result<Self, String> {
        match (raw.kind, raw.delta, raw.position) {
            (MoveKind::Relative, Some([drow, dcol]), None) => Ok(MoveOrder::Relative { drow, dcol }),
            (MoveKind::Absolute, None, Some([x, y])) => {
                let ok = |v: f64| (0.0..=1.0).contains(&v);
                if !ok(x) || !ok(y) {
                    return Err("absolute position must lie in [0, 1]".into());
                }
                Ok(MoveOrder::Absolute { x, y })
            }
            (MoveKind::Relative, _, _) => Err("relative order needs exactly a delta".into()),
            (MoveKind::Absolute, _, _) => Err("absolute order needs exactly a position".into()),
        }
    }
}

/// Cell under a normalized screen position: `floor(coord * dim)`, clamped.
pub fn absolute_cell(x: f64, y: f64, dims: (usize, usize)) -> Cell {
    let scale = |v: f64, dim: usize| ((v * dim as f64).floor() as usize).min(dim - 1);
    Cell {
        row: scale(y, dims.0),
        col: scale(x, dims.1),
    }
}
