//! The two-layer board.
//!
//! A [`BoardSpec`] names `n = rows × cols` fixed symbols and `n` cursor
//! symbols. Symbols are referred to by their index in those lists, which is
//! the shared numbering that associates fixed symbol `i` with cursor symbol
//! `i` across skins. A [`BoardState`] places both symbol sets on the grid and
//! translates the cursor board by a [`TorusOffset`].
//!
//! Alignment convention: cursor cell `c` covers fixed cell `wrap(c + offset)`,
//! so the cursor symbol shown over fixed cell `p` is the one at
//! `wrap(p - offset)` in the cursor layout.
//!
//! Layouts serialize as arrays of symbol indices in row-major cell order.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoardError {
    #[error("board dimensions must be positive, got {rows}x{cols}")]
    BadDimensions { rows: usize, cols: usize },
    #[error("a board needs at least two keys")]
    TooFewKeys,
    #[error("{side} board lists {got} symbols but has {expected} cells")]
    SymbolCount {
        side: Side,
        got: usize,
        expected: usize,
    },
    #[error("symbol {symbol:?} appears twice on the {side} board")]
    DuplicateSymbol { side: Side, symbol: String },
    #[error("unknown {side} symbol {symbol:?}")]
    UnknownSymbol { side: Side, symbol: String },
    #[error("{side} symbol index {index} out of range for {n} keys")]
    IndexOutOfRange { side: Side, index: usize, n: usize },
    #[error("{side} layout is not a permutation of 0..{n}")]
    NotAPermutation { side: Side, n: usize },
    #[error("cell ({row}, {col}) lies outside the board")]
    CellOutOfRange { row: usize, col: usize },
    #[error("visible symbol count {l} outside [2, {n}]")]
    VisibleCount { l: usize, n: usize },
}

/// Which of the two layers a symbol belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Fixed,
    Cursor,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Fixed => "fixed",
            Side::Cursor => "cursor",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawBoardSpec")]
pub struct BoardSpec {
    rows: usize,
    cols: usize,
    fixed_symbols: Vec<String>,
    cursor_symbols: Vec<String>,
    fixed_skin: String,
    cursor_skin: String,
}

#[derive(Deserialize)]
struct RawBoardSpec {
    rows: usize,
    cols: usize,
    fixed_symbols: Vec<String>,
    cursor_symbols: Vec<String>,
    #[serde(default = "default_fixed_skin")]
    fixed_skin: String,
    #[serde(default = "default_cursor_skin")]
    cursor_skin: String,
}

fn default_fixed_skin() -> String {
    "digits".into()
}

fn default_cursor_skin() -> String {
    "letters".into()
}

impl TryFrom<RawBoardSpec> for BoardSpec {
    type Error = BoardError;

    fn try_from(raw: RawBoardSpec) -> Result<Self, Self::Error> {
        let mut spec = BoardSpec::new(raw.rows, raw.cols, raw.fixed_symbols, raw.cursor_symbols)?;
        spec.fixed_skin = raw.fixed_skin;
        spec.cursor_skin = raw.cursor_skin;
        Ok(spec)
    }
}

pub const COLOR_NAMES: [&str; 10] = [
    "BLACK",
    "ORANGE",
    "LIGHTGRAY",
    "RED",
    "BLUE",
    "GREEN",
    "PURPLE",
    "AQUA",
    "OLIVE",
    "GRAY",
];

impl BoardSpec {
    pub fn new<S: Into<String>>(
        rows: usize,
        cols: usize,
        fixed_symbols: impl IntoIterator<Item = S>,
        cursor_symbols: impl IntoIterator<Item = S>,
    ) -> Result<Self, BoardError> {
        if rows == 0 || cols == 0 {
            return Err(BoardError::BadDimensions { rows, cols });
        }
        let n = rows * cols;
        if n < 2 {
            return Err(BoardError::TooFewKeys);
        }
        let fixed_symbols: Vec<String> = fixed_symbols.into_iter().map(Into::into).collect();
        let cursor_symbols: Vec<String> = cursor_symbols.into_iter().map(Into::into).collect();
        for (side, list) in [(Side::Fixed, &fixed_symbols), (Side::Cursor, &cursor_symbols)] {
            if list.len() != n {
                return Err(BoardError::SymbolCount {
                    side,
                    got: list.len(),
                    expected: n,
                });
            }
            let mut seen = BTreeSet::new();
            for s in list {
                if !seen.insert(s.as_str()) {
                    return Err(BoardError::DuplicateSymbol {
                        side,
                        symbol: s.clone(),
                    });
                }
            }
        }
        Ok(BoardSpec {
            rows,
            cols,
            fixed_symbols,
            cursor_symbols,
            fixed_skin: default_fixed_skin(),
            cursor_skin: default_cursor_skin(),
        })
    }

    /// 3×3 digits 1–9 under letters A–I.
    pub fn digits_letters_3x3() -> Self {
        let digits = (1..=9).map(|d| d.to_string());
        let letters = ('A'..='I').map(|c| c.to_string());
        BoardSpec::new(3, 3, digits, letters).expect("static board is valid")
    }

    /// 2×5 digits (1–9 then 0) under ten colors.
    pub fn digits_colors_2x5() -> Self {
        let digits = (1..=9).chain(std::iter::once(0)).map(|d| d.to_string());
        BoardSpec::new(2, 5, digits, COLOR_NAMES.iter().map(|s| s.to_string()))
            .expect("static board is valid")
            .with_skins("digits", "colors")
    }

    /// A single-row ribbon of `n` digits under `n` letters.
    pub fn ribbon(n: usize) -> Result<Self, BoardError> {
        let fixed: Vec<String> = (1..=n).map(|d| d.to_string()).collect();
        let cursor: Vec<String> = (0..n).map(letter_label).collect();
        BoardSpec::new(1, n, fixed, cursor)
    }

    /// A `rows × cols` board with generated labels, for simulations.
    pub fn generic(rows: usize, cols: usize) -> Result<Self, BoardError> {
        let n = rows * cols;
        let fixed: Vec<String> = (1..=n).map(|d| d.to_string()).collect();
        let cursor: Vec<String> = (0..n).map(letter_label).collect();
        BoardSpec::new(rows, cols, fixed, cursor)
    }

    pub fn with_skins(mut self, fixed_skin: &str, cursor_skin: &str) -> Self {
        self.fixed_skin = fixed_skin.to_owned();
        self.cursor_skin = cursor_skin.to_owned();
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn n(&self) -> usize {
        self.rows * self.cols
    }

    pub fn fixed_symbols(&self) -> &[String] {
        &self.fixed_symbols
    }

    pub fn cursor_symbols(&self) -> &[String] {
        &self.cursor_symbols
    }

    pub fn fixed_skin(&self) -> &str {
        &self.fixed_skin
    }

    pub fn cursor_skin(&self) -> &str {
        &self.cursor_skin
    }

    pub fn symbols(&self, side: Side) -> &[String] {
        match side {
            Side::Fixed => &self.fixed_symbols,
            Side::Cursor => &self.cursor_symbols,
        }
    }

    pub fn index_of(&self, side: Side, symbol: &str) -> Result<usize, BoardError> {
        self.symbols(side)
            .iter()
            .position(|s| s == symbol)
            .ok_or_else(|| BoardError::UnknownSymbol {
                side,
                symbol: symbol.to_owned(),
            })
    }

    pub fn label(&self, side: Side, index: usize) -> Result<&str, BoardError> {
        self.symbols(side)
            .get(index)
            .map(String::as_str)
            .ok_or(BoardError::IndexOutOfRange {
                side,
                index,
                n: self.n(),
            })
    }

    pub fn check_index(&self, side: Side, index: usize) -> Result<usize, BoardError> {
        if index < self.n() {
            Ok(index)
        } else {
            Err(BoardError::IndexOutOfRange {
                side,
                index,
                n: self.n(),
            })
        }
    }

    pub fn cell(&self, row: usize, col: usize) -> Result<Cell, BoardError> {
        if row < self.rows && col < self.cols {
            Ok(Cell { row, col })
        } else {
            Err(BoardError::CellOutOfRange { row, col })
        }
    }
}

fn letter_label(i: usize) -> String {
    let mut label = String::new();
    let mut i = i + 1;
    while i > 0 {
        let rem = (i - 1) % 26;
        label.insert(0, (b'A' + rem as u8) as char);
        i = (i - 1) / 26;
    }
    label
}

/// A cell on the grid, always in its canonical range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const ORIGIN: Cell = Cell { row: 0, col: 0 };

    pub fn index(self, cols: usize) -> usize {
        self.row * cols + self.col
    }

    pub fn from_index(index: usize, cols: usize) -> Cell {
        Cell {
            row: index / cols,
            col: index % cols,
        }
    }
}

impl From<(usize, usize)> for Cell {
    fn from((row, col): (usize, usize)) -> Self {
        Cell { row, col }
    }
}

impl From<Cell> for (usize, usize) {
    fn from(c: Cell) -> Self {
        (c.row, c.col)
    }
}

/// Translation of the cursor board relative to the fixed board.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct TorusOffset {
    pub drow: usize,
    pub dcol: usize,
}

impl TorusOffset {
    pub const ZERO: TorusOffset = TorusOffset { drow: 0, dcol: 0 };

    /// Canonical offset for an arbitrary integer translation.
    pub fn wrapped(delta: (i64, i64), dims: (usize, usize)) -> TorusOffset {
        let c = torus_wrap(delta, dims);
        TorusOffset {
            drow: c.row,
            dcol: c.col,
        }
    }

    pub fn compose(self, other: TorusOffset, dims: (usize, usize)) -> TorusOffset {
        TorusOffset::wrapped(
            (
                (self.drow + other.drow) as i64,
                (self.dcol + other.dcol) as i64,
            ),
            dims,
        )
    }

    /// All `rows × cols` canonical offsets in row-major order.
    pub fn all(dims: (usize, usize)) -> impl Iterator<Item = TorusOffset> {
        let (rows, cols) = dims;
        (0..rows).flat_map(move |drow| (0..cols).map(move |dcol| TorusOffset { drow, dcol }))
    }
}

impl From<(usize, usize)> for TorusOffset {
    fn from((drow, dcol): (usize, usize)) -> Self {
        TorusOffset { drow, dcol }
    }
}

impl From<TorusOffset> for (usize, usize) {
    fn from(o: TorusOffset) -> Self {
        (o.drow, o.dcol)
    }
}

/// Reduce an integer position onto the torus of the given dimensions.
pub fn torus_wrap(pos: (i64, i64), dims: (usize, usize)) -> Cell {
    let (rows, cols) = dims;
    assert!(rows > 0 && cols > 0, "torus dimensions must be positive");
    Cell {
        row: pos.0.rem_euclid(rows as i64) as usize,
        col: pos.1.rem_euclid(cols as i64) as usize,
    }
}

/// An associated (fixed symbol, cursor symbol) pair, by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pair {
    pub fixed: usize,
    pub cursor: usize,
}

impl Pair {
    pub fn new(fixed: usize, cursor: usize) -> Self {
        Pair { fixed, cursor }
    }
}

/// Which boards are redrawn on each shuffle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShuffleScope {
    #[default]
    Both,
    FixedOnly,
    CursorOnly,
}

/// The fixed-symbol to cursor-symbol bijection induced by one board state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    cursor_of_fixed: Vec<usize>,
    fixed_of_cursor: Vec<usize>,
}

impl Alignment {
    pub fn cursor_for(&self, fixed: usize) -> usize {
        self.cursor_of_fixed[fixed]
    }

    pub fn fixed_for(&self, cursor: usize) -> usize {
        self.fixed_of_cursor[cursor]
    }

    pub fn aligns(&self, pair: Pair) -> bool {
        self.cursor_of_fixed.get(pair.fixed) == Some(&pair.cursor)
    }

    pub fn pairs(&self) -> impl Iterator<Item = Pair> + '_ {
        self.cursor_of_fixed
            .iter()
            .enumerate()
            .map(|(f, &m)| Pair::new(f, m))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.cursor_of_fixed
    }

    pub fn len(&self) -> usize {
        self.cursor_of_fixed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cursor_of_fixed.is_empty()
    }
}

/// Cursor symbols shown at one step under partial display.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DisplaySubset {
    shown: BTreeSet<usize>,
}

impl DisplaySubset {
    pub fn all(n: usize) -> Self {
        DisplaySubset {
            shown: (0..n).collect(),
        }
    }

    pub fn from_symbols(shown: impl IntoIterator<Item = usize>) -> Self {
        DisplaySubset {
            shown: shown.into_iter().collect(),
        }
    }

    pub fn contains(&self, cursor: usize) -> bool {
        self.shown.contains(&cursor)
    }

    pub fn len(&self) -> usize {
        self.shown.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shown.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.shown.iter().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawBoardState")]
pub struct BoardState {
    spec: Arc<BoardSpec>,
    fixed: Vec<usize>,
    cursor: Vec<usize>,
    offset: TorusOffset,
    pointer_origin: Cell,
}

#[derive(Deserialize)]
struct RawBoardState {
    spec: Arc<BoardSpec>,
    fixed: Vec<usize>,
    cursor: Vec<usize>,
    offset: TorusOffset,
    pointer_origin: Cell,
}

impl TryFrom<RawBoardState> for BoardState {
    type Error = BoardError;

    fn try_from(raw: RawBoardState) -> Result<Self, Self::Error> {
        BoardState::from_parts(raw.spec, raw.fixed, raw.cursor, raw.offset, raw.pointer_origin)
    }
}

fn inverse(layout: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; layout.len()];
    for (cell, &sym) in layout.iter().enumerate() {
        inv[sym] = cell;
    }
    inv
}

fn check_permutation(side: Side, layout: &[usize], n: usize) -> Result<(), BoardError> {
    if layout.len() != n {
        return Err(BoardError::NotAPermutation { side, n });
    }
    let mut seen = vec![false; n];
    for &s in layout {
        if s >= n || std::mem::replace(&mut seen[s], true) {
            return Err(BoardError::NotAPermutation { side, n });
        }
    }
    Ok(())
}

impl BoardState {
    /// Both layouts in index order, zero offset, origin at (0, 0).
    pub fn identity(spec: Arc<BoardSpec>) -> Self {
        let n = spec.n();
        BoardState {
            spec,
            fixed: (0..n).collect(),
            cursor: (0..n).collect(),
            offset: TorusOffset::ZERO,
            pointer_origin: Cell::ORIGIN,
        }
    }

    pub fn from_parts(
        spec: Arc<BoardSpec>,
        fixed: Vec<usize>,
        cursor: Vec<usize>,
        offset: TorusOffset,
        pointer_origin: Cell,
    ) -> Result<Self, BoardError> {
        let n = spec.n();
        check_permutation(Side::Fixed, &fixed, n)?;
        check_permutation(Side::Cursor, &cursor, n)?;
        let (rows, cols) = spec.dims();
        if offset.drow >= rows || offset.dcol >= cols {
            return Err(BoardError::CellOutOfRange {
                row: offset.drow,
                col: offset.dcol,
            });
        }
        spec.cell(pointer_origin.row, pointer_origin.col)?;
        Ok(BoardState {
            spec,
            fixed,
            cursor,
            offset,
            pointer_origin,
        })
    }

    pub fn spec(&self) -> &BoardSpec {
        &self.spec
    }

    pub fn spec_arc(&self) -> &Arc<BoardSpec> {
        &self.spec
    }

    /// Fixed layout: symbol index per cell, row-major.
    pub fn fixed_layout(&self) -> &[usize] {
        &self.fixed
    }

    /// Cursor layout: symbol index per cell, row-major.
    pub fn cursor_layout(&self) -> &[usize] {
        &self.cursor
    }

    pub fn offset(&self) -> TorusOffset {
        self.offset
    }

    pub fn pointer_origin(&self) -> Cell {
        self.pointer_origin
    }

    pub fn fixed_at(&self, cell: Cell) -> usize {
        self.fixed[cell.index(self.spec.cols)]
    }

    pub fn cursor_at(&self, cell: Cell) -> usize {
        self.cursor[cell.index(self.spec.cols)]
    }

    /// Cursor symbol currently drawn over fixed cell `cell`.
    pub fn cursor_over(&self, cell: Cell) -> usize {
        let src = torus_wrap(
            (
                cell.row as i64 - self.offset.drow as i64,
                cell.col as i64 - self.offset.dcol as i64,
            ),
            self.spec.dims(),
        );
        self.cursor_at(src)
    }

    pub fn with_offset(&self, offset: TorusOffset) -> BoardState {
        let offset = TorusOffset::wrapped((offset.drow as i64, offset.dcol as i64), self.spec.dims());
        BoardState {
            offset,
            ..self.clone()
        }
    }

    /// Translate the cursor board by `delta` cells on the torus.
    pub fn move_cursor(&self, delta: (i64, i64)) -> BoardState {
        let offset = TorusOffset::wrapped(
            (
                self.offset.drow as i64 + delta.0,
                self.offset.dcol as i64 + delta.1,
            ),
            self.spec.dims(),
        );
        BoardState {
            offset,
            ..self.clone()
        }
    }

    /// Place the pointer-origin cell of the cursor board over `target`.
    pub fn place_origin_at(&self, target: Cell) -> BoardState {
        let offset = TorusOffset::wrapped(
            (
                target.row as i64 - self.pointer_origin.row as i64,
                target.col as i64 - self.pointer_origin.col as i64,
            ),
            self.spec.dims(),
        );
        BoardState {
            offset,
            ..self.clone()
        }
    }

    /// Fixed cell currently under the pointer-origin cell of the cursor board.
    pub fn pointer_cell(&self) -> Cell {
        torus_wrap(
            (
                (self.pointer_origin.row + self.offset.drow) as i64,
                (self.pointer_origin.col + self.offset.dcol) as i64,
            ),
            self.spec.dims(),
        )
    }

    pub fn alignment(&self) -> Alignment {
        let n = self.spec.n();
        let cols = self.spec.cols;
        let mut cursor_of_fixed = vec![0; n];
        for p in 0..n {
            let cell = Cell::from_index(p, cols);
            cursor_of_fixed[self.fixed[p]] = self.cursor_over(cell);
        }
        let fixed_of_cursor = inverse(&cursor_of_fixed);
        Alignment {
            cursor_of_fixed,
            fixed_of_cursor,
        }
    }

    pub fn aligned_pair_at(&self, fixed: usize) -> Result<Pair, BoardError> {
        let fixed = self.spec.check_index(Side::Fixed, fixed)?;
        let cell = Cell::from_index(inverse(&self.fixed)[fixed], self.spec.cols);
        Ok(Pair::new(fixed, self.cursor_over(cell)))
    }

    /// Label form of [`aligned_pair_at`](Self::aligned_pair_at).
    pub fn aligned_labels(&self, fixed: &str) -> Result<(String, String), BoardError> {
        let f = self.spec.index_of(Side::Fixed, fixed)?;
        let pair = self.aligned_pair_at(f)?;
        Ok((
            fixed.to_owned(),
            self.spec.cursor_symbols[pair.cursor].clone(),
        ))
    }

    /// The offset at which `pair.cursor` sits over `pair.fixed`.
    pub fn offset_aligning(&self, pair: Pair) -> Result<TorusOffset, BoardError> {
        self.spec.check_index(Side::Fixed, pair.fixed)?;
        self.spec.check_index(Side::Cursor, pair.cursor)?;
        let cols = self.spec.cols;
        let p = Cell::from_index(inverse(&self.fixed)[pair.fixed], cols);
        let c = Cell::from_index(inverse(&self.cursor)[pair.cursor], cols);
        Ok(TorusOffset::wrapped(
            (
                p.row as i64 - c.row as i64,
                p.col as i64 - c.col as i64,
            ),
            self.spec.dims(),
        ))
    }

    /// Redraw layouts and pointer origin from `seed`; the offset resets to zero.
    pub fn shuffle(&self, seed: u64) -> BoardState {
        self.shuffle_with(&mut rng::seeded(seed), ShuffleScope::Both)
    }

    pub fn shuffle_with<R: Rng + ?Sized>(&self, rng: &mut R, scope: ShuffleScope) -> BoardState {
        let n = self.spec.n();
        let mut fresh = || {
            let mut v: Vec<usize> = (0..n).collect();
            v.shuffle(rng);
            v
        };
        let fixed = match scope {
            ShuffleScope::Both | ShuffleScope::FixedOnly => fresh(),
            ShuffleScope::CursorOnly => self.fixed.clone(),
        };
        let cursor = match scope {
            ShuffleScope::Both | ShuffleScope::CursorOnly => fresh(),
            ShuffleScope::FixedOnly => self.cursor.clone(),
        };
        let pointer_origin = Cell::from_index(rng.random_range(0..n), self.spec.cols);
        BoardState {
            spec: Arc::clone(&self.spec),
            fixed,
            cursor,
            offset: TorusOffset::ZERO,
            pointer_origin,
        }
    }

    /// `l` cursor symbols to display, always including `correct`.
    pub fn visible_subset(
        &self,
        correct: usize,
        l: usize,
        seed: u64,
    ) -> Result<DisplaySubset, BoardError> {
        self.visible_subset_with(correct, l, &mut rng::seeded(seed))
    }

    pub fn visible_subset_with<R: Rng + ?Sized>(
        &self,
        correct: usize,
        l: usize,
        rng: &mut R,
    ) -> Result<DisplaySubset, BoardError> {
        let n = self.spec.n();
        if l < 2 || l > n {
            return Err(BoardError::VisibleCount { l, n });
        }
        self.spec.check_index(Side::Cursor, correct)?;
        let mut shown = BTreeSet::from([correct]);
        // decoys are indices into the n-1 symbols other than `correct`
        for d in index::sample(rng, n - 1, l - 1) {
            shown.insert(if d >= correct { d + 1 } else { d });
        }
        Ok(DisplaySubset { shown })
    }
}
