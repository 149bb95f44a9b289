//! Discretized environment model.
//!
//! A [`GridMap`] is a rectangular lattice of square cells. Each traversable
//! cell carries a normalized path gain quantized to tenths; obstacle cells
//! carry no gain. Cell `(0, 0)` is centered on [`GridMap::origin`], columns
//! grow along +x and rows along +y.

pub(crate) mod render;
mod synth;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use render::{
    classify_color, decode_bands, decode_png, encode_png, gain_band, render_heatmap, ColorClass, Overlay, PathStyle,
    RenderOptions, BAND_COLORS, GRID_LINE_COLOR, OBSTACLE_COLOR,
};
pub use synth::{synthesize_map, CellRect, SyntheticSpec};

/// Relative tolerance used when snapping ingested coordinates onto the lattice.
const LATTICE_TOLERANCE: f64 = 1e-6;

/// Column/row address of a grid cell.
///
/// Ordering is row-major: `(row, col)` lexicographic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct CellIndex {
    pub col: usize,
    pub row: usize,
}

impl CellIndex {
    pub const fn new(col: usize, row: usize) -> Self {
        Self { col, row }
    }

    /// Number of king moves between two cells.
    pub fn chebyshev(self, other: CellIndex) -> usize {
        self.col.abs_diff(other.col).max(self.row.abs_diff(other.row))
    }

    /// Euclidean distance in cell units.
    pub fn euclidean(self, other: CellIndex) -> f64 {
        let dc = self.col as f64 - other.col as f64;
        let dr = self.row as f64 - other.row as f64;
        dc.hypot(dr)
    }
}

impl Ord for CellIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.row, self.col).cmp(&(other.row, other.col))
    }
}

impl PartialOrd for CellIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<[usize; 2]> for CellIndex {
    fn from([col, row]: [usize; 2]) -> Self {
        Self { col, row }
    }
}

impl From<CellIndex> for [usize; 2] {
    fn from(c: CellIndex) -> Self {
        [c.col, c.row]
    }
}

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.col, self.row)
    }
}

/// Path-gain annotated occupancy grid. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct GridMap {
    width: usize,
    height: usize,
    cell_size: f64,
    origin: [f64; 2],
    /// Gain of each cell in integer tenths, row-major. Zero for obstacles.
    gain_tenths: Vec<u8>,
    obstacles: Vec<bool>,
}

impl GridMap {
    /// Builds a map from quantized gains (tenths, 0..=10) and an obstacle mask,
    /// both row-major.
    pub fn from_tenths(
        width: usize,
        height: usize,
        cell_size: f64,
        origin: [f64; 2],
        gain_tenths: Vec<u8>,
        obstacles: Vec<bool>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Geometry("grid must be at least 1x1".into()));
        }
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(Error::Geometry(format!("cell size {cell_size} must be positive")));
        }
        let n = width * height;
        if gain_tenths.len() != n || obstacles.len() != n {
            return Err(Error::Geometry(format!(
                "expected {n} cells, got {} gains and {} obstacle flags",
                gain_tenths.len(),
                obstacles.len()
            )));
        }
        if let Some(bad) = gain_tenths.iter().find(|&&g| g > 10) {
            return Err(Error::Input(format!("gain level {bad} exceeds 10 tenths")));
        }
        let gain_tenths = gain_tenths
            .into_iter()
            .zip(&obstacles)
            .map(|(g, &blocked)| if blocked { 0 } else { g })
            .collect();
        Ok(Self {
            width,
            height,
            cell_size,
            origin,
            gain_tenths,
            obstacles,
        })
    }

    /// Builds a map from real-valued gains in [0, 1]; values are rounded to
    /// the nearest tenth.
    pub fn from_gains(
        width: usize,
        height: usize,
        cell_size: f64,
        origin: [f64; 2],
        gains: &[f64],
        obstacles: Vec<bool>,
    ) -> Result<Self> {
        let tenths = gains
            .iter()
            .map(|&g| {
                if !(0.0..=1.0).contains(&g) {
                    Err(Error::Input(format!("gain {g} outside [0, 1]")))
                } else {
                    Ok(quantize(g))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_tenths(width, height, cell_size, origin, tenths, obstacles)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, cell: CellIndex) -> bool {
        cell.col < self.width && cell.row < self.height
    }

    /// Row-major linear index. The cell must be inside the grid.
    pub fn index(&self, cell: CellIndex) -> usize {
        debug_assert!(self.contains(cell));
        cell.row * self.width + cell.col
    }

    pub fn cell_at(&self, index: usize) -> CellIndex {
        CellIndex::new(index % self.width, index / self.width)
    }

    pub fn is_obstacle(&self, cell: CellIndex) -> bool {
        self.obstacles[self.index(cell)]
    }

    pub fn is_traversable(&self, cell: CellIndex) -> bool {
        self.contains(cell) && !self.obstacles[self.index(cell)]
    }

    /// Normalized gain of a cell (0 for obstacles).
    pub fn gain(&self, cell: CellIndex) -> f64 {
        f64::from(self.gain_tenths[self.index(cell)]) / 10.0
    }

    /// Gain in integer tenths.
    pub fn gain_tenths(&self, cell: CellIndex) -> u8 {
        self.gain_tenths[self.index(cell)]
    }

    pub fn gain_tenths_slice(&self) -> &[u8] {
        &self.gain_tenths
    }

    pub fn obstacle_slice(&self) -> &[bool] {
        &self.obstacles
    }

    /// All cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        (0..self.len()).map(|i| self.cell_at(i))
    }

    pub fn traversable_cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        self.cells().filter(|&c| !self.is_obstacle(c))
    }

    pub fn traversable_count(&self) -> usize {
        self.obstacles.iter().filter(|&&b| !b).count()
    }

    /// World coordinates of a cell center.
    pub fn cell_center(&self, cell: CellIndex) -> [f64; 2] {
        [
            self.origin[0] + cell.col as f64 * self.cell_size,
            self.origin[1] + cell.row as f64 * self.cell_size,
        ]
    }

    /// Cell whose square contains the world point. Points outside the grid
    /// are rejected, never clamped.
    pub fn world_to_cell(&self, point: [f64; 2]) -> Result<CellIndex> {
        let fc = ((point[0] - self.origin[0]) / self.cell_size + 0.5).floor();
        let fr = ((point[1] - self.origin[1]) / self.cell_size + 0.5).floor();
        if !(fc.is_finite() && fr.is_finite())
            || fc < 0.0
            || fr < 0.0
            || fc >= self.width as f64
            || fr >= self.height as f64
        {
            return Err(Error::OutOfGrid {
                x: point[0],
                y: point[1],
            });
        }
        Ok(CellIndex::new(fc as usize, fr as usize))
    }

    /// Nearest traversable cell whose center lies within half a cell
    /// diagonal of `point`.
    pub fn snap(&self, point: [f64; 2]) -> Option<CellIndex> {
        let limit = self.cell_size * std::f64::consts::SQRT_2 / 2.0 + 1e-9 * self.cell_size;
        let fc = ((point[0] - self.origin[0]) / self.cell_size).round() as i64;
        let fr = ((point[1] - self.origin[1]) / self.cell_size).round() as i64;
        let mut best: Option<(f64, CellIndex)> = None;
        for dr in -1..=1 {
            for dc in -1..=1 {
                let (c, r) = (fc + dc, fr + dr);
                if c < 0 || r < 0 || c >= self.width as i64 || r >= self.height as i64 {
                    continue;
                }
                let cell = CellIndex::new(c as usize, r as usize);
                if self.is_obstacle(cell) {
                    continue;
                }
                let [x, y] = self.cell_center(cell);
                let d = (x - point[0]).hypot(y - point[1]);
                if d <= limit && best.is_none_or(|(bd, bc)| d < bd || (d == bd && cell < bc)) {
                    best = Some((d, cell));
                }
            }
        }
        best.map(|(_, c)| c)
    }

    /// Traversable cells whose centers lie within `radius` of `center`,
    /// paired with their gain, in row-major order.
    pub fn slice_region(&self, center: [f64; 2], radius: f64) -> Vec<(CellIndex, f64)> {
        let reach = (radius / self.cell_size).ceil() as i64 + 1;
        let cc = ((center[0] - self.origin[0]) / self.cell_size).round() as i64;
        let cr = ((center[1] - self.origin[1]) / self.cell_size).round() as i64;
        let row_lo = (cr - reach).max(0);
        let row_hi = (cr + reach).min(self.height as i64 - 1);
        let col_lo = (cc - reach).max(0);
        let col_hi = (cc + reach).min(self.width as i64 - 1);
        let mut out = Vec::new();
        for r in row_lo..=row_hi {
            for c in col_lo..=col_hi {
                let cell = CellIndex::new(c as usize, r as usize);
                if self.is_obstacle(cell) {
                    continue;
                }
                let [x, y] = self.cell_center(cell);
                if (x - center[0]).hypot(y - center[1]) <= radius {
                    out.push((cell, self.gain(cell)));
                }
            }
        }
        out
    }

    /// 8-neighbors inside the grid in compass order N, NE, E, SE, S, SW, W, NW.
    pub fn neighbors(&self, cell: CellIndex) -> impl Iterator<Item = (Move, CellIndex)> + '_ {
        Move::ALL.into_iter().filter_map(move |m| {
            let (dc, dr) = m.delta();
            let c = cell.col as i64 + dc;
            let r = cell.row as i64 + dr;
            (c >= 0 && r >= 0 && c < self.width as i64 && r < self.height as i64)
                .then(|| (m, CellIndex::new(c as usize, r as usize)))
        })
    }

    /// Whether a single move between adjacent cells is legal: the target is
    /// traversable and diagonal moves do not cut past an obstacle corner.
    pub fn step_allowed(&self, from: CellIndex, to: CellIndex) -> bool {
        if !self.is_traversable(to) || from.chebyshev(to) != 1 {
            return false;
        }
        if from.col != to.col && from.row != to.row {
            let side_a = CellIndex::new(to.col, from.row);
            let side_b = CellIndex::new(from.col, to.row);
            return !self.is_obstacle(side_a) && !self.is_obstacle(side_b);
        }
        true
    }

    /// Parses a radio-map JSON document.
    ///
    /// Documents carrying `gain_db` are min-max normalized; documents carrying
    /// `gain_norm` (as produced by [`GridMap::to_json`]) are taken as already
    /// normalized. Both are quantized to tenths. Lattice positions without a
    /// cell entry become obstacles.
    pub fn from_json(document: &str) -> Result<Self> {
        let doc: RadioMapDocument = serde_json::from_str(document).map_err(Error::from_json)?;
        Self::from_document(&doc)
    }

    pub fn from_document(doc: &RadioMapDocument) -> Result<Self> {
        let cs = doc.cell_size_m;
        if !(cs.is_finite() && cs > 0.0) {
            return Err(Error::Geometry(format!("cell_size_m {cs} must be positive")));
        }
        if doc.cells.is_empty() {
            return Err(Error::EmptyMap);
        }
        let [ox, oy] = doc.origin_m;
        let mut placed = Vec::with_capacity(doc.cells.len());
        let (mut max_col, mut max_row) = (0usize, 0usize);
        for (i, cell) in doc.cells.iter().enumerate() {
            let fc = (cell.x - ox) / cs;
            let fr = (cell.y - oy) / cs;
            let (rc, rr) = (fc.round(), fr.round());
            let off_lattice = (fc - rc).abs() > LATTICE_TOLERANCE || (fr - rr).abs() > LATTICE_TOLERANCE;
            if off_lattice || rc < 0.0 || rr < 0.0 || !rc.is_finite() || !rr.is_finite() {
                return Err(Error::Geometry(format!(
                    "cell #{i} at ({}, {}) is not on the {cs} m lattice anchored at ({ox}, {oy})",
                    cell.x, cell.y
                )));
            }
            let idx = CellIndex::new(rc as usize, rr as usize);
            max_col = max_col.max(idx.col);
            max_row = max_row.max(idx.row);
            let value = match (cell.gain_db, cell.gain_norm) {
                (Some(db), None) => RawGain::Db(db),
                (None, Some(norm)) => RawGain::Norm(norm),
                _ => {
                    return Err(Error::Input(format!(
                        "cell #{i} must carry exactly one of gain_db or gain_norm"
                    )))
                }
            };
            placed.push((idx, value));
        }
        let width = doc.width_cells.unwrap_or(max_col + 1);
        let height = doc.height_cells.unwrap_or(max_row + 1);
        if width <= max_col || height <= max_row {
            return Err(Error::Geometry(format!(
                "declared size {width}x{height} does not contain cell ({max_col}, {max_row})"
            )));
        }

        let all_db = placed.iter().all(|(_, g)| matches!(g, RawGain::Db(_)));
        let all_norm = placed.iter().all(|(_, g)| matches!(g, RawGain::Norm(_)));
        if !all_db && !all_norm {
            return Err(Error::Input("cannot mix gain_db and gain_norm cells".into()));
        }
        let raw: Vec<f64> = placed.iter().map(|(_, g)| g.value()).collect();
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("gain values must be finite".into()));
        }
        let normalized: Vec<f64> = if all_db {
            min_max_normalize(&raw)
        } else {
            if let Some(bad) = raw.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::Input(format!("gain_norm {bad} outside [0, 1]")));
            }
            raw
        };

        let n = width * height;
        let mut tenths = vec![0u8; n];
        let mut obstacles = vec![true; n];
        for ((idx, _), g) in placed.iter().zip(normalized) {
            let lin = idx.row * width + idx.col;
            if !obstacles[lin] {
                return Err(Error::Geometry(format!("duplicate cell at {idx}")));
            }
            obstacles[lin] = false;
            tenths[lin] = quantize(g);
        }
        Self::from_tenths(width, height, cs, doc.origin_m, tenths, obstacles)
    }

    /// Export document: traversable cells with `gain_norm`, row-major.
    pub fn to_document(&self) -> RadioMapDocument {
        RadioMapDocument {
            cell_size_m: self.cell_size,
            origin_m: self.origin,
            width_cells: Some(self.width),
            height_cells: Some(self.height),
            cells: self
                .traversable_cells()
                .map(|c| {
                    let [x, y] = self.cell_center(c);
                    RadioMapCell {
                        x,
                        y,
                        gain_db: None,
                        gain_norm: Some(self.gain(c)),
                    }
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("map document serializes")
    }

    /// Hex SHA-256 of the exported JSON; identifies map content in caches.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

enum RawGain {
    Db(f64),
    Norm(f64),
}

impl RawGain {
    fn value(&self) -> f64 {
        match *self {
            RawGain::Db(v) | RawGain::Norm(v) => v,
        }
    }
}

/// Rounds a gain in [0, 1] to integer tenths.
pub fn quantize(gain: f64) -> u8 {
    (gain.clamp(0.0, 1.0) * 10.0).round() as u8
}

/// Min-max normalization onto [0, 1]. A constant input maps to all ones.
pub fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return vec![1.0; values.len()];
    }
    values.iter().map(|v| (v - lo) / (hi - lo)).collect()
}

/// Radio-map JSON schema shared by ingestion and export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadioMapDocument {
    pub cell_size_m: f64,
    pub origin_m: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width_cells: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height_cells: Option<usize>,
    pub cells: Vec<RadioMapCell>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadioMapCell {
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_norm: Option<f64>,
}

/// One of the eight king moves. Declaration order is the compass order used
/// for deterministic tie-breaking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Move {
    N,
    NE,
    E,
    SE,
    S,
    SW,
    W,
    NW,
}

impl Move {
    pub const ALL: [Move; 8] = [
        Move::N,
        Move::NE,
        Move::E,
        Move::SE,
        Move::S,
        Move::SW,
        Move::W,
        Move::NW,
    ];

    /// (column, row) offset; north is +row.
    pub fn delta(self) -> (i64, i64) {
        match self {
            Move::N => (0, 1),
            Move::NE => (1, 1),
            Move::E => (1, 0),
            Move::SE => (1, -1),
            Move::S => (0, -1),
            Move::SW => (-1, -1),
            Move::W => (-1, 0),
            Move::NW => (-1, 1),
        }
    }

    pub fn is_diagonal(self) -> bool {
        let (dc, dr) = self.delta();
        dc != 0 && dr != 0
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Move> {
        Move::ALL.get(code as usize).copied()
    }
}
