//! The genome: a plot, its buildings, and the regular cell grid used by the
//! variation operators.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::{Point2, Polygon, Rect};

pub const DEFAULT_HEIGHT_MIN: f64 = 4.0;
pub const DEFAULT_HEIGHT_MAX: f64 = 100.0;
pub const DEFAULT_CELL_GRID: (usize, usize) = (6, 6);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BuildingId(pub u64);

impl fmt::Display for BuildingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub id: BuildingId,
    pub footprint: Polygon,
    pub height: f64,
    pub is_static: bool,
}

impl Building {
    pub fn new(id: u64, footprint: Polygon, height: f64, is_static: bool) -> Self {
        Self {
            id: BuildingId(id),
            footprint,
            height,
            is_static,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeightBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for HeightBounds {
    fn default() -> Self {
        Self {
            min: DEFAULT_HEIGHT_MIN,
            max: DEFAULT_HEIGHT_MAX,
        }
    }
}

impl HeightBounds {
    pub fn contains(&self, h: f64) -> bool {
        h >= self.min && h <= self.max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellIndex {
    pub row: usize,
    pub col: usize,
}

impl CellIndex {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Overlap { a: BuildingId, b: BuildingId },
    OutsidePlot { id: BuildingId },
    HeightOutOfRange { id: BuildingId, height: f64 },
    DuplicateId { id: BuildingId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Overlap { a, b } => write!(f, "buildings {a} and {b} overlap"),
            Violation::OutsidePlot { id } => write!(f, "building {id} is not inside the plot"),
            Violation::HeightOutOfRange { id, height } => {
                write!(f, "building {id} height {height} is out of range")
            }
            Violation::DuplicateId { id } => write!(f, "building id {id} is duplicated"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("invalid layout: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("cell grid must be at least 2x2, got {0}x{1}")]
    BadCellGrid(usize, usize),
    #[error("cell {0} is outside the {1}x{2} grid")]
    CellOutOfRange(CellIndex, usize, usize),
    #[error("operator contract breached: {0}")]
    Contract(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Uniform rows x cols decomposition of the plot's bounding box.
///
/// Row 0 is the southernmost strip (smallest y), column 0 the westernmost.
/// A point on a shared cell edge belongs to the cell with the smaller
/// (row, col).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGrid {
    bounds: Rect,
    rows: usize,
    cols: usize,
}

impl CellGrid {
    pub fn new(bounds: Rect, rows: usize, cols: usize) -> Result<Self, LayoutError> {
        if rows < 2 || cols < 2 {
            return Err(LayoutError::BadCellGrid(rows, cols));
        }
        Ok(Self { bounds, rows, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        (0..self.rows).flat_map(move |r| (0..self.cols).map(move |c| CellIndex::new(r, c)))
    }

    /// Cell at position `i` in row-major order.
    pub fn nth(&self, i: usize) -> CellIndex {
        CellIndex::new(i / self.cols, i % self.cols)
    }

    fn x_edge(&self, k: usize) -> f64 {
        if k == self.cols {
            return self.bounds.max.x;
        }
        self.bounds.min.x + self.bounds.width() * k as f64 / self.cols as f64
    }

    fn y_edge(&self, k: usize) -> f64 {
        if k == self.rows {
            return self.bounds.max.y;
        }
        self.bounds.min.y + self.bounds.height() * k as f64 / self.rows as f64
    }

    pub fn contains_cell(&self, cell: CellIndex) -> bool {
        cell.row < self.rows && cell.col < self.cols
    }

    pub fn cell_rect(&self, cell: CellIndex) -> Rect {
        Rect {
            min: Point2::new(self.x_edge(cell.col), self.y_edge(cell.row)),
            max: Point2::new(self.x_edge(cell.col + 1), self.y_edge(cell.row + 1)),
        }
    }

    pub fn cell_origin(&self, cell: CellIndex) -> Point2 {
        self.cell_rect(cell).min
    }

    /// Cell owning `p`; points beyond the bounds clamp to the nearest edge cell.
    pub fn cell_of(&self, p: Point2) -> CellIndex {
        let col = (0..self.cols)
            .find(|&c| p.x <= self.x_edge(c + 1))
            .unwrap_or(self.cols - 1);
        let row = (0..self.rows)
            .find(|&r| p.y <= self.y_edge(r + 1))
            .unwrap_or(self.rows - 1);
        CellIndex::new(row, col)
    }
}

/// A plot and the buildings on it. Buildings are kept sorted by id.
#[derive(Debug, Clone, PartialEq)]
pub struct UrbanLayout {
    plot: Polygon,
    buildings: Vec<Building>,
    cell_grid: (usize, usize),
    height_bounds: HeightBounds,
    /// Georeference of the local frame; carried through I/O, unused by the search.
    origin: Point2,
    next_id: u64,
}

impl UrbanLayout {
    /// Builds and validates a layout.
    pub fn new(plot: Polygon, buildings: Vec<Building>) -> Result<Self, LayoutError> {
        Self::with_options(plot, buildings, DEFAULT_CELL_GRID, HeightBounds::default())
    }

    pub fn with_options(
        plot: Polygon,
        mut buildings: Vec<Building>,
        cell_grid: (usize, usize),
        height_bounds: HeightBounds,
    ) -> Result<Self, LayoutError> {
        if cell_grid.0 < 2 || cell_grid.1 < 2 {
            return Err(LayoutError::BadCellGrid(cell_grid.0, cell_grid.1));
        }
        buildings.sort_by_key(|b| b.id);
        let next_id = buildings.last().map_or(0, |b| b.id.0 + 1);
        let layout = Self {
            plot,
            buildings,
            cell_grid,
            height_bounds,
            origin: Point2::new(0.0, 0.0),
            next_id,
        };
        let violations = layout.validate();
        if violations.is_empty() {
            Ok(layout)
        } else {
            Err(LayoutError::Invalid(violations))
        }
    }

    pub fn with_origin(mut self, origin: Point2) -> Self {
        self.origin = origin;
        self
    }

    pub fn with_cell_grid(mut self, rows: usize, cols: usize) -> Result<Self, LayoutError> {
        if rows < 2 || cols < 2 {
            return Err(LayoutError::BadCellGrid(rows, cols));
        }
        self.cell_grid = (rows, cols);
        Ok(self)
    }

    pub fn plot(&self) -> &Polygon {
        &self.plot
    }

    pub fn buildings(&self) -> &[Building] {
        &self.buildings
    }

    pub fn building(&self, id: BuildingId) -> Option<&Building> {
        self.buildings
            .binary_search_by_key(&id, |b| b.id)
            .ok()
            .map(|i| &self.buildings[i])
    }

    pub fn cell_grid_shape(&self) -> (usize, usize) {
        self.cell_grid
    }

    pub fn height_bounds(&self) -> HeightBounds {
        self.height_bounds
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    /// Next id handed out to a newly created building.
    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    pub fn cell_grid(&self) -> CellGrid {
        let (rows, cols) = self.cell_grid;
        CellGrid::new(self.plot.bbox(), rows, cols).expect("cell grid shape checked on construction")
    }

    pub fn cell_of_building(&self, b: &Building) -> CellIndex {
        self.cell_grid().cell_of(b.footprint.centroid())
    }

    /// Partition of building ids by the cell containing each footprint
    /// centroid, over this layout's own cell grid. Every cell is present.
    pub fn cells(&self) -> BTreeMap<CellIndex, Vec<BuildingId>> {
        let (rows, cols) = self.cell_grid;
        split_into_cells(self, rows, cols).expect("cell grid shape checked on construction")
    }

    /// Every invariant violation; empty when the layout is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for b in &self.buildings {
            if !seen.insert(b.id) {
                out.push(Violation::DuplicateId { id: b.id });
            }
        }
        for b in &self.buildings {
            if !self.height_bounds.contains(b.height) {
                out.push(Violation::HeightOutOfRange {
                    id: b.id,
                    height: b.height,
                });
            }
            if !self.plot.contains_polygon(&b.footprint) {
                out.push(Violation::OutsidePlot { id: b.id });
            }
        }
        out.extend(
            overlapping_pairs(&self.buildings)
                .into_iter()
                .map(|(a, b)| Violation::Overlap { a, b }),
        );
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    pub fn static_buildings(&self) -> impl Iterator<Item = &Building> {
        self.buildings.iter().filter(|b| b.is_static)
    }

    pub fn mutable_count(&self) -> usize {
        self.buildings.iter().filter(|b| !b.is_static).count()
    }

    /// Static buildings (footprint + height), sorted for multiset comparison.
    pub fn static_signature(&self) -> Vec<(Vec<(u64, u64)>, u64)> {
        let mut sig: Vec<_> = self
            .static_buildings()
            .map(|b| {
                let ring = b
                    .footprint
                    .vertices()
                    .iter()
                    .map(|p| (p.x.to_bits(), p.y.to_bits()))
                    .collect();
                (ring, b.height.to_bits())
            })
            .collect();
        sig.sort();
        sig
    }

    /// Replaces the non-static buildings of `cell` with `new_buildings`.
    ///
    /// Static buildings of the cell are kept. A static entry in
    /// `new_buildings` is accepted only if it is identical to a building the
    /// cell already holds.
    pub fn replace_cell(&self, cell: CellIndex, new_buildings: Vec<Building>) -> Result<UrbanLayout, LayoutError> {
        let grid = self.cell_grid();
        if !grid.contains_cell(cell) {
            return Err(LayoutError::CellOutOfRange(cell, grid.rows(), grid.cols()));
        }
        let mut retained: Vec<Building> = self
            .buildings
            .iter()
            .filter(|b| b.is_static || grid.cell_of(b.footprint.centroid()) != cell)
            .cloned()
            .collect();
        let retained_ids: BTreeSet<BuildingId> = retained.iter().map(|b| b.id).collect();

        let mut incoming: Vec<Building> = Vec::with_capacity(new_buildings.len());
        for b in new_buildings {
            if b.is_static {
                if self.building(b.id) == Some(&b) && retained_ids.contains(&b.id) {
                    continue;
                }
                return Err(LayoutError::Contract(format!(
                    "static building {} cannot be inserted",
                    b.id
                )));
            }
            if retained_ids.contains(&b.id) || incoming.iter().any(|o| o.id == b.id) {
                return Err(LayoutError::Contract(format!("duplicate building id {}", b.id)));
            }
            let owner = grid.cell_of(b.footprint.centroid());
            if owner != cell {
                return Err(LayoutError::Contract(format!(
                    "building {} centroid falls in cell {owner}, not {cell}",
                    b.id
                )));
            }
            if !self.height_bounds.contains(b.height) {
                return Err(LayoutError::Contract(format!(
                    "building {} height {} out of range",
                    b.id, b.height
                )));
            }
            if !self.plot.contains_polygon(&b.footprint) {
                return Err(LayoutError::Contract(format!("building {} leaves the plot", b.id)));
            }
            let bb = b.footprint.bbox();
            if let Some(other) = retained
                .iter()
                .chain(incoming.iter())
                .find(|o| o.footprint.bbox().overlaps(&bb) && o.footprint.intersects(&b.footprint))
            {
                return Err(LayoutError::Contract(format!(
                    "building {} intersects building {}",
                    b.id, other.id
                )));
            }
            incoming.push(b);
        }

        let max_new = incoming.iter().map(|b| b.id.0 + 1).max().unwrap_or(0);
        retained.extend(incoming);
        retained.sort_by_key(|b| b.id);
        Ok(UrbanLayout {
            plot: self.plot.clone(),
            buildings: retained,
            cell_grid: self.cell_grid,
            height_bounds: self.height_bounds,
            origin: self.origin,
            next_id: self.next_id.max(max_new),
        })
    }

    /// Same footprints with new heights for the listed non-static buildings.
    pub fn with_heights(&self, updates: &[(BuildingId, f64)]) -> Result<UrbanLayout, LayoutError> {
        let mut out = self.clone();
        for &(id, h) in updates {
            let i = out
                .buildings
                .binary_search_by_key(&id, |b| b.id)
                .map_err(|_| LayoutError::Contract(format!("unknown building {id}")))?;
            let b = &mut out.buildings[i];
            if b.is_static {
                return Err(LayoutError::Contract(format!("static building {id} cannot change height")));
            }
            if !self.height_bounds.contains(h) {
                return Err(LayoutError::Contract(format!("height {h} for building {id} out of range")));
            }
            b.height = h;
        }
        Ok(out)
    }

    /// SHA-256 over a canonical byte encoding of the genome.
    pub fn digest(&self) -> GenomeDigest {
        let mut h = Sha256::new();
        let put_point = |h: &mut Sha256, p: &Point2| {
            h.update(p.x.to_le_bytes());
            h.update(p.y.to_le_bytes());
        };
        h.update((self.plot.len() as u64).to_le_bytes());
        for p in self.plot.vertices() {
            put_point(&mut h, p);
        }
        h.update((self.cell_grid.0 as u64).to_le_bytes());
        h.update((self.cell_grid.1 as u64).to_le_bytes());
        for b in &self.buildings {
            h.update(b.id.0.to_le_bytes());
            h.update([b.is_static as u8]);
            h.update(b.height.to_le_bytes());
            h.update((b.footprint.len() as u64).to_le_bytes());
            for p in b.footprint.vertices() {
                put_point(&mut h, p);
            }
        }
        let bytes = h.finalize();
        let mut out = [0u8; 32];
        out.copy_from_slice(&bytes);
        GenomeDigest(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GenomeDigest(pub [u8; 32]);

impl fmt::Display for GenomeDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

/// All intersecting building pairs, via a sweep over bounding boxes sorted by
/// min x. Pairs are reported as (smaller id, larger id), sorted.
pub fn overlapping_pairs(buildings: &[Building]) -> Vec<(BuildingId, BuildingId)> {
    let mut order: Vec<(Rect, &Building)> = buildings.iter().map(|b| (b.footprint.bbox(), b)).collect();
    order.sort_by(|a, b| a.0.min.x.total_cmp(&b.0.min.x).then(a.1.id.cmp(&b.1.id)));
    let mut pairs = Vec::new();
    for i in 0..order.len() {
        let (ra, a) = order[i];
        for &(rb, b) in &order[i + 1..] {
            if rb.min.x > ra.max.x {
                break;
            }
            if ra.overlaps(&rb) && a.footprint.intersects(&b.footprint) {
                pairs.push(if a.id <= b.id { (a.id, b.id) } else { (b.id, a.id) });
            }
        }
    }
    pairs.sort();
    pairs
}

/// Assigns every building to the cell of a rows x cols grid over the plot's
/// bounding box that contains its footprint centroid.
pub fn split_into_cells(
    layout: &UrbanLayout,
    rows: usize,
    cols: usize,
) -> Result<BTreeMap<CellIndex, Vec<BuildingId>>, LayoutError> {
    let grid = CellGrid::new(layout.plot.bbox(), rows, cols)?;
    let mut map: BTreeMap<CellIndex, Vec<BuildingId>> = grid.cells().map(|c| (c, Vec::new())).collect();
    for b in &layout.buildings {
        map.entry(grid.cell_of(b.footprint.centroid()))
            .or_default()
            .push(b.id);
    }
    Ok(map)
}
