//! Pedestrian wind behavior of a layout.
//!
//! A [`WindEvaluator`] maps a layout to its [`BehaviorDescriptor`]: the
//! hour-weighted share of open space that is comfortable for sitting and the
//! hour-weighted open area that is dangerous. [`ProxyEvaluator`] is the
//! built-in deterministic model. It rasterizes the plot and, for each of the
//! four cardinal directions, scales the inflow speed by a wake factor
//! (sheltering by upwind buildings) and a channel factor (acceleration in
//! narrow gaps across the flow).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{rasterize, GeometryError, Grid};
use crate::layout::UrbanLayout;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WindError {
    #[error("invalid wind config: {0}")]
    Config(String),
    #[error("invalid wind rose: {0}")]
    Rose(String),
    #[error("plot has no raster cells inside it at {0} m resolution")]
    EmptyPlot(f64),
    #[error("wind fields do not share the layout raster")]
    GridMismatch,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("evaluator failed: {0}")]
    Evaluator(String),
}

/// Direction the wind blows from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    N,
    E,
    S,
    W,
}

impl Direction {
    /// Canonical order used for storage and aggregation.
    pub const ALL: [Direction; 4] = [Direction::N, Direction::E, Direction::S, Direction::W];

    pub fn index(self) -> usize {
        match self {
            Direction::N => 0,
            Direction::E => 1,
            Direction::S => 2,
            Direction::W => 3,
        }
    }

    /// Unit step on the raster pointing upwind (towards the source).
    pub fn upwind_step(self) -> (isize, isize) {
        match self {
            Direction::N => (0, 1),
            Direction::E => (1, 0),
            Direction::S => (0, -1),
            Direction::W => (-1, 0),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Direction::N => "N",
            Direction::E => "E",
            Direction::S => "S",
            Direction::W => "W",
        };
        f.write_str(s)
    }
}

impl FromStr for Direction {
    type Err = WindError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "N" => Ok(Direction::N),
            "E" => Ok(Direction::E),
            "S" => Ok(Direction::S),
            "W" => Ok(Direction::W),
            other => Err(WindError::Rose(format!("unknown direction {other:?}"))),
        }
    }
}

/// Annual wind hours for each cardinal direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<RoseEntry>", into = "Vec<RoseEntry>")]
pub struct WindRose {
    hours: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoseEntry {
    pub direction: Direction,
    pub hours: f64,
}

impl TryFrom<Vec<RoseEntry>> for WindRose {
    type Error = WindError;

    fn try_from(v: Vec<RoseEntry>) -> Result<Self, Self::Error> {
        WindRose::new(v.into_iter().map(|e| (e.direction, e.hours)))
    }
}

impl From<WindRose> for Vec<RoseEntry> {
    fn from(r: WindRose) -> Self {
        r.entries().map(|(direction, hours)| RoseEntry { direction, hours }).collect()
    }
}

impl WindRose {
    /// Exactly four entries, one per direction, with non-negative hours and a
    /// positive total.
    pub fn new(entries: impl IntoIterator<Item = (Direction, f64)>) -> Result<Self, WindError> {
        let mut hours = [f64::NAN; 4];
        let mut count = 0;
        for (dir, h) in entries {
            count += 1;
            if count > 4 {
                return Err(WindError::Rose("more than 4 entries".into()));
            }
            if !hours[dir.index()].is_nan() {
                return Err(WindError::Rose(format!("direction {dir} given twice")));
            }
            if !(h.is_finite() && h >= 0.0) {
                return Err(WindError::Rose(format!("hours for {dir} must be finite and >= 0, got {h}")));
            }
            hours[dir.index()] = h;
        }
        if count != 4 {
            return Err(WindError::Rose(format!("expected 4 entries, got {count}")));
        }
        if hours.iter().sum::<f64>() <= 0.0 {
            return Err(WindError::Rose("total hours must be positive".into()));
        }
        Ok(Self { hours })
    }

    /// Equal hours from every direction (a quarter of a year each).
    pub fn uniform() -> Self {
        Self { hours: [2190.0; 4] }
    }

    pub fn hours(&self, dir: Direction) -> f64 {
        self.hours[dir.index()]
    }

    pub fn entries(&self) -> impl Iterator<Item = (Direction, f64)> + '_ {
        Direction::ALL.into_iter().map(|d| (d, self.hours[d.index()]))
    }

    /// Hours normalized to sum to one, in canonical direction order.
    pub fn weights(&self) -> [f64; 4] {
        let total: f64 = self.hours.iter().sum();
        self.hours.map(|h| h / total)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, WindError> {
        WindRose::new(self.entries().map(|(d, h)| (d, h * factor)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindConfig {
    /// Free-stream speed in m/s.
    pub inflow_speed: f64,
    /// Speeds strictly below this are comfortable for sitting.
    pub comfort_threshold: f64,
    /// Speeds strictly above this are dangerous.
    pub danger_threshold: f64,
    /// Raster resolution in meters.
    pub raster_cell: f64,
    /// Wake length as a multiple of building height.
    pub wake_length_factor: f64,
    /// Speed multiplier directly behind a building.
    pub wake_floor: f64,
    /// Gaps narrower than this (meters) accelerate the flow.
    pub channel_gap_max: f64,
    pub channel_gain: f64,
}

impl Default for WindConfig {
    fn default() -> Self {
        Self {
            inflow_speed: 17.0,
            comfort_threshold: 6.0,
            danger_threshold: 15.0,
            raster_cell: 4.0,
            wake_length_factor: 5.0,
            wake_floor: 0.3,
            channel_gap_max: 20.0,
            channel_gain: 0.4,
        }
    }
}

impl WindConfig {
    pub fn validate(&self) -> Result<(), WindError> {
        let bad = |msg: String| Err(WindError::Config(msg));
        let all_finite = [
            self.inflow_speed,
            self.comfort_threshold,
            self.danger_threshold,
            self.raster_cell,
            self.wake_length_factor,
            self.wake_floor,
            self.channel_gap_max,
            self.channel_gain,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return bad("all parameters must be finite".into());
        }
        if self.inflow_speed <= 0.0 {
            return bad(format!("inflow speed {} must be positive", self.inflow_speed));
        }
        if !(self.comfort_threshold > 0.0 && self.comfort_threshold < self.danger_threshold) {
            return bad("need 0 < comfort_threshold < danger_threshold".into());
        }
        let peak = self.inflow_speed * (1.0 + self.channel_gain);
        if self.danger_threshold >= peak {
            return bad(format!(
                "danger threshold {} is unreachable (peak speed {peak})",
                self.danger_threshold
            ));
        }
        if self.raster_cell <= 0.0 {
            return bad("raster_cell must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.wake_floor) {
            return bad("wake_floor must lie in [0, 1]".into());
        }
        if self.wake_length_factor <= 0.0 {
            return bad("wake_length_factor must be positive".into());
        }
        if self.channel_gap_max <= 0.0 || self.channel_gain < 0.0 {
            return bad("channel_gap_max must be positive and channel_gain non-negative".into());
        }
        Ok(())
    }

    /// Speed multiplier at distance `d` behind an obstacle of height `h`,
    /// or `None` when the cell is beyond the wake.
    pub fn wake_multiplier(&self, d: f64, h: f64) -> Option<f64> {
        let reach = self.wake_length_factor * h;
        (d <= reach).then(|| self.wake_floor + (1.0 - self.wake_floor) * (d / reach))
    }

    /// Speed multiplier for a cross-flow gap of width `g`, when bounded on
    /// both sides.
    pub fn channel_multiplier(&self, g: f64) -> f64 {
        if g < self.channel_gap_max {
            1.0 + self.channel_gain * (1.0 - g / self.channel_gap_max)
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorDescriptor {
    /// Hour-weighted fraction of open space with comfortable wind.
    pub b_c: f64,
    /// Hour-weighted open area (m²) with dangerous wind.
    pub b_d: f64,
}

/// Deterministic layout-to-descriptor evaluation.
pub trait WindEvaluator: Send + Sync {
    fn evaluate(
        &self,
        layout: &UrbanLayout,
        rose: &WindRose,
        config: &WindConfig,
    ) -> Result<BehaviorDescriptor, WindError>;
}

/// The wake/channel proxy model.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProxyEvaluator;

impl WindEvaluator for ProxyEvaluator {
    fn evaluate(
        &self,
        layout: &UrbanLayout,
        rose: &WindRose,
        config: &WindConfig,
    ) -> Result<BehaviorDescriptor, WindError> {
        evaluate_proxy(layout, rose, config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum CellClass {
    Outside,
    Open,
    Solid(u32),
}

/// Plot raster with each cell classified as outside the plot, open, or
/// covered by a building.
struct SiteRaster {
    grid: Grid,
    classes: Vec<CellClass>,
    heights: Vec<f64>,
    open_cells: usize,
}

impl SiteRaster {
    fn build(layout: &UrbanLayout, config: &WindConfig) -> Result<Self, WindError> {
        let grid = Grid::covering(&layout.plot().bbox(), config.raster_cell)?;
        let mut classes = vec![CellClass::Outside; grid.len()];
        for idx in rasterize(layout.plot(), &grid) {
            classes[idx] = CellClass::Open;
        }
        if classes.iter().all(|c| *c == CellClass::Outside) {
            return Err(WindError::EmptyPlot(config.raster_cell));
        }
        let mut heights = Vec::with_capacity(layout.buildings().len());
        for (bi, b) in layout.buildings().iter().enumerate() {
            heights.push(b.height);
            for idx in rasterize(&b.footprint, &grid) {
                classes[idx] = CellClass::Solid(bi as u32);
            }
        }
        let open_cells = classes.iter().filter(|c| **c == CellClass::Open).count();
        Ok(Self {
            grid,
            classes,
            heights,
            open_cells,
        })
    }

    /// Speed field for one direction.
    fn field(&self, dir: Direction, config: &WindConfig) -> Grid {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let cs = self.grid.cell_size();
        let mut out = self.grid.clone();
        let (wake, channel) = match dir {
            Direction::N | Direction::S => {
                // flow along columns, cross-flow along rows
                let mut wake = vec![1.0; nx * ny];
                for ix in 0..nx {
                    let line: Vec<usize> = match dir {
                        Direction::N => (0..ny).rev().map(|iy| self.grid.index(ix, iy)).collect(),
                        _ => (0..ny).map(|iy| self.grid.index(ix, iy)).collect(),
                    };
                    self.wake_line(&line, cs, config, &mut wake);
                }
                let mut channel = vec![1.0; nx * ny];
                for iy in 0..ny {
                    let line: Vec<usize> = (0..nx).map(|ix| self.grid.index(ix, iy)).collect();
                    self.channel_line(&line, cs, config, &mut channel);
                }
                (wake, channel)
            }
            Direction::E | Direction::W => {
                let mut wake = vec![1.0; nx * ny];
                for iy in 0..ny {
                    let line: Vec<usize> = match dir {
                        Direction::E => (0..nx).rev().map(|ix| self.grid.index(ix, iy)).collect(),
                        _ => (0..nx).map(|ix| self.grid.index(ix, iy)).collect(),
                    };
                    self.wake_line(&line, cs, config, &mut wake);
                }
                let mut channel = vec![1.0; nx * ny];
                for ix in 0..nx {
                    let line: Vec<usize> = (0..ny).map(|iy| self.grid.index(ix, iy)).collect();
                    self.channel_line(&line, cs, config, &mut channel);
                }
                (wake, channel)
            }
        };
        for (i, v) in out.values_mut().iter_mut().enumerate() {
            *v = match self.classes[i] {
                CellClass::Open => config.inflow_speed * wake[i] * channel[i],
                _ => 0.0,
            };
        }
        out
    }

    /// `line` lists cell indices from the upwind end to the downwind end.
    fn wake_line(&self, line: &[usize], cs: f64, config: &WindConfig, wake: &mut [f64]) {
        // (building, step of its most downwind cell seen so far)
        let mut active: Vec<(u32, usize)> = Vec::new();
        for (step, &idx) in line.iter().enumerate() {
            if let CellClass::Solid(b) = self.classes[idx] {
                match active.iter_mut().find(|(ab, _)| *ab == b) {
                    Some(entry) => entry.1 = step,
                    None => active.push((b, step)),
                }
                continue;
            }
            let mut m = 1.0f64;
            active.retain(|&(b, at)| {
                let d = (step - at) as f64 * cs;
                match config.wake_multiplier(d, self.heights[b as usize]) {
                    Some(w) => {
                        m = m.min(w);
                        true
                    }
                    None => false,
                }
            });
            wake[idx] = m;
        }
    }

    /// `line` lists cell indices across the flow, in ascending order.
    fn channel_line(&self, line: &[usize], cs: f64, config: &WindConfig, channel: &mut [f64]) {
        let solid = |i: usize| matches!(self.classes[line[i]], CellClass::Solid(_));
        let n = line.len();
        let mut left = vec![None; n];
        let mut last = None;
        for (i, slot) in left.iter_mut().enumerate() {
            if solid(i) {
                last = Some(i);
            } else {
                *slot = last;
            }
        }
        let mut right = None;
        for i in (0..n).rev() {
            if solid(i) {
                right = Some(i);
                continue;
            }
            if let (Some(l), Some(r)) = (left[i], right) {
                let g = (r - l - 1) as f64 * cs;
                channel[line[i]] = config.channel_multiplier(g);
            }
        }
    }

    fn descriptor(&self, fields: &[Option<Grid>; 4], weights: &[f64; 4], config: &WindConfig, plot_area: f64) -> BehaviorDescriptor {
        let cell_area = self.grid.cell_size() * self.grid.cell_size();
        let mut b_c = 0.0;
        let mut b_d = 0.0;
        for dir in Direction::ALL {
            let Some(field) = &fields[dir.index()] else {
                continue;
            };
            let w = weights[dir.index()];
            let mut comfortable = 0usize;
            let mut dangerous = 0usize;
            for (i, &v) in field.values().iter().enumerate() {
                if self.classes[i] != CellClass::Open {
                    continue;
                }
                if v < config.comfort_threshold {
                    comfortable += 1;
                }
                if v > config.danger_threshold {
                    dangerous += 1;
                }
            }
            if self.open_cells > 0 {
                b_c += w * (comfortable as f64 / self.open_cells as f64);
            }
            b_d += w * (dangerous as f64 * cell_area);
        }
        BehaviorDescriptor {
            b_c: b_c.clamp(0.0, 1.0),
            b_d: b_d.min(plot_area),
        }
    }
}

/// Wind speed (m/s) on the plot raster for one direction. Cells covered by
/// a building or outside the plot hold 0.
pub fn compute_wind_field(layout: &UrbanLayout, direction: Direction, config: &WindConfig) -> Result<Grid, WindError> {
    config.validate()?;
    let raster = SiteRaster::build(layout, config)?;
    Ok(raster.field(direction, config))
}

/// Aggregates per-direction fields (canonical N, E, S, W order) into a
/// descriptor using the rose's normalized hours as weights.
///
/// `b_c = Σ w·(comfortable open cells / open cells)`,
/// `b_d = Σ w·(dangerous open cells · cell area)`, capped at the plot area.
pub fn descriptor_from_fields(
    fields: &[Grid; 4],
    rose: &WindRose,
    layout: &UrbanLayout,
    config: &WindConfig,
) -> Result<BehaviorDescriptor, WindError> {
    config.validate()?;
    let raster = SiteRaster::build(layout, config)?;
    if fields.iter().any(|f| !f.same_shape(&raster.grid)) {
        return Err(WindError::GridMismatch);
    }
    let fields = fields.clone().map(Some);
    Ok(raster.descriptor(&fields, &rose.weights(), config, layout.plot().area()))
}

/// Full proxy evaluation: four directional fields aggregated by the rose.
/// Directions with zero hours are skipped.
pub fn evaluate_proxy(layout: &UrbanLayout, rose: &WindRose, config: &WindConfig) -> Result<BehaviorDescriptor, WindError> {
    config.validate()?;
    let raster = SiteRaster::build(layout, config)?;
    let weights = rose.weights();
    let fields = Direction::ALL.map(|d| (weights[d.index()] > 0.0).then(|| raster.field(d, config)));
    Ok(raster.descriptor(&fields, &weights, config, layout.plot().area()))
}
