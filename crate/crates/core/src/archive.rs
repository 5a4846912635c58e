//! MAP-Elites feature map over the (b_c, b_d) descriptor plane.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::{GenomeDigest, UrbanLayout};
use crate::rng::RngStream;
use crate::wind::BehaviorDescriptor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArchiveError {
    #[error("invalid map config: {0}")]
    Config(String),
    #[error("feature map is empty")]
    Empty,
    #[error("feature maps have different configs")]
    ConfigMismatch,
}

/// What to do with descriptors outside the configured ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutOfRange {
    #[default]
    Clamp,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapConfig {
    pub bins_c: usize,
    pub bins_d: usize,
    pub range_c: [f64; 2],
    pub range_d: [f64; 2],
    pub out_of_range: OutOfRange,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            bins_c: 20,
            bins_d: 20,
            range_c: [0.7, 0.9],
            range_d: [0.0, 8000.0],
            out_of_range: OutOfRange::Clamp,
        }
    }
}

impl MapConfig {
    pub fn validate(&self) -> Result<(), ArchiveError> {
        if self.bins_c == 0 || self.bins_d == 0 {
            return Err(ArchiveError::Config("bin counts must be positive".into()));
        }
        for (name, [lo, hi]) in [("range_c", self.range_c), ("range_d", self.range_d)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(ArchiveError::Config(format!("{name} needs lo < hi, got [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn bin_count(&self) -> usize {
        self.bins_c * self.bins_d
    }

    pub fn in_range(&self, d: &BehaviorDescriptor) -> bool {
        let inside = |v: f64, [lo, hi]: [f64; 2]| v >= lo && v <= hi;
        inside(d.b_c, self.range_c) && inside(d.b_d, self.range_d)
    }
}

fn axis_bin(v: f64, [lo, hi]: [f64; 2], bins: usize) -> usize {
    let t = ((v - lo) / (hi - lo) * bins as f64).floor();
    if t.is_nan() || t < 0.0 {
        0
    } else {
        (t as usize).min(bins - 1)
    }
}

/// Bin of a descriptor; values outside the ranges clamp to the edge bins and
/// the upper edge maps to the last bin.
pub fn bin_of(d: &BehaviorDescriptor, cfg: &MapConfig) -> (usize, usize) {
    (
        axis_bin(d.b_c, cfg.range_c, cfg.bins_c),
        axis_bin(d.b_d, cfg.range_d, cfg.bins_d),
    )
}

/// Where an evaluated genome came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub run_id: u32,
    /// Evaluation index within the run; the seed layout is 0.
    pub evaluation: u64,
    /// Evaluation index of the parent elite, `None` for the seed layout.
    pub parent: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct Elite {
    pub genome: Arc<UrbanLayout>,
    pub digest: GenomeDigest,
    pub fitness: f64,
    pub descriptor: BehaviorDescriptor,
    pub provenance: Provenance,
}

impl Elite {
    pub fn new(genome: Arc<UrbanLayout>, fitness: f64, descriptor: BehaviorDescriptor, provenance: Provenance) -> Self {
        let digest = genome.digest();
        Self {
            genome,
            digest,
            fitness,
            descriptor,
            provenance,
        }
    }

    /// Merge precedence: higher fitness, then earlier run, then earlier evaluation.
    fn beats(&self, other: &Elite) -> bool {
        if self.fitness != other.fitness {
            return self.fitness > other.fitness;
        }
        (self.provenance.run_id, self.provenance.evaluation) < (other.provenance.run_id, other.provenance.evaluation)
    }
}

impl PartialEq for Elite {
    fn eq(&self, other: &Self) -> bool {
        self.digest == other.digest
            && self.fitness == other.fitness
            && self.descriptor == other.descriptor
            && self.provenance == other.provenance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    Inserted { bin: (usize, usize), replaced: bool },
    Rejected { bin: (usize, usize) },
    /// Descriptor outside the ranges under [`OutOfRange::Reject`], or a
    /// non-finite fitness.
    Discarded,
}

impl InsertOutcome {
    pub fn inserted(&self) -> bool {
        matches!(self, InsertOutcome::Inserted { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QdMetrics {
    pub coverage: f64,
    pub max_fitness: f64,
    pub qd_score: f64,
}

/// A `bins_c x bins_d` grid holding at most one elite per bin.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    config: MapConfig,
    cells: Vec<Option<Elite>>,
}

impl FeatureMap {
    pub fn new(config: MapConfig) -> Result<Self, ArchiveError> {
        config.validate()?;
        let n = config.bin_count();
        Ok(Self {
            config,
            cells: vec![None; n],
        })
    }

    pub fn config(&self) -> &MapConfig {
        &self.config
    }

    fn slot(&self, bin: (usize, usize)) -> usize {
        bin.0 * self.config.bins_d + bin.1
    }

    pub fn get(&self, bin_c: usize, bin_d: usize) -> Option<&Elite> {
        if bin_c >= self.config.bins_c || bin_d >= self.config.bins_d {
            return None;
        }
        self.cells[self.slot((bin_c, bin_d))].as_ref()
    }

    pub fn len(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.iter().all(|c| c.is_none())
    }

    /// Occupied bins in (bin_c, bin_d) order.
    pub fn elites(&self) -> impl Iterator<Item = ((usize, usize), &Elite)> + '_ {
        let bins_d = self.config.bins_d;
        self.cells
            .iter()
            .enumerate()
            .filter_map(move |(i, c)| c.as_ref().map(|e| ((i / bins_d, i % bins_d), e)))
    }

    /// Strict improvement: an occupied bin only changes hands to a fitter elite.
    pub fn try_insert(&mut self, candidate: Elite) -> InsertOutcome {
        if !candidate.fitness.is_finite() {
            return InsertOutcome::Discarded;
        }
        if self.config.out_of_range == OutOfRange::Reject && !self.config.in_range(&candidate.descriptor) {
            return InsertOutcome::Discarded;
        }
        let bin = bin_of(&candidate.descriptor, &self.config);
        let slot = self.slot(bin);
        match &self.cells[slot] {
            Some(inc) if candidate.fitness <= inc.fitness => InsertOutcome::Rejected { bin },
            prev => {
                let replaced = prev.is_some();
                self.cells[slot] = Some(candidate);
                InsertOutcome::Inserted { bin, replaced }
            }
        }
    }

    /// Uniform over occupied bins.
    pub fn select_uniform(&self, rng: &mut RngStream) -> Result<&Elite, ArchiveError> {
        let n = self.len();
        if n == 0 {
            return Err(ArchiveError::Empty);
        }
        let k = rng.below(n);
        Ok(self.elites().nth(k).map(|(_, e)| e).expect("k < occupied count"))
    }

    pub fn qd_metrics(&self) -> QdMetrics {
        let mut occupied = 0usize;
        let mut max_fitness = 0.0f64;
        let mut qd_score = 0.0;
        for (_, e) in self.elites() {
            if occupied == 0 {
                max_fitness = e.fitness;
            } else {
                max_fitness = max_fitness.max(e.fitness);
            }
            occupied += 1;
            qd_score += e.fitness;
        }
        QdMetrics {
            coverage: occupied as f64 / self.config.bin_count() as f64,
            max_fitness,
            qd_score,
        }
    }

    /// Places an elite at an explicit bin, bypassing the replacement rule.
    /// Used when restoring a saved archive.
    pub fn put(&mut self, bin: (usize, usize), elite: Elite) -> Result<(), ArchiveError> {
        if bin.0 >= self.config.bins_c || bin.1 >= self.config.bins_d {
            return Err(ArchiveError::Config(format!("bin {bin:?} outside the map")));
        }
        let slot = self.slot(bin);
        self.cells[slot] = Some(elite);
        Ok(())
    }
}

/// Per-bin winner across maps sharing one config.
pub fn merge(maps: &[FeatureMap]) -> Result<FeatureMap, ArchiveError> {
    let first = maps.first().ok_or(ArchiveError::Empty)?;
    if maps.iter().any(|m| m.config != first.config) {
        return Err(ArchiveError::ConfigMismatch);
    }
    let mut out = FeatureMap::new(first.config.clone())?;
    for m in maps {
        for (slot, cell) in m.cells.iter().enumerate() {
            let Some(e) = cell else { continue };
            let wins = match &out.cells[slot] {
                None => true,
                Some(inc) => e.beats(inc),
            };
            if wins {
                out.cells[slot] = Some(e.clone());
            }
        }
    }
    Ok(out)
}
