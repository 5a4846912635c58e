//! Variation operators.
//!
//! One variation step picks two cells A and B, removes a random share of
//! A's mutable buildings, and copies B's mutable buildings into A at the same
//! in-cell offset wherever they fit (geometric blending). The changed cell
//! then has its building heights perturbed by bounded polynomial mutation.
//! [`make_offspring`] chains these steps into two children of increasing
//! distance from the parent.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::{Building, BuildingId, CellIndex, HeightBounds, LayoutError, UrbanLayout};
use crate::rng::RngStream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("operator not applicable: {0}")]
    Inapplicable(String),
    #[error("height {height} outside [{min}, {max}]")]
    HeightOutOfBounds { height: f64, min: f64, max: f64 },
    #[error("invalid operator config: {0}")]
    Config(String),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OperatorConfig {
    pub removal_min: f64,
    pub removal_max: f64,
    /// Distribution index of the polynomial mutation.
    pub eta: f64,
    /// Chance that each mutable building in the changed cell is mutated.
    pub mutation_prob: f64,
    pub steps_per_offspring: usize,
    /// Cell pairs tried per blend before giving up.
    pub max_pair_retries: usize,
    pub height_bounds: HeightBounds,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self {
            removal_min: 0.10,
            removal_max: 0.50,
            eta: 20.0,
            mutation_prob: 1.0,
            steps_per_offspring: 5,
            max_pair_retries: 20,
            height_bounds: HeightBounds::default(),
        }
    }
}

impl OperatorConfig {
    pub fn validate(&self) -> Result<(), OperatorError> {
        let bad = |m: &str| Err(OperatorError::Config(m.to_string()));
        if !(0.0 <= self.removal_min && self.removal_min <= self.removal_max && self.removal_max <= 1.0) {
            return bad("need 0 <= removal_min <= removal_max <= 1");
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad("eta must be positive");
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return bad("mutation_prob must lie in [0, 1]");
        }
        let hb = self.height_bounds;
        if !(hb.min.is_finite() && hb.max.is_finite() && hb.min < hb.max) {
            return bad("height bounds need min < max");
        }
        Ok(())
    }
}

/// Result of one blend.
#[derive(Debug, Clone, PartialEq)]
pub struct BlendOutcome {
    pub layout: UrbanLayout,
    /// `None` when every tried pair failed and the layout is unchanged.
    pub changed_cell: Option<CellIndex>,
    pub removed: Vec<BuildingId>,
    pub copied: Vec<BuildingId>,
    pub pairs_tried: usize,
}

/// Geometric blending between two random cells of one layout.
///
/// A copy lands only if it stays inside the plot, keeps its centroid in cell
/// A, and touches neither the buildings left after removal nor earlier
/// copies. Removal is committed only together with at least one copy.
pub fn geometric_blend(layout: &UrbanLayout, rng: &mut RngStream, cfg: &OperatorConfig) -> Result<BlendOutcome, OperatorError> {
    if layout.mutable_count() == 0 {
        return Err(OperatorError::Inapplicable("layout has no mutable buildings".into()));
    }
    let grid = layout.cell_grid();
    let cells = layout.cells();
    let n = grid.cell_count();
    let mutable_in = |cell: CellIndex| -> Vec<&Building> {
        cells[&cell]
            .iter()
            .filter_map(|id| layout.building(*id))
            .filter(|b| !b.is_static)
            .collect()
    };

    for attempt in 0..cfg.max_pair_retries {
        let ai = rng.below(n);
        let mut bi = rng.below(n - 1);
        if bi >= ai {
            bi += 1;
        }
        let (a, b) = (grid.nth(ai), grid.nth(bi));

        let pool_a = mutable_in(a);
        let r = cfg.removal_min + (cfg.removal_max - cfg.removal_min) * rng.uniform();
        let k = ((r * pool_a.len() as f64 + 0.5).floor() as usize).min(pool_a.len());
        let mut order: Vec<usize> = (0..pool_a.len()).collect();
        for i in 0..k {
            let j = i + rng.below(order.len() - i);
            order.swap(i, j);
        }
        let mut removed: Vec<BuildingId> = order[..k].iter().map(|&i| pool_a[i].id).collect();
        removed.sort();

        let sources = mutable_in(b);
        if sources.is_empty() {
            continue;
        }
        let shift = grid.cell_origin(a) - grid.cell_origin(b);
        let obstacles: Vec<&Building> = layout
            .buildings()
            .iter()
            .filter(|o| removed.binary_search(&o.id).is_err())
            .collect();
        let mut copies: Vec<Building> = Vec::new();
        for src in sources {
            let footprint = src.footprint.translate(shift);
            if grid.cell_of(footprint.centroid()) != a || !layout.plot().contains_polygon(&footprint) {
                continue;
            }
            let bb = footprint.bbox();
            let blocked = obstacles
                .iter()
                .copied()
                .chain(copies.iter())
                .any(|o| o.footprint.bbox().overlaps(&bb) && o.footprint.intersects(&footprint));
            if blocked {
                continue;
            }
            let id = layout.next_id() + copies.len() as u64;
            copies.push(Building::new(id, footprint, src.height, false));
        }
        if copies.is_empty() {
            continue;
        }

        let copied: Vec<BuildingId> = copies.iter().map(|c| c.id).collect();
        let mut new_cell: Vec<Building> = pool_a
            .iter()
            .filter(|bld| removed.binary_search(&bld.id).is_err())
            .map(|bld| (*bld).clone())
            .collect();
        new_cell.extend(copies);
        let next = layout.replace_cell(a, new_cell)?;
        return Ok(BlendOutcome {
            layout: next,
            changed_cell: Some(a),
            removed,
            copied,
            pairs_tried: attempt + 1,
        });
    }
    Ok(BlendOutcome {
        layout: layout.clone(),
        changed_cell: None,
        removed: Vec::new(),
        copied: Vec::new(),
        pairs_tried: cfg.max_pair_retries,
    })
}

/// Normalized perturbation of bounded polynomial mutation for a uniform draw
/// `u` in `[0, 1)`.
pub fn polynomial_delta(h: f64, u: f64, cfg: &OperatorConfig) -> Result<f64, OperatorError> {
    let HeightBounds { min: lb, max: ub } = cfg.height_bounds;
    if !(h >= lb && h <= ub) {
        return Err(OperatorError::HeightOutOfBounds { height: h, min: lb, max: ub });
    }
    let span = ub - lb;
    let delta1 = (h - lb) / span;
    let delta2 = (ub - h) / span;
    let power = cfg.eta + 1.0;
    let dq = if u <= 0.5 {
        let base = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - delta1).powf(power);
        base.powf(1.0 / power) - 1.0
    } else {
        let base = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - delta2).powf(power);
        1.0 - base.powf(1.0 / power)
    };
    Ok(dq)
}

pub fn polynomial_mutate_height(h: f64, u: f64, cfg: &OperatorConfig) -> Result<f64, OperatorError> {
    let dq = polynomial_delta(h, u, cfg)?;
    let HeightBounds { min: lb, max: ub } = cfg.height_bounds;
    Ok((h + dq * (ub - lb)).clamp(lb, ub))
}

/// Mutates the height of every non-static building whose centroid lies in
/// `cell`, each with probability `cfg.mutation_prob`, in ascending id order.
pub fn mutate_cell_heights(
    layout: &UrbanLayout,
    cell: CellIndex,
    rng: &mut RngStream,
    cfg: &OperatorConfig,
) -> Result<UrbanLayout, OperatorError> {
    let grid = layout.cell_grid();
    if !grid.contains_cell(cell) {
        return Err(LayoutError::CellOutOfRange(cell, grid.rows(), grid.cols()).into());
    }
    let mut updates = Vec::new();
    for b in layout.buildings().iter().filter(|b| !b.is_static) {
        if grid.cell_of(b.footprint.centroid()) != cell {
            continue;
        }
        if rng.uniform() >= cfg.mutation_prob {
            continue;
        }
        let u = rng.uniform();
        updates.push((b.id, polynomial_mutate_height(b.height, u, cfg)?));
    }
    if updates.is_empty() {
        return Ok(layout.clone());
    }
    Ok(layout.with_heights(&updates)?)
}

/// What one blend-and-mutate step did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Cell whose heights were mutated.
    pub cell: CellIndex,
    /// Whether the blend succeeded (otherwise only heights changed).
    pub blended: bool,
    pub removed: usize,
    pub copied: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Offspring {
    pub child1: UrbanLayout,
    pub child2: UrbanLayout,
    pub steps: Vec<StepRecord>,
}

/// One blend followed by height mutation of the changed cell. When no pair
/// blends, a uniformly drawn cell is mutated instead.
pub fn variation_step(
    layout: &UrbanLayout,
    rng: &mut RngStream,
    cfg: &OperatorConfig,
) -> Result<(UrbanLayout, StepRecord), OperatorError> {
    let blend = geometric_blend(layout, rng, cfg)?;
    let (cell, blended) = match blend.changed_cell {
        Some(c) => (c, true),
        None => {
            let grid = layout.cell_grid();
            (grid.nth(rng.below(grid.cell_count())), false)
        }
    };
    let next = mutate_cell_heights(&blend.layout, cell, rng, cfg)?;
    Ok((
        next,
        StepRecord {
            cell,
            blended,
            removed: blend.removed.len(),
            copied: blend.copied.len(),
        },
    ))
}

/// Two children: `child1` is `steps_per_offspring` variation steps away from
/// the parent and `child2` another `steps_per_offspring` steps beyond it.
pub fn make_offspring(parent: &UrbanLayout, rng: &mut RngStream, cfg: &OperatorConfig) -> Result<Offspring, OperatorError> {
    cfg.validate()?;
    let mut steps = Vec::with_capacity(2 * cfg.steps_per_offspring);
    let mut current = parent.clone();
    for _ in 0..cfg.steps_per_offspring {
        let (next, rec) = variation_step(&current, rng, cfg)?;
        current = next;
        steps.push(rec);
    }
    let child1 = current.clone();
    for _ in 0..cfg.steps_per_offspring {
        let (next, rec) = variation_step(&current, rng, cfg)?;
        current = next;
        steps.push(rec);
    }
    Ok(Offspring {
        child1,
        child2: current,
        steps,
    })
}
