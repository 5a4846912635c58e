//! The MAP-Elites loop.
//!
//! The archive is seeded with the initial layout. Each selection then draws a
//! parent uniformly from the archive, derives two offspring, evaluates both
//! and offers them to the archive, first child first.
//!
//! Randomness is split into per-selection streams under the master seed:
//! stream `2s` drives the parent draw of selection `s` and stream `2s + 1`
//! its variation. Evaluation runs on up to `workers` threads and never
//! touches the random streams, so the archive does not depend on `workers`.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archive::{ArchiveError, Elite, FeatureMap, MapConfig, Provenance, QdMetrics};
use crate::layout::{LayoutError, UrbanLayout};
use crate::metrics::{fsi, MetricsError};
use crate::operators::{make_offspring, OperatorConfig, OperatorError};
use crate::rng::RngStream;
use crate::wind::{BehaviorDescriptor, WindConfig, WindError, WindEvaluator, WindRose};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid run config: {0}")]
    Config(String),
    #[error("evaluation {evaluation} failed: {source}")]
    Evaluation {
        evaluation: u64,
        #[source]
        source: WindError,
    },
    #[error("fitness of evaluation {evaluation} failed: {source}")]
    Fitness {
        evaluation: u64,
        #[source]
        source: MetricsError,
    },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Archive(#[from] ArchiveError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub selections: usize,
    pub seed: u64,
    pub run_id: u32,
    /// Evaluation threads.
    pub workers: usize,
    /// Overrides the layout's own cell grid when set.
    pub cell_grid: Option<(usize, usize)>,
    pub operators: OperatorConfig,
    pub map: MapConfig,
    pub wind: WindConfig,
    pub rose: WindRose,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            selections: 2000,
            seed: 0,
            run_id: 0,
            workers: 1,
            cell_grid: None,
            operators: OperatorConfig::default(),
            map: MapConfig::default(),
            wind: WindConfig::default(),
            rose: WindRose::uniform(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.workers == 0 {
            return Err(EngineError::Config("workers must be at least 1".into()));
        }
        self.operators.validate()?;
        self.map.validate()?;
        self.wind
            .validate()
            .map_err(|e| EngineError::Config(e.to_string()))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub selection: usize,
    /// Evaluation index of the selected parent.
    pub parent_evaluation: u64,
    pub inserted1: bool,
    pub inserted2: bool,
    pub coverage: f64,
    pub max_fitness: f64,
    pub qd_score: f64,
    /// Wall time of the selection in milliseconds.
    pub ms: f64,
    /// Set when the operators could not be applied and the parent was re-evaluated.
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    pub records: Vec<RunRecord>,
}

impl RunLog {
    /// Coverage and QD-score never decrease.
    pub fn is_monotone(&self) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].coverage >= w[0].coverage && w[1].qd_score >= w[0].qd_score)
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub map: FeatureMap,
    pub log: RunLog,
    pub evaluations: u64,
}

pub fn selection_stream(seed: u64, selection: usize) -> RngStream {
    RngStream::substream(seed, 2 * selection as u64)
}

pub fn variation_stream(seed: u64, selection: usize) -> RngStream {
    RngStream::substream(seed, 2 * selection as u64 + 1)
}

fn evaluate(
    layout: &UrbanLayout,
    evaluator: &dyn WindEvaluator,
    cfg: &RunConfig,
    evaluation: u64,
) -> Result<(f64, BehaviorDescriptor), EngineError> {
    let fitness = fsi(layout).map_err(|source| EngineError::Fitness { evaluation, source })?;
    let descriptor = evaluator
        .evaluate(layout, &cfg.rose, &cfg.wind)
        .map_err(|source| EngineError::Evaluation { evaluation, source })?;
    Ok((fitness, descriptor))
}

fn prepare(initial: &UrbanLayout, cfg: &RunConfig) -> Result<UrbanLayout, EngineError> {
    cfg.validate()?;
    let layout = match cfg.cell_grid {
        Some((rows, cols)) => initial.clone().with_cell_grid(rows, cols)?,
        None => initial.clone(),
    };
    let violations = layout.validate();
    if !violations.is_empty() {
        return Err(LayoutError::Invalid(violations).into());
    }
    Ok(layout)
}

/// Archive holding only the evaluated seed layout.
pub fn initialize(initial: &UrbanLayout, evaluator: &dyn WindEvaluator, cfg: &RunConfig) -> Result<FeatureMap, EngineError> {
    let layout = prepare(initial, cfg)?;
    seed_map(layout, evaluator, cfg)
}

fn seed_map(layout: UrbanLayout, evaluator: &dyn WindEvaluator, cfg: &RunConfig) -> Result<FeatureMap, EngineError> {
    let (fitness, descriptor) = evaluate(&layout, evaluator, cfg, 0)?;
    let mut map = FeatureMap::new(cfg.map.clone())?;
    let provenance = Provenance {
        run_id: cfg.run_id,
        evaluation: 0,
        parent: None,
    };
    map.try_insert(Elite::new(Arc::new(layout), fitness, descriptor, provenance));
    Ok(map)
}

/// Runs `cfg.selections` selections from the seed layout; performs exactly
/// `1 + 2 * selections` evaluations.
pub fn run(cfg: &RunConfig, initial: &UrbanLayout, evaluator: &dyn WindEvaluator) -> Result<RunResult, EngineError> {
    let layout = prepare(initial, cfg)?;
    let mut map = seed_map(layout, evaluator, cfg)?;
    let mut evaluations = 1u64;
    let mut log = RunLog::default();
    let pool = if cfg.workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.workers)
                .build()
                .map_err(|e| EngineError::Config(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };

    for s in 0..cfg.selections {
        let started = Instant::now();
        let parent = map.select_uniform(&mut selection_stream(cfg.seed, s))?;
        let parent_eval = parent.provenance.evaluation;
        let parent_genome = Arc::clone(&parent.genome);

        let (child1, child2, note) = match make_offspring(&parent_genome, &mut variation_stream(cfg.seed, s), &cfg.operators) {
            Ok(off) => (off.child1, off.child2, None),
            Err(OperatorError::Inapplicable(why)) => {
                log::warn!("selection {s}: {why}; re-evaluating parent");
                ((*parent_genome).clone(), (*parent_genome).clone(), Some(why))
            }
            Err(e) => return Err(e.into()),
        };

        let (e1, e2) = (evaluations, evaluations + 1);
        let eval1 = || evaluate(&child1, evaluator, cfg, e1);
        let eval2 = || evaluate(&child2, evaluator, cfg, e2);
        let (r1, r2) = match &pool {
            Some(pool) => pool.join(eval1, eval2),
            None => (eval1(), eval2()),
        };
        let (f1, d1) = r1?;
        let (f2, d2) = r2?;
        evaluations += 2;

        let prov = |evaluation| Provenance {
            run_id: cfg.run_id,
            evaluation,
            parent: Some(parent_eval),
        };
        let inserted1 = map.try_insert(Elite::new(Arc::new(child1), f1, d1, prov(e1))).inserted();
        let inserted2 = map.try_insert(Elite::new(Arc::new(child2), f2, d2, prov(e2))).inserted();

        let QdMetrics {
            coverage,
            max_fitness,
            qd_score,
        } = map.qd_metrics();
        log.records.push(RunRecord {
            selection: s,
            parent_evaluation: parent_eval,
            inserted1,
            inserted2,
            coverage,
            max_fitness,
            qd_score,
            ms: started.elapsed().as_secs_f64() * 1e3,
            note,
        });
    }
    Ok(RunResult { map, log, evaluations })
}
