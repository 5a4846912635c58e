//! Quality-diversity search over urban building layouts.
//!
//! A layout (plot + buildings with heights and static flags) is evolved with
//! MAP-Elites. Fitness is the Floor Space Index; the archive is indexed by
//! pedestrian wind behavior under storm inflow: the share of open space that
//! stays comfortable for sitting and the open area that becomes dangerous.
//!
//! Module map:
//! - [`geometry`]: polygons, predicates, rasterization
//! - [`layout`]: the genome and its cell decomposition
//! - [`wind`]: evaluator interface and the built-in proxy model
//! - [`metrics`]: FSI and summary statistics
//! - [`operators`]: geometric blending and height mutation
//! - [`archive`]: the feature map
//! - [`engine`]: the search loop
//! - [`io`], [`render`]: file formats and SVG output

pub mod archive;
pub mod benchmark;
pub mod engine;
pub mod geometry;
pub mod io;
pub mod layout;
pub mod metrics;
pub mod operators;
pub mod render;
pub mod rng;
pub mod wind;

pub use archive::{bin_of, merge, Elite, FeatureMap, InsertOutcome, MapConfig, Provenance, QdMetrics};
pub use engine::{run, RunConfig, RunLog, RunResult};
pub use geometry::{Grid, Point2, Polygon, Vector2};
pub use layout::{Building, BuildingId, CellIndex, UrbanLayout};
pub use metrics::{fsi, urban_stats, UrbanStats};
pub use operators::{make_offspring, OperatorConfig};
pub use rng::RngStream;
pub use wind::{BehaviorDescriptor, Direction, ProxyEvaluator, WindConfig, WindEvaluator, WindRose};
