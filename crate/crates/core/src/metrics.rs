//! Density metrics. Fitness is the Floor Space Index: gross floor area over
//! plot area, with floors counted at a constant storey height.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::UrbanLayout;

pub const FLOOR_HEIGHT: f64 = 4.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("height {0} m is below one storey ({FLOOR_HEIGHT} m)")]
    BelowOneFloor(f64),
}

/// Whole storeys in a building of height `height`.
pub fn floor_count(height: f64) -> Result<u32, MetricsError> {
    if !height.is_finite() || height < FLOOR_HEIGHT {
        return Err(MetricsError::BelowOneFloor(height));
    }
    Ok(((height / FLOOR_HEIGHT).floor() as u32).max(1))
}

/// Floor Space Index of the whole plot, static buildings included.
pub fn fsi(layout: &UrbanLayout) -> Result<f64, MetricsError> {
    let mut gross = 0.0;
    for b in layout.buildings() {
        gross += floor_count(b.height)? as f64 * b.footprint.area();
    }
    Ok(gross / layout.plot().area())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UrbanStats {
    pub fsi: f64,
    pub open_space_ratio: f64,
    pub mean_height: f64,
    pub building_count: usize,
    pub footprint_area: f64,
}

pub fn urban_stats(layout: &UrbanLayout) -> Result<UrbanStats, MetricsError> {
    let plot_area = layout.plot().area();
    let n = layout.buildings().len();
    let footprint_area: f64 = layout.buildings().iter().map(|b| b.footprint.area()).sum();
    let mean_height = if n == 0 {
        0.0
    } else {
        layout.buildings().iter().map(|b| b.height).sum::<f64>() / n as f64
    };
    Ok(UrbanStats {
        fsi: fsi(layout)?,
        open_space_ratio: (1.0 - footprint_area / plot_area).clamp(0.0, 1.0),
        mean_height,
        building_count: n,
        footprint_area,
    })
}
