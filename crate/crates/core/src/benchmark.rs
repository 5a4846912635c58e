//! Synthetic grid city used as a desk-scale test bed: a 400 x 400 m plot with
//! a 10 x 10 array of 20 x 20 m blocks on a 40 m pitch, all 12 m tall.

use crate::geometry::{Point2, Polygon};
use crate::layout::{Building, LayoutError, UrbanLayout};

pub const PLOT_SIZE: f64 = 400.0;
pub const BLOCKS_PER_SIDE: usize = 10;
pub const PITCH: f64 = 40.0;
pub const BLOCK_SIZE: f64 = 20.0;
pub const BLOCK_HEIGHT: f64 = 12.0;

/// The grid city with `statics` of its 100 buildings flagged static, spread
/// evenly over the id range (every fifth building for 20).
pub fn grid_city(statics: usize) -> Result<UrbanLayout, LayoutError> {
    let total = BLOCKS_PER_SIDE * BLOCKS_PER_SIDE;
    let statics = statics.min(total);
    let plot = Polygon::rectangle(Point2::new(0.0, 0.0), Point2::new(PLOT_SIZE, PLOT_SIZE))
        .expect("plot rectangle is valid");
    let inset = 0.5 * (PITCH - BLOCK_SIZE);
    let buildings = (0..total)
        .map(|i| {
            let (row, col) = (i / BLOCKS_PER_SIDE, i % BLOCKS_PER_SIDE);
            let x = col as f64 * PITCH + inset;
            let y = row as f64 * PITCH + inset;
            let footprint = Polygon::rectangle(Point2::new(x, y), Point2::new(x + BLOCK_SIZE, y + BLOCK_SIZE))
                .expect("block rectangle is valid");
            let is_static = (i * statics) % total < statics;
            Building::new(i as u64, footprint, BLOCK_HEIGHT, is_static)
        })
        .collect();
    UrbanLayout::new(plot, buildings)
}
