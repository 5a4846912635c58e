//! Test-only reference implementations, written cell by cell without the
//! library's line sweeps.
#![allow(dead_code)]

use urban_elites::geometry::Grid;
use urban_elites::wind::{BehaviorDescriptor, Direction, WindConfig, WindRose};
use urban_elites::UrbanLayout;

#[derive(Clone, Copy, PartialEq)]
pub enum Cell {
    Outside,
    Open,
    Solid(usize),
}

pub struct BruteSite {
    pub nx: usize,
    pub ny: usize,
    pub cs: f64,
    pub cells: Vec<Cell>,
    pub heights: Vec<f64>,
}

/// Classifies every cell center by direct point-in-polygon tests.
pub fn classify(layout: &UrbanLayout, cfg: &WindConfig) -> BruteSite {
    let grid = Grid::covering(&layout.plot().bbox(), cfg.raster_cell).unwrap();
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut cells = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let c = grid.cell_center(ix, iy);
            let mut class = if layout.plot().contains_point(c) { Cell::Open } else { Cell::Outside };
            for (bi, b) in layout.buildings().iter().enumerate() {
                if b.footprint.contains_point(c) {
                    class = Cell::Solid(bi);
                }
            }
            cells.push(class);
        }
    }
    BruteSite {
        nx,
        ny,
        cs: cfg.raster_cell,
        cells,
        heights: layout.buildings().iter().map(|b| b.height).collect(),
    }
}

impl BruteSite {
    fn at(&self, ix: isize, iy: isize) -> Option<Cell> {
        if ix < 0 || iy < 0 || ix as usize >= self.nx || iy as usize >= self.ny {
            return None;
        }
        Some(self.cells[iy as usize * self.nx + ix as usize])
    }

    /// Speed at one open cell: march upwind over every cell, then scan both
    /// ways across the flow.
    pub fn speed(&self, ix: usize, iy: usize, dir: Direction, cfg: &WindConfig) -> f64 {
        let (sx, sy) = dir.upwind_step();
        let mut wake = 1.0f64;
        let mut steps = 1isize;
        while let Some(cell) = self.at(ix as isize + sx * steps, iy as isize + sy * steps) {
            if let Cell::Solid(b) = cell {
                let d = steps as f64 * self.cs;
                let reach = cfg.wake_length_factor * self.heights[b];
                if d <= reach {
                    wake = wake.min(cfg.wake_floor + (1.0 - cfg.wake_floor) * (d / reach));
                }
            }
            steps += 1;
        }
        let (px, py) = (sy.abs(), sx.abs());
        let scan = |sign: isize| -> Option<isize> {
            let mut k = 1isize;
            while let Some(cell) = self.at(ix as isize + sign * px * k, iy as isize + sign * py * k) {
                if matches!(cell, Cell::Solid(_)) {
                    return Some(k);
                }
                k += 1;
            }
            None
        };
        let mut channel = 1.0;
        if let (Some(a), Some(b)) = (scan(-1), scan(1)) {
            let g = (a + b - 1) as f64 * self.cs;
            if g < cfg.channel_gap_max {
                channel = 1.0 + cfg.channel_gain * (1.0 - g / cfg.channel_gap_max);
            }
        }
        cfg.inflow_speed * wake * channel
    }

    /// Full field, zero on solid and outside cells.
    pub fn field(&self, dir: Direction, cfg: &WindConfig) -> Vec<f64> {
        let mut out = vec![0.0; self.nx * self.ny];
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                if self.cells[iy * self.nx + ix] == Cell::Open {
                    out[iy * self.nx + ix] = self.speed(ix, iy, dir, cfg);
                }
            }
        }
        out
    }
}

pub fn brute_descriptor(layout: &UrbanLayout, rose: &WindRose, cfg: &WindConfig) -> BehaviorDescriptor {
    let site = classify(layout, cfg);
    let open = site.cells.iter().filter(|c| **c == Cell::Open).count();
    let weights = rose.weights();
    let mut b_c = 0.0;
    let mut b_d = 0.0;
    for dir in Direction::ALL {
        let w = weights[dir.index()];
        if w == 0.0 {
            continue;
        }
        let field = site.field(dir, cfg);
        let mut comfortable = 0usize;
        let mut dangerous = 0usize;
        for (i, v) in field.iter().enumerate() {
            if site.cells[i] != Cell::Open {
                continue;
            }
            if *v < cfg.comfort_threshold {
                comfortable += 1;
            }
            if *v > cfg.danger_threshold {
                dangerous += 1;
            }
        }
        if open > 0 {
            b_c += w * (comfortable as f64 / open as f64);
        }
        b_d += w * (dangerous as f64 * (site.cs * site.cs));
    }
    BehaviorDescriptor {
        b_c: b_c.clamp(0.0, 1.0),
        b_d: b_d.min(layout.plot().area()),
    }
}

/// Rose with all hours on one direction.
pub fn single(dir: Direction) -> WindRose {
    WindRose::new(Direction::ALL.map(|d| (d, if d == dir { 8760.0 } else { 0.0 }))).unwrap()
}
