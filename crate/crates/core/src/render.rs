//! SVG output for layouts and feature maps.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::archive::FeatureMap;
use crate::geometry::{Point2, Polygon, Rect};
use crate::io::IoError;
use crate::layout::UrbanLayout;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderSpec {
    pub width_px: u32,
    pub margin_px: u32,
    pub stroke_px: f64,
    /// Low-to-high color stops for heights and fitness.
    pub ramp: Vec<[u8; 3]>,
    pub static_fill: [u8; 3],
    pub empty_fill: [u8; 3],
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self {
            width_px: 800,
            margin_px: 40,
            stroke_px: 1.0,
            // viridis endpoints and midpoints
            ramp: vec![[68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37]],
            static_fill: [160, 160, 160],
            empty_fill: [238, 238, 238],
        }
    }
}

impl RenderSpec {
    fn color(&self, t: f64) -> String {
        let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
        let stops = &self.ramp;
        if stops.len() == 1 {
            return hex(stops[0]);
        }
        let pos = t * (stops.len() - 1) as f64;
        let k = (pos.floor() as usize).min(stops.len() - 2);
        let f = pos - k as f64;
        let (a, b) = (stops[k], stops[k + 1]);
        let mix = |i: usize| (a[i] as f64 + (b[i] as f64 - a[i] as f64) * f).round() as u8;
        hex([mix(0), mix(1), mix(2)])
    }
}

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

struct Frame {
    bounds: Rect,
    scale: f64,
    margin: f64,
}

impl Frame {
    fn map(&self, p: Point2) -> (f64, f64) {
        (
            self.margin + (p.x - self.bounds.min.x) * self.scale,
            self.margin + (self.bounds.max.y - p.y) * self.scale,
        )
    }

    fn points(&self, poly: &Polygon) -> String {
        poly.vertices()
            .iter()
            .map(|&v| {
                let (x, y) = self.map(v);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Plot outline plus one `<polygon class="building">` per building, filled
/// by height; static buildings are gray.
pub fn layout_svg(layout: &UrbanLayout, spec: &RenderSpec) -> String {
    let bounds = layout.plot().bbox();
    let margin = spec.margin_px as f64;
    let inner = (spec.width_px as f64 - 2.0 * margin).max(1.0);
    let scale = inner / bounds.width().max(bounds.height());
    let frame = Frame { bounds, scale, margin };
    let w = 2.0 * margin + bounds.width() * scale;
    let h = 2.0 * margin + bounds.height() * scale;
    let hb = layout.height_bounds();

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#
    );
    let _ = writeln!(
        s,
        r##"<polygon class="plot" points="{}" fill="none" stroke="#333333" stroke-width="{:.2}"/>"##,
        frame.points(layout.plot()),
        2.0 * spec.stroke_px
    );
    for b in layout.buildings() {
        let fill = if b.is_static {
            hex(spec.static_fill)
        } else {
            spec.color((b.height - hb.min) / (hb.max - hb.min))
        };
        let _ = writeln!(
            s,
            r##"<polygon class="building" data-id="{}" points="{}" fill="{fill}" stroke="#222222" stroke-width="{:.2}"/>"##,
            b.id,
            frame.points(&b.footprint),
            spec.stroke_px
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Fitness heatmap: `bin_c` grows to the right and `bin_d` upwards, so bin
/// (0, 0) is the lower-left cell.
pub fn feature_map_svg(map: &FeatureMap, spec: &RenderSpec) -> String {
    let cfg = map.config();
    let margin = spec.margin_px as f64 + 20.0;
    let inner = (spec.width_px as f64 - 2.0 * margin).max(1.0);
    let cw = inner / cfg.bins_c as f64;
    let ch = inner / cfg.bins_d as f64;
    let size = 2.0 * margin + inner;

    let (lo, hi) = map
        .elites()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, e)| (lo.min(e.fitness), hi.max(e.fitness)));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size:.0}" height="{size:.0}" viewBox="0 0 {size:.2} {size:.2}">"#
    );
    for i in 0..cfg.bins_c {
        for j in 0..cfg.bins_d {
            let x = margin + i as f64 * cw;
            let y = margin + (cfg.bins_d - 1 - j) as f64 * ch;
            let (class, fill, title) = match map.get(i, j) {
                Some(e) => {
                    let t = if hi > lo { (e.fitness - lo) / (hi - lo) } else { 1.0 };
                    ("elite", spec.color(t), format!("<title>{}</title>", e.fitness))
                }
                None => ("empty", hex(spec.empty_fill), String::new()),
            };
            let _ = writeln!(
                s,
                r##"<rect class="{class}" data-bin="{i},{j}" x="{x:.2}" y="{y:.2}" width="{cw:.2}" height="{ch:.2}" fill="{fill}" stroke="#ffffff" stroke-width="{:.2}">{title}</rect>"##,
                spec.stroke_px * 0.5
            );
        }
    }
    let [c_lo, c_hi] = cfg.range_c;
    let [d_lo, d_hi] = cfg.range_d;
    let _ = writeln!(
        s,
        r#"<text class="axis-c" x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="14">B_c: comfortable share [{c_lo}, {c_hi}]</text>"#,
        size / 2.0,
        size - margin / 3.0
    );
    let _ = writeln!(
        s,
        r#"<text class="axis-d" x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="14" transform="rotate(-90 {:.2} {:.2})">B_d: dangerous area m² [{d_lo}, {d_hi}]</text>"#,
        margin / 2.0,
        size / 2.0,
        margin / 2.0,
        size / 2.0
    );
    s.push_str("</svg>\n");
    s
}

fn write_svg(text: &str, path: &Path) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| IoError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn render_layout_svg(layout: &UrbanLayout, spec: &RenderSpec, path: &Path) -> Result<(), IoError> {
    write_svg(&layout_svg(layout, spec), path)
}

pub fn render_feature_map_svg(map: &FeatureMap, spec: &RenderSpec, path: &Path) -> Result<(), IoError> {
    write_svg(&feature_map_svg(map, spec), path)
}
