//! File formats: layout GeoJSON, wind-rose CSV, archive directories, run
//! logs and run configs.
//!
//! Layout documents are GeoJSON FeatureCollections in local planar meters.
//! One feature carries `"role": "plot"`; every other feature is a building
//! with a numeric `height`, an optional `static` flag and an optional `id`.
//! Top-level `properties` may declare the frame `origin` and the operator
//! `cell_grid` as `[rows, cols]`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::archive::{ArchiveError, Elite, FeatureMap, MapConfig, Provenance};
use crate::engine::{RunConfig, RunLog};
use crate::geometry::{GeometryError, Point2, Polygon};
use crate::layout::{Building, HeightBounds, LayoutError, UrbanLayout, DEFAULT_CELL_GRID};
use crate::wind::{BehaviorDescriptor, Direction, WindError, WindRose};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: feature {index}: {reason}")]
    Feature { path: PathBuf, index: usize, reason: String },
    #[error("{path}: {source}")]
    Layout {
        path: PathBuf,
        #[source]
        source: LayoutError,
    },
    #[error("{path}: {source}")]
    Rose {
        path: PathBuf,
        #[source]
        source: WindError,
    },
    #[error(transparent)]
    Archive(#[from] ArchiveError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, message: impl Into<String>) -> IoError {
    IoError::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn write(path: &Path, contents: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, contents).map_err(io_err(path))
}

// ---------------------------------------------------------------- layouts

pub fn load_layout(path: &Path) -> Result<UrbanLayout, IoError> {
    parse_layout(&read(path)?, path)
}

/// Parses a layout document; `path` only labels errors.
pub fn parse_layout(text: &str, path: &Path) -> Result<UrbanLayout, IoError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| parse_err(path, e.to_string()))?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(parse_err(path, "expected a GeoJSON FeatureCollection"));
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| parse_err(path, "missing features array"))?;
    let feature_err = |index: usize, reason: String| IoError::Feature {
        path: path.to_path_buf(),
        index,
        reason,
    };

    let mut plot: Option<Polygon> = None;
    let mut pending: Vec<(Option<u64>, Polygon, f64, bool)> = Vec::new();
    for (index, feature) in features.iter().enumerate() {
        let polygon = parse_polygon(feature.get("geometry")).map_err(|r| feature_err(index, r))?;
        let props = feature.get("properties").cloned().unwrap_or(Value::Null);
        if props.get("role").and_then(Value::as_str) == Some("plot") {
            if plot.is_some() {
                return Err(feature_err(index, "second plot feature".into()));
            }
            plot = Some(polygon);
            continue;
        }
        let height = props
            .get("height")
            .and_then(Value::as_f64)
            .ok_or_else(|| feature_err(index, "missing numeric height".into()))?;
        let is_static = match props.get("static") {
            None | Some(Value::Null) => false,
            Some(Value::Bool(b)) => *b,
            Some(other) => return Err(feature_err(index, format!("static must be boolean, got {other}"))),
        };
        let id = match props.get("id") {
            None | Some(Value::Null) => None,
            Some(v) => Some(
                v.as_u64()
                    .ok_or_else(|| feature_err(index, format!("id must be a non-negative integer, got {v}")))?,
            ),
        };
        pending.push((id, polygon, height, is_static));
    }
    let plot = plot.ok_or_else(|| parse_err(path, "no feature with role \"plot\""))?;

    let mut next = pending.iter().filter_map(|p| p.0).max().map_or(0, |m| m + 1);
    let buildings = pending
        .into_iter()
        .map(|(id, footprint, height, is_static)| {
            let id = id.unwrap_or_else(|| {
                next += 1;
                next - 1
            });
            Building::new(id, footprint, height, is_static)
        })
        .collect();

    let top = doc.get("properties");
    let cell_grid = match top.and_then(|p| p.get("cell_grid")) {
        None | Some(Value::Null) => DEFAULT_CELL_GRID,
        Some(v) => {
            let pair = v
                .as_array()
                .filter(|a| a.len() == 2)
                .and_then(|a| Some((a[0].as_u64()? as usize, a[1].as_u64()? as usize)))
                .ok_or_else(|| parse_err(path, "cell_grid must be [rows, cols]"))?;
            pair
        }
    };
    let origin = match top.and_then(|p| p.get("origin")) {
        None | Some(Value::Null) => Point2::new(0.0, 0.0),
        Some(v) => v
            .as_array()
            .filter(|a| a.len() == 2)
            .and_then(|a| Some(Point2::new(a[0].as_f64()?, a[1].as_f64()?)))
            .ok_or_else(|| parse_err(path, "origin must be [x, y]"))?,
    };
    let layout = UrbanLayout::with_options(plot, buildings, cell_grid, HeightBounds::default()).map_err(|source| {
        IoError::Layout {
            path: path.to_path_buf(),
            source,
        }
    })?;
    Ok(layout.with_origin(origin))
}

fn parse_polygon(geometry: Option<&Value>) -> Result<Polygon, String> {
    let geometry = geometry.ok_or("missing geometry")?;
    match geometry.get("type").and_then(Value::as_str) {
        Some("Polygon") => {}
        Some(other) => return Err(format!("unsupported geometry type {other}")),
        None => return Err("geometry without type".into()),
    }
    let rings = geometry
        .get("coordinates")
        .and_then(Value::as_array)
        .ok_or("missing coordinates")?;
    match rings.len() {
        0 => return Err("polygon without rings".into()),
        1 => {}
        n => return Err(format!("polygons with holes are not supported ({} interior rings)", n - 1)),
    }
    let ring = rings[0].as_array().ok_or("ring is not an array")?;
    let mut pts = Vec::with_capacity(ring.len());
    for (i, c) in ring.iter().enumerate() {
        let xy = c
            .as_array()
            .filter(|a| a.len() >= 2)
            .and_then(|a| Some(Point2::new(a[0].as_f64()?, a[1].as_f64()?)))
            .ok_or_else(|| format!("vertex {i} is not a coordinate pair"))?;
        pts.push(xy);
    }
    Polygon::new(pts).map_err(|e: GeometryError| e.to_string())
}

fn num(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

fn ring_json(p: &Polygon) -> String {
    let mut s = String::from("[[");
    let vs = p.vertices();
    for (i, v) in vs.iter().chain(std::iter::once(&vs[0])).enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let _ = write!(s, "[{}, {}]", num(v.x), num(v.y));
    }
    s.push_str("]]");
    s
}

/// Layout document text: plot first, then buildings by ascending id, with
/// coordinates and heights at 6 decimals.
pub fn layout_to_geojson(layout: &UrbanLayout) -> String {
    let (rows, cols) = layout.cell_grid_shape();
    let o = layout.origin();
    let mut s = String::new();
    s.push_str("{\n  \"type\": \"FeatureCollection\",\n");
    let _ = writeln!(
        s,
        "  \"properties\": {{\"origin\": [{}, {}], \"cell_grid\": [{rows}, {cols}]}},",
        num(o.x),
        num(o.y)
    );
    s.push_str("  \"features\": [\n");
    let _ = write!(
        s,
        "    {{\"type\": \"Feature\", \"properties\": {{\"role\": \"plot\"}}, \"geometry\": {{\"type\": \"Polygon\", \"coordinates\": {}}}}}",
        ring_json(layout.plot())
    );
    for b in layout.buildings() {
        let _ = write!(
            s,
            ",\n    {{\"type\": \"Feature\", \"properties\": {{\"id\": {}, \"height\": {}, \"static\": {}}}, \"geometry\": {{\"type\": \"Polygon\", \"coordinates\": {}}}}}",
            b.id,
            num(b.height),
            b.is_static,
            ring_json(&b.footprint)
        );
    }
    s.push_str("\n  ]\n}\n");
    s
}

pub fn save_layout(layout: &UrbanLayout, path: &Path) -> Result<(), IoError> {
    write(path, &layout_to_geojson(layout))
}

// ------------------------------------------------------------- wind rose

/// CSV with header `direction,hours` and one row per cardinal direction.
pub fn parse_wind_rose(text: &str, path: &Path) -> Result<WindRose, IoError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| parse_err(path, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["direction", "hours"] {
        return Err(parse_err(path, "expected header direction,hours"));
    }
    let mut entries = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(path, e.to_string()))?;
        let dir: Direction = rec[0].parse().map_err(|source| IoError::Rose {
            path: path.to_path_buf(),
            source,
        })?;
        let hours: f64 = rec[1]
            .parse()
            .map_err(|_| parse_err(path, format!("row {}: hours {:?} is not a number", i + 1, &rec[1])))?;
        entries.push((dir, hours));
    }
    WindRose::new(entries).map_err(|source| IoError::Rose {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_wind_rose(path: &Path) -> Result<WindRose, IoError> {
    parse_wind_rose(&read(path)?, path)
}

pub fn wind_rose_to_csv(rose: &WindRose) -> String {
    let mut s = String::from("direction,hours\n");
    for (d, h) in rose.entries() {
        let _ = writeln!(s, "{d},{h}");
    }
    s
}

// --------------------------------------------------------------- archives

pub const ARCHIVE_CSV: &str = "archive.csv";
pub const ARCHIVE_META: &str = "map.json";
pub const GENOME_DIR: &str = "genomes";
pub const RUN_LOG_CSV: &str = "runlog.csv";
pub const RUN_CONFIG_JSON: &str = "run_config.json";

#[derive(Debug, Serialize, Deserialize)]
struct ArchiveMeta {
    config: MapConfig,
    elites: Vec<EliteMeta>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EliteMeta {
    bin_c: usize,
    bin_d: usize,
    run_id: u32,
    evaluation: u64,
    parent: Option<u64>,
}

/// Writes `archive.csv`, `map.json` and one GeoJSON per distinct genome under
/// `genomes/`, named by a hash of the document text.
pub fn save_archive(map: &FeatureMap, dir: &Path) -> Result<(), IoError> {
    fs::create_dir_all(dir.join(GENOME_DIR)).map_err(io_err(dir))?;
    let mut csv = String::from("bin_c,bin_d,fitness,b_c,b_d,genome_file\n");
    let mut meta = ArchiveMeta {
        config: map.config().clone(),
        elites: Vec::new(),
    };
    for ((i, j), e) in map.elites() {
        let doc = layout_to_geojson(&e.genome);
        let hash = Sha256::digest(doc.as_bytes());
        let name: String = hash[..8].iter().map(|b| format!("{b:02x}")).collect();
        let rel = format!("{GENOME_DIR}/{name}.geojson");
        let target = dir.join(&rel);
        if !target.exists() {
            write(&target, &doc)?;
        }
        let _ = writeln!(
            csv,
            "{i},{j},{},{},{},{rel}",
            e.fitness, e.descriptor.b_c, e.descriptor.b_d
        );
        meta.elites.push(EliteMeta {
            bin_c: i,
            bin_d: j,
            run_id: e.provenance.run_id,
            evaluation: e.provenance.evaluation,
            parent: e.provenance.parent,
        });
    }
    write(&dir.join(ARCHIVE_CSV), &csv)?;
    let meta_text = serde_json::to_string_pretty(&meta).expect("archive metadata serializes");
    write(&dir.join(ARCHIVE_META), &(meta_text + "\n"))
}

pub fn load_archive(dir: &Path) -> Result<FeatureMap, IoError> {
    let meta_path = dir.join(ARCHIVE_META);
    let meta: ArchiveMeta =
        serde_json::from_str(&read(&meta_path)?).map_err(|e| parse_err(&meta_path, e.to_string()))?;
    let mut map = FeatureMap::new(meta.config)?;

    let csv_path = dir.join(ARCHIVE_CSV);
    let text = read(&csv_path)?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| parse_err(&csv_path, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["bin_c", "bin_d", "fitness", "b_c", "b_d", "genome_file"] {
        return Err(parse_err(&csv_path, "unexpected archive header"));
    }
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(&csv_path, e.to_string()))?;
        let field = |k: usize| -> Result<f64, IoError> {
            rec[k]
                .parse::<f64>()
                .map_err(|_| parse_err(&csv_path, format!("row {}: bad number {:?}", row + 1, &rec[k])))
        };
        let bin_c = field(0)? as usize;
        let bin_d = field(1)? as usize;
        let fitness = field(2)?;
        let descriptor = BehaviorDescriptor {
            b_c: field(3)?,
            b_d: field(4)?,
        };
        let genome = load_layout(&dir.join(&rec[5]))?;
        let prov = meta
            .elites
            .iter()
            .find(|m| m.bin_c == bin_c && m.bin_d == bin_d)
            .ok_or_else(|| parse_err(&meta_path, format!("no provenance for bin ({bin_c}, {bin_d})")))?;
        let provenance = Provenance {
            run_id: prov.run_id,
            evaluation: prov.evaluation,
            parent: prov.parent,
        };
        map.put((bin_c, bin_d), Elite::new(Arc::new(genome), fitness, descriptor, provenance))?;
    }
    Ok(map)
}

// ------------------------------------------------------- logs and configs

pub fn run_log_to_csv(log: &RunLog) -> String {
    let mut s = String::from("selection,inserted1,inserted2,coverage,max_fitness,qd_score,ms\n");
    for r in &log.records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{:.3}",
            r.selection, r.inserted1 as u8, r.inserted2 as u8, r.coverage, r.max_fitness, r.qd_score, r.ms
        );
    }
    s
}

pub fn save_run_log(log: &RunLog, path: &Path) -> Result<(), IoError> {
    write(path, &run_log_to_csv(log))
}

pub fn load_run_config(path: &Path) -> Result<RunConfig, IoError> {
    serde_json::from_str(&read(path)?).map_err(|e| parse_err(path, e.to_string()))
}

pub fn save_run_config(cfg: &RunConfig, path: &Path) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(cfg).expect("run config serializes");
    write(path, &(text + "\n"))
}
