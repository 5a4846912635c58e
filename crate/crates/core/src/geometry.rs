//! Planar polygon primitives in local metric coordinates.
//!
//! Every [`Polygon`] is simple and stored counter-clockwise. Predicates use
//! closed-set semantics: touching edges or shared vertices count as contact.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("polygon needs at least 3 distinct vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon has zero area")]
    ZeroArea,
    #[error("polygon vertex {0} is not finite")]
    NonFinite(usize),
    #[error("polygon is self-intersecting (edges {0} and {1})")]
    SelfIntersecting(usize, usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn offset(self, d: Vector2) -> Point2 {
        Point2::new(self.x + d.x, self.y + d.y)
    }
}

/// Displacement from `other` to `self`.
impl std::ops::Sub for Point2 {
    type Output = Vector2;

    fn sub(self, other: Point2) -> Vector2 {
        Vector2::new(self.x - other.x, self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vector2 {
    pub x: f64,
    pub y: f64,
}

impl Vector2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Axis-aligned rectangle, closed on all sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn overlaps(&self, other: &Rect) -> bool {
        self.min.x <= other.max.x
            && other.min.x <= self.max.x
            && self.min.y <= other.max.y
            && other.min.y <= self.max.y
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

/// Twice the signed area of triangle (a, b, c); positive when counter-clockwise.
fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(p: Point2, a: Point2, b: Point2) -> bool {
    orient(a, b, p) == 0.0
        && p.x >= a.x.min(b.x)
        && p.x <= a.x.max(b.x)
        && p.y >= a.y.min(b.y)
        && p.y <= a.y.max(b.y)
}

/// Closed segment intersection, including touching and collinear overlap.
pub fn segments_intersect(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(p1, q1, q2))
        || (d2 == 0.0 && on_segment(p2, q1, q2))
        || (d3 == 0.0 && on_segment(q1, p1, p2))
        || (d4 == 0.0 && on_segment(q2, p1, p2))
}

/// Interiors of the two segments cross at a single point.
fn segments_cross_properly(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// A simple polygon with counter-clockwise vertex order (implicitly closed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2>", into = "Vec<Point2>")]
pub struct Polygon {
    vertices: Vec<Point2>,
}

impl TryFrom<Vec<Point2>> for Polygon {
    type Error = GeometryError;

    fn try_from(v: Vec<Point2>) -> Result<Self, Self::Error> {
        Polygon::new(v)
    }
}

impl From<Polygon> for Vec<Point2> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

impl Polygon {
    /// Validates and normalizes a vertex ring.
    ///
    /// A repeated closing vertex and consecutive duplicates are dropped, and
    /// clockwise rings are reversed.
    pub fn new(mut vertices: Vec<Point2>) -> Result<Self, GeometryError> {
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite(i));
        }
        vertices.dedup();
        while vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        let signed = signed_area(&vertices);
        if signed == 0.0 || !signed.is_finite() {
            return Err(GeometryError::ZeroArea);
        }
        if signed < 0.0 {
            vertices.reverse();
        }
        let poly = Polygon { vertices };
        poly.check_simple()?;
        Ok(poly)
    }

    /// Axis-aligned rectangle polygon.
    pub fn rectangle(min: Point2, max: Point2) -> Result<Self, GeometryError> {
        Polygon::new(vec![
            min,
            Point2::new(max.x, min.y),
            max,
            Point2::new(min.x, max.y),
        ])
    }

    fn check_simple(&self) -> Result<(), GeometryError> {
        let n = self.vertices.len();
        for i in 0..n {
            let (a1, a2) = self.edge(i);
            for j in (i + 1)..n {
                let (b1, b2) = self.edge(j);
                let adjacent_next = j == i + 1;
                let adjacent_wrap = i == 0 && j == n - 1;
                if adjacent_next {
                    // shared vertex a2 == b1: the far endpoints must not fold back
                    if on_segment(b2, a1, a2) || on_segment(a1, b1, b2) {
                        return Err(GeometryError::SelfIntersecting(i, j));
                    }
                } else if adjacent_wrap {
                    // shared vertex a1 == b2
                    if on_segment(b1, a1, a2) || on_segment(a2, b1, b2) {
                        return Err(GeometryError::SelfIntersecting(i, j));
                    }
                } else if segments_intersect(a1, a2, b1, b2) {
                    return Err(GeometryError::SelfIntersecting(i, j));
                }
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    fn edge(&self, i: usize) -> (Point2, Point2) {
        let n = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        (0..self.vertices.len()).map(move |i| self.edge(i))
    }

    /// Shoelace area; always positive for a constructed polygon.
    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn bbox(&self) -> Rect {
        let mut min = self.vertices[0];
        let mut max = self.vertices[0];
        for v in &self.vertices[1..] {
            min.x = min.x.min(v.x);
            min.y = min.y.min(v.y);
            max.x = max.x.max(v.x);
            max.y = max.y.max(v.y);
        }
        Rect { min, max }
    }

    pub fn translate(&self, d: Vector2) -> Polygon {
        Polygon {
            vertices: self.vertices.iter().map(|v| v.offset(d)).collect(),
        }
    }

    /// Area-weighted centroid.
    pub fn centroid(&self) -> Point2 {
        let o = self.vertices[0];
        let mut cx = 0.0;
        let mut cy = 0.0;
        let mut a2 = 0.0;
        for (p, q) in self.edges() {
            let (px, py) = (p.x - o.x, p.y - o.y);
            let (qx, qy) = (q.x - o.x, q.y - o.y);
            let cross = px * qy - qx * py;
            a2 += cross;
            cx += (px + qx) * cross;
            cy += (py + qy) * cross;
        }
        Point2::new(o.x + cx / (3.0 * a2), o.y + cy / (3.0 * a2))
    }

    /// Boundary points count as inside.
    pub fn contains_point(&self, pt: Point2) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if on_segment(pt, a, b) {
                return true;
            }
            if (a.y > pt.y) != (b.y > pt.y) {
                let x_cross = a.x + (pt.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if pt.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Closed-set overlap test: shared area, touching edges or shared vertices.
    pub fn intersects(&self, other: &Polygon) -> bool {
        if !self.bbox().overlaps(&other.bbox()) {
            return false;
        }
        for (a1, a2) in self.edges() {
            for (b1, b2) in other.edges() {
                if segments_intersect(a1, a2, b1, b2) {
                    return true;
                }
            }
        }
        self.contains_point(other.vertices[0]) || other.contains_point(self.vertices[0])
    }

    /// `inner` lies inside `self`, boundary contact allowed.
    pub fn contains_polygon(&self, inner: &Polygon) -> bool {
        let outer_box = self.bbox();
        let inner_box = inner.bbox();
        if inner_box.min.x < outer_box.min.x
            || inner_box.min.y < outer_box.min.y
            || inner_box.max.x > outer_box.max.x
            || inner_box.max.y > outer_box.max.y
        {
            return false;
        }
        if !inner.vertices.iter().all(|&v| self.contains_point(v)) {
            return false;
        }
        for (a1, a2) in inner.edges() {
            let mid = Point2::new(0.5 * (a1.x + a2.x), 0.5 * (a1.y + a2.y));
            if !self.contains_point(mid) {
                return false;
            }
            for (b1, b2) in self.edges() {
                if segments_cross_properly(a1, a2, b1, b2) {
                    return false;
                }
            }
        }
        true
    }
}

fn signed_area(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    let o = vertices[0];
    let mut acc = 0.0;
    for i in 0..n {
        let p = vertices[i];
        let q = vertices[(i + 1) % n];
        acc += (p.x - o.x) * (q.y - o.y) - (q.x - o.x) * (p.y - o.y);
    }
    0.5 * acc
}

pub fn polygon_area(p: &Polygon) -> f64 {
    p.area()
}

pub fn polygons_intersect(a: &Polygon, b: &Polygon) -> bool {
    a.intersects(b)
}

pub fn point_in_polygon(pt: Point2, p: &Polygon) -> bool {
    p.contains_point(pt)
}

pub fn translate(p: &Polygon, d: Vector2) -> Polygon {
    p.translate(d)
}

pub fn centroid(p: &Polygon) -> Point2 {
    p.centroid()
}

/// Regular raster of scalar values. Cell `(ix, iy)` spans
/// `[origin.x + ix*cell_size, origin.x + (ix+1)*cell_size]` and likewise in y;
/// values are stored row-major with `ix` varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    origin: Point2,
    cell_size: f64,
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl Grid {
    pub fn new(origin: Point2, cell_size: f64, nx: usize, ny: usize) -> Result<Self, GeometryError> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(GeometryError::InvalidGrid(format!("cell size {cell_size}")));
        }
        if nx == 0 || ny == 0 {
            return Err(GeometryError::InvalidGrid(format!("shape {nx}x{ny}")));
        }
        if !origin.is_finite() {
            return Err(GeometryError::InvalidGrid("non-finite origin".into()));
        }
        Ok(Self {
            origin,
            cell_size,
            nx,
            ny,
            values: vec![0.0; nx * ny],
        })
    }

    /// Smallest grid anchored at `rect.min` that covers `rect`.
    pub fn covering(rect: &Rect, cell_size: f64) -> Result<Self, GeometryError> {
        let cells = |extent: f64| -> usize {
            let exact = extent / cell_size;
            let rounded = exact.round();
            let n = if (exact - rounded).abs() <= 1e-9 * rounded.max(1.0) {
                rounded
            } else {
                exact.ceil()
            };
            (n as usize).max(1)
        };
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(GeometryError::InvalidGrid(format!("cell size {cell_size}")));
        }
        Grid::new(rect.min, cell_size, cells(rect.width()), cells(rect.height()))
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.nx, index / self.nx)
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Point2 {
        Point2::new(
            self.origin.x + (ix as f64 + 0.5) * self.cell_size,
            self.origin.y + (iy as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.index(ix, iy)]
    }

    pub fn set(&mut self, ix: usize, iy: usize, value: f64) {
        let i = self.index(ix, iy);
        self.values[i] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Same origin, cell size and shape.
    pub fn same_shape(&self, other: &Grid) -> bool {
        self.origin == other.origin
            && self.cell_size == other.cell_size
            && self.nx == other.nx
            && self.ny == other.ny
    }

    /// Inclusive range of cell indices along one axis whose centers may fall
    /// in `[lo, hi]`, or `None` when the span misses the grid.
    fn center_span(&self, lo: f64, hi: f64, origin: f64, n: usize) -> Option<(usize, usize)> {
        let first = ((lo - origin) / self.cell_size - 0.5).floor() - 1.0;
        let last = ((hi - origin) / self.cell_size - 0.5).ceil() + 1.0;
        if last < 0.0 || first > (n - 1) as f64 {
            return None;
        }
        let first = first.max(0.0) as usize;
        let last = (last as usize).min(n - 1);
        Some((first, last))
    }
}

/// Linear indices of cells whose center lies inside or on the boundary of
/// `p`, in ascending order. Parts of `p` outside the grid are clipped.
pub fn rasterize(p: &Polygon, grid: &Grid) -> Vec<usize> {
    let bb = p.bbox();
    let Some((x0, x1)) = grid.center_span(bb.min.x, bb.max.x, grid.origin.x, grid.nx) else {
        return Vec::new();
    };
    let Some((y0, y1)) = grid.center_span(bb.min.y, bb.max.y, grid.origin.y, grid.ny) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for iy in y0..=y1 {
        for ix in x0..=x1 {
            let c = grid.cell_center(ix, iy);
            if bb.contains(c) && p.contains_point(c) {
                out.push(grid.index(ix, iy));
            }
        }
    }
    out
}
