use proptest::prelude::*;

use urban_elites::geometry::{rasterize, Grid, Point2, Polygon, Rect, Vector2};

fn rect_strategy() -> impl Strategy<Value = Polygon> {
    (-50.0..50.0f64, -50.0..50.0f64, 0.5..40.0f64, 0.5..40.0f64)
        .prop_map(|(x, y, w, h)| Polygon::rectangle(Point2::new(x, y), Point2::new(x + w, y + h)).unwrap())
}

/// Convex polygon: a regular n-gon with random radius and rotation.
fn convex_strategy(min_r: f64) -> impl Strategy<Value = Polygon> {
    (3usize..9, min_r..min_r + 20.0, 0.0..std::f64::consts::TAU, -30.0..30.0f64, -30.0..30.0f64).prop_map(
        |(n, r, phase, cx, cy)| {
            let pts = (0..n)
                .map(|k| {
                    let a = phase + k as f64 * std::f64::consts::TAU / n as f64;
                    Point2::new(cx + r * a.cos(), cy + r * a.sin())
                })
                .collect();
            Polygon::new(pts).unwrap()
        },
    )
}

proptest! {
    #[test]
    fn intersection_is_symmetric(a in convex_strategy(1.0), b in rect_strategy()) {
        prop_assert_eq!(a.intersects(&b), b.intersects(&a));
    }

    #[test]
    fn area_is_translation_invariant(p in convex_strategy(1.0), dx in -1e3..1e3f64, dy in -1e3..1e3f64) {
        let moved = p.translate(Vector2::new(dx, dy));
        prop_assert!((moved.area() - p.area()).abs() <= 1e-9 * p.area().max(1.0));
    }

    #[test]
    fn centroid_moves_with_translation(p in convex_strategy(1.0), dx in -100.0..100.0f64, dy in -100.0..100.0f64) {
        let c = p.centroid();
        let m = p.translate(Vector2::new(dx, dy)).centroid();
        prop_assert!((m.x - c.x - dx).abs() < 1e-9 && (m.y - c.y - dy).abs() < 1e-9);
        prop_assert!(p.contains_point(c));
    }

    #[test]
    fn fine_raster_area_tracks_exact_area(p in convex_strategy(10.0)) {
        let grid = Grid::covering(&p.bbox(), 0.25).unwrap();
        let raster = rasterize(&p, &grid).len() as f64 * 0.0625;
        let exact = p.area();
        prop_assert!((raster - exact).abs() <= 0.02 * exact, "raster {} vs exact {}", raster, exact);
    }

    #[test]
    fn raster_is_translation_equivariant(p in convex_strategy(2.0), kx in -20i32..20, ky in -20i32..20) {
        let cs = 1.0;
        let bounds = Rect { min: Point2::new(-100.0, -100.0), max: Point2::new(100.0, 100.0) };
        let grid = Grid::covering(&bounds, cs).unwrap();
        // shifting by whole cells while keeping the grid fixed shifts indices
        let moved = p.translate(Vector2::new(kx as f64 * cs, ky as f64 * cs));
        let mut expected: Vec<usize> = rasterize(&p, &grid)
            .into_iter()
            .map(|i| {
                let (ix, iy) = grid.coords(i);
                grid.index((ix as i64 + kx as i64) as usize, (iy as i64 + ky as i64) as usize)
            })
            .collect();
        expected.sort_unstable();
        prop_assert_eq!(rasterize(&moved, &grid), expected);
    }

    #[test]
    fn separated_rectangles_do_not_intersect(a in rect_strategy(), gap in 0.01..10.0f64) {
        let bb = a.bbox();
        let b = Polygon::rectangle(
            Point2::new(bb.max.x + gap, bb.min.y),
            Point2::new(bb.max.x + gap + 5.0, bb.max.y),
        ).unwrap();
        prop_assert!(!a.intersects(&b));
        let touching = Polygon::rectangle(
            Point2::new(bb.max.x, bb.min.y),
            Point2::new(bb.max.x + 5.0, bb.max.y),
        ).unwrap();
        prop_assert!(a.intersects(&touching));
    }
}
