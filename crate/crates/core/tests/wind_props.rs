mod common;

use proptest::prelude::*;

use urban_elites::benchmark::grid_city;
use urban_elites::geometry::{Point2, Polygon};
use urban_elites::operators::{variation_step, OperatorConfig};
use urban_elites::wind::{compute_wind_field, evaluate_proxy, Direction, ProxyEvaluator, WindConfig, WindEvaluator, WindRose};
use urban_elites::{Building, RngStream, UrbanLayout};

fn evolved(seed: u64, steps: usize) -> UrbanLayout {
    let mut rng = RngStream::new(seed);
    let mut l = grid_city(20).unwrap();
    for _ in 0..steps {
        l = variation_step(&l, &mut rng, &OperatorConfig::default()).unwrap().0;
    }
    l
}

fn rose_strategy() -> impl Strategy<Value = WindRose> {
    prop::array::uniform4(0.0..3000.0f64).prop_filter_map("all-zero rose", |h| {
        WindRose::new(Direction::ALL.into_iter().zip(h)).ok()
    })
}

/// Small irregular site: a rotated plot with a few scattered towers.
fn small_site() -> UrbanLayout {
    let plot = Polygon::new(vec![
        Point2::new(0.0, 10.0),
        Point2::new(90.0, 0.0),
        Point2::new(100.0, 80.0),
        Point2::new(15.0, 95.0),
    ])
    .unwrap();
    let r = |x0: f64, y0: f64, x1: f64, y1: f64| Polygon::rectangle(Point2::new(x0, y0), Point2::new(x1, y1)).unwrap();
    let tri = Polygon::new(vec![Point2::new(60.0, 55.0), Point2::new(78.0, 58.0), Point2::new(66.0, 72.0)]).unwrap();
    UrbanLayout::new(
        plot,
        vec![
            Building::new(0, r(20.0, 20.0, 32.5, 31.0), 30.0, false),
            Building::new(1, r(38.0, 20.0, 50.0, 45.0), 9.0, false),
            Building::new(2, tri, 60.0, true),
            Building::new(3, r(25.0, 60.0, 40.0, 62.0), 4.0, false),
        ],
    )
    .unwrap()
}

#[test]
fn optimized_fields_match_oracle_at_one_meter() {
    let cfg = WindConfig {
        raster_cell: 1.0,
        ..WindConfig::default()
    };
    let site = small_site();
    let brute = common::classify(&site, &cfg);
    for dir in Direction::ALL {
        let fast = compute_wind_field(&site, dir, &cfg).unwrap();
        assert_eq!(fast.values(), brute.field(dir, &cfg).as_slice(), "direction {dir}");
    }
    let rose = WindRose::uniform();
    assert_eq!(evaluate_proxy(&site, &rose, &cfg).unwrap(), common::brute_descriptor(&site, &rose, &cfg));
}

#[test]
fn zero_hour_directions_do_not_contribute() {
    let cfg = WindConfig::default();
    let site = evolved(3, 25);
    let n_only = common::single(Direction::N);
    let a = evaluate_proxy(&site, &n_only, &cfg).unwrap();
    let b = common::brute_descriptor(&site, &n_only, &cfg);
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn evolved_layouts_match_oracle(seed in 0u64..500, steps in 1usize..40, rose in rose_strategy()) {
        let cfg = WindConfig::default();
        let site = evolved(seed, steps);
        let fast = evaluate_proxy(&site, &rose, &cfg).unwrap();
        let slow = common::brute_descriptor(&site, &rose, &cfg);
        prop_assert_eq!(fast, slow);
    }

    #[test]
    fn descriptors_stay_in_range(seed in 0u64..500, steps in 0usize..40, rose in rose_strategy()) {
        let site = evolved(seed, steps);
        let d = ProxyEvaluator.evaluate(&site, &rose, &WindConfig::default()).unwrap();
        prop_assert!((0.0..=1.0).contains(&d.b_c));
        prop_assert!(d.b_d >= 0.0 && d.b_d <= site.plot().area() + 1e-9);
        let again = ProxyEvaluator.evaluate(&site, &rose, &WindConfig::default()).unwrap();
        prop_assert_eq!(d, again);
    }

    #[test]
    fn scaling_hours_changes_nothing(seed in 0u64..500, rose in rose_strategy(), k in 1e-3..1e3f64) {
        let site = evolved(seed, 15);
        let cfg = WindConfig::default();
        let a = evaluate_proxy(&site, &rose, &cfg).unwrap();
        let b = evaluate_proxy(&site, &rose.scaled(k).unwrap(), &cfg).unwrap();
        prop_assert!((a.b_c - b.b_c).abs() <= 1e-12);
        prop_assert!((a.b_d - b.b_d).abs() <= 1e-12 * a.b_d.max(1.0));
    }

    /// Without channel acceleration, adding a building can only slow the wind
    /// at cells that stay open.
    #[test]
    fn extra_building_only_shelters(x in 5.0..370.0f64, y in 5.0..370.0f64, h in 4.0..100.0f64) {
        let cfg = WindConfig { channel_gain: 0.0, ..WindConfig::default() };
        let plot = Polygon::rectangle(Point2::new(0.0, 0.0), Point2::new(400.0, 400.0)).unwrap();
        let one = Polygon::rectangle(Point2::new(180.0, 180.0), Point2::new(200.0, 200.0)).unwrap();
        let extra = Polygon::rectangle(Point2::new(x, y), Point2::new(x + 20.0, y + 20.0)).unwrap();
        prop_assume!(!extra.intersects(&one));
        let base = UrbanLayout::new(plot.clone(), vec![Building::new(0, one.clone(), 30.0, false)]).unwrap();
        let more = UrbanLayout::new(
            plot,
            vec![Building::new(0, one, 30.0, false), Building::new(1, extra, h, false)],
        )
        .unwrap();
        for dir in Direction::ALL {
            let a = compute_wind_field(&base, dir, &cfg).unwrap();
            let b = compute_wind_field(&more, dir, &cfg).unwrap();
            for (va, vb) in a.values().iter().zip(b.values()) {
                prop_assert!(*vb <= *va);
            }
        }
    }
}
