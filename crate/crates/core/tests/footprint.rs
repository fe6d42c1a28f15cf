use geobim_core::footprint::{concave_hull, dbscan, overlap_percentage, overlap_table, overlaps_csv, FootprintParams, Polygon2D};
use geobim_core::pipeline::{footprints, Config};
use geobim_core::ExecMode;
use geobim_fixtures::oracle::{convex_hull as oracle_hull, dbscan_brute, partition, sample_ring, shoelace};
use geobim_fixtures::{self as fx, IfcBuilder, LengthUnit, Schema, SiteSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;

fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> Vec<[f64; 2]> {
    let blobs = rng.random_range(1..6);
    let centres: Vec<[f64; 2]> = (0..blobs).map(|_| [rng.random_range(0.0..40.0), rng.random_range(0.0..40.0)]).collect();
    (0..n)
        .map(|_| {
            if rng.random_bool(0.2) {
                [rng.random_range(0.0..40.0), rng.random_range(0.0..40.0)]
            } else {
                let c = centres[rng.random_range(0..blobs)];
                let spread = 3.0;
                [c[0] + rng.random_range(-spread..spread), c[1] + rng.random_range(-spread..spread)]
            }
        })
        .collect()
}

#[test]
fn dbscan_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for case in 0..50 {
        let pts = random_instance(&mut rng, 200);
        let eps = rng.random_range(0.3..2.0);
        let min_pts = rng.random_range(2..8);
        let expected = dbscan_brute(&pts, eps, min_pts);
        for mode in [ExecMode::Sequential, ExecMode::Parallel] {
            let got = dbscan(&pts, eps, min_pts, mode);
            assert_eq!(partition(&got), partition(&expected), "case {case} eps={eps} min_pts={min_pts}");
            assert_eq!(got, expected, "case {case}");
        }
    }
}

#[test]
fn dbscan_on_grid_aligned_points() {
    // exact eps distances on a lattice exercise the inclusive boundary
    let pts: Vec<[f64; 2]> = (0..20).flat_map(|i| (0..10).map(move |j| [i as f64 * 0.5, j as f64 * 0.5])).collect();
    for (eps, min_pts) in [(0.5, 5), (0.5, 6), (0.25, 1), (1.0, 9)] {
        assert_eq!(dbscan(&pts, eps, min_pts, ExecMode::Parallel), dbscan_brute(&pts, eps, min_pts), "eps={eps} min_pts={min_pts}");
    }
}

#[test]
fn unit_square_hull_is_exact() {
    let corners = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let h = concave_hull(&corners, 7).unwrap();
    assert_eq!(h.area, 1.0);
    assert!(h.is_ccw());
    let mut ring = h.ring.clone();
    ring.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(ring, vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]);
}

fn convex_polygon(rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let n = rng.random_range(3..12);
    let (rx, ry) = (rng.random_range(3.0..25.0), rng.random_range(3.0..25.0));
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let c = [rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0)];
    (0..n)
        .map(|i| {
            let t = phase + i as f64 * std::f64::consts::TAU / n as f64;
            [c[0] + rx * t.cos(), c[1] + ry * t.sin()]
        })
        .collect()
}

fn hull_error_on_convex_clouds(spacing: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let poly = convex_polygon(&mut rng);
        let mut cloud = sample_ring(&poly, spacing);
        let interior = cloud.len() / 4;
        for _ in 0..interior {
            let (a, b, c) = (poly[0], poly[rng.random_range(1..poly.len() - 1)], poly[poly.len() - 1]);
            let (mut u, mut v) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            if u + v > 1.0 {
                (u, v) = (1.0 - u, 1.0 - v);
            }
            cloud.push([a[0] + u * (b[0] - a[0]) + v * (c[0] - a[0]), a[1] + u * (b[1] - a[1]) + v * (c[1] - a[1])]);
        }
        let expected = shoelace(&oracle_hull(&cloud));
        let got = concave_hull(&cloud, 7).unwrap();
        assert!(got.is_ccw() && got.is_simple());
        worst = worst.max((got.area - expected).abs() / expected);
    }
    worst
}

#[test]
fn hull_of_convex_clouds_close_to_convex_hull() {
    let coarse = hull_error_on_convex_clouds(0.2, 1);
    assert!(coarse <= 0.02, "0.2 m sampling: {coarse}");
    let fine = hull_error_on_convex_clouds(0.05, 2);
    assert!(fine <= 0.01, "0.05 m sampling: {fine}");
}

const L_SHAPE: [[f64; 2]; 6] = [[0.0, 0.0], [20.0, 0.0], [20.0, 10.0], [10.0, 10.0], [10.0, 20.0], [0.0, 20.0]];

#[test]
fn hull_keeps_l_shape_concavity() {
    let authored = shoelace(&L_SHAPE);
    let convex = shoelace(&oracle_hull(&L_SHAPE));
    let notch = convex - authored;
    for spacing in [0.2, 0.5] {
        let h = concave_hull(&sample_ring(&L_SHAPE, spacing), 7).unwrap();
        assert!((h.area - authored).abs() / authored <= 0.02, "spacing {spacing}: {}", h.area);
        assert!(convex - h.area >= 0.9 * notch, "spacing {spacing}: {}", h.area);
    }
}

#[test]
fn l_shaped_building_footprint_keeps_notch() {
    let mut b = IfcBuilder::new("l.ifc", Schema::Ifc4, LengthUnit::Metre, SiteSpec::default());
    let s = b.storey("00", 0.0);
    b.prism("IFCSLAB", s, "floor", &L_SHAPE, -0.2, 0.2);
    let walls: [([f64; 2], [f64; 2]); 6] = [
        ([0.0, 0.0], [20.0, 0.3]),
        ([19.7, 0.0], [0.3, 10.0]),
        ([10.0, 9.7], [10.0, 0.3]),
        ([9.7, 10.0], [0.3, 10.0]),
        ([0.0, 19.7], [10.0, 0.3]),
        ([0.0, 0.0], [0.3, 20.0]),
    ];
    for (min, size) in walls {
        b.boxed("IFCWALL", s, "wall", [min[0], min[1], 0.0], [size[0], size[1], 3.0]);
    }
    let m = common::load("l.ifc", b.finish());
    let set = footprints(&m, &Config::default(), ExecMode::default()).unwrap();
    let f = &set.footprints[0];
    let authored = shoelace(&L_SHAPE);
    let notch = shoelace(&oracle_hull(&L_SHAPE)) - authored;
    assert_eq!(f.polygons.len(), 1);
    assert!((f.area - authored).abs() / authored <= 0.02, "{}", f.area);
    assert!(shoelace(&oracle_hull(&f.polygons[0].ring)) - f.area >= 0.9 * notch);
}

#[test]
fn stepped_tower_overlaps() {
    let m = common::load("stepped.ifc", fx::stepped_tower(LengthUnit::Metre));
    let set = overlap_table(&m, &FootprintParams::default(), m.ground_storey, ExecMode::default()).unwrap();
    assert_eq!(set.overlaps.len(), fx::stepped::FLOORS);
    for (i, pct) in set.overlaps.iter().enumerate() {
        let expected = if i < fx::stepped::BASE_FLOORS { 100.0 } else { 25.0 };
        assert!((pct - expected).abs() <= 1.0, "storey {i}: {pct}");
    }
    let tower = fx::stepped::TOWER[0] * fx::stepped::TOWER[1];
    assert!((set.footprints[5].area - tower).abs() / tower <= 0.01);

    let csv = overlaps_csv(&set);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "storey_name,elevation_m,polygon_count,overlap_pct");
    assert_eq!(lines.len(), fx::stepped::FLOORS + 1);
    for (i, line) in lines[1..].iter().enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0], format!("{i:02}"));
        let pct = cols[3];
        assert_eq!(pct.split('.').nth(1).map(str::len), Some(1), "{line}");
    }
    assert_eq!(lines[1].split(',').nth(3), Some("100.0"));
    assert_eq!(lines[3].split(',').nth(3), Some("25.0"));
}

#[test]
fn overlap_profile_reproduced() {
    let m = common::load("profile.ifc", fx::overlap_profile_tower());
    let set = overlap_table(&m, &FootprintParams::default(), m.ground_storey, ExecMode::default()).unwrap();
    for (got, want) in set.overlaps.iter().zip(fx::profile::OVERLAPS) {
        assert!((got - want).abs() <= 0.15, "{got} vs {want}");
    }
}

#[test]
fn sequential_and_parallel_agree() {
    let m = common::load("stepped.ifc", fx::stepped_tower(LengthUnit::Metre));
    let p = FootprintParams::default();
    let a = overlap_table(&m, &p, 0, ExecMode::Sequential).unwrap();
    let b = overlap_table(&m, &p, 0, ExecMode::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn detached_annex_is_own_polygon() {
    let m = common::load("two.ifc", fx::box_building(true));
    let set = overlap_table(&m, &FootprintParams::default(), 0, ExecMode::default()).unwrap();
    let f = &set.footprints[0];
    assert_eq!(f.polygons.len(), 2);
    assert!((f.area - 625.0).abs() / 625.0 <= 0.01, "{}", f.area);
}

#[test]
fn cut_height_decides_balcony() {
    let m = common::load("balcony.ifc", fx::balcony_building());
    let area = |cut: f64| {
        let p = FootprintParams { cut_offset: cut, ..Default::default() };
        overlap_table(&m, &p, 0, ExecMode::default()).unwrap().footprints[0].area
    };
    let with = area(fx::balcony::CUT_INCLUDED);
    let without = area(fx::balcony::CUT_EXCLUDED);
    assert!((without - 400.0).abs() / 400.0 <= 0.01, "{without}");
    assert!((with - without - fx::balcony::BALCONY_AREA).abs() <= 0.02 * fx::balcony::BALCONY_AREA + 1.0, "{with}");
}

fn rect(x: f64, y: f64, w: f64, h: f64) -> Polygon2D {
    Polygon2D::new(vec![[x, y], [x + w, y], [x + w, y + h], [x, y + h]])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn hull_encloses_every_point(pts in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..80), k in 3usize..12) {
        let pts: Vec<[f64; 2]> = pts.into_iter().map(|(x, y)| [x, y]).collect();
        if let Ok(h) = concave_hull(&pts, k) {
            prop_assert!(h.is_ccw());
            prop_assert!(h.is_simple());
            prop_assert!(h.area <= shoelace(&oracle_hull(&pts)) + 1e-6);
            for p in &pts {
                prop_assert!(h.contains(*p, 1e-6));
            }
        }
    }

    #[test]
    fn growing_target_never_lowers_overlap(x in -10.0f64..10.0, y in -10.0f64..10.0, w in 1.0f64..20.0, h in 1.0f64..20.0, grow in 0.0f64..10.0) {
        let reference = [rect(0.0, 0.0, 15.0, 15.0)];
        let small = overlap_percentage(&[rect(x, y, w, h)], &reference).unwrap();
        let big = overlap_percentage(&[rect(x - grow, y - grow, w + 2.0 * grow, h + 2.0 * grow)], &reference).unwrap();
        prop_assert!(big + 1e-9 >= small);
        prop_assert!((0.0..=100.0).contains(&small));
    }
}
