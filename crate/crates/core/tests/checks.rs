use geobim_core::checks::{
    count_parking_spaces, height_verdict, max_height_entry, overhang_distances, segment_areas, segment_building_parts, CheckReport, OverhangLimit,
    PartRole, RegulationParams, Side, Verdict, BASE_HEIGHT, MAX_HEIGHT, OVERHANG, TOP_OVERLAP,
};
use geobim_core::export::{report_serialize, ReportFormat};
use geobim_core::pipeline::{footprints, load_model, run_checks, Config};
use geobim_core::storey::RepairAction;
use geobim_core::ExecMode;
use geobim_fixtures::oracle::RigidMotion;
use geobim_fixtures::{self as fx, IfcBuilder, LengthUnit, Schema, SiteSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;

fn report(name: &str, src: String, cfg: &Config) -> CheckReport {
    let m = common::load_with(name, src, cfg);
    run_checks(&m, cfg, ExecMode::default()).unwrap()
}

fn street_lines() -> Vec<OverhangLimit> {
    let [x1, y1, x2, y2] = fx::overhang::NORTH_LINE;
    let [a1, b1, a2, b2] = fx::overhang::SOUTH_LINE;
    vec![
        OverhangLimit::parse(&format!("{x1},{y1},{x2},{y2},left,Hertekade side")).unwrap(),
        OverhangLimit::parse(&format!("{a1},{b1},{a2},{b2},right,Boompjes side")).unwrap(),
    ]
}

#[test]
fn peak_tower_height_needs_review() {
    for unit in [LengthUnit::Metre, LengthUnit::Millimetre] {
        let r = report("peak.ifc", fx::peak_height_tower(unit), &Config::default());
        let e = r.entry(MAX_HEIGHT).unwrap();
        let h = e.value("height").unwrap();
        assert!((h - fx::peak::TOP_Z).abs() <= 0.01, "{unit:?}: {h}");
        assert_eq!(e.verdict, Verdict::NeedsReview);
        assert!(e.notes.iter().any(|n| n.contains("derogation")), "{:?}", e.notes);
    }
}

#[test]
fn height_verdict_mapping() {
    let reg = RegulationParams::default();
    assert_eq!(height_verdict(fx::peak::TOP_Z, &reg), Verdict::NeedsReview);
    assert_eq!(height_verdict(120.0, &reg), Verdict::Fail);
    assert_eq!(height_verdict(100.0, &reg), Verdict::Pass);
    assert_eq!(height_verdict(99.0, &reg), Verdict::Pass);
    assert_eq!(max_height_entry(120.0, vec![], &reg).verdict, Verdict::Fail);
}

#[test]
fn overhang_fixture_values_and_verdict() {
    let m = common::load("overhang.ifc", fx::overhang_tower());
    let targets: Vec<usize> = (0..m.storeys.len()).collect();
    let res = overhang_distances(&m, &targets, &street_lines(), &[]).unwrap();
    let north = &res[0];
    let south = &res[1];
    assert!((north.max_m - fx::overhang::NORTH_PROTRUSION).abs() <= 0.05, "{}", north.max_m);
    assert!((south.max_m - fx::overhang::SOUTH_PROTRUSION).abs() <= 0.05, "{}", south.max_m);
    assert_eq!(north.max_storey.as_deref(), Some(fx::overhang::NORTH_STOREY));
    assert_eq!(south.max_storey.as_deref(), Some(fx::overhang::SOUTH_STOREY));
    assert_eq!(north.limit_m, 10.0);
    assert_eq!(south.limit_m, 5.0);

    let mut cfg = Config::default();
    cfg.regulation.overhang_limits = street_lines();
    let r = report("overhang.ifc", fx::overhang_tower(), &cfg);
    let e = r.entry(OVERHANG).unwrap();
    assert_eq!(e.verdict, Verdict::Fail);
    assert_eq!(e.notes.iter().filter(|n| n.contains("exceeds")).count(), 2, "{:?}", e.notes);
}

#[test]
fn overhang_within_limits_passes() {
    let mut cfg = Config::default();
    cfg.regulation.overhang_limits = street_lines();
    for l in &mut cfg.regulation.overhang_limits {
        l.limit_m = 11.0;
    }
    let r = report("overhang.ifc", fx::overhang_tower(), &cfg);
    assert_eq!(r.entry(OVERHANG).unwrap().verdict, Verdict::Pass);
}

#[test]
fn ceiling_ensemble_thickness() {
    let r = report("ceiling.ifc", fx::ceiling_ensemble(), &Config::default());
    let d = r.entry(BASE_HEIGHT).unwrap().value("ceiling_ensemble").unwrap();
    assert!((d - (fx::ceiling::ELEVATION - fx::ceiling::CEILING_UNDERSIDE)).abs() <= 0.01, "{d}");
    assert!((d - 0.59).abs() <= 0.01);
}

#[test]
fn parking_garage_counts_cars() {
    let m = common::load("garage.ifc", fx::parking_garage());
    let p = count_parking_spaces(&m.graphs, &["fietsenstalling".to_string()]);
    assert_eq!(p.car_count, fx::parking::CARS);
    assert_eq!(p.car_elements.len(), fx::parking::CARS);
    assert_eq!(p.bike_space_evidence.len(), 1);
}

#[test]
fn stepped_tower_segments_at_authored_floor() {
    let m = common::load("stepped.ifc", fx::stepped_tower(LengthUnit::Metre));
    let set = footprints(&m, &Config::default(), ExecMode::default()).unwrap();
    let seg = segment_building_parts(&set, 5.0, m.ground_storey);
    assert_eq!(seg.parts.len(), 2);
    let split = fx::stepped::BASE_FLOORS;
    assert_eq!((seg.parts[0].first, seg.parts[0].last, seg.parts[0].role), (0, split - 1, PartRole::Base));
    assert_eq!((seg.parts[1].first, seg.parts[1].last, seg.parts[1].role), (split, fx::stepped::FLOORS - 1, PartRole::Top));

    let r = run_checks(&m, &Config::default(), ExecMode::default()).unwrap();
    assert_eq!(r.overall(), Verdict::Pass);
    let e = r.entry(BASE_HEIGHT).unwrap();
    assert_eq!(e.value("elevation_difference"), Some(split as f64 * fx::stepped::STOREY_HEIGHT));
    assert!((r.entry(TOP_OVERLAP).unwrap().value("max_overlap").unwrap() - 25.0).abs() <= 1.0);
}

#[test]
fn uniform_tower_is_one_part() {
    let m = common::load("uniform.ifc", fx::uniform_tower());
    let set = footprints(&m, &Config::default(), ExecMode::default()).unwrap();
    let seg = segment_building_parts(&set, 5.0, m.ground_storey);
    assert_eq!(seg.parts.len(), 1);
    assert_eq!(seg.parts[0].role, PartRole::Base);
}

#[test]
fn full_threshold_gives_one_part_on_random_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..20 {
        let n = rng.random_range(1..40);
        let areas: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..5000.0)).collect();
        let ground = rng.random_range(0..n);
        let seg = segment_areas(&areas, 100.0, ground);
        assert_eq!(seg.parts.len(), 1, "{areas:?}");
        assert_eq!((seg.parts[0].first, seg.parts[0].last), (0, n - 1));
    }
}

fn distinct_runs(areas: &[f64]) -> usize {
    1 + areas.windows(2).filter(|w| w[0] != w[1]).count()
}

proptest! {
    #[test]
    fn full_threshold_is_one_part(areas in prop::collection::vec(0.0f64..1e4, 1..50), g in 0usize..50) {
        let ground = g % areas.len();
        let seg = segment_areas(&areas, 100.0, ground);
        prop_assert_eq!(seg.parts.len(), 1);
    }

    #[test]
    fn zero_threshold_splits_every_change(levels in prop::collection::vec(1u32..6, 1..30), g in 0usize..30) {
        let areas: Vec<f64> = levels.iter().map(|l| *l as f64 * 100.0).collect();
        let ground = g % areas.len();
        let seg = segment_areas(&areas, 0.0, ground);
        prop_assert_eq!(seg.parts.len(), distinct_runs(&areas));
    }

    #[test]
    fn parts_tile_the_storeys(areas in prop::collection::vec(1.0f64..1e4, 1..40), t in 0.0f64..60.0, g in 0usize..40) {
        let ground = g % areas.len();
        let seg = segment_areas(&areas, t, ground);
        let mut next = 0;
        for p in &seg.parts {
            prop_assert_eq!(p.first, next);
            prop_assert!(p.last >= p.first);
            next = p.last + 1;
        }
        prop_assert_eq!(next, areas.len());
        prop_assert_eq!(seg.role_of(ground), Some(PartRole::Base));
        prop_assert_eq!(seg.parts.iter().filter(|p| p.role == PartRole::Base).count(), 1);
    }

    #[test]
    fn raising_threshold_never_adds_parts(areas in prop::collection::vec(1.0f64..1e4, 1..40), t in 0.0f64..50.0) {
        // terrace merging only looks at runs, so compare thresholds far apart
        let low = segment_areas(&areas, t, 0).parts.len();
        let high = segment_areas(&areas, 100.0, 0).parts.len();
        prop_assert!(high <= low);
    }

    #[test]
    fn outward_distance_is_rigid_invariant(
        line in prop::array::uniform4(-100.0f64..100.0),
        p in prop::array::uniform2(-200.0f64..200.0),
        angle in 0.0f64..std::f64::consts::TAU,
        shift in prop::array::uniform2(-1e4f64..1e4),
        left in any::<bool>(),
    ) {
        prop_assume!((line[0] - line[2]).hypot(line[1] - line[3]) > 1e-3);
        let side = if left { Side::Left } else { Side::Right };
        let a = OverhangLimit { label: "l".into(), line: [[line[0], line[1]], [line[2], line[3]]], side, limit_m: 5.0 };
        let m = RigidMotion { angle, shift: [shift[0], shift[1], 0.0] };
        let b = OverhangLimit { line: [m.apply2(a.line[0]), m.apply2(a.line[1])], ..a.clone() };
        prop_assert!((a.outward_distance(p) - b.outward_distance(m.apply2(p))).abs() <= 1e-6);
        prop_assert!(a.outward_distance(p) >= 0.0);
    }
}

fn overhang_building(angle_deg: f64) -> String {
    let mut b = IfcBuilder::new("rot_overhang.ifc", Schema::Ifc2x3, LengthUnit::Metre, SiteSpec::default());
    for i in 0..3 {
        let elev = i as f64 * 3.2;
        let s = b.rotated_storey(&format!("{i:02}"), elev, angle_deg);
        fx::rect_storey(&mut b, s, [0.0, 0.0], [30.0, 20.0], elev, 3.2);
        if i == 2 {
            b.boxed("IFCSLAB", s, "cantilever", [5.0, 20.0, elev], [20.0, 7.25, 1.1]);
        }
    }
    b.finish()
}

#[test]
fn overhang_is_rotation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let base_line = [[0.0, 20.0], [30.0, 20.0]];
    let mut reference = None;
    for angle in [0.0].into_iter().chain((0..8).map(|_| rng.random_range(0.0..360.0))) {
        let m = common::load("rot.ifc", overhang_building(angle));
        let motion = RigidMotion { angle: f64::to_radians(angle), shift: [0.0; 3] };
        let line = OverhangLimit { label: "street".into(), line: base_line.map(|p| motion.apply2(p)), side: Side::Left, limit_m: 5.0 };
        let res = overhang_distances(&m, &[2, 1], &[line], &[]).unwrap();
        let d: Vec<f64> = res[0].per_storey.iter().map(|s| s.distance_m).collect();
        assert!((d[0] - 7.25).abs() <= 1e-6, "angle {angle}: {d:?}");
        match &reference {
            None => reference = Some(d),
            Some(r) => {
                for (x, y) in d.iter().zip(r) {
                    assert!((x - y).abs() <= 1e-6, "angle {angle}");
                }
            }
        }
    }
}

#[test]
fn check_reports_are_deterministic() {
    let mut cfg = Config::default();
    cfg.regulation.overhang_limits = street_lines();
    for (name, src) in fx::all() {
        if name.starts_with("fed_") {
            continue;
        }
        let m = common::load_with(name, src, &cfg);
        let once = run_checks(&m, &cfg, ExecMode::Parallel);
        let twice = run_checks(&m, &cfg, ExecMode::Parallel);
        let seq = run_checks(&m, &cfg, ExecMode::Sequential);
        match (once, twice, seq) {
            (Ok(a), Ok(b), Ok(c)) => {
                let bytes = report_serialize(&a, ReportFormat::Json);
                assert_eq!(bytes, report_serialize(&b, ReportFormat::Json), "{name}");
                assert_eq!(bytes, report_serialize(&c, ReportFormat::Json), "{name}");
                assert_eq!(report_serialize(&a, ReportFormat::Csv), report_serialize(&b, ReportFormat::Csv), "{name}");
            }
            (Err(a), Err(b), Err(_)) => assert_eq!(a.to_string(), b.to_string(), "{name}"),
            _ => panic!("{name}: runs disagree on success"),
        }
    }
}

#[test]
fn federated_files_merge_storeys() {
    let files: Vec<(String, Vec<u8>)> =
        ["fed_arch.ifc", "fed_struct.ifc", "fed_facade.ifc"].into_iter().zip(fx::federated_bim([0.0; 3])).map(|(n, s)| (n.to_string(), s.into_bytes())).collect();
    let m = load_model(&files, &Config::default(), ExecMode::default()).unwrap();
    assert_eq!(m.storeys.len(), fx::federated::STOREYS.len());
    for (s, (name, elev)) in m.storeys.iter().zip(fx::federated::STOREYS) {
        assert_eq!(s.name, name);
        assert!((s.elevation - elev).abs() < 1e-9);
        assert_eq!(s.sources.len(), 3);
    }
    let r = run_checks(&m, &Config::default(), ExecMode::default()).unwrap();
    assert_eq!(r.models.len(), 3);
    assert!((r.overlaps[0].area_m2 - 20.2 * 20.2).abs() / 408.0 <= 0.01, "{}", r.overlaps[0].area_m2);
}

#[test]
fn misregistered_file_is_rejected() {
    let files: Vec<(String, Vec<u8>)> =
        ["a.ifc", "b.ifc", "c.ifc"].into_iter().zip(fx::federated_bim([0.5, 0.0, 0.0])).map(|(n, s)| (n.to_string(), s.into_bytes())).collect();
    let err = load_model(&files, &Config::default(), ExecMode::default()).unwrap_err();
    assert_eq!(err.code(), "frame_mismatch", "{err}");
}

#[test]
fn storey_defects_are_repaired() {
    let m = common::load("defects.ifc", fx::storey_defects());
    assert!(m.storey_index("06b").is_none());
    let s07 = &m.storeys[common::storey(&m, "07")];
    let column = m.elements.iter().find(|(_, e)| e.name == fx::repair::MISPLACED_COLUMN).map(|(k, _)| *k).unwrap();
    assert!(s07.element_ids.contains(&column));
    assert!(s07.repair_notes.iter().any(|n| n.element == column && n.action == RepairAction::Imported));
    let shaft = m.elements.iter().find(|(_, e)| e.name == fx::repair::SHAFT).map(|(k, _)| *k).unwrap();
    let s06 = &m.storeys[common::storey(&m, "06")];
    assert!(s06.element_ids.contains(&shaft));
    assert!(s06.repair_notes.iter().any(|n| n.element == shaft && n.action == RepairAction::Kept));

    let mut cfg = Config::default();
    cfg.repair_storeys = false;
    let raw = common::load_with("defects.ifc", fx::storey_defects(), &cfg);
    assert_eq!(raw.storeys.len(), fx::repair::STOREYS.len());
}

#[test]
fn lint_flags_authored_defects() {
    let r = report("lint.ifc", fx::lint_defects(), &Config::default());
    let codes: Vec<&str> = r.findings.iter().map(|f| f.code.as_str()).collect();
    for code in ["L1", "L3", "L5", "L6", "L8"] {
        assert!(codes.contains(&code), "{code} missing from {codes:?}");
    }
    let proxy = r.findings.iter().find(|f| f.code == "L3").unwrap();
    assert!((proxy.value.unwrap() - fx::lint::PROXY_RATIO).abs() <= 1e-9);
    let far = r.findings.iter().find(|f| f.code == "L1").unwrap();
    assert!(far.evidence.iter().any(|e| e.contains("fence")), "{:?}", far.evidence);
}

#[test]
fn invalid_parameters_are_rejected() {
    let mut cfg = Config::default();
    cfg.footprint.dbscan_eps = 0.0;
    let err = load_model(&[("s.ifc".into(), fx::uniform_tower().into_bytes())], &cfg, ExecMode::default()).unwrap_err();
    assert!(err.is_invalid_params(), "{err}");
    assert_eq!(err.code(), "invalid_params");
    assert!(OverhangLimit::parse("0,0,0,0,left,x,5").and_then(|l| l.validate()).is_err());
    assert!(OverhangLimit::parse("0,0,1,0,left,x,-1").and_then(|l| l.validate()).is_err());
}
