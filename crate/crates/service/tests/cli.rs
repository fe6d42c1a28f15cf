use geobim_fixtures::{self as fx, LengthUnit};
use geobim_service::cli::{EXIT_ERROR, EXIT_FAIL, EXIT_OK, EXIT_REVIEW, EXIT_USAGE};

mod common;
use common::{geobim, write_fixture};

fn code(out: &std::process::Output) -> i32 {
    out.status.code().unwrap()
}

fn run_in(dir: &std::path::Path, args: &[&str]) -> std::process::Output {
    let mut all: Vec<&str> = args.to_vec();
    let d = dir.to_str().unwrap();
    all.extend(["--out-dir", d]);
    geobim(&all)
}

#[test]
fn check_exit_codes_follow_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let stepped = write_fixture(dir.path(), "stepped.ifc", &fx::stepped_tower(LengthUnit::Metre));
    let peak = write_fixture(dir.path(), "peak.ifc", &fx::peak_height_tower(LengthUnit::Metre));
    let over = write_fixture(dir.path(), "overhang.ifc", &fx::overhang_tower());

    let out = run_in(dir.path(), &["check", "--model", stepped.to_str().unwrap()]);
    assert_eq!(code(&out), EXIT_OK, "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read(dir.path().join("stepped_report.json")).unwrap();
    assert_eq!(out.stdout, report);
    let csv = std::fs::read_to_string(dir.path().join("stepped_overlaps.csv")).unwrap();
    assert_eq!(csv.lines().count(), fx::stepped::FLOORS + 1);

    assert_eq!(code(&run_in(dir.path(), &["check", "--model", peak.to_str().unwrap()])), EXIT_REVIEW);

    let [x1, y1, x2, y2] = fx::overhang::NORTH_LINE;
    let line = format!("{x1},{y1},{x2},{y2},left,Hertekade side");
    let out = run_in(dir.path(), &["check", "--model", over.to_str().unwrap(), "--line", &line]);
    assert_eq!(code(&out), EXIT_FAIL, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("overhang"));
}

#[test]
fn check_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_fixture(dir.path(), "garage.ifc", &fx::parking_garage());
    let a = geobim(&["check", "--model", m.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    let b = geobim(&["check", "--model", m.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap(), "--sequential"]);
    assert_eq!(code(&a), code(&b));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["parking"]["car_count"], fx::parking::CARS);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&geobim(&[])), EXIT_USAGE);
    assert_eq!(code(&geobim(&["frobnicate"])), EXIT_USAGE);
    assert_eq!(code(&geobim(&["check"])), EXIT_USAGE);
    assert_eq!(code(&geobim(&["--help"])), EXIT_OK);

    let dir = tempfile::tempdir().unwrap();
    let m = write_fixture(dir.path(), "o.ifc", &fx::overhang_tower());
    let ms = m.to_str().unwrap();
    assert_eq!(code(&run_in(dir.path(), &["overhang", "--model", ms])), EXIT_USAGE);
    assert_eq!(code(&run_in(dir.path(), &["overhang", "--model", ms, "--line", "0,0,0,0,left,x,5"])), EXIT_USAGE);
    assert_eq!(code(&run_in(dir.path(), &["overlaps", "--model", ms, "--eps", "0"])), EXIT_USAGE);
}

#[test]
fn processing_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.ifc");
    let out = geobim(&["parse", "--model", missing.to_str().unwrap()]);
    assert_eq!(code(&out), EXIT_ERROR);

    let d = write_fixture(dir.path(), "dangling.ifc", &fx::dangling_reference());
    let out = geobim(&["parse", "--model", d.to_str().unwrap(), "--strict"]);
    assert_eq!(code(&out), EXIT_ERROR);
    assert!(String::from_utf8_lossy(&out.stderr).contains("dangling_reference"));

    let s = write_fixture(dir.path(), "stepped.ifc", &fx::stepped_tower(LengthUnit::Metre));
    let out = run_in(dir.path(), &["export-wkt", "--model", s.to_str().unwrap(), "--frame", "site-projected"]);
    assert_eq!(code(&out), EXIT_ERROR);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_georeference"));
}

#[test]
fn artifacts_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_fixture(dir.path(), "profile.ifc", &fx::overlap_profile_tower());
    let ms = m.to_str().unwrap();
    assert_eq!(code(&run_in(dir.path(), &["overlaps", "--model", ms])), EXIT_OK);
    let csv = std::fs::read_to_string(dir.path().join("profile_overlaps.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "storey_name,elevation_m,polygon_count,overlap_pct");
    assert_eq!(lines.len(), fx::profile::OVERLAPS.len() + 1);
    assert!(lines[2].ends_with(",94.1"), "{}", lines[2]);

    assert_eq!(code(&run_in(dir.path(), &["footprints", "--model", ms])), EXIT_OK);
    let fp: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("profile_footprints.json")).unwrap()).unwrap();
    assert_eq!(fp["storeys"].as_array().unwrap().len(), fx::profile::OVERLAPS.len());

    assert_eq!(code(&run_in(dir.path(), &["export-wkt", "--model", ms])), EXIT_OK);
    let wkt = std::fs::read_to_string(dir.path().join("profile_footprints.wkt.csv")).unwrap();
    assert_eq!(wkt.lines().count(), fx::profile::OVERLAPS.len() + 1);

    let out = geobim(&["storeys", "--model", ms]);
    assert_eq!(code(&out), EXIT_OK);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), fx::profile::OVERLAPS.len());
}

#[test]
fn overhang_subcommand_reports_both_streets() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_fixture(dir.path(), "o.ifc", &fx::overhang_tower());
    let [x1, y1, x2, y2] = fx::overhang::NORTH_LINE;
    let [a1, b1, a2, b2] = fx::overhang::SOUTH_LINE;
    let north = format!("{x1},{y1},{x2},{y2},left,Hertekade side");
    let south = format!("{a1},{b1},{a2},{b2},right,Boompjes side");
    let out = run_in(dir.path(), &["overhang", "--model", m.to_str().unwrap(), "--line", &north, "--line", &south]);
    assert_eq!(code(&out), EXIT_FAIL, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("o_overhang.json")).unwrap()).unwrap();
    assert_eq!(v["lines"][0]["max_m"], fx::overhang::NORTH_PROTRUSION);
    assert_eq!(v["lines"][1]["max_m"], fx::overhang::SOUTH_PROTRUSION);
}

#[test]
fn config_file_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_fixture(dir.path(), "peak.ifc", &fx::peak_height_tower(LengthUnit::Metre));
    let cfg = dir.path().join("geobim.toml");
    std::fs::write(&cfg, "[regulation]\nmax_height_m = 110.0\n").unwrap();
    let out = run_in(dir.path(), &["check", "--model", m.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), EXIT_OK, "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::write(&cfg, "[regulation]\nmax_height_m = 90.0\n").unwrap();
    let out = run_in(dir.path(), &["check", "--model", m.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), EXIT_FAIL);
    std::fs::write(&cfg, "[regulation\n").unwrap();
    let out = run_in(dir.path(), &["check", "--model", m.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), EXIT_USAGE);
}
