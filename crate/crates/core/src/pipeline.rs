//! End-to-end runs shared by the command line and the HTTP service.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checks::{
    check_base_height, check_max_height, check_overhang, check_top_overlap, count_parking_spaces, lint_model, overhang_distances, segment_building_parts,
    CheckError, CheckReport, LintParams, OverhangLimit, OverhangResult, OverlapRow, ParamsEcho, RegulationParams,
};
use crate::exec::ExecMode;
use crate::export::{to_wkt, with_storey_tops, ExportError, Frame, WktRecord};
use crate::footprint::{overlap_table, FootprintError, FootprintParams, FootprintSet};
use crate::geometry::TessellationOptions;
use crate::step::{load_ifc, StepError};
use crate::storey::{federate, repair_storeys, FederatedModel, FederationOptions, RepairParams, StoreyError};

/// Every tunable of a run; loads from one configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    /// Storey selector for overlap reference: a name, an index, `ground`, `lowest` or `highest`.
    pub reference_storey: String,
    /// Overrides the storey nearest elevation 0 as ground.
    pub ground_storey: Option<String>,
    pub merge_tolerance: f64,
    pub strict: bool,
    pub repair_storeys: bool,
    pub circle_segments: usize,
    pub footprint: FootprintParams,
    pub regulation: RegulationParams,
    pub repair: RepairParams,
    pub lint: LintParams,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            reference_storey: "ground".into(),
            ground_storey: None,
            merge_tolerance: 0.05,
            strict: false,
            repair_storeys: true,
            circle_segments: TessellationOptions::default().circle_segments,
            footprint: FootprintParams::default(),
            regulation: RegulationParams::default(),
            repair: RepairParams::default(),
            lint: LintParams::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Storey(#[from] StoreyError),
    #[error(transparent)]
    Footprint(#[from] FootprintError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("{0}")]
    Usage(String),
}

impl PipelineError {
    /// Stable machine-readable code, one per module error.
    pub fn code(&self) -> &'static str {
        fn step(e: &StepError) -> &'static str {
            match e {
                StepError::MissingHeader => "missing_header",
                StepError::Syntax { .. } => "syntax_error",
                StepError::DanglingReference(_) => "dangling_reference",
                StepError::NoLengthUnit => "no_length_unit",
                StepError::NoBuilding => "no_building",
                StepError::Io(_) => "io_error",
            }
        }
        fn footprint(e: &FootprintError) -> &'static str {
            match e {
                FootprintError::InvalidParams(_) => "invalid_params",
                FootprintError::DegenerateInput { .. } => "degenerate_input",
                FootprintError::EmptyCut(_) => "empty_cut",
                FootprintError::ZeroReference => "zero_reference",
            }
        }
        fn storey(e: &StoreyError) -> &'static str {
            match e {
                StoreyError::Step(s) => step(s),
                StoreyError::FrameMismatch { .. } => "frame_mismatch",
                StoreyError::NoStoreys => "no_storeys",
                StoreyError::EmptyModel => "empty_model",
                StoreyError::UnknownStorey(_) => "unknown_storey",
            }
        }
        match self {
            PipelineError::Step(e) => step(e),
            PipelineError::Storey(e) => storey(e),
            PipelineError::Footprint(e) => footprint(e),
            PipelineError::Check(CheckError::InvalidParams(_)) => "invalid_params",
            PipelineError::Check(CheckError::NoVertices(_)) => "no_vertices",
            PipelineError::Check(CheckError::Footprint(e)) => footprint(e),
            PipelineError::Check(CheckError::Storey(e)) => storey(e),
            PipelineError::Export(ExportError::NoGeoreference) => "no_georeference",
            PipelineError::Export(ExportError::Json(_)) => "invalid_json",
            PipelineError::Usage(_) => "invalid_params",
        }
    }

    /// True for errors caused by request parameters rather than the model.
    pub fn is_invalid_params(&self) -> bool {
        matches!(self.code(), "invalid_params" | "unknown_storey")
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.footprint.validate()?;
        self.regulation.validate()?;
        if !(self.merge_tolerance >= 0.0 && self.merge_tolerance.is_finite()) {
            return Err(PipelineError::Usage("merge_tolerance must be >= 0".into()));
        }
        if self.circle_segments < 3 {
            return Err(PipelineError::Usage("circle_segments must be >= 3".into()));
        }
        Ok(())
    }

    fn federation(&self, mode: ExecMode) -> FederationOptions {
        FederationOptions {
            merge_tolerance: self.merge_tolerance,
            ground_storey: self.ground_storey.clone(),
            tessellation: TessellationOptions { circle_segments: self.circle_segments },
            mode,
        }
    }
}

/// Parses, federates and (optionally) repairs the given files.
pub fn load_model(files: &[(String, Vec<u8>)], cfg: &Config, mode: ExecMode) -> Result<FederatedModel, PipelineError> {
    cfg.validate()?;
    if files.is_empty() {
        return Err(PipelineError::Usage("at least one model file is required".into()));
    }
    let graphs = files.iter().map(|(name, bytes)| load_ifc(bytes, name, cfg.strict)).collect::<Result<Vec<_>, _>>()?;
    let model = federate(graphs, &cfg.federation(mode))?;
    Ok(if cfg.repair_storeys { repair_storeys(model, &cfg.repair) } else { model })
}

/// Footprints of all storeys against the configured reference storey.
pub fn footprints(model: &FederatedModel, cfg: &Config, mode: ExecMode) -> Result<FootprintSet, PipelineError> {
    let reference = model.find_storey(&cfg.reference_storey)?;
    Ok(overlap_table(model, &cfg.footprint, reference, mode)?)
}

/// Storeys measured for overhang by default: the top parts, or every
/// storey above ground for a single-part building.
pub fn default_overhang_targets(model: &FederatedModel, set: &FootprintSet, cfg: &Config) -> Vec<usize> {
    let seg = segment_building_parts(set, cfg.regulation.part_split_threshold_pct, model.ground_storey);
    let tops = seg.top_storeys();
    let targets = if tops.is_empty() { (model.ground_storey + 1..model.storeys.len()).collect() } else { tops };
    targets.into_iter().filter(|&i| model.storey_meshes(i).next().is_some()).collect()
}

pub fn overhang(model: &FederatedModel, targets: &[usize], lines: &[OverhangLimit], cfg: &Config) -> Result<Vec<OverhangResult>, PipelineError> {
    if lines.is_empty() {
        return Err(PipelineError::Usage("at least one overhang line is required".into()));
    }
    Ok(overhang_distances(model, targets, lines, &cfg.regulation.overhang_exclude_classes)?)
}

/// Full rule suite over a loaded model.
pub fn run_checks(model: &FederatedModel, cfg: &Config, mode: ExecMode) -> Result<CheckReport, PipelineError> {
    cfg.validate()?;
    let set = footprints(model, cfg, mode)?;
    check_with_footprints(model, &set, cfg)
}

/// Rule suite reusing footprints already computed with `cfg.footprint`.
pub fn check_with_footprints(model: &FederatedModel, set: &FootprintSet, cfg: &Config) -> Result<CheckReport, PipelineError> {
    let reg = &cfg.regulation;
    let seg = segment_building_parts(set, reg.part_split_threshold_pct, model.ground_storey);

    let mut entries = vec![check_max_height(model, reg)?, check_base_height(model, &seg, set, reg), check_top_overlap(set, &seg, reg)];
    let overhangs = if reg.overhang_limits.is_empty() {
        vec![]
    } else {
        overhang_distances(model, &default_overhang_targets(model, set, cfg), &reg.overhang_limits, &reg.overhang_exclude_classes)?
    };
    entries.push(check_overhang(&overhangs, reg));

    let parking = count_parking_spaces(&model.graphs, &reg.bike_keywords);
    let findings = lint_model(model, &parking, &cfg.lint);
    let overlaps = set
        .footprints
        .iter()
        .zip(&set.overlaps)
        .map(|(f, pct)| OverlapRow {
            storey: f.name.clone(),
            elevation_m: crate::checks::round_mm(f.elevation),
            area_m2: crate::checks::round_mm(f.area),
            polygon_count: f.polygons.len(),
            overlap_pct: crate::checks::round_pct(*pct),
            part: seg.role_of(f.storey),
        })
        .collect();
    let mut seg = seg;
    for p in &mut seg.parts {
        p.area_m2 = crate::checks::round_mm(p.area_m2);
    }
    Ok(CheckReport {
        models: model.graphs.iter().map(|g| g.name.clone()).collect(),
        params: ParamsEcho {
            regulation: reg.clone(),
            footprint: set.params,
            repair: model.repair,
            lint: cfg.lint.clone(),
            reference_storey: model.storeys[set.reference_storey].name.clone(),
            ground_storey: model.storeys[model.ground_storey].name.clone(),
        },
        segmentation: seg,
        overlaps,
        entries,
        parking,
        findings,
    })
}

/// WKT records with storey elevations for LoD1-style extrusion.
pub fn export_wkt(model: &FederatedModel, set: &FootprintSet, frame: Frame) -> Result<Vec<WktRecord>, PipelineError> {
    let georef = model.graphs.first().map(|g| &g.georef);
    Ok(with_storey_tops(to_wkt(&set.footprints, georef, frame)?, model, frame))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checks::{Verdict, BASE_HEIGHT, MAX_HEIGHT, OVERHANG, TOP_OVERLAP};
    use geobim_fixtures as fx;

    fn files(name: &str, src: String) -> Vec<(String, Vec<u8>)> {
        vec![(name.to_string(), src.into_bytes())]
    }

    #[test]
    fn stepped_tower_passes() {
        let cfg = Config::default();
        let m = load_model(&files("stepped.ifc", fx::stepped_tower(fx::LengthUnit::Metre)), &cfg, ExecMode::default()).unwrap();
        let r = run_checks(&m, &cfg, ExecMode::default()).unwrap();
        assert_eq!(r.overall(), Verdict::Pass, "{:#?}", r.entries);
        assert_eq!(r.segmentation.parts.len(), 2);
        let top = r.entry(TOP_OVERLAP).unwrap();
        assert!((top.value("max_overlap").unwrap() - 25.0).abs() <= 1.0);
        assert_eq!(r.entry(BASE_HEIGHT).unwrap().value("elevation_difference"), Some(7.0));
        assert_eq!(r.overlaps.len(), 10);
    }

    #[test]
    fn peak_needs_review() {
        let cfg = Config::default();
        let m = load_model(&files("peak.ifc", fx::peak_height_tower(fx::LengthUnit::Metre)), &cfg, ExecMode::default()).unwrap();
        let r = run_checks(&m, &cfg, ExecMode::default()).unwrap();
        let e = r.entry(MAX_HEIGHT).unwrap();
        assert_eq!(e.verdict, Verdict::NeedsReview);
        assert_eq!(e.value("height"), Some(fx::peak::TOP_Z));
        assert!(e.evidence[0].contains("installation"));
    }

    #[test]
    fn overhang_fixture_fails_both_streets() {
        let mut cfg = Config::default();
        let [x1, y1, x2, y2] = fx::overhang::NORTH_LINE;
        let [a1, b1, a2, b2] = fx::overhang::SOUTH_LINE;
        cfg.regulation.overhang_limits = vec![
            OverhangLimit::parse(&format!("{x1},{y1},{x2},{y2},left,Hertekade side")).unwrap(),
            OverhangLimit::parse(&format!("{a1},{b1},{a2},{b2},right,Boompjes side")).unwrap(),
        ];
        let m = load_model(&files("overhang.ifc", fx::overhang_tower()), &cfg, ExecMode::default()).unwrap();
        let r = run_checks(&m, &cfg, ExecMode::default()).unwrap();
        let e = r.entry(OVERHANG).unwrap();
        assert_eq!(e.verdict, Verdict::Fail);
        assert_eq!(e.value("Hertekade side: overhang"), Some(fx::overhang::NORTH_PROTRUSION));
        assert_eq!(e.value("Boompjes side: overhang"), Some(fx::overhang::SOUTH_PROTRUSION));
    }

    #[test]
    fn ceiling_ensemble_measured() {
        let cfg = Config::default();
        let m = load_model(&files("ceiling.ifc", fx::ceiling_ensemble()), &cfg, ExecMode::default()).unwrap();
        let r = run_checks(&m, &cfg, ExecMode::default()).unwrap();
        let e = r.entry(BASE_HEIGHT).unwrap();
        assert!(e.evidence[0].ends_with(fx::ceiling::STOREY));
        let d = e.value("ceiling_ensemble").unwrap();
        assert!((d - 0.59).abs() <= 0.01, "{d}");
    }

    #[test]
    fn error_codes() {
        let cfg = Config { reference_storey: "nope".into(), ..Config::default() };
        let m = load_model(&files("u.ifc", fx::uniform_tower()), &cfg, ExecMode::default()).unwrap();
        let e = run_checks(&m, &cfg, ExecMode::default()).unwrap_err();
        assert_eq!(e.code(), "unknown_storey");
        let e = load_model(&files("d.ifc", fx::dangling_reference()), &Config { strict: true, ..Config::default() }, ExecMode::default()).unwrap_err();
        assert_eq!(e.code(), "dangling_reference");
    }
}
