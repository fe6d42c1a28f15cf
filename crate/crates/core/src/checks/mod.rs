//! Dimension rules, part segmentation, parking semantics and model lint.

mod lint;
mod params;
mod parking;
mod report;
mod rules;
mod segment;

use thiserror::Error;

use crate::footprint::FootprintError;
use crate::storey::StoreyError;

pub use lint::lint_model;
pub use params::{LintParams, OverhangLimit, RegulationParams, Side, DEFAULT_STREET_LIMITS};
pub use parking::count_parking_spaces;
pub use report::{round_mm, round_pct, CheckReport, LintFinding, Measurement, OverlapRow, ParamsEcho, ParkingCount, RuleEntry, Verdict};
pub use rules::{
    check_base_height, check_max_height, check_overhang, check_top_overlap, height_verdict, max_height_entry, measure_ceiling_ensemble,
    overhang_distances, OverhangResult, StoreyDistance, BASE_HEIGHT, CEILING_WINDOW, MAX_HEIGHT, OVERHANG, TOP_OVERLAP,
};
pub use segment::{area_change_pct, segment_areas, segment_building_parts, BuildingPart, PartRole, PartSegmentation};

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("storey {0} has no geometry to measure")]
    NoVertices(String),
    #[error(transparent)]
    Footprint(#[from] FootprintError),
    #[error(transparent)]
    Storey(#[from] StoreyError),
}
