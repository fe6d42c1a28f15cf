//! IFC-SPF reading: instance graph, units, spatial tree and georeference.

mod georef;
mod parser;
pub mod schema;
mod spatial;
mod units;
mod value;

use thiserror::Error;

pub use georef::{extract_georeference, GeoRef, LoGeoRef};
pub use parser::{parse_step, IfcGraph};
pub use spatial::{extract_spatial_structure, property_index, PropertyIndex, SpatialTree, StoreyNode};
pub use units::resolve_units;
pub use value::{EntityInstance, StepValue};

#[derive(Debug, Error)]
pub enum StepError {
    #[error("missing ISO-10303-21 banner")]
    MissingHeader,
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("dangling reference to #{0}")]
    DanglingReference(u64),
    #[error("no length unit in the unit assignment")]
    NoLengthUnit,
    #[error("model has no IfcBuilding")]
    NoBuilding,
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Parses, resolves units and reads the georeference.
pub fn load_ifc(bytes: &[u8], name: &str, strict: bool) -> Result<IfcGraph, StepError> {
    let mut graph = parse_step(bytes, strict)?.with_resolved_units()?.with_georeference();
    graph.name = name.to_string();
    Ok(graph)
}

pub fn load_ifc_file(path: &std::path::Path, strict: bool) -> Result<IfcGraph, StepError> {
    let bytes = std::fs::read(path)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    load_ifc(&bytes, &name, strict)
}
