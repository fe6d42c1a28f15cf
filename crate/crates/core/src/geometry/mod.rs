//! Placement resolution, tessellation, plane sections and bounding boxes.

mod mesh;
mod slice;
mod tessellate;
mod transform;

use std::collections::BTreeMap;

use thiserror::Error;

pub use mesh::{Aabb, Mesh, MIN_TRIANGLE_AREA};
pub use slice::{merge_segments, slice_mesh, Segment2D, MIN_SEGMENT, PLANE_SNAP, WELD};
pub use tessellate::{body_representations, equal_area_radius, tessellate, TessellationOptions};
pub use transform::{axis2_placement, local_placement, resolve_placement, transformation_operator, Transform};

use crate::exec::ExecMode;
use crate::step::{schema, IfcGraph};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeometryError {
    #[error("placement chain revisits #{0}")]
    CyclicPlacement(u64),
    #[error("unsupported representation: {0}")]
    Unsupported(String),
    #[error("element #{0} has no body representation")]
    NoRepresentation(u64),
    #[error("unknown element #{0}")]
    UnknownElement(u64),
    #[error("model has no geometry")]
    EmptyModel,
}

/// Axis-aligned box over all vertices.
pub fn model_bbox<'a>(meshes: impl IntoIterator<Item = &'a Mesh>) -> Result<Aabb, GeometryError> {
    let b = meshes.into_iter().fold(Aabb::empty(), |acc, m| acc.union(&m.bbox()));
    if b.is_empty() {
        Err(GeometryError::EmptyModel)
    } else {
        Ok(b)
    }
}

/// Result of tessellating every element of a graph.
#[derive(Debug, Clone, Default)]
pub struct GraphGeometry {
    pub meshes: BTreeMap<u64, Mesh>,
    /// Elements with a representation that could not be tessellated.
    pub unsupported: BTreeMap<u64, GeometryError>,
}

/// Tessellates every element that carries a representation.
pub fn tessellate_graph(graph: &IfcGraph, opts: &TessellationOptions, mode: ExecMode) -> GraphGeometry {
    let ids: Vec<u64> = graph
        .instances()
        .filter(|i| schema::is_element_class(&i.class))
        .filter(|i| graph.attr(i, "Representation").is_some())
        .map(|i| i.id)
        .collect();
    let results = mode.map(&ids, |id| (*id, tessellate(graph, *id, opts)));
    let mut out = GraphGeometry::default();
    for (id, r) in results {
        match r {
            Ok(m) => {
                out.meshes.insert(id, m);
            }
            Err(e) => {
                out.unsupported.insert(id, e);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::step::load_ifc;
    use geobim_fixtures as fx;

    #[test]
    fn rotated_storey_wall_bbox() {
        let g = load_ifc(fx::rotated_storey().as_bytes(), "r", true).unwrap();
        let geo = tessellate_graph(&g, &Default::default(), ExecMode::Sequential);
        assert_eq!(geo.meshes.len(), 1);
        let b = model_bbox(geo.meshes.values()).unwrap();
        let (lo, hi) = fx::rotated::WALL_BBOX;
        for i in 0..3 {
            assert!((b.min[i] - lo[i]).abs() < 1e-9 && (b.max[i] - hi[i]).abs() < 1e-9, "{b:?}");
        }
    }

    #[test]
    fn empty_model_bbox() {
        assert_eq!(model_bbox(std::iter::empty()), Err(GeometryError::EmptyModel));
    }

    #[test]
    fn peak_fixture_top() {
        let g = load_ifc(fx::peak_height_tower(fx::LengthUnit::Metre).as_bytes(), "p", true).unwrap();
        let geo = tessellate_graph(&g, &Default::default(), ExecMode::Parallel);
        let b = model_bbox(geo.meshes.values()).unwrap();
        assert!((b.max[2] - fx::peak::TOP_Z).abs() < 1e-9);
        assert!(geo.unsupported.is_empty());
    }
}
