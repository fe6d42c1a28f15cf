use std::collections::BTreeSet;

use nalgebra::{Matrix4, Vector3};

use super::GeometryError;
use crate::step::{IfcGraph, StepValue};

/// Homogeneous 4×4 transform, translation in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform(pub Matrix4<f64>);

impl Default for Transform {
    fn default() -> Self {
        Transform::identity()
    }
}

impl Transform {
    pub fn identity() -> Self {
        Transform(Matrix4::identity())
    }

    pub fn translation(x: f64, y: f64, z: f64) -> Self {
        Transform(Matrix4::new_translation(&Vector3::new(x, y, z)))
    }

    pub fn rotation_z(angle: f64) -> Self {
        Transform(Matrix4::from_axis_angle(&Vector3::z_axis(), angle))
    }

    /// Frame from an origin, a z axis and an approximate x axis. The x axis is
    /// projected onto the plane normal to z.
    pub fn from_axes(origin: Vector3<f64>, z: Vector3<f64>, x: Vector3<f64>) -> Self {
        let z = z.try_normalize(1e-12).unwrap_or_else(Vector3::z);
        let mut x = x - z * x.dot(&z);
        if x.norm() < 1e-12 {
            // ref direction parallel to axis: pick any perpendicular
            x = if z.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
            x -= z * x.dot(&z);
        }
        let x = x.normalize();
        let y = z.cross(&x);
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 1>(0, 0).copy_from(&x);
        m.fixed_view_mut::<3, 1>(0, 1).copy_from(&y);
        m.fixed_view_mut::<3, 1>(0, 2).copy_from(&z);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&origin);
        Transform(m)
    }

    /// `self ∘ child`: child coordinates expressed in the parent frame.
    pub fn then(&self, child: &Transform) -> Transform {
        Transform(self.0 * child.0)
    }

    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let v = self.0 * nalgebra::Vector4::new(p[0], p[1], p[2], 1.0);
        [v.x, v.y, v.z]
    }

    pub fn apply_vector(&self, d: [f64; 3]) -> [f64; 3] {
        let v = self.0 * nalgebra::Vector4::new(d[0], d[1], d[2], 0.0);
        [v.x, v.y, v.z]
    }

    pub fn translation_part(&self) -> [f64; 3] {
        [self.0[(0, 3)], self.0[(1, 3)], self.0[(2, 3)]]
    }

    /// ‖RᵀR − I‖∞ of the upper-left 3×3 block.
    pub fn orthonormality_error(&self) -> f64 {
        let r = self.0.fixed_view::<3, 3>(0, 0);
        (r.transpose() * r - nalgebra::Matrix3::identity()).abs().max()
    }

    pub fn try_inverse(&self) -> Option<Transform> {
        self.0.try_inverse().map(Transform)
    }
}

pub(crate) fn vec_of(graph: &IfcGraph, id: Option<u64>, attr: &str) -> Option<Vec<f64>> {
    let inst = graph.get(id?)?;
    graph.attr(inst, attr)?.as_list()?.iter().map(StepValue::as_f64).collect()
}

/// Cartesian point in meters; 2D points get z = 0.
pub(crate) fn point(graph: &IfcGraph, id: Option<u64>) -> Option<Vector3<f64>> {
    let c = vec_of(graph, id, "Coordinates")?;
    let s = graph.length_to_meters;
    Some(Vector3::new(
        c.first().copied().unwrap_or(0.0) * s,
        c.get(1).copied().unwrap_or(0.0) * s,
        c.get(2).copied().unwrap_or(0.0) * s,
    ))
}

pub(crate) fn direction(graph: &IfcGraph, id: Option<u64>) -> Option<Vector3<f64>> {
    let c = vec_of(graph, id, "DirectionRatios")?;
    let v = Vector3::new(c.first().copied().unwrap_or(0.0), c.get(1).copied().unwrap_or(0.0), c.get(2).copied().unwrap_or(0.0));
    v.try_normalize(1e-12)
}

fn ref_attr(graph: &IfcGraph, id: u64, name: &str) -> Option<u64> {
    graph.attr(graph.get(id)?, name)?.as_ref_id()
}

/// IfcAxis2Placement3D / 2D as a transform. Missing axes default to +Z / +X.
pub fn axis2_placement(graph: &IfcGraph, id: u64) -> Transform {
    let Some(inst) = graph.get(id) else { return Transform::identity() };
    let origin = point(graph, ref_attr(graph, id, "Location")).unwrap_or_else(Vector3::zeros);
    let x = direction(graph, ref_attr(graph, id, "RefDirection")).unwrap_or_else(Vector3::x);
    let z = if inst.is("IFCAXIS2PLACEMENT3D") {
        direction(graph, ref_attr(graph, id, "Axis")).unwrap_or_else(Vector3::z)
    } else {
        Vector3::z()
    };
    Transform::from_axes(origin, z, x)
}

/// IfcCartesianTransformationOperator3D (uniform or non-uniform scale).
pub fn transformation_operator(graph: &IfcGraph, id: u64) -> Transform {
    let Some(inst) = graph.get(id) else { return Transform::identity() };
    let origin = point(graph, ref_attr(graph, id, "LocalOrigin")).unwrap_or_else(Vector3::zeros);
    let x = direction(graph, ref_attr(graph, id, "Axis1")).unwrap_or_else(Vector3::x);
    let z = direction(graph, ref_attr(graph, id, "Axis3")).unwrap_or_else(Vector3::z);
    let mut t = Transform::from_axes(origin, z, x);
    let scale = graph.attr(inst, "Scale").and_then(StepValue::as_f64).unwrap_or(1.0);
    let s2 = graph.attr(inst, "Scale2").and_then(StepValue::as_f64).unwrap_or(scale);
    let s3 = graph.attr(inst, "Scale3").and_then(StepValue::as_f64).unwrap_or(scale);
    t.0 *= Matrix4::new_nonuniform_scaling(&Vector3::new(scale, s2, s3));
    t
}

/// Object placement ids of every IfcSite; placement chains stop there.
pub(crate) fn site_placements(graph: &IfcGraph) -> BTreeSet<u64> {
    graph
        .of_class("IFCSITE")
        .filter_map(|s| graph.attr(s, "ObjectPlacement")?.as_ref_id())
        .collect()
}

/// Composes an IfcLocalPlacement chain up to, but not including, the site placement.
pub fn local_placement(graph: &IfcGraph, placement: u64, stop: &BTreeSet<u64>) -> Result<Transform, GeometryError> {
    let mut chain = Vec::new();
    let mut seen = BTreeSet::new();
    let mut current = Some(placement);
    while let Some(id) = current {
        if stop.contains(&id) {
            break;
        }
        if !seen.insert(id) {
            return Err(GeometryError::CyclicPlacement(id));
        }
        let Some(inst) = graph.get(id) else { break };
        if !inst.is("IFCLOCALPLACEMENT") {
            // grid or linear placements are not resolved
            break;
        }
        let rel = graph.attr(inst, "RelativePlacement").and_then(StepValue::as_ref_id);
        chain.push(rel.map(|r| axis2_placement(graph, r)).unwrap_or_default());
        current = graph.attr(inst, "PlacementRelTo").and_then(StepValue::as_ref_id);
    }
    Ok(chain.iter().rev().fold(Transform::identity(), |acc, t| acc.then(t)))
}

/// Element placement in the model frame (meters).
pub fn resolve_placement(graph: &IfcGraph, element_id: u64) -> Result<Transform, GeometryError> {
    let inst = graph.get(element_id).ok_or(GeometryError::UnknownElement(element_id))?;
    match graph.attr(inst, "ObjectPlacement").and_then(StepValue::as_ref_id) {
        Some(p) => local_placement(graph, p, &site_placements(graph)),
        None => Ok(Transform::identity()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::step::{load_ifc, parse_step};

    fn graph(data: &str) -> IfcGraph {
        let src = format!("ISO-10303-21;HEADER;FILE_SCHEMA(('IFC4'));ENDSEC;DATA;{data}ENDSEC;END-ISO-10303-21;");
        parse_step(src.as_bytes(), true).unwrap()
    }

    #[test]
    fn two_translations_compose() {
        let g = graph(
            "#1=IFCCARTESIANPOINT((0.,0.,3.));#2=IFCAXIS2PLACEMENT3D(#1,$,$);#3=IFCLOCALPLACEMENT($,#2);\
             #4=IFCCARTESIANPOINT((1.,0.,0.));#5=IFCAXIS2PLACEMENT3D(#4,$,$);#6=IFCLOCALPLACEMENT(#3,#5);\
             #7=IFCWALL('w',$,$,$,$,#6,$,$);",
        );
        let t = resolve_placement(&g, 7).unwrap();
        assert_eq!(t.translation_part(), [1.0, 0.0, 3.0]);
        assert!(t.orthonormality_error() < 1e-12);
    }

    #[test]
    fn default_axes_are_identity() {
        let g = graph("#1=IFCCARTESIANPOINT((0.,0.,0.));#2=IFCAXIS2PLACEMENT3D(#1,$,$);");
        assert_eq!(axis2_placement(&g, 2), Transform::identity());
    }

    #[test]
    fn cycle_is_detected() {
        let g = graph("#1=IFCCARTESIANPOINT((0.,0.,0.));#2=IFCAXIS2PLACEMENT3D(#1,$,$);#3=IFCLOCALPLACEMENT(#4,#2);#4=IFCLOCALPLACEMENT(#3,#2);");
        assert!(matches!(local_placement(&g, 3, &BTreeSet::new()), Err(GeometryError::CyclicPlacement(_))));
    }

    #[test]
    fn parallel_ref_direction_still_orthonormal() {
        let t = Transform::from_axes(Vector3::zeros(), Vector3::x(), Vector3::x());
        assert!(t.orthonormality_error() < 1e-12);
    }

    #[test]
    fn placement_is_scaled_to_meters() {
        let src = geobim_fixtures::stepped_tower(geobim_fixtures::LengthUnit::Millimetre);
        let g = load_ifc(src.as_bytes(), "mm", true).unwrap();
        let storey = g.ids_of("IFCBUILDINGSTOREY")[1];
        let t = resolve_placement(&g, storey).unwrap();
        assert!((t.translation_part()[2] - 3.5).abs() < 1e-9);
    }
}
