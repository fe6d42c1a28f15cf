use std::f64::consts::PI;

use nalgebra::Vector3;

use super::mesh::Mesh;
use super::transform::{axis2_placement, direction, point, resolve_placement, transformation_operator, Transform};
use super::GeometryError;
use crate::step::{IfcGraph, StepValue};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TessellationOptions {
    /// Segments per full circle for curved profiles.
    pub circle_segments: usize,
}

impl Default for TessellationOptions {
    fn default() -> Self {
        TessellationOptions { circle_segments: 32 }
    }
}

/// Representation identifiers that never carry body geometry.
const NON_BODY: &[&str] = &["Axis", "FootPrint", "Box", "Annotation", "Profile", "CoG", "Reference", "Lighting"];

const MAX_DEPTH: usize = 16;

struct Ctx<'a> {
    graph: &'a IfcGraph,
    opts: TessellationOptions,
    mesh: Mesh,
    unsupported: Vec<String>,
}

fn ref_attr(graph: &IfcGraph, id: u64, name: &str) -> Option<u64> {
    graph.attr(graph.get(id)?, name)?.as_ref_id()
}

fn ref_list(graph: &IfcGraph, id: u64, name: &str) -> Vec<u64> {
    let mut out = Vec::new();
    if let Some(v) = graph.get(id).and_then(|i| graph.attr(i, name)) {
        v.refs(&mut out);
    }
    out
}

fn real_attr(graph: &IfcGraph, id: u64, name: &str) -> Option<f64> {
    graph.attr(graph.get(id)?, name)?.as_f64()
}

/// Shape representations used as body geometry for `element_id`.
pub fn body_representations(graph: &IfcGraph, element_id: u64) -> Vec<u64> {
    let Some(shape) = ref_attr(graph, element_id, "Representation") else { return Vec::new() };
    let reps = ref_list(graph, shape, "Representations");
    let ident = |r: &u64| graph.get(*r).and_then(|i| graph.attr(i, "RepresentationIdentifier")).and_then(StepValue::as_str).map(str::to_string);
    let body: Vec<u64> = reps.iter().copied().filter(|r| ident(r).as_deref() == Some("Body")).collect();
    if !body.is_empty() {
        return body;
    }
    reps.into_iter().filter(|r| !ident(r).is_some_and(|i| NON_BODY.contains(&i.as_str()))).collect()
}

/// Element mesh in the model frame (meters).
pub fn tessellate(graph: &IfcGraph, element_id: u64, opts: &TessellationOptions) -> Result<Mesh, GeometryError> {
    let placement = resolve_placement(graph, element_id)?;
    let reps = body_representations(graph, element_id);
    if reps.is_empty() {
        return Err(GeometryError::NoRepresentation(element_id));
    }
    let mut ctx = Ctx { graph, opts: *opts, mesh: Mesh::new(element_id), unsupported: Vec::new() };
    for rep in reps {
        ctx.representation(rep, &placement, 0);
    }
    let mut mesh = ctx.mesh;
    mesh.cleanup();
    if mesh.is_empty() {
        let kind = ctx.unsupported.first().cloned().unwrap_or_else(|| "empty representation".to_string());
        return Err(GeometryError::Unsupported(kind));
    }
    mesh.approximate |= !ctx.unsupported.is_empty();
    Ok(mesh)
}

impl Ctx<'_> {
    fn representation(&mut self, rep: u64, t: &Transform, depth: usize) {
        for item in ref_list(self.graph, rep, "Items") {
            self.item(item, t, depth);
        }
    }

    fn item(&mut self, id: u64, t: &Transform, depth: usize) {
        if depth > MAX_DEPTH {
            self.unsupported.push("nesting too deep".into());
            return;
        }
        let Some(inst) = self.graph.get(id) else { return };
        match inst.class.as_str() {
            "IFCEXTRUDEDAREASOLID" => self.extrusion(id, t),
            "IFCFACETEDBREP" | "IFCFACETEDBREPWITHVOIDS" => {
                if let Some(shell) = ref_attr(self.graph, id, "Outer") {
                    self.faces(ref_list(self.graph, shell, "CfsFaces"), t);
                }
            }
            "IFCSHELLBASEDSURFACEMODEL" => {
                for shell in ref_list(self.graph, id, "SbsmBoundary") {
                    self.faces(ref_list(self.graph, shell, "CfsFaces"), t);
                }
            }
            "IFCFACEBASEDSURFACEMODEL" => {
                for set in ref_list(self.graph, id, "FbsmFaces") {
                    self.faces(ref_list(self.graph, set, "CfsFaces"), t);
                }
            }
            "IFCCLOSEDSHELL" | "IFCOPENSHELL" | "IFCCONNECTEDFACESET" => self.faces(ref_list(self.graph, id, "CfsFaces"), t),
            "IFCTRIANGULATEDFACESET" => self.triangulated_face_set(id, t),
            "IFCPOLYGONALFACESET" => self.polygonal_face_set(id, t),
            "IFCMAPPEDITEM" => {
                let Some(source) = ref_attr(self.graph, id, "MappingSource") else { return };
                let origin = ref_attr(self.graph, source, "MappingOrigin").map(|o| axis2_placement(self.graph, o)).unwrap_or_default();
                let target = ref_attr(self.graph, id, "MappingTarget").map(|o| transformation_operator(self.graph, o)).unwrap_or_default();
                let mapped = t.then(&target).then(&origin);
                if let Some(rep) = ref_attr(self.graph, source, "MappedRepresentation") {
                    self.representation(rep, &mapped, depth + 1);
                }
            }
            "IFCBOOLEANRESULT" | "IFCBOOLEANCLIPPINGRESULT" => {
                self.mesh.approximate = true;
                if let Some(first) = ref_attr(self.graph, id, "FirstOperand") {
                    self.item(first, t, depth + 1);
                }
            }
            other => self.unsupported.push(other.to_string()),
        }
    }

    fn extrusion(&mut self, id: u64, t: &Transform) {
        let g = self.graph;
        let Some(profile) = ref_attr(g, id, "SweptArea") else { return };
        let loops = match profile_loops(g, profile, &self.opts) {
            Ok(l) => l,
            Err(kind) => return self.unsupported.push(kind),
        };
        let depth = real_attr(g, id, "Depth").unwrap_or(0.0) * g.length_to_meters;
        let dir = direction(g, ref_attr(g, id, "ExtrudedDirection")).unwrap_or_else(Vector3::z) * depth;
        let position = ref_attr(g, id, "Position").map(|p| axis2_placement(g, p)).unwrap_or_default();
        let frame = t.then(&position);
        extrude(&mut self.mesh, &loops, [dir.x, dir.y, dir.z], &frame);
    }

    fn faces(&mut self, faces: Vec<u64>, t: &Transform) {
        let g = self.graph;
        for face in faces {
            let bounds = ref_list(g, face, "Bounds");
            let mut outer = None;
            let mut inner = Vec::new();
            for b in bounds {
                let Some(loop_id) = ref_attr(g, b, "Bound") else { continue };
                let pts: Vec<[f64; 3]> = ref_list(g, loop_id, "Polygon")
                    .into_iter()
                    .filter_map(|p| point(g, Some(p)))
                    .map(|p| t.apply([p.x, p.y, p.z]))
                    .collect();
                if g.get(b).is_some_and(|i| i.is("IFCFACEOUTERBOUND")) && outer.is_none() {
                    outer = Some(pts);
                } else {
                    inner.push(pts);
                }
            }
            let outer = match outer {
                Some(o) => o,
                None if !inner.is_empty() => inner.remove(0),
                None => continue,
            };
            let mut loops = vec![outer];
            loops.extend(inner);
            add_polygon_3d(&mut self.mesh, &loops);
        }
    }

    fn coord_list(&self, id: u64) -> Vec<[f64; 3]> {
        let g = self.graph;
        let s = g.length_to_meters;
        let Some(list) = ref_attr(g, id, "Coordinates").and_then(|c| g.get(c)).and_then(|c| g.attr(c, "CoordList")).and_then(StepValue::as_list) else {
            return Vec::new();
        };
        list.iter()
            .filter_map(|p| {
                let c: Vec<f64> = p.as_list()?.iter().filter_map(StepValue::as_f64).collect();
                Some([c.first().copied()? * s, c.get(1).copied()? * s, c.get(2).copied().unwrap_or(0.0) * s])
            })
            .collect()
    }

    fn triangulated_face_set(&mut self, id: u64, t: &Transform) {
        let coords = self.coord_list(id);
        let base = self.mesh.vertices.len() as u32;
        for p in &coords {
            self.mesh.push_vertex(t.apply(*p));
        }
        let Some(index) = self.graph.get(id).and_then(|i| self.graph.attr(i, "CoordIndex")).and_then(StepValue::as_list) else { return };
        for tri in index {
            let Some(ix) = index_list(tri) else { continue };
            if ix.len() == 3 && ix.iter().all(|&i| i >= 1 && i <= coords.len()) {
                self.mesh.triangles.push([0, 1, 2].map(|k| base + ix[k] as u32 - 1));
            }
        }
    }

    fn polygonal_face_set(&mut self, id: u64, t: &Transform) {
        let g = self.graph;
        let coords: Vec<[f64; 3]> = self.coord_list(id).into_iter().map(|p| t.apply(p)).collect();
        let pick = |ix: &[usize]| -> Vec<[f64; 3]> { ix.iter().filter_map(|&i| coords.get(i.wrapping_sub(1)).copied()).collect() };
        for face in ref_list(g, id, "Faces") {
            let Some(inst) = g.get(face) else { continue };
            let Some(outer) = g.attr(inst, "CoordIndex").and_then(index_list) else { continue };
            let mut loops = vec![pick(&outer)];
            if let Some(inner) = g.attr(inst, "InnerCoordIndices").and_then(StepValue::as_list) {
                loops.extend(inner.iter().filter_map(index_list).map(|ix| pick(&ix)));
            }
            add_polygon_3d(&mut self.mesh, &loops);
        }
    }
}

fn index_list(v: &StepValue) -> Option<Vec<usize>> {
    v.as_list()?.iter().map(|i| i.as_f64().map(|f| f as usize)).collect()
}

/// Radius of the regular `n`-gon with the same area as a circle of radius `r`.
pub fn equal_area_radius(r: f64, n: usize) -> f64 {
    let n = n as f64;
    r * (PI / (0.5 * n * (2.0 * PI / n).sin())).sqrt()
}

fn curve_points(graph: &IfcGraph, curve: u64) -> Result<Vec<[f64; 2]>, String> {
    let inst = graph.get(curve).ok_or_else(|| "missing curve".to_string())?;
    let s = graph.length_to_meters;
    let mut pts: Vec<[f64; 2]> = match inst.class.as_str() {
        "IFCPOLYLINE" => ref_list(graph, curve, "Points").into_iter().filter_map(|p| point(graph, Some(p))).map(|p| [p.x, p.y]).collect(),
        "IFCINDEXEDPOLYCURVE" => {
            // arc segments are approximated by their control points
            let list = ref_attr(graph, curve, "Points").and_then(|p| graph.get(p)).and_then(|p| graph.attr(p, "CoordList")).and_then(StepValue::as_list);
            list.into_iter()
                .flatten()
                .filter_map(|p| {
                    let c = p.as_list()?;
                    Some([c.first()?.as_f64()? * s, c.get(1)?.as_f64()? * s])
                })
                .collect()
        }
        other => return Err(other.to_string()),
    };
    if pts.len() > 1 && dist2(pts[0], pts[pts.len() - 1]) < 1e-18 {
        pts.pop();
    }
    Ok(pts)
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Profile outline(s) in the profile's parent frame: outer loop first, then voids.
fn profile_loops(graph: &IfcGraph, profile: u64, opts: &TessellationOptions) -> Result<Vec<Vec<[f64; 2]>>, String> {
    let inst = graph.get(profile).ok_or_else(|| "missing profile".to_string())?;
    let s = graph.length_to_meters;
    let position = ref_attr(graph, profile, "Position").map(|p| axis2_placement(graph, p)).unwrap_or_default();
    let place = |pts: Vec<[f64; 2]>| -> Vec<[f64; 2]> {
        pts.into_iter()
            .map(|p| {
                let q = position.apply([p[0], p[1], 0.0]);
                [q[0], q[1]]
            })
            .collect()
    };
    let loops = match inst.class.as_str() {
        "IFCRECTANGLEPROFILEDEF" => {
            let x = real_attr(graph, profile, "XDim").unwrap_or(0.0) * s / 2.0;
            let y = real_attr(graph, profile, "YDim").unwrap_or(0.0) * s / 2.0;
            vec![place(vec![[-x, -y], [x, -y], [x, y], [-x, y]])]
        }
        "IFCCIRCLEPROFILEDEF" => {
            let n = opts.circle_segments.max(3);
            let r = equal_area_radius(real_attr(graph, profile, "Radius").unwrap_or(0.0) * s, n);
            let ring = (0..n).map(|i| {
                let a = 2.0 * PI * i as f64 / n as f64;
                [r * a.cos(), r * a.sin()]
            });
            vec![place(ring.collect())]
        }
        "IFCARBITRARYCLOSEDPROFILEDEF" | "IFCARBITRARYPROFILEDEFWITHVOIDS" => {
            let outer = ref_attr(graph, profile, "OuterCurve").ok_or_else(|| "profile without curve".to_string())?;
            let mut loops = vec![curve_points(graph, outer)?];
            for inner in ref_list(graph, profile, "InnerCurves") {
                loops.push(curve_points(graph, inner)?);
            }
            loops
        }
        other => return Err(other.to_string()),
    };
    Ok(loops.into_iter().filter(|l| l.len() >= 3).collect())
}

fn signed_area(ring: &[[f64; 2]]) -> f64 {
    let n = ring.len();
    (0..n).map(|i| {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        a[0] * b[1] - b[0] * a[1]
    }).sum::<f64>() * 0.5
}

/// Triangle indices of a planar polygon with holes, or `None` when earcut fails.
fn earcut(loops: &[Vec<[f64; 2]>]) -> Option<Vec<usize>> {
    let mut flat = Vec::new();
    let mut holes = Vec::new();
    for (i, l) in loops.iter().enumerate() {
        if i > 0 {
            holes.push(flat.len() / 2);
        }
        for p in l {
            flat.extend_from_slice(p);
        }
    }
    earcutr::earcut(&flat, &holes, 2).ok()
}

/// Prism over the given loops; `frame` maps profile coordinates into the model.
pub(crate) fn extrude(mesh: &mut Mesh, loops: &[Vec<[f64; 2]>], dir: [f64; 3], frame: &Transform) {
    if loops.is_empty() {
        return;
    }
    // orient outer CCW and holes CW so the side faces point outwards
    let mut loops = loops.to_vec();
    for (i, l) in loops.iter_mut().enumerate() {
        if (signed_area(l) > 0.0) != (i == 0) {
            l.reverse();
        }
    }
    let Some(cap) = earcut(&loops) else { return };
    let base = mesh.vertices.len() as u32;
    let count: usize = loops.iter().map(Vec::len).sum();
    for l in &loops {
        for p in l {
            mesh.push_vertex(frame.apply([p[0], p[1], 0.0]));
        }
    }
    for l in &loops {
        for p in l {
            mesh.push_vertex(frame.apply([p[0] + dir[0], p[1] + dir[1], dir[2]]));
        }
    }
    let top = base + count as u32;
    for tri in cap.chunks_exact(3) {
        let [a, b, c] = [tri[0] as u32, tri[1] as u32, tri[2] as u32];
        mesh.triangles.push([base + a, base + c, base + b]);
        mesh.triangles.push([top + a, top + b, top + c]);
    }
    let mut offset = 0u32;
    for l in &loops {
        let n = l.len() as u32;
        for i in 0..n {
            let j = (i + 1) % n;
            let (b0, b1, t0, t1) = (base + offset + i, base + offset + j, top + offset + i, top + offset + j);
            mesh.triangles.push([b0, b1, t1]);
            mesh.triangles.push([b0, t1, t0]);
        }
        offset += n;
    }
}

/// Triangulates a planar 3D polygon (outer loop first, holes after).
pub(crate) fn add_polygon_3d(mesh: &mut Mesh, loops: &[Vec<[f64; 3]>]) {
    let Some(outer) = loops.first().filter(|o| o.len() >= 3) else { return };
    // Newell normal picks the projection plane
    let mut n = [0.0f64; 3];
    for i in 0..outer.len() {
        let (a, b) = (outer[i], outer[(i + 1) % outer.len()]);
        n[0] += (a[1] - b[1]) * (a[2] + b[2]);
        n[1] += (a[2] - b[2]) * (a[0] + b[0]);
        n[2] += (a[0] - b[0]) * (a[1] + b[1]);
    }
    let axis = (0..3).max_by(|&i, &j| n[i].abs().total_cmp(&n[j].abs())).unwrap_or(2);
    if n[axis].abs() < 1e-18 {
        return;
    }
    let (u, v) = match axis {
        0 => (1, 2),
        1 => (2, 0),
        _ => (0, 1),
    };
    let loops: Vec<&Vec<[f64; 3]>> = loops.iter().filter(|l| l.len() >= 3).collect();
    let flat: Vec<Vec<[f64; 2]>> = loops.iter().map(|l| l.iter().map(|p| [p[u], p[v]]).collect()).collect();
    let base = mesh.vertices.len() as u32;
    for l in &loops {
        for p in l.iter() {
            mesh.push_vertex(*p);
        }
    }
    let tris = earcut(&flat).filter(|t| !t.is_empty()).unwrap_or_else(|| {
        (1..outer.len() - 1).flat_map(|i| [0, i, i + 1]).collect()
    });
    let flip = n[axis] < 0.0;
    for tri in tris.chunks_exact(3) {
        let (a, b, c) = (base + tri[0] as u32, base + tri[1] as u32, base + tri[2] as u32);
        mesh.triangles.push(if flip { [a, c, b] } else { [a, b, c] });
    }
}
