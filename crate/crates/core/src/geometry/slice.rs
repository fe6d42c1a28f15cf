use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::mesh::Mesh;

/// Vertices within this distance of the cut plane are treated as on it.
pub const PLANE_SNAP: f64 = 1e-7;
/// Endpoint weld grid for deduplication, m.
pub const WELD: f64 = 1e-6;
/// Shorter segments are discarded.
pub const MIN_SEGMENT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment2D {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

impl Segment2D {
    pub fn length(&self) -> f64 {
        (self.b[0] - self.a[0]).hypot(self.b[1] - self.a[1])
    }
}

type Key = (i64, i64);

fn key(p: [f64; 2]) -> Key {
    ((p[0] / WELD).round() as i64, (p[1] / WELD).round() as i64)
}

fn lerp(p: [f64; 3], q: [f64; 3], dp: f64, dq: f64) -> [f64; 2] {
    if dp == 0.0 {
        return [p[0], p[1]];
    }
    if dq == 0.0 {
        return [q[0], q[1]];
    }
    let t = dp / (dp - dq);
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

/// Horizontal section of a mesh at height `z`.
///
/// A vertex on the plane counts as above it, so an edge lying in the plane is
/// produced once, by the triangle below it. Triangles lying in the plane add
/// their boundary edges. Results are welded, deduplicated and collinear runs
/// merged.
pub fn slice_mesh(mesh: &Mesh, z: f64) -> Vec<Segment2D> {
    let mut raw: Vec<([f64; 2], [f64; 2])> = Vec::new();
    let mut coplanar: HashMap<(Key, Key), (usize, [f64; 2], [f64; 2])> = HashMap::new();

    for t in 0..mesh.triangles.len() {
        let v = mesh.triangle(t);
        let d = v.map(|p| {
            let d = p[2] - z;
            if d.abs() < PLANE_SNAP {
                0.0
            } else {
                d
            }
        });
        if d.iter().all(|x| *x == 0.0) {
            for i in 0..3 {
                let (p, q) = ([v[i][0], v[i][1]], [v[(i + 1) % 3][0], v[(i + 1) % 3][1]]);
                let (kp, kq) = (key(p), key(q));
                let k = if kp <= kq { (kp, kq) } else { (kq, kp) };
                coplanar.entry(k).or_insert((0, p, q)).0 += 1;
            }
            continue;
        }
        let above = d.map(|x| x >= 0.0);
        if above.iter().all(|a| *a) || above.iter().all(|a| !*a) {
            continue;
        }
        let mut pts = Vec::with_capacity(2);
        for i in 0..3 {
            let j = (i + 1) % 3;
            if above[i] != above[j] {
                pts.push(lerp(v[i], v[j], d[i], d[j]));
            }
        }
        if pts.len() == 2 {
            raw.push((pts[0], pts[1]));
        }
    }
    let mut boundary: Vec<_> = coplanar.into_iter().filter(|(_, (n, _, _))| *n == 1).map(|(k, (_, p, q))| (k, p, q)).collect();
    boundary.sort_by_key(|(k, _, _)| *k);
    raw.extend(boundary.into_iter().map(|(_, p, q)| (p, q)));
    merge_segments(raw)
}

/// Welds endpoints, drops duplicates and short pieces, then joins collinear
/// segments meeting at nodes of degree two.
pub fn merge_segments(raw: Vec<([f64; 2], [f64; 2])>) -> Vec<Segment2D> {
    let mut nodes: BTreeMap<Key, [f64; 2]> = BTreeMap::new();
    let mut edges: BTreeMap<(Key, Key), ()> = BTreeMap::new();
    for (p, q) in raw {
        let (kp, kq) = (key(p), key(q));
        if kp == kq || (Segment2D { a: p, b: q }).length() < MIN_SEGMENT {
            continue;
        }
        nodes.entry(kp).or_insert(p);
        nodes.entry(kq).or_insert(q);
        edges.insert(if kp <= kq { (kp, kq) } else { (kq, kp) }, ());
    }

    let mut alive: Vec<Option<(Key, Key)>> = edges.into_keys().map(Some).collect();
    let mut incident: BTreeMap<Key, Vec<usize>> = BTreeMap::new();
    for (i, e) in alive.iter().enumerate() {
        let (a, b) = e.unwrap();
        incident.entry(a).or_default().push(i);
        incident.entry(b).or_default().push(i);
    }
    let node_keys: Vec<Key> = incident.keys().copied().collect();
    for n in node_keys {
        let list: Vec<usize> = incident[&n].iter().copied().filter(|&i| alive[i].is_some()).collect();
        if list.len() != 2 {
            continue;
        }
        let other = |i: usize| {
            let (a, b) = alive[i].unwrap();
            if a == n {
                b
            } else {
                a
            }
        };
        let (o1, o2) = (other(list[0]), other(list[1]));
        if o1 == o2 {
            continue;
        }
        let (c, p, q) = (nodes[&n], nodes[&o1], nodes[&o2]);
        let u = [p[0] - c[0], p[1] - c[1]];
        let v = [q[0] - c[0], q[1] - c[1]];
        let cross = u[0] * v[1] - u[1] * v[0];
        let dot = u[0] * v[0] + u[1] * v[1];
        let scale = u[0].hypot(u[1]) * v[0].hypot(v[1]);
        if dot >= 0.0 || cross.abs() > 1e-9 * scale {
            continue;
        }
        let merged = if o1 <= o2 { (o1, o2) } else { (o2, o1) };
        // the merged edge may already exist when the run closes a loop
        if alive.iter().flatten().any(|e| *e == merged) {
            continue;
        }
        alive[list[0]] = Some(merged);
        alive[list[1]] = None;
        let inc = incident.get_mut(&o2).unwrap();
        for i in inc.iter_mut() {
            if *i == list[1] {
                *i = list[0];
            }
        }
    }
    alive.into_iter().flatten().map(|(a, b)| Segment2D { a: nodes[&a], b: nodes[&b] }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::tessellate::extrude;
    use crate::geometry::transform::Transform;

    fn unit_cube() -> Mesh {
        let mut m = Mesh::new(1);
        extrude(&mut m, &[vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]], [0.0, 0.0, 1.0], &Transform::identity());
        m
    }

    fn total(s: &[Segment2D]) -> f64 {
        s.iter().map(Segment2D::length).sum()
    }

    #[test]
    fn cube_mid_section_is_square() {
        let s = slice_mesh(&unit_cube(), 0.5);
        assert_eq!(s.len(), 4);
        assert!((total(&s) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn cube_faces_give_square_once() {
        for z in [0.0, 1.0] {
            let s = slice_mesh(&unit_cube(), z);
            assert_eq!(s.len(), 4, "z={z}");
            assert!((total(&s) - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn plane_outside_is_empty() {
        assert!(slice_mesh(&unit_cube(), 2.0).is_empty());
        assert!(slice_mesh(&unit_cube(), -0.1).is_empty());
    }

    #[test]
    fn collinear_chain_merges() {
        let raw = vec![([0.0, 0.0], [1.0, 0.0]), ([1.0, 0.0], [2.0, 0.0]), ([2.0, 0.0], [2.0, 1.0])];
        let s = merge_segments(raw);
        assert_eq!(s.len(), 2);
    }
}
