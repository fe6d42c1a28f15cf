use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::transform::Transform;

/// Minimum triangle area kept after tessellation, m².
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
    pub source_element: u64,
    /// Set when part of the representation was approximated (boolean results, partial support).
    pub approximate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb { min: [f64::INFINITY; 3], max: [f64::NEG_INFINITY; 3] }
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|i| self.min[i] > self.max[i])
    }

    pub fn include(&mut self, p: [f64; 3]) {
        for i in 0..3 {
            self.min[i] = self.min[i].min(p[i]);
            self.max[i] = self.max[i].max(p[i]);
        }
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        let mut out = *self;
        if !other.is_empty() {
            out.include(other.min);
            out.include(other.max);
        }
        out
    }

    pub fn size(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| (self.max[i] - self.min[i]).max(0.0))
    }

    pub fn volume(&self) -> f64 {
        let s = self.size();
        s[0] * s[1] * s[2]
    }

    pub fn center(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| 0.5 * (self.min[i] + self.max[i]))
    }

    pub fn intersection(&self, other: &Aabb) -> Aabb {
        Aabb { min: [0, 1, 2].map(|i| self.min[i].max(other.min[i])), max: [0, 1, 2].map(|i| self.max[i].min(other.max[i])) }
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn triangle_area(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let n = cross(sub(b, a), sub(c, a));
    0.5 * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt()
}

impl Mesh {
    pub fn new(source_element: u64) -> Self {
        Mesh { source_element, ..Default::default() }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn push_vertex(&mut self, p: [f64; 3]) -> u32 {
        self.vertices.push(p);
        (self.vertices.len() - 1) as u32
    }

    pub fn triangle(&self, t: usize) -> [[f64; 3]; 3] {
        self.triangles[t].map(|i| self.vertices[i as usize])
    }

    pub fn append(&mut self, other: &Mesh) {
        let base = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles.extend(other.triangles.iter().map(|t| t.map(|i| i + base)));
        self.approximate |= other.approximate;
    }

    pub fn transformed(&self, t: &Transform) -> Mesh {
        Mesh { vertices: self.vertices.iter().map(|p| t.apply(*p)).collect(), ..self.clone() }
    }

    /// Drops out-of-range and near-zero-area triangles, then unused vertices.
    pub fn cleanup(&mut self) {
        let n = self.vertices.len() as u32;
        let verts = &self.vertices;
        self.triangles.retain(|t| {
            t.iter().all(|&i| i < n) && {
                let [a, b, c] = t.map(|i| verts[i as usize]);
                triangle_area(a, b, c) > MIN_TRIANGLE_AREA
            }
        });
        let mut remap = vec![u32::MAX; self.vertices.len()];
        let mut kept = Vec::new();
        for t in &mut self.triangles {
            for i in t.iter_mut() {
                if remap[*i as usize] == u32::MAX {
                    remap[*i as usize] = kept.len() as u32;
                    kept.push(self.vertices[*i as usize]);
                }
                *i = remap[*i as usize];
            }
        }
        self.vertices = kept;
    }

    pub fn bbox(&self) -> Aabb {
        let mut b = Aabb::empty();
        for p in &self.vertices {
            b.include(*p);
        }
        b
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| {
            let [a, b, c] = self.triangle(t);
            triangle_area(a, b, c)
        }).sum()
    }

    /// ASCII Wavefront OBJ dump.
    pub fn to_obj(&self) -> String {
        let mut out = format!("o element_{}\n", self.source_element);
        for v in &self.vertices {
            let _ = writeln!(out, "v {} {} {}", v[0], v[1], v[2]);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cleanup_drops_degenerate() {
        let mut m = Mesh::new(1);
        for p in [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [2.0, 0.0, 0.0]] {
            m.push_vertex(p);
        }
        m.triangles = vec![[0, 1, 2], [0, 1, 3], [0, 1, 9]];
        m.cleanup();
        assert_eq!(m.triangles.len(), 1);
        assert_eq!(m.vertices.len(), 3);
    }

    #[test]
    fn obj_is_one_based() {
        let mut m = Mesh::new(7);
        for p in [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]] {
            m.push_vertex(p);
        }
        m.triangles.push([0, 1, 2]);
        let obj = m.to_obj();
        assert!(obj.contains("f 1 2 3"));
        assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 3);
    }
}
