use geo::{ConvexHull, MultiPoint, Point};
use robust::{orient2d, Coord};
use serde::{Deserialize, Serialize};

use super::FootprintError;

/// Simple counter-clockwise polygon, closed implicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon2D {
    pub ring: Vec<[f64; 2]>,
    pub area: f64,
}

pub fn signed_area(ring: &[[f64; 2]]) -> f64 {
    let n = ring.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

impl Polygon2D {
    /// Builds a polygon, reversing a clockwise ring.
    pub fn new(mut ring: Vec<[f64; 2]>) -> Self {
        if ring.len() > 1 && ring.first() == ring.last() {
            ring.pop();
        }
        let mut area = signed_area(&ring);
        if area < 0.0 {
            ring.reverse();
            area = -area;
        }
        Polygon2D { ring, area }
    }

    pub fn is_ccw(&self) -> bool {
        signed_area(&self.ring) > 0.0
    }

    /// No two non-adjacent edges touch and no adjacent edges fold back.
    pub fn is_simple(&self) -> bool {
        let n = self.ring.len();
        if n < 3 {
            return false;
        }
        for i in 0..n {
            let (a, b) = (self.ring[i], self.ring[(i + 1) % n]);
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (c, d) = (self.ring[j], self.ring[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }

    /// Drops vertices within `tol` of the line through their neighbours.
    pub fn simplified(&self, tol: f64) -> Polygon2D {
        let mut ring = self.ring.clone();
        let mut changed = true;
        while changed && ring.len() > 3 {
            changed = false;
            let mut i = 0;
            while i < ring.len() && ring.len() > 3 {
                let n = ring.len();
                let (a, b, c) = (ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]);
                if point_line_distance(b, a, c) <= tol && (b[0] - a[0]) * (c[0] - b[0]) + (b[1] - a[1]) * (c[1] - b[1]) >= 0.0 {
                    ring.remove(i);
                    changed = true;
                } else {
                    i += 1;
                }
            }
        }
        Polygon2D::new(ring)
    }

    pub fn to_geo(&self) -> geo::Polygon<f64> {
        geo::Polygon::new(self.ring.iter().map(|p| geo::coord! { x: p[0], y: p[1] }).collect(), vec![])
    }

    /// Point inside or within `tol` of the boundary.
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        let n = self.ring.len();
        let mut inside = false;
        for i in 0..n {
            let (a, b) = (self.ring[i], self.ring[(i + 1) % n]);
            if point_segment_distance(p, a, b) <= tol {
                return true;
            }
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

fn c(p: [f64; 2]) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

fn orient(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    orient2d(c(a), c(b), c(p))
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection with exact orientation predicates.
pub fn segments_intersect(a: [f64; 2], b: [f64; 2], p: [f64; 2], q: [f64; 2]) -> bool {
    let (d1, d2) = (orient(p, q, a), orient(p, q, b));
    let (d3, d4) = (orient(a, b, p), orient(a, b, q));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(p, q, a)) || (d2 == 0.0 && on_segment(p, q, b)) || (d3 == 0.0 && on_segment(a, b, p)) || (d4 == 0.0 && on_segment(a, b, q))
}

fn point_line_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len = dx.hypot(dy);
    if len == 0.0 {
        return (p[0] - a[0]).hypot(p[1] - a[1]);
    }
    ((p[0] - a[0]) * dy - (p[1] - a[1]) * dx).abs() / len
}

pub fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn dedupe(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.iter().copied().filter(|p| p[0].is_finite() && p[1].is_finite()).collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    pts
}

/// Convex hull (used as the terminal fallback when k reaches n).
pub fn convex_hull(points: &[[f64; 2]]) -> Polygon2D {
    let mp: MultiPoint<f64> = points.iter().map(|p| Point::new(p[0], p[1])).collect();
    let hull = mp.convex_hull();
    Polygon2D::new(hull.exterior().points().map(|p| [p.x(), p.y()]).collect())
}

/// Signed turn from heading `h` to direction `d`, in (-π, π]; negative is a right turn.
fn turn(h: [f64; 2], d: [f64; 2]) -> f64 {
    let cross = h[0] * d[1] - h[1] * d[0];
    let dot = h[0] * d[0] + h[1] * d[1];
    let a = cross.atan2(dot);
    if a <= -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        a
    }
}

/// k-nearest-neighbour concave hull (Moreira and Santos).
///
/// Starts at the lowest point, repeatedly takes the candidate among the k
/// nearest unused points with the sharpest right turn that keeps the ring
/// simple, and retries with k + 1 when stuck or when a point is left outside.
pub fn concave_hull(points: &[[f64; 2]], k: usize) -> Result<Polygon2D, FootprintError> {
    let pts = dedupe(points);
    if pts.len() < 3 {
        return Err(FootprintError::DegenerateInput { points: pts.len() });
    }
    let (a, b) = (pts[0], pts[pts.len() - 1]);
    if pts.iter().all(|p| orient(a, b, *p) == 0.0) {
        return Err(FootprintError::DegenerateInput { points: pts.len() });
    }
    if pts.len() == 3 {
        return Ok(Polygon2D::new(pts));
    }
    let mut k = k.max(3);
    while k < pts.len() {
        if let Some(poly) = hull_attempt(&pts, k) {
            return Ok(poly);
        }
        k += 1;
    }
    Ok(convex_hull(&pts))
}

fn hull_attempt(pts: &[[f64; 2]], k: usize) -> Option<Polygon2D> {
    let first = (0..pts.len()).min_by(|&i, &j| pts[i][1].total_cmp(&pts[j][1]).then(pts[i][0].total_cmp(&pts[j][0])))?;
    let mut available: Vec<bool> = vec![true; pts.len()];
    available[first] = false;
    let mut remaining = pts.len() - 1;
    let mut hull = vec![first];
    let mut heading = [1.0, 0.0];
    let mut current = first;

    loop {
        if hull.len() == 4 {
            available[first] = true;
            remaining += 1;
        }
        if remaining == 0 {
            return None;
        }
        let cur = pts[current];
        let mut cands: Vec<usize> = (0..pts.len()).filter(|&i| available[i]).collect();
        if cands.len() > k {
            cands.select_nth_unstable_by(k - 1, |&i, &j| dist2(cur, pts[i]).total_cmp(&dist2(cur, pts[j])));
            cands.truncate(k);
        }
        let mut ranked: Vec<(f64, f64, usize)> = cands
            .into_iter()
            .map(|i| {
                let d = [pts[i][0] - cur[0], pts[i][1] - cur[1]];
                (turn(heading, d), dist2(cur, pts[i]), i)
            })
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));

        let chosen = ranked.iter().map(|r| r.2).find(|&c| {
            let closing = usize::from(c == first);
            let n = hull.len();
            // edges (hull[i], hull[i+1]) not adjacent to the new edge
            (closing..n.saturating_sub(2)).all(|i| !segments_intersect(cur, pts[c], pts[hull[i]], pts[hull[i + 1]]))
        })?;

        if chosen == first {
            break;
        }
        heading = [pts[chosen][0] - cur[0], pts[chosen][1] - cur[1]];
        available[chosen] = false;
        remaining -= 1;
        hull.push(chosen);
        current = chosen;
    }

    let poly = Polygon2D::new(hull.iter().map(|&i| pts[i]).collect());
    if poly.area <= 0.0 || !poly.is_ccw() {
        return None;
    }
    let tol = 1e-9 * (1.0 + poly.ring.iter().map(|p| p[0].abs().max(p[1].abs())).fold(0.0, f64::max));
    if pts.iter().all(|p| poly.contains(*p, tol)) {
        Some(poly)
    } else {
        None
    }
}
