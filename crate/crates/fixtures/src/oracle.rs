//! Reference implementations used to cross-check the library in tests.
//!
//! Nothing here calls into `geobim-core`; each routine is the slow,
//! obvious version of the corresponding algorithm.

use std::collections::HashMap;

/// Counts entity records (`#<digits> =` at a statement start) in the DATA
/// section of a STEP file by scanning the text, skipping string literals
/// and comments.
pub fn count_records(text: &str) -> usize {
    let Some(start) = text.find("DATA;") else { return 0 };
    let bytes = text.as_bytes();
    let mut i = start + "DATA;".len();
    let mut at_statement_start = true;
    let mut count = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'\'' => {
                i += 1;
                while i < bytes.len() {
                    if bytes[i] == b'\'' {
                        if bytes.get(i + 1) == Some(&b'\'') {
                            i += 2;
                            continue;
                        }
                        break;
                    }
                    i += 1;
                }
                at_statement_start = false;
            }
            b'/' if bytes.get(i + 1) == Some(&b'*') => {
                i += 2;
                while i + 1 < bytes.len() && !(bytes[i] == b'*' && bytes[i + 1] == b'/') {
                    i += 1;
                }
                i += 1;
            }
            b';' => at_statement_start = true,
            b'#' if at_statement_start => {
                let mut j = i + 1;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                while j < bytes.len() && bytes[j].is_ascii_whitespace() {
                    j += 1;
                }
                if j > i + 1 && bytes.get(j) == Some(&b'=') {
                    count += 1;
                }
                at_statement_start = false;
            }
            c if c.is_ascii_whitespace() => {}
            _ => at_statement_start = false,
        }
        i += 1;
    }
    count
}

/// Brute-force DBSCAN with the inclusive `d <= eps` neighbourhood (point
/// itself counted). Clusters are the connected components of core points,
/// ordered by their smallest index; a border point joins the lowest numbered
/// cluster among its core neighbours.
pub fn dbscan_brute(points: &[[f64; 2]], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    let n = points.len();
    let near = |i: usize, j: usize| {
        let (p, q) = (points[i], points[j]);
        (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) <= eps * eps
    };
    let core: Vec<bool> = (0..n).map(|i| (0..n).filter(|&j| near(i, j)).count() >= min_pts).collect();

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            if core[i] && core[j] && near(i, j) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut id_of_root: HashMap<usize, usize> = HashMap::new();
    let mut labels = vec![None; n];
    for i in 0..n {
        if core[i] {
            let r = find(&mut parent, i);
            let next = id_of_root.len();
            labels[i] = Some(*id_of_root.entry(r).or_insert(next));
        }
    }
    for i in 0..n {
        if !core[i] {
            labels[i] = (0..n).filter(|&j| core[j] && near(i, j)).filter_map(|j| labels[j]).min();
        }
    }
    labels
}

/// Partition as a sorted list of sorted index sets, noise excluded.
pub fn partition(labels: &[Option<usize>]) -> Vec<Vec<usize>> {
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, l) in labels.iter().enumerate() {
        if let Some(c) = l {
            groups.entry(*c).or_default().push(i);
        }
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain, counter-clockwise, collinear points dropped.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], *p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], *p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Shoelace area, positive for counter-clockwise rings. A closing vertex is optional.
pub fn shoelace(ring: &[[f64; 2]]) -> f64 {
    let n = ring.len();
    (0..n).map(|i| cross([0.0, 0.0], ring[i], ring[(i + 1) % n])).sum::<f64>() / 2.0
}

/// Chains unordered segments into closed loops by matching endpoints on a
/// `tol` grid. Open chains are dropped.
pub fn chain_loops(segments: &[([f64; 2], [f64; 2])], tol: f64) -> Vec<Vec<[f64; 2]>> {
    let key = |p: [f64; 2]| ((p[0] / tol).round() as i64, (p[1] / tol).round() as i64);
    let mut by_end: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, (a, b)) in segments.iter().enumerate() {
        by_end.entry(key(*a)).or_default().push(i);
        by_end.entry(key(*b)).or_default().push(i);
    }
    let mut used = vec![false; segments.len()];
    let mut loops = Vec::new();
    for s in 0..segments.len() {
        if used[s] {
            continue;
        }
        used[s] = true;
        let start = segments[s].0;
        let mut ring = vec![start];
        let mut cur = segments[s].1;
        let mut closed = false;
        loop {
            if key(cur) == key(start) {
                closed = true;
                break;
            }
            ring.push(cur);
            let next = by_end[&key(cur)].iter().copied().find(|&i| !used[i]);
            let Some(i) = next else { break };
            used[i] = true;
            let (a, b) = segments[i];
            cur = if key(a) == key(cur) { b } else { a };
        }
        if closed && ring.len() >= 3 {
            loops.push(ring);
        }
    }
    loops
}

/// Rotation about the vertical axis followed by a translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidMotion {
    pub angle: f64,
    pub shift: [f64; 3],
}

impl RigidMotion {
    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.angle.sin_cos();
        [c * p[0] - s * p[1] + self.shift[0], s * p[0] + c * p[1] + self.shift[1], p[2] + self.shift[2]]
    }

    pub fn apply2(&self, p: [f64; 2]) -> [f64; 2] {
        let q = self.apply([p[0], p[1], 0.0]);
        [q[0], q[1]]
    }
}

/// Points every `spacing` along the closed ring, corners included.
pub fn sample_ring(ring: &[[f64; 2]], spacing: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    for i in 0..ring.len() {
        let (a, b) = (ring[i], ring[(i + 1) % ring.len()]);
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let steps = (len / spacing).ceil().max(1.0) as usize;
        for k in 0..steps {
            let t = k as f64 / steps as f64;
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}
