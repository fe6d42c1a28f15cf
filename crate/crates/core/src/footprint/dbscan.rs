use std::collections::HashMap;

use crate::exec::ExecMode;

/// Uniform grid over the points with cell size `eps`.
struct Grid {
    eps: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl Grid {
    fn new(points: &[[f64; 2]], eps: f64) -> Self {
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::cell(p, eps)).or_default().push(i);
        }
        Grid { eps, cells }
    }

    fn cell(p: &[f64; 2], eps: f64) -> (i64, i64) {
        ((p[0] / eps).floor() as i64, (p[1] / eps).floor() as i64)
    }

    /// Indices within `eps` of point `i` (inclusive, `i` itself included), ascending.
    fn neighbours(&self, points: &[[f64; 2]], i: usize) -> Vec<usize> {
        let p = points[i];
        let (cx, cy) = Self::cell(&p, self.eps);
        let eps2 = self.eps * self.eps;
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = self.cells.get(&(cx + dx, cy + dy)) {
                    out.extend(list.iter().copied().filter(|&j| {
                        let q = points[j];
                        (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) <= eps2
                    }));
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Density clustering. Returns one label per point: `Some(cluster)` or `None` for noise.
///
/// A point is core when at least `min_pts` points (itself included) lie within
/// `eps`. Clusters are numbered in order of their first core point; a border
/// point joins the first cluster that reaches it.
pub fn dbscan(points: &[[f64; 2]], eps: f64, min_pts: usize, mode: ExecMode) -> Vec<Option<usize>> {
    let grid = Grid::new(points, eps);
    let idx: Vec<usize> = (0..points.len()).collect();
    let neighbours = mode.map(&idx, |&i| grid.neighbours(points, i));

    #[derive(Clone, Copy, PartialEq)]
    enum L {
        Unvisited,
        Noise,
        Cluster(usize),
    }
    let mut labels = vec![L::Unvisited; points.len()];
    let mut next = 0;
    for p in 0..points.len() {
        if labels[p] != L::Unvisited {
            continue;
        }
        if neighbours[p].len() < min_pts {
            labels[p] = L::Noise;
            continue;
        }
        let c = next;
        next += 1;
        labels[p] = L::Cluster(c);
        let mut queue: Vec<usize> = neighbours[p].clone();
        let mut head = 0;
        while head < queue.len() {
            let q = queue[head];
            head += 1;
            match labels[q] {
                L::Noise => labels[q] = L::Cluster(c),
                L::Unvisited => {
                    labels[q] = L::Cluster(c);
                    if neighbours[q].len() >= min_pts {
                        queue.extend_from_slice(&neighbours[q]);
                    }
                }
                L::Cluster(_) => {}
            }
        }
    }
    labels
        .into_iter()
        .map(|l| match l {
            L::Cluster(c) => Some(c),
            _ => None,
        })
        .collect()
}

/// Groups point indices by label, noise dropped.
pub fn clusters(labels: &[Option<usize>]) -> Vec<Vec<usize>> {
    let n = labels.iter().flatten().max().map_or(0, |m| m + 1);
    let mut out = vec![Vec::new(); n];
    for (i, l) in labels.iter().enumerate() {
        if let Some(c) = l {
            out[*c].push(i);
        }
    }
    out
}
