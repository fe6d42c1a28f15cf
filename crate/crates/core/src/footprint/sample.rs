use std::collections::HashSet;

use crate::geometry::Segment2D;

/// Both endpoints of every segment plus interior points every `spacing` along it.
pub fn sample_segments(segments: &[Segment2D], spacing: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    for s in segments {
        let len = s.length();
        out.push(s.a);
        let steps = (len / spacing + 1e-9).floor() as usize;
        for k in 1..=steps {
            let d = k as f64 * spacing;
            if d >= len - 1e-9 {
                break;
            }
            let t = d / len;
            out.push([s.a[0] + t * (s.b[0] - s.a[0]), s.a[1] + t * (s.b[1] - s.a[1])]);
        }
        out.push(s.b);
    }
    out
}

/// Drops points falling in an already occupied `tol` grid cell, keeping first occurrences.
pub fn weld_points(points: &[[f64; 2]], tol: f64) -> Vec<[f64; 2]> {
    let mut seen = HashSet::new();
    points
        .iter()
        .copied()
        .filter(|p| seen.insert(((p[0] / tol).round() as i64, (p[1] / tol).round() as i64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(a: [f64; 2], b: [f64; 2]) -> Segment2D {
        Segment2D { a, b }
    }

    #[test]
    fn metre_segment_gives_six_points() {
        let p = sample_segments(&[seg([0.0, 0.0], [1.0, 0.0])], 0.2);
        assert_eq!(p.len(), 6);
        for (i, q) in p.iter().enumerate() {
            assert!((q[0] - 0.2 * i as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn short_segment_gives_endpoints() {
        assert_eq!(sample_segments(&[seg([0.0, 0.0], [0.1, 0.0])], 0.2).len(), 2);
    }

    #[test]
    fn unit_square_boundary() {
        let sq = [seg([0.0, 0.0], [1.0, 0.0]), seg([1.0, 0.0], [1.0, 1.0]), seg([1.0, 1.0], [0.0, 1.0]), seg([0.0, 1.0], [0.0, 0.0])];
        let p = sample_segments(&sq, 0.2);
        assert_eq!(p.len(), 24);
        assert_eq!(weld_points(&p, 1e-6).len(), 20);
    }
}
