//! Storey footprints: section cut, edge sampling, DBSCAN, concave hull and overlap.

mod dbscan;
mod hull;
mod sample;

use geo::{Area, BooleanOps, MultiPolygon};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dbscan::{clusters, dbscan};
pub use hull::{concave_hull, convex_hull, point_segment_distance, segments_intersect, signed_area, Polygon2D};
pub use sample::{sample_segments, weld_points};

use crate::exec::ExecMode;
use crate::geometry::{slice_mesh, Segment2D};
use crate::step::schema::is_opening_or_furniture;
use crate::storey::FederatedModel;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FootprintError {
    #[error("invalid footprint parameters: {0}")]
    InvalidParams(String),
    #[error("degenerate input: {points} distinct points, or all collinear")]
    DegenerateInput { points: usize },
    #[error("no section at the cut height of storey {0}")]
    EmptyCut(String),
    #[error("reference footprint has zero area")]
    ZeroReference,
}

/// Which area the intersection is divided by.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapBasis {
    #[default]
    Reference,
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FootprintParams {
    /// Cut height above the storey elevation, m.
    pub cut_offset: f64,
    pub sample_spacing: f64,
    pub dbscan_eps: f64,
    pub dbscan_min_pts: usize,
    pub hull_k: usize,
    pub overlap_basis: OverlapBasis,
}

impl Default for FootprintParams {
    fn default() -> Self {
        FootprintParams { cut_offset: 1.0, sample_spacing: 0.2, dbscan_eps: 1.0, dbscan_min_pts: 4, hull_k: 7, overlap_basis: OverlapBasis::Reference }
    }
}

impl FootprintParams {
    pub fn validate(&self) -> Result<(), FootprintError> {
        let bad = |m: &str| Err(FootprintError::InvalidParams(m.to_string()));
        if !(self.sample_spacing > 0.0 && self.sample_spacing.is_finite()) {
            return bad("sample_spacing must be > 0");
        }
        if !(self.dbscan_eps > 0.0 && self.dbscan_eps.is_finite()) {
            return bad("dbscan_eps must be > 0");
        }
        if self.dbscan_min_pts < 1 {
            return bad("dbscan_min_pts must be >= 1");
        }
        if self.hull_k < 3 {
            return bad("hull_k must be >= 3");
        }
        if !self.cut_offset.is_finite() {
            return bad("cut_offset must be finite");
        }
        Ok(())
    }
}

/// Hull vertices closer than this to the line through their neighbours are dropped, m.
pub const RING_SIMPLIFY: f64 = 1e-6;

/// Points closer than this are merged before clustering, m.
pub const POINT_WELD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoreyFootprint {
    pub storey: usize,
    pub name: String,
    pub elevation: f64,
    pub cut_z: f64,
    pub polygons: Vec<Polygon2D>,
    /// Area of the union of the polygons, m².
    pub area: f64,
    pub warnings: Vec<String>,
}

/// Section segments of the storey's elements at `elevation + cut_offset`.
pub fn storey_section(model: &FederatedModel, storey: usize, cut_offset: f64) -> Vec<Segment2D> {
    let z = model.storeys[storey].elevation + cut_offset;
    model
        .storey_meshes(storey)
        .filter(|(k, _)| !model.elements.get(k).is_some_and(|e| is_opening_or_furniture(&e.class)))
        .flat_map(|(_, m)| slice_mesh(m, z))
        .collect()
}

/// Polygons reconstructed from section segments.
pub fn footprint_from_segments(segments: &[Segment2D], params: &FootprintParams, mode: ExecMode) -> (Vec<Polygon2D>, Vec<String>) {
    let points = weld_points(&sample_segments(segments, params.sample_spacing), POINT_WELD);
    let labels = dbscan(&points, params.dbscan_eps, params.dbscan_min_pts, mode);
    let groups = clusters(&labels);
    let mut warnings = Vec::new();
    let noise = labels.iter().filter(|l| l.is_none()).count();
    if noise > 0 {
        warnings.push(format!("{noise} sampled points discarded as noise"));
    }
    let results = mode.map(&groups, |g| {
        let pts: Vec<[f64; 2]> = g.iter().map(|&i| points[i]).collect();
        concave_hull(&pts, params.hull_k).map(|p| p.simplified(RING_SIMPLIFY))
    });
    let mut polygons = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(p) => polygons.push(p),
            Err(e) => warnings.push(format!("cluster {i} discarded: {e}")),
        }
    }
    polygons.sort_by(|a, b| {
        let key = |p: &Polygon2D| p.ring.iter().fold([f64::INFINITY; 2], |m, q| [m[0].min(q[0]), m[1].min(q[1])]);
        let (ka, kb) = (key(a), key(b));
        ka[0].total_cmp(&kb[0]).then(ka[1].total_cmp(&kb[1]))
    });
    (polygons, warnings)
}

pub fn union(polys: &[Polygon2D]) -> MultiPolygon<f64> {
    polys.iter().fold(MultiPolygon::new(vec![]), |acc, p| acc.union(&p.to_geo()))
}

/// Footprint polygons of one storey.
pub fn storey_footprint(model: &FederatedModel, storey: usize, params: &FootprintParams, mode: ExecMode) -> Result<StoreyFootprint, FootprintError> {
    params.validate()?;
    let s = &model.storeys[storey];
    let segments = storey_section(model, storey, params.cut_offset);
    if segments.is_empty() {
        return Err(FootprintError::EmptyCut(s.name.clone()));
    }
    let (polygons, warnings) = footprint_from_segments(&segments, params, mode);
    let area = union(&polygons).unsigned_area();
    Ok(StoreyFootprint { storey, name: s.name.clone(), elevation: s.elevation, cut_z: s.elevation + params.cut_offset, polygons, area, warnings })
}

/// 100 × area(∪target ∩ ∪reference) / area(∪reference), clamped to [0, 100].
pub fn overlap_percentage(target: &[Polygon2D], reference: &[Polygon2D]) -> Result<f64, FootprintError> {
    let r = union(reference);
    let ra = r.unsigned_area();
    if ra <= 1e-12 {
        return Err(FootprintError::ZeroReference);
    }
    let inter = union(target).intersection(&r).unsigned_area();
    Ok((100.0 * inter / ra).clamp(0.0, 100.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FootprintSet {
    pub params: FootprintParams,
    pub reference_storey: usize,
    /// One per storey, elevation order.
    pub footprints: Vec<StoreyFootprint>,
    /// Percent per storey against the reference.
    pub overlaps: Vec<f64>,
}

/// Footprints of every storey plus the overlap against `reference`.
pub fn overlap_table(model: &FederatedModel, params: &FootprintParams, reference: usize, mode: ExecMode) -> Result<FootprintSet, FootprintError> {
    params.validate()?;
    let idx: Vec<usize> = (0..model.storeys.len()).collect();
    // storeys are spread across threads; inner work stays sequential
    let inner = if idx.len() > 1 { ExecMode::Sequential } else { mode };
    let footprints: Vec<StoreyFootprint> = mode
        .map(&idx, |&i| match storey_footprint(model, i, params, inner) {
            Ok(f) => f,
            Err(e) => {
                let s = &model.storeys[i];
                StoreyFootprint { storey: i, name: s.name.clone(), elevation: s.elevation, cut_z: s.elevation + params.cut_offset, polygons: vec![], area: 0.0, warnings: vec![e.to_string()] }
            }
        })
        .into_iter()
        .collect();
    let reference_polys = &footprints[reference].polygons;
    let mut overlaps = Vec::with_capacity(footprints.len());
    for f in &footprints {
        let pct = match params.overlap_basis {
            OverlapBasis::Reference => overlap_percentage(&f.polygons, reference_polys)?,
            OverlapBasis::Target if f.polygons.is_empty() => 0.0,
            OverlapBasis::Target => overlap_percentage(reference_polys, &f.polygons)?,
        };
        overlaps.push(pct);
    }
    Ok(FootprintSet { params: *params, reference_storey: reference, footprints, overlaps })
}

/// `storey_name,elevation_m,polygon_count,overlap_pct`, one row per storey.
pub fn overlaps_csv(set: &FootprintSet) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record(["storey_name", "elevation_m", "polygon_count", "overlap_pct"]);
    for (f, pct) in set.footprints.iter().zip(&set.overlaps) {
        let _ = w.write_record([f.name.clone(), format!("{:.3}", f.elevation), f.polygons.len().to_string(), format!("{pct:.1}")]);
    }
    String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::step::load_ifc;
    use crate::storey::{federate, FederationOptions};
    use geobim_fixtures as fx;

    fn model(src: &str) -> FederatedModel {
        federate(vec![load_ifc(src.as_bytes(), "t", true).unwrap()], &FederationOptions::default()).unwrap()
    }

    fn sq(x: f64, y: f64, s: f64) -> Polygon2D {
        Polygon2D::new(vec![[x, y], [x + s, y], [x + s, y + s], [x, y + s]])
    }

    #[test]
    fn overlap_basics() {
        assert_eq!(overlap_percentage(&[sq(0.0, 0.0, 1.0)], &[sq(0.0, 0.0, 1.0)]).unwrap(), 100.0);
        assert_eq!(overlap_percentage(&[sq(5.0, 0.0, 1.0)], &[sq(0.0, 0.0, 1.0)]).unwrap(), 0.0);
        assert!((overlap_percentage(&[sq(0.5, 0.0, 1.0)], &[sq(0.0, 0.0, 1.0)]).unwrap() - 50.0).abs() < 1e-9);
        assert_eq!(overlap_percentage(&[sq(0.0, 0.0, 1.0)], &[]), Err(FootprintError::ZeroReference));
    }

    #[test]
    fn box_building_area_and_annex() {
        let m = model(&fx::box_building(false));
        let f = storey_footprint(&m, 0, &FootprintParams::default(), ExecMode::Sequential).unwrap();
        assert_eq!(f.polygons.len(), 1);
        assert!((f.area - 600.0).abs() / 600.0 < 0.02, "{}", f.area);
        let m = model(&fx::box_building(true));
        let f = storey_footprint(&m, 0, &FootprintParams::default(), ExecMode::Parallel).unwrap();
        assert_eq!(f.polygons.len(), 2);
        assert!(f.polygons.iter().all(|p| p.is_ccw() && p.is_simple()));
    }

    #[test]
    fn balcony_depends_on_cut() {
        let m = model(&fx::balcony_building());
        let at = |cut: f64| {
            let p = FootprintParams { cut_offset: cut, ..Default::default() };
            storey_footprint(&m, 0, &p, ExecMode::Sequential).unwrap().area
        };
        let (low, high) = (at(fx::balcony::CUT_INCLUDED), at(fx::balcony::CUT_EXCLUDED));
        assert!((low - high - fx::balcony::BALCONY_AREA).abs() < 1.0, "{low} {high}");
    }

    #[test]
    fn stepped_tower_table() {
        let m = model(&fx::stepped_tower(fx::LengthUnit::Metre));
        let set = overlap_table(&m, &FootprintParams::default(), 0, ExecMode::Parallel).unwrap();
        assert_eq!(set.overlaps.len(), fx::stepped::FLOORS);
        assert_eq!(set.overlaps[0], 100.0);
        assert!((set.overlaps[1] - 100.0).abs() < 1e-6);
        for pct in &set.overlaps[2..] {
            assert!((pct - 25.0).abs() <= 1.0, "{pct}");
        }
        let csv = overlaps_csv(&set);
        assert_eq!(csv.lines().count(), fx::stepped::FLOORS + 1);
        assert!(csv.lines().nth(3).unwrap().ends_with(",25.0"));
    }

    #[test]
    fn invalid_params() {
        let p = FootprintParams { hull_k: 2, ..Default::default() };
        assert!(matches!(p.validate(), Err(FootprintError::InvalidParams(_))));
    }
}
