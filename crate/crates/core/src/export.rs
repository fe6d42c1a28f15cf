//! WKT footprints for GIS, JSON and CSV reports.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checks::{round_mm, CheckReport};
use crate::footprint::{Polygon2D, StoreyFootprint};
use crate::step::{GeoRef, LoGeoRef};
use crate::storey::FederatedModel;

#[derive(Debug, Error, PartialEq)]
pub enum ExportError {
    #[error("site-projected output needs a site origin (LoGeoRef 30 or better)")]
    NoGeoreference,
    #[error("report is not valid JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    #[default]
    ModelLocal,
    SiteProjected,
}

impl Frame {
    pub fn as_str(self) -> &'static str {
        match self {
            Frame::ModelLocal => "model-local",
            Frame::SiteProjected => "site-projected",
        }
    }
}

impl std::str::FromStr for Frame {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "model-local" | "local" => Ok(Frame::ModelLocal),
            "site-projected" | "projected" => Ok(Frame::SiteProjected),
            _ => Err(format!("unknown frame {s:?}, expected model-local or site-projected")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WktRecord {
    pub storey_name: String,
    pub frame: Frame,
    pub wkt: String,
    pub base_elevation_m: Option<f64>,
    pub top_elevation_m: Option<f64>,
}

/// Planar affine from model coordinates to the site frame: rotate so true
/// north points up, then translate by the site origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteAffine {
    pub angle: f64,
    pub origin: [f64; 3],
}

impl SiteAffine {
    pub fn from_georef(g: &GeoRef) -> Result<Self, ExportError> {
        let origin = g.site_origin.filter(|_| g.level >= LoGeoRef::L30).ok_or(ExportError::NoGeoreference)?;
        let [tx, ty] = g.true_north.unwrap_or([0.0, 1.0]);
        Ok(SiteAffine { angle: std::f64::consts::FRAC_PI_2 - ty.atan2(tx), origin })
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.angle.sin_cos();
        [c * p[0] - s * p[1] + self.origin[0], s * p[0] + c * p[1] + self.origin[1]]
    }
}

fn num(v: f64) -> String {
    format!("{:.3}", round_mm(v))
}

fn ring_text(ring: &[[f64; 2]], map: &dyn Fn([f64; 2]) -> [f64; 2]) -> String {
    let mut pts: Vec<String> = ring.iter().map(|p| map(*p)).map(|q| format!("{} {}", num(q[0]), num(q[1]))).collect();
    if let Some(first) = pts.first().cloned() {
        pts.push(first);
    }
    format!("(({}))", pts.join(", "))
}

/// `POLYGON`, `MULTIPOLYGON` or `POLYGON EMPTY` for one storey's polygons.
pub fn polygons_wkt(polys: &[Polygon2D], map: &dyn Fn([f64; 2]) -> [f64; 2]) -> String {
    match polys {
        [] => "POLYGON EMPTY".to_string(),
        [p] => format!("POLYGON {}", ring_text(&p.ring, map)),
        many => format!("MULTIPOLYGON ({})", many.iter().map(|p| ring_text(&p.ring, map)).collect::<Vec<_>>().join(", ")),
    }
}

/// One record per storey. Elevations are the storey elevation as base; tops
/// are filled by [`with_storey_tops`].
pub fn to_wkt(footprints: &[StoreyFootprint], georef: Option<&GeoRef>, frame: Frame) -> Result<Vec<WktRecord>, ExportError> {
    let affine = match frame {
        Frame::ModelLocal => None,
        Frame::SiteProjected => Some(SiteAffine::from_georef(georef.ok_or(ExportError::NoGeoreference)?)?),
    };
    let dz = affine.map_or(0.0, |a| a.origin[2]);
    let map = |p: [f64; 2]| affine.map_or(p, |a| a.apply(p));
    Ok(footprints
        .iter()
        .map(|f| WktRecord {
            storey_name: f.name.clone(),
            frame,
            wkt: polygons_wkt(&f.polygons, &map),
            base_elevation_m: Some(round_mm(f.elevation + dz)),
            top_elevation_m: None,
        })
        .collect())
}

/// Sets each record's top elevation to the highest vertex of its storey.
pub fn with_storey_tops(mut records: Vec<WktRecord>, model: &FederatedModel, frame: Frame) -> Vec<WktRecord> {
    let dz = match frame {
        Frame::SiteProjected => model.graphs.first().and_then(|g| g.georef.site_origin).map_or(0.0, |o| o[2]),
        Frame::ModelLocal => 0.0,
    };
    for r in &mut records {
        let Some(i) = model.storey_index(&r.storey_name) else { continue };
        let top = model.storey_meshes(i).map(|(_, m)| m.bbox().max[2]).fold(f64::NEG_INFINITY, f64::max);
        r.top_elevation_m = top.is_finite().then(|| round_mm(top + dz));
    }
    records
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// `storey,frame,wkt,base_elevation_m,top_elevation_m`.
pub fn wkt_csv(records: &[WktRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record(["storey", "frame", "wkt", "base_elevation_m", "top_elevation_m"]);
    for r in records {
        let _ = w.write_record([r.storey_name.as_str(), r.frame.as_str(), &r.wkt, &opt(r.base_elevation_m), &opt(r.top_elevation_m)]);
    }
    String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Pretty JSON with a trailing newline, or the overlap table with part roles.
pub fn report_serialize(report: &CheckReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut v = serde_json::to_vec_pretty(report).unwrap_or_default();
            v.push(b'\n');
            v
        }
        ReportFormat::Csv => {
            let limit = 100.0 * report.params.regulation.top_to_base_max_ratio;
            let mut w = csv::Writer::from_writer(Vec::new());
            let _ = w.write_record(["storey_name", "elevation_m", "area_m2", "polygon_count", "overlap_pct", "part", "overlap_verdict"]);
            for r in &report.overlaps {
                let part = r.part.map(|p| serde_json::to_value(p).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()).unwrap_or_default();
                let verdict = match r.part {
                    Some(crate::checks::PartRole::Top) if r.overlap_pct > limit => "fail",
                    Some(crate::checks::PartRole::Top) => "pass",
                    _ => "",
                };
                let _ = w.write_record([
                    r.storey.clone(),
                    num(r.elevation_m),
                    num(r.area_m2),
                    r.polygon_count.to_string(),
                    format!("{:.1}", r.overlap_pct),
                    part,
                    verdict.to_string(),
                ]);
            }
            w.into_inner().unwrap_or_default()
        }
    }
}

pub fn report_from_json(bytes: &[u8]) -> Result<CheckReport, ExportError> {
    serde_json::from_slice(bytes).map_err(|e| ExportError::Json(e.to_string()))
}
