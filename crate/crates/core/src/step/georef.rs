use serde::{Deserialize, Serialize};

use super::value::StepValue;
use super::IfcGraph;

/// Staged georeferencing completeness of a model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LoGeoRef {
    #[default]
    #[serde(rename = "none")]
    None,
    #[serde(rename = "20")]
    L20,
    #[serde(rename = "30")]
    L30,
    #[serde(rename = "40")]
    L40,
    #[serde(rename = "50")]
    L50,
}

impl LoGeoRef {
    pub fn as_number(self) -> u8 {
        match self {
            LoGeoRef::None => 0,
            LoGeoRef::L20 => 20,
            LoGeoRef::L30 => 30,
            LoGeoRef::L40 => 40,
            LoGeoRef::L50 => 50,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GeoRef {
    pub ref_latitude: Option<f64>,
    pub ref_longitude: Option<f64>,
    /// Site placement origin in meters, in whatever CRS the author used.
    pub site_origin: Option<[f64; 3]>,
    /// Unit vector of geographic north in model XY.
    pub true_north: Option<[f64; 2]>,
    pub level: LoGeoRef,
}

fn compound_angle(v: &StepValue) -> Option<f64> {
    let parts = v.as_list()?;
    let scale = [1.0, 1.0 / 60.0, 1.0 / 3600.0, 1.0 / 3.6e9];
    let mut deg = 0.0;
    for (p, s) in parts.iter().zip(scale) {
        deg += p.as_f64()? * s;
    }
    Some(deg)
}

fn coords(graph: &IfcGraph, point: u64) -> Option<Vec<f64>> {
    let p = graph.get(point)?;
    graph.attr(p, "Coordinates")?.as_list()?.iter().map(StepValue::as_f64).collect()
}

/// Reads latitude/longitude, site origin and true north, and classifies the level.
pub fn extract_georeference(graph: &IfcGraph) -> GeoRef {
    let scale = graph.length_to_meters;
    let mut geo = GeoRef::default();

    if let Some(site) = graph.of_class("IFCSITE").next() {
        geo.ref_latitude = graph.attr(site, "RefLatitude").and_then(compound_angle);
        geo.ref_longitude = graph.attr(site, "RefLongitude").and_then(compound_angle);
        geo.site_origin = graph
            .attr(site, "ObjectPlacement")
            .and_then(StepValue::as_ref_id)
            .and_then(|lp| graph.deref(lp, 1))
            .and_then(|axes| graph.attr(axes, "Location")?.as_ref_id())
            .and_then(|p| coords(graph, p))
            .map(|c| {
                let g = |i: usize| c.get(i).copied().unwrap_or(0.0) * scale;
                [g(0), g(1), g(2)]
            });
    }

    let contexts: Vec<_> = graph.of_class("IFCGEOMETRICREPRESENTATIONCONTEXT").collect();
    let model_ctx = contexts
        .iter()
        .find(|c| graph.attr(c, "ContextType").and_then(|v| v.as_str()) == Some("Model"))
        .or_else(|| contexts.first())
        .copied();
    let mut wcs_offset = false;
    if let Some(ctx) = model_ctx {
        geo.true_north = graph
            .attr(ctx, "TrueNorth")
            .and_then(StepValue::as_ref_id)
            .and_then(|d| graph.get(d))
            .and_then(|d| graph.attr(d, "DirectionRatios")?.as_list().map(|l| l.to_vec()))
            .and_then(|l| {
                let x = l.first()?.as_f64()?;
                let y = l.get(1)?.as_f64()?;
                let n = x.hypot(y);
                (n > 0.0).then(|| [x / n, y / n])
            });
        wcs_offset = graph
            .attr(ctx, "WorldCoordinateSystem")
            .and_then(StepValue::as_ref_id)
            .and_then(|axes| graph.attr(graph.get(axes)?, "Location")?.as_ref_id())
            .and_then(|p| coords(graph, p))
            .is_some_and(|c| c.iter().any(|v| v.abs() > 1e-9));
    }

    let site_offset = geo.site_origin.is_some_and(|o| o.iter().any(|v| v.abs() > 1e-9));
    geo.level = if !graph.ids_of("IFCMAPCONVERSION").is_empty() {
        LoGeoRef::L50
    } else if wcs_offset {
        LoGeoRef::L40
    } else if site_offset {
        LoGeoRef::L30
    } else if geo.ref_latitude.is_some() && geo.ref_longitude.is_some() {
        LoGeoRef::L20
    } else {
        LoGeoRef::None
    };
    geo
}

impl IfcGraph {
    pub fn with_georeference(mut self) -> Self {
        self.georef = extract_georeference(&self);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::step::load_ifc;
    use geobim_fixtures as fx;

    #[test]
    fn lat_long_only_is_level_20() {
        let g = load_ifc(fx::lint_defects().as_bytes(), "lint", true).unwrap();
        assert_eq!(g.georef.level, LoGeoRef::L20);
        assert!((g.georef.ref_latitude.unwrap() - 52.37).abs() < 1e-6);
        assert!(g.georef.true_north.is_none());
    }

    #[test]
    fn projected_origin_is_level_30() {
        let g = load_ifc(fx::projected_site().as_bytes(), "proj", true).unwrap();
        assert_eq!(g.georef.level, LoGeoRef::L30);
        assert_eq!(g.georef.site_origin, Some([92_000.0, 437_000.0, 0.0]));
        let tn = g.georef.true_north.unwrap();
        assert!((tn[0] + 0.5).abs() < 1e-12 && (tn[0].hypot(tn[1]) - 1.0).abs() < 1e-12);
        assert!(g.georef.ref_longitude.unwrap() < 0.0);
    }

    #[test]
    fn nothing_is_level_none() {
        let g = load_ifc(fx::stepped_tower(fx::LengthUnit::Metre).as_bytes(), "s", true).unwrap();
        assert_eq!(g.georef.level, LoGeoRef::None);
        assert_eq!(g.georef.site_origin, Some([0.0; 3]));
    }
}
