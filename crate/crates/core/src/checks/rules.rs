use serde::{Deserialize, Serialize};

use super::params::{OverhangLimit, RegulationParams, Side};
use super::report::{round_mm, round_pct, Measurement, RuleEntry, Verdict};
use super::segment::PartSegmentation;
use super::CheckError;
use crate::footprint::{overlap_percentage, FootprintSet, Polygon2D};
use crate::step::schema::is_opening_or_furniture;
use crate::storey::{highest_element, max_height, FederatedModel};

pub const MAX_HEIGHT: &str = "max_height";
pub const BASE_HEIGHT: &str = "base_height";
pub const TOP_OVERLAP: &str = "top_overlap";
pub const OVERHANG: &str = "overhang";

/// Ceiling-ensemble thicknesses the offset is meant to approximate, m.
pub const CEILING_WINDOW: (f64, f64) = (0.5, 0.6);

pub fn height_verdict(height: f64, reg: &RegulationParams) -> Verdict {
    let h = round_mm(height);
    if h <= reg.max_height_m {
        Verdict::Pass
    } else if h <= reg.max_height_m + reg.derogation_margin_m {
        Verdict::NeedsReview
    } else {
        Verdict::Fail
    }
}

/// Height verdict with the evidence already resolved.
pub fn max_height_entry(height: f64, evidence: Vec<String>, reg: &RegulationParams) -> RuleEntry {
    let verdict = height_verdict(height, reg);
    let mut e = RuleEntry::new(MAX_HEIGHT, verdict);
    e.values.push(Measurement::length("height", height));
    e.values.push(Measurement::length("limit", reg.max_height_m));
    e.evidence = evidence;
    match verdict {
        Verdict::Pass => {}
        Verdict::NeedsReview => e.notes.push(format!(
            "exceeds the limit by {:.3} m, within the {:.3} m derogation margin: a derogation applies if the excess is mainly occupied by installations",
            round_mm(height - reg.max_height_m),
            reg.derogation_margin_m
        )),
        Verdict::Fail => e.notes.push(format!("exceeds the limit by {:.3} m, beyond the derogation margin", round_mm(height - reg.max_height_m))),
    }
    e
}

/// Highest point of the model above the ground storey.
pub fn check_max_height(model: &FederatedModel, reg: &RegulationParams) -> Result<RuleEntry, CheckError> {
    let h = max_height(model)?;
    let mut evidence = Vec::new();
    if let Some(k) = highest_element(model) {
        let storey = model.storey_holding(&k).map(|s| s.name.clone()).unwrap_or_else(|| "unassigned".into());
        let name = model.elements.get(&k).map(|e| e.name.as_str()).unwrap_or("");
        evidence.push(format!("element {} ({name}) on storey {storey}", model.label(&k)));
    }
    evidence.push(format!("ground storey {}", model.storeys[model.ground_storey].name));
    Ok(max_height_entry(h, evidence, reg))
}

/// Depth of the construction hanging below `storey`'s elevation where it
/// protrudes past the footprint of the storey below.
pub fn measure_ceiling_ensemble(model: &FederatedModel, storey: usize, lower: &[Polygon2D]) -> Option<f64> {
    if lower.is_empty() {
        return None;
    }
    let elev = model.storeys[storey].elevation;
    let lowest = model
        .storey_meshes(storey)
        .filter(|(k, _)| !model.elements.get(k).is_some_and(|e| is_opening_or_furniture(&e.class)))
        .flat_map(|(_, m)| m.vertices.iter())
        .filter(|p| p[2] >= elev - 1.5 && p[2] <= elev + 0.01)
        .filter(|p| lower.iter().all(|poly| !poly.contains([p[0], p[1]], 0.05)))
        .map(|p| p[2])
        .fold(f64::INFINITY, f64::min);
    let depth = elev - lowest;
    (depth.is_finite() && depth > 1e-9).then_some(depth)
}

/// Height of the base body: elevation of the lowest top storey minus the
/// ceiling-ensemble offset, above ground.
pub fn check_base_height(model: &FederatedModel, seg: &PartSegmentation, set: &FootprintSet, reg: &RegulationParams) -> RuleEntry {
    let Some(&lowest) = seg.top_storeys().first() else {
        let mut e = RuleEntry::new(BASE_HEIGHT, Verdict::Pass);
        e.notes.push("single-part building: no top part above the base, rule passes vacuously".into());
        return e;
    };
    let s = &model.storeys[lowest];
    let ground = model.ground_elevation();
    let raw = s.elevation - ground;
    let height = raw - reg.ceiling_offset_m;
    let verdict = if round_mm(height) <= reg.base_max_height_m { Verdict::Pass } else { Verdict::Fail };
    let mut e = RuleEntry::new(BASE_HEIGHT, verdict);
    e.values.push(Measurement::length("elevation_difference", raw));
    e.values.push(Measurement::length("base_height", height));
    e.values.push(Measurement::length("limit", reg.base_max_height_m));
    e.evidence.push(format!("lowest top storey {}", s.name));
    e.evidence.push(format!("ground storey {}", model.storeys[model.ground_storey].name));
    let lower = lowest.checked_sub(1).and_then(|i| set.footprints.get(i)).map(|f| f.polygons.as_slice()).unwrap_or(&[]);
    match measure_ceiling_ensemble(model, lowest, lower) {
        Some(d) => {
            e.values.push(Measurement::length("ceiling_ensemble", d));
            let d = round_mm(d);
            if d < CEILING_WINDOW.0 || d > CEILING_WINDOW.1 {
                e.notes.push(format!(
                    "measured ceiling ensemble {d:.3} m lies outside the {:.1}-{:.1} m window; the offset may not fit this model",
                    CEILING_WINDOW.0, CEILING_WINDOW.1
                ));
            }
        }
        None => e.notes.push("ceiling ensemble not measurable: nothing protrudes past the storey below".into()),
    }
    if verdict == Verdict::Fail {
        e.notes.push(format!("exceeds the limit by {:.3} m", round_mm(height - reg.base_max_height_m)));
    }
    e
}

/// Overlap of every top storey with the highest base storey.
pub fn check_top_overlap(set: &FootprintSet, seg: &PartSegmentation, reg: &RegulationParams) -> RuleEntry {
    let limit = 100.0 * reg.top_to_base_max_ratio;
    let tops = seg.top_storeys();
    let base = match seg.base() {
        Some(b) if !tops.is_empty() => b,
        _ => {
            let mut e = RuleEntry::new(TOP_OVERLAP, Verdict::Pass);
            e.notes.push("single-part building: no top part above the base, rule passes vacuously".into());
            return e;
        }
    };
    let reference = &set.footprints[base.last];
    let mut overlaps = Vec::new();
    for &i in &tops {
        match overlap_percentage(&set.footprints[i].polygons, &reference.polygons) {
            Ok(p) => overlaps.push((i, p)),
            Err(err) => {
                let mut e = RuleEntry::new(TOP_OVERLAP, Verdict::NeedsReview);
                e.values.push(Measurement::area("reference_area", reference.area));
                e.evidence.push(format!("reference storey {}", reference.name));
                e.notes.push(err.to_string());
                return e;
            }
        }
    }
    let (max_i, max_p) = overlaps.iter().copied().fold((tops[0], f64::NEG_INFINITY), |m, o| if o.1 > m.1 { o } else { m });
    let violating: Vec<(usize, f64)> = overlaps.iter().copied().filter(|(_, p)| round_pct(*p) > limit).collect();
    let verdict = if violating.is_empty() { Verdict::Pass } else { Verdict::Fail };
    let mut e = RuleEntry::new(TOP_OVERLAP, verdict);
    e.values.push(Measurement::percent("max_overlap", max_p));
    e.values.push(Measurement::percent("limit", limit));
    e.values.push(Measurement::area("reference_area", reference.area));
    e.evidence.push(format!("reference storey {}", reference.name));
    if violating.is_empty() {
        e.evidence.push(format!("storey {}: {:.1}%", set.footprints[max_i].name, round_pct(max_p)));
    }
    for (i, p) in violating {
        e.evidence.push(format!("storey {}: {:.1}%", set.footprints[i].name, round_pct(p)));
    }
    e
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreyDistance {
    pub storey: String,
    pub distance_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverhangResult {
    pub label: String,
    pub line: [[f64; 2]; 2],
    pub side: Side,
    pub limit_m: f64,
    pub per_storey: Vec<StoreyDistance>,
    pub max_m: f64,
    pub max_storey: Option<String>,
}

fn excluded(class: &str, exclude: &[String]) -> bool {
    exclude.iter().any(|c| class.eq_ignore_ascii_case(c))
}

/// Largest protrusion of element vertices past each line, per target storey.
pub fn overhang_distances(model: &FederatedModel, targets: &[usize], lines: &[OverhangLimit], exclude: &[String]) -> Result<Vec<OverhangResult>, CheckError> {
    for l in lines {
        l.validate()?;
    }
    let mut per_storey: Vec<(String, Vec<f64>)> = Vec::new();
    for &t in targets {
        let s = model.storeys.get(t).ok_or_else(|| CheckError::InvalidParams(format!("storey index {t} out of range")))?;
        let mut maxima = vec![0.0f64; lines.len()];
        let mut any = false;
        for (k, mesh) in model.storey_meshes(t) {
            if model.elements.get(k).is_some_and(|e| excluded(&e.class, exclude)) {
                continue;
            }
            for p in &mesh.vertices {
                any = true;
                for (m, l) in maxima.iter_mut().zip(lines) {
                    *m = m.max(l.outward_distance([p[0], p[1]]));
                }
            }
        }
        if !any {
            return Err(CheckError::NoVertices(s.name.clone()));
        }
        per_storey.push((s.name.clone(), maxima));
    }
    Ok(lines
        .iter()
        .enumerate()
        .map(|(j, l)| {
            let rows: Vec<StoreyDistance> = per_storey.iter().map(|(n, m)| StoreyDistance { storey: n.clone(), distance_m: round_mm(m[j]) }).collect();
            let best = rows.iter().filter(|r| r.distance_m > 0.0).fold(None::<&StoreyDistance>, |b, r| match b {
                Some(b) if b.distance_m >= r.distance_m => Some(b),
                _ => Some(r),
            });
            OverhangResult {
                label: l.label.clone(),
                line: l.line,
                side: l.side,
                limit_m: l.limit_m,
                max_m: best.map_or(0.0, |b| b.distance_m),
                max_storey: best.map(|b| b.storey.clone()),
                per_storey: rows,
            }
        })
        .collect())
}

pub fn check_overhang(results: &[OverhangResult], reg: &RegulationParams) -> RuleEntry {
    let mut e = RuleEntry::new(OVERHANG, Verdict::Pass);
    if results.is_empty() {
        e.notes.push("no overhang lines configured; rule not evaluated".into());
        return e;
    }
    for r in results {
        e.values.push(Measurement::length(&format!("{}: overhang", r.label), r.max_m));
        e.values.push(Measurement::length(&format!("{}: limit", r.label), r.limit_m));
        let at = r.max_storey.as_deref().unwrap_or("none");
        e.evidence.push(format!("{}: storey {at} at {:.3} m", r.label, r.max_m));
        if round_mm(r.max_m) > r.limit_m {
            e.verdict = Verdict::Fail;
            e.notes.push(format!("{}: exceeds the {:.3} m limit by {:.3} m", r.label, r.limit_m, round_mm(r.max_m - r.limit_m)));
        }
    }
    if reg.overhang_exclude_classes.is_empty() {
        e.notes.push("all element classes measured; balconies included".into());
    } else {
        e.notes.push(format!("excluded classes: {}", reg.overhang_exclude_classes.join(", ")));
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(label: &str, max: f64, limit: f64) -> OverhangResult {
        OverhangResult {
            label: label.into(),
            line: [[0.0, 0.0], [1.0, 0.0]],
            side: Side::Left,
            limit_m: limit,
            per_storey: vec![StoreyDistance { storey: "27".into(), distance_m: max }],
            max_m: max,
            max_storey: Some("27".into()),
        }
    }

    #[test]
    fn height_verdicts() {
        let reg = RegulationParams::default();
        assert_eq!(height_verdict(99.0, &reg), Verdict::Pass);
        assert_eq!(height_verdict(100.0, &reg), Verdict::Pass);
        assert_eq!(height_verdict(103.47, &reg), Verdict::NeedsReview);
        assert_eq!(height_verdict(120.0, &reg), Verdict::Fail);
        let e = max_height_entry(103.47, vec!["x".into()], &reg);
        assert!(e.notes[0].contains("derogation"));
        assert_eq!(e.value("height"), Some(103.47));
    }

    #[test]
    fn overhang_limits() {
        let reg = RegulationParams::default();
        let e = check_overhang(&[result("Hertekade side", 10.5, 10.0)], &reg);
        assert_eq!(e.verdict, Verdict::Fail);
        assert!(e.notes[0].ends_with("by 0.500 m"), "{:?}", e.notes);
        let e = check_overhang(&[result("Boompjes side", 6.4, 5.0)], &reg);
        assert!(e.notes[0].ends_with("by 1.400 m"));
        assert_eq!(check_overhang(&[result("Boompjes side", 4.9, 5.0)], &reg).verdict, Verdict::Pass);
        assert_eq!(check_overhang(&[], &reg).verdict, Verdict::Pass);
    }
}
