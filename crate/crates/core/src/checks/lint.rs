use super::params::LintParams;
use super::report::{round_mm, LintFinding, ParkingCount};
use crate::geometry::{tessellate, Aabb, TessellationOptions};
use crate::step::StepValue;
use crate::storey::{ElementKey, FederatedModel};

fn finding(code: &str, message: String, value: Option<f64>, evidence: Vec<String>) -> LintFinding {
    LintFinding { code: code.into(), message, value, evidence }
}

/// Nearest-rank percentile of a sorted slice.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

fn describe(model: &FederatedModel, k: &ElementKey) -> String {
    match model.elements.get(k) {
        Some(e) if !e.name.is_empty() => format!("{} {} {}", model.label(k), e.class, e.name),
        Some(e) => format!("{} {}", model.label(k), e.class),
        None => model.label(k),
    }
}

fn site_objects(model: &FederatedModel, p: &LintParams) -> Option<LintFinding> {
    let boxes: Vec<(&ElementKey, Aabb)> = model.meshes.iter().map(|(k, m)| (k, m.bbox())).collect();
    if boxes.len() < 4 {
        return None;
    }
    let mut ext = [[0.0; 2]; 2];
    for axis in 0..2 {
        let mut c: Vec<f64> = boxes.iter().map(|(_, b)| b.center()[axis]).collect();
        c.sort_by(f64::total_cmp);
        ext[axis] = [percentile(&c, 0.1) - p.site_margin_m, percentile(&c, 0.9) + p.site_margin_m];
    }
    let far: Vec<String> = boxes
        .iter()
        .filter(|(_, b)| (0..2).any(|a| b.max[a] < ext[a][0] || b.min[a] > ext[a][1]))
        .map(|(k, _)| describe(model, k))
        .collect();
    (!far.is_empty()).then(|| {
        finding(
            "L1",
            format!("{} element(s) lie more than {} m outside the building extent; site objects belong in the site model", far.len(), p.site_margin_m),
            Some(far.len() as f64),
            far,
        )
    })
}

fn storey_grouping(model: &FederatedModel) -> Vec<LintFinding> {
    let mut out = Vec::new();
    for s in &model.storeys {
        if s.repair_notes.is_empty() {
            continue;
        }
        let evidence = s
            .repair_notes
            .iter()
            .map(|n| format!("{} {}: {}", describe(model, &n.element), serde_json::to_value(n.action).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(), n.reason))
            .collect();
        out.push(finding("L2", format!("storey {}: {} element(s) needed storey repair", s.name, s.repair_notes.len()), Some(s.repair_notes.len() as f64), evidence));
    }
    if !model.unassigned.is_empty() {
        let evidence = model.unassigned.iter().map(|k| describe(model, k)).collect();
        out.push(finding("L2", format!("{} element(s) are not assigned to any storey", model.unassigned.len()), Some(model.unassigned.len() as f64), evidence));
    }
    out
}

fn proxy_usage(model: &FederatedModel, p: &LintParams) -> Option<LintFinding> {
    let total = model.elements.len();
    let proxies: Vec<String> = model.elements.iter().filter(|(_, e)| e.class == "IFCBUILDINGELEMENTPROXY").map(|(k, _)| describe(model, k)).collect();
    if total == 0 || proxies.is_empty() {
        return None;
    }
    let ratio = proxies.len() as f64 / total as f64;
    (ratio > p.proxy_ratio_max).then(|| {
        finding("L3", format!("{} of {total} elements are generic proxies (ratio {ratio:.3})", proxies.len()), Some(round_mm(ratio)), proxies)
    })
}

fn hosted(class: &str) -> bool {
    class.starts_with("IFCDOOR") || class.starts_with("IFCWINDOW") || class == "IFCOPENINGELEMENT"
}

fn intersections(model: &FederatedModel, p: &LintParams) -> Option<LintFinding> {
    let mut boxes: Vec<(&ElementKey, Aabb, f64)> = model
        .meshes
        .iter()
        .filter(|(k, _)| !model.elements.get(k).is_some_and(|e| hosted(&e.class)))
        .map(|(k, m)| {
            let b = m.bbox();
            (k, b, b.volume())
        })
        .filter(|(_, _, v)| *v > 0.0)
        .collect();
    boxes.sort_by(|a, b| a.1.min[0].total_cmp(&b.1.min[0]).then(a.0.cmp(b.0)));
    let mut pairs = Vec::new();
    let mut examined = 0usize;
    let mut truncated = false;
    'outer: for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            if boxes[j].1.min[0] >= boxes[i].1.max[0] {
                break;
            }
            if examined == p.overlap_max_pairs {
                truncated = true;
                break 'outer;
            }
            examined += 1;
            let v = boxes[i].1.intersection(&boxes[j].1).volume();
            let r = v / boxes[i].2.min(boxes[j].2);
            if v > 0.0 && r > p.overlap_ratio {
                pairs.push(format!("{} x {} (ratio {:.3})", describe(model, boxes[i].0), describe(model, boxes[j].0), r.min(1.0)));
            }
        }
    }
    if pairs.is_empty() {
        return None;
    }
    let mut msg = format!("{} element pair(s) intersect by more than {:.0}% of the smaller bounding box", pairs.len(), 100.0 * p.overlap_ratio);
    if truncated {
        msg.push_str(&format!("; only the first {examined} candidate pairs were examined"));
    }
    Some(finding("L4", msg, Some(pairs.len() as f64), pairs))
}

fn georeferencing(model: &FederatedModel, p: &LintParams) -> Vec<LintFinding> {
    model
        .graphs
        .iter()
        .filter(|g| g.georef.level.as_number() < p.min_georef_level)
        .map(|g| {
            let level = g.georef.level.as_number();
            let shown = if level == 0 { "none".to_string() } else { level.to_string() };
            finding("L5", format!("{}: georeferencing level {shown} is below LoGeoRef {}", g.name, p.min_georef_level), Some(level as f64), vec![g.name.clone()])
        })
        .collect()
}

fn iou(a: &Aabb, b: &Aabb) -> f64 {
    let i = a.intersection(b).volume();
    let u = a.volume() + b.volume() - i;
    if u > 0.0 {
        i / u
    } else {
        0.0
    }
}

fn duplicate_spaces(model: &FederatedModel, p: &LintParams) -> Vec<LintFinding> {
    let opts = TessellationOptions::default();
    let mut spaces = Vec::new();
    for (mi, g) in model.graphs.iter().enumerate() {
        for s in g.of_class("IFCSPACE") {
            let Ok(mesh) = tessellate(g, s.id, &opts) else { continue };
            let name = g.attr(s, "Name").and_then(StepValue::as_str).unwrap_or("").to_string();
            spaces.push((ElementKey { model: mi, id: s.id }, name, mesh.bbox()));
        }
    }
    let mut out = Vec::new();
    for i in 0..spaces.len() {
        for j in i + 1..spaces.len() {
            let r = iou(&spaces[i].2, &spaces[j].2);
            if r <= p.space_iou {
                continue;
            }
            let (a, b) = (&spaces[i], &spaces[j]);
            let kind = if a.1 == b.1 { "duplicate spaces with the same label" } else { "co-located spaces with conflicting labels" };
            out.push(finding(
                "L6",
                format!("{kind}: {:?} and {:?} (overlap {:.3})", a.1, b.1, r),
                Some(round_mm(r)),
                vec![format!("{} {}", model.label(&a.0), a.1), format!("{} {}", model.label(&b.0), b.1)],
            ));
        }
    }
    out
}

fn frames(model: &FederatedModel) -> Vec<LintFinding> {
    let Some(first) = model.graphs.first() else { return vec![] };
    let mut out = Vec::new();
    for g in &model.graphs[1..] {
        let (a, b) = (first.georef.site_origin.unwrap_or([0.0; 3]), g.georef.site_origin.unwrap_or([0.0; 3]));
        let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
        if d > 1e-6 {
            out.push(finding("L9", format!("site origins of {} and {} differ by {d:.3} m", first.name, g.name), Some(round_mm(d)), vec![first.name.clone(), g.name.clone()]));
        }
        let (na, nb) = (first.georef.true_north.unwrap_or([0.0, 1.0]), g.georef.true_north.unwrap_or([0.0, 1.0]));
        let angle = (na[0] * nb[1] - na[1] * nb[0]).atan2(na[0] * nb[0] + na[1] * nb[1]).abs().to_degrees();
        if angle > 1e-6 {
            out.push(finding("L9", format!("true north of {} and {} differs by {angle:.3} degrees", first.name, g.name), Some(round_mm(angle)), vec![first.name.clone(), g.name.clone()]));
        }
    }
    out
}

/// Modelling-guideline findings for a federated model.
pub fn lint_model(model: &FederatedModel, parking: &ParkingCount, p: &LintParams) -> Vec<LintFinding> {
    let mut out = Vec::new();
    out.extend(site_objects(model, p));
    out.extend(storey_grouping(model));
    out.extend(proxy_usage(model, p));
    out.extend(intersections(model, p));
    out.extend(georeferencing(model, p));
    out.extend(duplicate_spaces(model, p));
    if parking.car_count == 0 {
        out.push(finding(
            "L8",
            "parking not machine-readable: no proxy or space carries a requirements Category of Parking".into(),
            Some(0.0),
            model.graphs.iter().map(|g| g.name.clone()).collect(),
        ));
    }
    out.extend(frames(model));
    if !model.unsupported.is_empty() {
        let evidence = model.unsupported.iter().map(|(k, why)| format!("{}: {why}", describe(model, k))).collect();
        out.push(finding("G1", format!("{} element(s) have geometry that could not be tessellated", model.unsupported.len()), Some(model.unsupported.len() as f64), evidence));
    }
    out
}
