//! Federation of discipline models, storey repair and global height.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::ExecMode;
use crate::geometry::{model_bbox, resolve_placement, tessellate_graph, GeometryError, Mesh, TessellationOptions};
use crate::step::{extract_spatial_structure, IfcGraph, SpatialTree, StepError, StepValue};

/// Maximum site-origin discrepancy between federated files, m.
pub const FRAME_TOLERANCE: f64 = 0.01;

#[derive(Debug, Error)]
pub enum StoreyError {
    #[error(transparent)]
    Step(#[from] StepError),
    #[error("site origins of {a} and {b} differ by {distance:.3} m")]
    FrameMismatch { a: String, b: String, distance: f64 },
    #[error("no building storeys in the model")]
    NoStoreys,
    #[error("model has no geometry")]
    EmptyModel,
    #[error("unknown storey {0:?}")]
    UnknownStorey(String),
}

impl From<GeometryError> for StoreyError {
    fn from(_: GeometryError) -> Self {
        StoreyError::EmptyModel
    }
}

/// An element across federated files: (file index, instance id).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ElementKey {
    pub model: usize,
    pub id: u64,
}

impl fmt::Display for ElementKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:#{}", self.model, self.id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElementInfo {
    pub class: String,
    pub name: String,
    /// Related to more than one storey by the spatial relationships.
    pub multi_storey: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepairAction {
    Kept,
    Evicted,
    Imported,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairNote {
    pub element: ElementKey,
    pub action: RepairAction,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Storey {
    pub name: String,
    pub elevation: f64,
    /// Contained elements.
    pub element_ids: BTreeSet<ElementKey>,
    /// Elements only referenced here (they belong to another storey).
    pub referenced: BTreeSet<ElementKey>,
    pub repair_notes: Vec<RepairNote>,
    /// Source storey instances as (file index, id).
    pub sources: Vec<(usize, u64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpanPolicy {
    #[default]
    Keep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RepairParams {
    pub elev_buffer: f64,
    pub min_elements: usize,
    pub span_policy: SpanPolicy,
}

impl Default for RepairParams {
    fn default() -> Self {
        RepairParams { elev_buffer: 0.5, min_elements: 5, span_policy: SpanPolicy::Keep }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FederationOptions {
    pub merge_tolerance: f64,
    /// Storey name used as ground instead of the one nearest elevation 0.
    pub ground_storey: Option<String>,
    pub tessellation: TessellationOptions,
    pub mode: ExecMode,
}

impl Default for FederationOptions {
    fn default() -> Self {
        FederationOptions { merge_tolerance: 0.05, ground_storey: None, tessellation: TessellationOptions::default(), mode: ExecMode::default() }
    }
}

#[derive(Debug, Clone)]
pub struct FederatedModel {
    pub graphs: Vec<IfcGraph>,
    pub spatial: Vec<SpatialTree>,
    pub elements: BTreeMap<ElementKey, ElementInfo>,
    pub meshes: BTreeMap<ElementKey, Mesh>,
    /// Elements whose representation could not be tessellated, with the reason.
    pub unsupported: BTreeMap<ElementKey, String>,
    /// Sorted by elevation, ties by name.
    pub storeys: Vec<Storey>,
    pub ground_storey: usize,
    pub unassigned: BTreeSet<ElementKey>,
    pub repair: Option<RepairParams>,
}

impl FederatedModel {
    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn storey_index(&self, name: &str) -> Option<usize> {
        self.storeys.iter().position(|s| s.name == name)
    }

    /// Resolves a storey by name, by index, or by the keywords `ground`, `lowest`, `highest`.
    pub fn find_storey(&self, selector: &str) -> Result<usize, StoreyError> {
        if let Some(i) = self.storey_index(selector) {
            return Ok(i);
        }
        match selector {
            "ground" => Ok(self.ground_storey),
            "lowest" if !self.storeys.is_empty() => Ok(0),
            "highest" if !self.storeys.is_empty() => Ok(self.storeys.len() - 1),
            _ => selector
                .parse::<usize>()
                .ok()
                .filter(|i| *i < self.storeys.len())
                .ok_or_else(|| StoreyError::UnknownStorey(selector.to_string())),
        }
    }

    pub fn storey_meshes(&self, storey: usize) -> impl Iterator<Item = (&ElementKey, &Mesh)> {
        self.storeys[storey].element_ids.iter().filter_map(|k| self.meshes.get_key_value(k))
    }

    /// `file#id` label used in evidence.
    pub fn label(&self, key: &ElementKey) -> String {
        match self.graphs.get(key.model) {
            Some(g) if !g.name.is_empty() => format!("{}#{}", g.name, key.id),
            _ => key.to_string(),
        }
    }

    pub fn ground_elevation(&self) -> f64 {
        self.storeys[self.ground_storey].elevation
    }

    pub fn set_ground(&mut self, selector: &str) -> Result<(), StoreyError> {
        self.ground_storey = self.find_storey(selector)?;
        Ok(())
    }

    fn storey_of(&self, key: &ElementKey) -> Option<usize> {
        self.storeys.iter().position(|s| s.element_ids.contains(key))
    }
}

fn site_origin(g: &IfcGraph) -> [f64; 3] {
    g.georef.site_origin.unwrap_or([0.0; 3])
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut i = i;
    while parent[i] != r {
        let next = parent[i];
        parent[i] = r;
        i = next;
    }
    r
}

/// Pools the files of one BIM into a single storey list.
pub fn federate(graphs: Vec<IfcGraph>, opts: &FederationOptions) -> Result<FederatedModel, StoreyError> {
    if graphs.is_empty() {
        return Err(StoreyError::NoStoreys);
    }
    for i in 0..graphs.len() {
        for j in i + 1..graphs.len() {
            let (a, b) = (site_origin(&graphs[i]), site_origin(&graphs[j]));
            let distance = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
            if distance > FRAME_TOLERANCE {
                return Err(StoreyError::FrameMismatch { a: graphs[i].name.clone(), b: graphs[j].name.clone(), distance });
            }
        }
    }
    let spatial: Vec<SpatialTree> = graphs.iter().map(extract_spatial_structure).collect::<Result<_, _>>()?;

    // storey candidates across files
    struct Cand {
        model: usize,
        id: u64,
        name: String,
        elevation: f64,
    }
    let mut cands = Vec::new();
    for (m, tree) in spatial.iter().enumerate() {
        for node in &tree.storeys {
            let elevation = match node.elevation {
                Some(e) => e,
                None => resolve_placement(&graphs[m], node.id).map(|t| t.translation_part()[2]).unwrap_or(0.0),
            };
            cands.push(Cand { model: m, id: node.id, name: node.name.clone(), elevation });
        }
    }
    if cands.is_empty() {
        return Err(StoreyError::NoStoreys);
    }
    let mut parent: Vec<usize> = (0..cands.len()).collect();
    for i in 0..cands.len() {
        for j in i + 1..cands.len() {
            let same_name = !cands[i].name.is_empty() && cands[i].name == cands[j].name;
            if same_name || (cands[i].elevation - cands[j].elevation).abs() < opts.merge_tolerance {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[rj.max(ri)] = ri.min(rj);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..cands.len() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut storeys: Vec<Storey> = groups
        .values()
        .map(|members| {
            let first = &cands[members[0]];
            Storey {
                name: first.name.clone(),
                elevation: first.elevation,
                element_ids: BTreeSet::new(),
                referenced: BTreeSet::new(),
                repair_notes: Vec::new(),
                sources: members.iter().map(|&i| (cands[i].model, cands[i].id)).collect(),
            }
        })
        .collect();
    storeys.sort_by(|a, b| a.elevation.total_cmp(&b.elevation).then_with(|| a.name.cmp(&b.name)));
    let storey_of_source: BTreeMap<(usize, u64), usize> =
        storeys.iter().enumerate().flat_map(|(i, s)| s.sources.iter().map(move |src| (*src, i))).collect();

    let mut elements = BTreeMap::new();
    let mut unassigned = BTreeSet::new();
    for (m, tree) in spatial.iter().enumerate() {
        let g = &graphs[m];
        let mut placed: BTreeMap<u64, usize> = BTreeMap::new();
        let mut nodes: Vec<_> = tree.storeys.iter().map(|n| (storey_of_source[&(m, n.id)], n)).collect();
        nodes.sort_by_key(|(i, _)| *i);
        for (idx, node) in &nodes {
            for &e in &node.contained {
                placed.entry(e).or_insert(*idx);
            }
        }
        for (idx, node) in &nodes {
            for &e in node.contained.iter().chain(&node.referenced) {
                if placed.get(&e) != Some(idx) {
                    // referenced-only elements belong to the first storey naming them
                    if placed.contains_key(&e) {
                        storeys[*idx].referenced.insert(ElementKey { model: m, id: e });
                    } else {
                        placed.insert(e, *idx);
                    }
                }
            }
        }
        for (e, idx) in &placed {
            storeys[*idx].element_ids.insert(ElementKey { model: m, id: *e });
        }
        for inst in g.instances().filter(|i| crate::step::schema::is_element_class(&i.class)) {
            let key = ElementKey { model: m, id: inst.id };
            elements.insert(
                key,
                ElementInfo {
                    class: inst.class.clone(),
                    name: g.attr(inst, "Name").and_then(StepValue::as_str).unwrap_or("").to_string(),
                    multi_storey: tree.multi_storey.contains(&inst.id),
                },
            );
            if !placed.contains_key(&inst.id) {
                unassigned.insert(key);
            }
        }
    }

    let mut meshes = BTreeMap::new();
    let mut unsupported = BTreeMap::new();
    for (m, g) in graphs.iter().enumerate() {
        let geo = tessellate_graph(g, &opts.tessellation, opts.mode);
        meshes.extend(geo.meshes.into_iter().map(|(id, mesh)| (ElementKey { model: m, id }, mesh)));
        unsupported.extend(geo.unsupported.into_iter().map(|(id, e)| (ElementKey { model: m, id }, e.to_string())));
    }

    let mut model = FederatedModel { graphs, spatial, elements, meshes, unsupported, storeys, ground_storey: 0, unassigned, repair: None };
    model.ground_storey = match &opts.ground_storey {
        Some(name) => model.find_storey(name)?,
        None => nearest_zero(&model.storeys),
    };
    Ok(model)
}

fn nearest_zero(storeys: &[Storey]) -> usize {
    (0..storeys.len()).min_by(|&a, &b| storeys[a].elevation.abs().total_cmp(&storeys[b].elevation.abs())).unwrap_or(0)
}

/// Index of the storey whose [elevation, next elevation) interval contains `z`.
fn interval_of(storeys: &[Storey], z: f64) -> usize {
    storeys.iter().rposition(|s| z >= s.elevation).unwrap_or(0)
}

fn z_range(mesh: &Mesh) -> (f64, f64) {
    let b = mesh.bbox();
    (b.min[2], b.max[2])
}

/// Applies the dissolve, multi-span and elevation-buffer rules.
pub fn repair_storeys(mut model: FederatedModel, params: &RepairParams) -> FederatedModel {
    model.repair = Some(*params);
    if model.storeys.len() < 2 {
        return model;
    }
    let ground_name = model.storeys[model.ground_storey].name.clone();

    // dissolve sparse storeys, never all of them and never the ground storey
    let sparse: Vec<usize> = (0..model.storeys.len())
        .filter(|&i| i != model.ground_storey && model.storeys[i].element_ids.len() < params.min_elements)
        .collect();
    if sparse.len() < model.storeys.len() {
        let mut orphans = Vec::new();
        for &i in sparse.iter().rev() {
            let s = model.storeys.remove(i);
            orphans.extend(s.element_ids.into_iter().map(|k| (k, s.name.clone())));
        }
        model.ground_storey = model.storey_index(&ground_name).unwrap_or(0);
        for (key, from) in orphans {
            match model.meshes.get(&key) {
                Some(mesh) => {
                    let (lo, hi) = z_range(mesh);
                    let to = interval_of(&model.storeys, 0.5 * (lo + hi));
                    let reason = format!("storey {from} dissolved (fewer than {} elements)", params.min_elements);
                    let s = &mut model.storeys[to];
                    s.element_ids.insert(key);
                    s.repair_notes.push(RepairNote { element: key, action: RepairAction::Imported, reason });
                }
                None => {
                    model.unassigned.insert(key);
                }
            }
        }
        for s in &mut model.storeys {
            let ids = &s.element_ids;
            s.referenced.retain(|k| !ids.contains(k));
        }
    }

    let elevations: Vec<f64> = model.storeys.iter().map(|s| s.elevation).collect();
    let mut moves = Vec::new();
    for (i, storey) in model.storeys.iter().enumerate() {
        for key in &storey.element_ids {
            let Some(mesh) = model.meshes.get(key) else { continue };
            let (lo, hi) = z_range(mesh);
            let spans = elevations[1..].iter().any(|&b| lo < b - params.elev_buffer && hi > b + params.elev_buffer);
            if spans {
                moves.push((*key, i, None));
                continue;
            }
            let c = 0.5 * (lo + hi);
            let upper = elevations.get(i + 1).copied().unwrap_or(f64::INFINITY);
            if c < elevations[i] - params.elev_buffer || c > upper + params.elev_buffer {
                moves.push((*key, i, Some(interval_of(&model.storeys, c))));
            }
        }
    }
    for (key, from, to) in moves {
        match to {
            None => model.storeys[from].repair_notes.push(RepairNote {
                element: key,
                action: RepairAction::Kept,
                reason: "multi-span: element extends over more than one storey interval".into(),
            }),
            Some(to) if to != from => {
                let (from_name, to_name) = (model.storeys[from].name.clone(), model.storeys[to].name.clone());
                model.storeys[from].element_ids.remove(&key);
                model.storeys[from].repair_notes.push(RepairNote {
                    element: key,
                    action: RepairAction::Evicted,
                    reason: format!("vertical centroid outside storey band, moved to {to_name}"),
                });
                model.storeys[to].element_ids.insert(key);
                model.storeys[to].referenced.remove(&key);
                model.storeys[to].repair_notes.push(RepairNote {
                    element: key,
                    action: RepairAction::Imported,
                    reason: format!("vertical centroid inside storey band, moved from {from_name}"),
                });
            }
            Some(_) => {}
        }
    }
    model
}

/// Top of the highest element minus the ground storey elevation.
pub fn max_height(model: &FederatedModel) -> Result<f64, StoreyError> {
    let b = model_bbox(model.meshes.values())?;
    Ok(b.max[2] - model.ground_elevation())
}

/// Element holding the highest vertex, for evidence.
pub fn highest_element(model: &FederatedModel) -> Option<ElementKey> {
    model.meshes.iter().max_by(|a, b| a.1.bbox().max[2].total_cmp(&b.1.bbox().max[2])).map(|(k, _)| *k)
}

impl FederatedModel {
    /// Storey currently holding `key`, if any.
    pub fn storey_holding(&self, key: &ElementKey) -> Option<&Storey> {
        self.storey_of(key).map(|i| &self.storeys[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::step::load_ifc;
    use geobim_fixtures as fx;

    fn load(src: &str, name: &str) -> IfcGraph {
        load_ifc(src.as_bytes(), name, true).unwrap()
    }

    #[test]
    fn federation_merges_by_name() {
        let [a, s, f] = fx::federated_bim([0.0; 3]);
        let graphs = vec![load(&a, "arch"), load(&s, "struct"), load(&f, "facade")];
        let counts: usize = graphs.iter().map(|g| g.instances().filter(|i| crate::step::schema::is_element_class(&i.class)).count()).sum();
        let m = federate(graphs, &FederationOptions::default()).unwrap();
        assert_eq!(m.storeys.len(), 3);
        assert_eq!(m.element_count(), counts);
        assert!(m.storeys.iter().all(|s| s.sources.len() == 3));
        let models: BTreeSet<usize> = m.storeys[0].element_ids.iter().map(|k| k.model).collect();
        assert_eq!(models.len(), 3);
        assert_eq!(m.ground_storey, 0);
    }

    #[test]
    fn federation_rejects_offset_frames() {
        let [a, s, _] = fx::federated_bim([5.0, 0.0, 0.0]);
        let err = federate(vec![load(&a, "arch"), load(&s, "struct")], &FederationOptions::default()).unwrap_err();
        assert!(matches!(err, StoreyError::FrameMismatch { distance, .. } if (distance - 5.0).abs() < 1e-9));
    }

    #[test]
    fn repair_fixture() {
        let m = federate(vec![load(&fx::storey_defects(), "d")], &FederationOptions::default()).unwrap();
        let total = m.element_count();
        let r = repair_storeys(m, &RepairParams::default());
        let names: Vec<&str> = r.storeys.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["04", "05", "06", "07", "08"]);
        let find = |name: &str| *r.elements.iter().find(|(_, i)| i.name == name).unwrap().0;
        let column = find(fx::repair::MISPLACED_COLUMN);
        assert_eq!(r.storey_holding(&column).unwrap().name, "07");
        let shaft = find(fx::repair::SHAFT);
        let holder = r.storey_holding(&shaft).unwrap();
        assert_eq!(holder.name, "06");
        assert!(holder.repair_notes.iter().any(|n| n.element == shaft && n.action == RepairAction::Kept));
        let stray = find("stray-1");
        assert_eq!(r.storey_holding(&stray).unwrap().name, "06");
        // conservation
        let assigned: usize = r.storeys.iter().map(|s| s.element_ids.len()).sum();
        assert_eq!(assigned + r.unassigned.len(), total);
    }

    #[test]
    fn height_of_peak_fixture_in_both_units() {
        let m = federate(vec![load(&fx::peak_height_tower(fx::LengthUnit::Metre), "m")], &FederationOptions::default()).unwrap();
        let mm = federate(vec![load(&fx::peak_height_tower(fx::LengthUnit::Millimetre), "mm")], &FederationOptions::default()).unwrap();
        let (h, hmm) = (max_height(&m).unwrap(), max_height(&mm).unwrap());
        assert!((h - fx::peak::TOP_Z).abs() < 1e-9);
        assert!((h - hmm).abs() < 1e-6);
    }

    #[test]
    fn ground_override_shifts_datum() {
        let src = fx::uniform_tower();
        let mut m = federate(vec![load(&src, "u")], &FederationOptions::default()).unwrap();
        let h0 = max_height(&m).unwrap();
        m.set_ground("01").unwrap();
        assert!((max_height(&m).unwrap() - (h0 - m.storeys[1].elevation)).abs() < 1e-12);
        assert!(m.set_ground("nope").is_err());
    }
}
