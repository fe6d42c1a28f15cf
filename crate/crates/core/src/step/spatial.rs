use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use super::schema::is_element_class;
use super::value::StepValue;
use super::{IfcGraph, StepError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoreyNode {
    pub id: u64,
    pub name: String,
    /// Declared elevation in meters, if the file carries one.
    pub elevation: Option<f64>,
    /// Elements contained in the storey, including those contained in its spaces
    /// and aggregated parts of either.
    pub contained: Vec<u64>,
    /// Elements only referenced by the storey.
    pub referenced: Vec<u64>,
    pub spaces: Vec<u64>,
}

/// Project / site / building / storey hierarchy with element assignment.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SpatialTree {
    pub project: Option<u64>,
    pub sites: Vec<u64>,
    pub buildings: Vec<u64>,
    /// Storeys in file order.
    pub storeys: Vec<StoreyNode>,
    /// Elements not assigned to any storey (site or building level, or orphans).
    pub unassigned: Vec<u64>,
    /// Elements linked to more than one storey.
    pub multi_storey: BTreeSet<u64>,
}

fn refs_of(v: Option<&StepValue>) -> Vec<u64> {
    let mut out = Vec::new();
    if let Some(v) = v {
        v.refs(&mut out);
    }
    out
}

/// Builds the spatial tree. Fails with `NoBuilding` when the file has no building.
pub fn extract_spatial_structure(graph: &IfcGraph) -> Result<SpatialTree, StepError> {
    let buildings = graph.ids_of("IFCBUILDING").to_vec();
    if buildings.is_empty() {
        return Err(StepError::NoBuilding);
    }
    let scale = graph.length_to_meters;
    let mut tree = SpatialTree {
        project: graph.ids_of("IFCPROJECT").first().copied(),
        sites: graph.ids_of("IFCSITE").to_vec(),
        buildings,
        ..Default::default()
    };

    let mut children: HashMap<u64, Vec<u64>> = HashMap::new();
    for rel in graph.of_class("IFCRELAGGREGATES").chain(graph.of_class("IFCRELNESTS")) {
        let Some(parent) = graph.attr(rel, "RelatingObject").and_then(StepValue::as_ref_id) else { continue };
        children.entry(parent).or_default().extend(refs_of(graph.attr(rel, "RelatedObjects")));
    }
    let storey_index: HashMap<u64, usize> = graph.ids_of("IFCBUILDINGSTOREY").iter().enumerate().map(|(i, id)| (*id, i)).collect();

    // space -> storey through aggregation, spaces may nest
    let mut space_storey: HashMap<u64, usize> = HashMap::new();
    for (&storey, &idx) in &storey_index {
        let mut stack = children.get(&storey).cloned().unwrap_or_default();
        while let Some(c) = stack.pop() {
            if graph.get(c).is_some_and(|i| i.is("IFCSPACE")) && space_storey.insert(c, idx).is_none() {
                stack.extend(children.get(&c).into_iter().flatten());
            }
        }
    }

    for storey in graph.of_class("IFCBUILDINGSTOREY") {
        tree.storeys.push(StoreyNode {
            id: storey.id,
            name: graph.attr(storey, "Name").and_then(StepValue::as_str).unwrap_or("").to_string(),
            elevation: graph.attr(storey, "Elevation").and_then(StepValue::as_f64).map(|e| e * scale),
            contained: Vec::new(),
            referenced: Vec::new(),
            spaces: Vec::new(),
        });
    }
    let mut spaces: Vec<(u64, usize)> = space_storey.iter().map(|(s, i)| (*s, *i)).collect();
    spaces.sort_unstable();
    for (space, idx) in spaces {
        tree.storeys[idx].spaces.push(space);
    }

    let mut links: BTreeMap<u64, BTreeSet<usize>> = BTreeMap::new();
    let mut add = |tree: &mut SpatialTree, el: u64, idx: usize, referenced: bool| {
        let node = &mut tree.storeys[idx];
        let list = if referenced { &mut node.referenced } else { &mut node.contained };
        if !list.contains(&el) {
            list.push(el);
        }
        links.entry(el).or_default().insert(idx);
    };

    for (class, referenced) in [("IFCRELCONTAINEDINSPATIALSTRUCTURE", false), ("IFCRELREFERENCEDINSPATIALSTRUCTURE", true)] {
        for rel in graph.of_class(class) {
            let Some(structure) = graph.attr(rel, "RelatingStructure").and_then(StepValue::as_ref_id) else { continue };
            let idx = storey_index.get(&structure).or_else(|| space_storey.get(&structure)).copied();
            let Some(idx) = idx else { continue };
            for el in refs_of(graph.attr(rel, "RelatedElements")) {
                // parts follow their assembly
                let mut stack = vec![el];
                let mut seen = BTreeSet::new();
                while let Some(e) = stack.pop() {
                    if !seen.insert(e) {
                        continue;
                    }
                    if graph.get(e).is_some_and(|i| is_element_class(&i.class)) {
                        add(&mut tree, e, idx, referenced);
                    }
                    stack.extend(children.get(&e).into_iter().flatten());
                }
            }
        }
    }

    // an element both contained and referenced in the same storey counts once as contained
    for node in &mut tree.storeys {
        let contained: BTreeSet<u64> = node.contained.iter().copied().collect();
        node.referenced.retain(|e| !contained.contains(e));
    }

    tree.multi_storey = links.iter().filter(|(_, s)| s.len() > 1).map(|(e, _)| *e).collect();
    tree.unassigned = graph
        .instances()
        .filter(|i| is_element_class(&i.class) && !links.contains_key(&i.id))
        .map(|i| i.id)
        .collect();
    Ok(tree)
}

/// Single-value properties per object: `pset name -> property name -> value`.
pub type PropertyIndex = HashMap<u64, BTreeMap<String, BTreeMap<String, StepValue>>>;

pub fn property_index(graph: &IfcGraph) -> PropertyIndex {
    let mut out: PropertyIndex = HashMap::new();
    for rel in graph.of_class("IFCRELDEFINESBYPROPERTIES") {
        let Some(pset) = graph
            .attr(rel, "RelatingPropertyDefinition")
            .and_then(StepValue::as_ref_id)
            .and_then(|p| graph.get(p))
            .filter(|p| p.is("IFCPROPERTYSET"))
        else {
            continue;
        };
        let pset_name = graph.attr(pset, "Name").and_then(StepValue::as_str).unwrap_or("").to_string();
        let mut props = BTreeMap::new();
        for prop in refs_of(graph.attr(pset, "HasProperties")).into_iter().filter_map(|p| graph.get(p)) {
            if !prop.is("IFCPROPERTYSINGLEVALUE") {
                continue;
            }
            let Some(name) = graph.attr(prop, "Name").and_then(StepValue::as_str) else { continue };
            let value = graph.attr(prop, "NominalValue").cloned().unwrap_or(StepValue::Unset);
            props.insert(name.to_string(), value);
        }
        for obj in refs_of(graph.attr(rel, "RelatedObjects")) {
            out.entry(obj).or_default().entry(pset_name.clone()).or_default().extend(props.clone());
        }
    }
    out
}
