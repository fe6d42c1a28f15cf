//! Loaded models and the response bodies shared by CLI and HTTP.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::SystemTime;

use geobim_core::checks::{check_overhang, round_mm, OverhangLimit, OverhangResult, RuleEntry};
use geobim_core::export::{report_serialize, ReportFormat};
use geobim_core::footprint::{FootprintParams, FootprintSet};
use geobim_core::pipeline::{self, Config, PipelineError};
use geobim_core::storey::{FederatedModel, RepairNote};
use geobim_core::ExecMode;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// SHA-256 over file names and contents, in order.
pub fn fingerprint(files: &[(String, Vec<u8>)]) -> String {
    let mut h = Sha256::new();
    for (name, bytes) in files {
        h.update((name.len() as u64).to_le_bytes());
        h.update(name.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    hex(&h.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Stable digest of every footprint parameter and the reference selector.
pub fn param_hash(params: &FootprintParams, reference: &str) -> String {
    let canonical = serde_json::to_string(&(params, reference)).unwrap_or_default();
    hex(&Sha256::digest(canonical.as_bytes()))
}

pub struct Session {
    pub id: String,
    pub files: Vec<String>,
    pub fingerprint: String,
    pub model: FederatedModel,
    pub config: Config,
    pub created: SystemTime,
    cache: Mutex<HashMap<String, Arc<FootprintSet>>>,
}

impl Session {
    pub fn load(id: String, files: &[(String, Vec<u8>)], config: Config, mode: ExecMode) -> Result<Self, PipelineError> {
        let model = pipeline::load_model(files, &config, mode)?;
        Ok(Session {
            id,
            files: files.iter().map(|(n, _)| n.clone()).collect(),
            fingerprint: fingerprint(files),
            model,
            config,
            created: SystemTime::now(),
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Footprints for `params` and `reference`, and whether they came from the cache.
    pub fn footprints(&self, params: &FootprintParams, reference: &str, mode: ExecMode) -> Result<(Arc<FootprintSet>, bool), PipelineError> {
        let key = param_hash(params, reference);
        if let Some(set) = self.cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok((set.clone(), true));
        }
        let cfg = Config { footprint: *params, reference_storey: reference.to_string(), ..self.config.clone() };
        let set = Arc::new(pipeline::footprints(&self.model, &cfg, mode)?);
        self.cache.lock().unwrap_or_else(|e| e.into_inner()).insert(key, set.clone());
        Ok((set, false))
    }

    pub fn cached_sets(&self) -> usize {
        self.cache.lock().map(|c| c.len()).unwrap_or(0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoreyInfo {
    pub index: usize,
    pub name: String,
    pub elevation_m: f64,
    pub element_count: usize,
    pub referenced_count: usize,
    pub ground: bool,
    pub repair_notes: Vec<RepairNote>,
}

pub fn storey_infos(model: &FederatedModel) -> Vec<StoreyInfo> {
    model
        .storeys
        .iter()
        .enumerate()
        .map(|(i, s)| StoreyInfo {
            index: i,
            name: s.name.clone(),
            elevation_m: round_mm(s.elevation),
            element_count: s.element_ids.len(),
            referenced_count: s.referenced.len(),
            ground: i == model.ground_storey,
            repair_notes: s.repair_notes.clone(),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FootprintOut {
    pub name: String,
    pub elevation_m: f64,
    pub cut_z_m: f64,
    pub area_m2: f64,
    /// One closed-implicitly CCW ring per polygon.
    pub polygons: Vec<Vec<[f64; 2]>>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FootprintsOut {
    pub reference_storey: String,
    pub params: FootprintParams,
    pub storeys: Vec<FootprintOut>,
}

pub fn footprints_out(model: &FederatedModel, set: &FootprintSet) -> FootprintsOut {
    FootprintsOut {
        reference_storey: model.storeys[set.reference_storey].name.clone(),
        params: set.params,
        storeys: set
            .footprints
            .iter()
            .map(|f| FootprintOut {
                name: f.name.clone(),
                elevation_m: round_mm(f.elevation),
                cut_z_m: round_mm(f.cut_z),
                area_m2: round_mm(f.area),
                polygons: f.polygons.iter().map(|p| p.ring.iter().map(|q| [round_mm(q[0]), round_mm(q[1])]).collect()).collect(),
                warnings: f.warnings.clone(),
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverlapOut {
    pub storey: String,
    pub elevation_m: f64,
    pub polygon_count: usize,
    pub overlap_pct: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverlapsOut {
    pub reference_storey: String,
    pub rows: Vec<OverlapOut>,
}

pub fn overlaps_out(model: &FederatedModel, set: &FootprintSet) -> OverlapsOut {
    OverlapsOut {
        reference_storey: model.storeys[set.reference_storey].name.clone(),
        rows: set
            .footprints
            .iter()
            .zip(&set.overlaps)
            .map(|(f, p)| OverlapOut {
                storey: f.name.clone(),
                elevation_m: round_mm(f.elevation),
                polygon_count: f.polygons.len(),
                overlap_pct: geobim_core::checks::round_pct(*p),
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverhangOut {
    pub storeys: Vec<String>,
    pub lines: Vec<OverhangResult>,
    pub entry: RuleEntry,
}

/// Overhang distances for explicit storey selectors, or the default targets.
pub fn overhang_out(model: &FederatedModel, cfg: &Config, lines: &[OverhangLimit], storeys: Option<&[String]>, mode: ExecMode) -> Result<OverhangOut, PipelineError> {
    for l in lines {
        l.validate().map_err(PipelineError::Check)?;
    }
    let targets = match storeys {
        Some(sel) if !sel.is_empty() => sel.iter().map(|s| model.find_storey(s)).collect::<Result<Vec<_>, _>>()?,
        _ => {
            let set = pipeline::footprints(model, cfg, mode)?;
            pipeline::default_overhang_targets(model, &set, cfg)
        }
    };
    let results = pipeline::overhang(model, &targets, lines, cfg)?;
    let reg = geobim_core::checks::RegulationParams { overhang_limits: lines.to_vec(), ..cfg.regulation.clone() };
    Ok(OverhangOut { storeys: targets.iter().map(|&i| model.storeys[i].name.clone()).collect(), entry: check_overhang(&results, &reg), lines: results })
}

/// The JSON body of a check report, identical for CLI and HTTP.
pub fn check_body(session_model: &FederatedModel, cfg: &Config, set: &FootprintSet) -> Result<Vec<u8>, PipelineError> {
    let report = pipeline::check_with_footprints(session_model, set, cfg)?;
    Ok(report_serialize(&report, ReportFormat::Json))
}

/// Pretty JSON plus newline, the layout of every JSON artifact.
pub fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).unwrap_or_default();
    out.push(b'\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_hash_is_stable_and_sensitive() {
        let p = FootprintParams::default();
        assert_eq!(param_hash(&p, "ground"), param_hash(&p, "ground"));
        assert_ne!(param_hash(&p, "ground"), param_hash(&p, "00"));
        let q = FootprintParams { hull_k: 8, ..p };
        assert_ne!(param_hash(&p, "ground"), param_hash(&q, "ground"));
    }

    #[test]
    fn fingerprint_depends_on_bytes() {
        let a = vec![("a.ifc".to_string(), b"x".to_vec())];
        let b = vec![("a.ifc".to_string(), b"y".to_vec())];
        assert_eq!(fingerprint(&a), fingerprint(&a));
        assert_ne!(fingerprint(&a), fingerprint(&b));
        assert_eq!(fingerprint(&a).len(), 64);
    }
}
