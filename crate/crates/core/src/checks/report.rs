use serde::{Deserialize, Serialize};

use super::params::{LintParams, RegulationParams};
use super::segment::PartSegmentation;
use crate::footprint::FootprintParams;
use crate::storey::RepairParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    NeedsReview,
    Fail,
}

/// Lengths are kept to the millimetre.
pub fn round_mm(v: f64) -> f64 {
    round_to(v, 1000.0)
}

/// Percentages are kept to one decimal.
pub fn round_pct(v: f64) -> f64 {
    round_to(v, 10.0)
}

fn round_to(v: f64, scale: f64) -> f64 {
    // adding 0.0 folds -0.0 into 0.0
    (v * scale).round() / scale + 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    pub unit: String,
}

impl Measurement {
    pub fn length(name: &str, v: f64) -> Self {
        Measurement { name: name.into(), value: round_mm(v), unit: "m".into() }
    }

    pub fn area(name: &str, v: f64) -> Self {
        Measurement { name: name.into(), value: round_mm(v), unit: "m2".into() }
    }

    pub fn percent(name: &str, v: f64) -> Self {
        Measurement { name: name.into(), value: round_pct(v), unit: "%".into() }
    }

    pub fn ratio(name: &str, v: f64) -> Self {
        Measurement { name: name.into(), value: round_mm(v), unit: "ratio".into() }
    }

    pub fn count(name: &str, v: usize) -> Self {
        Measurement { name: name.into(), value: v as f64, unit: "count".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleEntry {
    pub rule: String,
    pub verdict: Verdict,
    pub values: Vec<Measurement>,
    /// Storey names, element labels and line labels backing the verdict.
    pub evidence: Vec<String>,
    pub notes: Vec<String>,
}

impl RuleEntry {
    pub fn new(rule: &str, verdict: Verdict) -> Self {
        RuleEntry { rule: rule.into(), verdict, values: vec![], evidence: vec![], notes: vec![] }
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|m| m.name == name).map(|m| m.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LintFinding {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub value: Option<f64>,
    pub evidence: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParkingCount {
    pub car_count: usize,
    pub car_elements: Vec<String>,
    /// Spaces whose name suggests bicycle parking. Never a verified count.
    pub bike_space_evidence: Vec<String>,
}

/// One row of the overlap table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapRow {
    pub storey: String,
    pub elevation_m: f64,
    pub area_m2: f64,
    pub polygon_count: usize,
    pub overlap_pct: f64,
    pub part: Option<super::PartRole>,
}

/// Parameters a report was computed with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsEcho {
    pub regulation: RegulationParams,
    pub footprint: FootprintParams,
    pub repair: Option<RepairParams>,
    pub lint: LintParams,
    pub reference_storey: String,
    pub ground_storey: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub models: Vec<String>,
    pub params: ParamsEcho,
    pub segmentation: PartSegmentation,
    pub overlaps: Vec<OverlapRow>,
    /// Ordered by rule id.
    pub entries: Vec<RuleEntry>,
    pub parking: ParkingCount,
    pub findings: Vec<LintFinding>,
}

impl CheckReport {
    /// Worst verdict over all entries.
    pub fn overall(&self) -> Verdict {
        self.entries.iter().map(|e| e.verdict).max().unwrap_or(Verdict::Pass)
    }

    pub fn entry(&self, rule: &str) -> Option<&RuleEntry> {
        self.entries.iter().find(|e| e.rule == rule)
    }
}
