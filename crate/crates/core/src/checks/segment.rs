use serde::{Deserialize, Serialize};

use crate::footprint::FootprintSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartRole {
    Base,
    Top,
    Other,
}

/// A run of consecutive storeys with similar footprint area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingPart {
    /// First and last storey index, inclusive.
    pub first: usize,
    pub last: usize,
    /// Median footprint area of the part, m².
    pub area_m2: f64,
    pub role: PartRole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartSegmentation {
    pub threshold_pct: f64,
    pub parts: Vec<BuildingPart>,
}

impl PartSegmentation {
    pub fn base(&self) -> Option<&BuildingPart> {
        self.parts.iter().find(|p| p.role == PartRole::Base)
    }

    pub fn tops(&self) -> impl Iterator<Item = &BuildingPart> {
        self.parts.iter().filter(|p| p.role == PartRole::Top)
    }

    /// Storey indices of all top parts, ascending.
    pub fn top_storeys(&self) -> Vec<usize> {
        self.tops().flat_map(|p| p.first..=p.last).collect()
    }

    pub fn role_of(&self, storey: usize) -> Option<PartRole> {
        self.parts.iter().find(|p| (p.first..=p.last).contains(&storey)).map(|p| p.role)
    }
}

/// |Δarea| relative to the larger of the two areas, percent.
pub fn area_change_pct(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        0.0
    } else {
        100.0 * (b - a).abs() / m
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Splits a storey sequence wherever the footprint area changes by more than
/// `threshold_pct` between neighbours.
///
/// Runs of two or more consecutive splits in the same direction, each below
/// twice the threshold, are a staggered (terraced) body and are merged back
/// into one part. The part holding `ground` is the base; parts above it are
/// top parts.
pub fn segment_areas(areas: &[f64], threshold_pct: f64, ground: usize) -> PartSegmentation {
    let n = areas.len();
    if n == 0 {
        return PartSegmentation { threshold_pct, parts: vec![] };
    }
    let mut split = vec![false; n];
    let mut sign = vec![0i8; n];
    let mut mild = vec![false; n];
    for i in 1..n {
        let c = area_change_pct(areas[i - 1], areas[i]);
        split[i] = c > threshold_pct;
        sign[i] = if areas[i] > areas[i - 1] { 1 } else { -1 };
        mild[i] = split[i] && c <= 2.0 * threshold_pct;
    }
    let mut i = 1;
    while i < n {
        if !mild[i] {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < n && mild[j + 1] && sign[j + 1] == sign[i] {
            j += 1;
        }
        if j > i {
            split[i..=j].iter_mut().for_each(|s| *s = false);
        }
        i = j + 1;
    }

    let mut parts = Vec::new();
    let mut first = 0;
    for i in 1..=n {
        if i == n || split[i] {
            parts.push(BuildingPart { first, last: i - 1, area_m2: median(&areas[first..i]), role: PartRole::Other });
            first = i;
        }
    }
    let ground = ground.min(n - 1);
    let base = parts.iter().position(|p| (p.first..=p.last).contains(&ground)).unwrap_or(0);
    for (k, p) in parts.iter_mut().enumerate() {
        p.role = match k.cmp(&base) {
            std::cmp::Ordering::Equal => PartRole::Base,
            std::cmp::Ordering::Greater => PartRole::Top,
            std::cmp::Ordering::Less => PartRole::Other,
        };
    }
    PartSegmentation { threshold_pct, parts }
}

/// Segmentation of the footprint areas of `set`.
pub fn segment_building_parts(set: &FootprintSet, threshold_pct: f64, ground: usize) -> PartSegmentation {
    let areas: Vec<f64> = set.footprints.iter().map(|f| f.area).collect();
    segment_areas(&areas, threshold_pct, ground)
}
