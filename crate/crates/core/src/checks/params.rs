use serde::{Deserialize, Serialize};

use super::CheckError;

/// Which side of a directed facade line the street lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl std::str::FromStr for Side {
    type Err = CheckError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "left" | "l" => Ok(Side::Left),
            "right" | "r" => Ok(Side::Right),
            other => Err(CheckError::InvalidParams(format!("side must be left or right, got {other:?}"))),
        }
    }
}

/// Street limits used when a line is given without one.
pub const DEFAULT_STREET_LIMITS: [(&str, f64); 2] = [("Boompjes side", 5.0), ("Hertekade side", 10.0)];

/// A facade line of the base and the overhang permitted past it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverhangLimit {
    pub label: String,
    /// Start and end point, m. The street lies on `side` looking from start to end.
    pub line: [[f64; 2]; 2],
    pub side: Side,
    pub limit_m: f64,
}

impl OverhangLimit {
    /// Parses `x1,y1,x2,y2,side,label[,limit]`. A missing limit is taken
    /// from [`DEFAULT_STREET_LIMITS`] by label.
    pub fn parse(spec: &str) -> Result<Self, CheckError> {
        let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
        if parts.len() < 6 || parts.len() > 7 {
            return Err(CheckError::InvalidParams(format!("line {spec:?}: expected x1,y1,x2,y2,side,label,limit")));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| CheckError::InvalidParams(format!("line {spec:?}: {s:?} is not a number")));
        let line = [[num(parts[0])?, num(parts[1])?], [num(parts[2])?, num(parts[3])?]];
        let side = parts[4].parse()?;
        let label = parts[5].to_string();
        let limit_m = match parts.get(6) {
            Some(s) => num(s)?,
            None => DEFAULT_STREET_LIMITS
                .iter()
                .find(|(l, _)| l.eq_ignore_ascii_case(&label))
                .map(|(_, v)| *v)
                .ok_or_else(|| CheckError::InvalidParams(format!("line {spec:?}: no limit and no default for {label:?}")))?,
        };
        let l = OverhangLimit { label, line, side, limit_m };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<(), CheckError> {
        let [a, b] = self.line;
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(CheckError::InvalidParams(format!("line {:?} has non-finite coordinates", self.label)));
        }
        if a == b {
            return Err(CheckError::InvalidParams(format!("line {:?} has equal endpoints", self.label)));
        }
        if !(self.limit_m > 0.0 && self.limit_m.is_finite()) {
            return Err(CheckError::InvalidParams(format!("line {:?}: limit must be > 0", self.label)));
        }
        Ok(())
    }

    /// Distance of `p` past the line towards the street; 0 when inboard.
    pub fn outward_distance(&self, p: [f64; 2]) -> f64 {
        let [a, b] = self.line;
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = dx.hypot(dy);
        let left = ((p[1] - a[1]) * dx - (p[0] - a[0]) * dy) / len;
        let d = match self.side {
            Side::Left => left,
            Side::Right => -left,
        };
        d.max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegulationParams {
    pub max_height_m: f64,
    /// Heights up to `max_height_m + derogation_margin_m` are sent to review.
    pub derogation_margin_m: f64,
    pub base_max_height_m: f64,
    pub top_to_base_max_ratio: f64,
    /// Depth of the ceiling ensemble below the storey elevation, m.
    pub ceiling_offset_m: f64,
    pub part_split_threshold_pct: f64,
    pub overhang_limits: Vec<OverhangLimit>,
    /// Element classes left out of overhang measurement, e.g. `IFCRAILING`.
    pub overhang_exclude_classes: Vec<String>,
    pub bike_keywords: Vec<String>,
}

impl Default for RegulationParams {
    fn default() -> Self {
        RegulationParams {
            max_height_m: 100.0,
            derogation_margin_m: 5.0,
            base_max_height_m: 17.0,
            top_to_base_max_ratio: 0.5,
            ceiling_offset_m: 0.55,
            part_split_threshold_pct: 5.0,
            overhang_limits: Vec::new(),
            overhang_exclude_classes: Vec::new(),
            bike_keywords: vec!["fietsenstalling".into()],
        }
    }
}

impl RegulationParams {
    pub fn validate(&self) -> Result<(), CheckError> {
        let bad = |m: &str| Err(CheckError::InvalidParams(m.to_string()));
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.max_height_m) || !pos(self.base_max_height_m) {
            return bad("height limits must be > 0");
        }
        if !(self.top_to_base_max_ratio > 0.0 && self.top_to_base_max_ratio <= 1.0) {
            return bad("top_to_base_max_ratio must be in (0, 1]");
        }
        if !(self.derogation_margin_m >= 0.0 && self.derogation_margin_m.is_finite()) {
            return bad("derogation_margin_m must be >= 0");
        }
        if !(self.ceiling_offset_m >= 0.0 && self.ceiling_offset_m.is_finite()) {
            return bad("ceiling_offset_m must be >= 0");
        }
        if !(self.part_split_threshold_pct >= 0.0 && self.part_split_threshold_pct.is_finite()) {
            return bad("part_split_threshold_pct must be >= 0");
        }
        self.overhang_limits.iter().try_for_each(OverhangLimit::validate)
    }
}

/// Thresholds of the model lint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LintParams {
    /// Margin around the robust building extent beyond which elements count as site objects, m.
    pub site_margin_m: f64,
    /// Proxy share above which a finding is raised.
    pub proxy_ratio_max: f64,
    /// Bbox intersection volume over the smaller bbox volume.
    pub overlap_ratio: f64,
    /// Upper bound on bbox pairs examined for intersections.
    pub overlap_max_pairs: usize,
    /// Bbox intersection over union above which two spaces are duplicates.
    pub space_iou: f64,
    pub min_georef_level: u8,
}

impl Default for LintParams {
    fn default() -> Self {
        LintParams { site_margin_m: 10.0, proxy_ratio_max: 0.0, overlap_ratio: 0.5, overlap_max_pairs: 200_000, space_iou: 0.9, min_georef_level: 30 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_line_with_and_without_limit() {
        let l = OverhangLimit::parse("0,20,30,20,left,north,10").unwrap();
        assert_eq!(l.line, [[0.0, 20.0], [30.0, 20.0]]);
        assert_eq!(l.side, Side::Left);
        assert_eq!(l.limit_m, 10.0);
        assert_eq!(OverhangLimit::parse("0,0,1,0,right,Boompjes side").unwrap().limit_m, 5.0);
        assert!(OverhangLimit::parse("0,0,0,0,right,x,5").is_err());
        assert!(OverhangLimit::parse("0,0,1,0,up,x,5").is_err());
        assert!(OverhangLimit::parse("0,0,1,0,left,x").is_err());
    }

    #[test]
    fn outward_distance_by_side() {
        let l = OverhangLimit::parse("0,0,10,0,left,n,5").unwrap();
        assert_eq!(l.outward_distance([3.0, 2.5]), 2.5);
        assert_eq!(l.outward_distance([3.0, -2.5]), 0.0);
        let r = OverhangLimit { side: Side::Right, ..l };
        assert_eq!(r.outward_distance([3.0, -2.5]), 2.5);
    }

    #[test]
    fn regulation_defaults_validate() {
        let p = RegulationParams::default();
        assert!(p.validate().is_ok());
        assert!(RegulationParams { top_to_base_max_ratio: 1.5, ..p.clone() }.validate().is_err());
        assert!(RegulationParams { max_height_m: 0.0, ..p }.validate().is_err());
    }
}
