use super::value::EntityInstance;
use super::{IfcGraph, StepError};

fn si_prefix(prefix: &str) -> Option<f64> {
    Some(match prefix {
        "EXA" => 1e18,
        "PETA" => 1e15,
        "TERA" => 1e12,
        "GIGA" => 1e9,
        "MEGA" => 1e6,
        "KILO" => 1e3,
        "HECTO" => 1e2,
        "DECA" => 1e1,
        "DECI" => 1e-1,
        "CENTI" => 1e-2,
        "MILLI" => 1e-3,
        "MICRO" => 1e-6,
        "NANO" => 1e-9,
        "PICO" => 1e-12,
        "FEMTO" => 1e-15,
        "ATTO" => 1e-18,
        _ => return None,
    })
}

/// Meters per unit for a length unit instance, `None` if it is not a length unit.
fn length_factor(graph: &IfcGraph, unit: &EntityInstance, depth: usize) -> Option<f64> {
    if depth > 8 || graph.attr(unit, "UnitType").and_then(|v| v.as_enum()) != Some("LENGTHUNIT") {
        return None;
    }
    match unit.class.as_str() {
        "IFCSIUNIT" => {
            if graph.attr(unit, "Name").and_then(|v| v.as_enum()) != Some("METRE") {
                return None;
            }
            match graph.attr(unit, "Prefix").and_then(|v| v.as_enum()) {
                None => Some(1.0),
                Some(p) => si_prefix(p),
            }
        }
        "IFCCONVERSIONBASEDUNIT" => {
            let measure = graph.get(graph.attr(unit, "ConversionFactor")?.as_ref_id()?)?;
            let value = graph.attr(measure, "ValueComponent")?.as_f64()?;
            let base = graph.get(graph.attr(measure, "UnitComponent")?.as_ref_id()?)?;
            Some(value * length_factor(graph, base, depth + 1)?)
        }
        _ => None,
    }
}

/// Meters per file length unit, read from the project's unit assignment.
pub fn resolve_units(graph: &IfcGraph) -> Result<f64, StepError> {
    let assignments: Vec<u64> = {
        let from_project: Vec<u64> = graph
            .of_class("IFCPROJECT")
            .filter_map(|p| graph.attr(p, "UnitsInContext")?.as_ref_id())
            .collect();
        if from_project.is_empty() {
            graph.ids_of("IFCUNITASSIGNMENT").to_vec()
        } else {
            from_project
        }
    };
    for assignment in assignments {
        let Some(assignment) = graph.get(assignment) else { continue };
        let Some(units) = graph.attr(assignment, "Units").and_then(|v| v.as_list()) else { continue };
        for unit in units.iter().filter_map(|u| graph.get(u.as_ref_id()?)) {
            if let Some(f) = length_factor(graph, unit, 0) {
                if f > 0.0 && f.is_finite() {
                    return Ok(f);
                }
            }
        }
    }
    Err(StepError::NoLengthUnit)
}

impl IfcGraph {
    /// Resolves and stores the length unit scale.
    pub fn with_resolved_units(mut self) -> Result<Self, StepError> {
        self.length_to_meters = resolve_units(&self)?;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::step::parse_step;

    fn graph_with(units: &str) -> IfcGraph {
        let src = format!(
            "ISO-10303-21;HEADER;FILE_SCHEMA(('IFC4'));ENDSEC;DATA;{units}\n#9=IFCPROJECT('g',$,'p',$,$,$,$,$,#8);ENDSEC;END-ISO-10303-21;"
        );
        parse_step(src.as_bytes(), true).unwrap()
    }

    #[test]
    fn metre_is_identity() {
        let g = graph_with("#1=IFCSIUNIT(*,.LENGTHUNIT.,$,.METRE.);#8=IFCUNITASSIGNMENT((#1));");
        assert_eq!(resolve_units(&g).unwrap(), 1.0);
    }

    #[test]
    fn milli_prefix() {
        let g = graph_with("#2=IFCSIUNIT(*,.PLANEANGLEUNIT.,$,.RADIAN.);#1=IFCSIUNIT(*,.LENGTHUNIT.,.MILLI.,.METRE.);#8=IFCUNITASSIGNMENT((#2,#1));");
        assert_eq!(resolve_units(&g).unwrap(), 0.001);
    }

    #[test]
    fn conversion_based_foot() {
        let g = graph_with(
            "#1=IFCSIUNIT(*,.LENGTHUNIT.,$,.METRE.);#2=IFCMEASUREWITHUNIT(IFCLENGTHMEASURE(0.3048),#1);\
             #3=IFCDIMENSIONALEXPONENTS(1,0,0,0,0,0,0);#4=IFCCONVERSIONBASEDUNIT(#3,.LENGTHUNIT.,'FOOT',#2);#8=IFCUNITASSIGNMENT((#4));",
        );
        assert!((resolve_units(&g).unwrap() - 0.3048).abs() < 1e-15);
    }

    #[test]
    fn missing_length_unit() {
        let g = graph_with("#2=IFCSIUNIT(*,.PLANEANGLEUNIT.,$,.RADIAN.);#8=IFCUNITASSIGNMENT((#2));");
        assert!(matches!(resolve_units(&g), Err(StepError::NoLengthUnit)));
    }
}
