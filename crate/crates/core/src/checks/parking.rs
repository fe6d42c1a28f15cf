use super::report::ParkingCount;
use crate::step::{property_index, IfcGraph, StepValue};

const PARKING_CLASSES: [&str; 2] = ["IFCBUILDINGELEMENTPROXY", "IFCSPACE"];

fn name_of(graph: &IfcGraph, id: u64) -> String {
    graph.get(id).and_then(|i| graph.attr(i, "Name")).and_then(StepValue::as_str).unwrap_or("").to_string()
}

/// Car places modelled as proxies or spaces with a requirements `Category`
/// of `Parking`, plus spaces whose name hints at bicycle storage.
pub fn count_parking_spaces(graphs: &[IfcGraph], bike_keywords: &[String]) -> ParkingCount {
    let mut out = ParkingCount { car_count: 0, car_elements: vec![], bike_space_evidence: vec![] };
    for g in graphs {
        let props = property_index(g);
        let mut cars: Vec<u64> = props
            .iter()
            .filter(|(id, _)| g.get(**id).is_some_and(|i| PARKING_CLASSES.contains(&i.class.as_str())))
            .filter(|(_, psets)| {
                psets.iter().any(|(pset, p)| {
                    pset.to_ascii_lowercase().contains("productrequirements")
                        && p.get("Category").and_then(StepValue::as_str).is_some_and(|c| c.trim().eq_ignore_ascii_case("parking"))
                })
            })
            .map(|(id, _)| *id)
            .collect();
        cars.sort_unstable();
        out.car_count += cars.len();
        out.car_elements.extend(cars.iter().map(|id| format!("{}#{id}", g.name)));

        for space in g.of_class("IFCSPACE") {
            let name = name_of(g, space.id);
            let lower = name.to_lowercase();
            if bike_keywords.iter().any(|k| !k.is_empty() && lower.contains(&k.to_lowercase())) {
                out.bike_space_evidence.push(format!("{}#{} {name}", g.name, space.id));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::step::load_ifc;
    use geobim_fixtures as fx;

    #[test]
    fn garage_has_57_places_and_bike_storage() {
        let g = load_ifc(fx::parking_garage().as_bytes(), "garage", true).unwrap();
        let p = count_parking_spaces(&[g], &["fietsenstalling".into()]);
        assert_eq!(p.car_count, fx::parking::CARS);
        assert_eq!(p.bike_space_evidence.len(), 1);
        assert!(p.bike_space_evidence[0].ends_with("Fietsenstalling 01"));
    }

    #[test]
    fn no_semantics_no_cars() {
        let g = load_ifc(fx::uniform_tower().as_bytes(), "u", true).unwrap();
        let p = count_parking_spaces(&[g], &["fietsenstalling".into()]);
        assert_eq!(p.car_count, 0);
        assert!(p.bike_space_evidence.is_empty());
    }
}
