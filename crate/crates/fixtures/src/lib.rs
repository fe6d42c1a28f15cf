//! Synthetic IFC building models with authored, hand-checkable dimensions.
//!
//! Every fixture is generated as ISO 10303-21 text so the full parse →
//! tessellate → slice pipeline is exercised. The constants next to each
//! fixture record the values it was authored to reproduce.

pub mod builder;
pub mod oracle;

pub use builder::{fmt_real, IfcBuilder, LengthUnit, Schema, SiteSpec, StoreyRef};

/// Wall thickness used by the rectangular storey helper.
pub const WALL: f64 = 0.3;
/// Slab thickness used by the rectangular storey helper.
pub const SLAB: f64 = 0.2;

/// Adds a rectangular storey shell: four perimeter walls, one partition wall
/// and a floor slab whose top face sits at the storey elevation.
/// Returns the element ids (walls first, slab last).
pub fn rect_storey(b: &mut IfcBuilder, storey: StoreyRef, origin: [f64; 2], size: [f64; 2], elevation: f64, height: f64) -> Vec<u64> {
    let [x0, y0] = origin;
    let [w, d] = size;
    let t = WALL;
    let h = height - SLAB;
    let mut ids = vec![
        b.boxed("IFCWALLSTANDARDCASE", storey, "wall-s", [x0, y0, elevation], [w, t, h]),
        b.boxed("IFCWALLSTANDARDCASE", storey, "wall-n", [x0, y0 + d - t, elevation], [w, t, h]),
        b.boxed("IFCWALLSTANDARDCASE", storey, "wall-w", [x0, y0 + t, elevation], [t, d - 2.0 * t, h]),
        b.boxed("IFCWALLSTANDARDCASE", storey, "wall-e", [x0 + w - t, y0 + t, elevation], [t, d - 2.0 * t, h]),
        b.boxed("IFCWALL", storey, "partition", [x0 + t, y0 + d / 2.0 - 0.1, elevation], [w - 2.0 * t, 0.2, h]),
    ];
    ids.push(b.boxed("IFCSLAB", storey, "floor", [x0, y0, elevation - SLAB], [w, d, SLAB]));
    ids
}

fn site_default() -> SiteSpec {
    SiteSpec::default()
}

/// Minimal well-formed file holding a single wall record.
pub fn minimal_wall() -> String {
    "ISO-10303-21;\nHEADER;\nFILE_DESCRIPTION((''),'2;1');\nFILE_NAME('m.ifc','',(''),(''),'','','');\nFILE_SCHEMA(('IFC2X3'));\nENDSEC;\nDATA;\n#1=IFCWALL($,$,'w',$,$,$,$,$,$);\nENDSEC;\nEND-ISO-10303-21;\n".to_string()
}

/// File with a reference to a missing instance `#99`.
pub fn dangling_reference() -> String {
    "ISO-10303-21;\nHEADER;\nFILE_SCHEMA(('IFC2X3'));\nENDSEC;\nDATA;\n#1=IFCWALL($,$,'w',$,$,$,$,$);\n#2=IFCX(#99);\nENDSEC;\nEND-ISO-10303-21;\n".to_string()
}

pub mod stepped {
    //! Base 30×20 m on floors 00–01, centered 15×10 m tower on floors 02–09.
    pub const STOREY_HEIGHT: f64 = 3.5;
    pub const FLOORS: usize = 10;
    pub const BASE_FLOORS: usize = 2;
    pub const BASE: [f64; 2] = [30.0, 20.0];
    pub const TOWER: [f64; 2] = [15.0, 10.0];
    pub const TOWER_ORIGIN: [f64; 2] = [7.5, 5.0];
    pub const TOP_Z: f64 = 9.0 * STOREY_HEIGHT + STOREY_HEIGHT - super::SLAB;
}

/// Stepped tower: base 30×20 m (floors 00–01), tower 15×10 m centered (02–09).
pub fn stepped_tower(unit: LengthUnit) -> String {
    let mut b = IfcBuilder::new("stepped_tower.ifc", Schema::Ifc2x3, unit, site_default());
    for i in 0..stepped::FLOORS {
        let elev = i as f64 * stepped::STOREY_HEIGHT;
        let s = b.storey(&format!("{i:02}"), elev);
        if i < stepped::BASE_FLOORS {
            rect_storey(&mut b, s, [0.0, 0.0], stepped::BASE, elev, stepped::STOREY_HEIGHT);
        } else {
            rect_storey(&mut b, s, stepped::TOWER_ORIGIN, stepped::TOWER, elev, stepped::STOREY_HEIGHT);
        }
    }
    b.finish()
}

/// Six identical 20×20 m floors.
pub fn uniform_tower() -> String {
    let mut b = IfcBuilder::new("uniform_tower.ifc", Schema::Ifc2x3, LengthUnit::Metre, site_default());
    for i in 0..6 {
        let elev = i as f64 * 3.0;
        let s = b.storey(&format!("{i:02}"), elev);
        rect_storey(&mut b, s, [0.0, 0.0], [20.0, 20.0], elev, 3.0);
    }
    b.finish()
}

/// One storey, 20×30 m box. With `annex`, a detached 5×5 m annex sits 20 m east.
pub fn box_building(annex: bool) -> String {
    let mut b = IfcBuilder::new("box_building.ifc", Schema::Ifc2x3, LengthUnit::Metre, site_default());
    let s = b.storey("00", 0.0);
    rect_storey(&mut b, s, [0.0, 0.0], [20.0, 30.0], 0.0, 3.0);
    if annex {
        rect_storey(&mut b, s, [40.0, 0.0], [5.0, 5.0], 0.0, 3.0);
    }
    b.finish()
}

pub mod balcony {
    /// The balcony adds this many square meters when cut below the railing top.
    pub const BALCONY_AREA: f64 = 20.0;
    pub const CUT_INCLUDED: f64 = 0.6;
    pub const CUT_EXCLUDED: f64 = 1.8;
}

/// One 20×20 m storey with a 10×2 m balcony on the south facade whose
/// railing stops 1.2 m above the floor.
pub fn balcony_building() -> String {
    let mut b = IfcBuilder::new("balcony.ifc", Schema::Ifc2x3, LengthUnit::Metre, site_default());
    let s = b.storey("00", 0.0);
    rect_storey(&mut b, s, [0.0, 0.0], [20.0, 20.0], 0.0, 3.0);
    b.boxed("IFCSLAB", s, "balcony", [5.0, -2.0, 0.0], [10.0, 2.0, 0.2]);
    b.boxed("IFCRAILING", s, "rail-w", [5.0, -2.0, 0.2], [0.1, 2.0, 1.0]);
    b.boxed("IFCRAILING", s, "rail-e", [14.9, -2.0, 0.2], [0.1, 2.0, 1.0]);
    b.boxed("IFCRAILING", s, "rail-s", [5.0, -2.0, 0.2], [10.0, 0.1, 1.0]);
    b.finish()
}

pub mod peak {
    /// Authored top of the tower above the ground storey elevation.
    pub const TOP_Z: f64 = 103.47;
    pub const FLOORS: usize = 30;
    pub const STOREY_HEIGHT: f64 = 3.4;
}

/// Thirty-storey 20×20 m tower whose rooftop installation tops out at 103.47 m.
pub fn peak_height_tower(unit: LengthUnit) -> String {
    let mut b = IfcBuilder::new("peak_height.ifc", Schema::Ifc2x3, unit, site_default());
    let mut last = None;
    for i in 0..peak::FLOORS {
        let elev = i as f64 * peak::STOREY_HEIGHT;
        let s = b.storey(&format!("{i:02}"), elev);
        rect_storey(&mut b, s, [0.0, 0.0], [20.0, 20.0], elev, peak::STOREY_HEIGHT);
        last = Some((s, elev));
    }
    let (s, elev) = last.unwrap();
    let roof_z = elev + peak::STOREY_HEIGHT;
    b.boxed("IFCROOF", s, "roof", [0.0, 0.0, roof_z - SLAB], [20.0, 20.0, SLAB]);
    b.boxed("IFCBUILDINGELEMENTPROXY", s, "installation", [5.0, 5.0, roof_z], [6.0, 6.0, peak::TOP_Z - roof_z]);
    b.finish()
}

pub mod overhang {
    pub const FLOORS: usize = 30;
    pub const STOREY_HEIGHT: f64 = 3.2;
    pub const NORTH_PROTRUSION: f64 = 10.5;
    pub const SOUTH_PROTRUSION: f64 = 6.4;
    /// (x1, y1, x2, y2): north facade line of the base, direction +x so the street
    /// lies on the left.
    pub const NORTH_LINE: [f64; 4] = [0.0, 20.0, 30.0, 20.0];
    /// South facade line, direction +x so the street lies on the right.
    pub const SOUTH_LINE: [f64; 4] = [0.0, 0.0, 30.0, 0.0];
    pub const NORTH_STOREY: &str = "27";
    pub const SOUTH_STOREY: &str = "12";
}

/// 30×20 m tower; floor 27 cantilevers 10.5 m north, floor 12 cantilevers 6.4 m south.
pub fn overhang_tower() -> String {
    let mut b = IfcBuilder::new("overhang_tower.ifc", Schema::Ifc2x3, LengthUnit::Metre, site_default());
    for i in 0..overhang::FLOORS {
        let elev = i as f64 * overhang::STOREY_HEIGHT;
        let name = format!("{i:02}");
        let s = b.storey(&name, elev);
        rect_storey(&mut b, s, [0.0, 0.0], [30.0, 20.0], elev, overhang::STOREY_HEIGHT);
        if name == overhang::NORTH_STOREY {
            b.boxed("IFCSLAB", s, "cantilever-n", [5.0, 20.0, elev], [20.0, overhang::NORTH_PROTRUSION, 1.1]);
        }
        if name == overhang::SOUTH_STOREY {
            b.boxed("IFCSLAB", s, "cantilever-s", [10.0, -overhang::SOUTH_PROTRUSION, elev], [10.0, overhang::SOUTH_PROTRUSION, 1.1]);
        }
    }
    b.finish()
}

pub mod ceiling {
    pub const STOREY: &str = "26";
    pub const ELEVATION: f64 = 81.61;
    pub const CEILING_UNDERSIDE: f64 = 81.02;
    pub const SLAB_THICKNESS: f64 = 0.08;
}

/// Four floors; floors 26–27 overhang the floors below by 6 m to the north.
/// Floor 26's slab (8 cm) sits on a protruding ceiling whose underside is at 81.02 m.
pub fn ceiling_ensemble() -> String {
    let mut b = IfcBuilder::new("ceiling_ensemble.ifc", Schema::Ifc2x3, LengthUnit::Metre, site_default());
    let elevations = [("24", 75.21), ("25", 78.41), ("26", ceiling::ELEVATION), ("27", 84.81)];
    for (name, elev) in elevations {
        let s = b.storey(name, elev);
        let depth = if elev >= ceiling::ELEVATION { 26.0 } else { 20.0 };
        let t = WALL;
        let h = 3.0;
        b.boxed("IFCWALLSTANDARDCASE", s, "wall-s", [0.0, 0.0, elev], [20.0, t, h]);
        b.boxed("IFCWALLSTANDARDCASE", s, "wall-n", [0.0, depth - t, elev], [20.0, t, h]);
        b.boxed("IFCWALLSTANDARDCASE", s, "wall-w", [0.0, t, elev], [t, depth - 2.0 * t, h]);
        b.boxed("IFCWALLSTANDARDCASE", s, "wall-e", [20.0 - t, t, elev], [t, depth - 2.0 * t, h]);
        b.boxed("IFCSLAB", s, "floor", [0.0, 0.0, elev - ceiling::SLAB_THICKNESS], [20.0, depth, ceiling::SLAB_THICKNESS]);
        if name == ceiling::STOREY {
            let top = elev - ceiling::SLAB_THICKNESS;
            b.boxed("IFCCOVERING", s, "protruding-ceiling", [0.0, 20.0, ceiling::CEILING_UNDERSIDE], [20.0, 6.0, top - ceiling::CEILING_UNDERSIDE]);
        }
    }
    b.finish()
}

pub mod parking {
    pub const CARS: usize = 57;
    pub const CARS_LOWER: usize = 30;
}

/// Two underground parking levels holding 30 + 27 car places modelled as
/// proxies with `Pset_ProductRequirements.Category = Parking`, plus a bike
/// storage space.
pub fn parking_garage() -> String {
    let mut b = IfcBuilder::new("parking_garage.ifc", Schema::Ifc2x3, LengthUnit::Metre, site_default());
    let levels = [("-2", -6.4), ("-1", -3.2), ("00", 0.0), ("01", 3.2)];
    let mut cars = Vec::new();
    for (name, elev) in levels {
        let s = b.storey(name, elev);
        rect_storey(&mut b, s, [0.0, 0.0], [60.0, 40.0], elev, 3.2);
        let count = match name {
            "-2" => parking::CARS_LOWER,
            "-1" => parking::CARS - parking::CARS_LOWER,
            _ => 0,
        };
        for k in 0..count {
            let col = (k % 15) as f64;
            let row = (k / 15) as f64;
            let id = b.boxed(
                "IFCBUILDINGELEMENTPROXY",
                s,
                &format!("P{name}.{k}"),
                [1.0 + col * 2.6, 2.0 + row * 25.0, elev],
                [2.5, 5.0, 0.05],
            );
            cars.push(id);
        }
        if name == "-1" {
            b.space(s, "Fietsenstalling 01", [45.0, 25.0, elev], [10.0, 10.0, 2.8]);
        }
        if name == "00" {
            b.space(s, "Berging", [5.0, 25.0, elev], [5.0, 5.0, 2.8]);
        }
    }
    b.pset(&cars, "Pset_ProductRequirements", &[("Category", "Parking")]);
    b.finish()
}

pub mod federated {
    pub const STOREYS: [(&str, f64); 3] = [("00", 0.0), ("01", 3.5), ("02", 7.0)];
}

/// Architectural, structural and facade files of one BIM, registered on the same site.
pub fn federated_bim(site_offset_struct: [f64; 3]) -> [String; 3] {
    let mut arch = IfcBuilder::new("fed_arch.ifc", Schema::Ifc2x3, LengthUnit::Metre, site_default());
    let mut strc = IfcBuilder::new(
        "fed_struct.ifc",
        Schema::Ifc4,
        LengthUnit::Millimetre,
        SiteSpec { origin: site_offset_struct, ..Default::default() },
    );
    let mut facade = IfcBuilder::new("fed_facade.ifc", Schema::Ifc2x3, LengthUnit::Metre, site_default());
    for (name, elev) in federated::STOREYS {
        let sa = arch.storey(name, elev);
        let t = WALL;
        arch.boxed("IFCWALL", sa, "partition-a", [t, 9.9, elev], [19.4, 0.2, 3.3]);
        arch.boxed("IFCWALL", sa, "partition-b", [9.9, t, elev], [0.2, 9.6, 3.3]);
        arch.boxed("IFCDOOR", sa, "door", [5.0, 9.9, elev], [1.0, 0.2, 2.1]);
        arch.boxed("IFCFURNISHINGELEMENT", sa, "table", [3.0, 3.0, elev], [1.5, 0.8, 0.75]);
        arch.boxed("IFCWALL", sa, "partition-c", [9.9, 10.1, elev], [0.2, 9.6, 3.3]);

        let ss = strc.storey(name, elev);
        strc.boxed("IFCWALL", ss, "wall-s", [0.0, 0.0, elev], [20.0, t, 3.3]);
        strc.boxed("IFCWALL", ss, "wall-n", [0.0, 20.0 - t, elev], [20.0, t, 3.3]);
        strc.boxed("IFCWALL", ss, "wall-w", [0.0, t, elev], [t, 20.0 - 2.0 * t, 3.3]);
        strc.boxed("IFCWALL", ss, "wall-e", [20.0 - t, t, elev], [t, 20.0 - 2.0 * t, 3.3]);
        strc.boxed("IFCSLAB", ss, "floor", [0.0, 0.0, elev - SLAB], [20.0, 20.0, SLAB]);
        strc.cylinder("IFCCOLUMN", ss, "column", [15.0, 15.0, elev], 0.25, 3.3);

        let sf = facade.storey(name, elev);
        facade.boxed("IFCCOVERING", sf, "cladding-s", [0.0, -0.1, elev], [20.0, 0.1, 3.5]);
        facade.boxed("IFCCOVERING", sf, "cladding-n", [0.0, 20.0, elev], [20.0, 0.1, 3.5]);
        facade.boxed("IFCCOVERING", sf, "cladding-w", [-0.1, 0.0, elev], [0.1, 20.0, 3.5]);
        facade.boxed("IFCCOVERING", sf, "cladding-e", [20.0, 0.0, elev], [0.1, 20.0, 3.5]);
        facade.boxed("IFCCOVERING", sf, "cladding-sill", [0.0, -0.1, elev + 3.3], [20.0, 0.1, 0.2]);
    }
    [arch.finish(), strc.finish(), facade.finish()]
}

pub mod repair {
    /// Storey elevations (m); "06b" is a phantom storey holding two stray elements.
    pub const STOREYS: [(&str, f64); 6] = [("04", 12.8), ("05", 16.0), ("06", 19.2), ("06b", 20.0), ("07", 22.4), ("08", 25.6)];
    pub const MISPLACED_COLUMN: &str = "column-misplaced";
    pub const SHAFT: &str = "shaft";
}

/// Storey-grouping defects: a column of "07" contained in "05", a phantom
/// storey "06b" with two elements, and a two-floor shaft contained in "06".
pub fn storey_defects() -> String {
    let mut b = IfcBuilder::new("storey_defects.ifc", Schema::Ifc2x3, LengthUnit::Metre, site_default());
    let mut refs = Vec::new();
    for (name, elev) in repair::STOREYS {
        let s = b.storey(name, elev);
        refs.push((name, s, elev));
        if name == "06b" {
            b.boxed("IFCBEAM", s, "stray-1", [2.0, 2.0, 21.0], [3.0, 0.3, 0.4]);
            b.boxed("IFCBEAM", s, "stray-2", [6.0, 2.0, 21.0], [3.0, 0.3, 0.4]);
        } else {
            rect_storey(&mut b, s, [0.0, 0.0], [20.0, 20.0], elev, 3.2);
        }
    }
    let s05 = refs[1].1;
    let s06 = refs[2].1;
    let s07 = refs[4].1;
    b.boxed("IFCCOLUMN", s05, repair::MISPLACED_COLUMN, [10.0, 15.0, 22.6], [0.4, 0.4, 2.8]);
    let shaft = b.boxed("IFCBUILDINGELEMENTPROXY", s06, repair::SHAFT, [14.0, 14.0, 19.2], [2.0, 2.0, 6.2]);
    b.reference(s07, shaft);
    b.finish()
}

pub mod lint {
    pub const PROXY_RATIO: f64 = 0.30;
}

/// Lint fixture: 3 of 10 elements are proxies, two co-located spaces with
/// different names, lat/long-only georeferencing, and a fence far outside the building.
pub fn lint_defects() -> String {
    let site = SiteSpec { origin: [0.0, 0.0, 0.0], lat_lon: Some((52.37, 4.89)), true_north: None };
    let mut b = IfcBuilder::new("lint_defects.ifc", Schema::Ifc2x3, LengthUnit::Metre, site);
    let s = b.storey("00", 0.0);
    rect_storey(&mut b, s, [0.0, 0.0], [20.0, 20.0], 0.0, 3.0);
    b.boxed("IFCWALL", s, "fence", [300.0, 300.0, 0.0], [10.0, 0.1, 1.5]);
    for k in 0..3 {
        b.boxed("IFCBUILDINGELEMENTPROXY", s, &format!("object-{k}"), [2.0 + 2.0 * k as f64, 2.0, 0.0], [1.0, 1.0, 1.0]);
    }
    b.space(s, "Woonkamer", [0.3, 0.3, 0.0], [19.4, 9.6, 2.8]);
    b.space(s, "Keuken", [0.3, 0.3, 0.0], [19.4, 9.6, 2.8]);
    b.finish()
}

/// Site placed at projected coordinates with a rotated true north (LoGeoRef 30).
pub fn projected_site() -> String {
    let site = SiteSpec {
        origin: [92_000.0, 437_000.0, 0.0],
        lat_lon: Some((38.0, -97.0)),
        true_north: Some([-0.5, 0.866_025_403_784_438_6]),
    };
    let mut b = IfcBuilder::new("projected_site.ifc", Schema::Ifc2x3, LengthUnit::Metre, site);
    let s = b.storey("00", 0.0);
    rect_storey(&mut b, s, [0.0, 0.0], [20.0, 20.0], 0.0, 3.0);
    b.finish()
}

pub mod rotated {
    /// World-frame bounding box of the wall placed in the 90°-rotated storey frame.
    pub const WALL_BBOX: ([f64; 3], [f64; 3]) = ([-1.0, 1.0, 3.0], [0.0, 3.0, 4.0]);
}

/// A wall placed at local (1,0,0) size (2,1,1) in a storey rotated 90° at z = 3.
pub fn rotated_storey() -> String {
    let mut b = IfcBuilder::new("rotated.ifc", Schema::Ifc2x3, LengthUnit::Metre, site_default());
    let s = b.rotated_storey("01", 3.0, 90.0);
    b.boxed("IFCWALL", s, "rotated-wall", [1.0, 0.0, 3.0], [2.0, 1.0, 1.0]);
    b.finish()
}

pub mod profile {
    //! Storey-by-storey overlap profile (percent of the ground floor) authored
    //! to reproduce a published table: ground, 1st … 32nd.
    pub const OVERLAPS: [f64; 33] = [
        100.0, 94.1, 93.8, 95.3, 93.9, 88.9, 85.9, 85.9, 86.6, 86.2, 85.9, 72.3, 72.0, 67.9, 67.9, 67.9, 67.9,
        67.9, 67.9, 67.9, 64.0, 63.6, 63.7, 39.2, 39.2, 39.3, 35.0, 35.0, 35.1, 35.0, 35.2, 35.0, 35.0,
    ];
    pub const BASE: [f64; 2] = [40.0, 30.0];
    pub const STOREY_HEIGHT: f64 = 3.1;
}

/// Tower whose floor footprints shrink in depth so that each floor covers
/// the authored share of the ground floor.
pub fn overlap_profile_tower() -> String {
    let mut b = IfcBuilder::new("overlap_profile.ifc", Schema::Ifc2x3, LengthUnit::Metre, site_default());
    for (i, pct) in profile::OVERLAPS.iter().enumerate() {
        let elev = i as f64 * profile::STOREY_HEIGHT;
        let s = b.storey(&format!("{i:02}"), elev);
        let depth = profile::BASE[1] * pct / 100.0;
        rect_storey(&mut b, s, [0.0, 0.0], [profile::BASE[0], depth], elev, profile::STOREY_HEIGHT);
    }
    b.finish()
}

/// Named fixtures written by the `gen-fixtures` binary.
pub fn all() -> Vec<(&'static str, String)> {
    let [arch, strc, facade] = federated_bim([0.0; 3]);
    vec![
        ("stepped_tower.ifc", stepped_tower(LengthUnit::Metre)),
        ("stepped_tower_mm.ifc", stepped_tower(LengthUnit::Millimetre)),
        ("uniform_tower.ifc", uniform_tower()),
        ("box_building.ifc", box_building(false)),
        ("two_towers.ifc", box_building(true)),
        ("balcony.ifc", balcony_building()),
        ("peak_height.ifc", peak_height_tower(LengthUnit::Metre)),
        ("overhang_tower.ifc", overhang_tower()),
        ("ceiling_ensemble.ifc", ceiling_ensemble()),
        ("parking_garage.ifc", parking_garage()),
        ("fed_arch.ifc", arch),
        ("fed_struct.ifc", strc),
        ("fed_facade.ifc", facade),
        ("storey_defects.ifc", storey_defects()),
        ("lint_defects.ifc", lint_defects()),
        ("projected_site.ifc", projected_site()),
        ("rotated.ifc", rotated_storey()),
        ("overlap_profile.ifc", overlap_profile_tower()),
        ("tower_synthetic.ifc", peak_height_tower(LengthUnit::Millimetre)),
    ]
}
