//! Minimal IFC STEP writer for authoring synthetic building models.
//!
//! All coordinates passed to the builder are in meters in the model frame
//! (relative to the site placement). The builder converts them into the
//! declared file length unit when writing.

use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Ifc2x3,
    Ifc4,
}

impl Schema {
    fn id(self) -> &'static str {
        match self {
            Schema::Ifc2x3 => "IFC2X3",
            Schema::Ifc4 => "IFC4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LengthUnit {
    Metre,
    Millimetre,
    /// Conversion-based foot (0.3048 m).
    Foot,
}

impl LengthUnit {
    /// Meters per file unit.
    pub fn scale(self) -> f64 {
        match self {
            LengthUnit::Metre => 1.0,
            LengthUnit::Millimetre => 0.001,
            LengthUnit::Foot => 0.3048,
        }
    }
}

/// Georeferencing content written into `IfcSite` and the model context.
#[derive(Debug, Clone, Default)]
pub struct SiteSpec {
    pub origin: [f64; 3],
    pub lat_lon: Option<(f64, f64)>,
    pub true_north: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct StoreyRef(pub u64);

#[derive(Debug, Clone)]
struct StoreyRec {
    id: u64,
    placement: u64,
    elevation: f64,
}

/// Formats a real the way STEP expects (`3.`, `0.25`, `1.E-05`).
pub fn fmt_real(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    let s = format!("{v:?}");
    if let Some((mant, exp)) = s.split_once('e') {
        let mant = if mant.contains('.') { mant.to_string() } else { format!("{mant}.") };
        format!("{mant}E{exp}")
    } else if let Some(stripped) = s.strip_suffix(".0") {
        format!("{stripped}.")
    } else {
        s
    }
}

fn fmt_str(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

pub struct IfcBuilder {
    schema: Schema,
    unit: LengthUnit,
    file_name: String,
    records: Vec<(u64, String)>,
    next: u64,
    guid_counter: u64,
    context: u64,
    project: u64,
    z_dir: u64,
    site: u64,
    site_placement: u64,
    building: u64,
    building_placement: u64,
    storeys: Vec<StoreyRec>,
    contained: BTreeMap<u64, Vec<u64>>,
    referenced: BTreeMap<u64, Vec<u64>>,
    spaces: BTreeMap<u64, Vec<u64>>,
    decomposed: BTreeMap<u64, Vec<u64>>,
    psets: Vec<(u64, Vec<u64>)>,
}

impl IfcBuilder {
    pub fn new(file_name: &str, schema: Schema, unit: LengthUnit, site: SiteSpec) -> Self {
        let mut b = IfcBuilder {
            schema,
            unit,
            file_name: file_name.to_string(),
            records: Vec::new(),
            next: 1,
            guid_counter: 0,
            context: 0,
            project: 0,
            z_dir: 0,
            site: 0,
            site_placement: 0,
            building: 0,
            building_placement: 0,
            storeys: Vec::new(),
            contained: BTreeMap::new(),
            referenced: BTreeMap::new(),
            spaces: BTreeMap::new(),
            decomposed: BTreeMap::new(),
            psets: Vec::new(),
        };
        let length = match unit {
            LengthUnit::Metre => b.add("IFCSIUNIT(*,.LENGTHUNIT.,$,.METRE.)".into()),
            LengthUnit::Millimetre => b.add("IFCSIUNIT(*,.LENGTHUNIT.,.MILLI.,.METRE.)".into()),
            LengthUnit::Foot => {
                let dims = b.add("IFCDIMENSIONALEXPONENTS(1,0,0,0,0,0,0)".into());
                let metre = b.add("IFCSIUNIT(*,.LENGTHUNIT.,$,.METRE.)".into());
                let factor = b.add(format!("IFCMEASUREWITHUNIT(IFCLENGTHMEASURE(0.3048),#{metre})"));
                b.add(format!("IFCCONVERSIONBASEDUNIT(#{dims},.LENGTHUNIT.,'FOOT',#{factor})"))
            }
        };
        let angle = b.add("IFCSIUNIT(*,.PLANEANGLEUNIT.,$,.RADIAN.)".into());
        let units = b.add(format!("IFCUNITASSIGNMENT((#{length},#{angle}))"));
        let origin = b.point3([0.0, 0.0, 0.0]);
        let wcs = b.add(format!("IFCAXIS2PLACEMENT3D(#{origin},$,$)"));
        let north = match site.true_north {
            Some([x, y]) => format!("#{}", b.add(format!("IFCDIRECTION(({},{}))", fmt_real(x), fmt_real(y)))),
            None => "$".into(),
        };
        b.context = b.add(format!(
            "IFCGEOMETRICREPRESENTATIONCONTEXT($,'Model',3,1.E-05,#{wcs},{north})"
        ));
        let guid = b.guid();
        b.project = b.add(format!(
            "IFCPROJECT({guid},$,'Project',$,$,$,$,(#{}),#{units})",
            b.context
        ));
        b.z_dir = b.add("IFCDIRECTION((0.,0.,1.))".into());

        let site_origin = b.point3(site.origin);
        let site_axes = b.add(format!("IFCAXIS2PLACEMENT3D(#{site_origin},$,$)"));
        b.site_placement = b.add(format!("IFCLOCALPLACEMENT($,#{site_axes})"));
        let (lat, lon) = match site.lat_lon {
            Some((lat, lon)) => (compound_angle(lat), compound_angle(lon)),
            None => ("$".into(), "$".into()),
        };
        let guid = b.guid();
        b.site = b.add(format!(
            "IFCSITE({guid},$,'Site',$,$,#{},$,$,.ELEMENT.,{lat},{lon},0.,$,$)",
            b.site_placement
        ));
        let bp = b.local_placement(Some(b.site_placement), [0.0, 0.0, 0.0]);
        b.building_placement = bp;
        let guid = b.guid();
        b.building = b.add(format!("IFCBUILDING({guid},$,'Building',$,$,#{bp},$,$,.ELEMENT.,$,$,$)"));
        b
    }

    pub fn schema(&self) -> Schema {
        self.schema
    }

    fn add(&mut self, body: String) -> u64 {
        let id = self.next;
        self.next += 1;
        self.records.push((id, body));
        id
    }

    fn guid(&mut self) -> String {
        self.guid_counter += 1;
        format!("'{:0>22}'", format!("G{}", self.guid_counter))
    }

    fn len(&self, meters: f64) -> String {
        fmt_real(meters / self.unit.scale())
    }

    fn point3(&mut self, p: [f64; 3]) -> u64 {
        let body = format!("IFCCARTESIANPOINT(({},{},{}))", self.len(p[0]), self.len(p[1]), self.len(p[2]));
        self.add(body)
    }

    fn point2(&mut self, p: [f64; 2]) -> u64 {
        let body = format!("IFCCARTESIANPOINT(({},{}))", self.len(p[0]), self.len(p[1]));
        self.add(body)
    }

    fn local_placement(&mut self, rel_to: Option<u64>, origin: [f64; 3]) -> u64 {
        let p = self.point3(origin);
        let axes = self.add(format!("IFCAXIS2PLACEMENT3D(#{p},$,$)"));
        let rel = rel_to.map(|r| format!("#{r}")).unwrap_or_else(|| "$".into());
        self.add(format!("IFCLOCALPLACEMENT({rel},#{axes})"))
    }

    /// Adds a building storey placed at `elevation` meters.
    pub fn storey(&mut self, name: &str, elevation: f64) -> StoreyRef {
        let placement = self.local_placement(Some(self.building_placement), [0.0, 0.0, elevation]);
        let guid = self.guid();
        let elev = self.len(elevation);
        let id = self.add(format!(
            "IFCBUILDINGSTOREY({guid},$,{},$,$,#{placement},$,$,.ELEMENT.,{elev})",
            fmt_str(name)
        ));
        self.storeys.push(StoreyRec { id, placement, elevation });
        StoreyRef(id)
    }

    /// Adds a storey whose local frame is rotated by `angle_deg` about +Z.
    pub fn rotated_storey(&mut self, name: &str, elevation: f64, angle_deg: f64) -> StoreyRef {
        let p = self.point3([0.0, 0.0, elevation]);
        let (s, c) = angle_deg.to_radians().sin_cos();
        let refd = self.add(format!("IFCDIRECTION(({},{},0.))", fmt_real(c), fmt_real(s)));
        let axes = self.add(format!("IFCAXIS2PLACEMENT3D(#{p},#{},#{refd})", self.z_dir));
        let placement = self.add(format!("IFCLOCALPLACEMENT(#{},#{axes})", self.building_placement));
        let guid = self.guid();
        let elev = self.len(elevation);
        let id = self.add(format!(
            "IFCBUILDINGSTOREY({guid},$,{},$,$,#{placement},$,$,.ELEMENT.,{elev})",
            fmt_str(name)
        ));
        self.storeys.push(StoreyRec { id, placement, elevation });
        StoreyRef(id)
    }

    fn storey_rec(&self, storey: StoreyRef) -> StoreyRec {
        self.storeys
            .iter()
            .find(|s| s.id == storey.0)
            .cloned()
            .expect("unknown storey")
    }

    fn body_shape(&mut self, item: u64, kind: &str) -> u64 {
        let rep = self.add(format!(
            "IFCSHAPEREPRESENTATION(#{},'Body','{kind}',(#{item}))",
            self.context
        ));
        self.add(format!("IFCPRODUCTDEFINITIONSHAPE($,$,(#{rep}))"))
    }

    fn rect_extrusion(&mut self, size: [f64; 3]) -> u64 {
        let c = self.point2([size[0] / 2.0, size[1] / 2.0]);
        let pos2 = self.add(format!("IFCAXIS2PLACEMENT2D(#{c},$)"));
        let prof = self.add(format!(
            "IFCRECTANGLEPROFILEDEF(.AREA.,$,#{pos2},{},{})",
            self.len(size[0]),
            self.len(size[1])
        ));
        let o = self.point3([0.0, 0.0, 0.0]);
        let pos3 = self.add(format!("IFCAXIS2PLACEMENT3D(#{o},$,$)"));
        let depth = self.len(size[2]);
        self.add(format!(
            "IFCEXTRUDEDAREASOLID(#{prof},#{pos3},#{},{depth})",
            self.z_dir
        ))
    }

    fn element_record(&mut self, class: &str, name: &str, placement: u64, shape: Option<u64>) -> u64 {
        let guid = self.guid();
        let shape = shape.map(|s| format!("#{s}")).unwrap_or_else(|| "$".into());
        let tail = element_tail(self.schema, class);
        self.add(format!(
            "{class}({guid},$,{},$,$,#{placement},{shape},${tail})",
            fmt_str(name)
        ))
    }

    /// Adds an axis-aligned box element contained in `storey`. `min` is in model
    /// meters; the element is placed relative to the storey frame.
    pub fn boxed(&mut self, class: &str, storey: StoreyRef, name: &str, min: [f64; 3], size: [f64; 3]) -> u64 {
        let rec = self.storey_rec(storey);
        let placement = self.local_placement(Some(rec.placement), [min[0], min[1], min[2] - rec.elevation]);
        let solid = self.rect_extrusion(size);
        let shape = self.body_shape(solid, "SweptSolid");
        let id = self.element_record(class, name, placement, Some(shape));
        self.contained.entry(storey.0).or_default().push(id);
        id
    }

    /// Adds a box element directly under `IfcSite` (outside any storey).
    pub fn site_box(&mut self, class: &str, name: &str, min: [f64; 3], size: [f64; 3]) -> u64 {
        let placement = self.local_placement(Some(self.site_placement), min);
        let solid = self.rect_extrusion(size);
        let shape = self.body_shape(solid, "SweptSolid");
        let id = self.element_record(class, name, placement, Some(shape));
        self.contained.entry(self.site).or_default().push(id);
        id
    }

    /// Adds a prism extruded from a closed outline (counter-clockwise, no repeated
    /// closing point) from `z0` upward by `height`.
    pub fn prism(&mut self, class: &str, storey: StoreyRef, name: &str, outline: &[[f64; 2]], z0: f64, height: f64) -> u64 {
        let rec = self.storey_rec(storey);
        let placement = self.local_placement(Some(rec.placement), [0.0, 0.0, z0 - rec.elevation]);
        let mut pts: Vec<u64> = outline.iter().map(|p| self.point2(*p)).collect();
        pts.push(pts[0]);
        let list = pts.iter().map(|p| format!("#{p}")).collect::<Vec<_>>().join(",");
        let poly = self.add(format!("IFCPOLYLINE(({list}))"));
        let prof = self.add(format!("IFCARBITRARYCLOSEDPROFILEDEF(.AREA.,$,#{poly})"));
        let o = self.point3([0.0, 0.0, 0.0]);
        let pos3 = self.add(format!("IFCAXIS2PLACEMENT3D(#{o},$,$)"));
        let depth = self.len(height);
        let solid = self.add(format!("IFCEXTRUDEDAREASOLID(#{prof},#{pos3},#{},{depth})", self.z_dir));
        let shape = self.body_shape(solid, "SweptSolid");
        let id = self.element_record(class, name, placement, Some(shape));
        self.contained.entry(storey.0).or_default().push(id);
        id
    }

    /// Adds a vertical cylinder (circle profile) element.
    pub fn cylinder(&mut self, class: &str, storey: StoreyRef, name: &str, center: [f64; 3], radius: f64, height: f64) -> u64 {
        let rec = self.storey_rec(storey);
        let placement = self.local_placement(Some(rec.placement), [center[0], center[1], center[2] - rec.elevation]);
        let c = self.point2([0.0, 0.0]);
        let pos2 = self.add(format!("IFCAXIS2PLACEMENT2D(#{c},$)"));
        let prof = self.add(format!("IFCCIRCLEPROFILEDEF(.AREA.,$,#{pos2},{})", self.len(radius)));
        let o = self.point3([0.0, 0.0, 0.0]);
        let pos3 = self.add(format!("IFCAXIS2PLACEMENT3D(#{o},$,$)"));
        let depth = self.len(height);
        let solid = self.add(format!("IFCEXTRUDEDAREASOLID(#{prof},#{pos3},#{},{depth})", self.z_dir));
        let shape = self.body_shape(solid, "SweptSolid");
        let id = self.element_record(class, name, placement, Some(shape));
        self.contained.entry(storey.0).or_default().push(id);
        id
    }

    /// Adds an element whose body is a faceted B-rep box.
    pub fn brep_box(&mut self, class: &str, storey: StoreyRef, name: &str, min: [f64; 3], size: [f64; 3]) -> u64 {
        let rec = self.storey_rec(storey);
        let placement = self.local_placement(Some(rec.placement), [min[0], min[1], min[2] - rec.elevation]);
        let [sx, sy, sz] = size;
        let corners = [
            [0.0, 0.0, 0.0],
            [sx, 0.0, 0.0],
            [sx, sy, 0.0],
            [0.0, sy, 0.0],
            [0.0, 0.0, sz],
            [sx, 0.0, sz],
            [sx, sy, sz],
            [0.0, sy, sz],
        ];
        let ids: Vec<u64> = corners.iter().map(|c| self.point3(*c)).collect();
        let quads = [
            [0usize, 3, 2, 1],
            [4, 5, 6, 7],
            [0, 1, 5, 4],
            [1, 2, 6, 5],
            [2, 3, 7, 6],
            [3, 0, 4, 7],
        ];
        let mut faces = Vec::new();
        for q in quads {
            let list = q.iter().map(|i| format!("#{}", ids[*i])).collect::<Vec<_>>().join(",");
            let lp = self.add(format!("IFCPOLYLOOP(({list}))"));
            let bound = self.add(format!("IFCFACEOUTERBOUND(#{lp},.T.)"));
            faces.push(self.add(format!("IFCFACE((#{bound}))")));
        }
        let list = faces.iter().map(|f| format!("#{f}")).collect::<Vec<_>>().join(",");
        let shell = self.add(format!("IFCCLOSEDSHELL(({list}))"));
        let brep = self.add(format!("IFCFACETEDBREP(#{shell})"));
        let shape = self.body_shape(brep, "Brep");
        let id = self.element_record(class, name, placement, Some(shape));
        self.contained.entry(storey.0).or_default().push(id);
        id
    }

    /// Adds an element with no body representation.
    pub fn bodiless(&mut self, class: &str, storey: StoreyRef, name: &str) -> u64 {
        let rec = self.storey_rec(storey);
        let placement = self.local_placement(Some(rec.placement), [0.0, 0.0, 0.0]);
        let id = self.element_record(class, name, placement, None);
        self.contained.entry(storey.0).or_default().push(id);
        id
    }

    /// Adds an `IfcSpace` aggregated under `storey`.
    pub fn space(&mut self, storey: StoreyRef, name: &str, min: [f64; 3], size: [f64; 3]) -> u64 {
        let rec = self.storey_rec(storey);
        let placement = self.local_placement(Some(rec.placement), [min[0], min[1], min[2] - rec.elevation]);
        let solid = self.rect_extrusion(size);
        let shape = self.body_shape(solid, "SweptSolid");
        let guid = self.guid();
        let tail = match self.schema {
            Schema::Ifc2x3 => ",.ELEMENT.,.INTERNAL.,$",
            Schema::Ifc4 => ",.ELEMENT.,.INTERNAL.,$",
        };
        let id = self.add(format!(
            "IFCSPACE({guid},$,{},$,$,#{placement},#{shape},${tail})",
            fmt_str(name)
        ));
        self.spaces.entry(storey.0).or_default().push(id);
        id
    }

    /// Additionally contains `element` in another storey (a grouping defect).
    pub fn also_contain(&mut self, storey: StoreyRef, element: u64) {
        self.contained.entry(storey.0).or_default().push(element);
    }

    /// Relates `element` to `storey` through `IfcRelReferencedInSpatialStructure`.
    pub fn reference(&mut self, storey: StoreyRef, element: u64) {
        self.referenced.entry(storey.0).or_default().push(element);
    }

    /// Decomposes `whole` into `parts` with `IfcRelAggregates`.
    pub fn decompose(&mut self, whole: u64, parts: &[u64]) {
        self.decomposed.entry(whole).or_default().extend_from_slice(parts);
    }

    /// Removes `element` from every spatial container (used to author orphans).
    pub fn uncontain(&mut self, element: u64) {
        for v in self.contained.values_mut() {
            v.retain(|e| *e != element);
        }
    }

    /// Attaches a property set of single label values to the given elements.
    pub fn pset(&mut self, elements: &[u64], pset_name: &str, props: &[(&str, &str)]) {
        let mut prop_ids = Vec::new();
        for (k, v) in props {
            prop_ids.push(self.add(format!(
                "IFCPROPERTYSINGLEVALUE({},$,IFCLABEL({}),$)",
                fmt_str(k),
                fmt_str(v)
            )));
        }
        let list = prop_ids.iter().map(|p| format!("#{p}")).collect::<Vec<_>>().join(",");
        let guid = self.guid();
        let pset = self.add(format!("IFCPROPERTYSET({guid},$,{},$,({list}))", fmt_str(pset_name)));
        self.psets.push((pset, elements.to_vec()));
    }

    pub fn finish(mut self) -> String {
        let storey_ids: Vec<u64> = self.storeys.iter().map(|s| s.id).collect();
        let (project, site, building) = (self.project, self.site, self.building);
        self.aggregate(project, &[site]);
        self.aggregate(site, &[building]);
        self.aggregate(building, &storey_ids);
        for (storey, spaces) in std::mem::take(&mut self.spaces) {
            self.aggregate(storey, &spaces);
        }
        for (whole, parts) in std::mem::take(&mut self.decomposed) {
            self.aggregate(whole, &parts);
        }
        for (container, elems) in std::mem::take(&mut self.contained) {
            if elems.is_empty() {
                continue;
            }
            let guid = self.guid();
            let list = id_list(&elems);
            self.add(format!("IFCRELCONTAINEDINSPATIALSTRUCTURE({guid},$,$,$,({list}),#{container})"));
        }
        for (container, elems) in std::mem::take(&mut self.referenced) {
            let guid = self.guid();
            let list = id_list(&elems);
            self.add(format!("IFCRELREFERENCEDINSPATIALSTRUCTURE({guid},$,$,$,({list}),#{container})"));
        }
        for (pset, elems) in std::mem::take(&mut self.psets) {
            let guid = self.guid();
            let list = id_list(&elems);
            self.add(format!("IFCRELDEFINESBYPROPERTIES({guid},$,$,$,({list}),#{pset})"));
        }

        let mut out = String::new();
        out.push_str("ISO-10303-21;\nHEADER;\n");
        out.push_str("FILE_DESCRIPTION(('ViewDefinition [CoordinationView]'),'2;1');\n");
        let _ = writeln!(
            out,
            "FILE_NAME({},'2026-01-01T00:00:00',(''),(''),'geobim-fixtures','geobim-fixtures','');",
            fmt_str(&self.file_name)
        );
        let _ = writeln!(out, "FILE_SCHEMA(('{}'));", self.schema.id());
        out.push_str("ENDSEC;\nDATA;\n");
        for (id, body) in &self.records {
            let _ = writeln!(out, "#{id}={body};");
        }
        out.push_str("ENDSEC;\nEND-ISO-10303-21;\n");
        out
    }

    fn aggregate(&mut self, whole: u64, parts: &[u64]) {
        if parts.is_empty() {
            return;
        }
        let guid = self.guid();
        let list = id_list(parts);
        self.add(format!("IFCRELAGGREGATES({guid},$,$,$,#{whole},({list}))"));
    }
}

fn id_list(ids: &[u64]) -> String {
    ids.iter().map(|e| format!("#{e}")).collect::<Vec<_>>().join(",")
}

fn compound_angle(deg: f64) -> String {
    let sign = if deg < 0.0 { -1.0 } else { 1.0 };
    let a = deg.abs();
    let d = a.trunc();
    let m = ((a - d) * 60.0).trunc();
    let s = ((a - d) * 60.0 - m) * 60.0;
    let sec = s.trunc();
    let micro = ((s - sec) * 1e6).round();
    let f = |v: f64| format!("{}", (sign * v) as i64);
    format!("({},{},{},{})", f(d), f(m), f(sec), f(micro))
}

/// Trailing attributes after `Tag` for the element classes the fixtures use.
fn element_tail(schema: Schema, class: &str) -> &'static str {
    match (schema, class) {
        (Schema::Ifc2x3, "IFCSLAB" | "IFCCOVERING" | "IFCRAILING") => ",$",
        (Schema::Ifc2x3, "IFCBUILDINGELEMENTPROXY") => ",$",
        (Schema::Ifc2x3, _) => "",
        (Schema::Ifc4, "IFCFURNISHINGELEMENT") => "",
        (Schema::Ifc4, _) => ",$",
    }
}
