//! Hand-written attribute map for the IFC classes used downstream.
//!
//! Covered: spatial structure, relationships, placements, geometric
//! representation items, property sets, units, spaces and proxies. Any
//! other class is kept as an opaque instance with positional access only.

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SchemaVersion {
    Ifc2x3,
    Ifc4,
    Other,
}

impl SchemaVersion {
    pub fn from_id(id: &str) -> Self {
        let id = id.to_ascii_uppercase();
        if id.starts_with("IFC2X3") {
            SchemaVersion::Ifc2x3
        } else if id.starts_with("IFC4") {
            SchemaVersion::Ifc4
        } else {
            SchemaVersion::Other
        }
    }

    /// Positional index of attribute `name` on `class`, if the class is in the subset.
    pub fn attr_index(self, class: &str, name: &str) -> Option<usize> {
        if let Some(idx) = version_specific(self, class, name) {
            return Some(idx);
        }
        let table: &[&str] = common_attrs(class)?;
        table.iter().position(|a| *a == name)
    }
}

const ROOT: [&str; 4] = ["GlobalId", "OwnerHistory", "Name", "Description"];
const PRODUCT: [&str; 8] = ["GlobalId", "OwnerHistory", "Name", "Description", "ObjectType", "ObjectPlacement", "Representation", "Tag"];

fn version_specific(v: SchemaVersion, class: &str, name: &str) -> Option<usize> {
    match (class, name) {
        ("IFCBUILDINGELEMENTPROXY", "CompositionType") if v == SchemaVersion::Ifc2x3 => Some(8),
        ("IFCBUILDINGELEMENTPROXY", "PredefinedType") if v == SchemaVersion::Ifc4 => Some(8),
        ("IFCSPACE", "InteriorOrExteriorSpace") if v == SchemaVersion::Ifc2x3 => Some(9),
        ("IFCSPACE", "PredefinedType") if v == SchemaVersion::Ifc4 => Some(9),
        ("IFCTRIANGULATEDFACESET", "CoordIndex") => Some(3),
        _ => None,
    }
}

fn common_attrs(class: &str) -> Option<&'static [&'static str]> {
    Some(match class {
        "IFCPROJECT" => &["GlobalId", "OwnerHistory", "Name", "Description", "ObjectType", "LongName", "Phase", "RepresentationContexts", "UnitsInContext"],
        "IFCSITE" => &[
            "GlobalId", "OwnerHistory", "Name", "Description", "ObjectType", "ObjectPlacement", "Representation", "LongName",
            "CompositionType", "RefLatitude", "RefLongitude", "RefElevation", "LandTitleNumber", "SiteAddress",
        ],
        "IFCBUILDING" => &[
            "GlobalId", "OwnerHistory", "Name", "Description", "ObjectType", "ObjectPlacement", "Representation", "LongName",
            "CompositionType", "ElevationOfRefHeight", "ElevationOfTerrain", "BuildingAddress",
        ],
        "IFCBUILDINGSTOREY" => &[
            "GlobalId", "OwnerHistory", "Name", "Description", "ObjectType", "ObjectPlacement", "Representation", "LongName",
            "CompositionType", "Elevation",
        ],
        "IFCSPACE" => &[
            "GlobalId", "OwnerHistory", "Name", "Description", "ObjectType", "ObjectPlacement", "Representation", "LongName",
            "CompositionType", "", "ElevationWithFlooring",
        ],
        "IFCRELCONTAINEDINSPATIALSTRUCTURE" | "IFCRELREFERENCEDINSPATIALSTRUCTURE" => {
            &["GlobalId", "OwnerHistory", "Name", "Description", "RelatedElements", "RelatingStructure"]
        }
        "IFCRELAGGREGATES" | "IFCRELNESTS" => &["GlobalId", "OwnerHistory", "Name", "Description", "RelatingObject", "RelatedObjects"],
        "IFCRELDEFINESBYPROPERTIES" => &["GlobalId", "OwnerHistory", "Name", "Description", "RelatedObjects", "RelatingPropertyDefinition"],
        "IFCPROPERTYSET" => &["GlobalId", "OwnerHistory", "Name", "Description", "HasProperties"],
        "IFCPROPERTYSINGLEVALUE" => &["Name", "Description", "NominalValue", "Unit"],
        "IFCUNITASSIGNMENT" => &["Units"],
        "IFCSIUNIT" => &["Dimensions", "UnitType", "Prefix", "Name"],
        "IFCCONVERSIONBASEDUNIT" => &["Dimensions", "UnitType", "Name", "ConversionFactor"],
        "IFCMEASUREWITHUNIT" => &["ValueComponent", "UnitComponent"],
        "IFCGEOMETRICREPRESENTATIONCONTEXT" => {
            &["ContextIdentifier", "ContextType", "CoordinateSpaceDimension", "Precision", "WorldCoordinateSystem", "TrueNorth"]
        }
        "IFCMAPCONVERSION" => &["SourceCRS", "TargetCRS", "Eastings", "Northings", "OrthogonalHeight", "XAxisAbscissa", "XAxisOrdinate", "Scale"],
        "IFCLOCALPLACEMENT" => &["PlacementRelTo", "RelativePlacement"],
        "IFCAXIS2PLACEMENT3D" => &["Location", "Axis", "RefDirection"],
        "IFCAXIS2PLACEMENT2D" => &["Location", "RefDirection"],
        "IFCCARTESIANPOINT" => &["Coordinates"],
        "IFCDIRECTION" => &["DirectionRatios"],
        "IFCPRODUCTDEFINITIONSHAPE" => &["Name", "Description", "Representations"],
        "IFCSHAPEREPRESENTATION" => &["ContextOfItems", "RepresentationIdentifier", "RepresentationType", "Items"],
        "IFCEXTRUDEDAREASOLID" => &["SweptArea", "Position", "ExtrudedDirection", "Depth"],
        "IFCRECTANGLEPROFILEDEF" => &["ProfileType", "ProfileName", "Position", "XDim", "YDim"],
        "IFCCIRCLEPROFILEDEF" => &["ProfileType", "ProfileName", "Position", "Radius"],
        "IFCARBITRARYCLOSEDPROFILEDEF" => &["ProfileType", "ProfileName", "OuterCurve"],
        "IFCARBITRARYPROFILEDEFWITHVOIDS" => &["ProfileType", "ProfileName", "OuterCurve", "InnerCurves"],
        "IFCPOLYLINE" => &["Points"],
        "IFCINDEXEDPOLYCURVE" => &["Points", "Segments", "SelfIntersect"],
        "IFCCARTESIANPOINTLIST2D" | "IFCCARTESIANPOINTLIST3D" => &["CoordList"],
        "IFCFACETEDBREP" | "IFCFACETEDBREPWITHVOIDS" => &["Outer", "Voids"],
        "IFCCLOSEDSHELL" | "IFCOPENSHELL" | "IFCCONNECTEDFACESET" => &["CfsFaces"],
        "IFCFACE" => &["Bounds"],
        "IFCFACEBOUND" | "IFCFACEOUTERBOUND" => &["Bound", "Orientation"],
        "IFCPOLYLOOP" => &["Polygon"],
        "IFCSHELLBASEDSURFACEMODEL" => &["SbsmBoundary"],
        "IFCFACEBASEDSURFACEMODEL" => &["FbsmFaces"],
        "IFCTRIANGULATEDFACESET" => &["Coordinates", "Normals", "Closed", "CoordIndex", "PnIndex"],
        "IFCPOLYGONALFACESET" => &["Coordinates", "Closed", "Faces", "PnIndex"],
        "IFCINDEXEDPOLYGONALFACE" => &["CoordIndex"],
        "IFCINDEXEDPOLYGONALFACEWITHVOIDS" => &["CoordIndex", "InnerCoordIndices"],
        "IFCMAPPEDITEM" => &["MappingSource", "MappingTarget"],
        "IFCREPRESENTATIONMAP" => &["MappingOrigin", "MappedRepresentation"],
        "IFCCARTESIANTRANSFORMATIONOPERATOR3D" => &["Axis1", "Axis2", "LocalOrigin", "Scale", "Axis3"],
        "IFCCARTESIANTRANSFORMATIONOPERATOR3DNONUNIFORM" => &["Axis1", "Axis2", "LocalOrigin", "Scale", "Axis3", "Scale2", "Scale3"],
        "IFCBOOLEANRESULT" | "IFCBOOLEANCLIPPINGRESULT" => &["Operator", "FirstOperand", "SecondOperand"],
        c if is_product(c) => &PRODUCT,
        c if c.starts_with("IFCREL") => &ROOT,
        _ => return None,
    })
}

/// Physical products that carry `ObjectPlacement` and `Representation` at the
/// standard positions.
fn is_product(class: &str) -> bool {
    class.starts_with("IFC") && !class.starts_with("IFCREL") && (is_element_class(class) || class == "IFCOPENINGELEMENT")
}

/// Heuristic membership test for `IfcElement` subtypes (building elements,
/// distribution elements, furnishing, proxies, openings, ...).
pub fn is_element_class(class: &str) -> bool {
    const NON_ELEMENTS: &[&str] = &[
        "IFCPROJECT", "IFCSITE", "IFCBUILDING", "IFCBUILDINGSTOREY", "IFCSPACE", "IFCZONE", "IFCGRID", "IFCANNOTATION",
    ];
    const ELEMENT_PREFIXES: &[&str] = &[
        "IFCWALL", "IFCSLAB", "IFCBEAM", "IFCCOLUMN", "IFCDOOR", "IFCWINDOW", "IFCROOF", "IFCSTAIR", "IFCRAMP", "IFCRAILING",
        "IFCCOVERING", "IFCCURTAINWALL", "IFCPLATE", "IFCMEMBER", "IFCFOOTING", "IFCPILE", "IFCBUILDINGELEMENT", "IFCFURNISH",
        "IFCFURNITURE", "IFCSYSTEMFURNITURE", "IFCFLOW", "IFCDISTRIBUTION", "IFCENERGYCONVERSION", "IFCTRANSPORTELEMENT",
        "IFCCHIMNEY", "IFCSHADINGDEVICE", "IFCOPENINGELEMENT", "IFCELEMENTASSEMBLY", "IFCDISCRETEACCESSORY", "IFCFASTENER",
        "IFCMECHANICALFASTENER", "IFCREINFORCING", "IFCTENDON", "IFCVIRTUALELEMENT", "IFCGEOGRAPHICELEMENT", "IFCCIVILELEMENT",
        "IFCAIRTERMINAL", "IFCPIPE", "IFCDUCT", "IFCCABLE", "IFCLIGHTFIXTURE", "IFCSANITARYTERMINAL", "IFCPUMP", "IFCFAN",
        "IFCTANK", "IFCVALVE", "IFCBOILER", "IFCCHILLER", "IFCELECTRIC", "IFCUNITARYEQUIPMENT", "IFCSWITCHINGDEVICE",
        "IFCOUTLET", "IFCFIRESUPPRESSIONTERMINAL", "IFCSPACEHEATER", "IFCPROXY",
    ];
    !NON_ELEMENTS.contains(&class) && ELEMENT_PREFIXES.iter().any(|p| class.starts_with(p)) && !class.ends_with("TYPE")
}

/// Classes left out of footprints and semantics-sensitive measurements.
pub fn is_opening_or_furniture(class: &str) -> bool {
    class == "IFCOPENINGELEMENT"
        || class.starts_with("IFCFURNISHINGELEMENT")
        || class == "IFCFURNITURE"
        || class == "IFCSYSTEMFURNITUREELEMENT"
}
