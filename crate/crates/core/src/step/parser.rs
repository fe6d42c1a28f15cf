//! ISO 10303-21 physical file reader.

use std::collections::{BTreeMap, HashMap};

use super::georef::GeoRef;
use super::schema::SchemaVersion;
use super::value::{EntityInstance, StepValue};
use super::StepError;

/// Decoded instance graph of one IFC file.
#[derive(Debug, Clone)]
pub struct IfcGraph {
    pub(crate) instances: BTreeMap<u64, EntityInstance>,
    by_class: HashMap<String, Vec<u64>>,
    /// Schema identifier as written in `FILE_SCHEMA`, e.g. `IFC2X3`.
    pub schema_id: String,
    pub schema: SchemaVersion,
    /// Meters per file length unit. 1.0 until units are resolved.
    pub length_to_meters: f64,
    pub georef: GeoRef,
    /// Parser and loader warnings, in the order they were raised.
    pub warnings: Vec<String>,
    /// Display name (usually the file name) used in evidence strings.
    pub name: String,
}

impl IfcGraph {
    pub(crate) fn from_instances(instances: BTreeMap<u64, EntityInstance>, schema_id: String, warnings: Vec<String>) -> Self {
        let mut by_class: HashMap<String, Vec<u64>> = HashMap::new();
        for inst in instances.values() {
            by_class.entry(inst.class.clone()).or_default().push(inst.id);
        }
        IfcGraph {
            instances,
            by_class,
            schema: SchemaVersion::from_id(&schema_id),
            schema_id,
            length_to_meters: 1.0,
            georef: GeoRef::default(),
            warnings,
            name: String::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&EntityInstance> {
        self.instances.get(&id)
    }

    /// Instances in ascending id order.
    pub fn instances(&self) -> impl Iterator<Item = &EntityInstance> {
        self.instances.values()
    }

    /// Ids of all instances of exactly `class` (upper case), ascending.
    pub fn ids_of(&self, class: &str) -> &[u64] {
        self.by_class.get(class).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn of_class<'a>(&'a self, class: &str) -> impl Iterator<Item = &'a EntityInstance> + 'a {
        self.ids_of(class).iter().filter_map(move |id| self.instances.get(id))
    }

    /// Follows attribute `index` of `id` when it is a reference.
    pub fn deref(&self, id: u64, index: usize) -> Option<&EntityInstance> {
        let target = self.get(id)?.attr(index)?.as_ref_id()?;
        self.get(target)
    }

    /// Named attribute lookup through the schema attribute map.
    pub fn attr<'a>(&self, inst: &'a EntityInstance, name: &str) -> Option<&'a StepValue> {
        let idx = self.schema.attr_index(&inst.class, name)?;
        inst.attr(idx).filter(|v| !v.is_unset())
    }

    /// Serializes the instance stream back to a physical file.
    pub fn to_step(&self) -> String {
        let mut out = String::from("ISO-10303-21;\nHEADER;\nFILE_DESCRIPTION((''),'2;1');\n");
        out.push_str("FILE_NAME('','',(''),(''),'','','');\n");
        out.push_str(&format!("FILE_SCHEMA(('{}'));\nENDSEC;\nDATA;\n", self.schema_id));
        for inst in self.instances.values() {
            out.push_str(&inst.to_string());
            out.push('\n');
        }
        out.push_str("ENDSEC;\nEND-ISO-10303-21;\n");
        out
    }
}

/// Decodes a physical file. In strict mode dangling references are an error;
/// otherwise they become `$` with a warning.
pub fn parse_step(bytes: &[u8], strict: bool) -> Result<IfcGraph, StepError> {
    let mut p = Parser { src: bytes, pos: 0, line: 1, col: 1, warnings: Vec::new() };
    p.skip_ws()?;
    if !p.eat_keyword_exact("ISO-10303-21") {
        return Err(StepError::MissingHeader);
    }
    p.expect(b';')?;

    let mut schema_id = None;
    let mut instances = BTreeMap::new();
    loop {
        p.skip_ws()?;
        if p.at_end() {
            p.warnings.push("missing END-ISO-10303-21 trailer".into());
            break;
        }
        if p.eat_keyword_exact("END-ISO-10303-21") {
            p.skip_ws()?;
            p.expect(b';')?;
            break;
        }
        let section = p.keyword()?;
        match section.as_str() {
            "HEADER" => {
                p.expect(b';')?;
                loop {
                    p.skip_ws()?;
                    let kw = p.keyword()?;
                    if kw == "ENDSEC" {
                        p.expect(b';')?;
                        break;
                    }
                    let params = p.param_list()?;
                    p.expect(b';')?;
                    if kw == "FILE_SCHEMA" {
                        schema_id = first_string(&params);
                    }
                }
            }
            "DATA" => {
                p.skip_ws()?;
                if p.peek() == Some(b'(') {
                    p.param_list()?;
                }
                p.expect(b';')?;
                loop {
                    p.skip_ws()?;
                    if p.peek() == Some(b'#') {
                        let (line, col) = (p.line, p.col);
                        let inst = p.instance()?;
                        if instances.contains_key(&inst.id) {
                            return Err(StepError::Syntax { line, col, message: format!("duplicate instance id #{}", inst.id) });
                        }
                        instances.insert(inst.id, inst);
                    } else {
                        let kw = p.keyword()?;
                        if kw != "ENDSEC" {
                            return Err(p.error(format!("expected instance or ENDSEC, found {kw}")));
                        }
                        p.expect(b';')?;
                        break;
                    }
                }
            }
            other => return Err(p.error(format!("unexpected section {other}"))),
        }
    }

    let mut warnings = std::mem::take(&mut p.warnings);
    let schema_id = match schema_id {
        Some(s) => s.to_ascii_uppercase(),
        None => {
            warnings.push("FILE_SCHEMA missing from header".into());
            String::new()
        }
    };
    if !matches!(SchemaVersion::from_id(&schema_id), SchemaVersion::Ifc2x3 | SchemaVersion::Ifc4) {
        warnings.push(format!("unsupported schema '{schema_id}', parsing best-effort"));
    }

    resolve_dangling(&mut instances, strict, &mut warnings)?;
    Ok(IfcGraph::from_instances(instances, schema_id, warnings))
}

fn first_string(params: &[StepValue]) -> Option<String> {
    params.iter().find_map(|v| match v {
        StepValue::String(s) => Some(s.clone()),
        StepValue::List(items) => first_string(items),
        _ => None,
    })
}

fn resolve_dangling(instances: &mut BTreeMap<u64, EntityInstance>, strict: bool, warnings: &mut Vec<String>) -> Result<(), StepError> {
    let mut missing = Vec::new();
    for inst in instances.values() {
        let mut refs = Vec::new();
        inst.attrs.iter().for_each(|v| v.refs(&mut refs));
        for r in refs {
            if !instances.contains_key(&r) {
                missing.push((inst.id, r));
            }
        }
    }
    if missing.is_empty() {
        return Ok(());
    }
    if strict {
        return Err(StepError::DanglingReference(missing[0].1));
    }
    for (owner, target) in missing {
        warnings.push(format!("#{owner} references missing #{target}; treated as unset"));
        let inst = instances.get_mut(&owner).expect("owner exists");
        for v in inst.attrs.iter_mut() {
            v.replace_refs(&mut |id| (id == target).then_some(StepValue::Unset));
        }
    }
    Ok(())
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
    warnings: Vec<String>,
}

impl Parser<'_> {
    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>) -> StepError {
        StepError::Syntax { line: self.line, col: self.col, message: message.into() }
    }

    fn skip_ws(&mut self) -> Result<(), StepError> {
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'/') if self.src.get(self.pos + 1) == Some(&b'*') => {
                    let (line, col) = (self.line, self.col);
                    self.bump();
                    self.bump();
                    loop {
                        match self.bump() {
                            Some(b'*') if self.peek() == Some(b'/') => {
                                self.bump();
                                break;
                            }
                            Some(_) => {}
                            None => return Err(StepError::Syntax { line, col, message: "unterminated comment".into() }),
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), StepError> {
        self.skip_ws()?;
        match self.peek() {
            Some(x) if x == c => {
                self.bump();
                Ok(())
            }
            Some(x) => Err(self.error(format!("expected '{}', found '{}'", c as char, x as char))),
            None => Err(self.error(format!("expected '{}', found end of input", c as char))),
        }
    }

    fn eat_keyword_exact(&mut self, kw: &str) -> bool {
        if self.src[self.pos..].starts_with(kw.as_bytes()) {
            for _ in 0..kw.len() {
                self.bump();
            }
            true
        } else {
            false
        }
    }

    fn keyword(&mut self) -> Result<String, StepError> {
        self.skip_ws()?;
        let start = self.pos;
        if self.peek() == Some(b'!') {
            self.bump();
        }
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {}
            Some(c) => return Err(self.error(format!("expected keyword, found '{}'", c as char))),
            None => return Err(self.error("expected keyword, found end of input")),
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_' || c == b'-') {
            self.bump();
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).to_ascii_uppercase())
    }

    fn instance(&mut self) -> Result<EntityInstance, StepError> {
        self.expect(b'#')?;
        let id = self.digits()?;
        if id == 0 {
            return Err(self.error("instance id must be positive"));
        }
        self.expect(b'=')?;
        self.skip_ws()?;
        let (class, attrs) = if self.peek() == Some(b'(') {
            // complex instance: (A(...)B(...))
            self.bump();
            let mut names = Vec::new();
            let mut attrs = Vec::new();
            loop {
                self.skip_ws()?;
                if self.peek() == Some(b')') {
                    self.bump();
                    break;
                }
                names.push(self.keyword()?);
                attrs.extend(self.param_list()?);
            }
            (names.join("+"), attrs)
        } else {
            let class = self.keyword()?;
            (class, self.param_list()?)
        };
        self.expect(b';')?;
        Ok(EntityInstance { id, class, attrs })
    }

    fn digits(&mut self) -> Result<u64, StepError> {
        self.skip_ws()?;
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
        if start == self.pos {
            return Err(self.error("expected digits"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.error("instance id out of range"))
    }

    fn param_list(&mut self) -> Result<Vec<StepValue>, StepError> {
        self.expect(b'(')?;
        let mut out = Vec::new();
        self.skip_ws()?;
        if self.peek() == Some(b')') {
            self.bump();
            return Ok(out);
        }
        loop {
            out.push(self.param()?);
            self.skip_ws()?;
            match self.bump() {
                Some(b',') => continue,
                Some(b')') => return Ok(out),
                Some(c) => return Err(self.error(format!("expected ',' or ')', found '{}'", c as char))),
                None => return Err(self.error("unexpected end of input in parameter list")),
            }
        }
    }

    fn param(&mut self) -> Result<StepValue, StepError> {
        self.skip_ws()?;
        match self.peek() {
            Some(b'$') => {
                self.bump();
                Ok(StepValue::Unset)
            }
            Some(b'*') => {
                self.bump();
                Ok(StepValue::Derived)
            }
            Some(b'#') => {
                self.bump();
                let id = self.digits()?;
                if id == 0 {
                    return Err(self.error("entity reference must be positive"));
                }
                Ok(StepValue::Ref(id))
            }
            Some(b'\'') => self.string().map(StepValue::String),
            Some(b'"') => {
                self.bump();
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c != b'"') {
                    self.bump();
                }
                let s = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
                self.expect(b'"')?;
                Ok(StepValue::String(s))
            }
            Some(b'.') => {
                self.bump();
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    self.bump();
                }
                let s = String::from_utf8_lossy(&self.src[start..self.pos]).to_ascii_uppercase();
                if self.peek() != Some(b'.') {
                    return Err(self.error("unterminated enumeration"));
                }
                self.bump();
                Ok(StepValue::Enum(s))
            }
            Some(b'(') => self.param_list().map(StepValue::List),
            Some(c) if c == b'-' || c == b'+' || c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'!' => {
                let name = self.keyword()?;
                self.expect(b'(')?;
                let inner = self.param()?;
                self.expect(b')')?;
                Ok(StepValue::Typed(name, Box::new(inner)))
            }
            Some(c) => Err(self.error(format!("unexpected character '{}'", c as char))),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<StepValue, StepError> {
        let start = self.pos;
        if matches!(self.peek(), Some(b'-' | b'+')) {
            self.bump();
        }
        let mut real = false;
        while let Some(c) = self.peek() {
            match c {
                b'0'..=b'9' => {}
                b'.' => real = true,
                b'E' | b'e' => {
                    real = true;
                    if matches!(self.src.get(self.pos + 1), Some(b'-' | b'+')) {
                        self.bump();
                    }
                }
                _ => break,
            }
            self.bump();
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        if real {
            // Rust does not accept "1." followed by exponent without digits, e.g. "1.E-5".
            let normalized = text.replace(".E", ".0E").replace(".e", ".0e");
            normalized
                .parse::<f64>()
                .map(StepValue::Real)
                .map_err(|_| self.error(format!("malformed real '{text}'")))
        } else {
            text.parse::<i64>()
                .map(StepValue::Integer)
                .map_err(|_| self.error(format!("malformed integer '{text}'")))
        }
    }

    fn string(&mut self) -> Result<String, StepError> {
        let (line, col) = (self.line, self.col);
        self.bump();
        let mut raw = Vec::new();
        loop {
            match self.bump() {
                Some(b'\'') => {
                    if self.peek() == Some(b'\'') {
                        self.bump();
                        raw.push(b'\'');
                    } else {
                        break;
                    }
                }
                Some(c) => raw.push(c),
                None => return Err(StepError::Syntax { line, col, message: "unterminated string".into() }),
            }
        }
        let (s, unknown) = decode_string(&raw);
        for esc in unknown {
            self.warnings.push(format!("line {line}: unrecognized string escape '{esc}' kept verbatim"));
        }
        Ok(s)
    }
}

/// Decodes STEP string escapes. Returns the text and any unrecognized
/// escape sequences, which are kept verbatim.
pub(crate) fn decode_string(raw: &[u8]) -> (String, Vec<String>) {
    let mut out = String::new();
    let mut unknown = Vec::new();
    let mut i = 0;
    let hex = |b: &[u8]| -> Option<u32> { u32::from_str_radix(std::str::from_utf8(b).ok()?, 16).ok() };
    while i < raw.len() {
        let c = raw[i];
        if c != b'\\' {
            // copy a run of plain bytes as UTF-8 (lossy)
            let start = i;
            while i < raw.len() && raw[i] != b'\\' {
                i += 1;
            }
            out.push_str(&String::from_utf8_lossy(&raw[start..i]));
            continue;
        }
        let rest = &raw[i..];
        if rest.starts_with(b"\\\\") {
            out.push('\\');
            i += 2;
        } else if rest.starts_with(b"\\X2\\") {
            let body_start = i + 4;
            let end = find(raw, body_start, b"\\X0\\");
            let units: Option<Vec<u16>> = end.and_then(|end| {
                let body = &raw[body_start..end];
                (body.len() % 4 == 0).then(|| body.chunks(4).map(|c| hex(c).map(|v| v as u16)).collect())?
            });
            match (end, units) {
                (Some(end), Some(units)) => {
                    out.push_str(&String::from_utf16_lossy(&units));
                    i = end + 4;
                }
                _ => {
                    unknown.push("\\X2\\".into());
                    out.push_str("\\X2\\");
                    i += 4;
                }
            }
        } else if rest.starts_with(b"\\X4\\") {
            let body_start = i + 4;
            let end = find(raw, body_start, b"\\X0\\");
            let chars: Option<String> = end.and_then(|end| {
                let body = &raw[body_start..end];
                (body.len() % 8 == 0).then(|| body.chunks(8).map(|c| hex(c).and_then(char::from_u32)).collect())?
            });
            match (end, chars) {
                (Some(end), Some(s)) => {
                    out.push_str(&s);
                    i = end + 4;
                }
                _ => {
                    unknown.push("\\X4\\".into());
                    out.push_str("\\X4\\");
                    i += 4;
                }
            }
        } else if rest.starts_with(b"\\X\\") && rest.len() >= 5 {
            match hex(&rest[3..5]).and_then(char::from_u32) {
                Some(ch) => {
                    out.push(ch);
                    i += 5;
                }
                None => {
                    unknown.push("\\X\\".into());
                    out.push_str("\\X\\");
                    i += 3;
                }
            }
        } else if rest.starts_with(b"\\S\\") && rest.len() >= 4 {
            out.push(char::from(rest[3].wrapping_add(128)));
            i += 4;
        } else if rest.len() >= 4 && rest[1] == b'P' && rest[3] == b'\\' && rest[2].is_ascii_uppercase() {
            // code page switch; the ISO 8859 page only affects \S\ which we map to Latin-1
            i += 4;
        } else {
            let end = (i + 2).min(raw.len());
            unknown.push(String::from_utf8_lossy(&raw[i..end]).into_owned());
            out.push('\\');
            i += 1;
        }
    }
    (out, unknown)
}

fn find(hay: &[u8], from: usize, needle: &[u8]) -> Option<usize> {
    hay.get(from..)?.windows(needle.len()).position(|w| w == needle).map(|p| p + from)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wrap(data: &str) -> String {
        format!("ISO-10303-21;\nHEADER;\nFILE_SCHEMA(('IFC2X3'));\nENDSEC;\nDATA;\n{data}\nENDSEC;\nEND-ISO-10303-21;\n")
    }

    #[test]
    fn minimal_wall() {
        let g = parse_step(wrap("#1=IFCWALL($,$,'w',$,$,$,$,$,$);").as_bytes(), true).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.get(1).unwrap().class, "IFCWALL");
        assert_eq!(g.get(1).unwrap().attrs.len(), 9);
        assert_eq!(g.schema_id, "IFC2X3");
    }

    #[test]
    fn missing_banner() {
        assert!(matches!(parse_step(b"HEADER;ENDSEC;", true), Err(StepError::MissingHeader)));
    }

    #[test]
    fn dangling_strict_and_lenient() {
        let src = wrap("#1=IFCWALL($);\n#2=IFCX(#99,(#1,#98));");
        assert!(matches!(parse_step(src.as_bytes(), true), Err(StepError::DanglingReference(99))));
        let g = parse_step(src.as_bytes(), false).unwrap();
        assert_eq!(g.get(2).unwrap().attrs[0], StepValue::Unset);
        assert_eq!(g.get(2).unwrap().attrs[1], StepValue::List(vec![StepValue::Ref(1), StepValue::Unset]));
        assert_eq!(g.warnings.len(), 2);
    }

    #[test]
    fn syntax_error_position() {
        let src = wrap("#1=IFCWALL($,,$);");
        match parse_step(src.as_bytes(), true) {
            Err(StepError::Syntax { line, col, .. }) => {
                assert_eq!(line, 6);
                assert_eq!(col, 14);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn values_and_comments() {
        let src = wrap(
            "/* a comment */ #3 = IFCTHING(-12, 1.5E-3, 2., .T., IFCLABEL('it''s'), *, (1,(2,3)), \"0FF\") ; /* trailing */",
        );
        let g = parse_step(src.as_bytes(), true).unwrap();
        let a = &g.get(3).unwrap().attrs;
        assert_eq!(a[0], StepValue::Integer(-12));
        assert_eq!(a[1], StepValue::Real(1.5e-3));
        assert_eq!(a[2], StepValue::Real(2.0));
        assert_eq!(a[3], StepValue::Enum("T".into()));
        assert_eq!(a[4], StepValue::Typed("IFCLABEL".into(), Box::new(StepValue::String("it's".into()))));
        assert_eq!(a[5], StepValue::Derived);
        assert_eq!(a[6].as_list().unwrap().len(), 2);
    }

    #[test]
    fn string_escapes() {
        assert_eq!(decode_string(br"Caf\X2\00E9\X0\").0, "Café");
        assert_eq!(decode_string(br"\S\i").0, "é");
        assert_eq!(decode_string(br"a\\b").0, "a\\b");
        assert_eq!(decode_string(br"\X\E9").0, "é");
        assert_eq!(decode_string(br"\X4\0001F600\X0\").0, "\u{1F600}");
        let (s, unknown) = decode_string(br"C:\dir");
        assert_eq!(s, r"C:\dir");
        assert_eq!(unknown.len(), 1);
    }

    #[test]
    fn complex_instance() {
        let g = parse_step(wrap("#1=(IFCA(1)IFCB(2,3));").as_bytes(), true).unwrap();
        assert_eq!(g.get(1).unwrap().class, "IFCA+IFCB");
        assert_eq!(g.get(1).unwrap().attrs.len(), 3);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let src = wrap("#1=IFCA(1);\n#1=IFCB(2);");
        assert!(matches!(parse_step(src.as_bytes(), true), Err(StepError::Syntax { .. })));
    }

    #[test]
    fn unknown_schema_warns() {
        let src = "ISO-10303-21;HEADER;FILE_SCHEMA(('AP214'));ENDSEC;DATA;#1=A(1);ENDSEC;END-ISO-10303-21;";
        let g = parse_step(src.as_bytes(), true).unwrap();
        assert!(g.warnings.iter().any(|w| w.contains("AP214")));
    }
}
