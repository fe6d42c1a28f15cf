use std::fmt;

/// One attribute value of a STEP record.
#[derive(Debug, Clone, PartialEq)]
pub enum StepValue {
    Integer(i64),
    Real(f64),
    String(String),
    /// Enumeration token without the surrounding dots, e.g. `METRE`.
    Enum(String),
    /// Reference to another instance, `#id`.
    Ref(u64),
    /// Typed parameter such as `IFCLABEL('x')`.
    Typed(String, Box<StepValue>),
    List(Vec<StepValue>),
    /// `$`
    Unset,
    /// `*`
    Derived,
}

impl StepValue {
    pub fn as_ref_id(&self) -> Option<u64> {
        match self {
            StepValue::Ref(id) => Some(*id),
            _ => None,
        }
    }

    /// Numeric value; integers are widened and typed measures are unwrapped.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            StepValue::Real(v) => Some(*v),
            StepValue::Integer(v) => Some(*v as f64),
            StepValue::Typed(_, inner) => inner.as_f64(),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            StepValue::String(s) => Some(s),
            StepValue::Typed(_, inner) => inner.as_str(),
            _ => None,
        }
    }

    pub fn as_enum(&self) -> Option<&str> {
        match self {
            StepValue::Enum(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[StepValue]> {
        match self {
            StepValue::List(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_unset(&self) -> bool {
        matches!(self, StepValue::Unset)
    }

    /// All entity references reachable inside this value, in source order.
    pub fn refs(&self, out: &mut Vec<u64>) {
        match self {
            StepValue::Ref(id) => out.push(*id),
            StepValue::Typed(_, inner) => inner.refs(out),
            StepValue::List(items) => items.iter().for_each(|v| v.refs(out)),
            _ => {}
        }
    }

    pub(crate) fn replace_refs(&mut self, f: &mut impl FnMut(u64) -> Option<StepValue>) {
        match self {
            StepValue::Ref(id) => {
                if let Some(v) = f(*id) {
                    *self = v;
                }
            }
            StepValue::Typed(_, inner) => inner.replace_refs(f),
            StepValue::List(items) => items.iter_mut().for_each(|v| v.replace_refs(f)),
            _ => {}
        }
    }
}

/// Writes a real so that it re-parses to the identical `f64`.
pub(crate) fn write_real(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    let s = format!("{v:?}");
    match s.split_once('e') {
        Some((mant, exp)) if mant.contains('.') => write!(f, "{mant}E{exp}"),
        Some((mant, exp)) => write!(f, "{mant}.E{exp}"),
        None => f.write_str(&s),
    }
}

fn write_string(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("'")?;
    for c in s.chars() {
        match c {
            '\'' => f.write_str("''")?,
            '\\' => f.write_str("\\\\")?,
            c if (' '..='~').contains(&c) => write!(f, "{c}")?,
            c => {
                let mut buf = [0u16; 2];
                f.write_str("\\X2\\")?;
                for unit in c.encode_utf16(&mut buf) {
                    write!(f, "{unit:04X}")?;
                }
                f.write_str("\\X0\\")?;
            }
        }
    }
    f.write_str("'")
}

impl fmt::Display for StepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepValue::Integer(v) => write!(f, "{v}"),
            StepValue::Real(v) => write_real(f, *v),
            StepValue::String(s) => write_string(f, s),
            StepValue::Enum(s) => write!(f, ".{s}."),
            StepValue::Ref(id) => write!(f, "#{id}"),
            StepValue::Typed(name, inner) => write!(f, "{name}({inner})"),
            StepValue::List(items) => {
                f.write_str("(")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(")")
            }
            StepValue::Unset => f.write_str("$"),
            StepValue::Derived => f.write_str("*"),
        }
    }
}

/// A decoded `#id=CLASS(...)` record.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityInstance {
    pub id: u64,
    /// Upper-case class name, e.g. `IFCWALL`.
    pub class: String,
    pub attrs: Vec<StepValue>,
}

impl EntityInstance {
    pub fn attr(&self, index: usize) -> Option<&StepValue> {
        self.attrs.get(index)
    }

    pub fn is(&self, class: &str) -> bool {
        self.class == class
    }
}

impl fmt::Display for EntityInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}={}(", self.id, self.class)?;
        for (i, v) in self.attrs.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(");")
    }
}
