use std::fmt;

use crate::ocl::CmpOp;

/// Store-wide object identifier. Never reused.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectId(pub u64);

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Runtime values. `Undefined` is an ordinary value, not an error.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Undefined,
    Bool(bool),
    Int(i64),
    Real(f64),
    Str(String),
    /// Days since epoch.
    Date(i64),
    Enum {
        ty: String,
        literal: String,
    },
    Object(ObjectId),
    Set(Vec<ObjectId>),
}

impl Value {
    pub fn is_undefined(&self) -> bool {
        matches!(self, Value::Undefined)
    }

    /// Boolean reading used in guards: anything but `true` is false.
    pub fn truthy(&self) -> bool {
        matches!(self, Value::Bool(true))
    }

    pub fn enum_lit(ty: &str, literal: &str) -> Value {
        Value::Enum {
            ty: ty.to_string(),
            literal: literal.to_string(),
        }
    }

    pub fn as_object(&self) -> Option<ObjectId> {
        match self {
            Value::Object(id) => Some(*id),
            _ => None,
        }
    }

    fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(n) | Value::Date(n) => Some(*n as f64),
            Value::Real(x) => Some(*x),
            _ => None,
        }
    }

    /// Compares two values. `None` when either side is undefined or the
    /// pair is not comparable.
    pub fn compare(&self, op: CmpOp, other: &Value) -> Option<bool> {
        use std::cmp::Ordering;
        let ord: Option<Ordering> = match (self, other) {
            (Value::Undefined, _) | (_, Value::Undefined) => return None,
            (Value::Int(a) | Value::Date(a), Value::Int(b) | Value::Date(b)) => Some(a.cmp(b)),
            (Value::Real(_) | Value::Int(_), Value::Real(_) | Value::Int(_)) => {
                self.as_f64()?.partial_cmp(&other.as_f64()?)
            }
            (Value::Str(a), Value::Str(b)) => Some(a.cmp(b)),
            (Value::Bool(a), Value::Bool(b)) if op.is_equality() => Some(a.cmp(b)),
            (Value::Enum { ty: t1, literal: a }, Value::Enum { ty: t2, literal: b })
                if op.is_equality() =>
            {
                return Some((t1 == t2 && a == b) == (op == CmpOp::Eq));
            }
            (Value::Object(a), Value::Object(b)) if op.is_equality() => Some(a.cmp(b)),
            (Value::Set(a), Value::Set(b)) if op.is_equality() => {
                let norm = |s: &[ObjectId]| {
                    let mut v = s.to_vec();
                    v.sort();
                    v.dedup();
                    v
                };
                return Some((norm(a) == norm(b)) == (op == CmpOp::Eq));
            }
            _ => return None,
        };
        let ord = ord?;
        Some(match op {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ne => ord != Ordering::Equal,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
        })
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Undefined => f.write_str("undefined"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Real(x) => f.write_str(&crate::ocl::real_text(*x)),
            Value::Str(s) => f.write_str(&crate::ocl::quote_str(s)),
            Value::Date(d) => write!(f, "day {d}"),
            Value::Enum { ty, literal } => write!(f, "{ty}::{literal}"),
            Value::Object(id) => write!(f, "{id}"),
            Value::Set(ids) => {
                f.write_str("{")?;
                for (i, id) in ids.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{id}")?;
                }
                f.write_str("}")
            }
        }
    }
}
