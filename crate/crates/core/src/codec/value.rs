use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A record: its type name and the fields that are present. An absent
/// optional field is simply missing from `fields`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordValue {
    #[serde(rename = "type")]
    pub type_name: String,
    #[serde(default)]
    pub fields: BTreeMap<String, Value>,
}

impl RecordValue {
    pub fn new(type_name: impl Into<String>) -> Self {
        RecordValue { type_name: type_name.into(), fields: BTreeMap::new() }
    }

    pub fn with(mut self, name: impl Into<String>, value: Value) -> Self {
        self.fields.insert(name.into(), value);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Value {
    Int32(i32),
    /// Decimal digits with an optional leading `-`.
    Numeric(String),
    String(String),
    List(Vec<Value>),
    Record(RecordValue),
    Enum(String),
    /// A record selected from a union.
    Union(RecordValue),
}

impl Value {
    pub fn string(s: impl Into<String>) -> Value {
        Value::String(s.into())
    }

    pub fn as_record(&self) -> Option<&RecordValue> {
        match self {
            Value::Record(r) | Value::Union(r) => Some(r),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int32(i) => write!(f, "{i}"),
            Value::Numeric(n) => f.write_str(n),
            Value::String(s) => write!(f, "{s:?}"),
            Value::List(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
            Value::Record(r) | Value::Union(r) => {
                write!(f, "{} {{", r.type_name)?;
                for (i, (k, v)) in r.fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, " {k}: {v}")?;
                }
                f.write_str(" }")
            }
            Value::Enum(m) => f.write_str(m),
        }
    }
}
