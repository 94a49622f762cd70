//! Syntax tree of a single API definition.
//!
//! The tree is a plain value: it carries no source positions, so two parses
//! of differently formatted but equivalent text compare equal.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Field optionality, ordered by permissiveness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optionality {
    Mandatory,
    /// Optional for input, guaranteed on output.
    Optin,
    Optional,
}

impl Optionality {
    /// Least upper bound in `Mandatory < Optin < Optional`.
    pub fn merge(self, other: Optionality) -> Optionality {
        self.max(other)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Optionality::Mandatory => "mandatory",
            Optionality::Optin => "optin",
            Optionality::Optional => "optional",
        }
    }

    /// Whether a writer may leave the field out of a request.
    pub fn optional_in_request(self) -> bool {
        self != Optionality::Mandatory
    }

    /// Whether a writer may leave the field out of a response.
    pub fn optional_in_response(self) -> bool {
        self == Optionality::Optional
    }
}

impl fmt::Display for Optionality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Type reference as written in a field or list element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TypeRef {
    Int32,
    /// `numeric(n)`; `None` is unbounded.
    Numeric(Option<u32>),
    /// `string(n)`; `None` is unbounded.
    String(Option<u32>),
    /// `T*` (bound `None`) or `T[n]`.
    List(Box<TypeRef>, Option<u32>),
    Named(String),
}

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeRef::Int32 => f.write_str("int32"),
            TypeRef::Numeric(None) => f.write_str("numeric"),
            TypeRef::Numeric(Some(n)) => write!(f, "numeric({n})"),
            TypeRef::String(None) => f.write_str("string"),
            TypeRef::String(Some(n)) => write!(f, "string({n})"),
            TypeRef::List(elem, None) => write!(f, "{elem}*"),
            TypeRef::List(elem, Some(n)) => write!(f, "{elem}[{n}]"),
            TypeRef::Named(name) => f.write_str(name),
        }
    }
}

/// `replaces X` / `replaces nothing` on types, enum members, services and
/// operations.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Replaces {
    Nothing,
    Name(String),
}

/// Possibly type-qualified field name in a field replaces clause.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FieldPath {
    pub owner: Option<String>,
    pub field: String,
}

impl fmt::Display for FieldPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.owner {
            Some(owner) => write!(f, "{owner}.{}", self.field),
            None => f.write_str(&self.field),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldReplaces {
    Nothing,
    /// Nonempty.
    Names(Vec<FieldPath>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Field {
    pub name: String,
    /// Explicit `as` name.
    pub alias: Option<String>,
    pub ty: TypeRef,
    pub optionality: Option<Optionality>,
    pub replaces: Option<FieldReplaces>,
}

impl Field {
    pub fn new(name: impl Into<String>, ty: TypeRef) -> Self {
        Field { name: name.into(), alias: None, ty, optionality: None, replaces: None }
    }

    pub fn internal_name(&self) -> &str {
        self.alias.as_deref().unwrap_or(&self.name)
    }
}

/// A record or exception type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordType {
    pub name: String,
    pub alias: Option<String>,
    pub is_abstract: bool,
    pub is_exception: bool,
    pub super_type: Option<String>,
    pub default_optionality: Option<Optionality>,
    pub fields: Vec<Field>,
    pub replaces: Option<Replaces>,
}

impl RecordType {
    pub fn new(name: impl Into<String>) -> Self {
        RecordType {
            name: name.into(),
            alias: None,
            is_abstract: false,
            is_exception: false,
            super_type: None,
            default_optionality: None,
            fields: Vec::new(),
            replaces: None,
        }
    }

    pub fn internal_name(&self) -> &str {
        self.alias.as_deref().unwrap_or(&self.name)
    }

    pub fn field(&self, name: &str) -> Option<&Field> {
        self.fields.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumMember {
    pub name: String,
    pub replaces: Option<Replaces>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumType {
    pub name: String,
    pub alias: Option<String>,
    pub members: Vec<EnumMember>,
    pub replaces: Option<Replaces>,
}

impl EnumType {
    pub fn internal_name(&self) -> &str {
        self.alias.as_deref().unwrap_or(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceOperation {
    pub name: String,
    pub alias: Option<String>,
    pub input: String,
    pub output: String,
    pub throws: Vec<String>,
    pub replaces: Option<Replaces>,
}

impl ServiceOperation {
    pub fn internal_name(&self) -> &str {
        self.alias.as_deref().unwrap_or(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Service {
    pub name: String,
    pub alias: Option<String>,
    pub operations: Vec<ServiceOperation>,
    pub replaces: Option<Replaces>,
}

impl Service {
    pub fn internal_name(&self) -> &str {
        self.alias.as_deref().unwrap_or(&self.name)
    }

    pub fn operation(&self, name: &str) -> Option<&ServiceOperation> {
        self.operations.iter().find(|op| op.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Element {
    Record(RecordType),
    Enum(EnumType),
    Service(Service),
}

impl Element {
    pub fn name(&self) -> &str {
        match self {
            Element::Record(r) => &r.name,
            Element::Enum(e) => &e.name,
            Element::Service(s) => &s.name,
        }
    }

    pub fn internal_name(&self) -> &str {
        match self {
            Element::Record(r) => r.internal_name(),
            Element::Enum(e) => e.internal_name(),
            Element::Service(s) => s.internal_name(),
        }
    }

    pub fn replaces(&self) -> Option<&Replaces> {
        match self {
            Element::Record(r) => r.replaces.as_ref(),
            Element::Enum(e) => e.replaces.as_ref(),
            Element::Service(s) => s.replaces.as_ref(),
        }
    }
}

/// One parsed `api` block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiDefinition {
    /// Dot-separated qualified name.
    pub name: String,
    pub elements: Vec<Element>,
}

impl ApiDefinition {
    pub fn new(name: impl Into<String>) -> Self {
        ApiDefinition { name: name.into(), elements: Vec::new() }
    }

    pub fn element(&self, name: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.name() == name)
    }

    pub fn record(&self, name: &str) -> Option<&RecordType> {
        match self.element(name) {
            Some(Element::Record(r)) => Some(r),
            _ => None,
        }
    }

    pub fn enum_type(&self, name: &str) -> Option<&EnumType> {
        match self.element(name) {
            Some(Element::Enum(e)) => Some(e),
            _ => None,
        }
    }

    pub fn service(&self, name: &str) -> Option<&Service> {
        match self.element(name) {
            Some(Element::Service(s)) => Some(s),
            _ => None,
        }
    }

    pub fn records(&self) -> impl Iterator<Item = &RecordType> {
        self.elements.iter().filter_map(|e| match e {
            Element::Record(r) => Some(r),
            _ => None,
        })
    }

    pub fn enums(&self) -> impl Iterator<Item = &EnumType> {
        self.elements.iter().filter_map(|e| match e {
            Element::Enum(e) => Some(e),
            _ => None,
        })
    }

    pub fn services(&self) -> impl Iterator<Item = &Service> {
        self.elements.iter().filter_map(|e| match e {
            Element::Service(s) => Some(s),
            _ => None,
        })
    }

    /// Whether any element, member, field or operation carries a
    /// `replaces` clause.
    pub fn has_replaces_clause(&self) -> bool {
        self.elements.iter().any(|e| {
            e.replaces().is_some()
                || match e {
                    Element::Record(r) => r.fields.iter().any(|f| f.replaces.is_some()),
                    Element::Enum(en) => en.members.iter().any(|m| m.replaces.is_some()),
                    Element::Service(s) => s.operations.iter().any(|o| o.replaces.is_some()),
                }
        })
    }

    /// A copy with every `replaces` clause removed.
    pub fn without_replaces(&self) -> ApiDefinition {
        let mut def = self.clone();
        for e in &mut def.elements {
            match e {
                Element::Record(r) => {
                    r.replaces = None;
                    r.fields.iter_mut().for_each(|f| f.replaces = None);
                }
                Element::Enum(en) => {
                    en.replaces = None;
                    en.members.iter_mut().for_each(|m| m.replaces = None);
                }
                Element::Service(s) => {
                    s.replaces = None;
                    s.operations.iter_mut().for_each(|o| o.replaces = None);
                }
            }
        }
        def
    }
}
