//! Flattened wire schemas and the merged internal representation.

mod internal;

pub use internal::{
    derive_internal, InternalElement, InternalEnum, InternalField, InternalOperation, InternalRecord, InternalRepresentation,
    InternalService, InternalType, SchemaError,
};

use std::fmt;

use indexmap::IndexMap;
use serde::Serialize;

use crate::adl::{ApiDefinition, Optionality, TypeRef};
use crate::flat::FlatDefinition;
use crate::revision::{RevisionHistory, RevisionId};

/// A type as it appears on the wire. Named references are resolved: records
/// with subtypes become unions, a union with one member collapses to it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TypeExpr {
    Int32,
    Numeric { digits: Option<u32> },
    String { length: Option<u32> },
    List { element: Box<TypeExpr>, bound: Option<u32> },
    Record { name: String },
    Enum { name: String },
    Union { members: Vec<String> },
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Int32 => f.write_str("int32"),
            TypeExpr::Numeric { digits: None } => f.write_str("numeric"),
            TypeExpr::Numeric { digits: Some(n) } => write!(f, "numeric({n})"),
            TypeExpr::String { length: None } => f.write_str("string"),
            TypeExpr::String { length: Some(n) } => write!(f, "string({n})"),
            TypeExpr::List { element, bound: None } => write!(f, "{element}*"),
            TypeExpr::List { element, bound: Some(n) } => write!(f, "{element}[{n}]"),
            TypeExpr::Record { name } | TypeExpr::Enum { name } => f.write_str(name),
            TypeExpr::Union { members } => write!(f, "union[{}]", members.join(", ")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemaField {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: TypeExpr,
    pub optionality: Optionality,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemaRecord {
    pub name: String,
    pub is_exception: bool,
    pub fields: Vec<SchemaField>,
}

impl SchemaRecord {
    pub fn field(&self, name: &str) -> Option<&SchemaField> {
        self.fields.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemaEnum {
    pub name: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SchemaType {
    Record(SchemaRecord),
    Enum(SchemaEnum),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemaOperation {
    pub name: String,
    pub input: TypeExpr,
    pub output: TypeExpr,
    pub throws: Vec<TypeExpr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemaService {
    pub name: String,
    pub operations: Vec<SchemaOperation>,
}

/// Flattened schema of one definition. Only concrete records and enums are
/// listed as types; `references` maps every declared type name, abstract
/// ones included, to the expression a reference to it stands for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Schema {
    pub revision: Option<RevisionId>,
    pub types: IndexMap<String, SchemaType>,
    pub references: IndexMap<String, TypeExpr>,
    pub services: Vec<SchemaService>,
}

impl Schema {
    pub fn record(&self, name: &str) -> Option<&SchemaRecord> {
        match self.types.get(name)? {
            SchemaType::Record(r) => Some(r),
            SchemaType::Enum(_) => None,
        }
    }

    pub fn enum_type(&self, name: &str) -> Option<&SchemaEnum> {
        match self.types.get(name)? {
            SchemaType::Enum(e) => Some(e),
            SchemaType::Record(_) => None,
        }
    }

    /// The wire type of a reference to the named type.
    pub fn type_expr(&self, name: &str) -> Option<&TypeExpr> {
        self.references.get(name)
    }

    pub fn service(&self, name: &str) -> Option<&SchemaService> {
        self.services.iter().find(|s| s.name == name)
    }
}

/// Derives the schema of one revision of a history.
pub fn derive_schema(history: &RevisionHistory, revision: RevisionId) -> Result<Schema, SchemaError> {
    let def = history.definition(revision).map_err(|_| SchemaError::UnknownRevision(revision))?;
    let mut schema = schema_of(def)?;
    schema.revision = Some(revision);
    Ok(schema)
}

/// Derives the schema of a standalone definition, such as a client's.
pub fn schema_of(def: &ApiDefinition) -> Result<Schema, SchemaError> {
    let flat = FlatDefinition::new(def);
    let mut references = IndexMap::new();
    for e in &def.elements {
        if let Some(en) = def.enum_type(e.name()) {
            references.insert(en.name.clone(), TypeExpr::Enum { name: en.name.clone() });
        } else if def.record(e.name()).is_some() {
            if let Some(expr) = union_expr(flat.concrete_members(e.name())) {
                references.insert(e.name().to_string(), expr);
            }
        }
    }

    let resolve = |ty: &TypeRef, path: &str| resolve_ref(ty, &references, path);

    let mut types = IndexMap::new();
    for e in &def.elements {
        if let Some(en) = def.enum_type(e.name()) {
            types.insert(
                en.name.clone(),
                SchemaType::Enum(SchemaEnum {
                    name: en.name.clone(),
                    members: en.members.iter().map(|m| m.name.clone()).collect(),
                }),
            );
        } else if let Some(rec) = flat.record(e.name()) {
            let mut fields = Vec::new();
            for f in &rec.fields {
                let path = format!("{}.{}", rec.name, f.name);
                fields.push(SchemaField { name: f.name.clone(), ty: resolve(&f.ty, &path)?, optionality: f.optionality });
            }
            if !rec.is_abstract {
                types.insert(
                    rec.name.clone(),
                    SchemaType::Record(SchemaRecord { name: rec.name.clone(), is_exception: rec.is_exception, fields }),
                );
            }
        }
    }

    let mut services = Vec::new();
    for s in def.services() {
        let mut operations = Vec::new();
        for op in &s.operations {
            let path = format!("{}.{}", s.name, op.name);
            let named = |n: &String| resolve(&TypeRef::Named(n.clone()), &path);
            operations.push(SchemaOperation {
                name: op.name.clone(),
                input: named(&op.input)?,
                output: named(&op.output)?,
                throws: op.throws.iter().map(named).collect::<Result<_, _>>()?,
            });
        }
        services.push(SchemaService { name: s.name.clone(), operations });
    }

    Ok(Schema { revision: None, types, references, services })
}

pub(crate) fn union_expr(members: Vec<String>) -> Option<TypeExpr> {
    match members.len() {
        0 => None,
        1 => Some(TypeExpr::Record { name: members.into_iter().next().unwrap() }),
        _ => Some(TypeExpr::Union { members }),
    }
}

pub(crate) fn resolve_ref(
    ty: &TypeRef,
    references: &IndexMap<String, TypeExpr>,
    path: &str,
) -> Result<TypeExpr, SchemaError> {
    Ok(match ty {
        TypeRef::Int32 => TypeExpr::Int32,
        TypeRef::Numeric(n) => TypeExpr::Numeric { digits: *n },
        TypeRef::String(n) => TypeExpr::String { length: *n },
        TypeRef::List(e, b) => {
            TypeExpr::List { element: Box::new(resolve_ref(e, references, path)?), bound: *b }
        }
        TypeRef::Named(n) => references
            .get(n)
            .cloned()
            .ok_or_else(|| SchemaError::EmptyUnion { path: path.to_string(), type_name: n.clone() })?,
    })
}
