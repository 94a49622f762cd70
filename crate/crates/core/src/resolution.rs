//! Matching a client definition against the provider revision it was
//! written for.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::Serialize;
use thiserror::Error;

use crate::adl::{ApiDefinition, Element, Optionality};
use crate::flat::FlatDefinition;
use crate::revision::{RevisionHistory, RevisionId};
use crate::schema::{
    derive_schema, schema_of, InternalElement, InternalRepresentation, Schema, SchemaError, SchemaType, TypeExpr,
};

/// Transfer direction. Optionality is interpreted per direction: optin
/// fields may be left out of requests but are always present in responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Request,
    Response,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Request => "request",
            Direction::Response => "response",
        })
    }
}

impl Direction {
    /// Whether a field with this optionality may be absent.
    pub fn may_omit(self, opt: Optionality) -> bool {
        match self {
            Direction::Request => opt.optional_in_request(),
            Direction::Response => opt.optional_in_response(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum ResolutionError {
    #[error("revision {0} is not supported")]
    UnsupportedRevision(RevisionId),
    #[error("client definition is for {found}, not {expected}")]
    ApiNameMismatch { expected: String, found: String },
    #[error("{path}: client definitions cannot contain replaces clauses")]
    ReplacesNotAllowed { path: String },
    #[error("{path}: not defined by revision {revision}")]
    UnknownElement { path: String, revision: RevisionId },
    #[error("{path}: client type {client} does not match provider type {provider}")]
    TypeMismatch { path: String, client: String, provider: String },
    #[error("{path}: required by the {side} in {direction}s but optional or missing on the other side")]
    MissingMandatoryElement { path: String, side: Side, direction: Direction },
    #[error("{0}")]
    Schema(#[from] SchemaError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Client,
    Provider,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Client => "client",
            Side::Provider => "provider",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ResolutionErrors(pub Vec<ResolutionError>);

impl fmt::Display for ResolutionErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl From<ResolutionError> for ResolutionErrors {
    fn from(e: ResolutionError) -> Self {
        ResolutionErrors(vec![e])
    }
}

/// A client definition bound to the provider revision it was written for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientDefinition {
    pub definition: ApiDefinition,
    pub revision: RevisionId,
}

impl ClientDefinition {
    pub fn new(definition: ApiDefinition, revision: RevisionId) -> Result<Self, ResolutionError> {
        if let Some(path) = first_replaces(&definition) {
            return Err(ResolutionError::ReplacesNotAllowed { path });
        }
        Ok(ClientDefinition { definition, revision })
    }
}

fn first_replaces(def: &ApiDefinition) -> Option<String> {
    for e in &def.elements {
        if e.replaces().is_some() {
            return Some(e.name().to_string());
        }
        match e {
            Element::Record(r) => {
                if let Some(f) = r.fields.iter().find(|f| f.replaces.is_some()) {
                    return Some(format!("{}.{}", r.name, f.name));
                }
            }
            Element::Enum(en) => {
                if let Some(m) = en.members.iter().find(|m| m.replaces.is_some()) {
                    return Some(format!("{}.{}", en.name, m.name));
                }
            }
            Element::Service(s) => {
                if let Some(o) = s.operations.iter().find(|o| o.replaces.is_some()) {
                    return Some(format!("{}.{}", s.name, o.name));
                }
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldMatch {
    /// Public name, shared by client and provider.
    pub name: String,
    pub client_internal: String,
    pub client_optionality: Optionality,
    /// Internal field of the provider; `None` for optional client fields the
    /// provider revision does not know.
    pub internal: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordMatch {
    pub name: String,
    pub client_internal: String,
    pub internal: String,
    pub fields: Vec<FieldMatch>,
    /// Provider fields the client does not declare.
    pub ignored: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EnumMatch {
    pub name: String,
    pub internal: String,
    /// Client member → internal member, in client order.
    pub members: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OperationMatch {
    pub service: String,
    pub name: String,
    pub internal_service: String,
    pub internal: String,
}

/// How the elements of a client schema correspond to the provider's
/// internal representation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResolutionMap {
    pub revision: RevisionId,
    pub client: Schema,
    pub internal: Schema,
    pub records: BTreeMap<String, RecordMatch>,
    pub enums: BTreeMap<String, EnumMatch>,
    pub operations: Vec<OperationMatch>,
    /// Internal record name → client record name.
    #[serde(skip)]
    client_records: BTreeMap<String, String>,
}

impl ResolutionMap {
    pub fn client_record_for(&self, internal: &str) -> Option<&str> {
        self.client_records.get(internal).map(String::as_str)
    }

    /// Human-readable match table.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "client of revision {}", self.revision);
        for r in self.records.values() {
            let _ = writeln!(out, "record {} -> {}", r.name, r.internal);
            for f in &r.fields {
                match &f.internal {
                    Some(i) => {
                        let _ = writeln!(out, "  {} -> {}.{}", f.name, r.internal, i);
                    }
                    None => {
                        let _ = writeln!(out, "  {} -> absent", f.name);
                    }
                }
            }
            for i in &r.ignored {
                let _ = writeln!(out, "  (ignored) {i}");
            }
        }
        for e in self.enums.values() {
            let _ = writeln!(out, "enum {} -> {}", e.name, e.internal);
            for (c, i) in &e.members {
                let _ = writeln!(out, "  {c} -> {i}");
            }
        }
        for o in &self.operations {
            let _ = writeln!(out, "operation {}.{} -> {}.{}", o.service, o.name, o.internal_service, o.internal);
        }
        out
    }
}

/// Resolves `client` against its provider revision and links every matched
/// element to the internal representation.
pub fn resolve(
    client: &ClientDefinition,
    history: &RevisionHistory,
    internal: &InternalRepresentation,
) -> Result<ResolutionMap, ResolutionErrors> {
    let rev = client.revision;
    if !internal.supported.contains(&rev) {
        return Err(ResolutionError::UnsupportedRevision(rev).into());
    }
    if client.definition.name != history.api_name() {
        return Err(ResolutionError::ApiNameMismatch {
            expected: history.api_name().to_string(),
            found: client.definition.name.clone(),
        }
        .into());
    }
    if let Some(path) = first_replaces(&client.definition) {
        return Err(ResolutionError::ReplacesNotAllowed { path }.into());
    }
    let provider = derive_schema(history, rev).map_err(ResolutionError::from)?;
    let cschema = schema_of(&client.definition).map_err(ResolutionError::from)?;

    let mut r = Resolver { rev, internal, errors: Vec::new() };
    let client_flat = FlatDefinition::new(&client.definition);
    let mut records = BTreeMap::new();
    let mut enums = BTreeMap::new();
    let mut client_records = BTreeMap::new();

    for t in cschema.types.values() {
        match t {
            SchemaType::Record(cr) => {
                let Some(pr) = provider.record(&cr.name) else {
                    r.unknown(&cr.name);
                    continue;
                };
                let Some(internal_name) = r.type_rep(&cr.name) else { continue };
                let client_internal = client
                    .definition
                    .record(&cr.name)
                    .map(|d| d.internal_name().to_string())
                    .unwrap_or_else(|| cr.name.clone());
                let mut fields = Vec::new();
                for cf in &cr.fields {
                    let path = format!("{}.{}", cr.name, cf.name);
                    let cdecl = client_flat
                        .field(&cr.name, &cf.name)
                        .map(|f| f.internal_name.clone())
                        .unwrap_or_else(|| cf.name.clone());
                    let internal_field = match pr.field(&cf.name) {
                        None => {
                            if cf.optionality != Optionality::Optional {
                                r.unknown(&path);
                            }
                            None
                        }
                        Some(pf) => {
                            r.check_type(&path, &cf.ty, &pf.ty);
                            if pf.optionality == Optionality::Mandatory && Direction::Request.may_omit(cf.optionality) {
                                r.missing(&path, Side::Provider, Direction::Request);
                            }
                            if !Direction::Response.may_omit(cf.optionality)
                                && Direction::Response.may_omit(pf.optionality)
                            {
                                r.missing(&path, Side::Client, Direction::Response);
                            }
                            r.field_rep(&path)
                        }
                    };
                    fields.push(FieldMatch {
                        name: cf.name.clone(),
                        client_internal: cdecl,
                        client_optionality: cf.optionality,
                        internal: internal_field,
                    });
                }
                let mut ignored = Vec::new();
                for pf in &pr.fields {
                    if cr.field(&pf.name).is_none() {
                        if pf.optionality == Optionality::Mandatory {
                            r.missing(&format!("{}.{}", cr.name, pf.name), Side::Provider, Direction::Request);
                        }
                        ignored.push(pf.name.clone());
                    }
                }
                client_records.insert(internal_name.clone(), cr.name.clone());
                records.insert(
                    cr.name.clone(),
                    RecordMatch { name: cr.name.clone(), client_internal, internal: internal_name, fields, ignored },
                );
            }
            SchemaType::Enum(ce) => {
                let Some(pe) = provider.enum_type(&ce.name) else {
                    r.unknown(&ce.name);
                    continue;
                };
                let Some(internal_name) = r.type_rep(&ce.name) else { continue };
                let mut members = Vec::new();
                for m in &ce.members {
                    let path = format!("{}.{}", ce.name, m);
                    if !pe.members.contains(m) {
                        r.unknown(&path);
                        continue;
                    }
                    if let Ok(InternalElement::EnumMember { name, .. }) = internal.representative(rev, &path) {
                        members.push((m.clone(), name.clone()));
                    }
                }
                enums.insert(ce.name.clone(), EnumMatch { name: ce.name.clone(), internal: internal_name, members });
            }
        }
    }

    let mut operations = Vec::new();
    for cs in &cschema.services {
        let Some(ps) = provider.service(&cs.name) else {
            r.unknown(&cs.name);
            continue;
        };
        for co in &cs.operations {
            let path = format!("{}.{}", cs.name, co.name);
            let Some(po) = ps.operations.iter().find(|o| o.name == co.name) else {
                r.unknown(&path);
                continue;
            };
            r.check_type(&format!("{path}.input"), &co.input, &po.input);
            r.check_type(&format!("{path}.output"), &co.output, &po.output);
            for t in &co.throws {
                if !po.throws.iter().any(|p| type_matches(t, p)) {
                    r.unknown(&format!("{path}.throws.{t}"));
                }
            }
            if let Ok(InternalElement::Operation { service, name }) = internal.representative(rev, &path) {
                operations.push(OperationMatch {
                    service: cs.name.clone(),
                    name: co.name.clone(),
                    internal_service: service.clone(),
                    internal: name.clone(),
                });
            }
        }
    }

    if !r.errors.is_empty() {
        return Err(ResolutionErrors(r.errors));
    }
    Ok(ResolutionMap {
        revision: rev,
        client: cschema,
        internal: internal.as_schema(),
        records,
        enums,
        operations,
        client_records,
    })
}

struct Resolver<'a> {
    rev: RevisionId,
    internal: &'a InternalRepresentation,
    errors: Vec<ResolutionError>,
}

impl Resolver<'_> {
    fn unknown(&mut self, path: &str) {
        self.errors.push(ResolutionError::UnknownElement { path: path.to_string(), revision: self.rev });
    }

    fn missing(&mut self, path: &str, side: Side, direction: Direction) {
        self.errors.push(ResolutionError::MissingMandatoryElement { path: path.to_string(), side, direction });
    }

    fn type_rep(&mut self, name: &str) -> Option<String> {
        match self.internal.representative(self.rev, name) {
            Ok(InternalElement::Type { name }) => Some(name.clone()),
            _ => {
                self.unknown(name);
                None
            }
        }
    }

    fn field_rep(&mut self, path: &str) -> Option<String> {
        match self.internal.representative(self.rev, path) {
            Ok(InternalElement::Field { name, .. }) => Some(name.clone()),
            _ => {
                self.unknown(path);
                None
            }
        }
    }

    fn check_type(&mut self, path: &str, client: &TypeExpr, provider: &TypeExpr) {
        if !type_matches(client, provider) {
            self.errors.push(ResolutionError::TypeMismatch {
                path: path.to_string(),
                client: client.to_string(),
                provider: provider.to_string(),
            });
        }
    }
}

/// Exact structural match by public names; client unions may be narrower.
fn type_matches(client: &TypeExpr, provider: &TypeExpr) -> bool {
    use TypeExpr::*;
    match (client, provider) {
        (Int32, Int32) => true,
        (Numeric { digits: a }, Numeric { digits: b }) => a == b,
        (String { length: a }, String { length: b }) => a == b,
        (List { element: ce, bound: cb }, List { element: pe, bound: pb }) => cb == pb && type_matches(ce, pe),
        (Record { name: c }, Record { name: p }) | (Enum { name: c }, Enum { name: p }) => c == p,
        (Record { name: c }, Union { members }) => members.contains(c),
        (Union { members: cs }, Union { members: ps }) => cs.iter().all(|c| ps.contains(c)),
        _ => false,
    }
}
