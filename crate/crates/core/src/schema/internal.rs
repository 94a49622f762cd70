use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use super::{resolve_ref, union_expr, Schema, SchemaEnum, SchemaField, SchemaOperation, SchemaRecord, SchemaService, SchemaType, TypeExpr};
use crate::adl::{Element, Optionality, TypeRef};
use crate::flat::FlatDefinition;
use crate::revision::lineage::{LineageId, Lineages};
use crate::revision::{ElementRef, RevisionHistory, RevisionId};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum SchemaError {
    #[error("unknown revision {0}")]
    UnknownRevision(RevisionId),
    #[error("the supported revision set is empty")]
    EmptySupportedSet,
    #[error("{path}: type {type_name} has no concrete record type")]
    EmptyUnion { path: String, type_name: String },
    #[error("{path}: internal name `{name}` is used by more than one element of the supported revisions")]
    DuplicateInternalName { path: String, name: String },
    #[error("revision {revision} has no element {path}")]
    UnknownElement { revision: RevisionId, path: String },
}

/// An element of the internal representation, by internal names.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InternalElement {
    Type { name: String },
    Field { record: String, name: String },
    EnumMember { enum_name: String, name: String },
    Service { name: String },
    Operation { service: String, name: String },
}

impl fmt::Display for InternalElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InternalElement::Type { name } | InternalElement::Service { name } => f.write_str(name),
            InternalElement::Field { record: o, name }
            | InternalElement::EnumMember { enum_name: o, name }
            | InternalElement::Operation { service: o, name } => write!(f, "{o}.{name}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InternalField {
    pub name: String,
    pub public_name: String,
    #[serde(rename = "type")]
    pub ty: TypeExpr,
    pub optionality: Optionality,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InternalRecord {
    pub name: String,
    pub public_name: String,
    pub is_abstract: bool,
    pub is_exception: bool,
    pub super_type: Option<String>,
    pub fields: Vec<InternalField>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InternalEnum {
    pub name: String,
    pub public_name: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InternalType {
    Record(InternalRecord),
    Enum(InternalEnum),
}

impl InternalType {
    pub fn name(&self) -> &str {
        match self {
            InternalType::Record(r) => &r.name,
            InternalType::Enum(e) => &e.name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InternalOperation {
    pub name: String,
    pub public_name: String,
    pub input: TypeExpr,
    pub output: TypeExpr,
    pub throws: Vec<TypeExpr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InternalService {
    pub name: String,
    pub public_name: String,
    pub operations: Vec<InternalOperation>,
}

/// The union of a set of supported revisions, keyed by internal names, with
/// every element in the form of its latest supported revision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InternalRepresentation {
    pub api_name: String,
    pub supported: BTreeSet<RevisionId>,
    pub types: IndexMap<String, InternalType>,
    pub references: IndexMap<String, TypeExpr>,
    pub services: IndexMap<String, InternalService>,
    #[serde(skip)]
    representatives: BTreeMap<(RevisionId, String), InternalElement>,
}

impl InternalRepresentation {
    pub fn record(&self, name: &str) -> Option<&InternalRecord> {
        match self.types.get(name)? {
            InternalType::Record(r) => Some(r),
            InternalType::Enum(_) => None,
        }
    }

    pub fn enum_type(&self, name: &str) -> Option<&InternalEnum> {
        match self.types.get(name)? {
            InternalType::Enum(e) => Some(e),
            InternalType::Record(_) => None,
        }
    }

    /// The internal element standing for a public element of a supported
    /// revision. `path` is `Type`, `Type.field`, `Enum.MEMBER`, `Service` or
    /// `Service.operation`; fields are addressed per flattened instance.
    pub fn representative(&self, revision: RevisionId, path: &str) -> Result<&InternalElement, SchemaError> {
        self.representatives
            .get(&(revision, path.to_string()))
            .ok_or_else(|| SchemaError::UnknownElement { revision, path: path.to_string() })
    }

    /// All `(revision, public path) -> internal element` pairs.
    pub fn representatives(&self) -> impl Iterator<Item = (RevisionId, &str, &InternalElement)> {
        self.representatives.iter().map(|((r, p), e)| (*r, p.as_str(), e))
    }

    /// The representation viewed as a schema over internal names.
    pub fn as_schema(&self) -> Schema {
        let mut types = IndexMap::new();
        for t in self.types.values() {
            match t {
                InternalType::Record(r) if !r.is_abstract => {
                    types.insert(
                        r.name.clone(),
                        SchemaType::Record(SchemaRecord {
                            name: r.name.clone(),
                            is_exception: r.is_exception,
                            fields: r
                                .fields
                                .iter()
                                .map(|f| SchemaField { name: f.name.clone(), ty: f.ty.clone(), optionality: f.optionality })
                                .collect(),
                        }),
                    );
                }
                InternalType::Record(_) => {}
                InternalType::Enum(e) => {
                    types.insert(
                        e.name.clone(),
                        SchemaType::Enum(SchemaEnum { name: e.name.clone(), members: e.members.clone() }),
                    );
                }
            }
        }
        let services = self
            .services
            .values()
            .map(|s| SchemaService {
                name: s.name.clone(),
                operations: s
                    .operations
                    .iter()
                    .map(|o| SchemaOperation {
                        name: o.name.clone(),
                        input: o.input.clone(),
                        output: o.output.clone(),
                        throws: o.throws.clone(),
                    })
                    .collect(),
            })
            .collect();
        Schema { revision: None, types, references: self.references.clone(), services }
    }

    /// Deterministic, line-oriented description for review and golden files.
    pub fn report(&self) -> String {
        let mut out = String::new();
        let ids: Vec<String> = self.supported.iter().map(|r| r.to_string()).collect();
        let _ = writeln!(out, "api {} supported {}", self.api_name, ids.join(" "));
        let public = |name: &str, public: &str| {
            if name == public {
                String::new()
            } else {
                format!(" (public {public})")
            }
        };
        for t in self.types.values() {
            match t {
                InternalType::Record(r) => {
                    let mut head = String::new();
                    if r.is_abstract {
                        head.push_str("abstract ");
                    }
                    head.push_str(if r.is_exception { "exception " } else { "record " });
                    head.push_str(&r.name);
                    if let Some(s) = &r.super_type {
                        let _ = write!(head, " extends {s}");
                    }
                    let _ = writeln!(out, "{head}{}", public(&r.name, &r.public_name));
                    for f in &r.fields {
                        let _ = writeln!(
                            out,
                            "  {}: {} {}{}",
                            f.name,
                            f.ty,
                            f.optionality.keyword(),
                            public(&f.name, &f.public_name)
                        );
                    }
                }
                InternalType::Enum(e) => {
                    let _ = writeln!(out, "enum {}{}", e.name, public(&e.name, &e.public_name));
                    for m in &e.members {
                        let _ = writeln!(out, "  {m}");
                    }
                }
            }
        }
        for s in self.services.values() {
            let _ = writeln!(out, "service {}{}", s.name, public(&s.name, &s.public_name));
            for o in &s.operations {
                let mut line = format!("  {}: {} -> {}", o.name, o.input, o.output);
                if !o.throws.is_empty() {
                    let t: Vec<String> = o.throws.iter().map(|t| t.to_string()).collect();
                    let _ = write!(line, " throws {}", t.join(", "));
                }
                let _ = writeln!(out, "{line}{}", public(&o.name, &o.public_name));
            }
        }
        let _ = writeln!(out, "representatives");
        for ((rev, path), e) in &self.representatives {
            if path != &e.to_string() {
                let _ = writeln!(out, "  r{rev} {path} -> {e}");
            }
        }
        out
    }
}

struct RecordAcc {
    record: InternalRecord,
    field_index: BTreeMap<LineageId, usize>,
    /// Revisions (by index) in which the type is present, with the field
    /// lineages of its flattened instance.
    present: Vec<BTreeSet<LineageId>>,
    field_opt: BTreeMap<LineageId, Optionality>,
}

/// Merges the supported revisions of `history` into one representation.
pub fn derive_internal(
    history: &RevisionHistory,
    supported: &BTreeSet<RevisionId>,
) -> Result<InternalRepresentation, SchemaError> {
    if supported.is_empty() {
        return Err(SchemaError::EmptySupportedSet);
    }
    for &id in supported {
        history.revision(id).map_err(|_| SchemaError::UnknownRevision(id))?;
    }
    let lineages = Lineages::compute(history);
    let newest_first: Vec<usize> = supported.iter().rev().map(|&id| id as usize - 1).collect();
    let defs: Vec<_> = history.revisions().iter().map(|r| &r.definition).collect();

    // Pass 1: type and service names, latest occurrence first.
    let mut type_names: BTreeMap<LineageId, String> = BTreeMap::new();
    let mut service_names: BTreeMap<LineageId, String> = BTreeMap::new();
    let mut top_order: Vec<(bool, LineageId, usize, String)> = Vec::new();
    let mut taken: BTreeMap<String, String> = BTreeMap::new();
    for &idx in &newest_first {
        for e in &defs[idx].elements {
            let is_service = matches!(e, Element::Service(_));
            let (lin, names) = if is_service {
                (lineages.services[idx][e.name()], &mut service_names)
            } else {
                (lineages.types[idx][e.name()], &mut type_names)
            };
            if names.contains_key(&lin) {
                continue;
            }
            let internal = e.internal_name().to_string();
            if taken.insert(internal.clone(), e.name().to_string()).is_some() {
                return Err(SchemaError::DuplicateInternalName { path: e.name().to_string(), name: internal });
            }
            names.insert(lin, internal);
            top_order.push((is_service, lin, idx, e.name().to_string()));
        }
    }

    // Supertypes and concreteness, then reference expressions.
    let mut records: IndexMap<LineageId, RecordAcc> = IndexMap::new();
    let mut enums: IndexMap<LineageId, (InternalEnum, BTreeMap<LineageId, String>)> = IndexMap::new();
    for (is_service, lin, idx, name) in &top_order {
        if *is_service {
            continue;
        }
        let def = defs[*idx];
        if let Some(r) = def.record(name) {
            let super_type = r.super_type.as_ref().map(|s| type_names[&lineages.types[*idx][s]].clone());
            records.insert(
                *lin,
                RecordAcc {
                    record: InternalRecord {
                        name: type_names[lin].clone(),
                        public_name: name.clone(),
                        is_abstract: true,
                        is_exception: r.is_exception,
                        super_type,
                        fields: Vec::new(),
                    },
                    field_index: BTreeMap::new(),
                    present: Vec::new(),
                    field_opt: BTreeMap::new(),
                },
            );
        } else {
            enums.insert(
                *lin,
                (
                    InternalEnum { name: type_names[lin].clone(), public_name: name.clone(), members: Vec::new() },
                    BTreeMap::new(),
                ),
            );
        }
    }
    for &idx in &newest_first {
        for r in defs[idx].records() {
            let acc = records.get_mut(&lineages.types[idx][&r.name]).expect("record lineage");
            acc.record.is_abstract &= r.is_abstract;
        }
    }
    let mut references = internal_references(&records);
    for (e, _) in enums.values() {
        references.insert(e.name.clone(), TypeExpr::Enum { name: e.name.clone() });
    }

    // Pass 2: fields, members, operations.
    let mut representatives = BTreeMap::new();
    for &idx in &newest_first {
        let rev = idx as RevisionId + 1;
        let def = defs[idx];
        let flat = FlatDefinition::new(def);
        for e in &def.elements {
            let lin = match e {
                Element::Service(_) => lineages.services[idx][e.name()],
                _ => lineages.types[idx][e.name()],
            };
            let element = match e {
                Element::Service(_) => InternalElement::Service { name: service_names[&lin].clone() },
                _ => InternalElement::Type { name: type_names[&lin].clone() },
            };
            representatives.insert((rev, e.name().to_string()), element);
        }

        for rec in flat.records.values() {
            let acc = records.get_mut(&lineages.types[idx][&rec.name]).expect("record lineage");
            let mut here = BTreeSet::new();
            for f in &rec.fields {
                let key = ElementRef::new(&rec.name, &f.name);
                let flin = lineages.fields[idx][&key];
                here.insert(flin);
                let slot = match acc.field_index.get(&flin) {
                    Some(&i) => i,
                    None => {
                        let path = format!("{}.{}", acc.record.name, f.internal_name);
                        if acc.record.fields.iter().any(|x| x.name == f.internal_name) {
                            return Err(SchemaError::DuplicateInternalName { path, name: f.internal_name.clone() });
                        }
                        let ty = internal_type(&f.ty, idx, &lineages, &type_names, &references, &path)?;
                        acc.record.fields.push(InternalField {
                            name: f.internal_name.clone(),
                            public_name: f.name.clone(),
                            ty,
                            optionality: f.optionality,
                        });
                        acc.field_index.insert(flin, acc.record.fields.len() - 1);
                        acc.record.fields.len() - 1
                    }
                };
                let merged = acc.field_opt.entry(flin).or_insert(f.optionality);
                *merged = merged.merge(f.optionality);
                representatives.insert(
                    (rev, key.to_string()),
                    InternalElement::Field {
                        record: acc.record.name.clone(),
                        name: acc.record.fields[slot].name.clone(),
                    },
                );
            }
            acc.present.push(here);
        }

        for en in def.enums() {
            let (ie, seen) = enums.get_mut(&lineages.types[idx][&en.name]).expect("enum lineage");
            for m in &en.members {
                let key = ElementRef::new(&en.name, &m.name);
                let mlin = lineages.enum_members[idx][&key];
                if let std::collections::btree_map::Entry::Vacant(slot) = seen.entry(mlin) {
                    if ie.members.contains(&m.name) {
                        return Err(SchemaError::DuplicateInternalName {
                            path: format!("{}.{}", ie.name, m.name),
                            name: m.name.clone(),
                        });
                    }
                    ie.members.push(m.name.clone());
                    slot.insert(m.name.clone());
                }
                representatives.insert(
                    (rev, key.to_string()),
                    InternalElement::EnumMember { enum_name: ie.name.clone(), name: seen[&mlin].clone() },
                );
            }
        }
    }

    // Operations, grouped by service lineage.
    let mut services: IndexMap<LineageId, (InternalService, BTreeMap<LineageId, usize>)> = IndexMap::new();
    for (is_service, lin, _, name) in &top_order {
        if *is_service {
            services.insert(
                *lin,
                (
                    InternalService { name: service_names[lin].clone(), public_name: name.clone(), operations: Vec::new() },
                    BTreeMap::new(),
                ),
            );
        }
    }
    for &idx in &newest_first {
        let rev = idx as RevisionId + 1;
        for s in defs[idx].services() {
            let (svc, index) = services.get_mut(&lineages.services[idx][&s.name]).expect("service lineage");
            for op in &s.operations {
                let key = ElementRef::new(&s.name, &op.name);
                let olin = lineages.operations[idx][&key];
                let path = format!("{}.{}", svc.name, op.internal_name());
                let named = |n: &String| {
                    internal_type(&TypeRef::Named(n.clone()), idx, &lineages, &type_names, &references, &path)
                };
                let slot = match index.get(&olin) {
                    Some(&i) => i,
                    None => {
                        if svc.operations.iter().any(|o| o.name == op.internal_name()) {
                            return Err(SchemaError::DuplicateInternalName { path, name: op.internal_name().to_string() });
                        }
                        svc.operations.push(InternalOperation {
                            name: op.internal_name().to_string(),
                            public_name: op.name.clone(),
                            input: named(&op.input)?,
                            output: named(&op.output)?,
                            throws: Vec::new(),
                        });
                        index.insert(olin, svc.operations.len() - 1);
                        svc.operations.len() - 1
                    }
                };
                for t in &op.throws {
                    let t = named(t)?;
                    if !svc.operations[slot].throws.contains(&t) {
                        svc.operations[slot].throws.push(t);
                    }
                }
                representatives.insert(
                    (rev, key.to_string()),
                    InternalElement::Operation { service: svc.name.clone(), name: svc.operations[slot].name.clone() },
                );
            }
        }
    }

    // A field missing from any revision in which its type exists is optional.
    for acc in records.values_mut() {
        for (flin, &slot) in &acc.field_index {
            let mut opt = acc.field_opt[flin];
            if acc.present.iter().any(|p| !p.contains(flin)) {
                opt = Optionality::Optional;
            }
            acc.record.fields[slot].optionality = opt;
        }
    }

    let mut types = IndexMap::new();
    let mut records = records;
    let mut enums = enums;
    for (is_service, lin, _, _) in &top_order {
        if *is_service {
            continue;
        }
        let t = match records.swap_remove(lin) {
            Some(acc) => InternalType::Record(acc.record),
            None => InternalType::Enum(enums.swap_remove(lin).expect("enum lineage").0),
        };
        types.insert(t.name().to_string(), t);
    }
    let services = services.into_values().map(|(s, _)| (s.name.clone(), s)).collect();

    Ok(InternalRepresentation {
        api_name: history.api_name().to_string(),
        supported: supported.clone(),
        types,
        references,
        services,
        representatives,
    })
}

fn internal_references(records: &IndexMap<LineageId, RecordAcc>) -> IndexMap<String, TypeExpr> {
    let by_name: BTreeMap<&str, &InternalRecord> =
        records.values().map(|a| (a.record.name.as_str(), &a.record)).collect();
    let is_ancestor_or_self = |ancestor: &str, name: &str| {
        let mut current = Some(name);
        let mut steps = 0;
        while let Some(n) = current {
            if n == ancestor {
                return true;
            }
            steps += 1;
            if steps > by_name.len() {
                return false;
            }
            current = by_name.get(n).and_then(|r| r.super_type.as_deref());
        }
        false
    };
    let mut out = IndexMap::new();
    for acc in records.values() {
        let name = &acc.record.name;
        let mut members: Vec<String> = records
            .values()
            .map(|a| &a.record)
            .filter(|r| &r.name != name && !r.is_abstract && is_ancestor_or_self(name, &r.name))
            .map(|r| r.name.clone())
            .collect();
        if !acc.record.is_abstract {
            members.push(name.clone());
        }
        if let Some(e) = union_expr(members) {
            out.insert(name.clone(), e);
        }
    }
    out
}

fn internal_type(
    ty: &TypeRef,
    idx: usize,
    lineages: &Lineages,
    type_names: &BTreeMap<LineageId, String>,
    references: &IndexMap<String, TypeExpr>,
    path: &str,
) -> Result<TypeExpr, SchemaError> {
    fn rename(ty: &TypeRef, f: &dyn Fn(&str) -> String) -> TypeRef {
        match ty {
            TypeRef::List(e, b) => TypeRef::List(Box::new(rename(e, f)), *b),
            TypeRef::Named(n) => TypeRef::Named(f(n)),
            other => other.clone(),
        }
    }
    let renamed = rename(ty, &|n| type_names[&lineages.types[idx][n]].clone());
    resolve_ref(&renamed, references, path)
}
