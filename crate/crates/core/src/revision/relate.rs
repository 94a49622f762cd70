//! Predecessor relations between two consecutive revisions.
//!
//! Every element of the newer revision may *claim* one element of the older
//! revision, explicitly through a `replaces` clause or implicitly by carrying
//! the same name. A claim only becomes a relation when the two elements are
//! compatible; a claim between fields or operations whose types differ is a
//! type change (the old element is deleted, the new one added). Each older
//! element may be claimed at most once. Fields are related per flattened
//! instance, so a field pushed down into several subtypes is claimed once in
//! each of them.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adl::{ApiDefinition, Element, FieldReplaces, Replaces, TypeRef};
use crate::flat::{FlatDefinition, TypeKind};

/// A member of a named container: a field instance `Type.field`, an enum
/// member `Enum.MEMBER` or an operation `Service.op`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ElementRef {
    pub owner: String,
    pub name: String,
}

impl ElementRef {
    pub fn new(owner: impl Into<String>, name: impl Into<String>) -> Self {
        ElementRef { owner: owner.into(), name: name.into() }
    }
}

impl fmt::Display for ElementRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.owner, self.name)
    }
}

/// The five relations between a revision and its predecessor, each mapping
/// a newer element to its older counterpart.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredecessorMap {
    pub types: BTreeMap<String, String>,
    pub services: BTreeMap<String, String>,
    pub operations: BTreeMap<ElementRef, ElementRef>,
    pub enum_members: BTreeMap<ElementRef, ElementRef>,
    /// Keyed by flattened field instance.
    pub fields: BTreeMap<ElementRef, ElementRef>,
    /// Claims that did not become relations because the types differ.
    pub field_type_changes: BTreeMap<ElementRef, ElementRef>,
    pub operation_type_changes: BTreeMap<ElementRef, ElementRef>,
}

impl PredecessorMap {
    /// Whether every relation is injective.
    pub fn is_injective(&self) -> bool {
        fn check<K, V: Ord>(m: &BTreeMap<K, V>) -> bool {
            let mut seen = std::collections::BTreeSet::new();
            m.values().all(|v| seen.insert(v))
        }
        check(&self.types)
            && check(&self.services)
            && check(&self.operations)
            && check(&self.enum_members)
            && check(&self.fields)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElementKind {
    Type,
    Field,
    EnumMember,
    Service,
    Operation,
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ElementKind::Type => "type",
            ElementKind::Field => "field",
            ElementKind::EnumMember => "enum member",
            ElementKind::Service => "service",
            ElementKind::Operation => "operation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum RelateError {
    #[error("{kind} {predecessor} is replaced by multiple elements: {}", successors.join(", "))]
    MultipleSuccessors { kind: ElementKind, predecessor: String, successors: Vec<String> },
    #[error("{kind} {element} names several predecessors: {}", predecessors.join(", "))]
    MultiplePredecessors { kind: ElementKind, element: String, predecessors: Vec<String> },
    #[error("{kind} {element} replaces {predecessor}, which does not exist in the previous revision")]
    UnknownPredecessor { kind: ElementKind, element: String, predecessor: String },
    #[error("field {field} pulls up fields of different types: {}", sources.join(", "))]
    IncompatiblePullUpTypes { field: String, sources: Vec<String> },
    #[error("type {type_name} changes its supertype from {} to {}", old.as_deref().unwrap_or("none"), new.as_deref().unwrap_or("none"))]
    ChangedSupertype { type_name: String, old: Option<String>, new: Option<String> },
    #[error("{element} replaces {predecessor}, which is a different kind of element")]
    IncompatibleKind { element: String, predecessor: String },
}

/// All errors found while relating two revisions.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct RelateErrors(pub Vec<RelateError>);

impl fmt::Display for RelateErrors {
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

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TopKind {
    Type(TypeKind),
    Service,
}

fn top_kind(flat: &FlatDefinition<'_>, e: &Element) -> TopKind {
    match e {
        Element::Service(_) => TopKind::Service,
        _ => TopKind::Type(flat.kind(e.name()).expect("type element")),
    }
}

/// Collects claims and reports every older element claimed more than once.
struct Claims<K: Ord + Clone> {
    by_old: BTreeMap<K, Vec<K>>,
}

impl<K: Ord + Clone + fmt::Display> Claims<K> {
    fn new() -> Self {
        Claims { by_old: BTreeMap::new() }
    }

    fn claim(&mut self, old: K, new: K) {
        self.by_old.entry(old).or_default().push(new);
    }

    /// Returns the single-claim pairs as `new -> old`.
    fn resolve(self, kind: ElementKind, errors: &mut Vec<RelateError>) -> BTreeMap<K, K> {
        let mut out = BTreeMap::new();
        for (old, news) in self.by_old {
            if news.len() > 1 {
                let mut successors: Vec<String> = news.iter().map(|n| n.to_string()).collect();
                successors.sort();
                errors.push(RelateError::MultipleSuccessors {
                    kind,
                    predecessor: old.to_string(),
                    successors,
                });
            } else {
                out.insert(news[0].clone(), old);
            }
        }
        out
    }
}

struct Relater<'a> {
    old: FlatDefinition<'a>,
    new: FlatDefinition<'a>,
    errors: Vec<RelateError>,
    map: PredecessorMap,
}

/// Computes the predecessor relations of `current` against `previous`.
/// Both definitions must be individually well-formed.
///
/// A definition identical to its predecessor is related by identity: its
/// `replaces` clauses describe the step that produced the previous revision.
pub fn relate(previous: &ApiDefinition, current: &ApiDefinition) -> Result<PredecessorMap, RelateErrors> {
    let unchanged;
    let current = if previous == current {
        unchanged = current.without_replaces();
        &unchanged
    } else {
        current
    };
    let mut r = Relater {
        old: FlatDefinition::new(previous),
        new: FlatDefinition::new(current),
        errors: Vec::new(),
        map: PredecessorMap::default(),
    };
    r.relate_top_level();
    r.check_supertypes();
    r.relate_enum_members();
    r.relate_operations();
    r.relate_fields();
    if r.errors.is_empty() {
        Ok(r.map)
    } else {
        Err(RelateErrors(r.errors))
    }
}

impl<'a> Relater<'a> {
    fn relate_top_level(&mut self) {
        let mut claims = Claims::<String>::new();
        for e in &self.new.def.elements {
            let kind = top_kind(&self.new, e);
            let target = match e.replaces() {
                Some(Replaces::Nothing) => None,
                Some(Replaces::Name(x)) => match self.old.def.element(x) {
                    None => {
                        self.errors.push(RelateError::UnknownPredecessor {
                            kind: element_kind(kind),
                            element: e.name().to_string(),
                            predecessor: x.clone(),
                        });
                        None
                    }
                    Some(old) if top_kind(&self.old, old) != kind => {
                        self.errors.push(RelateError::IncompatibleKind {
                            element: e.name().to_string(),
                            predecessor: x.clone(),
                        });
                        None
                    }
                    Some(old) => Some(old.name().to_string()),
                },
                None => match self.old.def.element(e.name()) {
                    Some(old) if top_kind(&self.old, old) == kind => Some(old.name().to_string()),
                    _ => None,
                },
            };
            if let Some(old) = target {
                claims.claim(old, e.name().to_string());
            }
        }

        // Types and services share one namespace, so a single claim set
        // covers both; split the result by kind afterwards.
        let mut type_errors = Vec::new();
        let resolved = claims.resolve(ElementKind::Type, &mut type_errors);
        for mut err in type_errors {
            if let RelateError::MultipleSuccessors { kind, predecessor, .. } = &mut err {
                if self.old.def.service(predecessor).is_some() {
                    *kind = ElementKind::Service;
                }
            }
            self.errors.push(err);
        }
        for (new, old) in resolved {
            if self.new.def.service(&new).is_some() {
                self.map.services.insert(new, old);
            } else {
                self.map.types.insert(new, old);
            }
        }
    }

    fn check_supertypes(&mut self) {
        for (new_name, old_name) in &self.map.types {
            let (Some(new_rec), Some(old_rec)) = (self.new.record(new_name), self.old.record(old_name))
            else {
                continue;
            };
            let Some(old_super) = &old_rec.super_type else { continue };
            let kept = new_rec
                .super_type
                .as_ref()
                .and_then(|s| self.map.types.get(s))
                .is_some_and(|pred| pred == old_super);
            if !kept {
                self.errors.push(RelateError::ChangedSupertype {
                    type_name: new_name.clone(),
                    old: Some(old_super.clone()),
                    new: new_rec.super_type.clone(),
                });
            }
        }
    }

    fn relate_enum_members(&mut self) {
        let mut claims = Claims::<ElementRef>::new();
        for (new_name, old_name) in &self.map.types {
            let (Some(new_enum), Some(old_enum)) =
                (self.new.def.enum_type(new_name), self.old.def.enum_type(old_name))
            else {
                continue;
            };
            for m in &new_enum.members {
                let new_ref = ElementRef::new(new_name, &m.name);
                let target = match &m.replaces {
                    Some(Replaces::Nothing) => None,
                    Some(Replaces::Name(x)) => {
                        if old_enum.members.iter().any(|om| &om.name == x) {
                            Some(x.clone())
                        } else {
                            self.errors.push(RelateError::UnknownPredecessor {
                                kind: ElementKind::EnumMember,
                                element: new_ref.to_string(),
                                predecessor: format!("{old_name}.{x}"),
                            });
                            None
                        }
                    }
                    None => old_enum.members.iter().find(|om| om.name == m.name).map(|om| om.name.clone()),
                };
                if let Some(x) = target {
                    claims.claim(ElementRef::new(old_name, x), new_ref);
                }
            }
        }
        self.map.enum_members = claims.resolve(ElementKind::EnumMember, &mut self.errors);
    }

    fn relate_operations(&mut self) {
        let mut claims = Claims::<ElementRef>::new();
        let mut compatible = BTreeMap::new();
        for (new_name, old_name) in &self.map.services {
            let (Some(new_svc), Some(old_svc)) =
                (self.new.def.service(new_name), self.old.def.service(old_name))
            else {
                continue;
            };
            for op in &new_svc.operations {
                let new_ref = ElementRef::new(new_name, &op.name);
                let old_op = match &op.replaces {
                    Some(Replaces::Nothing) => None,
                    Some(Replaces::Name(x)) => {
                        let found = old_svc.operation(x);
                        if found.is_none() {
                            self.errors.push(RelateError::UnknownPredecessor {
                                kind: ElementKind::Operation,
                                element: new_ref.to_string(),
                                predecessor: format!("{old_name}.{x}"),
                            });
                        }
                        found
                    }
                    None => old_svc.operation(&op.name),
                };
                if let Some(old_op) = old_op {
                    let ok = self.named_compatible(&old_op.input, &op.input)
                        && self.named_compatible(&old_op.output, &op.output);
                    compatible.insert(new_ref.clone(), ok);
                    claims.claim(ElementRef::new(old_name, &old_op.name), new_ref);
                }
            }
        }
        for (new, old) in claims.resolve(ElementKind::Operation, &mut self.errors) {
            if compatible[&new] {
                self.map.operations.insert(new, old);
            } else {
                self.map.operation_type_changes.insert(new, old);
            }
        }
    }

    fn relate_fields(&mut self) {
        let mut claims = Claims::<ElementRef>::new();
        let mut compatible = BTreeMap::new();
        let mut errors = Vec::new();

        for rec in self.new.records.values() {
            let pred = self.map.types.get(&rec.name).cloned();
            for field in &rec.fields {
                let new_ref = ElementRef::new(&rec.name, &field.name);
                let declaring = field.declared_in == rec.name;
                let target = match &field.replaces {
                    Some(FieldReplaces::Nothing) => None,
                    Some(FieldReplaces::Names(names)) if names.iter().all(|n| n.owner.is_some()) => {
                        if declaring {
                            self.check_qualified_sources(&new_ref, names, &mut errors);
                        }
                        match &pred {
                            None => None,
                            Some(p) => {
                                let applicable: Vec<_> = names
                                    .iter()
                                    .filter(|n| self.old.is_ancestor_or_self(n.owner.as_deref().unwrap(), p))
                                    .filter(|n| self.old.field(p, &n.field).is_some())
                                    .collect();
                                match applicable.len() {
                                    0 => None,
                                    1 => Some(ElementRef::new(p, &applicable[0].field)),
                                    _ => {
                                        errors.push(RelateError::MultiplePredecessors {
                                            kind: ElementKind::Field,
                                            element: new_ref.to_string(),
                                            predecessors: applicable.iter().map(|n| n.to_string()).collect(),
                                        });
                                        None
                                    }
                                }
                            }
                        }
                    }
                    Some(FieldReplaces::Names(names)) => {
                        // Unqualified; well-formedness allows exactly one name.
                        let x = &names[0].field;
                        match &pred {
                            Some(p) if self.old.field(p, x).is_some() => Some(ElementRef::new(p, x)),
                            _ => {
                                if declaring {
                                    errors.push(RelateError::UnknownPredecessor {
                                        kind: ElementKind::Field,
                                        element: new_ref.to_string(),
                                        predecessor: match &pred {
                                            Some(p) => format!("{p}.{x}"),
                                            None => x.clone(),
                                        },
                                    });
                                }
                                None
                            }
                        }
                    }
                    None => pred
                        .as_ref()
                        .filter(|p| self.old.field(p, &field.name).is_some())
                        .map(|p| ElementRef::new(p, &field.name)),
                };
                if let Some(old_ref) = target {
                    let old_ty = &self.old.field(&old_ref.owner, &old_ref.name).unwrap().ty;
                    compatible.insert(new_ref.clone(), self.types_compatible(old_ty, &field.ty));
                    claims.claim(old_ref, new_ref);
                }
            }
        }

        for (new, old) in claims.resolve(ElementKind::Field, &mut errors) {
            if compatible[&new] {
                self.map.fields.insert(new, old);
            } else {
                self.map.field_type_changes.insert(new, old);
            }
        }
        self.errors.extend(errors);
    }

    /// Every listed source must exist; several sources must share a type.
    fn check_qualified_sources(
        &self,
        new_ref: &ElementRef,
        names: &[crate::adl::FieldPath],
        errors: &mut Vec<RelateError>,
    ) {
        let mut types: Vec<&TypeRef> = Vec::new();
        for n in names {
            let owner = n.owner.as_deref().unwrap();
            match self.old.field(owner, &n.field) {
                Some(f) => types.push(&f.ty),
                None => errors.push(RelateError::UnknownPredecessor {
                    kind: ElementKind::Field,
                    element: new_ref.to_string(),
                    predecessor: n.to_string(),
                }),
            }
        }
        if types.windows(2).any(|w| w[0] != w[1]) {
            errors.push(RelateError::IncompatiblePullUpTypes {
                field: new_ref.to_string(),
                sources: names.iter().map(|n| n.to_string()).collect(),
            });
        }
    }

    fn types_compatible(&self, old: &TypeRef, new: &TypeRef) -> bool {
        match (old, new) {
            (TypeRef::Int32, TypeRef::Int32) => true,
            (TypeRef::Numeric(a), TypeRef::Numeric(b)) | (TypeRef::String(a), TypeRef::String(b)) => a == b,
            (TypeRef::List(oe, ob), TypeRef::List(ne, nb)) => ob == nb && self.types_compatible(oe, ne),
            (TypeRef::Named(o), TypeRef::Named(n)) => self.named_compatible(o, n),
            _ => false,
        }
    }

    /// Named types are compatible when related, or when both denote record
    /// unions and every member of the old union has a successor in the new
    /// one (a hierarchy that only gained subtypes).
    fn named_compatible(&self, old: &str, new: &str) -> bool {
        if self.map.types.get(new).is_some_and(|p| p == old) {
            return true;
        }
        let (Some(_), Some(_)) = (self.old.record(old), self.new.record(new)) else {
            return false;
        };
        let old_members = self.old.concrete_members(old);
        let new_members = self.new.concrete_members(new);
        !old_members.is_empty()
            && old_members.iter().all(|om| {
                new_members.iter().any(|nm| self.map.types.get(nm).is_some_and(|p| p == om))
            })
    }
}

fn element_kind(kind: TopKind) -> ElementKind {
    match kind {
        TopKind::Service => ElementKind::Service,
        TopKind::Type(_) => ElementKind::Type,
    }
}
