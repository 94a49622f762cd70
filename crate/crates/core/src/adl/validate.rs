//! Well-formedness checks that need the whole definition.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::ast::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DiagnosticKind {
    DuplicateName,
    DuplicateInternalName,
    UnknownTypeReference,
    CyclicInheritance,
    InvalidSupertype,
    ExceptionMisuse,
    InvalidReplaces,
    UnusedException,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub kind: DiagnosticKind,
    /// Element path such as `Customer` or `Customer.gender`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}: {}: {}", self.path, self.message)
    }
}

struct Collector {
    out: Vec<Diagnostic>,
}

impl Collector {
    fn error(&mut self, kind: DiagnosticKind, path: impl Into<String>, message: impl Into<String>) {
        self.out.push(Diagnostic {
            severity: Severity::Error,
            kind,
            path: path.into(),
            message: message.into(),
        });
    }

    fn warning(&mut self, kind: DiagnosticKind, path: impl Into<String>, message: impl Into<String>) {
        self.out.push(Diagnostic {
            severity: Severity::Warning,
            kind,
            path: path.into(),
            message: message.into(),
        });
    }
}

/// Returns every violated definition invariant. An empty result means the
/// definition is well-formed.
pub fn validate_wellformedness(def: &ApiDefinition) -> Vec<Diagnostic> {
    let mut c = Collector { out: Vec::new() };

    let mut seen_public = BTreeSet::new();
    let mut seen_internal = BTreeSet::new();
    for element in &def.elements {
        if !seen_public.insert(element.name()) {
            c.error(DiagnosticKind::DuplicateName, element.name(), "name is already defined");
        } else if !seen_internal.insert(element.internal_name()) {
            c.error(
                DiagnosticKind::DuplicateInternalName,
                element.name(),
                format!("internal name `{}` is already used", element.internal_name()),
            );
        }
    }

    let records: BTreeMap<&str, &RecordType> = def.records().map(|r| (r.name.as_str(), r)).collect();
    let cyclic = check_hierarchy(def, &records, &mut c);

    let mut thrown = BTreeSet::new();
    for s in def.services() {
        for op in &s.operations {
            thrown.extend(op.throws.iter().map(String::as_str));
        }
    }

    for r in def.records() {
        check_fields(def, r, &records, &cyclic, &mut c);
        if r.is_exception && !thrown.contains(r.name.as_str()) && !has_subtype(def, &r.name) {
            c.warning(DiagnosticKind::UnusedException, &r.name, "exception is never thrown");
        }
    }

    for e in def.enums() {
        let mut members = BTreeSet::new();
        for m in &e.members {
            if !members.insert(m.name.as_str()) {
                c.error(
                    DiagnosticKind::DuplicateName,
                    format!("{}.{}", e.name, m.name),
                    "enum member is already defined",
                );
            }
        }
    }

    for s in def.services() {
        check_service(def, s, &mut c);
    }

    c.out
}

fn has_subtype(def: &ApiDefinition, name: &str) -> bool {
    def.records().any(|r| r.super_type.as_deref() == Some(name))
}

/// Checks supertypes; returns the names of records on an inheritance cycle.
fn check_hierarchy(
    def: &ApiDefinition,
    records: &BTreeMap<&str, &RecordType>,
    c: &mut Collector,
) -> BTreeSet<String> {
    let mut cyclic = BTreeSet::new();
    for r in def.records() {
        let Some(sup) = &r.super_type else { continue };
        match def.element(sup) {
            None => c.error(
                DiagnosticKind::UnknownTypeReference,
                &r.name,
                format!("supertype `{sup}` is not defined"),
            ),
            Some(Element::Record(s)) if s.is_exception != r.is_exception => c.error(
                DiagnosticKind::InvalidSupertype,
                &r.name,
                "records and exceptions cannot extend each other",
            ),
            Some(Element::Record(_)) => {}
            Some(_) => c.error(
                DiagnosticKind::InvalidSupertype,
                &r.name,
                format!("supertype `{sup}` is not a record type"),
            ),
        }

        let mut visited = BTreeSet::new();
        let mut current = r.name.as_str();
        visited.insert(current);
        while let Some(next) = records.get(current).and_then(|t| t.super_type.as_deref()) {
            if next == r.name {
                cyclic.insert(r.name.clone());
                c.error(
                    DiagnosticKind::CyclicInheritance,
                    &r.name,
                    "type inherits from itself",
                );
                break;
            }
            if !visited.insert(next) {
                break;
            }
            current = next;
        }
    }
    cyclic
}

/// Inherited fields of `r`, nearest ancestor last. Empty for cyclic types.
fn inherited_fields<'a>(
    r: &'a RecordType,
    records: &BTreeMap<&str, &'a RecordType>,
    cyclic: &BTreeSet<String>,
) -> Vec<&'a Field> {
    if cyclic.contains(&r.name) {
        return Vec::new();
    }
    let mut chain = Vec::new();
    let mut current = r.super_type.as_deref();
    while let Some(name) = current {
        let Some(t) = records.get(name) else { break };
        if cyclic.contains(&t.name) {
            break;
        }
        chain.push(*t);
        current = t.super_type.as_deref();
    }
    chain.iter().rev().flat_map(|t| t.fields.iter()).collect()
}

fn check_fields(
    def: &ApiDefinition,
    r: &RecordType,
    records: &BTreeMap<&str, &RecordType>,
    cyclic: &BTreeSet<String>,
    c: &mut Collector,
) {
    let inherited = inherited_fields(r, records, cyclic);
    let mut public: BTreeSet<&str> = inherited.iter().map(|f| f.name.as_str()).collect();
    let mut internal: BTreeSet<&str> = inherited.iter().map(|f| f.internal_name()).collect();

    for field in &r.fields {
        let path = format!("{}.{}", r.name, field.name);
        if !public.insert(&field.name) {
            c.error(DiagnosticKind::DuplicateName, &path, "field is already defined");
        } else if !internal.insert(field.internal_name()) {
            c.error(
                DiagnosticKind::DuplicateInternalName,
                &path,
                format!("internal name `{}` is already used", field.internal_name()),
            );
        }
        check_type_ref(def, &field.ty, &path, c);

        if let Some(FieldReplaces::Names(names)) = &field.replaces {
            let qualified = names.iter().filter(|n| n.owner.is_some()).count();
            if qualified != 0 && qualified != names.len() {
                c.error(
                    DiagnosticKind::InvalidReplaces,
                    &path,
                    "qualified and unqualified predecessors cannot be mixed",
                );
            } else if qualified == 0 && names.len() > 1 {
                c.error(
                    DiagnosticKind::InvalidReplaces,
                    &path,
                    "only type-qualified predecessors can be listed together",
                );
            }
        }
    }
}

fn check_type_ref(def: &ApiDefinition, ty: &TypeRef, path: &str, c: &mut Collector) {
    match ty {
        TypeRef::List(elem, _) => check_type_ref(def, elem, path, c),
        TypeRef::Named(name) => match def.element(name) {
            None => c.error(
                DiagnosticKind::UnknownTypeReference,
                path,
                format!("type `{name}` is not defined"),
            ),
            Some(Element::Service(_)) => c.error(
                DiagnosticKind::UnknownTypeReference,
                path,
                format!("`{name}` is a service, not a type"),
            ),
            Some(Element::Record(r)) if r.is_exception => c.error(
                DiagnosticKind::ExceptionMisuse,
                path,
                format!("exception `{name}` can only appear in a throws list"),
            ),
            _ => {}
        },
        _ => {}
    }
}

fn check_service(def: &ApiDefinition, s: &Service, c: &mut Collector) {
    let mut public = BTreeSet::new();
    let mut internal = BTreeSet::new();
    for op in &s.operations {
        let path = format!("{}.{}", s.name, op.name);
        if !public.insert(op.name.as_str()) {
            c.error(DiagnosticKind::DuplicateName, &path, "operation is already defined");
        } else if !internal.insert(op.internal_name()) {
            c.error(
                DiagnosticKind::DuplicateInternalName,
                &path,
                format!("internal name `{}` is already used", op.internal_name()),
            );
        }
        for (role, name) in [("input", &op.input), ("output", &op.output)] {
            match def.element(name) {
                Some(Element::Record(r)) if r.is_exception => c.error(
                    DiagnosticKind::ExceptionMisuse,
                    &path,
                    format!("{role} type `{name}` is an exception"),
                ),
                Some(Element::Record(_)) => {}
                Some(_) => c.error(
                    DiagnosticKind::UnknownTypeReference,
                    &path,
                    format!("{role} type `{name}` is not a record type"),
                ),
                None => c.error(
                    DiagnosticKind::UnknownTypeReference,
                    &path,
                    format!("{role} type `{name}` is not defined"),
                ),
            }
        }
        for name in &op.throws {
            match def.element(name) {
                Some(Element::Record(r)) if r.is_exception => {}
                Some(_) => c.error(
                    DiagnosticKind::ExceptionMisuse,
                    &path,
                    format!("thrown type `{name}` is not an exception"),
                ),
                None => c.error(
                    DiagnosticKind::UnknownTypeReference,
                    &path,
                    format!("exception `{name}` is not defined"),
                ),
            }
        }
    }
}
