//! Flattened view of a definition: every record carries a copy of each
//! inherited field, and every field carries its effective optionality.

use indexmap::IndexMap;

use crate::adl::{ApiDefinition, Element, FieldReplaces, Optionality, RecordType, TypeRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TypeKind {
    Record,
    Exception,
    Enum,
}

#[derive(Debug, Clone)]
pub struct FlatField {
    pub name: String,
    pub internal_name: String,
    pub explicit_alias: bool,
    pub ty: TypeRef,
    pub optionality: Optionality,
    /// Record the field is declared in.
    pub declared_in: String,
    pub replaces: Option<FieldReplaces>,
}

#[derive(Debug, Clone)]
pub struct FlatRecord {
    pub name: String,
    pub is_abstract: bool,
    pub is_exception: bool,
    pub super_type: Option<String>,
    /// Inherited fields first, root supertype first, then own fields.
    pub fields: Vec<FlatField>,
}

impl FlatRecord {
    pub fn field(&self, name: &str) -> Option<&FlatField> {
        self.fields.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct FlatDefinition<'a> {
    pub def: &'a ApiDefinition,
    pub records: IndexMap<String, FlatRecord>,
}

impl<'a> FlatDefinition<'a> {
    /// Assumes `def` passed the well-formedness checks; cyclic or dangling
    /// supertypes are tolerated by truncating the chain.
    pub fn new(def: &'a ApiDefinition) -> Self {
        let mut records = IndexMap::new();
        for r in def.records() {
            let chain = supertype_chain(def, r);
            let mut fields = Vec::new();
            for owner in chain.iter().rev().chain(std::iter::once(&r)) {
                let default = effective_default(def, owner);
                for f in &owner.fields {
                    fields.push(FlatField {
                        name: f.name.clone(),
                        internal_name: f.internal_name().to_string(),
                        explicit_alias: f.alias.is_some(),
                        ty: f.ty.clone(),
                        optionality: f.optionality.unwrap_or(default),
                        declared_in: owner.name.clone(),
                        replaces: f.replaces.clone(),
                    });
                }
            }
            records.insert(
                r.name.clone(),
                FlatRecord {
                    name: r.name.clone(),
                    is_abstract: r.is_abstract,
                    is_exception: r.is_exception,
                    super_type: r.super_type.clone(),
                    fields,
                },
            );
        }
        FlatDefinition { def, records }
    }

    pub fn record(&self, name: &str) -> Option<&FlatRecord> {
        self.records.get(name)
    }

    pub fn field(&self, owner: &str, name: &str) -> Option<&FlatField> {
        self.records.get(owner).and_then(|r| r.field(name))
    }

    pub fn kind(&self, name: &str) -> Option<TypeKind> {
        match self.def.element(name)? {
            Element::Record(r) if r.is_exception => Some(TypeKind::Exception),
            Element::Record(_) => Some(TypeKind::Record),
            Element::Enum(_) => Some(TypeKind::Enum),
            Element::Service(_) => None,
        }
    }

    /// Whether `ancestor` is `name` or one of its transitive supertypes.
    pub fn is_ancestor_or_self(&self, ancestor: &str, name: &str) -> bool {
        let mut current = Some(name);
        let mut steps = 0;
        while let Some(n) = current {
            if n == ancestor {
                return true;
            }
            steps += 1;
            if steps > self.records.len() {
                return false;
            }
            current = self.records.get(n).and_then(|r| r.super_type.as_deref());
        }
        false
    }

    /// Members of the union standing in for a reference to `name`: concrete
    /// proper subtypes in declaration order, then `name` itself if concrete.
    pub fn concrete_members(&self, name: &str) -> Vec<String> {
        let mut members: Vec<String> = self
            .records
            .values()
            .filter(|r| r.name != name && !r.is_abstract && self.is_ancestor_or_self(name, &r.name))
            .map(|r| r.name.clone())
            .collect();
        if let Some(r) = self.records.get(name) {
            if !r.is_abstract {
                members.push(r.name.clone());
            }
        }
        members
    }
}

fn supertype_chain<'a>(def: &'a ApiDefinition, r: &'a RecordType) -> Vec<&'a RecordType> {
    let mut chain: Vec<&RecordType> = Vec::new();
    let mut current = r.super_type.as_deref();
    while let Some(name) = current {
        let Some(t) = def.record(name) else { break };
        if t.name == r.name || chain.iter().any(|c| c.name == t.name) {
            break;
        }
        chain.push(t);
        current = t.super_type.as_deref();
    }
    chain
}

/// A record's own default, else the nearest supertype's, else mandatory.
fn effective_default(def: &ApiDefinition, r: &RecordType) -> Optionality {
    if let Some(opt) = r.default_optionality {
        return opt;
    }
    supertype_chain(def, r)
        .iter()
        .find_map(|t| t.default_optionality)
        .unwrap_or(Optionality::Mandatory)
}
