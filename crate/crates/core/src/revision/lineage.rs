//! Lineage ids: an element keeps the id of its predecessor, and gets a fresh
//! one when it has none. Type changes break a lineage.

use std::collections::BTreeMap;

use super::history::RevisionHistory;
use super::relate::ElementRef;
use crate::flat::FlatDefinition;

pub type LineageId = usize;

/// Per revision index, element → lineage id.
#[derive(Debug, Clone, Default)]
pub struct Lineages {
    pub types: Vec<BTreeMap<String, LineageId>>,
    pub services: Vec<BTreeMap<String, LineageId>>,
    pub fields: Vec<BTreeMap<ElementRef, LineageId>>,
    pub enum_members: Vec<BTreeMap<ElementRef, LineageId>>,
    pub operations: Vec<BTreeMap<ElementRef, LineageId>>,
    pub count: usize,
}

impl Lineages {
    pub fn compute(history: &RevisionHistory) -> Self {
        let mut l = Lineages::default();
        for (idx, rev) in history.revisions().iter().enumerate() {
            let def = &rev.definition;
            let rel = idx.checked_sub(1).map(|p| (p, &history.relations()[p]));
            let flat = FlatDefinition::new(def);

            let mut types = BTreeMap::new();
            let mut services = BTreeMap::new();
            for e in &def.elements {
                let name = e.name().to_string();
                if def.service(&name).is_some() {
                    let id = rel
                        .and_then(|(p, m)| m.services.get(&name).map(|o| l.services[p][o]))
                        .unwrap_or_else(|| l.fresh());
                    services.insert(name, id);
                } else {
                    let id = rel
                        .and_then(|(p, m)| m.types.get(&name).map(|o| l.types[p][o]))
                        .unwrap_or_else(|| l.fresh());
                    types.insert(name, id);
                }
            }

            let mut fields = BTreeMap::new();
            for rec in flat.records.values() {
                for f in &rec.fields {
                    let key = ElementRef::new(&rec.name, &f.name);
                    let id = rel
                        .and_then(|(p, m)| m.fields.get(&key).map(|o| l.fields[p][o]))
                        .unwrap_or_else(|| l.fresh());
                    fields.insert(key, id);
                }
            }

            let mut members = BTreeMap::new();
            for en in def.enums() {
                for m in &en.members {
                    let key = ElementRef::new(&en.name, &m.name);
                    let id = rel
                        .and_then(|(p, r)| r.enum_members.get(&key).map(|o| l.enum_members[p][o]))
                        .unwrap_or_else(|| l.fresh());
                    members.insert(key, id);
                }
            }

            let mut operations = BTreeMap::new();
            for s in def.services() {
                for op in &s.operations {
                    let key = ElementRef::new(&s.name, &op.name);
                    let id = rel
                        .and_then(|(p, r)| r.operations.get(&key).map(|o| l.operations[p][o]))
                        .unwrap_or_else(|| l.fresh());
                    operations.insert(key, id);
                }
            }

            l.types.push(types);
            l.services.push(services);
            l.fields.push(fields);
            l.enum_members.push(members);
            l.operations.push(operations);
        }
        l
    }

    fn fresh(&mut self) -> LineageId {
        self.count += 1;
        self.count - 1
    }
}
