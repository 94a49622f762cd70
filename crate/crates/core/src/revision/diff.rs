use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::history::{HistoryError, RevisionHistory, RevisionId};
use super::relate::{ElementKind, ElementRef, PredecessorMap};
use crate::adl::ApiDefinition;
use crate::flat::FlatDefinition;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "change", rename_all = "kebab-case")]
pub enum Change {
    Added { element: String },
    Deleted { element: String },
    Renamed { old: String, new: String },
    TypeChanged { element: String, old_element: String, old_type: String, new_type: String },
    PulledUp { sources: Vec<String>, target: String },
    PushedDown { source: String, targets: Vec<String> },
}

impl fmt::Display for Change {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Change::Added { element } => write!(f, "added {element}"),
            Change::Deleted { element } => write!(f, "deleted {element}"),
            Change::Renamed { old, new } => write!(f, "renamed {old} -> {new}"),
            Change::TypeChanged { element, old_element, old_type, new_type } => {
                write!(f, "type-changed {old_element}: {old_type} -> {element}: {new_type}")
            }
            Change::PulledUp { sources, target } => write!(f, "pulled-up {} -> {target}", sources.join(", ")),
            Change::PushedDown { source, targets } => {
                write!(f, "pushed-down {source} -> {}", targets.join(", "))
            }
        }
    }
}

/// Classified differences between two revisions of one history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChangeSet {
    pub from: RevisionId,
    pub to: RevisionId,
    pub types: Vec<Change>,
    pub fields: Vec<Change>,
    pub enum_members: Vec<Change>,
    pub services: Vec<Change>,
    pub operations: Vec<Change>,
}

impl ChangeSet {
    pub fn is_empty(&self) -> bool {
        self.entries().next().is_none()
    }

    pub fn entries(&self) -> impl Iterator<Item = (ElementKind, &Change)> {
        let kinds = [
            (ElementKind::Type, &self.types),
            (ElementKind::Field, &self.fields),
            (ElementKind::EnumMember, &self.enum_members),
            (ElementKind::Service, &self.services),
            (ElementKind::Operation, &self.operations),
        ];
        kinds.into_iter().flat_map(|(k, v)| v.iter().map(move |c| (k, c)))
    }
}

impl fmt::Display for ChangeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (kind, change) in self.entries() {
            writeln!(f, "{kind}: {change}")?;
        }
        Ok(())
    }
}

/// A composed link from an element of the newer revision to the older one.
#[derive(Clone)]
struct Link<K> {
    old: K,
    type_changed: bool,
}

fn compose<K: Ord + Clone>(
    steps: &[&PredecessorMap],
    start: K,
    related: impl Fn(&PredecessorMap, &K) -> Option<K>,
    changed: impl Fn(&PredecessorMap, &K) -> Option<K>,
) -> Option<Link<K>> {
    let mut key = start;
    let mut type_changed = false;
    for step in steps.iter().rev() {
        key = match related(step, &key) {
            Some(k) => k,
            None => {
                type_changed = true;
                changed(step, &key)?
            }
        };
    }
    Some(Link { old: key, type_changed })
}

/// Compares revision `from` with revision `to` by composing the relations
/// of every step in between.
pub fn diff(history: &RevisionHistory, from: RevisionId, to: RevisionId) -> Result<ChangeSet, HistoryError> {
    let old = history.definition(from)?;
    let new = history.definition(to)?;
    if from > to {
        return Err(HistoryError::UnknownRevision(from));
    }
    let steps: Vec<&PredecessorMap> = (from + 1..=to).filter_map(|id| history.relations_into(id)).collect();
    let old_flat = FlatDefinition::new(old);
    let new_flat = FlatDefinition::new(new);

    let mut cs = ChangeSet {
        from,
        to,
        types: Vec::new(),
        fields: Vec::new(),
        enum_members: Vec::new(),
        services: Vec::new(),
        operations: Vec::new(),
    };

    // Top-level elements never change type, only names.
    let top = |is_service: bool| {
        let names = |def: &ApiDefinition| -> Vec<String> {
            def.elements
                .iter()
                .filter(|e| def.service(e.name()).is_some() == is_service)
                .map(|e| e.name().to_string())
                .collect()
        };
        let links: BTreeMap<String, String> = names(new)
            .into_iter()
            .filter_map(|n| {
                let link = compose(
                    &steps,
                    n.clone(),
                    |m, k| if is_service { m.services.get(k).cloned() } else { m.types.get(k).cloned() },
                    |_, _| None,
                )?;
                Some((n, link.old))
            })
            .collect();
        let mut out = Vec::new();
        let claimed: BTreeSet<&String> = links.values().collect();
        for n in names(old) {
            if !claimed.contains(&n) {
                out.push(Change::Deleted { element: n });
            }
        }
        for n in names(new) {
            match links.get(&n) {
                None => out.push(Change::Added { element: n }),
                Some(o) if *o != n => out.push(Change::Renamed { old: o.clone(), new: n }),
                Some(_) => {}
            }
        }
        out.sort();
        out
    };
    cs.types = top(false);
    cs.services = top(true);

    // Enum members.
    let old_members: Vec<ElementRef> = old
        .enums()
        .flat_map(|e| e.members.iter().map(move |m| ElementRef::new(&e.name, &m.name)))
        .collect();
    let new_members: Vec<ElementRef> = new
        .enums()
        .flat_map(|e| e.members.iter().map(move |m| ElementRef::new(&e.name, &m.name)))
        .collect();
    cs.enum_members = simple_changes(&old_members, &new_members, |k| {
        compose(&steps, k.clone(), |m, k| m.enum_members.get(k).cloned(), |_, _| None)
    });

    // Operations.
    let old_ops: Vec<ElementRef> = old
        .services()
        .flat_map(|s| s.operations.iter().map(move |o| ElementRef::new(&s.name, &o.name)))
        .collect();
    let new_ops: Vec<ElementRef> = new
        .services()
        .flat_map(|s| s.operations.iter().map(move |o| ElementRef::new(&s.name, &o.name)))
        .collect();
    let signature = |def: &ApiDefinition, r: &ElementRef| {
        let op = def.service(&r.owner).and_then(|s| s.operation(&r.name)).expect("operation");
        format!("{} -> {}", op.input, op.output)
    };
    cs.operations = typed_changes(
        &old_ops,
        &new_ops,
        |k| {
            compose(
                &steps,
                k.clone(),
                |m, k| m.operations.get(k).cloned(),
                |m, k| m.operation_type_changes.get(k).cloned(),
            )
        },
        |o, n| (signature(old, o), signature(new, n)),
    );

    cs.fields = field_changes(&old_flat, &new_flat, &steps);
    Ok(cs)
}

fn simple_changes(
    old: &[ElementRef],
    new: &[ElementRef],
    link: impl Fn(&ElementRef) -> Option<Link<ElementRef>>,
) -> Vec<Change> {
    typed_changes(old, new, link, |_, _| (String::new(), String::new()))
}

fn typed_changes(
    old: &[ElementRef],
    new: &[ElementRef],
    link: impl Fn(&ElementRef) -> Option<Link<ElementRef>>,
    types: impl Fn(&ElementRef, &ElementRef) -> (String, String),
) -> Vec<Change> {
    let mut out = Vec::new();
    let mut claimed = BTreeSet::new();
    for n in new {
        match link(n) {
            None => out.push(Change::Added { element: n.to_string() }),
            Some(l) => {
                claimed.insert(l.old.clone());
                if l.type_changed {
                    let (old_type, new_type) = types(&l.old, n);
                    out.push(Change::TypeChanged {
                        element: n.to_string(),
                        old_element: l.old.to_string(),
                        old_type,
                        new_type,
                    });
                } else if l.old.name != n.name {
                    out.push(Change::Renamed { old: l.old.to_string(), new: n.to_string() });
                }
            }
        }
    }
    for o in old {
        if !claimed.contains(o) {
            out.push(Change::Deleted { element: o.to_string() });
        }
    }
    out.sort();
    out
}

/// Fields are related per flattened instance but reported per declaration:
/// a declared field whose instances come from several older declarations is
/// a pull-up, an older declaration feeding several newer ones a push-down.
fn field_changes(old: &FlatDefinition<'_>, new: &FlatDefinition<'_>, steps: &[&PredecessorMap]) -> Vec<Change> {
    let declared = |flat: &FlatDefinition<'_>, r: &ElementRef| {
        let f = flat.field(&r.owner, &r.name).expect("field instance");
        ElementRef::new(&f.declared_in, &f.name)
    };
    let type_of = |flat: &FlatDefinition<'_>, r: &ElementRef| flat.field(&r.owner, &r.name).expect("field").ty.to_string();

    // declaration-level links, split by whether the chain changed the type
    let mut sources: BTreeMap<ElementRef, BTreeSet<ElementRef>> = BTreeMap::new();
    let mut targets: BTreeMap<ElementRef, BTreeSet<ElementRef>> = BTreeMap::new();
    let mut type_changes: BTreeMap<ElementRef, BTreeSet<ElementRef>> = BTreeMap::new();
    let mut touched_old = BTreeSet::new();
    let mut touched_new = BTreeSet::new();

    for rec in new.records.values() {
        for f in &rec.fields {
            let inst = ElementRef::new(&rec.name, &f.name);
            let Some(link) = compose(
                steps,
                inst.clone(),
                |m, k| m.fields.get(k).cloned(),
                |m, k| m.field_type_changes.get(k).cloned(),
            ) else {
                continue;
            };
            let nd = declared(new, &inst);
            let od = declared(old, &link.old);
            touched_old.insert(od.clone());
            touched_new.insert(nd.clone());
            if link.type_changed {
                type_changes.entry(nd).or_default().insert(od);
            } else {
                sources.entry(nd.clone()).or_default().insert(od.clone());
                targets.entry(od).or_default().insert(nd);
            }
        }
    }

    let mut out = Vec::new();
    for (nd, olds) in &type_changes {
        for od in olds {
            out.push(Change::TypeChanged {
                element: nd.to_string(),
                old_element: od.to_string(),
                old_type: type_of(old, od),
                new_type: type_of(new, nd),
            });
        }
    }
    for (nd, olds) in &sources {
        if olds.len() > 1 {
            out.push(Change::PulledUp { sources: olds.iter().map(|o| o.to_string()).collect(), target: nd.to_string() });
        }
    }
    for (od, news) in &targets {
        if news.len() > 1 {
            out.push(Change::PushedDown { source: od.to_string(), targets: news.iter().map(|n| n.to_string()).collect() });
        } else {
            let nd = news.iter().next().unwrap();
            if sources[nd].len() == 1 && od.name != nd.name {
                out.push(Change::Renamed { old: od.to_string(), new: nd.to_string() });
            }
        }
    }

    for rec in new.def.records() {
        for f in &rec.fields {
            let nd = ElementRef::new(&rec.name, &f.name);
            if !touched_new.contains(&nd) {
                out.push(Change::Added { element: nd.to_string() });
            }
        }
    }
    for rec in old.def.records() {
        for f in &rec.fields {
            let od = ElementRef::new(&rec.name, &f.name);
            if !touched_old.contains(&od) {
                out.push(Change::Deleted { element: od.to_string() });
            }
        }
    }
    out.sort();
    out
}
