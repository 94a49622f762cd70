//! Brute-force model of the internal representation: element occurrences
//! of every revision, joined step by step along the predecessor relations
//! with a union-find, then read off for the supported revisions.

use std::collections::{BTreeMap, BTreeSet};

use apievo_core::adl::{ApiDefinition, Element, Optionality, RecordType};
use apievo_core::revision::{RevisionHistory, RevisionId};
use apievo_core::schema::{derive_internal, InternalElement, InternalRepresentation, InternalType, SchemaError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    Type,
    Service,
    Field,
    Member,
    Operation,
}

/// `(revision, kind, public path)`
type Node = (RevisionId, Kind, String);

struct UnionFind {
    index: BTreeMap<Node, usize>,
    parent: Vec<usize>,
}

impl UnionFind {
    fn node(&mut self, n: &Node) -> usize {
        if let Some(&i) = self.index.get(n) {
            return i;
        }
        self.parent.push(self.parent.len());
        self.index.insert(n.clone(), self.parent.len() - 1);
        self.parent.len() - 1
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: &Node, b: &Node) {
        let (x, y) = (self.node(a), self.node(b));
        let (x, y) = (self.find(x), self.find(y));
        self.parent[x] = y;
    }

    fn class(&mut self, n: &Node) -> usize {
        let i = self.node(n);
        self.find(i)
    }
}

/// One element occurrence with what the model needs to know about it.
#[derive(Debug, Clone)]
struct Occurrence {
    node: Node,
    internal_name: String,
    /// Class scope: the owning type or service occurrence, if any.
    owner: Option<Node>,
    optionality: Option<Optionality>,
}

fn chain<'a>(def: &'a ApiDefinition, r: &'a RecordType) -> Vec<&'a RecordType> {
    let mut out = vec![r];
    while let Some(s) = out.last().and_then(|x| x.super_type.as_deref()) {
        match def.record(s) {
            Some(t) if !out.iter().any(|x| x.name == t.name) => out.push(t),
            _ => break,
        }
    }
    out
}

fn default_of(def: &ApiDefinition, r: &RecordType) -> Optionality {
    chain(def, r).iter().find_map(|t| t.default_optionality).unwrap_or(Optionality::Mandatory)
}

fn occurrences(rev: RevisionId, def: &ApiDefinition) -> Vec<Occurrence> {
    let mut out = Vec::new();
    for e in &def.elements {
        let kind = if matches!(e, Element::Service(_)) { Kind::Service } else { Kind::Type };
        let top: Node = (rev, kind, e.name().to_string());
        out.push(Occurrence { node: top.clone(), internal_name: e.internal_name().to_string(), owner: None, optionality: None });
        match e {
            Element::Record(r) => {
                // inherited fields, each with its declaring record's default
                for owner in chain(def, r).into_iter().rev() {
                    for f in &owner.fields {
                        out.push(Occurrence {
                            node: (rev, Kind::Field, format!("{}.{}", r.name, f.name)),
                            internal_name: f.internal_name().to_string(),
                            owner: Some(top.clone()),
                            optionality: Some(f.optionality.unwrap_or_else(|| default_of(def, owner))),
                        });
                    }
                }
            }
            Element::Enum(en) => {
                for m in &en.members {
                    out.push(Occurrence {
                        node: (rev, Kind::Member, format!("{}.{}", en.name, m.name)),
                        internal_name: m.name.clone(),
                        owner: Some(top.clone()),
                        optionality: None,
                    });
                }
            }
            Element::Service(s) => {
                for op in &s.operations {
                    out.push(Occurrence {
                        node: (rev, Kind::Operation, format!("{}.{}", s.name, op.name)),
                        internal_name: op.internal_name().to_string(),
                        owner: Some(top.clone()),
                        optionality: None,
                    });
                }
            }
        }
    }
    out
}

fn lub(xs: impl IntoIterator<Item = Optionality>) -> Optionality {
    let rank = |o: Optionality| match o {
        Optionality::Mandatory => 0,
        Optionality::Optin => 1,
        Optionality::Optional => 2,
    };
    xs.into_iter().fold(Optionality::Mandatory, |acc, x| if rank(x) > rank(acc) { x } else { acc })
}

fn rep_name(e: &InternalElement) -> (String, String) {
    match e {
        InternalElement::Type { name } | InternalElement::Service { name } => (String::new(), name.clone()),
        InternalElement::Field { record, name } => (record.clone(), name.clone()),
        InternalElement::EnumMember { enum_name, name } => (enum_name.clone(), name.clone()),
        InternalElement::Operation { service, name } => (service.clone(), name.clone()),
    }
}

/// Checks `derive_internal(history, supported)` against the model.
pub fn check(defs: &[ApiDefinition], history: &RevisionHistory, supported: &BTreeSet<RevisionId>) -> Result<(), String> {
    let mut uf = UnionFind { index: BTreeMap::new(), parent: Vec::new() };
    let all: Vec<Vec<Occurrence>> =
        defs.iter().enumerate().map(|(i, d)| occurrences(i as RevisionId + 1, d)).collect();
    for occ in all.iter().flatten() {
        uf.node(&occ.node);
    }
    for rev in 2..=defs.len() as RevisionId {
        let m = history.relations_into(rev).ok_or("missing relations")?;
        let link = |uf: &mut UnionFind, kind: Kind, new: String, old: String| {
            uf.union(&(rev, kind, new), &(rev - 1, kind, old));
        };
        for (n, o) in &m.types {
            link(&mut uf, Kind::Type, n.clone(), o.clone());
        }
        for (n, o) in &m.services {
            link(&mut uf, Kind::Service, n.clone(), o.clone());
        }
        for (n, o) in &m.fields {
            link(&mut uf, Kind::Field, n.to_string(), o.to_string());
        }
        for (n, o) in &m.enum_members {
            link(&mut uf, Kind::Member, n.to_string(), o.to_string());
        }
        for (n, o) in &m.operations {
            link(&mut uf, Kind::Operation, n.to_string(), o.to_string());
        }
    }

    // Supported occurrences, newest revision first.
    let live: Vec<&Occurrence> =
        supported.iter().rev().flat_map(|&r| all[r as usize - 1].iter()).collect();

    // Newest name per class, and the class of each occurrence's scope.
    let mut newest: BTreeMap<usize, String> = BTreeMap::new();
    let mut scope: BTreeMap<usize, Option<usize>> = BTreeMap::new();
    for occ in &live {
        let class = uf.class(&occ.node);
        newest.entry(class).or_insert_with(|| occ.internal_name.clone());
        let owner = occ.owner.as_ref().map(|o| uf.class(o));
        scope.insert(class, owner);
    }

    // Internal names clash when two classes in one scope end up with the
    // same name. Types and services share the top-level scope.
    let mut seen: BTreeMap<(bool, Option<usize>, String), usize> = BTreeMap::new();
    let mut clash = false;
    for occ in &live {
        let class = uf.class(&occ.node);
        let key = (occ.owner.is_none(), scope[&class], newest[&class].clone());
        if *seen.entry(key).or_insert(class) != class {
            clash = true;
        }
    }

    let ir = match (derive_internal(history, supported), clash) {
        (Err(SchemaError::DuplicateInternalName { .. }), true) => return Ok(()),
        (Ok(_), true) => return Err("expected DuplicateInternalName".into()),
        (Err(e), _) => return Err(format!("unexpected error {e:?}")),
        (Ok(ir), false) => ir,
    };
    compare(&ir, &mut uf, &live, &newest)?;
    optionality(&ir, &mut uf, &live, supported, &all)
}

/// Same class iff same internal element, and internal names come from the
/// newest supported occurrence.
fn compare(
    ir: &InternalRepresentation,
    uf: &mut UnionFind,
    live: &[&Occurrence],
    newest: &BTreeMap<usize, String>,
) -> Result<(), String> {
    let mut by_class: BTreeMap<usize, InternalElement> = BTreeMap::new();
    let mut by_rep: BTreeMap<InternalElement, usize> = BTreeMap::new();
    for occ in live {
        let (rev, _, path) = &occ.node;
        let rep = ir.representative(*rev, path).map_err(|e| e.to_string())?.clone();
        let class = uf.class(&occ.node);
        if let Some(prev) = by_class.insert(class, rep.clone()) {
            if prev != rep {
                return Err(format!("r{rev} {path}: one lineage maps to {prev} and {rep}"));
            }
        }
        if let Some(prev) = by_rep.insert(rep.clone(), class) {
            if prev != class {
                return Err(format!("r{rev} {path}: two lineages share {rep}"));
            }
        }
        if rep_name(&rep).1 != newest[&class] {
            return Err(format!("r{rev} {path}: named {rep}, newest name is {}", newest[&class]));
        }
    }

    // Nothing in the representation beyond the classes.
    let mut count = BTreeMap::<(u8, String), usize>::new();
    for rep in by_rep.keys() {
        let key = match rep {
            InternalElement::Type { .. } => (0, String::new()),
            InternalElement::Service { .. } => (1, String::new()),
            InternalElement::Field { record, .. } => (2, record.clone()),
            InternalElement::EnumMember { enum_name, .. } => (3, enum_name.clone()),
            InternalElement::Operation { service, .. } => (4, service.clone()),
        };
        *count.entry(key).or_default() += 1;
    }
    let get = |k: (u8, String)| count.get(&k).copied().unwrap_or(0);
    if ir.types.len() != get((0, String::new())) || ir.services.len() != get((1, String::new())) {
        return Err("top-level element count differs".into());
    }
    for t in ir.types.values() {
        let (n, key) = match t {
            InternalType::Record(r) => (r.fields.len(), (2, r.name.clone())),
            InternalType::Enum(e) => (e.members.len(), (3, e.name.clone())),
        };
        if n != get(key.clone()) {
            return Err(format!("{}: {} members, expected {}", key.1, n, get(key.clone())));
        }
    }
    for s in ir.services.values() {
        if s.operations.len() != get((4, s.name.clone())) {
            return Err(format!("{}: operation count differs", s.name));
        }
    }
    Ok(())
}

/// Field optionality is the least upper bound over supported occurrences,
/// or optional when some supported occurrence of the record lacks it.
fn optionality(
    ir: &InternalRepresentation,
    uf: &mut UnionFind,
    live: &[&Occurrence],
    supported: &BTreeSet<RevisionId>,
    all: &[Vec<Occurrence>],
) -> Result<(), String> {
    let mut merged: BTreeMap<usize, Optionality> = BTreeMap::new();
    let mut record_occurrences: BTreeMap<usize, Vec<BTreeSet<usize>>> = BTreeMap::new();
    for &rev in supported {
        let mut here: BTreeMap<Node, BTreeSet<usize>> = BTreeMap::new();
        for occ in &all[rev as usize - 1] {
            if occ.node.1 == Kind::Type && occ.owner.is_none() {
                here.entry(occ.node.clone()).or_default();
            }
            if occ.node.1 == Kind::Field {
                let owner = occ.owner.clone().expect("field owner");
                let class = uf.class(&occ.node);
                here.entry(owner).or_default().insert(class);
                let o = occ.optionality.expect("field optionality");
                merged.entry(class).and_modify(|m| *m = lub([*m, o])).or_insert(o);
            }
        }
        for (owner, fields) in here {
            record_occurrences.entry(uf.class(&owner)).or_default().push(fields);
        }
    }
    for occ in live.iter().filter(|o| o.node.1 == Kind::Field) {
        let class = uf.class(&occ.node);
        let owner = uf.class(occ.owner.as_ref().expect("field owner"));
        let expected = if record_occurrences[&owner].iter().any(|fs| !fs.contains(&class)) {
            Optionality::Optional
        } else {
            merged[&class]
        };
        let (rev, _, path) = &occ.node;
        let InternalElement::Field { record, name } = ir.representative(*rev, path).map_err(|e| e.to_string())? else {
            return Err(format!("{path}: not a field"));
        };
        let actual = ir.record(record).and_then(|r| r.fields.iter().find(|f| &f.name == name)).map(|f| f.optionality);
        if actual != Some(expected) {
            return Err(format!("{record}.{name}: optionality {actual:?}, expected {expected:?}"));
        }
    }
    Ok(())
}

/// Least upper bound by exhaustive search over the three levels, for
/// checking `Optionality::merge`.
pub fn lub_by_search(xs: &[Optionality]) -> Optionality {
    use Optionality::*;
    let le = |a: Optionality, b: Optionality| {
        matches!((a, b), (Mandatory, _) | (Optin, Optin) | (Optin, Optional) | (Optional, Optional))
    };
    let levels = [Mandatory, Optin, Optional];
    let uppers: Vec<Optionality> = levels.into_iter().filter(|&u| xs.iter().all(|&x| le(x, u))).collect();
    *uppers.iter().find(|&&u| uppers.iter().all(|&v| le(u, v))).expect("a least upper bound exists")
}
