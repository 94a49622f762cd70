//! Random revision histories built from small edit operations. Each edit is
//! kept only if the revision stays well-formed, derives a schema and still
//! appends to the history, so every generated history is accepted.

use std::collections::BTreeSet;

use apievo_core::adl::{
    validate_wellformedness, ApiDefinition, Element, EnumMember, EnumType, Field, FieldPath, FieldReplaces,
    Optionality, RecordType, Replaces, Service, ServiceOperation, Severity, TypeRef,
};
use apievo_core::revision::RevisionHistory;
use apievo_core::schema::schema_of;
use proptest::collection::vec;
use proptest::prelude::*;

pub const API: &str = "gen";
const MAX_TYPES: usize = 8;
const OP_KINDS: u8 = 26;

/// One edit; the numbers pick targets modulo whatever exists.
#[derive(Debug, Clone, Copy)]
pub struct Op {
    pub kind: u8,
    pub a: u16,
    pub b: u16,
    pub c: u16,
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub initial: Vec<Op>,
    /// One entry per later revision.
    pub steps: Vec<Vec<Op>>,
    /// Bit i selects revision i + 1.
    pub supported: u8,
}

fn op() -> impl Strategy<Value = Op> {
    (0..OP_KINDS, any::<u16>(), any::<u16>(), any::<u16>()).prop_map(|(kind, a, b, c)| Op { kind, a, b, c })
}

/// Histories of up to five revisions.
pub fn plan() -> impl Strategy<Value = Plan> {
    (vec(op(), 6..24), vec(vec(op(), 0..8), 0..5), any::<u8>())
        .prop_map(|(initial, steps, supported)| Plan { initial, steps, supported })
}

impl Plan {
    pub fn supported_set(&self, revisions: usize) -> BTreeSet<u32> {
        let set: BTreeSet<u32> = (0..revisions).filter(|i| self.supported & (1 << i) != 0).map(|i| i as u32 + 1).collect();
        if set.is_empty() {
            BTreeSet::from([revisions as u32])
        } else {
            set
        }
    }
}

pub fn build(plan: &Plan) -> (Vec<ApiDefinition>, RevisionHistory) {
    let mut g = Gen { def: ApiDefinition::new(API), next: 0 };
    let mut history = RevisionHistory::new(API);
    for op in &plan.initial {
        g.try_apply(*op, &history);
    }
    let mut defs = vec![g.def.clone()];
    history = history.append_revision(g.def.clone()).expect("checked revision appends");
    for step in &plan.steps {
        g.def = g.def.without_replaces();
        for op in step {
            g.try_apply(*op, &history);
        }
        history = history.append_revision(g.def.clone()).expect("checked revision appends");
        defs.push(g.def.clone());
    }
    (defs, history)
}

struct Gen {
    def: ApiDefinition,
    next: usize,
}

fn pick<T: Clone>(items: &[T], n: u16) -> Option<T> {
    if items.is_empty() {
        None
    } else {
        Some(items[n as usize % items.len()].clone())
    }
}

fn optionality(n: u16) -> Option<Optionality> {
    match n % 4 {
        0 => None,
        1 => Some(Optionality::Mandatory),
        2 => Some(Optionality::Optin),
        _ => Some(Optionality::Optional),
    }
}

impl Gen {
    fn fresh(&mut self, prefix: &str) -> String {
        self.next += 1;
        format!("{prefix}{}", self.next)
    }

    fn try_apply(&mut self, op: Op, history: &RevisionHistory) {
        let before = self.def.clone();
        let before_next = self.next;
        self.apply(op);
        let ok = self.def != before
            && validate_wellformedness(&self.def).iter().all(|d| d.severity != Severity::Error)
            && schema_of(&self.def).is_ok()
            && history.append_revision(self.def.clone()).is_ok();
        if !ok {
            self.def = before;
            self.next = before_next;
        }
    }

    fn record_names(&self, only_abstract: bool) -> Vec<String> {
        self.def.records().filter(|r| !only_abstract || r.is_abstract).map(|r| r.name.clone()).collect()
    }

    fn type_names(&self) -> Vec<String> {
        self.def
            .elements
            .iter()
            .filter(|e| !matches!(e, Element::Service(_)))
            .map(|e| e.name().to_string())
            .collect()
    }

    fn record_mut(&mut self, name: &str) -> &mut RecordType {
        self.def
            .elements
            .iter_mut()
            .find_map(|e| match e {
                Element::Record(r) if r.name == name => Some(r),
                _ => None,
            })
            .expect("record exists")
    }

    fn enum_mut(&mut self, name: &str) -> &mut EnumType {
        self.def
            .elements
            .iter_mut()
            .find_map(|e| match e {
                Element::Enum(en) if en.name == name => Some(en),
                _ => None,
            })
            .expect("enum exists")
    }

    fn service_mut(&mut self) -> Option<&mut Service> {
        self.def.elements.iter_mut().find_map(|e| match e {
            Element::Service(s) => Some(s),
            _ => None,
        })
    }

    fn type_ref(&self, b: u16, c: u16) -> TypeRef {
        match b % 8 {
            0 => TypeRef::Int32,
            1 => TypeRef::String(None),
            2 => TypeRef::String(Some(10)),
            3 => TypeRef::Numeric(Some(5)),
            4 => TypeRef::List(Box::new(TypeRef::Int32), Some(3)),
            5 => TypeRef::List(Box::new(TypeRef::String(None)), None),
            _ => match pick(&self.type_names(), c) {
                Some(t) => TypeRef::Named(t),
                None => TypeRef::Int32,
            },
        }
    }

    fn count_types(&self) -> usize {
        self.type_names().len()
    }

    fn apply(&mut self, op: Op) {
        let Op { kind, a, b, c } = op;
        match kind {
            // records and enums
            0..=2 if self.count_types() < MAX_TYPES => {
                let mut r = RecordType::new(self.fresh("R"));
                r.is_abstract = kind == 2;
                if a % 3 == 0 {
                    r.super_type = pick(&self.record_names(true), b);
                }
                if c % 5 == 0 {
                    r.default_optionality = optionality(c / 5);
                }
                self.def.elements.push(Element::Record(r));
            }
            3 if self.count_types() < MAX_TYPES => {
                let members = (0..=a % 3).map(|_| EnumMember { name: self.fresh("M"), replaces: None }).collect();
                let name = self.fresh("E");
                self.def.elements.push(Element::Enum(EnumType { name, alias: None, members, replaces: None }));
            }
            // fields
            4..=6 | 22 => {
                let Some(r) = pick(&self.record_names(false), a) else { return };
                let name = if kind == 22 { "dup".to_string() } else { self.fresh("f") };
                let mut f = Field::new(name, self.type_ref(b, c));
                f.optionality = optionality(c >> 8);
                self.record_mut(&r).fields.push(f);
            }
            7 => {
                let Some(r) = pick(&self.record_names(false), a) else { return };
                let rec = self.record_mut(&r);
                if !rec.fields.is_empty() {
                    let i = b as usize % rec.fields.len();
                    rec.fields.remove(i);
                }
            }
            8 => {
                let Some(r) = pick(&self.record_names(false), a) else { return };
                let name = self.fresh("f");
                let rec = self.record_mut(&r);
                if let Some(f) = pick_mut(&mut rec.fields, b) {
                    let old = std::mem::replace(&mut f.name, name);
                    f.replaces = Some(FieldReplaces::Names(vec![FieldPath { owner: None, field: old }]));
                }
            }
            9 => {
                let Some(r) = pick(&self.record_names(false), a) else { return };
                let ty = self.type_ref(c, b);
                if let Some(f) = pick_mut(&mut self.record_mut(&r).fields, b) {
                    f.ty = ty;
                }
            }
            10 => {
                let Some(old) = pick(&self.type_names(), a) else { return };
                let new = self.fresh(if self.def.enum_type(&old).is_some() { "E" } else { "R" });
                self.rename_type(&old, &new);
            }
            11 => {
                let Some(old) = pick(&self.type_names(), a) else { return };
                self.def.elements.retain(|e| e.name() != old);
            }
            // enum members
            12..=14 => {
                let enums: Vec<String> = self.def.enums().map(|e| e.name.clone()).collect();
                let Some(e) = pick(&enums, a) else { return };
                let name = self.fresh("M");
                let en = self.enum_mut(&e);
                match kind {
                    12 => en.members.push(EnumMember { name, replaces: None }),
                    13 if !en.members.is_empty() => {
                        let i = b as usize % en.members.len();
                        en.members.remove(i);
                    }
                    14 => {
                        if let Some(m) = pick_mut(&mut en.members, b) {
                            let old = std::mem::replace(&mut m.name, name);
                            m.replaces = Some(Replaces::Name(old));
                        }
                    }
                    _ => {}
                }
            }
            15 => self.pull_up(a),
            16 => self.push_down(a, b),
            17 => {
                let Some(r) = pick(&self.record_names(false), a) else { return };
                if let Some(f) = pick_mut(&mut self.record_mut(&r).fields, b) {
                    f.optionality = optionality(c);
                }
            }
            // operations
            18 => {
                let records = self.record_names(false);
                let (Some(input), Some(output)) = (pick(&records, a), pick(&records, b)) else { return };
                let name = self.fresh("op");
                if self.service_mut().is_none() {
                    let svc = self.fresh("S");
                    self.def.elements.push(Element::Service(Service {
                        name: svc,
                        alias: None,
                        operations: Vec::new(),
                        replaces: None,
                    }));
                }
                self.service_mut().expect("service").operations.push(ServiceOperation {
                    name,
                    alias: None,
                    input,
                    output,
                    throws: Vec::new(),
                    replaces: None,
                });
            }
            19 | 20 | 23 => {
                let records = self.record_names(false);
                let name = self.fresh("op");
                let Some(svc) = self.service_mut() else { return };
                if svc.operations.is_empty() {
                    return;
                }
                let i = a as usize % svc.operations.len();
                match kind {
                    19 => {
                        let old = std::mem::replace(&mut svc.operations[i].name, name);
                        svc.operations[i].replaces = Some(Replaces::Name(old));
                    }
                    20 => {
                        svc.operations.remove(i);
                    }
                    _ => {
                        if let Some(r) = pick(&records, b) {
                            svc.operations[i].input = r;
                        }
                    }
                }
            }
            21 => {
                let Some(r) = pick(&self.record_names(false), a) else { return };
                let alias = if c % 2 == 0 { "shared".to_string() } else { self.fresh("g") };
                if let Some(f) = pick_mut(&mut self.record_mut(&r).fields, b) {
                    f.alias = Some(alias);
                }
            }
            24 => {
                let Some(r) = pick(&self.record_names(false), a) else { return };
                self.record_mut(&r).default_optionality = optionality(b);
            }
            25 => {
                // a concrete subtype for an abstract record
                let Some(sup) = pick(&self.record_names(true), a) else { return };
                if self.count_types() < MAX_TYPES {
                    let mut r = RecordType::new(self.fresh("R"));
                    r.super_type = Some(sup);
                    self.def.elements.push(Element::Record(r));
                }
            }
            _ => {}
        }
    }

    fn rename_type(&mut self, old: &str, new: &str) {
        fn rename_ref(t: &mut TypeRef, old: &str, new: &str) {
            match t {
                TypeRef::Named(n) if n == old => *n = new.to_string(),
                TypeRef::List(e, _) => rename_ref(e, old, new),
                _ => {}
            }
        }
        for e in &mut self.def.elements {
            match e {
                Element::Record(r) => {
                    if r.name == old {
                        r.name = new.to_string();
                        r.replaces = Some(Replaces::Name(old.to_string()));
                    }
                    if r.super_type.as_deref() == Some(old) {
                        r.super_type = Some(new.to_string());
                    }
                    for f in &mut r.fields {
                        rename_ref(&mut f.ty, old, new);
                    }
                }
                Element::Enum(en) => {
                    if en.name == old {
                        en.name = new.to_string();
                        en.replaces = Some(Replaces::Name(old.to_string()));
                    }
                }
                Element::Service(s) => {
                    for op in &mut s.operations {
                        for n in [&mut op.input, &mut op.output] {
                            if n == old {
                                *n = new.to_string();
                            }
                        }
                    }
                }
            }
        }
    }

    fn subtypes(&self, of: &str) -> Vec<String> {
        self.def.records().filter(|r| r.super_type.as_deref() == Some(of)).map(|r| r.name.clone()).collect()
    }

    /// Moves one field of the same type from every direct subtype into the
    /// supertype.
    fn pull_up(&mut self, a: u16) {
        let Some(sup) = pick(&self.record_names(true), a) else { return };
        let subs = self.subtypes(&sup);
        let Some(first) = subs.first() else { return };
        let Some(template) = self.def.record(first).and_then(|r| r.fields.first()).cloned() else { return };
        let mut sources = Vec::new();
        for s in &subs {
            match self.def.record(s).and_then(|r| r.fields.iter().find(|f| f.ty == template.ty)) {
                Some(f) => sources.push((s.clone(), f.name.clone())),
                None => return,
            }
        }
        for (s, f) in &sources {
            self.record_mut(s).fields.retain(|x| &x.name != f);
        }
        let mut field = Field::new(self.fresh("f"), template.ty);
        field.optionality = template.optionality;
        field.replaces = Some(FieldReplaces::Names(
            sources.into_iter().map(|(owner, field)| FieldPath { owner: Some(owner), field }).collect(),
        ));
        self.record_mut(&sup).fields.push(field);
    }

    /// Moves one field of a record into each of its direct subtypes.
    fn push_down(&mut self, a: u16, b: u16) {
        let Some(sup) = pick(&self.record_names(false), a) else { return };
        let subs = self.subtypes(&sup);
        if subs.is_empty() {
            return;
        }
        let rec = self.record_mut(&sup);
        if rec.fields.is_empty() {
            return;
        }
        let moved = rec.fields.remove(b as usize % rec.fields.len());
        for s in subs {
            let mut f = Field::new(self.fresh("f"), moved.ty.clone());
            f.optionality = moved.optionality;
            f.replaces =
                Some(FieldReplaces::Names(vec![FieldPath { owner: Some(sup.clone()), field: moved.name.clone() }]));
            self.record_mut(&s).fields.push(f);
        }
    }
}

fn pick_mut<T>(items: &mut [T], n: u16) -> Option<&mut T> {
    if items.is_empty() {
        None
    } else {
        let i = n as usize % items.len();
        Some(&mut items[i])
    }
}
