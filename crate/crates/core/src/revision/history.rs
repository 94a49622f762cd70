use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use super::lineage::Lineages;
use super::relate::{relate, PredecessorMap, RelateErrors};
use crate::adl::{validate_wellformedness, AdlError, ApiDefinition, Severity};
use crate::flat::FlatDefinition;

/// Dense revision number assigned by the history, starting at 1.
pub type RevisionId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Revision {
    pub id: RevisionId,
    pub definition: Arc<ApiDefinition>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HistoryError {
    #[error("definition is not well-formed: {0}")]
    Definition(#[from] AdlError),
    #[error("definition is named {found}, but the history is for {expected}")]
    ApiNameMismatch { expected: String, found: String },
    #[error("{0}")]
    Relate(#[from] RelateErrors),
    #[error("{path}: internal name `{name}` is already used by {other} in revision {revision}")]
    DuplicateInternalName { path: String, name: String, other: String, revision: RevisionId },
    #[error("unknown revision {0}")]
    UnknownRevision(RevisionId),
}

/// An append-only sequence of revisions of one API together with the
/// predecessor relations between consecutive revisions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevisionHistory {
    api_name: String,
    revisions: Vec<Revision>,
    /// `relations[i]` relates `revisions[i + 1]` to `revisions[i]`.
    relations: Vec<PredecessorMap>,
}

impl RevisionHistory {
    pub fn new(api_name: impl Into<String>) -> Self {
        RevisionHistory { api_name: api_name.into(), revisions: Vec::new(), relations: Vec::new() }
    }

    /// Builds a history by appending each definition in order.
    pub fn from_definitions<I>(definitions: I) -> Result<Self, HistoryError>
    where
        I: IntoIterator<Item = ApiDefinition>,
    {
        let mut iter = definitions.into_iter().peekable();
        let name = iter.peek().map(|d| d.name.clone()).unwrap_or_default();
        let mut history = RevisionHistory::new(name);
        for def in iter {
            history = history.append_revision(def)?;
        }
        Ok(history)
    }

    pub fn api_name(&self) -> &str {
        &self.api_name
    }

    pub fn revisions(&self) -> &[Revision] {
        &self.revisions
    }

    pub fn is_empty(&self) -> bool {
        self.revisions.is_empty()
    }

    pub fn len(&self) -> usize {
        self.revisions.len()
    }

    pub fn latest(&self) -> Option<&Revision> {
        self.revisions.last()
    }

    pub fn revision(&self, id: RevisionId) -> Result<&Revision, HistoryError> {
        id.checked_sub(1)
            .and_then(|i| self.revisions.get(i as usize))
            .ok_or(HistoryError::UnknownRevision(id))
    }

    pub fn definition(&self, id: RevisionId) -> Result<&ApiDefinition, HistoryError> {
        Ok(&self.revision(id)?.definition)
    }

    /// Relations of revision `id` against revision `id - 1`.
    pub fn relations_into(&self, id: RevisionId) -> Option<&PredecessorMap> {
        (id >= 2).then(|| self.relations.get(id as usize - 2)).flatten()
    }

    pub fn relations(&self) -> &[PredecessorMap] {
        &self.relations
    }

    pub(crate) fn lineages(&self) -> Lineages {
        Lineages::compute(self)
    }

    /// Returns a new history with `def` appended as the next revision.
    pub fn append_revision(&self, def: ApiDefinition) -> Result<RevisionHistory, HistoryError> {
        if let Some(d) = validate_wellformedness(&def).into_iter().find(|d| d.severity == Severity::Error) {
            return Err(HistoryError::Definition(d.into()));
        }
        if !self.revisions.is_empty() && def.name != self.api_name {
            return Err(HistoryError::ApiNameMismatch { expected: self.api_name.clone(), found: def.name });
        }

        let mut next = self.clone();
        if next.revisions.is_empty() {
            next.api_name = def.name.clone();
        }
        if let Some(prev) = self.latest() {
            let map = relate(&prev.definition, &def)?;
            next.relations.push(map);
        }
        let id = next.revisions.len() as RevisionId + 1;
        next.revisions.push(Revision { id, definition: Arc::new(def) });
        next.check_internal_names()?;
        Ok(next)
    }

    /// An internal name given explicitly with `as` may not be shared with an
    /// unrelated element of an earlier revision in the same scope. Clashes
    /// between two defaulted names are only rejected when both elements end up
    /// in the same internal representation.
    fn check_internal_names(&self) -> Result<(), HistoryError> {
        let lineages = self.lineages();
        let last = self.revisions.len() - 1;
        let mut seen: BTreeMap<(Scope, String), Vec<Occurrence>> = BTreeMap::new();
        for (idx, rev) in self.revisions.iter().enumerate() {
            for occ in occurrences(&lineages, idx, &rev.definition) {
                seen.entry((occ.scope, occ.internal.clone())).or_default().push(occ);
            }
        }
        for ((_, name), occs) in &seen {
            for new in occs.iter().filter(|o| o.revision_index == last) {
                if let Some(old) = occs.iter().find(|o| {
                    o.revision_index < last && o.lineage != new.lineage && (o.explicit || new.explicit)
                }) {
                    return Err(HistoryError::DuplicateInternalName {
                        path: new.path.clone(),
                        name: name.clone(),
                        other: old.path.clone(),
                        revision: self.revisions[old.revision_index].id,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Scope {
    TopLevel,
    FieldsOf(usize),
    OperationsOf(usize),
}

struct Occurrence {
    scope: Scope,
    internal: String,
    lineage: usize,
    explicit: bool,
    revision_index: usize,
    path: String,
}

fn occurrences(lineages: &Lineages, idx: usize, def: &ApiDefinition) -> Vec<Occurrence> {
    let mut out = Vec::new();
    let flat = FlatDefinition::new(def);
    for e in &def.elements {
        let lineage = match e {
            crate::adl::Element::Service(s) => lineages.services[idx][&s.name],
            other => lineages.types[idx][other.name()],
        };
        out.push(Occurrence {
            scope: Scope::TopLevel,
            internal: e.internal_name().to_string(),
            lineage,
            explicit: match e {
                crate::adl::Element::Record(r) => r.alias.is_some(),
                crate::adl::Element::Enum(en) => en.alias.is_some(),
                crate::adl::Element::Service(s) => s.alias.is_some(),
            },
            revision_index: idx,
            path: e.name().to_string(),
        });
    }
    for rec in flat.records.values() {
        let owner = lineages.types[idx][&rec.name];
        for f in &rec.fields {
            let key = super::ElementRef::new(&rec.name, &f.name);
            out.push(Occurrence {
                scope: Scope::FieldsOf(owner),
                internal: f.internal_name.clone(),
                lineage: lineages.fields[idx][&key],
                explicit: f.explicit_alias,
                revision_index: idx,
                path: key.to_string(),
            });
        }
    }
    for s in def.services() {
        let owner = lineages.services[idx][&s.name];
        for op in &s.operations {
            let key = super::ElementRef::new(&s.name, &op.name);
            out.push(Occurrence {
                scope: Scope::OperationsOf(owner),
                internal: op.internal_name().to_string(),
                lineage: lineages.operations[idx][&key],
                explicit: op.alias.is_some(),
                revision_index: idx,
                path: key.to_string(),
            });
        }
    }
    out
}
