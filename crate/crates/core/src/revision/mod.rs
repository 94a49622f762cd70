//! Revision histories and the relations between consecutive revisions.

mod diff;
mod history;
pub(crate) mod lineage;
mod relate;

pub use diff::{diff, Change, ChangeSet};
pub use history::{HistoryError, Revision, RevisionHistory, RevisionId};
pub use relate::{relate, ElementKind, ElementRef, PredecessorMap, RelateError, RelateErrors};
