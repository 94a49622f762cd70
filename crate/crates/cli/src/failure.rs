use std::fmt;
use std::path::Path;

use apievo_core::adl::{AdlError, Diagnostic};
use apievo_core::codec::CodecError;
use apievo_core::registry::RegistryError;
use apievo_core::resolution::ResolutionErrors;
use apievo_core::revision::HistoryError;
use apievo_core::schema::SchemaError;
use serde::Serialize;
use serde_json::json;

/// A domain error ready for printing: exit code 1.
#[derive(Debug, Serialize)]
pub struct Failure {
    pub category: &'static str,
    pub diagnostics: Vec<Entry>,
}

#[derive(Debug, Serialize)]
pub struct Entry {
    pub kind: String,
    pub message: String,
    pub detail: serde_json::Value,
}

impl Entry {
    fn new(kind: impl Into<String>, message: impl fmt::Display, detail: serde_json::Value) -> Self {
        Entry { kind: kind.into(), message: message.to_string(), detail }
    }

    /// Kind taken from the serialized variant name.
    fn from_serialized<E: Serialize + fmt::Display>(e: &E) -> Self {
        let detail = serde_json::to_value(e).unwrap_or(serde_json::Value::Null);
        let kind = match &detail {
            serde_json::Value::Object(m) if m.len() == 1 => m.keys().next().cloned().unwrap_or_default(),
            serde_json::Value::String(s) => s.clone(),
            _ => "Error".to_string(),
        };
        let detail = match detail {
            serde_json::Value::Object(mut m) if m.len() == 1 => m.remove(&kind).unwrap_or_default(),
            _ => serde_json::Value::Null,
        };
        Entry::new(kind, e, detail)
    }
}

impl Failure {
    pub fn single(category: &'static str, entry: Entry) -> Self {
        Failure { category, diagnostics: vec![entry] }
    }

    pub fn usage(message: impl fmt::Display) -> Self {
        Failure::single("input", Entry::new("InvalidArgument", message, serde_json::Value::Null))
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::single("io", Entry::new("Io", format!("{}: {e}", path.display()), json!({ "path": path })))
    }

    pub fn diagnostics(ds: &[Diagnostic]) -> Self {
        Failure {
            category: "validation",
            diagnostics: ds
                .iter()
                .map(|d| Entry::new(format!("{:?}", d.kind), d, serde_json::to_value(d).unwrap_or_default()))
                .collect(),
        }
    }

    pub fn print(&self, json: bool) {
        if json {
            eprintln!("{}", serde_json::to_string_pretty(&json!({ "error": self })).expect("failure serializes"));
            return;
        }
        for d in &self.diagnostics {
            eprintln!("error[{}] {}: {}", self.category, d.kind, d.message);
        }
    }
}

impl From<AdlError> for Failure {
    fn from(e: AdlError) -> Self {
        let (kind, detail) = match &e {
            AdlError::Syntax { line, column, expected, found } => {
                ("SyntaxError", json!({ "line": line, "column": column, "expected": expected, "found": found }))
            }
            AdlError::InvalidBound { line, column, value } => {
                ("InvalidBound", json!({ "line": line, "column": column, "value": value }))
            }
            AdlError::DuplicateName { path } => ("DuplicateName", json!({ "path": path })),
            AdlError::UnknownTypeReference { path, .. } => ("UnknownTypeReference", json!({ "path": path })),
            AdlError::CyclicInheritance { path } => ("CyclicInheritance", json!({ "path": path })),
            AdlError::Invalid(d) => return Failure::diagnostics(std::slice::from_ref(d)),
        };
        Failure::single("validation", Entry::new(kind, &e, detail))
    }
}

impl From<HistoryError> for Failure {
    fn from(e: HistoryError) -> Self {
        match e {
            HistoryError::Definition(e) => e.into(),
            HistoryError::Relate(errs) => {
                Failure { category: "history", diagnostics: errs.0.iter().map(Entry::from_serialized).collect() }
            }
            other => {
                let kind = match &other {
                    HistoryError::ApiNameMismatch { .. } => "ApiNameMismatch",
                    HistoryError::DuplicateInternalName { .. } => "DuplicateInternalName",
                    HistoryError::UnknownRevision(_) => "UnknownRevision",
                    _ => "HistoryError",
                };
                Failure::single("history", Entry::new(kind, &other, serde_json::Value::Null))
            }
        }
    }
}

impl From<SchemaError> for Failure {
    fn from(e: SchemaError) -> Self {
        Failure::single("schema", Entry::from_serialized(&e))
    }
}

impl From<ResolutionErrors> for Failure {
    fn from(e: ResolutionErrors) -> Self {
        Failure { category: "resolution", diagnostics: e.0.iter().map(Entry::from_serialized).collect() }
    }
}

impl From<CodecError> for Failure {
    fn from(e: CodecError) -> Self {
        Failure::single("conversion", Entry::from_serialized(&e))
    }
}

impl From<RegistryError> for Failure {
    fn from(e: RegistryError) -> Self {
        let (kind, detail) = match e {
            RegistryError::Definition(e) => return e.into(),
            RegistryError::History(e) => return e.into(),
            RegistryError::Schema(e) => return e.into(),
            RegistryError::Resolution(e) => return e.into(),
            RegistryError::Io { ref path, .. } => ("Io", json!({ "path": path })),
            RegistryError::UnknownApi(ref api) => ("UnknownApi", json!({ "api": api })),
            RegistryError::UnknownRevision(id) => ("UnknownRevision", json!({ "revision": id })),
            RegistryError::UnknownClient(ref name) => ("UnknownClient", json!({ "client": name })),
            RegistryError::ClientsStillReferencing { ref clients } => {
                ("ClientsStillReferencing", json!({ "clients": clients }))
            }
            RegistryError::ConcurrentPublish(ref api) => ("ConcurrentPublish", json!({ "api": api })),
            RegistryError::CorruptStore(_) => ("CorruptStore", serde_json::Value::Null),
            RegistryError::InvalidName(ref name) => ("InvalidName", json!({ "name": name })),
            RegistryError::InjectedFault(_) => ("InjectedFault", serde_json::Value::Null),
        };
        Failure::single("registry", Entry::new(kind, &e, detail))
    }
}
