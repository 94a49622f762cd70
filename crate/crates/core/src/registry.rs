//! File-backed store of revision histories, supported revision sets and
//! registered clients.
//!
//! ```text
//! <root>/<api>/manifest.json      supported set, revision digests, clients
//! <root>/<api>/rev-<n>.api        published revisions, never rewritten
//! <root>/<api>/clients/<name>.api registered client definitions
//! <root>/<api>/.lock              writer lock
//! ```
//!
//! Every file is written to a temporary name and renamed into place. A
//! revision counts as published once the manifest lists it, so a crash
//! before the manifest rename leaves the previous state intact.

use std::collections::BTreeSet;
use std::fs::{self, File, OpenOptions, TryLockError};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::adl::{parse_definition, AdlError};
use crate::resolution::{resolve, ClientDefinition, ResolutionError, ResolutionErrors};
use crate::revision::{HistoryError, RevisionHistory, RevisionId};
use crate::schema::{derive_internal, InternalRepresentation, SchemaError};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Definition(#[from] AdlError),
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Resolution(#[from] ResolutionErrors),
    #[error("no API named {0} in the registry")]
    UnknownApi(String),
    #[error("unknown revision {0}")]
    UnknownRevision(RevisionId),
    #[error("no client named {0}")]
    UnknownClient(String),
    #[error("clients still use revisions outside the new supported set: {}", clients.join(", "))]
    ClientsStillReferencing { clients: Vec<String> },
    #[error("another process holds the lock for {0}")]
    ConcurrentPublish(String),
    #[error("store is corrupt: {0}")]
    CorruptStore(String),
    #[error("invalid name `{0}`")]
    InvalidName(String),
    #[error("simulated crash before rename of {0}")]
    InjectedFault(PathBuf),
}

impl From<ResolutionError> for RegistryError {
    fn from(e: ResolutionError) -> Self {
        RegistryError::Resolution(e.into())
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> RegistryError + '_ {
    move |source| RegistryError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevisionEntry {
    pub id: RevisionId,
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClientEntry {
    pub name: String,
    pub revision: RevisionId,
    pub file: String,
    pub sha256: String,
    /// Set when the client's revision was dropped with `force`.
    #[serde(default)]
    pub orphaned: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub api: String,
    pub head: RevisionId,
    pub revisions: Vec<RevisionEntry>,
    pub supported: BTreeSet<RevisionId>,
    pub clients: Vec<ClientEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SupportReport {
    pub previous: BTreeSet<RevisionId>,
    pub supported: BTreeSet<RevisionId>,
    /// Clients orphaned by this change; only non-empty with `force`.
    pub orphaned: Vec<String>,
}

pub struct Registry {
    root: PathBuf,
    lock_timeout: Duration,
    fault_after: Option<AtomicUsize>,
}

static TEMP_COUNTER: AtomicUsize = AtomicUsize::new(0);

impl Registry {
    pub fn open(root: impl Into<PathBuf>) -> Self {
        Registry { root: root.into(), lock_timeout: Duration::from_secs(5), fault_after: None }
    }

    pub fn with_lock_timeout(mut self, timeout: Duration) -> Self {
        self.lock_timeout = timeout;
        self
    }

    /// Test hook: the `n`th atomic write from now (counting from 0) writes its
    /// temporary file and then fails instead of renaming it.
    #[doc(hidden)]
    pub fn fail_before_rename(mut self, n: usize) -> Self {
        self.fault_after = Some(AtomicUsize::new(n));
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn api_dir(&self, api: &str) -> Result<PathBuf, RegistryError> {
        check_name(api)?;
        Ok(self.root.join(api))
    }

    /// Names of all APIs in the store.
    pub fn apis(&self) -> Result<Vec<String>, RegistryError> {
        let mut out = Vec::new();
        let entries = match fs::read_dir(&self.root) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
            Err(e) => return Err(io(&self.root)(e)),
        };
        for entry in entries {
            let entry = entry.map_err(io(&self.root))?;
            if entry.path().join("manifest.json").is_file() {
                out.push(entry.file_name().to_string_lossy().into_owned());
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn manifest(&self, api: &str) -> Result<Manifest, RegistryError> {
        let path = self.api_dir(api)?.join("manifest.json");
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(RegistryError::UnknownApi(api.into())),
            Err(e) => return Err(io(&path)(e)),
        };
        let m: Manifest = serde_json::from_str(&text)
            .map_err(|e| RegistryError::CorruptStore(format!("{}: {e}", path.display())))?;
        if m.version != MANIFEST_VERSION {
            return Err(RegistryError::CorruptStore(format!("unsupported manifest version {}", m.version)));
        }
        Ok(m)
    }

    /// Loads the history, checking every revision file against its digest.
    /// Relations are recomputed from the sources.
    pub fn history(&self, api: &str) -> Result<RevisionHistory, RegistryError> {
        let m = self.manifest(api)?;
        self.history_of(api, &m)
    }

    fn history_of(&self, api: &str, m: &Manifest) -> Result<RevisionHistory, RegistryError> {
        let dir = self.api_dir(api)?;
        let mut history = RevisionHistory::new(api);
        for entry in &m.revisions {
            let text = read_checked(&dir.join(&entry.file), &entry.sha256)?;
            history = history.append_revision(parse_definition(&text)?)?;
        }
        Ok(history)
    }

    pub fn internal(&self, api: &str) -> Result<InternalRepresentation, RegistryError> {
        let m = self.manifest(api)?;
        let h = self.history_of(api, &m)?;
        Ok(derive_internal(&h, &m.supported)?)
    }

    pub fn client(&self, api: &str, name: &str) -> Result<ClientDefinition, RegistryError> {
        let m = self.manifest(api)?;
        let entry = m
            .clients
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| RegistryError::UnknownClient(name.to_string()))?;
        let text = read_checked(&self.api_dir(api)?.join(&entry.file), &entry.sha256)?;
        Ok(ClientDefinition::new(parse_definition(&text)?, entry.revision)?)
    }

    /// Appends a revision. The supported set is left unchanged.
    pub fn publish(&self, api: &str, text: &str) -> Result<RevisionId, RegistryError> {
        let dir = self.api_dir(api)?;
        let def = parse_definition(text)?;
        if def.name != api {
            return Err(HistoryError::ApiNameMismatch { expected: api.to_string(), found: def.name }.into());
        }
        fs::create_dir_all(&dir).map_err(io(&dir))?;
        let _lock = self.lock(api, &dir)?;

        let mut m = match self.manifest(api) {
            Ok(m) => m,
            Err(RegistryError::UnknownApi(_)) => Manifest {
                version: MANIFEST_VERSION,
                api: api.to_string(),
                head: 0,
                revisions: Vec::new(),
                supported: BTreeSet::new(),
                clients: Vec::new(),
            },
            Err(e) => return Err(e),
        };
        let history = self.history_of(api, &m)?.append_revision(def)?;
        let id = history.len() as RevisionId;

        let file = format!("rev-{id}.api");
        self.write_atomic(&dir.join(&file), text.as_bytes())?;
        m.head = id;
        m.revisions.push(RevisionEntry { id, file, sha256: digest(text.as_bytes()) });
        self.write_manifest(&dir, &m)?;
        Ok(id)
    }

    /// Replaces the supported set. Dropping a revision a registered client
    /// still uses fails unless `force` is set, which orphans the client.
    pub fn set_supported(
        &self,
        api: &str,
        ids: &BTreeSet<RevisionId>,
        force: bool,
    ) -> Result<SupportReport, RegistryError> {
        let dir = self.api_dir(api)?;
        let _lock = self.lock(api, &dir)?;
        let mut m = self.manifest(api)?;
        if let Some(&bad) = ids.iter().find(|&&id| id == 0 || id > m.head) {
            return Err(RegistryError::UnknownRevision(bad));
        }
        let history = self.history_of(api, &m)?;
        derive_internal(&history, ids)?;

        let affected: Vec<String> = m
            .clients
            .iter()
            .filter(|c| !c.orphaned && !ids.contains(&c.revision))
            .map(|c| c.name.clone())
            .collect();
        if !affected.is_empty() && !force {
            return Err(RegistryError::ClientsStillReferencing { clients: affected });
        }
        let previous = std::mem::replace(&mut m.supported, ids.clone());
        for c in &mut m.clients {
            if affected.contains(&c.name) {
                c.orphaned = true;
            }
        }
        if previous != m.supported || !affected.is_empty() {
            self.write_manifest(&dir, &m)?;
        }
        Ok(SupportReport { previous, supported: m.supported, orphaned: affected })
    }

    /// Records a client after resolving it against the current supported
    /// set. A client registered again under the same name is replaced.
    pub fn register_client(
        &self,
        api: &str,
        name: &str,
        text: &str,
        revision: RevisionId,
    ) -> Result<(), RegistryError> {
        check_name(name)?;
        let dir = self.api_dir(api)?;
        let _lock = self.lock(api, &dir)?;
        let mut m = self.manifest(api)?;
        let history = self.history_of(api, &m)?;
        let client = ClientDefinition::new(parse_definition(text)?, revision)?;
        if !m.supported.contains(&revision) {
            return Err(ResolutionError::UnsupportedRevision(revision).into());
        }
        let internal = derive_internal(&history, &m.supported)?;
        resolve(&client, &history, &internal)?;

        let clients = dir.join("clients");
        fs::create_dir_all(&clients).map_err(io(&clients))?;
        let file = format!("clients/{name}.api");
        self.write_atomic(&dir.join(&file), text.as_bytes())?;
        m.clients.retain(|c| c.name != name);
        m.clients.push(ClientEntry {
            name: name.to_string(),
            revision,
            file,
            sha256: digest(text.as_bytes()),
            orphaned: false,
        });
        m.clients.sort_by(|a, b| a.name.cmp(&b.name));
        self.write_manifest(&dir, &m)
    }

    fn write_manifest(&self, dir: &Path, m: &Manifest) -> Result<(), RegistryError> {
        let mut text = serde_json::to_string_pretty(m).expect("manifest serializes");
        text.push('\n');
        self.write_atomic(&dir.join("manifest.json"), text.as_bytes())
    }

    fn write_atomic(&self, path: &Path, bytes: &[u8]) -> Result<(), RegistryError> {
        let name = path.file_name().expect("file path").to_string_lossy();
        let tmp = path.with_file_name(format!(
            ".{name}.tmp-{}-{}",
            std::process::id(),
            TEMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let mut f = File::create(&tmp).map_err(io(&tmp))?;
        f.write_all(bytes).map_err(io(&tmp))?;
        f.sync_all().map_err(io(&tmp))?;
        drop(f);
        if let Some(n) = &self.fault_after {
            if n.load(Ordering::SeqCst) == 0 {
                return Err(RegistryError::InjectedFault(path.to_path_buf()));
            }
            n.fetch_sub(1, Ordering::SeqCst);
        }
        fs::rename(&tmp, path).map_err(io(path))
    }

    fn lock(&self, api: &str, dir: &Path) -> Result<File, RegistryError> {
        if !dir.is_dir() {
            return Err(RegistryError::UnknownApi(api.to_string()));
        }
        let path = dir.join(".lock");
        let file = OpenOptions::new().create(true).truncate(false).write(true).open(&path).map_err(io(&path))?;
        let start = Instant::now();
        loop {
            match file.try_lock() {
                Ok(()) => return Ok(file),
                Err(TryLockError::WouldBlock) => {
                    if start.elapsed() >= self.lock_timeout {
                        return Err(RegistryError::ConcurrentPublish(api.to_string()));
                    }
                    std::thread::sleep(Duration::from_millis(5));
                }
                Err(TryLockError::Error(e)) => return Err(io(&path)(e)),
            }
        }
    }
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read_checked(path: &Path, sha256: &str) -> Result<String, RegistryError> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    if digest(text.as_bytes()) != sha256 {
        return Err(RegistryError::CorruptStore(format!("{} does not match its digest", path.display())));
    }
    Ok(text)
}

fn check_name(name: &str) -> Result<(), RegistryError> {
    let ok = !name.is_empty()
        && !name.starts_with('.')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(RegistryError::InvalidName(name.to_string()))
    }
}
