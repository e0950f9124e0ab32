use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use perspecml_core::session::{log_file_name, LogWriter, Session, LOG_EXTENSION};
use perspecml_core::specformat::{parse_spec, SpecDocument};
use perspecml_core::{Catalog, Finding};
use tokio::sync::Mutex;

pub struct LiveSession {
    pub session: Session,
    pub log: LogWriter,
}

#[derive(Debug, Clone)]
pub struct StoredDocument {
    pub id: String,
    pub text: String,
    pub document: SpecDocument,
}

pub struct AppState {
    pub catalog: Catalog,
    sessions_dir: PathBuf,
    documents_dir: PathBuf,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<LiveSession>>>>,
    documents: RwLock<BTreeMap<String, StoredDocument>>,
    warnings: Vec<String>,
}

impl AppState {
    /// Opens `data_dir`, replaying every session log and reloading stored
    /// documents. Unreadable files become warnings rather than failures.
    pub fn load(catalog: Catalog, data_dir: &Path) -> io::Result<AppState> {
        let sessions_dir = data_dir.join("sessions");
        let documents_dir = data_dir.join("documents");
        fs::create_dir_all(&sessions_dir)?;
        fs::create_dir_all(&documents_dir)?;
        let mut warnings = Vec::new();

        let mut sessions = BTreeMap::new();
        for path in sorted_files(&sessions_dir, LOG_EXTENSION)? {
            match Session::load(&catalog, &path) {
                Ok(session) => {
                    let log = LogWriter::open(&path)?;
                    sessions.insert(
                        session.id().to_owned(),
                        Arc::new(Mutex::new(LiveSession { session, log })),
                    );
                }
                Err(f) => warnings.push(format!("skipping session log: {f}")),
            }
        }

        let mut documents = BTreeMap::new();
        for path in sorted_files(&documents_dir, "psml")? {
            let id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let text = fs::read_to_string(&path)?;
            match parse_spec(&text, &catalog) {
                Ok(document) => {
                    documents.insert(id.clone(), StoredDocument { id, text, document });
                }
                Err(_) => warnings.push(format!("skipping invalid document {}", path.display())),
            }
        }

        Ok(AppState {
            catalog,
            sessions_dir,
            documents_dir,
            sessions: RwLock::new(sessions),
            documents: RwLock::new(documents),
            warnings,
        })
    }

    pub fn load_warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn session(&self, id: &str) -> Option<Arc<Mutex<LiveSession>>> {
        self.sessions.read().unwrap().get(id).cloned()
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.sessions.read().unwrap().keys().cloned().collect()
    }

    /// Starts a session and writes its first event before registering it.
    pub fn create_session(
        &self,
        project: &str,
        seed: Option<&SpecDocument>,
    ) -> Result<Arc<Mutex<LiveSession>>, CreateError> {
        let session = Session::start(&self.catalog, project, seed).map_err(CreateError::Rejected)?;
        let path = self.sessions_dir.join(log_file_name(session.id()));
        let mut log = LogWriter::create(&path).map_err(CreateError::Io)?;
        log.append_all(session.log()).map_err(CreateError::Io)?;
        let id = session.id().to_owned();
        let live = Arc::new(Mutex::new(LiveSession { session, log }));
        self.sessions.write().unwrap().insert(id, live.clone());
        Ok(live)
    }

    pub fn store_document(&self, text: String, document: SpecDocument) -> io::Result<StoredDocument> {
        let id = uuid::Uuid::new_v4().to_string();
        fs::write(self.documents_dir.join(format!("{id}.psml")), &text)?;
        let stored = StoredDocument { id: id.clone(), text, document };
        self.documents.write().unwrap().insert(id, stored.clone());
        Ok(stored)
    }

    pub fn document(&self, id: &str) -> Option<StoredDocument> {
        self.documents.read().unwrap().get(id).cloned()
    }

    pub fn documents(&self) -> Vec<StoredDocument> {
        self.documents.read().unwrap().values().cloned().collect()
    }
}

pub enum CreateError {
    Rejected(Finding),
    Io(io::Error),
}

fn sorted_files(dir: &Path, extension: &str) -> io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == extension) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}
