//! Append-only session journals.
//!
//! Each session owns `<session_id>.rec` in the store directory. Every line
//! is a canonical [`SpecDocument`]: a `session` snapshot after each state
//! change, and a single `record` line once the session is finalized. Files
//! are only ever appended to.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{ExperimentSession, SessionRecord};
use crate::schema::{SchemaError, SpecDocument};

pub const RECORD_EXTENSION: &str = "rec";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Schema {
        path: PathBuf,
        line: usize,
        #[source]
        source: SchemaError,
    },
    #[error("{path}: journal line {line} holds a {found}, expected a session or record")]
    UnexpectedDocument {
        path: PathBuf,
        line: usize,
        found: &'static str,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Contents of one journal file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Journal {
    /// Most recent session snapshot.
    pub session: Option<ExperimentSession>,
    /// Present once the session was finalized.
    pub record: Option<SessionRecord>,
}

/// Reads a `.rec` journal. Lines torn by a crash mid-write (truncated JSON)
/// are skipped; any other bad line is an error.
pub fn read_journal(path: &Path) -> Result<Journal, StoreError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = BufReader::new(file);
    let mut journal = Journal::default();
    let mut line = String::new();
    let mut number = 0;
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(io_err(path))?;
        if n == 0 {
            break;
        }
        number += 1;
        let text = line.trim_end();
        if text.is_empty() || is_torn(text) {
            continue;
        }
        match SpecDocument::decode(text) {
            Ok(SpecDocument::Session(s)) => journal.session = Some(*s),
            Ok(SpecDocument::Record(r)) => journal.record = Some(*r),
            Ok(other) => {
                return Err(StoreError::UnexpectedDocument {
                    path: path.to_path_buf(),
                    line: number,
                    found: match other {
                        SpecDocument::Waveform(_) => "waveform",
                        _ => "program",
                    },
                })
            }
            Err(source) => {
                return Err(StoreError::Schema {
                    path: path.to_path_buf(),
                    line: number,
                    source,
                })
            }
        }
    }
    Ok(journal)
}

fn is_torn(text: &str) -> bool {
    serde_json::from_str::<serde_json::Value>(text).is_err_and(|e| e.is_eof())
}

/// Reads the finalized record from a journal, if there is one.
pub fn read_record(path: &Path) -> Result<Option<SessionRecord>, StoreError> {
    Ok(read_journal(path)?.record)
}

fn last_byte(path: &Path) -> Result<Option<u8>, StoreError> {
    use std::io::{Read, Seek, SeekFrom};
    let mut f = File::open(path).map_err(io_err(path))?;
    if f.seek(SeekFrom::End(-1)).is_err() {
        return Ok(None);
    }
    let mut b = [0u8; 1];
    f.read_exact(&mut b).map_err(io_err(path))?;
    Ok(Some(b[0]))
}

/// Directory of session journals.
#[derive(Debug, Clone)]
pub struct SessionStore {
    dir: PathBuf,
}

impl SessionStore {
    /// Creates the directory if needed and checks it is writable.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let probe = dir.join(".write-probe");
        File::create(&probe)
            .and_then(|mut f| f.write_all(b"ok"))
            .map_err(io_err(&dir))?;
        let _ = fs::remove_file(&probe);
        Ok(SessionStore { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, session_id: &str) -> PathBuf {
        self.dir.join(format!("{session_id}.{RECORD_EXTENSION}"))
    }

    fn append(&self, session_id: &str, doc: &SpecDocument) -> Result<(), StoreError> {
        let path = self.path_for(session_id);
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io_err(&path))?;
        let mut line = String::new();
        // Keep a line torn by an earlier crash separate from this one.
        let len = file.metadata().map_err(io_err(&path))?.len();
        if len > 0 && last_byte(&path)? != Some(b'\n') {
            line.push('\n');
        }
        line.push_str(&doc.encode());
        line.push('\n');
        file.write_all(line.as_bytes()).map_err(io_err(&path))?;
        file.sync_data().map_err(io_err(&path))
    }

    /// Appends a snapshot of `session` to its journal.
    pub fn save_session(&self, session: &ExperimentSession) -> Result<(), StoreError> {
        self.append(
            session.session_id(),
            &SpecDocument::Session(Box::new(session.clone())),
        )
    }

    /// Appends the final record. Written once per session.
    pub fn save_record(&self, record: &SessionRecord) -> Result<(), StoreError> {
        self.append(&record.session_id, &SpecDocument::Record(Box::new(record.clone())))
    }

    /// Every journal in the directory, sorted by file name.
    pub fn load_all(&self) -> Result<Vec<Journal>, StoreError> {
        let mut paths: Vec<PathBuf> = fs::read_dir(&self.dir)
            .map_err(io_err(&self.dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == RECORD_EXTENSION))
            .collect();
        paths.sort();
        paths.iter().map(|p| read_journal(p)).collect()
    }

    /// Finalized records only.
    pub fn records(&self) -> Result<Vec<SessionRecord>, StoreError> {
        Ok(self
            .load_all()?
            .into_iter()
            .filter_map(|j| j.record)
            .collect())
    }
}
