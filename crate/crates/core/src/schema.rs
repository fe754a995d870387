//! Canonical JSON encoding of every persisted or transmitted document.
//!
//! Field order is the declaration order of the Rust types and numbers use
//! the shortest decimal that round-trips, so `encode(decode(x)) == x` for any
//! document this module produced. Unknown fields are rejected and decode
//! errors carry the dotted path of the offending field.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::experiment::{ExperimentSession, SessionRecord};
use crate::synth::{StimulusProgram, WaveformSpec};

/// Version tag carried by every top-level document as `"v"`.
pub const WIRE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}: {message}")]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl SchemaError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        SchemaError {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub fn to_canonical<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string(value).expect("schema types always serialize")
}

/// Strict decode; the error path names the field that failed (`"."` for the
/// document root).
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, SchemaError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(de).map_err(|err| {
        let path = dotted(err.path());
        SchemaError::new(path, err.into_inner().to_string())
    })?;
    Ok(value)
}

/// `programs[0].id` becomes `programs.0.id`, matching validation paths.
fn dotted(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let parts: Vec<String> = path
        .iter()
        .map(|segment| match segment {
            Segment::Seq { index } => index.to_string(),
            Segment::Map { key } => key.clone(),
            Segment::Enum { variant } => variant.clone(),
            Segment::Unknown => "?".into(),
        })
        .collect();
    if parts.is_empty() {
        ".".into()
    } else {
        parts.join(".")
    }
}

/// Short content hash (first 16 hex digits of SHA-256 over the canonical
/// encoding). Identical values always share an id.
pub fn content_id<T: Serialize + ?Sized>(value: &T) -> String {
    short_digest(to_canonical(value).as_bytes())
}

fn short_digest(bytes: &[u8]) -> String {
    hex::encode(&Sha256::digest(bytes)[..8])
}

/// Any top-level document, tagged by which body key is present:
/// `{"v":1,"waveform":{..}}`, `{"v":1,"program":{..}}`,
/// `{"v":1,"session":{..}}` or `{"v":1,"record":{..}}`.
#[derive(Debug, Clone, PartialEq)]
pub enum SpecDocument {
    Waveform(WaveformSpec),
    Program(StimulusProgram),
    Session(Box<ExperimentSession>),
    Record(Box<SessionRecord>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentRepr {
    v: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    waveform: Option<WaveformSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    program: Option<StimulusProgram>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    session: Option<Box<ExperimentSession>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    record: Option<Box<SessionRecord>>,
}

impl SpecDocument {
    pub fn encode(&self) -> String {
        let mut repr = DocumentRepr {
            v: WIRE_VERSION,
            waveform: None,
            program: None,
            session: None,
            record: None,
        };
        match self {
            SpecDocument::Waveform(w) => repr.waveform = Some(*w),
            SpecDocument::Program(p) => repr.program = Some(p.clone()),
            SpecDocument::Session(s) => repr.session = Some(s.clone()),
            SpecDocument::Record(r) => repr.record = Some(r.clone()),
        }
        to_canonical(&repr)
    }

    /// Content hash of the canonical encoding; render caches key on it.
    pub fn id(&self) -> String {
        short_digest(self.encode().as_bytes())
    }

    pub fn decode(text: &str) -> Result<Self, SchemaError> {
        let repr: DocumentRepr = from_json(text)?;
        check_version(repr.v)?;
        let bodies = [
            repr.waveform.is_some(),
            repr.program.is_some(),
            repr.session.is_some(),
            repr.record.is_some(),
        ];
        if bodies.iter().filter(|&&b| b).count() != 1 {
            return Err(SchemaError::new(
                ".",
                "document must carry exactly one of waveform, program, session, record",
            ));
        }
        let doc = if let Some(w) = repr.waveform {
            SpecDocument::Waveform(w)
        } else if let Some(p) = repr.program {
            SpecDocument::Program(p)
        } else if let Some(s) = repr.session {
            s.check_invariants()
                .map_err(|e| SchemaError::new(format!("session.{}", e.path()), e.to_string()))?;
            SpecDocument::Session(s)
        } else {
            let r = repr.record.expect("one body present");
            r.check_invariants()
                .map_err(|e| SchemaError::new(format!("record.{}", e.path()), e.to_string()))?;
            SpecDocument::Record(r)
        };
        Ok(doc)
    }
}

pub fn check_version(v: u32) -> Result<(), SchemaError> {
    if v == WIRE_VERSION {
        Ok(())
    } else {
        Err(SchemaError::new(
            "v",
            format!("unsupported schema version {v} (expected {WIRE_VERSION})"),
        ))
    }
}
