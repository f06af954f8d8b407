//! Data directory layout:
//!
//! * `sessions/<id>.json`: current session state, rewritten after every change.
//! * `records/<id>.json`: the outcome record, written once when the session is decided.
//! * `images/<sha256>.<ext>`: uploaded images, content-addressed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use sca_core::gateway::ImageAttachment;

use crate::error::ServiceError;
use crate::session::{EndowmentSession, EndowmentTrialRecord, ImageRef};

#[derive(Debug, Clone)]
pub struct DataDir {
    root: PathBuf,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ServiceError> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)?;
    Ok(())
}

pub fn render_record(record: &EndowmentTrialRecord) -> Result<Vec<u8>, ServiceError> {
    Ok((serde_json::to_string_pretty(record)? + "\n").into_bytes())
}

impl DataDir {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let root = root.into();
        for sub in ["sessions", "records", "images"] {
            fs::create_dir_all(root.join(sub))?;
        }
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn session_path(&self, id: &str) -> PathBuf {
        self.root.join("sessions").join(format!("{id}.json"))
    }

    fn record_path(&self, id: &str) -> PathBuf {
        self.root.join("records").join(format!("{id}.json"))
    }

    pub fn save_session(&self, session: &EndowmentSession) -> Result<(), ServiceError> {
        let json = serde_json::to_string_pretty(session)? + "\n";
        write_atomic(&self.session_path(&session.session_id), json.as_bytes())
    }

    pub fn load_sessions(&self) -> Result<Vec<EndowmentSession>, ServiceError> {
        let mut out = Vec::new();
        for entry in fs::read_dir(self.root.join("sessions"))? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let session: EndowmentSession = serde_json::from_str(&fs::read_to_string(&path)?)
                .map_err(|e| ServiceError::Storage(format!("{}: {e}", path.display())))?;
            out.push(session);
        }
        out.sort_by(|a, b| a.session_id.cmp(&b.session_id));
        Ok(out)
    }

    /// Writes the record, refusing to replace an existing one.
    pub fn write_record(&self, record: &EndowmentTrialRecord) -> Result<(), ServiceError> {
        let bytes = render_record(record)?;
        let mut file = match fs::OpenOptions::new().write(true).create_new(true).open(self.record_path(&record.session_id)) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => return Err(ServiceError::DoubleRecord),
            Err(e) => return Err(e.into()),
        };
        file.write_all(&bytes)?;
        file.sync_all()?;
        Ok(())
    }

    pub fn read_record(&self, id: &str) -> Result<Option<Vec<u8>>, ServiceError> {
        match fs::read(self.record_path(id)) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Validates and stores an image, returning its reference.
    pub fn put_image(&self, bytes: Vec<u8>) -> Result<(ImageRef, ImageAttachment), ServiceError> {
        let attachment = ImageAttachment::from_bytes(bytes)?;
        let digest = hex::encode(Sha256::digest(attachment.bytes()));
        let path = self.root.join("images").join(format!("{digest}.{}", attachment.format().extension()));
        if !path.exists() {
            let tmp = path.with_extension("tmp");
            fs::write(&tmp, attachment.bytes())?;
            fs::rename(tmp, &path)?;
        }
        let image = ImageRef {
            digest,
            media_type: attachment.format().media_type().to_string(),
            description: None,
        };
        Ok((image, attachment))
    }

    pub fn get_image(&self, image: &ImageRef) -> Result<ImageAttachment, ServiceError> {
        if image.digest.len() != 64 || !image.digest.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(ServiceError::InvalidRequest(format!("bad image digest {:?}", image.digest)));
        }
        for ext in ["png", "jpg"] {
            let path = self.root.join("images").join(format!("{}.{ext}", image.digest));
            if path.exists() {
                return Ok(ImageAttachment::from_bytes(fs::read(path)?)?);
            }
        }
        Err(ServiceError::InvalidRequest(format!("no stored image {}", image.digest)))
    }
}
