//! Profile cache. One directory per tribe, one subdirectory per
//! `<strategy>-<model>` variant holding:
//!
//! * `profile.txt`: the profile body, verbatim.
//! * `manifest.json`: strategy, sources, model configuration, timestamps, prompt.
//! * `trace.json`: the self-ask trace, for self-ask profiles only.

use std::collections::HashMap;
use std::fs;
use std::future::Future;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CulturalProfile, ProfileError, ProfileWarning, SelfAskTrace, Strategy};
use crate::experiment::Prompt;
use crate::gateway::ModelConfig;
use crate::knowledge::SourceLink;

pub const PROFILE_FORMAT: &str = "sca-profile/1";

/// Lowercase, alphanumeric runs joined by single hyphens.
pub fn slugify(text: &str) -> String {
    let mut out = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            out.extend(c.to_lowercase());
        } else if !out.is_empty() && !out.ends_with('-') {
            out.push('-');
        }
    }
    while out.ends_with('-') {
        out.pop();
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    format: String,
    tribe: String,
    strategy: Strategy,
    sources: Vec<SourceLink>,
    model_config: ModelConfig,
    created_at: DateTime<Utc>,
    warnings: Vec<ProfileWarning>,
    prompt: Prompt,
    body_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSummary {
    /// `<tribe-slug>/<variant>`, accepted by [`ProfileStore::resolve`].
    pub id: String,
    pub tribe: String,
    pub strategy: Strategy,
    pub model_id: String,
    pub created_at: DateTime<Utc>,
    pub sources: usize,
    pub words: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredProfile {
    pub id: String,
    pub profile: CulturalProfile,
    pub trace: Option<SelfAskTrace>,
}

#[derive(Debug, Default)]
pub struct ProfileStore {
    root: PathBuf,
    locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
}

impl ProfileStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            locks: Mutex::default(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn id_for(tribe: &str, strategy: Strategy, model_id: &str) -> Result<String, ProfileError> {
        let tribe_slug = slugify(tribe);
        let model_slug = slugify(model_id);
        if tribe_slug.is_empty() || model_slug.is_empty() {
            return Err(ProfileError::InvalidArgument(format!(
                "cannot derive a profile id from tribe {tribe:?} and model {model_id:?}"
            )));
        }
        Ok(format!("{tribe_slug}/{}-{model_slug}", strategy.as_str()))
    }

    pub fn save(&self, profile: &CulturalProfile, trace: Option<&SelfAskTrace>) -> Result<String, ProfileError> {
        let id = Self::id_for(profile.tribe(), profile.strategy(), profile.model_config().model_id())?;
        let dir = self.root.join(&id);
        fs::create_dir_all(&dir)?;
        let manifest = Manifest {
            format: PROFILE_FORMAT.to_string(),
            tribe: profile.tribe().to_string(),
            strategy: profile.strategy(),
            sources: profile.sources().to_vec(),
            model_config: profile.model_config().clone(),
            created_at: profile.created_at(),
            warnings: profile.warnings().to_vec(),
            prompt: profile.prompt().clone(),
            body_sha256: hex::encode(Sha256::digest(profile.body().as_bytes())),
        };
        let trace_path = dir.join("trace.json");
        match trace {
            Some(t) => fs::write(&trace_path, serde_json::to_string_pretty(t)? + "\n")?,
            None if trace_path.exists() => fs::remove_file(&trace_path)?,
            None => {}
        }
        fs::write(dir.join("profile.txt"), profile.body())?;
        let tmp = dir.join(".manifest.json.tmp");
        fs::write(&tmp, serde_json::to_string_pretty(&manifest)? + "\n")?;
        fs::rename(tmp, dir.join("manifest.json"))?;
        Ok(id)
    }

    fn load_dir(&self, id: &str) -> Result<StoredProfile, ProfileError> {
        let dir = self.root.join(id);
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        if manifest.format != PROFILE_FORMAT {
            return Err(ProfileError::Storage(format!(
                "{id}: unsupported format {:?} (expected {PROFILE_FORMAT})",
                manifest.format
            )));
        }
        let body = fs::read_to_string(dir.join("profile.txt"))?;
        if hex::encode(Sha256::digest(body.as_bytes())) != manifest.body_sha256 {
            return Err(ProfileError::Storage(format!("{id}: profile.txt does not match its manifest")));
        }
        let trace_path = dir.join("trace.json");
        let trace = if trace_path.exists() {
            Some(serde_json::from_str(&fs::read_to_string(trace_path)?)?)
        } else {
            None
        };
        let profile = CulturalProfile::new(
            manifest.tribe,
            body,
            manifest.strategy,
            manifest.sources,
            manifest.model_config,
            manifest.created_at,
            manifest.warnings,
            manifest.prompt,
        )?;
        Ok(StoredProfile { id: id.to_string(), profile, trace })
    }

    pub fn load(&self, tribe: &str, strategy: Strategy, model_id: &str) -> Result<Option<StoredProfile>, ProfileError> {
        let id = Self::id_for(tribe, strategy, model_id)?;
        if !self.root.join(&id).join("manifest.json").exists() {
            return Ok(None);
        }
        self.load_dir(&id).map(Some)
    }

    fn variants(&self, tribe_slug: &str) -> Result<Vec<String>, ProfileError> {
        let dir = self.root.join(tribe_slug);
        if !dir.is_dir() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for entry in fs::read_dir(dir)? {
            let entry = entry?;
            if entry.path().join("manifest.json").is_file() {
                if let Some(name) = entry.file_name().to_str() {
                    out.push(format!("{tribe_slug}/{name}"));
                }
            }
        }
        out.sort();
        Ok(out)
    }

    /// Accepts `<tribe>` (newest variant wins, ties by id) or `<tribe>/<variant>`.
    pub fn resolve(&self, id: &str) -> Result<StoredProfile, ProfileError> {
        let unknown = || ProfileError::UnknownProfile(id.to_string());
        let (tribe, variant) = match id.split_once('/') {
            Some((t, v)) => (t, Some(v)),
            None => (id, None),
        };
        let tribe_slug = slugify(tribe);
        if tribe_slug.is_empty() {
            return Err(unknown());
        }
        match variant {
            Some(v) => {
                if v.is_empty() || v.contains(['/', '\\']) || v.starts_with('.') {
                    return Err(unknown());
                }
                let id = format!("{tribe_slug}/{v}");
                if !self.root.join(&id).join("manifest.json").is_file() {
                    return Err(unknown());
                }
                self.load_dir(&id)
            }
            None => {
                let mut best: Option<StoredProfile> = None;
                for vid in self.variants(&tribe_slug)? {
                    let candidate = self.load_dir(&vid)?;
                    if best.as_ref().is_none_or(|b| candidate.profile.created_at() > b.profile.created_at()) {
                        best = Some(candidate);
                    }
                }
                best.ok_or_else(unknown)
            }
        }
    }

    pub fn list(&self) -> Result<Vec<ProfileSummary>, ProfileError> {
        if !self.root.is_dir() {
            return Ok(Vec::new());
        }
        let mut tribes: Vec<String> = fs::read_dir(&self.root)?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_dir())
            .filter_map(|e| e.file_name().to_str().map(str::to_string))
            .filter(|n| !n.starts_with('.'))
            .collect();
        tribes.sort();
        let mut out = Vec::new();
        for tribe in tribes {
            for id in self.variants(&tribe)? {
                let stored = self.load_dir(&id)?;
                let p = &stored.profile;
                out.push(ProfileSummary {
                    id,
                    tribe: p.tribe().to_string(),
                    strategy: p.strategy(),
                    model_id: p.model_config().model_id().to_string(),
                    created_at: p.created_at(),
                    sources: p.sources().len(),
                    words: p.body().split_whitespace().count(),
                });
            }
        }
        Ok(out)
    }

    fn key_lock(&self, id: &str) -> Arc<tokio::sync::Mutex<()>> {
        self.locks
            .lock()
            .unwrap()
            .entry(id.to_string())
            .or_default()
            .clone()
    }

    /// Returns the cached profile for the key, generating and saving it when
    /// absent or when `regenerate` is set. Calls for one key are serialized.
    pub async fn get_or_generate<F, Fut>(
        &self,
        tribe: &str,
        strategy: Strategy,
        model_id: &str,
        regenerate: bool,
        generate: F,
    ) -> Result<StoredProfile, ProfileError>
    where
        F: FnOnce() -> Fut,
        Fut: Future<Output = Result<(CulturalProfile, Option<SelfAskTrace>), ProfileError>>,
    {
        let id = Self::id_for(tribe, strategy, model_id)?;
        let lock = self.key_lock(&id);
        let _guard = lock.lock().await;
        if !regenerate {
            if let Some(found) = self.load(tribe, strategy, model_id)? {
                return Ok(found);
            }
        }
        let (profile, trace) = generate().await?;
        if profile.tribe() != tribe || profile.strategy() != strategy || profile.model_config().model_id() != model_id {
            return Err(ProfileError::InvalidArgument(format!(
                "generated profile does not match the requested key {id}"
            )));
        }
        let saved = self.save(&profile, trace.as_ref())?;
        Ok(StoredProfile { id: saved, profile, trace })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::Timestamper;

    #[test]
    fn slugs() {
        assert_eq!(slugify("Aché"), "aché");
        assert_eq!(slugify("  Machiguenga (Peru) "), "machiguenga-peru");
        assert_eq!(slugify("gpt-3.5-turbo"), "gpt-3-5-turbo");
        assert_eq!(slugify("--"), "");
    }

    fn profile(tribe: &str, body: &str) -> CulturalProfile {
        CulturalProfile::new(
            tribe.into(),
            body.into(),
            Strategy::Direct,
            vec![],
            ModelConfig::profile("m1"),
            Timestamper::frozen_epoch().now(),
            vec![],
            Prompt { system: "s".into(), user: "u".into() },
        )
        .unwrap()
    }

    #[test]
    fn save_resolve_list() {
        let dir = tempfile::tempdir().unwrap();
        let store = ProfileStore::new(dir.path());
        let id = store.save(&profile("Orma", "Pastoralists."), None).unwrap();
        assert_eq!(id, "orma/direct-m1");
        assert_eq!(store.resolve("orma").unwrap().profile.body(), "Pastoralists.");
        assert_eq!(store.resolve("Orma/direct-m1").unwrap().id, id);
        assert!(matches!(store.resolve("hadza"), Err(ProfileError::UnknownProfile(_))));
        assert!(matches!(store.resolve("orma/../orma"), Err(ProfileError::UnknownProfile(_))));
        let list = store.list().unwrap();
        assert_eq!(list.len(), 1);
        assert_eq!(list[0].words, 1);
    }

    #[test]
    fn tampered_body_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let store = ProfileStore::new(dir.path());
        let id = store.save(&profile("Orma", "Pastoralists."), None).unwrap();
        fs::write(dir.path().join(&id).join("profile.txt"), "edited").unwrap();
        assert!(matches!(store.resolve(&id), Err(ProfileError::Storage(_))));
    }

    #[tokio::test]
    async fn same_key_generates_once() {
        let dir = tempfile::tempdir().unwrap();
        let store = Arc::new(ProfileStore::new(dir.path()));
        let calls = Arc::new(std::sync::atomic::AtomicUsize::new(0));
        let mut handles = Vec::new();
        for _ in 0..8 {
            let store = store.clone();
            let calls = calls.clone();
            handles.push(tokio::spawn(async move {
                store
                    .get_or_generate("Orma", Strategy::Direct, "m1", false, || async {
                        calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                        tokio::task::yield_now().await;
                        Ok((profile("Orma", "P"), None))
                    })
                    .await
                    .unwrap()
            }));
        }
        for h in handles {
            h.await.unwrap();
        }
        assert_eq!(calls.load(std::sync::atomic::Ordering::SeqCst), 1);
    }
}
