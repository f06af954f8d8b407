use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    build_prompt, parse_decision, prompt_hash, ExperimentError, Game, GameRole, GameSpec, Money,
    ParsedResponse,
};
use crate::gateway::{ChatModel, ChatRequest, ModelConfig};
use crate::time::Timestamper;

pub const DEFAULT_RETRIES: u32 = 3;
pub const RUN_FORMAT: &str = "sca-run/1";

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub run_seed: u64,
    pub parallelism: usize,
    /// Extra attempts after an unparseable response or a failed call.
    pub retries: u32,
    pub clock: Timestamper,
    /// Append-only JSONL file; existing records for the same tribe and role are reused.
    pub records_path: Option<PathBuf>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            run_seed: 0,
            parallelism: 4,
            retries: DEFAULT_RETRIES,
            clock: Timestamper::Wall,
            records_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub tribe: String,
    pub game: Game,
    pub role: GameRole,
    pub endowment: Money,
    pub offer_pct: u32,
    pub repetition: u32,
    pub attempts: u32,
    pub invalid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parsed: Option<ParsedResponse>,
    /// Last raw reply or error when the trial is invalid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    #[serde(default)]
    pub truncated: bool,
    pub model_config: ModelConfig,
    pub seed: u64,
    pub prompt_hash: String,
    pub timestamp: DateTime<Utc>,
}

/// Provenance written next to a run's records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub tribe: String,
    pub spec: GameSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_digest: Option<String>,
    pub model_config: ModelConfig,
    pub run_seed: u64,
    pub created_at: DateTime<Utc>,
}

/// Sampling seed for one attempt; independent of the tribe so that identical
/// scripted agents see identical draws.
pub fn trial_seed(run_seed: u64, offer_pct: u32, repetition: u32, attempt: u32) -> u64 {
    let mut h = Sha256::new();
    h.update(run_seed.to_le_bytes());
    h.update(offer_pct.to_le_bytes());
    h.update(repetition.to_le_bytes());
    h.update(attempt.to_le_bytes());
    let digest = h.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(word) >> 1
}

pub fn load_records(path: &Path) -> Result<Vec<TrialRecord>, ExperimentError> {
    Ok(read_records(path)?.0)
}

/// Parsed records plus whether the file ends in a torn (unterminated, unparseable) line.
fn read_records(path: &Path) -> Result<(Vec<TrialRecord>, bool), ExperimentError> {
    let content = match std::fs::read_to_string(path) {
        Ok(c) => c,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((Vec::new(), false)),
        Err(e) => return Err(e.into()),
    };
    let mut records = Vec::new();
    let lines: Vec<&str> = content.split_inclusive('\n').collect();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(r) => records.push(r),
            Err(_) if i + 1 == lines.len() && !line.ends_with('\n') => return Ok((records, true)),
            Err(e) => {
                return Err(ExperimentError::Storage(format!("{}:{}: {e}", path.display(), i + 1)))
            }
        }
    }
    Ok((records, false))
}

fn write_lines(path: &Path, records: &[TrialRecord], append: bool) -> Result<(), ExperimentError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(append)
        .write(true)
        .truncate(!append)
        .open(path)?;
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r).map_err(|e| ExperimentError::Storage(e.to_string()))?;
        buf.push(b'\n');
    }
    file.write_all(&buf)?;
    file.flush()?;
    Ok(())
}

/// Runs every (offer level, repetition) trial of `spec` for one agent.
///
/// Records come back ordered by offer level then repetition whatever the
/// parallelism. With `records_path` set, each finished level is appended to
/// the file and trials already present there are not run again.
pub async fn run_sweep(
    spec: &GameSpec,
    tribe: &str,
    profile: Option<&str>,
    model: &dyn ChatModel,
    config: &ModelConfig,
    options: &SweepOptions,
) -> Result<Vec<TrialRecord>, ExperimentError> {
    if options.parallelism == 0 {
        return Err(ExperimentError::InvalidSpec("parallelism must be at least 1".into()));
    }
    let mut done: HashMap<(u32, u32), TrialRecord> = HashMap::new();
    if let Some(path) = &options.records_path {
        let (existing, torn) = read_records(path)?;
        if torn {
            tracing::warn!(path = %path.display(), "dropping a partially written record");
            write_lines(path, &existing, false)?;
        }
        for r in existing {
            if r.tribe != tribe || r.game != spec.game() || r.role != spec.role() {
                continue;
            }
            if r.endowment != spec.endowment() {
                return Err(ExperimentError::InvalidSpec(format!(
                    "existing records for {tribe} use endowment {} instead of {}",
                    r.endowment,
                    spec.endowment()
                )));
            }
            done.insert((r.offer_pct, r.repetition), r);
        }
        if !done.is_empty() {
            tracing::info!(tribe, resumed = done.len(), "resuming sweep");
        }
    }

    let mut out = Vec::with_capacity(spec.offer_levels().len() * spec.repetitions() as usize);
    for &pct in spec.offer_levels() {
        let prompt = build_prompt(spec, profile, pct)?;
        let pending: Vec<u32> = (1..=spec.repetitions())
            .filter(|rep| !done.contains_key(&(pct, *rep)))
            .collect();
        let mut fresh: Vec<TrialRecord> = stream::iter(pending)
            .map(|rep| run_trial(spec, tribe, &prompt, pct, rep, model, config, options))
            .buffer_unordered(options.parallelism)
            .collect()
            .await;
        fresh.sort_by_key(|r| r.repetition);

        let mut level: Vec<TrialRecord> = (1..=spec.repetitions())
            .filter_map(|rep| done.remove(&(pct, rep)))
            .chain(fresh.iter().cloned())
            .collect();
        level.sort_by_key(|r| r.repetition);
        if level.iter().all(|r| r.invalid) {
            let last_error = level
                .iter()
                .rev()
                .find_map(|r| r.failure.clone())
                .unwrap_or_default();
            return Err(ExperimentError::AllTrialsFailed { offer_pct: pct, last_error });
        }
        if let Some(path) = &options.records_path {
            write_lines(path, &fresh, true)?;
        }
        let invalid = level.iter().filter(|r| r.invalid).count();
        tracing::info!(tribe, offer_pct = pct, trials = level.len(), invalid, "offer level done");
        out.extend(level);
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
async fn run_trial(
    spec: &GameSpec,
    tribe: &str,
    prompt: &super::Prompt,
    offer_pct: u32,
    repetition: u32,
    model: &dyn ChatModel,
    config: &ModelConfig,
    options: &SweepOptions,
) -> TrialRecord {
    let request = ChatRequest::single(prompt.system.clone(), prompt.user.clone());
    let mut failure = None;
    let mut attempt = 0;
    let mut seed = 0;
    let mut parsed = None;
    let mut truncated = false;
    while attempt <= options.retries {
        seed = trial_seed(options.run_seed, offer_pct, repetition, attempt);
        attempt += 1;
        match model.complete_chat(&request, &config.clone().with_seed(Some(seed))).await {
            Ok(response) => {
                truncated = response.usage.completion_tokens >= u64::from(config.max_tokens());
                match parse_decision(&response.text) {
                    Ok(p) => {
                        parsed = Some(p);
                        failure = None;
                        break;
                    }
                    Err(_) => failure = Some(response.text),
                }
            }
            Err(e) => failure = Some(e.to_string()),
        }
    }
    TrialRecord {
        tribe: tribe.to_string(),
        game: spec.game(),
        role: spec.role(),
        endowment: spec.endowment(),
        offer_pct,
        repetition,
        attempts: attempt,
        invalid: parsed.is_none(),
        parsed,
        failure,
        truncated,
        model_config: config.clone(),
        seed,
        prompt_hash: prompt_hash(prompt),
        timestamp: options.clock.now(),
    }
}
