//! Subcommand implementations and the plumbing they share.

mod analyze;
mod fixtures;
mod profile;
mod run;
mod serve;

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::ValueEnum;
use sca_core::gateway::{HttpProvider, ProviderProfile, DEFAULT_MODEL};
use sca_core::profile::{ProfileError, Strategy};
use sca_core::time::Timestamper;
use url::Url;

use crate::config::Settings;
use crate::mock::MockScript;
use crate::{CliError, Command};

pub use analyze::AnalyzeArgs;
pub use fixtures::{write_fixtures, FixturesArgs};
pub use profile::ProfileArgs;
pub use run::RunArgs;
pub use serve::ServeArgs;

pub async fn dispatch(command: Command, settings: &Settings, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Profile(args) => profile::execute(args, settings, out, err).await,
        Command::Run(args) => run::execute(args, settings, out, err).await,
        Command::Analyze(args) => analyze::execute(args, out),
        Command::Serve(args) => serve::execute(args, settings, out).await,
        Command::Fixtures(args) => fixtures::execute(args, out),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Direct,
    SelfAsk,
    SearchRag,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Direct => Strategy::Direct,
            StrategyArg::SelfAsk => Strategy::SelfAsk,
            StrategyArg::SearchRag => Strategy::SearchRag,
        }
    }
}

/// Mock runs write a constant timestamp so their artifacts are reproducible.
pub(crate) fn clock_for(mock: Option<MockScript>) -> Timestamper {
    if mock.is_some() {
        Timestamper::frozen_epoch()
    } else {
        Timestamper::Wall
    }
}

pub(crate) fn model_id(flag: Option<String>, settings: &Settings, mock: Option<MockScript>) -> String {
    flag.or_else(|| settings.get("model").map(str::to_string)).unwrap_or_else(|| {
        if mock.is_some() {
            "mock".to_string()
        } else {
            DEFAULT_MODEL.to_string()
        }
    })
}

pub(crate) fn dir_setting(flag: Option<PathBuf>, settings: &Settings, key: &str, default: &str) -> PathBuf {
    flag.or_else(|| settings.get(key).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from(default))
}

pub(crate) fn http_provider(settings: &Settings) -> Result<Arc<HttpProvider>, CliError> {
    let endpoint = settings.get("endpoint").ok_or_else(|| {
        CliError::Usage("no model endpoint configured; set endpoint in the config file or SCA_ENDPOINT, or pass --mock".into())
    })?;
    let endpoint = Url::parse(endpoint).map_err(|e| CliError::Usage(format!("endpoint {endpoint:?}: {e}")))?;
    let mut profile = ProviderProfile::new(endpoint);
    if let Some(var) = settings.get("api_key_env") {
        profile.api_key_env = Some(var.to_string());
    }
    if let Some(model) = settings.get("embedding_model") {
        profile.embedding_model = model.to_string();
    }
    profile.requests_per_minute = settings.pick_or(None, "requests_per_minute", profile.requests_per_minute)?;
    profile.accepts_images = settings.pick_or(None, "accepts_images", profile.accepts_images)?;
    HttpProvider::new(profile).map(Arc::new).map_err(|e| CliError::Usage(e.to_string()))
}

pub(crate) fn profile_error(e: ProfileError) -> CliError {
    match e {
        ProfileError::InvalidFactors(_) | ProfileError::InvalidArgument(_) => CliError::Usage(e.to_string()),
        other => CliError::Runtime(other.to_string()),
    }
}

pub(crate) fn write_file(path: &std::path::Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Runtime(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}
