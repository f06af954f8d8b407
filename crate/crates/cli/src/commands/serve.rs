use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::Args;
use sca_core::gateway::ChatModel;
use sca_service::demo::{demo_describer, seed_demo_profile};
use sca_service::{EndowmentService, ServiceConfig};

use super::{clock_for, dir_setting, http_provider, model_id};
use crate::config::Settings;
use crate::mock::MockScript;
use crate::CliError;

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Offline chat script; demo-script replays the bundled endowment session.
    #[arg(long)]
    pub mock: Option<MockScript>,
    #[arg(long)]
    pub model: Option<String>,
    /// Directory for sessions, records and uploaded images.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Profile store directory.
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// Require `Authorization: Bearer TOKEN` on every route but /health.
    #[arg(long)]
    pub token: Option<String>,
    /// Seed for sessions created without one.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub async fn execute(args: ServeArgs, settings: &Settings, out: &mut dyn Write) -> Result<(), CliError> {
    let clock = clock_for(args.mock);
    let profile_dir = dir_setting(args.profiles.clone(), settings, "profiles_dir", "profiles");
    let (chat, describer): (Arc<dyn ChatModel>, Arc<dyn ChatModel>) = match args.mock {
        Some(script) => {
            if script == MockScript::DemoScript {
                let id = seed_demo_profile(&profile_dir, clock).map_err(CliError::runtime)?;
                tracing::info!(profile = %id, "demo profile ready");
            }
            (Arc::new(script.model()), Arc::new(demo_describer()))
        }
        None => {
            let provider = http_provider(settings)?;
            (provider.clone(), provider)
        }
    };
    let model = model_id(args.model.clone(), settings, args.mock);
    let config = ServiceConfig {
        data_dir: dir_setting(args.data.clone(), settings, "data_dir", "data"),
        profile_dir,
        describe_model_id: settings.get("describe_model").map(str::to_string).unwrap_or_else(|| model.clone()),
        model_id: model,
        default_seed: settings.pick_or(args.seed, "seed", 0u64)?,
        clock,
        token: args.token.clone().or_else(|| settings.get("token").map(str::to_string)),
    };
    let service = Arc::new(EndowmentService::open(config, chat, Some(describer)).map_err(CliError::runtime)?);

    let listener = tokio::net::TcpListener::bind((args.host.as_str(), args.port))
        .await
        .map_err(|e| CliError::Runtime(format!("cannot listen on {}:{}: {e}", args.host, args.port)))?;
    let addr = listener.local_addr()?;
    writeln!(out, "listening on http://{addr}")?;
    out.flush()?;
    sca_service::serve(listener, service, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
    .map_err(CliError::runtime)
}
