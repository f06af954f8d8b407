use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, ValueEnum};
use sca_core::experiment::{
    load_records, run_sweep, tabulate, Decision, Game, GameRole, GameSpec, Money, RunManifest, SweepOptions, TrialRecord,
    DEFAULT_ENDOWMENT, DEFAULT_OFFER_LEVELS, DEFAULT_REPETITIONS, DEFAULT_RETRIES, RUN_FORMAT,
};
use sca_core::gateway::ChatModel;
use sca_core::profile::{slugify, ProfileStore, Strategy};
use sca_core::ModelConfig;
use sha2::{Digest, Sha256};

use super::{clock_for, dir_setting, http_provider, model_id, profile_error, write_file, StrategyArg};
use crate::config::Settings;
use crate::mock::MockScript;
use crate::CliError;

pub const BENCHMARK_LABEL: &str = "Benchmark";
pub const RECORDS_FILE: &str = "records.jsonl";
pub const TABLE_FILE: &str = "table.tbl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GameArg {
    Dictator,
    Ultimatum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RoleArg {
    Dictator,
    Proposer,
    Responder,
}

fn parse_money(s: &str) -> Result<Money, String> {
    Money::parse(s).ok_or_else(|| format!("{s:?} is not an amount like 10 or 7.50"))
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    pub game: GameArg,
    /// Defaults to dictator in the dictator game; required for ultimatum.
    #[arg(long, value_enum)]
    pub role: Option<RoleArg>,
    /// Comma-separated tribes with stored profiles.
    #[arg(long, value_delimiter = ',', required_unless_present = "benchmark")]
    pub tribes: Vec<String>,
    /// Also run the agent without a profile.
    #[arg(long)]
    pub benchmark: bool,
    /// Which stored profile variant to condition on.
    #[arg(long, value_enum, default_value_t = StrategyArg::Direct)]
    pub strategy: StrategyArg,
    #[arg(long)]
    pub mock: Option<MockScript>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Continue the records already in the run directory.
    #[arg(long)]
    pub resume: bool,
    #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
    pub repetitions: u32,
    /// Comma-separated offer percentages.
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<u32>>,
    /// Amount to split, in dollars.
    #[arg(long, value_parser = parse_money)]
    pub endowment: Option<Money>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    /// Extra attempts per trial after a failed or unparseable reply.
    #[arg(long, default_value_t = DEFAULT_RETRIES)]
    pub retries: u32,
    /// Profile store directory.
    #[arg(long)]
    pub store: Option<PathBuf>,
}

struct Agent {
    label: String,
    profile: Option<String>,
}

fn game_spec(args: &RunArgs) -> Result<GameSpec, CliError> {
    let game = match args.game {
        GameArg::Dictator => Game::Dictator,
        GameArg::Ultimatum => Game::Ultimatum,
    };
    let role = match (args.game, args.role) {
        (GameArg::Dictator, None) => GameRole::Dictator,
        (GameArg::Ultimatum, None) => {
            return Err(CliError::Usage("--role proposer or --role responder is required for the ultimatum game".into()))
        }
        (_, Some(RoleArg::Dictator)) => GameRole::Dictator,
        (_, Some(RoleArg::Proposer)) => GameRole::Proposer,
        (_, Some(RoleArg::Responder)) => GameRole::Responder,
    };
    GameSpec::new(
        game,
        role,
        args.endowment.unwrap_or(DEFAULT_ENDOWMENT),
        args.levels.clone().unwrap_or_else(|| DEFAULT_OFFER_LEVELS.to_vec()),
        args.repetitions,
    )
    .map_err(|e| CliError::Usage(e.to_string()))
}

fn agents(args: &RunArgs, store: &ProfileStore) -> Result<Vec<Agent>, CliError> {
    let strategy = Strategy::from(args.strategy);
    let summaries = store.list().map_err(profile_error)?;
    let mut agents = Vec::new();
    for name in &args.tribes {
        let name = name.trim();
        if name.is_empty() {
            return Err(CliError::Usage("--tribes contains an empty name".into()));
        }
        let id = if name.contains('/') {
            name.to_string()
        } else {
            let slug = slugify(name);
            summaries
                .iter()
                .filter(|s| slugify(&s.tribe) == slug && s.strategy == strategy)
                .max_by(|a, b| a.created_at.cmp(&b.created_at).then(a.id.cmp(&b.id)))
                .map(|s| s.id.clone())
                .ok_or_else(|| {
                    CliError::Runtime(format!(
                        "no {} profile for {name} in {}; build one with `sca profile --tribe {name} --strategy {}`",
                        strategy.as_str(),
                        store.root().display(),
                        strategy.as_str().replace('_', "-"),
                    ))
                })?
        };
        let stored = store.resolve(&id).map_err(profile_error)?;
        if agents.iter().any(|a: &Agent| a.label == stored.profile.tribe()) {
            return Err(CliError::Usage(format!("{name} is listed twice")));
        }
        agents.push(Agent { label: stored.profile.tribe().to_string(), profile: Some(stored.profile.body().to_string()) });
    }
    if args.benchmark {
        agents.push(Agent { label: BENCHMARK_LABEL.to_string(), profile: None });
    }
    Ok(agents)
}

/// Per offer level: accepts, rejects and invalid trials.
fn counts_tsv(records: &[TrialRecord], levels: &[u32]) -> String {
    let mut out = String::from("offer_pct\taccept\treject\tinvalid\n");
    for &level in levels {
        let at: Vec<&TrialRecord> = records.iter().filter(|r| r.offer_pct == level).collect();
        let decided = |d: Decision| at.iter().filter(|r| !r.invalid && r.parsed.as_ref().map(|p| p.decision) == Some(d)).count();
        let invalid = at.iter().filter(|r| r.invalid).count();
        let _ = writeln!(out, "{level}\t{}\t{}\t{invalid}", decided(Decision::Accept), decided(Decision::Reject));
    }
    out
}

pub async fn execute(args: RunArgs, settings: &Settings, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let spec = game_spec(&args)?;
    let store = ProfileStore::new(dir_setting(args.store.clone(), settings, "profiles_dir", "profiles"));
    let agents = agents(&args, &store)?;
    let run_seed = settings.pick_or(args.seed, "seed", 0u64)?;
    let parallelism = settings.pick_or(args.parallelism, "parallelism", 4usize)?;
    if parallelism == 0 {
        return Err(CliError::Usage("parallelism must be at least 1".into()));
    }
    let chat: Arc<dyn ChatModel> = match args.mock {
        Some(script) => Arc::new(script.model()),
        None => http_provider(settings)?,
    };
    let config = ModelConfig::experiment(model_id(args.model.clone(), settings, args.mock));
    let clock = clock_for(args.mock);

    let records_path = args.out.join(RECORDS_FILE);
    if records_path.exists() && !args.resume {
        return Err(CliError::Runtime(format!(
            "{} already exists; pass --resume to continue it or choose another --out",
            records_path.display()
        )));
    }
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::Runtime(format!("{}: {e}", args.out.display())))?;

    let options = SweepOptions {
        run_seed,
        parallelism,
        retries: args.retries,
        clock,
        records_path: Some(records_path.clone()),
    };
    let mut finished = Vec::new();
    let mut aborted = Vec::new();
    for agent in &agents {
        match run_sweep(&spec, &agent.label, agent.profile.as_deref(), chat.as_ref(), &config, &options).await {
            Ok(records) => {
                let slug = slugify(&agent.label);
                let manifest = RunManifest {
                    format: RUN_FORMAT.to_string(),
                    tribe: agent.label.clone(),
                    spec: spec.clone(),
                    profile_digest: agent.profile.as_ref().map(|p| hex::encode(Sha256::digest(p.as_bytes()))),
                    model_config: config.clone(),
                    run_seed,
                    created_at: clock.now(),
                };
                let manifest = serde_json::to_string_pretty(&manifest).map_err(CliError::runtime)? + "\n";
                write_file(&args.out.join("manifests").join(format!("{slug}.json")), manifest.as_bytes())?;
                write_file(
                    &args.out.join("counts").join(format!("{slug}.tsv")),
                    counts_tsv(&records, spec.offer_levels()).as_bytes(),
                )?;
                let invalid = records.iter().filter(|r| r.invalid).count();
                writeln!(out, "{}: {} trials, {invalid} invalid", agent.label, records.len())?;
                finished.push(agent.label.clone());
            }
            Err(e) => {
                writeln!(err, "{}: aborted: {e}", agent.label)?;
                aborted.push((agent.label.clone(), e.to_string()));
            }
        }
    }

    if finished.len() >= 2 {
        let records = load_records(&records_path).map_err(CliError::runtime)?;
        let groups: Vec<&str> = finished.iter().map(String::as_str).collect();
        let table = tabulate(&records, &groups).map_err(CliError::runtime)?;
        write_file(&args.out.join(TABLE_FILE), table.render().as_bytes())?;
        writeln!(out, "table: {}", args.out.join(TABLE_FILE).display())?;
    }
    if !aborted.is_empty() {
        return Err(CliError::Runtime(format!(
            "{} of {} agents aborted: {}",
            aborted.len(),
            agents.len(),
            aborted.iter().map(|(label, _)| label.as_str()).collect::<Vec<_>>().join(", ")
        )));
    }
    Ok(())
}
