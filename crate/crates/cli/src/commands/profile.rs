use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::Args;
use sca_core::gateway::{ChatModel, Embedder, HashEmbedder};
use sca_core::knowledge::{
    build_knowledge_base, FixtureFetcher, FixtureSearch, GoogleSearch, HttpFetcher, KnowledgeBase,
    KnowledgeBaseOptions, PageFetcher, SearchBackend, DEFAULT_FETCH_TIMEOUT,
};
use sca_core::profile::{
    generate_profile_direct, generate_profile_rag, generate_profile_self_ask, slugify, ProfileStore,
    ProfileWarning, RelevantFactors, SelfAskTools, Strategy, DEFAULT_MAX_ITERATIONS,
};
use sca_core::ModelConfig;

use super::{clock_for, dir_setting, http_provider, model_id, profile_error, StrategyArg};
use crate::config::Settings;
use crate::mock::MockScript;
use crate::CliError;

pub const MOCK_EMBEDDING_DIMENSION: usize = 256;

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Society to describe, e.g. Hadza.
    #[arg(long)]
    pub tribe: String,
    #[arg(long, value_enum, default_value_t = StrategyArg::Direct)]
    pub strategy: StrategyArg,
    /// Comma-separated factors the profile must cover.
    #[arg(long, value_delimiter = ',')]
    pub factors: Option<Vec<String>>,
    /// Directory with search.tsv and pages/ used instead of live search.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    /// Offline model script (stub, always-yes, ...).
    #[arg(long)]
    pub mock: Option<MockScript>,
    #[arg(long)]
    pub model: Option<String>,
    /// Profile store directory.
    #[arg(long)]
    pub store: Option<PathBuf>,
    /// Directory holding per-tribe knowledge bases.
    #[arg(long)]
    pub knowledge_dir: Option<PathBuf>,
    /// Rebuild even when a stored profile (or knowledge base) exists.
    #[arg(long)]
    pub regenerate: bool,
    /// Model turns allowed in the self-ask loop.
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    pub max_iterations: u32,
}

struct Backends {
    chat: Arc<dyn ChatModel>,
    embedder: Arc<dyn Embedder>,
}

fn backends(mock: Option<MockScript>, settings: &Settings) -> Result<Backends, CliError> {
    Ok(match mock {
        Some(script) => Backends {
            chat: Arc::new(script.model()),
            embedder: Arc::new(HashEmbedder::new(MOCK_EMBEDDING_DIMENSION)),
        },
        None => {
            let provider = http_provider(settings)?;
            Backends { chat: provider.clone(), embedder: provider }
        }
    })
}

fn search_tools(fixtures: Option<&PathBuf>, settings: &Settings) -> Result<(Box<dyn SearchBackend>, Box<dyn PageFetcher>), CliError> {
    match fixtures {
        Some(dir) => Ok((
            Box::new(FixtureSearch::open(dir).map_err(|e| CliError::Usage(e.to_string()))?),
            Box::new(FixtureFetcher::new(dir)),
        )),
        None => {
            let (Some(key), Some(engine)) = (settings.get("google_api_key"), settings.get("google_engine_id")) else {
                return Err(CliError::Usage(
                    "web search needs google_api_key and google_engine_id settings, or pass --fixtures DIR".into(),
                ));
            };
            Ok((
                Box::new(GoogleSearch::new(key.to_string(), engine.to_string())),
                Box::new(HttpFetcher::new(DEFAULT_FETCH_TIMEOUT).map_err(CliError::runtime)?),
            ))
        }
    }
}

pub async fn execute(args: ProfileArgs, settings: &Settings, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let factors = match &args.factors {
        Some(list) => RelevantFactors::new(list.iter().map(String::as_str)).map_err(profile_error)?,
        None => RelevantFactors::default(),
    };
    if args.tribe.trim().is_empty() {
        return Err(CliError::Usage("--tribe is empty".into()));
    }
    let strategy = Strategy::from(args.strategy);
    let model = model_id(args.model.clone(), settings, args.mock);
    let config = ModelConfig::profile(model.clone());
    let clock = clock_for(args.mock);
    let store = ProfileStore::new(dir_setting(args.store.clone(), settings, "profiles_dir", "profiles"));
    let kb_root = dir_setting(args.knowledge_dir.clone(), settings, "knowledge_dir", "knowledge");
    let b = backends(args.mock, settings)?;
    let tribe = args.tribe.trim();

    let stored = store
        .get_or_generate(tribe, strategy, &model, args.regenerate, || async {
            match strategy {
                Strategy::Direct => generate_profile_direct(tribe, &factors, b.chat.as_ref(), &config, clock)
                    .await
                    .map(|p| (p, None)),
                Strategy::SelfAsk => {
                    let (search, fetcher) = search_tools(args.fixtures.as_ref(), settings)
                        .map_err(|e| sca_core::profile::ProfileError::InvalidArgument(e.to_string()))?;
                    let tools = SelfAskTools { search: search.as_ref(), fetcher: fetcher.as_ref() };
                    generate_profile_self_ask(tribe, &factors, tools, b.chat.as_ref(), &config, args.max_iterations, clock)
                        .await
                        .map(|(p, t)| (p, Some(t)))
                }
                Strategy::SearchRag => {
                    let dir = kb_root.join(slugify(tribe));
                    let kb = if dir.join("manifest.json").exists() && !args.regenerate {
                        KnowledgeBase::load(&dir)?
                    } else {
                        let (search, fetcher) = search_tools(args.fixtures.as_ref(), settings)
                            .map_err(|e| sca_core::profile::ProfileError::InvalidArgument(e.to_string()))?;
                        let kb = build_knowledge_base(
                            tribe,
                            search.as_ref(),
                            fetcher.as_ref(),
                            b.embedder.as_ref(),
                            &KnowledgeBaseOptions::default(),
                            clock,
                        )
                        .await?;
                        kb.save(&dir)?;
                        kb
                    };
                    generate_profile_rag(tribe, &factors, &kb, b.embedder.as_ref(), b.chat.as_ref(), &config, clock)
                        .await
                        .map(|p| (p, None))
                }
            }
        })
        .await
        .map_err(profile_error)?;

    for w in stored.profile.warnings() {
        match w {
            ProfileWarning::Truncated { completion_tokens, max_tokens } => writeln!(
                err,
                "warning: the profile reply used {completion_tokens} of {max_tokens} tokens and may be cut off"
            )?,
        }
    }
    writeln!(out, "profile: {}", stored.id)?;
    writeln!(out, "path: {}", store.root().join(&stored.id).join("profile.txt").display())?;
    if let Some(trace) = &stored.trace {
        writeln!(out, "follow-up questions: {}", trace.steps.len())?;
    }
    let sources = stored.profile.sources();
    if sources.is_empty() {
        writeln!(out, "sources: none")?;
    } else {
        writeln!(out, "sources:")?;
        for s in sources {
            writeln!(out, "  {}. {}", s.rank, s.url)?;
        }
    }
    Ok(())
}
