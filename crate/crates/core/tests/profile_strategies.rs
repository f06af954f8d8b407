use std::path::Path;

use sca_core::gateway::{HashEmbedder, MockProvider, MockReply};
use sca_core::knowledge::{
    build_knowledge_base, fixture_page_name, FixtureFetcher, FixtureSearch, KnowledgeBaseOptions,
};
use sca_core::profile::{
    generate_profile_direct, generate_profile_rag, generate_profile_self_ask, ProfileError,
    ProfileStore, ProfileWarning, RelevantFactors, SelfAskTools, Strategy, NO_RESULTS,
};
use sca_core::time::Timestamper;
use sca_core::ModelConfig;
use url::Url;

fn write_page(dir: &Path, url: &str, html: &str) {
    let pages = dir.join("pages");
    std::fs::create_dir_all(&pages).unwrap();
    std::fs::write(pages.join(fixture_page_name(&Url::parse(url).unwrap())), html).unwrap();
}

fn hadza_fixtures(dir: &Path) {
    let words: String = (0..400).map(|i| format!("fact{i} ")).collect();
    std::fs::write(
        dir.join("search.tsv"),
        "What characterizes the Hadza tribe?\thttps://en.wikipedia.org/wiki/Hadza_people\thttps://www.britannica.com/topic/Hadza\n\
         What do the Hadza eat?\thttps://en.wikipedia.org/wiki/Hadza_people\n\
         How are Hadza camps organized?\thttps://www.britannica.com/topic/Hadza\n",
    )
    .unwrap();
    write_page(dir, "https://en.wikipedia.org/wiki/Hadza_people", &format!("<p>The Hadza forage tubers. {words}</p>"));
    write_page(dir, "https://www.britannica.com/topic/Hadza", "<p>Hadza camps are fluid and egalitarian.</p>");
}

#[tokio::test]
async fn direct_profile_records_prompt_and_no_sources() {
    let model = MockProvider::always("The Hadza are foragers of northern Tanzania.");
    let cfg = ModelConfig::profile("m1");
    let p = generate_profile_direct("Hadza", &RelevantFactors::default(), &model, &cfg, Timestamper::frozen_epoch())
        .await
        .unwrap();
    assert_eq!(p.strategy(), Strategy::Direct);
    assert!(p.sources().is_empty());
    assert!(p.prompt().user.contains("Please construct a profile on the Hadza"));
    assert!(p.prompt().user.ends_with("Proceed step by step."));
    let call = &model.captured()[0];
    assert_eq!(call.request.system_prompt(), "You're a helpful assistant that aids in constructing detailed and comprehensive cultural profiles");
    assert_eq!(call.config.temperature(), 0.5);
    assert_eq!(call.config.max_tokens(), 500);
    assert!(p.warnings().is_empty());
}

#[tokio::test]
async fn long_completion_flags_truncation() {
    let body = vec!["word"; 600].join(" ");
    let model = MockProvider::always(body);
    let cfg = ModelConfig::profile("m1");
    let p = generate_profile_direct("Hadza", &RelevantFactors::default(), &model, &cfg, Timestamper::frozen_epoch())
        .await
        .unwrap();
    assert_eq!(p.warnings(), [ProfileWarning::Truncated { completion_tokens: 600, max_tokens: 500 }]);
}

#[tokio::test]
async fn rag_profile_cites_the_fetched_pages() {
    let dir = tempfile::tempdir().unwrap();
    hadza_fixtures(dir.path());
    let search = FixtureSearch::open(dir.path()).unwrap();
    let fetcher = FixtureFetcher::new(dir.path());
    let embedder = HashEmbedder::new(64);
    let kb = build_knowledge_base("Hadza", &search, &fetcher, &embedder, &KnowledgeBaseOptions::default(), Timestamper::frozen_epoch())
        .await
        .unwrap();
    let model = MockProvider::always("PROFILE-TEXT");
    let p = generate_profile_rag(
        "Hadza",
        &RelevantFactors::default(),
        &kb,
        &embedder,
        &model,
        &ModelConfig::profile("m1"),
        Timestamper::frozen_epoch(),
    )
    .await
    .unwrap();
    assert_eq!(p.body(), "PROFILE-TEXT");
    assert_eq!(p.sources(), kb.sources().as_slice());
    let urls: Vec<&str> = p.sources().iter().map(|s| s.url.as_str()).collect();
    assert_eq!(urls, ["https://en.wikipedia.org/wiki/Hadza_people", "https://www.britannica.com/topic/Hadza"]);
    let sent = model.captured()[0].request.last_user_text().to_string();
    assert!(sent.starts_with("Use the following pieces of context"));
    assert!(sent.contains("Hadza camps are fluid and egalitarian."));
    assert!(sent.contains("Query: Please construct a detailed and comprehensive profile of the Hadza."));
}

#[test]
fn empty_index_maps_to_empty_knowledge_base() {
    let err = sca_core::knowledge::ChunkIndex::from_parts(vec![], vec![], Default::default()).unwrap_err();
    assert!(matches!(ProfileError::from(err), ProfileError::EmptyKnowledgeBase));
}

#[tokio::test]
async fn self_ask_answers_follow_ups_from_search() {
    let dir = tempfile::tempdir().unwrap();
    hadza_fixtures(dir.path());
    let search = FixtureSearch::open(dir.path()).unwrap();
    let fetcher = FixtureFetcher::new(dir.path());
    let model = MockProvider::new()
        .reply_when("Intermediate answer:", "So the final answer is: The Hadza forage tubers and live in fluid camps.")
        .fallback(|_, _| MockReply::Text("Are follow up questions needed here: Yes.\nFollow up: What do the Hadza eat?".into()));
    let tools = SelfAskTools { search: &search, fetcher: &fetcher };
    let (p, trace) = generate_profile_self_ask(
        "Hadza",
        &RelevantFactors::default(),
        tools,
        &model,
        &ModelConfig::profile("m1"),
        10,
        Timestamper::frozen_epoch(),
    )
    .await
    .unwrap();
    assert_eq!(trace.steps.len(), 1);
    assert_eq!(trace.iterations_used, 2);
    assert!(!trace.forced_composition);
    assert_eq!(trace.steps[0].follow_up, "What do the Hadza eat?");
    let answer = &trace.steps[0].intermediate_answer;
    assert!(answer.starts_with("The Hadza forage tubers."));
    assert_eq!(answer.split_whitespace().count(), 150);
    assert_eq!(p.body(), "The Hadza forage tubers and live in fluid camps.");
    assert_eq!(p.sources().len(), 1);
    let second = &model.captured()[1].request;
    assert_eq!(second.messages().len(), 3);
    assert!(second.messages()[2].content.starts_with("Intermediate answer: The Hadza forage"));
}

#[tokio::test]
async fn self_ask_caps_iterations_and_composes() {
    let dir = tempfile::tempdir().unwrap();
    hadza_fixtures(dir.path());
    let search = FixtureSearch::open(dir.path()).unwrap();
    let fetcher = FixtureFetcher::new(dir.path());
    let model = MockProvider::new()
        .reply_when("write the complete profile now", "So the final answer is: Composed profile.")
        .fallback(|_, _| MockReply::Text("Follow up: Is there more about lineage?".into()));
    let tools = SelfAskTools { search: &search, fetcher: &fetcher };
    let (p, trace) = generate_profile_self_ask(
        "Hadza",
        &RelevantFactors::default(),
        tools,
        &model,
        &ModelConfig::profile("m1"),
        3,
        Timestamper::frozen_epoch(),
    )
    .await
    .unwrap();
    assert_eq!(trace.steps.len(), 3);
    assert_eq!(trace.iterations_used, 3);
    assert!(trace.forced_composition);
    assert!(trace.steps.iter().all(|s| s.intermediate_answer == NO_RESULTS));
    assert_eq!(p.body(), "Composed profile.");
    assert_eq!(model.captured().len(), 4);

    let store_dir = tempfile::tempdir().unwrap();
    let store = ProfileStore::new(store_dir.path());
    let id = store.save(&p, Some(&trace)).unwrap();
    let back = store.resolve(&id).unwrap();
    assert_eq!(back.profile, p);
    assert_eq!(back.trace.as_ref(), Some(&trace));
}
