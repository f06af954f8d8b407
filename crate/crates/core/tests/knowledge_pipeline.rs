use std::path::Path;

use sca_core::gateway::HashEmbedder;
use sca_core::knowledge::{
    build_knowledge_base, fixture_page_name, retrieve, FetchError, FixtureFetcher, FixtureSearch,
    KnowledgeBase, KnowledgeBaseOptions, KnowledgeError, RetrievalQuery,
};
use sca_core::time::Timestamper;
use url::Url;

fn page(dir: &Path, url: &str, body: &str) {
    let pages = dir.join("pages");
    std::fs::create_dir_all(&pages).unwrap();
    let html = format!("<html><head><script>var x = 1;</script></head><body><nav>menu</nav><p>{body}</p></body></html>");
    std::fs::write(pages.join(fixture_page_name(&Url::parse(url).unwrap())), html).unwrap();
}

fn fixtures(dir: &Path) {
    std::fs::write(
        dir.join("search.tsv"),
        "What characterizes the Orma tribe?\thttps://a.org/orma\thttps://b.org/orma#top\thttps://a.org/orma/\thttps://missing.org/x\n",
    )
    .unwrap();
    let long: String = (0..4500).map(|i| format!("cattle{i} ")).collect();
    page(dir, "https://a.org/orma", &long);
    page(dir, "https://b.org/orma", "The Orma are Cushitic pastoralists of the Tana River.");
}

#[tokio::test]
async fn build_save_load_retrieve() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    let search = FixtureSearch::open(dir.path()).unwrap();
    let fetcher = FixtureFetcher::new(dir.path());
    let embedder = HashEmbedder::new(48);
    let kb = build_knowledge_base("Orma", &search, &fetcher, &embedder, &KnowledgeBaseOptions::default(), Timestamper::frozen_epoch())
        .await
        .unwrap();

    let urls: Vec<&str> = kb.manifest.sources.iter().map(|s| s.link.url.as_str()).collect();
    assert_eq!(urls, ["https://a.org/orma", "https://b.org/orma#top"]);
    assert_eq!(kb.manifest.failures.len(), 1);
    assert!(matches!(kb.manifest.failures[0].error, FetchError::Missing(_)));
    assert_eq!(kb.index.len(), 4);
    assert!(kb.index.chunks().iter().all(|c| !c.text.contains("var x") && !c.text.contains("menu")));

    let store = dir.path().join("kb");
    kb.save(&store).unwrap();
    let back = KnowledgeBase::load(&store).unwrap();
    assert_eq!(back.manifest, kb.manifest);
    assert_eq!(back.index.chunks(), kb.index.chunks());

    let q = RetrievalQuery::new("The Orma are Cushitic pastoralists of the Tana River.", 2).unwrap();
    let fresh = retrieve(&kb.index, &q, &embedder).await.unwrap();
    let loaded = retrieve(&back.index, &q, &embedder).await.unwrap();
    assert_eq!(fresh, loaded);
    assert_eq!(kb.source_of(&fresh[0].0).unwrap().url.as_str(), "https://b.org/orma#top");
}

#[tokio::test]
async fn unknown_tribe_has_no_results() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    let search = FixtureSearch::open(dir.path()).unwrap();
    let fetcher = FixtureFetcher::new(dir.path());
    let err = build_knowledge_base("Hadza", &search, &fetcher, &HashEmbedder::new(8), &KnowledgeBaseOptions::default(), Timestamper::frozen_epoch())
        .await
        .unwrap_err();
    assert!(matches!(err, KnowledgeError::EmptyResultSet { .. }));
}
