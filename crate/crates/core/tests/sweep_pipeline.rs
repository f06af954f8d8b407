use std::path::Path;

use sca_core::experiment::{
    extract_offer_pct, load_records, run_sweep, tabulate, Game, GameRole, GameSpec, Money,
    SweepOptions, TrialRecord,
};
use sca_core::gateway::{uniform_draw, MockProvider, MockReply};
use sca_core::stats::cmh_general;
use sca_core::time::Timestamper;
use sca_core::ModelConfig;

const TRIBES: [&str; 3] = ["Orma", "Hadza", "Ache"];

/// Accepts an offer of p% with probability p/100, drawn from the request seed.
fn bernoulli() -> MockProvider {
    MockProvider::new().fallback(|req, cfg| {
        let pct = extract_offer_pct(req.last_user_text()).unwrap_or(0);
        let u = uniform_draw("bernoulli", cfg.seed());
        MockReply::Text(if u < f64::from(pct) / 100.0 { "Yes [EXP] enough".into() } else { "No [EXP] too little".into() })
    })
}

fn spec() -> GameSpec {
    GameSpec::new(Game::Ultimatum, GameRole::Responder, Money::dollars(10), (0..=100).step_by(10).collect(), 20).unwrap()
}

async fn run_all(path: &Path) -> Vec<TrialRecord> {
    let model = bernoulli();
    let options = SweepOptions {
        run_seed: 7,
        clock: Timestamper::frozen_epoch(),
        records_path: Some(path.to_path_buf()),
        ..SweepOptions::default()
    };
    let mut all = Vec::new();
    for tribe in TRIBES {
        let profile = format!("The {tribe} are a society with a long history of exchange.");
        all.extend(run_sweep(&spec(), tribe, Some(&profile), &model, &ModelConfig::experiment("mock"), &options).await.unwrap());
    }
    all
}

#[tokio::test]
async fn identical_agents_give_identical_rows_and_zero_cmh() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("records.jsonl");
    let records = run_all(&path).await;
    let table = tabulate(&records, &TRIBES).unwrap();
    let rows: Vec<Vec<u64>> = (0..TRIBES.len()).map(|g| table.accepts(g)).collect();
    assert!(rows.windows(2).all(|w| w[0] == w[1]));
    assert_eq!(rows[0][0], 0);
    assert_eq!(rows[0][10], 20);
    let r = cmh_general(&table).unwrap();
    assert!(r.statistic.abs() < 1e-9);
    assert!((r.p_value - 1.0).abs() < 1e-9);

    let reloaded = tabulate(&load_records(&path).unwrap(), &TRIBES).unwrap();
    assert_eq!(reloaded, table);
}

#[tokio::test]
async fn records_file_is_reproducible_and_resumable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    run_all(&a).await;
    run_all(&b).await;
    let full = std::fs::read(&a).unwrap();
    assert_eq!(full, std::fs::read(&b).unwrap());

    let c = dir.path().join("c.jsonl");
    let cut = full.len() / 2;
    std::fs::write(&c, &full[..cut]).unwrap();
    run_all(&c).await;
    let resumed = load_records(&c).unwrap();
    let mut original = load_records(&a).unwrap();
    let mut resumed_sorted = resumed.clone();
    let key = |r: &TrialRecord| (r.tribe.clone(), r.offer_pct, r.repetition);
    original.sort_by_key(key);
    resumed_sorted.sort_by_key(key);
    assert_eq!(resumed_sorted, original);
}
