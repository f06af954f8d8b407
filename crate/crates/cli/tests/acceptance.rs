//! One PASS/FAIL line per acceptance criterion. Set SCA_ACCEPTANCE_STRICT=1 to
//! exit non-zero when any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use sca_core::experiment::{
    build_dictator_prompt, build_prompt, build_ultimatum_prompt, compose_response, parse_decision, Decision, Game,
    GameRole, GameSpec, Money,
};
use sca_core::fixtures::{self, PublishedComparison};
use sca_core::gateway::HashEmbedder;
use sca_core::knowledge::{build_index, chunk_document, retrieve, Chunk, Document, RetrievalQuery, Similarity, SourceLink};
use sca_core::stats::{
    aggregate_low_offers, bh_adjust, chi_square_independence, cmh_general, fisher_exact_2x2, stratum_counts,
    ContingencyTable,
};
use sca_core::time::Timestamper;

const SCA: &str = env!("CARGO_BIN_EXE_sca");

struct Outcome {
    name: &'static str,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Outcome {
    fn new(name: &'static str) -> Self {
        Self { name, failures: Vec::new(), notes: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }
}

fn within_abs(actual: f64, expected: f64, tol: f64) -> bool {
    (actual - expected).abs() <= tol
}

fn within_rel(actual: f64, expected: f64, tol: f64) -> bool {
    (actual - expected).abs() <= tol * expected.abs()
}

fn cmh_reproduction() -> Outcome {
    let mut o = Outcome::new("CMH reproduction");
    let cases: [(&str, ContingencyTable, f64, Option<(f64, f64)>); 3] = [
        ("dictator", fixtures::dictator_acceptance(), 27.48, Some((1.586e-7, 0.005))),
        ("proposer", fixtures::proposer_acceptance(), 60.796, Some((6.328e-15, 0.01))),
        ("responder", fixtures::responder_acceptance(), 27.688, None),
    ];
    for (name, table, stat, p) in cases {
        let start = Instant::now();
        let r = cmh_general(&table).expect("published table is analysable");
        let elapsed = start.elapsed();
        o.check(within_abs(r.statistic, stat, 0.01), format!("{name} M^2 {:.3} vs {stat}±0.01", r.statistic));
        o.check(r.df == 5, format!("{name} df {}", r.df));
        if let Some((p, rel)) = p {
            o.check(within_rel(r.p_value, p, rel), format!("{name} p {:.4e} vs {p:e}±{}%", r.p_value, rel * 100.0));
        }
        o.check(elapsed < Duration::from_secs(1), format!("{name} {elapsed:?}"));
    }
    o
}

fn chi_square_reproduction() -> Outcome {
    let mut o = Outcome::new("chi-square reproduction");
    let zero = stratum_counts(&fixtures::dictator_acceptance(), 0).unwrap();
    let r = chi_square_independence(&zero.matrix()).unwrap();
    o.check(within_abs(r.statistic, 38.255, 0.005), format!("dictator 0% X^2 {:.4}", r.statistic));
    o.check(r.df == 5, format!("dictator 0% df {}", r.df));
    o.check(within_rel(r.p_value, 3.354e-7, 0.005), format!("dictator 0% p {:.4e}", r.p_value));

    let low = aggregate_low_offers(&fixtures::responder_acceptance(), &[10, 20, 30], 100).unwrap();
    let accepts: Vec<u64> = low.cells.iter().map(|c| c.accept).collect();
    o.check(accepts == [27, 28, 32, 23, 46, 9], format!("aggregated accepts {accepts:?}"));
    let r = chi_square_independence(&low.matrix()).unwrap();
    o.check(within_abs(r.statistic, 36.389, 0.005), format!("responder low X^2 {:.4}", r.statistic));
    o.check(r.df == 5, format!("responder low df {}", r.df));
    o.check(within_rel(r.p_value, 7.941e-7, 0.005), format!("responder low p {:.4e}", r.p_value));
    o
}

fn binomial(n: u64, k: u64) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * u128::from(n - i) / u128::from(i + 1))
}

/// Two-sided p-value by enumerating every table with the observed margins in exact integers.
fn fisher_oracle(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let (r1, r2, c1) = (a + b, c + d, a + c);
    let support: Vec<u64> = (c1.saturating_sub(r2)..=c1.min(r1)).collect();
    let weight = |x: u64| binomial(r1, x) * binomial(r2, c1 - x);
    let total: u128 = support.iter().map(|&x| weight(x)).sum();
    let observed = weight(a);
    let tail: u128 = support.iter().map(|&x| weight(x)).filter(|&w| w <= observed).sum();
    tail as f64 / total as f64
}

fn published_pairs_check(o: &mut Outcome, label: &str, counts: &sca_core::stats::GroupCounts, rows: &[PublishedComparison]) {
    let index = |name: &str| counts.groups.iter().position(|g| g == name).unwrap();
    for row in rows {
        let (x, y) = (counts.cells[index(row.first)], counts.cells[index(row.second)]);
        let p = fisher_exact_2x2(x.accept, x.reject, y.accept, y.reject).p_value;
        let ok = if row.p_value >= 1e-3 { within_abs(p, row.p_value, 5e-4) } else { within_rel(p, row.p_value, 0.10) };
        let shown_equal = format!("{:.4}", p) == format!("{:.4}", row.p_value) || row.p_value < 1e-4;
        if !ok {
            o.failures.push(format!(
                "{label} {} vs {}: {p:.4e} vs printed {} (agrees at 4 decimals: {shown_equal})",
                row.first, row.second, row.p_value
            ));
        }
    }
}

fn fisher_reproduction() -> Outcome {
    let mut o = Outcome::new("Fisher reproduction");
    published_pairs_check(&mut o, "dictator 0%", &fixtures::dictator_zero_offer(), &fixtures::DICTATOR_ZERO_PAIRWISE);
    published_pairs_check(&mut o, "responder low", &fixtures::responder_low_offer(), &fixtures::RESPONDER_LOW_PAIRWISE);

    let mut tables = 0;
    let mut worst = 0.0f64;
    for a in 0..=12u64 {
        for b in 0..=12 - a {
            for c in 0..=12 - a {
                for d in 0..=(12 - b).min(12 - c) {
                    let got = fisher_exact_2x2(a, b, c, d).p_value;
                    let want = fisher_oracle(a, b, c, d);
                    worst = worst.max((got - want).abs() / want);
                    tables += 1;
                }
            }
        }
    }
    // the smallest point probability at these margins is above 1e-7, so a
    // deviation below 1e-12 means the same tables were summed
    o.check(worst <= 1e-12, format!("{tables} tables with margins <= 12, max relative deviation {worst:.1e}"));
    o
}

fn bh_reproduction() -> Outcome {
    let mut o = Outcome::new("BH reproduction");
    let raw: Vec<f64> = fixtures::RESPONDER_LOW_PAIRWISE.iter().map(|r| r.p_value).collect();
    let bh = bh_adjust(&raw, 0.05).unwrap();
    let mut matched = 0;
    for (i, row) in fixtures::RESPONDER_LOW_PAIRWISE.iter().enumerate() {
        if within_abs(bh.adjusted[i], row.adjusted, 5e-4) && bh.significant[i] == row.significant {
            matched += 1;
        } else {
            o.failures.push(format!("responder low {} vs {}: {:.6} vs {}", row.first, row.second, bh.adjusted[i], row.adjusted));
        }
    }
    o.notes.push(format!("responder low {matched} of {} adjusted values and flags", raw.len()));
    let raw: Vec<f64> = fixtures::DICTATOR_ZERO_PAIRWISE.iter().map(|r| r.p_value).collect();
    let bh = bh_adjust(&raw, 0.05).unwrap();
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&x, &y| raw[x].partial_cmp(&raw[y]).unwrap());
    let second = order[1];
    let printed = fixtures::DICTATOR_ZERO_PAIRWISE[second].adjusted;
    o.check(
        format!("{:.6}", bh.adjusted[second]) != format!("{printed:.6}"),
        format!(
            "dictator 0% rank 2 ({} vs {}): standard BH gives {:.6}, printed {printed:.6}",
            fixtures::DICTATOR_ZERO_PAIRWISE[second].first,
            fixtures::DICTATOR_ZERO_PAIRWISE[second].second,
            bh.adjusted[second]
        ),
    );
    o
}

fn sca(dir: &Path, args: &[&str]) -> Output {
    Command::new(SCA).args(args).current_dir(dir).env_remove("SCA_CONFIG").output().expect("sca runs")
}

fn stub_profiles(dir: &Path) -> Result<(), String> {
    for tribe in fixtures::SOCIETIES {
        let out = sca(dir, &["profile", "--tribe", tribe, "--mock", "stub", "--store", "profiles"]);
        if !out.status.success() {
            return Err(String::from_utf8_lossy(&out.stderr).into_owned());
        }
    }
    Ok(())
}

fn run_args<'a>(script: &'a str, out: &'a str, seed: &'a str) -> Vec<&'a str> {
    vec![
        "run", "--game", "ultimatum", "--role", "responder", "--tribes", "Ache,Orma,Tsimane,Hadza,Machiguenga,Yanomami",
        "--store", "profiles", "--mock", script, "--out", out, "--seed", seed,
    ]
}

fn mock_end_to_end() -> Outcome {
    let mut o = Outcome::new("mock end-to-end");
    let dir = tempfile::tempdir().unwrap();
    if let Err(e) = stub_profiles(dir.path()) {
        o.check(false, format!("profiles: {e}"));
        return o;
    }
    let start = Instant::now();
    let out = sca(dir.path(), &run_args("accept-geq:50", "step", "1"));
    let elapsed = start.elapsed();
    o.check(out.status.success(), format!("run exit {:?}", out.status.code()));
    o.check(elapsed < Duration::from_secs(30), format!("run took {elapsed:.2?}"));

    let records = std::fs::read_to_string(dir.path().join("step/records.jsonl")).unwrap_or_default();
    let parsed: Vec<serde_json::Value> = records.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let valid = parsed.iter().filter(|r| r["invalid"] == false).count();
    o.check(parsed.len() == 6600 && valid == 6600, format!("{valid} valid of {} trials", parsed.len()));

    let mut expected = String::from("# sca-table v1\n# total: 100\ngroup");
    for level in (0..=100).step_by(10) {
        expected.push_str(&format!("\t{level}%"));
    }
    expected.push('\n');
    for tribe in fixtures::SOCIETIES {
        expected.push_str(tribe);
        for level in (0..=100).step_by(10) {
            expected.push_str(if level >= 50 { "\t100" } else { "\t0" });
        }
        expected.push('\n');
    }
    let table = std::fs::read_to_string(dir.path().join("step/table.tbl")).unwrap_or_default();
    o.check(table == expected, "step-pattern table");

    let out = sca(dir.path(), &run_args("bernoulli", "coin", "7"));
    o.check(out.status.success(), format!("stochastic run exit {:?}", out.status.code()));
    let table = std::fs::read_to_string(dir.path().join("coin/table.tbl")).unwrap_or_default();
    match ContingencyTable::parse(&table) {
        Ok(t) => {
            let rows: Vec<Vec<u64>> = (0..6).map(|g| t.accepts(g)).collect();
            o.check(rows.windows(2).all(|w| w[0] == w[1]), "identical stochastic rows");
            match cmh_general(&t) {
                Ok(r) => o.check(r.statistic.abs() <= 1e-9, format!("identical scripts M^2 = {:.1e}", r.statistic)),
                Err(e) => o.check(false, format!("cmh: {e}")),
            }
        }
        Err(e) => o.check(false, format!("table: {e}")),
    }
    o
}

const DG_SYSTEM_PROFILE: &str = "You are a member of a tribe with the following characteristics.\n\
You must answer as if you were a representative member of such tribe.\n\
-----\n\
{profile}\n\
-----\n\
You have been selected to participate in an economic experiment.";
const DG_SYSTEM_PLAIN: &str = "You are an assistant that has been selected to participate in an economic experiment.";
const DG_USER: &str = "In this experiment, you are endowed with ${amount_endowed}, which represents a day's worth of work. \
An experimenter proposes that you give at most ${offer_amount} of this endowment to another {tribe member/player} \
whose identity is not disclosed, leaving you with ${amount_endowed - offer_amount} for yourself. An offer of 5 means equal split.\n\
\n\
Do you accept this distribution? Please answer 'Yes' or 'No'. Start with your answer, followed by a separator token [EXP], \
and then briefly justify your reasoning step by step.";

const UG_SYSTEM_PROFILE: &str = "You are a member of a tribe with the following characteristics.\n\
You must answer as if you were a representative member of such tribe.\n\
-----\n\
{profile}\n\
-----\n\
You and other members of the same tribe have been selected to participate in an experiment.";
const UG_SYSTEM_PLAIN: &str = "You are a helpful assistant that has been randomly selected to participate in an experiment.";
const UG_PROPOSER: &str = "You have been chosen to be a proposer of an offer to distribute ${amount_endowed}, which is equal to a day's worth of work, \
between yourself and another {tribe member/player} whose identity is not disclosed. If the other {tribe member/player} accepts the offer, \
you keep the difference between ${amount_endowed} and your offer. If the other {tribe member/player} rejects the offer, \
you and the other {tribe member/player} get nothing. Offering exactly $5 represents an equal split.\n\
\n\
Given this, would you offer ${offer_percentage} out of ${amount_endowed}? You must answer 'Yes' or 'No'. \
Start with your answer, followed by a separator token [EXP], and then briefly justify your reasoning step by step.";
const UG_RESPONDER: &str = "You have been chosen to be a recipient of an offer from another {tribe member/player} whose identity is not disclosed. \
The proposer was chosen to distribute ${amount_endowed} between the proposer and you. You can either accept or reject this offer. \
If you accept the offer, you get what is proposed and the proposer gets the difference between ${amount_endowed} and the offer. \
If you reject the offer, you and the other get nothing. An offer of exactly $5 represents an equal split.\n\
\n\
You are offered ${offer_percentage} out of ${amount_endowed}. Do you accept this offer? You must answer 'Yes' or 'No'. \
Start with your answer, followed by a separator token [EXP], and then briefly justify your reasoning step by step.";

fn fill(template: &str, profile: Option<&str>, offer: u64) -> String {
    template
        .replace("${amount_endowed - offer_amount}", &format!("${}", 10 - offer))
        .replace("${amount_endowed}", "$10")
        .replace("${offer_amount}", &format!("${offer}"))
        .replace("${offer_percentage}", &format!("${offer}"))
        .replace("{tribe member/player}", if profile.is_some() { "tribe member" } else { "player" })
        .replace("{profile}", profile.unwrap_or_default())
}

fn prompt_goldens() -> Outcome {
    let mut o = Outcome::new("prompt goldens");
    let profile = "The Orma are Cushitic-speaking cattle herders of eastern Kenya who share milk within the camp.";
    let mut mismatches = Vec::new();
    let mut compared = 0;
    for branch in [Some(profile), None] {
        for offer in 0..=10u64 {
            let (endowment, amount) = (Money::dollars(10), Money::dollars(offer));
            let cases = [
                ("dictator", build_dictator_prompt(branch, endowment, amount), DG_SYSTEM_PROFILE, DG_SYSTEM_PLAIN, DG_USER, GameRole::Dictator),
                ("proposer", build_ultimatum_prompt(GameRole::Proposer, branch, endowment, amount), UG_SYSTEM_PROFILE, UG_SYSTEM_PLAIN, UG_PROPOSER, GameRole::Proposer),
                ("responder", build_ultimatum_prompt(GameRole::Responder, branch, endowment, amount), UG_SYSTEM_PROFILE, UG_SYSTEM_PLAIN, UG_RESPONDER, GameRole::Responder),
            ];
            for (name, rendered, sys_profile, sys_plain, user, role) in cases {
                let rendered = rendered.expect("offer within endowment");
                let want_system = if branch.is_some() { fill(sys_profile, branch, offer) } else { sys_plain.to_string() };
                let want_user = fill(user, branch, offer);
                let game = if role == GameRole::Dictator { Game::Dictator } else { Game::Ultimatum };
                let via_spec = build_prompt(&GameSpec::standard(game, role).unwrap(), branch, offer as u32 * 10).unwrap();
                compared += 1;
                if rendered.system != want_system || rendered.user != want_user || via_spec != rendered {
                    mismatches.push(format!("{name} ${offer} {}", if branch.is_some() { "profile" } else { "no profile" }));
                }
            }
        }
    }
    o.check(mismatches.is_empty(), format!("{compared} prompts compared; mismatches: {mismatches:?}"));
    o
}

fn parser_suite() -> Outcome {
    let mut o = Outcome::new("parser suite");
    let proposer = parse_decision(fixtures::TSIMANE_RESPONSES[0]);
    let responder = parse_decision(fixtures::TSIMANE_RESPONSES[1]);
    match (proposer, responder) {
        (Ok(p), Ok(r)) => {
            o.check(
                p.decision == Decision::Reject && p.rationale.starts_with("1. As a member of the Tsimane tribe, I value cooperation"),
                "proposer example: Reject with its rationale",
            );
            o.check(
                r.decision == Decision::Accept && r.rationale.starts_with("1. The offer of $6 out of $10 is more than an equal split"),
                "responder example: Accept with its rationale",
            );
        }
        _ => o.check(false, "published examples parse"),
    }

    let mut runner = TestRunner::new_with_rng(Config { cases: 1000, failure_persistence: None, ..Config::default() }, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let round_trips = runner.run(&(any::<bool>(), "[A-Za-z0-9 .,;:!?$%()\\n-]{0,120}"), |(accept, rationale)| {
        let decision = if accept { Decision::Accept } else { Decision::Reject };
        let parsed = parse_decision(&compose_response(decision, &rationale)).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(parsed.decision, decision);
        prop_assert_eq!(parsed.rationale, rationale.trim());
        Ok(())
    });
    o.check(round_trips.is_ok(), format!("1000 compose/parse round trips {round_trips:?}"));

    // mutation corpus: (kind, text, decision it should parse to or None)
    let mut failures: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    let rationales = ["1. The split is fair.", "It keeps the peace in camp.", "Too little for a day of work.", "2 reasons follow"];
    for i in 0..400 {
        let decision = if i % 2 == 0 { Decision::Accept } else { Decision::Reject };
        let rationale = rationales[i % rationales.len()];
        let base = compose_response(decision, rationale);
        let token = if decision == Decision::Accept { "Yes" } else { "No" };
        let shuffled: String = base
            .chars()
            .enumerate()
            .map(|(j, c)| if (i * 7 + j * 13) % 3 == 0 { c.to_ascii_uppercase() } else { c.to_ascii_lowercase() })
            .collect();
        let quote = ["\"", "'", "“", "‘", "`", "\"'"][i % 6];
        let corpus = [
            ("separator removed", base.replace(" [EXP]", ""), Some(decision)),
            ("case shuffled", shuffled, Some(decision)),
            ("leading quotes", format!("{quote}{base}"), Some(decision)),
            ("missing yes/no", base.replacen(token, "", 1), None),
        ];
        for (kind, text, want) in corpus {
            let got = parse_decision(&text).ok().map(|p| p.decision);
            let entry = failures.entry(kind).or_default();
            entry.1 += 1;
            if got.is_none() {
                entry.0 += 1;
            }
            if want.is_some() && got != want {
                o.failures.push(format!("{kind}: {text:?}"));
            }
        }
    }
    let summary: Vec<String> = failures.iter().map(|(k, (f, n))| format!("{k} {f}/{n} rejected")).collect();
    let missing = failures.get("missing yes/no").copied().unwrap_or_default();
    o.check(missing.0 == missing.1, summary.join(", "));
    o
}

fn retrieval_oracle(rt: &tokio::runtime::Runtime) -> Outcome {
    let mut o = Outcome::new("retrieval oracle");
    let embedder = HashEmbedder::new(64);
    let mut runner = TestRunner::new_with_rng(Config { cases: 200, failure_persistence: None, ..Config::default() }, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let corpus = (prop::collection::vec("[a-z]{1,7}( [a-z]{1,7}){0,4}", 1..=1000), "[a-z]{1,7}( [a-z]{1,7}){0,3}", 1usize..=40);
    let largest = std::cell::Cell::new(0);
    let result = runner.run(&corpus, |(texts, query, k)| {
        largest.set(largest.get().max(texts.len()));
        let chunks: Vec<Chunk> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Chunk { doc_id: 0, ordinal: i, text: t.clone(), word_span: (0, 1) })
            .collect();
        let got: Vec<usize> = rt.block_on(async {
            let index = build_index(chunks, &embedder, Similarity::Cosine).await.unwrap();
            retrieve(&index, &RetrievalQuery::new(query.clone(), k).unwrap(), &embedder).await.unwrap()
        })
        .into_iter()
        .map(|(c, _)| c.ordinal)
        .collect();

        let q = embedder.embed_one(&query);
        let cosine = |t: &str| {
            let v = embedder.embed_one(t);
            let dot: f64 = q.values().iter().zip(v.values()).map(|(a, b)| a * b).sum();
            let nq = q.values().iter().map(|x| x * x).sum::<f64>().sqrt();
            let nv = v.values().iter().map(|x| x * x).sum::<f64>().sqrt();
            if nq * nv == 0.0 { 0.0 } else { dot / (nq * nv) }
        };
        let scores: Vec<f64> = texts.iter().map(|t| cosine(t)).collect();
        let mut remaining: Vec<usize> = (0..texts.len()).collect();
        let mut want = Vec::new();
        while want.len() < k.min(texts.len()) {
            let mut best = remaining[0];
            for &i in &remaining[1..] {
                if scores[i] > scores[best] {
                    best = i;
                }
            }
            want.push(best);
            remaining.retain(|&i| i != best);
        }
        prop_assert_eq!(got, want);
        Ok(())
    });
    o.check(result.is_ok(), format!("200 corpora up to {} chunks: {result:?}", largest.get()));

    let doc = |n: usize| {
        let text = (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
        let source = SourceLink { url: "https://example.org/".parse().unwrap(), rank: 1, title: None };
        Document::new(source, text, Timestamper::frozen_epoch().now())
    };
    let mut grid = vec![(2000usize, 200usize), (500, 50), (1000, 999)];
    for size in 1..=60 {
        for overlap in 0..size {
            grid.push((size, overlap));
        }
    }
    let mut bad = Vec::new();
    for &(size, overlap) in &grid {
        let stride = size - overlap;
        for n in [0, 1, size - 1, size, size + 1, 2 * size + 3, 5000] {
            let chunks = chunk_document(0, &doc(n), size, overlap).unwrap();
            let expected = if n == 0 { 0 } else if n <= size { 1 } else { (n - size).div_ceil(stride) + 1 };
            let mut ok = chunks.len() == expected;
            for (i, c) in chunks.iter().enumerate() {
                let start = i * stride;
                let end = (start + size).min(n);
                let words: Vec<&str> = c.text.split(' ').collect();
                ok &= c.word_span == (start, end)
                    && words.len() == end - start
                    && words.first() == Some(&format!("w{start}").as_str())
                    && words.last() == Some(&format!("w{}", end - 1).as_str());
            }
            if let Some(last) = chunks.last() {
                ok &= last.word_span.1 == n;
            }
            if !ok {
                bad.push((size, overlap, n));
            }
        }
    }
    o.check(bad.is_empty(), format!("{} (size, overlap) pairs incl. (2000, 200); failures {bad:?}", grid.len()));
    o
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn pipeline(dir: &Path) -> Result<Vec<u8>, String> {
    stub_profiles(dir)?;
    let run = sca(dir, &run_args("bernoulli", "run", "42"));
    let analysis = sca(dir, &["analyze", "--test", "cmh", "run/table.tbl"]);
    if !run.status.success() || !analysis.status.success() {
        return Err(String::from_utf8_lossy(&run.stderr).into_owned() + &String::from_utf8_lossy(&analysis.stderr));
    }
    Ok([run.stdout, analysis.stdout].concat())
}

fn determinism() -> Outcome {
    let mut o = Outcome::new("determinism");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    match (pipeline(a.path()), pipeline(b.path())) {
        (Ok(out_a), Ok(out_b)) => {
            let (ta, tb) = (tree(a.path()), tree(b.path()));
            let differing: Vec<&String> = ta.keys().filter(|k| tb.get(*k) != ta.get(*k)).collect();
            o.check(ta.len() == tb.len() && differing.is_empty(), format!("{} artifacts, differing {differing:?}", ta.len()));
            o.check(out_a == out_b, "command output");
        }
        (a, b) => o.check(false, format!("pipeline failed: {:?} {:?}", a.err(), b.err())),
    }
    o
}

fn main() {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
    let outcomes = [
        cmh_reproduction(),
        chi_square_reproduction(),
        fisher_reproduction(),
        bh_reproduction(),
        mock_end_to_end(),
        prompt_goldens(),
        parser_suite(),
        retrieval_oracle(&rt),
        determinism(),
    ];
    let mut failed = 0;
    for o in &outcomes {
        if o.failures.is_empty() {
            println!("PASS {}: {}", o.name, o.notes.join("; "));
        } else {
            failed += 1;
            println!("FAIL {}: {}; passing: {}", o.name, o.failures.join("; "), o.notes.join("; "));
        }
    }
    println!("acceptance: {} of {} criteria pass", outcomes.len() - failed, outcomes.len());
    if failed > 0 && std::env::var_os("SCA_ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
        std::process::exit(1);
    }
}
