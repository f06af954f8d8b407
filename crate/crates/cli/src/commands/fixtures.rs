use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use sca_core::fixtures::{self, PublishedComparison, ENDOWMENT_ENDOWED, ENDOWMENT_ITEMS, ENDOWMENT_SESSION, LOW_OFFER_LEVELS};
use sca_core::stats::{ContingencyTable, GroupCounts};
use serde_json::json;

use super::write_file;
use crate::CliError;

#[derive(Debug, Args)]
pub struct FixturesArgs {
    #[arg(long)]
    pub out: PathBuf,
}

fn single_stratum(counts: &GroupCounts, level: u32) -> ContingencyTable {
    ContingencyTable::new(counts.groups.clone(), vec![level], counts.cells.iter().map(|c| vec![*c]).collect())
        .expect("bundled counts form a valid table")
}

fn pairwise_tsv(rows: &[PublishedComparison]) -> String {
    let mut out = String::from("first\tsecond\tp\tadjusted\tsignificant\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.first,
            r.second,
            r.p_value,
            r.adjusted,
            if r.significant { "yes" } else { "no" }
        );
    }
    out
}

/// Every bundled file as (name, contents), in a fixed order.
pub fn fixture_files() -> Vec<(&'static str, String)> {
    let levels = LOW_OFFER_LEVELS.iter().map(|l| format!("{l}%")).collect::<Vec<_>>().join(", ");
    let responder_low = single_stratum(&fixtures::responder_low_offer(), LOW_OFFER_LEVELS[0]).render();
    let responder_low = responder_low.replacen(
        '\n',
        &format!("\n# mean responder acceptance over the {levels} offers, stored in the first of them\n"),
        1,
    );
    let transcript = json!({
        "items": ENDOWMENT_ITEMS,
        "endowed_item": ENDOWMENT_ENDOWED + 1,
        "turns": ENDOWMENT_SESSION
            .iter()
            .map(|(role, text)| json!({ "speaker": role, "text": text }))
            .collect::<Vec<_>>(),
    });
    vec![
        ("dictator.tbl", fixtures::dictator_acceptance().render()),
        ("proposer.tbl", fixtures::proposer_acceptance().render()),
        ("responder.tbl", fixtures::responder_acceptance().render()),
        ("dictator_zero.tbl", single_stratum(&fixtures::dictator_zero_offer(), 0).render()),
        ("responder_low.tbl", responder_low),
        ("dictator_zero_pairwise.tsv", pairwise_tsv(&fixtures::DICTATOR_ZERO_PAIRWISE)),
        ("responder_low_pairwise.tsv", pairwise_tsv(&fixtures::RESPONDER_LOW_PAIRWISE)),
        ("endowment_session.json", serde_json::to_string_pretty(&transcript).expect("serializable") + "\n"),
    ]
}

pub fn write_fixtures(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    fixture_files()
        .into_iter()
        .map(|(name, contents)| {
            let path = dir.join(name);
            write_file(&path, contents.as_bytes()).map(|_| path)
        })
        .collect()
}

pub fn execute(args: FixturesArgs, out: &mut dyn Write) -> Result<(), CliError> {
    for path in write_fixtures(&args.out)? {
        writeln!(out, "{}", path.display())?;
    }
    Ok(())
}
