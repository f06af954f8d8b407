use std::collections::{BTreeMap, BTreeSet};

use super::{Decision, ExperimentError, TrialRecord};
use crate::stats::{Cell, ContingencyTable};

/// Counts valid accept/reject decisions per group and offer level.
///
/// Every group must cover the same offer levels with the same number of
/// trials per level; invalid trials are left out of the counts.
pub fn tabulate(records: &[TrialRecord], groups: &[&str]) -> Result<ContingencyTable, ExperimentError> {
    if records.is_empty() {
        return Err(ExperimentError::RaggedData("no records".into()));
    }
    let (game, role) = (records[0].game, records[0].role);
    if let Some(r) = records.iter().find(|r| r.game != game || r.role != role) {
        return Err(ExperimentError::RaggedData(format!(
            "records mix {game}/{role} with {}/{}",
            r.game, r.role
        )));
    }

    // group -> level -> (trials, cell)
    let mut tally: BTreeMap<&str, BTreeMap<u32, (u64, Cell)>> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for r in records {
        if !groups.contains(&r.tribe.as_str()) {
            continue;
        }
        if !seen.insert((r.tribe.as_str(), r.offer_pct, r.repetition)) {
            return Err(ExperimentError::RaggedData(format!(
                "duplicate trial {} at {}% repetition {}",
                r.tribe, r.offer_pct, r.repetition
            )));
        }
        let entry = tally
            .entry(r.tribe.as_str())
            .or_default()
            .entry(r.offer_pct)
            .or_insert((0, Cell::new(0, 0)));
        entry.0 += 1;
        match r.parsed.as_ref().map(|p| p.decision) {
            Some(Decision::Accept) if !r.invalid => entry.1.accept += 1,
            Some(Decision::Reject) if !r.invalid => entry.1.reject += 1,
            _ => {}
        }
    }

    let reference = tally
        .get(groups.first().copied().unwrap_or_default())
        .ok_or_else(|| ExperimentError::RaggedData(format!("no records for group {:?}", groups.first())))?;
    let strata: Vec<u32> = reference.keys().copied().collect();
    let trials: Vec<u64> = reference.values().map(|v| v.0).collect();
    let mut cells = Vec::with_capacity(groups.len());
    for g in groups {
        let per_level = tally
            .get(g)
            .ok_or_else(|| ExperimentError::RaggedData(format!("no records for group {g:?}")))?;
        if per_level.keys().copied().collect::<Vec<_>>() != strata {
            return Err(ExperimentError::RaggedData(format!("group {g:?} covers different offer levels")));
        }
        if per_level.values().map(|v| v.0).collect::<Vec<_>>() != trials {
            return Err(ExperimentError::RaggedData(format!("group {g:?} has a different number of trials")));
        }
        cells.push(per_level.values().map(|v| v.1).collect());
    }
    Ok(ContingencyTable::new(
        groups.iter().map(|g| g.to_string()).collect(),
        strata,
        cells,
    )?)
}
