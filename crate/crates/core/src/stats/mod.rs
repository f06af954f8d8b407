//! Stratified categorical statistics: generalized Cochran–Mantel–Haenszel,
//! Pearson chi-square, two-sided Fisher exact, Benjamini–Hochberg and the
//! special functions behind their p-values. Everything here is a pure function.

mod bh;
mod chisq;
mod cmh;
mod fisher;
mod format;
mod linalg;
mod special;
mod table;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bh::{bh_adjust, BhAdjustment, DEFAULT_ALPHA};
pub use chisq::{chi_square_independence, ChiSquareResult};
pub use cmh::{cmh_general, CmhResult};
pub use fisher::{fisher_exact_2x2, FisherResult};
pub use format::{format_p_value, format_statistic};
pub use special::{chi_square_upper_tail, gamma_q, ln_factorial, ln_gamma};
pub use table::{aggregate_low_offers, Cell, ContingencyTable, GroupCounts, TABLE_FORMAT_HEADER};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("every stratum has zero variance; the statistic is undefined")]
    DegenerateTable,
    #[error("covariance matrix has no usable generalized inverse")]
    SingularCovariance,
    #[error("zero margin in {0}")]
    ZeroMargin(String),
    #[error("p-value {0} is outside [0, 1]")]
    InvalidPValue(f64),
    #[error("offer level {0}% is not a stratum of the table")]
    UnknownStratum(u32),
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("table line {line}, column {column}: {message}")]
    TableParse {
        line: usize,
        column: usize,
        message: String,
    },
}

/// One Fisher comparison between two groups after BH adjustment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub first: String,
    pub second: String,
    pub p_value: f64,
    pub adjusted: f64,
    pub significant: bool,
}

/// Fisher tests for every pair `i < j` in group order, BH-adjusted together.
pub fn pairwise_fisher(counts: &GroupCounts, alpha: f64) -> Result<Vec<PairwiseComparison>, StatsError> {
    let n = counts.groups.len();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (x, y) = (counts.cells[i], counts.cells[j]);
            pairs.push((i, j, fisher_exact_2x2(x.accept, x.reject, y.accept, y.reject).p_value));
        }
    }
    let raw: Vec<f64> = pairs.iter().map(|p| p.2).collect();
    let bh = bh_adjust(&raw, alpha)?;
    Ok(pairs
        .into_iter()
        .enumerate()
        .map(|(k, (i, j, p))| PairwiseComparison {
            first: counts.groups[i].clone(),
            second: counts.groups[j].clone(),
            p_value: p,
            adjusted: bh.adjusted[k],
            significant: bh.significant[k],
        })
        .collect())
}

/// The accept/reject cells of one stratum as a [`GroupCounts`].
pub fn stratum_counts(table: &ContingencyTable, level: u32) -> Result<GroupCounts, StatsError> {
    let k = table.stratum_index(level).ok_or(StatsError::UnknownStratum(level))?;
    Ok(GroupCounts {
        groups: table.groups().to_vec(),
        cells: (0..table.groups().len()).map(|g| table.cell(g, k)).collect(),
    })
}
