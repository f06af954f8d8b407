//! Group × decision × offer-level count tables and their plain-text form.
//!
//! ```text
//! # sca-table v1
//! # total: 100
//! group	0%	10%	20%
//! Ache	3	2	1
//! Orma	11	3	4
//! ```
//!
//! Cells hold the accept count. With a `# total: N` line every cell has N
//! trials; otherwise (or to override) a cell is written `accept/total`.
//! Columns are separated by tabs, or by runs of spaces when a line has no tab.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::StatsError;

pub const TABLE_FORMAT_HEADER: &str = "# sca-table v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub accept: u64,
    pub reject: u64,
}

impl Cell {
    pub fn new(accept: u64, reject: u64) -> Self {
        Self { accept, reject }
    }

    pub fn of_total(accept: u64, total: u64) -> Result<Self, StatsError> {
        if accept > total {
            return Err(StatsError::InvalidTable(format!(
                "accept count {accept} exceeds total {total}"
            )));
        }
        Ok(Self::new(accept, total - accept))
    }

    pub fn total(&self) -> u64 {
        self.accept + self.reject
    }
}

/// Accept/reject counts for G groups across K offer levels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTable")]
pub struct ContingencyTable {
    groups: Vec<String>,
    strata: Vec<u32>,
    /// `cells[g][k]`
    cells: Vec<Vec<Cell>>,
}

#[derive(Deserialize)]
struct RawTable {
    groups: Vec<String>,
    strata: Vec<u32>,
    cells: Vec<Vec<Cell>>,
}

impl TryFrom<RawTable> for ContingencyTable {
    type Error = StatsError;
    fn try_from(raw: RawTable) -> Result<Self, StatsError> {
        ContingencyTable::new(raw.groups, raw.strata, raw.cells)
    }
}

impl ContingencyTable {
    pub fn new(
        groups: Vec<String>,
        strata: Vec<u32>,
        cells: Vec<Vec<Cell>>,
    ) -> Result<Self, StatsError> {
        if groups.len() < 2 {
            return Err(StatsError::InvalidTable("at least two groups are required".into()));
        }
        if strata.is_empty() {
            return Err(StatsError::InvalidTable("at least one stratum is required".into()));
        }
        if let Some(w) = strata.windows(2).find(|w| w[0] >= w[1]) {
            return Err(StatsError::InvalidTable(format!(
                "strata must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        for (i, g) in groups.iter().enumerate() {
            if g.is_empty() || g.chars().any(char::is_whitespace) || g.starts_with('#') {
                return Err(StatsError::InvalidTable(format!("bad group label {g:?}")));
            }
            if groups[..i].contains(g) {
                return Err(StatsError::InvalidTable(format!("duplicate group {g:?}")));
            }
        }
        if cells.len() != groups.len() || cells.iter().any(|row| row.len() != strata.len()) {
            return Err(StatsError::InvalidTable(format!(
                "expected {}×{} cells",
                groups.len(),
                strata.len()
            )));
        }
        Ok(Self {
            groups,
            strata,
            cells,
        })
    }

    /// Every cell has `total` trials.
    pub fn from_accepts(
        groups: &[&str],
        strata: &[u32],
        accepts: &[&[u64]],
        total: u64,
    ) -> Result<Self, StatsError> {
        let cells = accepts
            .iter()
            .map(|row| row.iter().map(|&a| Cell::of_total(a, total)).collect())
            .collect::<Result<Vec<Vec<Cell>>, _>>()?;
        Self::new(
            groups.iter().map(|g| g.to_string()).collect(),
            strata.to_vec(),
            cells,
        )
    }

    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    pub fn strata(&self) -> &[u32] {
        &self.strata
    }

    pub fn cells(&self) -> &[Vec<Cell>] {
        &self.cells
    }

    pub fn cell(&self, group: usize, stratum: usize) -> Cell {
        self.cells[group][stratum]
    }

    pub fn accepts(&self, group: usize) -> Vec<u64> {
        self.cells[group].iter().map(|c| c.accept).collect()
    }

    pub fn stratum_index(&self, level: u32) -> Option<usize> {
        self.strata.iter().position(|&s| s == level)
    }

    /// Reorders strata with `order[k]` giving the old index of new stratum k.
    /// Labels are kept in increasing order, so only the counts move.
    pub fn permute_strata(&self, order: &[usize]) -> Self {
        Self {
            groups: self.groups.clone(),
            strata: self.strata.clone(),
            cells: self
                .cells
                .iter()
                .map(|row| order.iter().map(|&k| row[k]).collect())
                .collect(),
        }
    }

    /// Reorders groups with `order[g]` giving the old index of new group g.
    pub fn permute_groups(&self, order: &[usize]) -> Self {
        Self {
            groups: order.iter().map(|&g| self.groups[g].clone()).collect(),
            strata: self.strata.clone(),
            cells: order.iter().map(|&g| self.cells[g].clone()).collect(),
        }
    }

    /// The single 2×G table of one stratum as rows `[accepts, rejects]`.
    pub fn stratum_matrix(&self, stratum: usize) -> Vec<Vec<u64>> {
        vec![
            self.cells.iter().map(|r| r[stratum].accept).collect(),
            self.cells.iter().map(|r| r[stratum].reject).collect(),
        ]
    }

    pub fn render(&self) -> String {
        let uniform = self.cells[0][0].total();
        let all_uniform = self.cells.iter().flatten().all(|c| c.total() == uniform);
        let mut out = String::new();
        out.push_str(TABLE_FORMAT_HEADER);
        out.push('\n');
        if all_uniform {
            let _ = writeln!(out, "# total: {uniform}");
        }
        out.push_str("group");
        for s in &self.strata {
            let _ = write!(out, "\t{s}%");
        }
        out.push('\n');
        for (g, row) in self.groups.iter().zip(&self.cells) {
            out.push_str(g);
            for c in row {
                if all_uniform {
                    let _ = write!(out, "\t{}", c.accept);
                } else {
                    let _ = write!(out, "\t{}/{}", c.accept, c.total());
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, StatsError> {
        let mut total: Option<u64> = None;
        let mut strata: Option<Vec<u32>> = None;
        let mut groups = Vec::new();
        let mut cells = Vec::new();
        let mut seen_format = false;
        for (i, raw_line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw_line.trim_end();
            if line.trim().is_empty() {
                continue;
            }
            if let Some(comment) = line.trim_start().strip_prefix('#') {
                let comment = comment.trim();
                if comment == TABLE_FORMAT_HEADER.trim_start_matches('#').trim() {
                    seen_format = true;
                } else if let Some(v) = comment.strip_prefix("total:") {
                    total = Some(v.trim().parse().map_err(|_| {
                        parse_error(line_no, 1, format!("bad total {:?}", v.trim()))
                    })?);
                }
                continue;
            }
            let fields = split_fields(line);
            match &strata {
                None => {
                    let levels = fields[1..]
                        .iter()
                        .enumerate()
                        .map(|(j, f)| parse_level(f).ok_or_else(|| {
                            parse_error(line_no, j + 2, format!("bad offer level {f:?}"))
                        }))
                        .collect::<Result<Vec<_>, _>>()?;
                    if levels.is_empty() {
                        return Err(parse_error(line_no, 1, "header row has no offer levels".into()));
                    }
                    strata = Some(levels);
                }
                Some(levels) => {
                    if fields.len() != levels.len() + 1 {
                        return Err(parse_error(
                            line_no,
                            fields.len().min(levels.len() + 1) + 1,
                            format!("expected {} counts, found {}", levels.len(), fields.len() - 1),
                        ));
                    }
                    groups.push(fields[0].to_string());
                    let row = fields[1..]
                        .iter()
                        .enumerate()
                        .map(|(j, f)| parse_cell(f, total).map_err(|m| parse_error(line_no, j + 2, m)))
                        .collect::<Result<Vec<_>, _>>()?;
                    cells.push(row);
                }
            }
        }
        if !seen_format {
            return Err(parse_error(1, 1, format!("missing {TABLE_FORMAT_HEADER:?} line")));
        }
        let strata = strata.ok_or_else(|| parse_error(1, 1, "no header row".into()))?;
        Self::new(groups, strata, cells)
    }
}

fn parse_error(line: usize, column: usize, message: String) -> StatsError {
    StatsError::TableParse {
        line,
        column,
        message,
    }
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains('\t') {
        line.split('\t').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

fn parse_level(field: &str) -> Option<u32> {
    let v: u32 = field.trim_end_matches('%').parse().ok()?;
    (v <= 100).then_some(v)
}

fn parse_cell(field: &str, total: Option<u64>) -> Result<Cell, String> {
    let (accept, n) = match field.split_once('/') {
        Some((a, n)) => (a, Some(n)),
        None => (field, None),
    };
    let accept: u64 = accept
        .parse()
        .map_err(|_| format!("bad count {field:?}"))?;
    let n = match n {
        Some(n) => n.parse().map_err(|_| format!("bad total in {field:?}"))?,
        None => total.ok_or_else(|| format!("cell {field:?} has no total and no '# total:' line"))?,
    };
    Cell::of_total(accept, n).map_err(|e| e.to_string())
}

/// Two-row table of one accept/reject cell per group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCounts {
    pub groups: Vec<String>,
    pub cells: Vec<Cell>,
}

impl GroupCounts {
    /// Rows `[accepts, rejects]`, columns in group order.
    pub fn matrix(&self) -> Vec<Vec<u64>> {
        vec![
            self.cells.iter().map(|c| c.accept).collect(),
            self.cells.iter().map(|c| c.reject).collect(),
        ]
    }
}

/// Per group, the mean accept count over `levels` rounded half up, out of `denominator`.
pub fn aggregate_low_offers(
    table: &ContingencyTable,
    levels: &[u32],
    denominator: u64,
) -> Result<GroupCounts, StatsError> {
    if levels.is_empty() {
        return Err(StatsError::InvalidTable("no offer levels selected".into()));
    }
    let idx = levels
        .iter()
        .map(|&l| table.stratum_index(l).ok_or(StatsError::UnknownStratum(l)))
        .collect::<Result<Vec<_>, _>>()?;
    let len = idx.len() as u64;
    let cells = (0..table.groups().len())
        .map(|g| {
            let sum: u64 = idx.iter().map(|&k| table.cell(g, k).accept).sum();
            // round(sum/len) with halves rounded up, in integers
            let accept = (2 * sum + len) / (2 * len);
            Cell::of_total(accept, denominator)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GroupCounts {
        groups: table.groups().to_vec(),
        cells,
    })
}
