use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use sca_core::stats::{
    aggregate_low_offers, bh_adjust, chi_square_independence, cmh_general, format_p_value, format_statistic,
    pairwise_fisher, stratum_counts, ContingencyTable, GroupCounts, StatsError, DEFAULT_ALPHA,
};

use crate::golden::{self, Check};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestArg {
    /// Generalized Cochran-Mantel-Haenszel across all offer levels.
    Cmh,
    /// Chi-square independence on one stratum or an aggregate.
    Chisq,
    /// Fisher exact tests for every pair of groups, BH-adjusted.
    FisherPairwise,
    /// Benjamini-Hochberg adjustment of a list of p-values.
    Bh,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long = "test", value_enum)]
    pub test: TestArg,
    /// Offer level whose cells form the group table.
    #[arg(long, conflicts_with = "aggregate")]
    pub stratum: Option<u32>,
    /// Comma-separated offer levels averaged into one group table.
    #[arg(long, value_delimiter = ',')]
    pub aggregate: Option<Vec<u32>>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Compare with the published values for the bundled table this input matches.
    #[arg(long)]
    pub golden: bool,
    /// Count table (or p-value list for bh); `-` reads standard input.
    pub input: PathBuf,
}

fn read_input(path: &PathBuf) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        Ok(text)
    } else {
        std::fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
    }
}

fn stats_error(path: &PathBuf, e: StatsError) -> CliError {
    match e {
        StatsError::TableParse { line, column, message } => {
            CliError::Runtime(format!("{}:{line}:{column}: {message}", path.display()))
        }
        other => CliError::Runtime(other.to_string()),
    }
}

fn group_counts(args: &AnalyzeArgs, table: &ContingencyTable) -> Result<GroupCounts, CliError> {
    if let Some(level) = args.stratum {
        return stratum_counts(table, level).map_err(|e| CliError::Usage(e.to_string()));
    }
    if let Some(levels) = &args.aggregate {
        let mut totals = Vec::new();
        for &level in levels {
            let k = table
                .stratum_index(level)
                .ok_or_else(|| CliError::Usage(format!("the table has no {level}% column")))?;
            totals.extend((0..table.groups().len()).map(|g| table.cell(g, k).total()));
        }
        let denominator = totals[0];
        if totals.iter().any(|&t| t != denominator) {
            return Err(CliError::Usage("--aggregate needs every selected cell to have the same number of trials".into()));
        }
        return aggregate_low_offers(table, levels, denominator).map_err(|e| CliError::Usage(e.to_string()));
    }
    match table.strata() {
        [only] => stratum_counts(table, *only).map_err(|e| CliError::Usage(e.to_string())),
        strata => Err(CliError::Usage(format!(
            "the table has {} offer levels; pick one with --stratum or several with --aggregate",
            strata.len()
        ))),
    }
}

/// `label<TAB>p` or bare `p` per line; blank lines and `#` comments skipped.
fn parse_p_values(text: &str, path: &PathBuf) -> Result<(Vec<String>, Vec<f64>), CliError> {
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (label, value, column) = match line.rsplit_once('\t') {
            Some((l, v)) => (l.trim().to_string(), v.trim(), l.len() + 2),
            None => ((values.len() + 1).to_string(), line, 1),
        };
        let p: f64 = value
            .parse()
            .ok()
            .filter(|p: &f64| (0.0..=1.0).contains(p))
            .ok_or_else(|| CliError::Runtime(format!("{}:{}:{column}: {value:?} is not a p-value", path.display(), i + 1)))?;
        labels.push(label);
        values.push(p);
    }
    if values.is_empty() {
        return Err(CliError::Runtime(format!("{}:1:1: no p-values", path.display())));
    }
    Ok((labels, values))
}

fn report_golden(checks: Option<Vec<Check>>, out: &mut dyn Write) -> Result<(), CliError> {
    let Some(checks) = checks.filter(|c| !c.is_empty()) else {
        return Err(CliError::Runtime("the input matches no bundled table with published values for this test".into()));
    };
    for c in &checks {
        writeln!(out, "{c}")?;
    }
    let breaches = checks.iter().filter(|c| !c.pass()).count();
    writeln!(out, "golden: {} of {} checks within tolerance", checks.len() - breaches, checks.len())?;
    if breaches > 0 {
        return Err(CliError::Runtime(format!("{breaches} golden check(s) out of tolerance")));
    }
    Ok(())
}

pub fn execute(args: AnalyzeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::Usage(format!("--alpha {} must lie strictly between 0 and 1", args.alpha)));
    }
    let text = read_input(&args.input)?;
    if args.test == TestArg::Bh {
        if args.golden {
            return Err(CliError::Usage("--golden applies to cmh, chisq and fisher-pairwise".into()));
        }
        let (labels, values) = parse_p_values(&text, &args.input)?;
        let bh = bh_adjust(&values, args.alpha).map_err(CliError::runtime)?;
        writeln!(out, "label\tp\tadjusted\tsignificant")?;
        for (i, label) in labels.iter().enumerate() {
            writeln!(
                out,
                "{label}\t{}\t{}\t{}",
                format_p_value(bh.raw[i]),
                format_p_value(bh.adjusted[i]),
                if bh.significant[i] { "yes" } else { "no" }
            )?;
        }
        return Ok(());
    }

    let table = ContingencyTable::parse(&text).map_err(|e| stats_error(&args.input, e))?;
    match args.test {
        TestArg::Cmh => {
            if args.stratum.is_some() || args.aggregate.is_some() {
                return Err(CliError::Usage("cmh uses every offer level; drop --stratum/--aggregate".into()));
            }
            let r = cmh_general(&table).map_err(CliError::runtime)?;
            writeln!(out, "M^2 = {}, df = {}, p = {}", format_statistic(r.statistic), r.df, format_p_value(r.p_value))?;
            if r.skipped_strata > 0 {
                writeln!(out, "note: {} offer level(s) without variation were skipped", r.skipped_strata)?;
            }
            if args.golden {
                report_golden(golden::identify_table(&table).map(|f| golden::cmh_checks(f, &r)), out)?;
            }
        }
        TestArg::Chisq => {
            let counts = group_counts(&args, &table)?;
            let r = chi_square_independence(&counts.matrix()).map_err(CliError::runtime)?;
            writeln!(out, "X^2 = {}, df = {}, p = {}", format_statistic(r.statistic), r.df, format_p_value(r.p_value))?;
            if args.golden {
                report_golden(golden::identify_counts(&counts).map(|f| golden::chisq_checks(f, &r)), out)?;
            }
        }
        TestArg::FisherPairwise => {
            let counts = group_counts(&args, &table)?;
            let rows = pairwise_fisher(&counts, args.alpha).map_err(CliError::runtime)?;
            writeln!(out, "first\tsecond\tp\tadjusted\tsignificant")?;
            for r in &rows {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}",
                    r.first,
                    r.second,
                    format_p_value(r.p_value),
                    format_p_value(r.adjusted),
                    if r.significant { "yes" } else { "no" }
                )?;
            }
            if args.golden {
                report_golden(golden::identify_counts(&counts).map(|f| golden::pairwise_checks(f, &rows)), out)?;
            }
        }
        TestArg::Bh => unreachable!("handled above"),
    }
    Ok(())
}
