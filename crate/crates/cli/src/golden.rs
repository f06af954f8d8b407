//! Comparison of analysis results with the bundled published values.

use std::fmt;

use sca_core::fixtures::{self, PublishedComparison, PublishedTest};
use sca_core::stats::{ChiSquareResult, CmhResult, ContingencyTable, GroupCounts, PairwiseComparison};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixture {
    Dictator,
    Proposer,
    Responder,
    DictatorZero,
    ResponderLow,
}

impl Fixture {
    pub fn name(self) -> &'static str {
        match self {
            Fixture::Dictator => "dictator",
            Fixture::Proposer => "proposer",
            Fixture::Responder => "responder",
            Fixture::DictatorZero => "dictator_zero",
            Fixture::ResponderLow => "responder_low",
        }
    }
}

pub fn identify_table(table: &ContingencyTable) -> Option<Fixture> {
    [
        (Fixture::Dictator, fixtures::dictator_acceptance()),
        (Fixture::Proposer, fixtures::proposer_acceptance()),
        (Fixture::Responder, fixtures::responder_acceptance()),
    ]
    .into_iter()
    .find(|(_, t)| t == table)
    .map(|(f, _)| f)
}

pub fn identify_counts(counts: &GroupCounts) -> Option<Fixture> {
    [
        (Fixture::DictatorZero, fixtures::dictator_zero_offer()),
        (Fixture::ResponderLow, fixtures::responder_low_offer()),
    ]
    .into_iter()
    .find(|(_, c)| c == counts)
    .map(|(f, _)| f)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    Absolute(f64),
    Relative(f64),
    Exact,
}

impl fmt::Display for Tolerance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tolerance::Absolute(t) => write!(f, "±{t}"),
            Tolerance::Relative(t) => write!(f, "±{}% rel", t * 100.0),
            Tolerance::Exact => f.write_str("exact"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub expected: f64,
    pub actual: f64,
    pub tolerance: Tolerance,
}

impl Check {
    pub fn new(name: impl Into<String>, expected: f64, actual: f64, tolerance: Tolerance) -> Self {
        Self { name: name.into(), expected, actual, tolerance }
    }

    pub fn pass(&self) -> bool {
        let diff = (self.actual - self.expected).abs();
        match self.tolerance {
            Tolerance::Absolute(t) => diff <= t,
            Tolerance::Relative(t) => diff <= t * self.expected.abs(),
            Tolerance::Exact => diff == 0.0,
        }
    }
}

fn show(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:.4e}")
    } else {
        format!("{}", (x * 1e6).round() / 1e6)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: expected {}, got {} ({})",
            if self.pass() { "ok" } else { "BREACH" },
            self.name,
            show(self.expected),
            show(self.actual),
            self.tolerance
        )
    }
}

fn published_cmh(fixture: Fixture) -> Option<(PublishedTest, Option<Tolerance>)> {
    match fixture {
        Fixture::Dictator => Some((fixtures::DICTATOR_CMH, Some(Tolerance::Relative(0.005)))),
        Fixture::Proposer => Some((fixtures::PROPOSER_CMH, Some(Tolerance::Relative(0.01)))),
        Fixture::Responder => Some((fixtures::RESPONDER_CMH, None)),
        _ => None,
    }
}

/// Statistic within 0.01 and df 5; p-values only where a tolerance is published.
pub fn cmh_checks(fixture: Fixture, result: &CmhResult) -> Vec<Check> {
    let Some((published, p_tol)) = published_cmh(fixture) else { return Vec::new() };
    let mut checks = vec![
        Check::new("M^2", published.statistic, result.statistic, Tolerance::Absolute(0.01)),
        Check::new("df", 5.0, f64::from(result.df), Tolerance::Exact),
    ];
    if let Some(tol) = p_tol {
        checks.push(Check::new("p", published.p_value, result.p_value, tol));
    }
    checks
}

pub fn chisq_checks(fixture: Fixture, result: &ChiSquareResult) -> Vec<Check> {
    let published = match fixture {
        Fixture::DictatorZero => fixtures::DICTATOR_ZERO_CHI_SQUARE,
        Fixture::ResponderLow => fixtures::RESPONDER_LOW_CHI_SQUARE,
        _ => return Vec::new(),
    };
    vec![
        Check::new("X^2", published.statistic, result.statistic, Tolerance::Absolute(0.005)),
        Check::new("df", f64::from(published.df.unwrap_or(5)), f64::from(result.df), Tolerance::Exact),
        Check::new("p", published.p_value, result.p_value, Tolerance::Relative(0.005)),
    ]
}

/// Raw p-value tolerance: 5e-4 absolute from 1e-3 up, 10% relative below.
pub fn raw_p_tolerance(published: f64) -> Tolerance {
    if published >= 1e-3 {
        Tolerance::Absolute(5e-4)
    } else {
        Tolerance::Relative(0.10)
    }
}

/// Raw p-values and significance flags for every pair; adjusted p-values for
/// the responder table only, since the dictator column is not a standard BH
/// adjustment of its own raw values.
pub fn pairwise_checks(fixture: Fixture, rows: &[PairwiseComparison]) -> Vec<Check> {
    let (published, compare_adjusted): (&[PublishedComparison], bool) = match fixture {
        Fixture::DictatorZero => (&fixtures::DICTATOR_ZERO_PAIRWISE, false),
        Fixture::ResponderLow => (&fixtures::RESPONDER_LOW_PAIRWISE, true),
        _ => return Vec::new(),
    };
    let mut checks = Vec::new();
    for want in published {
        let pair = format!("{} vs {}", want.first, want.second);
        let Some(got) = rows.iter().find(|r| r.first == want.first && r.second == want.second) else {
            checks.push(Check::new(format!("{pair} present"), 1.0, 0.0, Tolerance::Exact));
            continue;
        };
        checks.push(Check::new(format!("{pair} p"), want.p_value, got.p_value, raw_p_tolerance(want.p_value)));
        if compare_adjusted {
            checks.push(Check::new(format!("{pair} adjusted"), want.adjusted, got.adjusted, Tolerance::Absolute(5e-4)));
        }
        checks.push(Check::new(
            format!("{pair} significant"),
            f64::from(u8::from(want.significant)),
            f64::from(u8::from(got.significant)),
            Tolerance::Exact,
        ));
    }
    checks
}
