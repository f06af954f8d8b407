use serde::{Deserialize, Serialize};

use super::special::ln_factorial;

/// Relative slack when comparing point probabilities against the observed table.
const RELATIVE_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherResult {
    pub p_value: f64,
    /// `[[a, b], [c, d]]`
    pub table: [[u64; 2]; 2],
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Two-sided Fisher exact test on `[[a, b], [c, d]]`: the total probability of
/// tables with the observed margins that are no more likely than the observed one.
pub fn fisher_exact_2x2(a: u64, b: u64, c: u64, d: u64) -> FisherResult {
    let table = [[a, b], [c, d]];
    let row1 = a + b;
    let row2 = c + d;
    let col1 = a + c;
    let n = row1 + row2;
    if row1 == 0 || row2 == 0 || col1 == 0 || col1 == n {
        return FisherResult { p_value: 1.0, table };
    }
    let ln_denominator = ln_choose(n, col1);
    let ln_p = |x: u64| ln_choose(row1, x) + ln_choose(row2, col1 - x) - ln_denominator;
    let observed = ln_p(a);
    let threshold = observed + RELATIVE_SLACK.ln_1p();
    let lo = col1.saturating_sub(row2);
    let hi = col1.min(row1);
    let p: f64 = (lo..=hi)
        .map(ln_p)
        .filter(|&lp| lp <= threshold)
        .map(f64::exp)
        .sum();
    FisherResult {
        p_value: p.min(1.0),
        table,
    }
}
