use serde::{Deserialize, Serialize};

use super::{chi_square_upper_tail, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    pub expected: Vec<Vec<f64>>,
}

/// Pearson chi-square test of independence on an R×C count matrix, without
/// continuity correction.
pub fn chi_square_independence(table: &[Vec<u64>]) -> Result<ChiSquareResult, StatsError> {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    if rows < 2 || cols < 2 || table.iter().any(|r| r.len() != cols) {
        return Err(StatsError::InvalidTable(format!(
            "need a rectangular table of at least 2×2, got {rows} row(s)"
        )));
    }
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_sums: Vec<f64> = (0..cols)
        .map(|j| table.iter().map(|r| r[j]).sum::<u64>() as f64)
        .collect();
    if let Some(i) = row_sums.iter().position(|&s| s == 0.0) {
        return Err(StatsError::ZeroMargin(format!("row {i}")));
    }
    if let Some(j) = col_sums.iter().position(|&s| s == 0.0) {
        return Err(StatsError::ZeroMargin(format!("column {j}")));
    }
    let n: f64 = row_sums.iter().sum();
    let expected: Vec<Vec<f64>> = row_sums
        .iter()
        .map(|r| col_sums.iter().map(|c| r * c / n).collect())
        .collect();
    let statistic = table
        .iter()
        .zip(&expected)
        .flat_map(|(obs, exp)| obs.iter().zip(exp))
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum::<f64>();
    let df = ((rows - 1) * (cols - 1)) as u32;
    Ok(ChiSquareResult {
        statistic,
        df,
        p_value: chi_square_upper_tail(statistic, df),
        expected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_table_is_zero() {
        let r = chi_square_independence(&[vec![10, 10], vec![10, 10]]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.df, 1);
    }

    #[test]
    fn zero_margin_rejected() {
        assert!(matches!(
            chi_square_independence(&[vec![0, 3], vec![0, 4]]),
            Err(StatsError::ZeroMargin(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn two_by_six_matches_textbook(accepts in prop::collection::vec(1u64..100, 6)) {
            // shortcut formula for 2×C tables: X² = n²/(R1 R2) Σ (a_j - R1 c_j/n)² / c_j
            let table = vec![accepts.clone(), accepts.iter().map(|a| 100 - a + 1).collect::<Vec<_>>()];
            let r1: f64 = table[0].iter().sum::<u64>() as f64;
            let r2: f64 = table[1].iter().sum::<u64>() as f64;
            let n = r1 + r2;
            let direct: f64 = (0..6).map(|j| {
                let c = (table[0][j] + table[1][j]) as f64;
                let dev = table[0][j] as f64 - r1 * c / n;
                dev * dev / c
            }).sum::<f64>() * n * n / (r1 * r2);
            let got = chi_square_independence(&table).unwrap();
            prop_assert!((got.statistic - direct).abs() <= 1e-9 * direct.max(1.0));
            prop_assert_eq!(got.df, 5);
            prop_assert!((0.0..=1.0).contains(&got.p_value));
        }
    }
}
