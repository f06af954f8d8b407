use serde::{Deserialize, Serialize};

use super::linalg::{quadratic_form_inverse, Matrix};
use super::{chi_square_upper_tail, ContingencyTable, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmhResult {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    /// Strata skipped because every trial in them had the same outcome.
    pub skipped_strata: usize,
}

/// Generalized Cochran–Mantel–Haenszel general-association statistic for a
/// G×2×K table, without continuity correction.
pub fn cmh_general(table: &ContingencyTable) -> Result<CmhResult, StatsError> {
    let g = table.groups().len();
    let dim = g - 1;
    let mut deviation = vec![0.0; dim];
    let mut covariance: Matrix = vec![vec![0.0; dim]; dim];
    let mut used = 0usize;

    for k in 0..table.strata().len() {
        let group_totals: Vec<f64> = (0..g).map(|i| table.cell(i, k).total() as f64).collect();
        let n: f64 = group_totals.iter().sum();
        if n <= 1.0 {
            return Err(StatsError::InvalidTable(format!(
                "stratum {}% has {n} trial(s); at least 2 are required",
                table.strata()[k]
            )));
        }
        let accepts = (0..g).map(|i| table.cell(i, k).accept as f64).sum::<f64>();
        let rejects = n - accepts;
        if accepts == 0.0 || rejects == 0.0 {
            continue;
        }
        used += 1;
        let factor = accepts * rejects / (n * n * (n - 1.0));
        for i in 0..dim {
            let observed = table.cell(i, k).accept as f64;
            deviation[i] += observed - group_totals[i] * accepts / n;
            for j in 0..dim {
                let delta = if i == j { n * group_totals[i] } else { 0.0 };
                covariance[i][j] += factor * (delta - group_totals[i] * group_totals[j]);
            }
        }
    }
    if used == 0 {
        return Err(StatsError::DegenerateTable);
    }
    let statistic = quadratic_form_inverse(&covariance, &deviation)
        .ok_or(StatsError::SingularCovariance)?
        .max(0.0);
    let df = dim as u32;
    Ok(CmhResult {
        statistic,
        df,
        p_value: chi_square_upper_tail(statistic, df),
        skipped_strata: table.strata().len() - used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{chi_square_independence, Cell};
    use proptest::prelude::*;

    #[test]
    fn identical_groups_give_zero() {
        let t = ContingencyTable::from_accepts(
            &["A", "B", "C"],
            &[0, 50, 100],
            &[&[3, 40, 90], &[3, 40, 90], &[3, 40, 90]],
            100,
        )
        .unwrap();
        let r = cmh_general(&t).unwrap();
        assert!(r.statistic.abs() < 1e-12);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        assert_eq!(r.df, 2);
    }

    #[test]
    fn all_zero_variance_is_degenerate() {
        let t = ContingencyTable::from_accepts(&["A", "B"], &[0, 50], &[&[0, 10], &[0, 10]], 10).unwrap();
        assert!(matches!(cmh_general(&t), Err(StatsError::DegenerateTable)));
    }

    #[test]
    fn zero_variance_strata_are_skipped() {
        let base = ContingencyTable::from_accepts(&["A", "B"], &[10], &[&[3], &[7]], 10).unwrap();
        let padded = ContingencyTable::from_accepts(&["A", "B"], &[0, 10, 100], &[&[0, 3, 10], &[0, 7, 10]], 10).unwrap();
        let a = cmh_general(&base).unwrap();
        let b = cmh_general(&padded).unwrap();
        assert_eq!(a.statistic, b.statistic);
        assert_eq!(b.skipped_strata, 2);
    }

    #[test]
    fn two_by_two_single_stratum_hand_value() {
        // a=10,b=20 / c=30,d=40: n=100, E[a]=40*30/100=12, V=30*70*40*60/(100^2*99)
        let t = ContingencyTable::new(
            vec!["A".into(), "B".into()],
            vec![0],
            vec![vec![Cell::new(10, 20)], vec![Cell::new(30, 40)]],
        )
        .unwrap();
        let v = 30.0 * 70.0 * 40.0 * 60.0 / (100.0f64.powi(2) * 99.0);
        let expected = 4.0 / v;
        assert!((cmh_general(&t).unwrap().statistic - expected).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn single_stratum_is_scaled_pearson(a in 0u64..40, b in 0u64..40, c in 0u64..40, d in 0u64..40) {
            prop_assume!(a + b > 0 && c + d > 0 && a + c > 0 && b + d > 0);
            let t = ContingencyTable::new(
                vec!["A".into(), "B".into()],
                vec![0],
                vec![vec![Cell::new(a, b)], vec![Cell::new(c, d)]],
            ).unwrap();
            let n = (a + b + c + d) as f64;
            let pearson = chi_square_independence(&[vec![a, c], vec![b, d]]).unwrap().statistic;
            let m2 = cmh_general(&t).unwrap().statistic;
            prop_assert!((m2 - (n - 1.0) / n * pearson).abs() <= 1e-9 * pearson.max(1.0));
        }

        #[test]
        fn invariant_under_permutations(
            accepts in prop::collection::vec(prop::collection::vec(0u64..=20, 5), 4),
            strata_seed in any::<u64>(),
            group_seed in any::<u64>(),
        ) {
            let rows: Vec<&[u64]> = accepts.iter().map(Vec::as_slice).collect();
            let t = ContingencyTable::from_accepts(&["A", "B", "C", "D"], &[0, 25, 50, 75, 100], &rows, 20).unwrap();
            let Ok(base) = cmh_general(&t) else { return Ok(()); };
            let shuffle = |n: usize, seed: u64| {
                use rand::{seq::SliceRandom, SeedableRng};
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
                order
            };
            let s = cmh_general(&t.permute_strata(&shuffle(5, strata_seed))).unwrap();
            let g = cmh_general(&t.permute_groups(&shuffle(4, group_seed))).unwrap();
            prop_assert!(base.statistic >= 0.0);
            prop_assert!((0.0..=1.0).contains(&base.p_value));
            prop_assert!((s.statistic - base.statistic).abs() <= 1e-10 * base.statistic.max(1.0));
            prop_assert!((g.statistic - base.statistic).abs() <= 1e-10 * base.statistic.max(1.0));
        }

        #[test]
        fn proportional_groups_give_zero(
            per_stratum in prop::collection::vec(1u64..10, 1..6),
            sizes in prop::collection::vec(1u64..5, 2..5),
        ) {
            // group g has sizes[g]*10 trials with sizes[g]*p accepts: identical proportions
            let groups: Vec<String> = (0..sizes.len()).map(|i| format!("G{i}")).collect();
            let strata: Vec<u32> = (0..per_stratum.len() as u32).collect();
            let cells = sizes.iter().map(|&s| {
                per_stratum.iter().map(|&p| Cell::of_total(s * p, s * 10).unwrap()).collect()
            }).collect();
            let t = ContingencyTable::new(groups, strata, cells).unwrap();
            let r = cmh_general(&t).unwrap();
            prop_assert!(r.statistic.abs() < 1e-9);
        }
    }
}
