use serde::{Deserialize, Serialize};

use super::StatsError;

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BhAdjustment {
    pub raw: Vec<f64>,
    pub adjusted: Vec<f64>,
    pub alpha: f64,
    pub significant: Vec<bool>,
}

/// Benjamini–Hochberg step-up adjustment, results in input order.
pub fn bh_adjust(pvals: &[f64], alpha: f64) -> Result<BhAdjustment, StatsError> {
    if let Some(&p) = pvals.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(StatsError::InvalidPValue(p));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidPValue(alpha));
    }
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| pvals[i].total_cmp(&pvals[j]));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for (rank0, &i) in order.iter().enumerate().rev() {
        let candidate = pvals[i] * (m as f64 / (rank0 + 1) as f64);
        running = running.min(candidate);
        adjusted[i] = running.min(1.0);
    }
    let significant = adjusted.iter().map(|&q| q <= alpha).collect();
    Ok(BhAdjustment {
        raw: pvals.to_vec(),
        adjusted,
        alpha,
        significant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct transcription of the definition: min over j with p_j ≥ p_i of p_j·m/rank_j.
    fn oracle(p: &[f64]) -> Vec<f64> {
        let m = p.len() as f64;
        p.iter()
            .map(|&pi| {
                p.iter()
                    .filter(|&&pj| pj >= pi)
                    .map(|&pj| {
                        let rank = p.iter().filter(|&&x| x <= pj).count() as f64;
                        pj * m / rank
                    })
                    .fold(1.0f64, f64::min)
            })
            .collect()
    }

    #[test]
    fn single_value_is_identity() {
        assert_eq!(bh_adjust(&[0.03], 0.05).unwrap().adjusted, [0.03]);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(matches!(bh_adjust(&[0.5, 1.2], 0.05), Err(StatsError::InvalidPValue(_))));
        assert!(bh_adjust(&[f64::NAN], 0.05).is_err());
    }

    #[test]
    fn repeated_adjustment_can_grow() {
        let once = bh_adjust(&[0.01, 0.04], 0.05).unwrap().adjusted;
        assert_eq!(once, [0.02, 0.04]);
        let twice = bh_adjust(&once, 0.05).unwrap().adjusted;
        assert_eq!(twice, [0.04, 0.04]);
    }

    proptest! {
        #[test]
        fn matches_definition(p in prop::collection::vec(0.0f64..=1.0, 1..40)) {
            let got = bh_adjust(&p, 0.05).unwrap().adjusted;
            let want = oracle(&p);
            for (g, w) in got.iter().zip(&want) {
                prop_assert!((g - w).abs() <= 1e-15 * w.max(1.0));
            }
        }

        #[test]
        fn adjusted_properties(p in prop::collection::vec(0.0f64..=1.0, 1..40), alpha in 0.001f64..0.5) {
            let r = bh_adjust(&p, alpha).unwrap();
            for i in 0..p.len() {
                prop_assert!(r.adjusted[i] >= p[i] && r.adjusted[i] <= 1.0);
                prop_assert_eq!(r.significant[i], r.adjusted[i] <= alpha);
                for j in 0..p.len() {
                    if p[i] <= p[j] {
                        prop_assert!(r.adjusted[i] <= r.adjusted[j]);
                    }
                    if p[i] == p[j] {
                        prop_assert_eq!(r.adjusted[i], r.adjusted[j]);
                    }
                }
            }
            let again = bh_adjust(&r.adjusted, alpha).unwrap();
            for (a, b) in again.adjusted.iter().zip(&r.adjusted) {
                prop_assert!(a >= b);
            }
        }
    }
}
