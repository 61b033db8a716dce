use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spike::{distance, SpikeTrain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationMetrics {
    pub jaccard: f64,
    pub precision: f64,
    pub recall: f64,
    pub match_radius: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl LocalizationMetrics {
    pub fn is_perfect(&self) -> bool {
        self.jaccard == 1.0 && self.precision == 1.0 && self.recall == 1.0
    }
}

/// Greedy matching: repeatedly pairs the closest unmatched (truth, estimate) couple within
/// `match_radius`, then scores the pairs as true positives.
pub fn match_and_score(
    truth: &SpikeTrain,
    estimate: &SpikeTrain,
    match_radius: f64,
) -> Result<LocalizationMetrics> {
    if !(match_radius > 0.0) {
        return Err(Error::Precondition("match_radius must be > 0".into()));
    }
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (i, t) in truth.iter().enumerate() {
        for (j, e) in estimate.iter().enumerate() {
            let d = distance(&t.position, &e.position);
            if d <= match_radius {
                candidates.push((d, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut truth_used = vec![false; truth.len()];
    let mut est_used = vec![false; estimate.len()];
    let mut tp = 0;
    for (_, i, j) in candidates {
        if !truth_used[i] && !est_used[j] {
            truth_used[i] = true;
            est_used[j] = true;
            tp += 1;
        }
    }
    let fp = estimate.len() - tp;
    let fn_ = truth.len() - tp;
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            1.0
        } else {
            num as f64 / den as f64
        }
    };
    Ok(LocalizationMetrics {
        jaccard: ratio(tp, tp + fp + fn_),
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fn_),
        match_radius,
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(xs: &[f64]) -> SpikeTrain {
        let pos: Vec<Vec<f64>> = xs.iter().map(|x| vec![*x]).collect();
        SpikeTrain::from_parts(1, &vec![1.0; xs.len()], &pos).unwrap()
    }

    #[test]
    fn counting_examples() {
        let t = line(&[0.0, 1.0]);
        let m = match_and_score(&t, &t, 0.1).unwrap();
        assert!(m.is_perfect());

        let m = match_and_score(&t, &line(&[1.0]), 0.1).unwrap();
        assert_eq!((m.precision, m.recall, m.jaccard), (1.0, 0.5, 0.5));

        let m = match_and_score(&t, &line(&[0.0, 1.0, 5.0]), 0.1).unwrap();
        assert_eq!(m.recall, 1.0);
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.jaccard - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_conventions() {
        let m = match_and_score(&line(&[]), &line(&[]), 0.1).unwrap();
        assert!(m.is_perfect());
        let m = match_and_score(&line(&[0.3]), &line(&[]), 0.1).unwrap();
        assert_eq!((m.precision, m.recall, m.jaccard), (1.0, 0.0, 0.0));
        assert!(match_and_score(&line(&[]), &line(&[]), 0.0).is_err());
    }

    #[test]
    fn greedy_takes_globally_closest_pair_first() {
        // estimate 0.45 is closest to truth 0.5; truth 0.0 then has nothing within reach
        let m = match_and_score(&line(&[0.0, 0.5]), &line(&[0.45]), 0.5).unwrap();
        assert_eq!(m.true_positives, 1);
        assert_eq!(m.false_negatives, 1);
    }

    proptest! {
        #[test]
        fn jaccard_never_exceeds_precision_or_recall(
            t in proptest::collection::vec(0.0f64..10.0, 0..8),
            e in proptest::collection::vec(0.0f64..10.0, 0..8),
            r in 0.01f64..2.0,
        ) {
            let m = match_and_score(&line(&t), &line(&e), r).unwrap();
            prop_assert!(m.jaccard <= m.precision.min(m.recall) + 1e-15);
            prop_assert!(m.true_positives <= t.len().min(e.len()));
        }
    }
}
