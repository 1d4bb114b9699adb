//! Selection and ranking metrics.

use crate::error::{Error, Result};

/// Width of the Gaussian speed-up accuracy, as a fraction of the target.
pub const OS_SIGMA_FRACTION: f64 = 0.0838;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn harmonic_mean(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

/// Whether 1-based frame `f` lies in any inclusive `[start, end]` range.
pub fn in_segments(f: usize, segments: &[(usize, usize)]) -> bool {
    segments.iter().any(|&(s, e)| s <= f && f <= e)
}

/// Precision, recall and F1 of `selected` frames against the frames inside
/// `segments`. With no relevant frames, recall is 1 and precision counts
/// nothing as relevant.
pub fn precision_recall_f1(selected: &[usize], segments: &[(usize, usize)], num_frames: usize) -> Result<Prf> {
    if selected.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("selected frames must strictly increase".into()));
    }
    if let Some(&f) = selected.iter().find(|&&f| f == 0 || f > num_frames) {
        return Err(Error::InvalidArgument(format!("selected frame {f} outside [1, {num_frames}]")));
    }
    let relevant: usize = segments
        .iter()
        .map(|&(s, e)| e.min(num_frames).saturating_sub(s.max(1)) + 1)
        .sum();
    let hits = selected.iter().filter(|&&f| in_segments(f, segments)).count();
    let precision = if selected.is_empty() {
        0.0
    } else {
        hits as f64 / selected.len() as f64
    };
    let recall = if relevant == 0 {
        1.0
    } else {
        hits as f64 / relevant as f64
    };
    Ok(Prf {
        precision,
        recall,
        f1: if hits == 0 { 0.0 } else { harmonic_mean(precision, recall) },
    })
}

/// `F / T`.
pub fn output_speedup(num_frames: usize, selected: usize) -> Result<f64> {
    if selected == 0 {
        return Err(Error::InvalidArgument("output speed-up needs at least one selected frame".into()));
    }
    Ok(num_frames as f64 / selected as f64)
}

/// Gaussian accuracy of an achieved speed-up against the target.
pub fn speedup_accuracy(achieved: f64, target: f64) -> f64 {
    let sigma = OS_SIGMA_FRACTION * target;
    (-0.5 * ((achieved - target) / sigma).powi(2)).exp()
}

/// Harmonic mean of F1 (in [0, 1]) and the speed-up accuracy.
pub fn overall_performance(f1: f64, achieved: f64, target: f64) -> f64 {
    harmonic_mean(f1, speedup_accuracy(achieved, target))
}

/// Area under the ROC curve via the Mann–Whitney statistic, ties counted
/// as one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::dim("roc labels", scores.len(), labels.len()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("roc scores".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::InvalidArgument("roc_auc needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // doubled ranks keep tied averages integral
    let mut rank_sum2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg2 = (i + 1 + j + 1) as u128;
        for &k in &order[i..=j] {
            if labels[k] {
                rank_sum2 += avg2;
            }
        }
        i = j + 1;
    }
    let (p, n) = (pos as u128, neg as u128);
    let u2 = rank_sum2 - p * (p + 1);
    Ok(u2 as f64 / (2 * p * n) as f64)
}

/// Mean reciprocal rank of 1-based ranks.
pub fn mrr(ranks: &[usize]) -> Result<f64> {
    if ranks.is_empty() {
        return Err(Error::Empty("rank list"));
    }
    if ranks.contains(&0) {
        return Err(Error::InvalidArgument("ranks are 1-based".into()));
    }
    Ok(ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len() as f64)
}

/// `T` frames spread evenly over `[1, F]`, first and last included.
pub fn uniform_selection(num_frames: usize, count: usize) -> Vec<usize> {
    let count = count.clamp(1, num_frames.max(1));
    if count == 1 {
        return vec![1];
    }
    (0..count)
        .map(|i| 1 + (i * (num_frames - 1) + (count - 1) / 2) / (count - 1))
        .collect()
}

/// Frames `1, 1 + s, 1 + 2s, ...` up to `F`.
pub fn uniform_skip(num_frames: usize, skip: usize) -> Vec<usize> {
    (1..=num_frames).step_by(skip.max(1)).collect()
}
