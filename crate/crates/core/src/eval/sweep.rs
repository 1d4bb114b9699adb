//! Speed-up sweeps over a set of targets.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::report::{read_rows, write_rows};
use crate::env::{rollout, EpisodeTrace, Policy, RolloutConfig, VideoEmbeddings};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub s_star: usize,
    /// Mean of `OS - S*`.
    pub mean_error: f64,
    pub mean_abs_error: f64,
    pub videos: usize,
}

/// Greedy rollouts of `policy` on every video at every target.
pub fn sweep_traces<P: Policy + ?Sized>(
    videos: &[VideoEmbeddings<'_>],
    policy: &P,
    targets: &[usize],
) -> Result<Vec<Vec<EpisodeTrace>>> {
    if videos.is_empty() {
        return Err(Error::Empty("sweep videos"));
    }
    // greedy selection never draws from the generator
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    targets
        .iter()
        .map(|&s| {
            videos
                .iter()
                .map(|v| rollout(v, policy, &RolloutConfig::greedy(s), &mut rng))
                .collect()
        })
        .collect()
}

pub fn summarize(traces: &[Vec<EpisodeTrace>]) -> Vec<SweepRow> {
    traces
        .iter()
        .filter(|t| !t.is_empty())
        .map(|t| {
            let n = t.len() as f64;
            let errs: Vec<f64> = t.iter().map(|e| e.terminal_speedup - e.target as f64).collect();
            SweepRow {
                s_star: t[0].target,
                mean_error: errs.iter().sum::<f64>() / n,
                mean_abs_error: errs.iter().map(|e| e.abs()).sum::<f64>() / n,
                videos: t.len(),
            }
        })
        .collect()
}

pub fn speedup_sweep<P: Policy + ?Sized>(
    videos: &[VideoEmbeddings<'_>],
    policy: &P,
    targets: &[usize],
) -> Result<Vec<SweepRow>> {
    Ok(summarize(&sweep_traces(videos, policy, targets)?))
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    write_rows(path, rows)
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    read_rows(path)
}

/// Parses `a..b` (inclusive) or a comma-separated list.
pub fn parse_targets(spec: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidArgument(format!("cannot parse target list `{spec}`"));
    let out: Vec<usize> = if let Some((a, b)) = spec.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        (a..=b).collect()
    } else {
        spec.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?
    };
    if out.is_empty() || out.contains(&0) {
        return Err(bad());
    }
    Ok(out)
}

/// Mean skip taken from frames inside and outside the relevant segments.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SkipSplit {
    pub inside_sum: f64,
    pub inside_count: usize,
    pub outside_sum: f64,
    pub outside_count: usize,
}

impl SkipSplit {
    /// Accumulates the gaps between consecutive selected frames, keyed on
    /// the frame the jump starts from.
    pub fn add(&mut self, trace: &EpisodeTrace, relevant: impl Fn(usize) -> bool) {
        for w in trace.selected_frames.windows(2) {
            let gap = (w[1] - w[0]) as f64;
            if relevant(w[0]) {
                self.inside_sum += gap;
                self.inside_count += 1;
            } else {
                self.outside_sum += gap;
                self.outside_count += 1;
            }
        }
    }

    pub fn inside(&self) -> f64 {
        self.inside_sum / self.inside_count.max(1) as f64
    }

    pub fn outside(&self) -> f64 {
        self.outside_sum / self.outside_count.max(1) as f64
    }
}
