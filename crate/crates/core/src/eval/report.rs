//! Selections, per-video metric reports and their file formats.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{output_speedup, overall_performance, precision_recall_f1};
use crate::env::{EpisodeTrace, VideoSpec};
use crate::error::{Error, Result};

/// Frames chosen for one video at one target speed-up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Selection {
    pub video_id: String,
    pub s_star: usize,
    pub selected_frames: Vec<usize>,
    pub os: f64,
}

impl Selection {
    pub fn from_trace(trace: &EpisodeTrace) -> Self {
        Self {
            video_id: trace.video_id.clone(),
            s_star: trace.target,
            selected_frames: trace.selected_frames.clone(),
            os: trace.terminal_speedup,
        }
    }

    /// Checks the frames against a video of `num_frames` frames.
    pub fn validate(&self, num_frames: usize) -> Result<()> {
        if self.selected_frames.is_empty() {
            return Err(Error::Validation(format!("selection for `{}` is empty", self.video_id)));
        }
        let ok_order = self.selected_frames.windows(2).all(|w| w[0] < w[1]);
        let first = self.selected_frames[0];
        let last = *self.selected_frames.last().expect("non-empty");
        if !ok_order || first == 0 || last > num_frames {
            return Err(Error::Validation(format!(
                "selection for `{}` is not strictly increasing inside [1, {num_frames}]",
                self.video_id
            )));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("selection serializes");
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Schema {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })
    }
}

/// One report row. Rates are fractions in [0, 1]; `os` is `F / T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricRow {
    pub video_id: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub os: f64,
    pub op: f64,
    pub s_star: f64,
}

pub fn evaluate_selection(selection: &Selection, video: &VideoSpec) -> Result<MetricRow> {
    if selection.video_id != video.id {
        return Err(Error::Validation(format!(
            "selection for `{}` evaluated against video `{}`",
            selection.video_id, video.id
        )));
    }
    let n = video.num_frames();
    selection.validate(n)?;
    let prf = precision_recall_f1(&selection.selected_frames, &video.segments, n)?;
    let os = output_speedup(n, selection.selected_frames.len())?;
    let target = selection.s_star as f64;
    Ok(MetricRow {
        video_id: video.id.clone(),
        precision: prf.precision,
        recall: prf.recall,
        f1: prf.f1,
        os,
        op: overall_performance(prf.f1, os, target),
        s_star: target,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
    /// Unweighted mean over videos that have ground-truth segments.
    pub aggregate: MetricRow,
}

impl MetricReport {
    /// `has_segments[i]` says whether row `i` counts toward the mean.
    pub fn new(rows: Vec<MetricRow>, has_segments: &[bool]) -> Result<Self> {
        if rows.len() != has_segments.len() {
            return Err(Error::dim("report rows", rows.len(), has_segments.len()));
        }
        let kept: Vec<&MetricRow> = rows.iter().zip(has_segments).filter(|(_, &k)| k).map(|(r, _)| r).collect();
        if kept.is_empty() {
            return Err(Error::Empty("report rows with ground truth"));
        }
        let n = kept.len() as f64;
        let mean = |g: fn(&MetricRow) -> f64| kept.iter().map(|r| g(r)).sum::<f64>() / n;
        let aggregate = MetricRow {
            video_id: "mean".into(),
            precision: mean(|r| r.precision),
            recall: mean(|r| r.recall),
            f1: mean(|r| r.f1),
            os: mean(|r| r.os),
            op: mean(|r| r.op),
            s_star: mean(|r| r.s_star),
        };
        Ok(Self { rows, aggregate })
    }

    /// Evaluates each selection against the video with the same id.
    pub fn evaluate(selections: &[Selection], videos: &[VideoSpec]) -> Result<Self> {
        let mut rows = Vec::with_capacity(selections.len());
        let mut keep = Vec::with_capacity(selections.len());
        for s in selections {
            let v = videos
                .iter()
                .find(|v| v.id == s.video_id)
                .ok_or_else(|| Error::Validation(format!("no video with id `{}` in the dataset", s.video_id)))?;
            rows.push(evaluate_selection(s, v)?);
            keep.push(!v.segments.is_empty());
        }
        Self::new(rows, &keep)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("report serializes");
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Schema {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })
    }

    /// One row per video, aggregate excluded.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_rows(path, &self.rows)
    }

    pub fn read_csv(path: &Path) -> Result<Vec<MetricRow>> {
        read_rows(path)
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Schema {
            path: path.to_path_buf(),
            msg: format!("{other:?}"),
        },
    }
}

pub(crate) fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_error(path, e))).collect()
}

/// Per-step skip profile of an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipProfileRow {
    pub frame: usize,
    pub nu: usize,
    pub alignment: f64,
}

pub fn skip_profile(trace: &EpisodeTrace) -> Vec<SkipProfileRow> {
    trace
        .selected_frames
        .iter()
        .zip(&trace.skips)
        .zip(&trace.alignments)
        .map(|((&frame, &nu), &alignment)| SkipProfileRow { frame, nu, alignment })
        .collect()
}

pub fn write_skip_profile(path: &Path, trace: &EpisodeTrace) -> Result<()> {
    write_rows(path, &skip_profile(trace))
}
