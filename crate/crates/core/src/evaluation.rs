//! Frame-level validation function and latency statistics.
//!
//! `VF = 1 - (0.5 * ND + SND) / SP`, where SP counts frames showing a ship,
//! ND frames with a spurious detection and SND ship frames where no ship was
//! found.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::bbox::BBox;
use crate::frame_io::DetectionRecord;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("VF is undefined: no frame contains a ground-truth ship")]
    ZeroSp,
    #[error("detections for frame {frame} fall outside the ground-truth range {first}..={last}")]
    FrameRangeMismatch { frame: usize, first: usize, last: usize },
    #[error("ground truth is empty")]
    EmptyTruth,
    #[error("frame {0} appears more than once")]
    DuplicateFrame(usize),
    #[error("no timing samples")]
    NoSamples,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EvalCounts {
    /// Frames with at least one ground-truth ship.
    pub sp: usize,
    /// Frames with at least one detection matching no ship.
    pub nd: usize,
    /// Ship frames where no ship was matched.
    pub snd: usize,
}

pub fn vf(counts: &EvalCounts) -> Result<f64, EvalError> {
    if counts.sp == 0 {
        return Err(EvalError::ZeroSp);
    }
    Ok(1.0 - (0.5 * counts.nd as f64 + counts.snd as f64) / counts.sp as f64)
}

/// `floor(100 * VF)`, computed exactly in integers.
pub fn vf_truncated_percent(counts: &EvalCounts) -> Result<i64, EvalError> {
    if counts.sp == 0 {
        return Err(EvalError::ZeroSp);
    }
    // VF = (2 sp - nd - 2 snd) / (2 sp)
    let num = 2 * counts.sp as i64 - counts.nd as i64 - 2 * counts.snd as i64;
    Ok((100 * num).div_euclid(2 * counts.sp as i64))
}

/// Ship boxes per frame.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundTruth {
    frames: BTreeMap<usize, Vec<BBox>>,
}

impl GroundTruth {
    pub fn from_records(records: &[DetectionRecord]) -> Result<Self, EvalError> {
        let mut frames = BTreeMap::new();
        for r in records {
            if frames.insert(r.frame, r.bboxes()).is_some() {
                return Err(EvalError::DuplicateFrame(r.frame));
            }
        }
        Ok(Self { frames })
    }

    pub fn insert(&mut self, frame: usize, boxes: Vec<BBox>) {
        self.frames.insert(frame, boxes);
    }

    pub fn boxes(&self, frame: usize) -> &[BBox] {
        self.frames.get(&frame).map_or(&[], Vec::as_slice)
    }

    pub fn frame_range(&self) -> Option<(usize, usize)> {
        Some((*self.frames.keys().next()?, *self.frames.keys().next_back()?))
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Greedy one-to-one matching by descending IoU; returns `(matched truth, matched detections)`.
fn match_boxes(truth: &[BBox], detections: &[BBox], iou_min: f64) -> (usize, usize) {
    let mut pairs = Vec::new();
    for (t, tb) in truth.iter().enumerate() {
        for (d, db) in detections.iter().enumerate() {
            let iou = tb.iou(db);
            if iou >= iou_min {
                pairs.push((iou, t, d));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut t_used = vec![false; truth.len()];
    let mut d_used = vec![false; detections.len()];
    let mut matched = 0;
    for (_, t, d) in pairs {
        if !t_used[t] && !d_used[d] {
            t_used[t] = true;
            d_used[d] = true;
            matched += 1;
        }
    }
    (matched, matched)
}

/// Tallies SP, ND and SND over the ground truth's frame range. Frames in range
/// without a record hold no ships (truth) or no detections (detector).
pub fn count_frames(
    detections: &[DetectionRecord],
    truth: &GroundTruth,
    iou_min: f64,
) -> Result<EvalCounts, EvalError> {
    let (first, last) = truth.frame_range().ok_or(EvalError::EmptyTruth)?;
    let mut by_frame: BTreeMap<usize, Vec<BBox>> = BTreeMap::new();
    for r in detections {
        if r.frame < first || r.frame > last {
            return Err(EvalError::FrameRangeMismatch {
                frame: r.frame,
                first,
                last,
            });
        }
        if by_frame.insert(r.frame, r.bboxes()).is_some() {
            return Err(EvalError::DuplicateFrame(r.frame));
        }
    }

    let mut counts = EvalCounts::default();
    for frame in first..=last {
        let gt = truth.boxes(frame);
        let det = by_frame.get(&frame).map_or(&[][..], Vec::as_slice);
        let (gt_matched, det_matched) = match_boxes(gt, det, iou_min);
        if !gt.is_empty() {
            counts.sp += 1;
            if gt_matched == 0 {
                counts.snd += 1;
            }
        }
        if det_matched < det.len() {
            counts.nd += 1;
        }
    }
    Ok(counts)
}

/// Per-frame latency summary, in nanoseconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimingReport {
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub mean_ns: f64,
    pub median_ns: f64,
    pub p95_ns: f64,
    pub max_ns: f64,
}

impl TimingReport {
    pub fn mean_ms(&self) -> f64 {
        self.mean_ns / 1e6
    }
}

/// Median averages the middle pair for even counts; p95 is nearest-rank.
pub fn timing_report(per_frame_ns: &[u64], dims: (usize, usize)) -> Result<TimingReport, EvalError> {
    if per_frame_ns.is_empty() {
        return Err(EvalError::NoSamples);
    }
    let mut sorted = per_frame_ns.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let mean_ns = sorted.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
    let median_ns = if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0
    };
    let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
    Ok(TimingReport {
        frames: n,
        width: dims.0,
        height: dims.1,
        mean_ns,
        median_ns,
        p95_ns: sorted[rank - 1] as f64,
        max_ns: sorted[n - 1] as f64,
    })
}

impl TimingReport {
    pub fn render(&self) -> String {
        format!(
            "{}x{} over {} frames: mean {:.3} ms, median {:.3} ms, p95 {:.3} ms, max {:.3} ms",
            self.width,
            self.height,
            self.frames,
            self.mean_ns / 1e6,
            self.median_ns / 1e6,
            self.p95_ns / 1e6,
            self.max_ns / 1e6
        )
    }
}

/// Everything the `eval` subcommand reports.
#[derive(Clone, Debug, Serialize)]
pub struct EvalReport {
    pub counts: EvalCounts,
    pub vf: f64,
    pub vf_percent_truncated: i64,
    pub iou_min: f64,
    pub rng_seed: Option<u64>,
    pub timing: Vec<TimingReport>,
    pub config: Vec<(String, String)>,
}

impl EvalReport {
    pub fn new(counts: EvalCounts, iou_min: f64) -> Result<Self, EvalError> {
        Ok(Self {
            counts,
            vf: vf(&counts)?,
            vf_percent_truncated: vf_truncated_percent(&counts)?,
            iou_min,
            rng_seed: None,
            timing: Vec::new(),
            config: Vec::new(),
        })
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let c = &self.counts;
        let _ = writeln!(s, "SP  {}", c.sp);
        let _ = writeln!(s, "ND  {}", c.nd);
        let _ = writeln!(s, "SND {}", c.snd);
        let _ = writeln!(
            s,
            "VF  {:.4} ({:.2}%, truncated {}%)",
            self.vf,
            self.vf * 100.0,
            self.vf_percent_truncated
        );
        let _ = writeln!(s, "box match IoU >= {}", self.iou_min);
        if let Some(seed) = self.rng_seed {
            let _ = writeln!(s, "rng seed {seed}");
        }
        for t in &self.timing {
            let _ = writeln!(s, "timing {}", t.render());
        }
        if !self.config.is_empty() {
            let _ = writeln!(s, "config:");
            for (k, v) in &self.config {
                let _ = writeln!(s, "  {k}={v}");
            }
        }
        s
    }

    pub fn render_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
