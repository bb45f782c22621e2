//! One detector instance: owns the background model and tracker and turns
//! frames into masks and ship tracks.

use std::time::Instant;

use thiserror::Error;

use crate::background_model::{BackgroundModel, ModelError, RegionMask};
use crate::backwash::{cancel_backwash_staged, BackwashStages, RelabelParams, ShipRegion};
use crate::config::PipelineConfig;
use crate::frame_io::{DetectionRecord, Frame};
use crate::labeling::{filter_small, label_components, Component};
use crate::mask_ops::{close_with_kernel, median3x3, ForegroundMask};
use crate::tracker::{Track, Tracker};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("background model: {0}")]
    Model(#[from] ModelError),
    #[error("config: {0}")]
    Config(String),
}

/// Intermediate masks of one processed frame.
#[derive(Clone, Debug)]
pub struct StageMasks {
    pub segmented: ForegroundMask,
    pub median: ForegroundMask,
    pub closed: ForegroundMask,
    pub labeled: ForegroundMask,
    pub backwash: BackwashStages,
}

#[derive(Clone, Debug)]
pub struct FrameOutput {
    pub frame_index: usize,
    /// Foreground after backwash cancellation.
    pub mask: ForegroundMask,
    pub regions: Vec<ShipRegion>,
    /// Tracks matched or spawned on this frame, by id.
    pub tracks: Vec<Track>,
    pub stages: Option<StageMasks>,
}

#[derive(Clone, Debug)]
pub enum Step {
    /// Frame went into model initialization; nothing is detected yet.
    WarmingUp,
    Processed(Box<FrameOutput>),
}

pub struct Pipeline {
    config: PipelineConfig,
    model: BackgroundModel,
    tracker: Tracker,
    first_region: RegionMask,
    relabel: RelabelParams,
    keep_stages: bool,
}

impl Pipeline {
    pub fn new(config: &PipelineConfig, width: usize, height: usize) -> Result<Self, PipelineError> {
        config.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        let model = BackgroundModel::new(config.model.clone(), width, height)?;
        Ok(Self {
            config: config.clone(),
            model,
            tracker: Tracker::new(config.tracker.clone()),
            first_region: RegionMask::empty(width, height),
            relabel: config.labeling.relabel_for(width, height),
            keep_stages: false,
        })
    }

    /// Keep every intermediate mask in [`FrameOutput::stages`].
    pub fn capture_stages(mut self, keep: bool) -> Self {
        self.keep_stages = keep;
        self
    }

    pub fn dims(&self) -> (usize, usize) {
        self.model.dims()
    }

    pub fn model(&self) -> &BackgroundModel {
        &self.model
    }

    pub fn tracker(&self) -> &Tracker {
        &self.tracker
    }

    pub fn process(&mut self, frame: &Frame) -> Result<Step, PipelineError> {
        if !self.model.is_ready() {
            self.model.absorb(frame)?;
            return Ok(Step::WarmingUp);
        }
        let (w, h) = self.model.dims();

        let segmented = self.model.segment(frame, &self.first_region)?;
        self.model.update(frame, &segmented)?;
        let median = median3x3(&segmented);
        let closed = close_with_kernel(&median, self.config.mask.close_kernel, self.config.mask.close_times);
        let components: Vec<Component> = filter_small(
            label_components(&closed, self.relabel.connectivity),
            self.relabel.min_area,
        );
        let labeled = self.keep_stages.then(|| {
            crate::labeling::components_mask(&components, w, h)
        });

        let out = cancel_backwash_staged(
            frame,
            &self.model,
            &components,
            &closed,
            &self.config.backwash,
            self.relabel,
        );
        let _ = self.tracker.associate(&out.regions);
        self.first_region = self.tracker.first_region(w, h);

        let mut tracks: Vec<Track> = self.tracker.current().cloned().collect();
        tracks.sort_by_key(|t| t.id);
        let stages = match (self.keep_stages, labeled, out.stages) {
            (true, Some(labeled), Some(backwash)) => Some(StageMasks {
                segmented,
                median,
                closed,
                labeled,
                backwash,
            }),
            _ => None,
        };
        Ok(Step::Processed(Box::new(FrameOutput {
            frame_index: frame.index(),
            mask: out.mask,
            regions: out.regions,
            tracks,
            stages,
        })))
    }
}

/// Detections and per-frame latency of an in-memory run.
#[derive(Clone, Debug, Default)]
pub struct SequenceRun {
    /// One record per processed frame, empty when nothing was detected.
    pub records: Vec<DetectionRecord>,
    /// Wall time of each processed frame; warm-up frames are not timed.
    pub frame_ns: Vec<u64>,
}

/// Runs a fresh pipeline over `frames` without touching the filesystem.
pub fn detect_sequence(
    config: &PipelineConfig,
    dims: (usize, usize),
    frames: impl IntoIterator<Item = Frame>,
) -> Result<SequenceRun, PipelineError> {
    let mut pipeline = Pipeline::new(config, dims.0, dims.1)?;
    let mut run = SequenceRun::default();
    for frame in frames {
        let start = Instant::now();
        let step = pipeline.process(&frame)?;
        let elapsed = start.elapsed().as_nanos() as u64;
        if let Step::Processed(out) = step {
            run.frame_ns.push(elapsed);
            run.records
                .push(DetectionRecord::from_tracks(out.frame_index, &out.tracks));
        }
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn warm_up_then_detect() {
        let cfg = PipelineConfig::default();
        let mut p = Pipeline::new(&cfg, 64, 48).unwrap();
        for i in 0..cfg.model.n_samples {
            let f = Frame::filled(64, 48, i, [40, 90, 130]).unwrap();
            assert!(matches!(p.process(&f).unwrap(), Step::WarmingUp));
        }
        let mut f = Frame::filled(64, 48, 20, [40, 90, 130]).unwrap();
        for y in 20..30 {
            for x in 10..30 {
                f.set(x, y, [200, 30, 30]);
            }
        }
        match p.process(&f).unwrap() {
            Step::Processed(out) => {
                assert_eq!(out.tracks.len(), 1);
                assert_eq!(out.tracks[0].bbox, crate::BBox::new(10, 20, 20, 10));
                // The 3x3 majority vote drops the four corners.
                assert_eq!(out.mask.count(), 196);
            }
            Step::WarmingUp => panic!("model should be ready"),
        }
    }

    #[test]
    fn static_scene_yields_nothing() {
        let cfg = PipelineConfig::default();
        let mut p = Pipeline::new(&cfg, 32, 32).unwrap().capture_stages(true);
        for i in 0..30 {
            let f = Frame::filled(32, 32, i, [10, 20, 30]).unwrap();
            if let Step::Processed(out) = p.process(&f).unwrap() {
                assert!(out.tracks.is_empty());
                assert!(out.mask.is_empty());
                assert!(out.stages.is_some());
            }
        }
    }
}
