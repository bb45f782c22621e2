//! Greedy IoU tracking of ship regions, and the first-region mask fed back
//! to the next frame's segmentation.

use crate::background_model::RegionMask;
use crate::backwash::ShipRegion;
use crate::bbox::BBox;

#[derive(Clone, Debug, PartialEq)]
pub struct TrackerParams {
    /// Minimum IoU for a region to continue a track.
    pub iou_match_min: f64,
    /// Consecutive unmatched frames a track survives.
    pub max_missed: usize,
    /// Margin added around each track box when building the first region.
    pub roi_dilation: usize,
}

impl Default for TrackerParams {
    fn default() -> Self {
        Self {
            iou_match_min: 0.3,
            max_missed: 5,
            roi_dilation: 8,
        }
    }
}

impl TrackerParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.iou_match_min > 0.0 && self.iou_match_min <= 1.0) {
            return Err(format!("iou_match_min {} outside (0, 1]", self.iou_match_min));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Track {
    pub id: u64,
    pub bbox: BBox,
    /// Frames since creation.
    pub age: usize,
    /// Consecutive frames without a matching region.
    pub missed: usize,
}

impl Track {
    /// Matched on the most recent frame.
    pub fn is_current(&self) -> bool {
        self.missed == 0
    }
}

/// Owns the live tracks and the id counter of one run.
#[derive(Clone, Debug)]
pub struct Tracker {
    params: TrackerParams,
    tracks: Vec<Track>,
    next_id: u64,
}

impl Tracker {
    pub fn new(params: TrackerParams) -> Self {
        Self {
            params,
            tracks: Vec::new(),
            next_id: 1,
        }
    }

    pub fn params(&self) -> &TrackerParams {
        &self.params
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    /// Tracks matched or spawned on the latest frame.
    pub fn current(&self) -> impl Iterator<Item = &Track> {
        self.tracks.iter().filter(|t| t.is_current())
    }

    /// Advances one frame: greedy matching by descending IoU, new tracks for
    /// unmatched regions, and retirement of tracks missed too long.
    pub fn associate(&mut self, regions: &[ShipRegion]) -> &[Track] {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (t, track) in self.tracks.iter().enumerate() {
            for (r, region) in regions.iter().enumerate() {
                let iou = track.bbox.iou(&region.bbox);
                if iou >= self.params.iou_match_min {
                    pairs.push((iou, t, r));
                }
            }
        }
        // Descending IoU; ties broken by older track, then earlier region.
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut track_taken = vec![false; self.tracks.len()];
        let mut region_taken = vec![false; regions.len()];
        for (_, t, r) in pairs {
            if track_taken[t] || region_taken[r] {
                continue;
            }
            track_taken[t] = true;
            region_taken[r] = true;
            let track = &mut self.tracks[t];
            track.bbox = regions[r].bbox;
            track.missed = 0;
        }

        for (track, matched) in self.tracks.iter_mut().zip(&track_taken) {
            track.age += 1;
            if !matched {
                track.missed += 1;
            }
        }
        let max_missed = self.params.max_missed;
        self.tracks.retain(|t| t.missed <= max_missed);

        for (region, taken) in regions.iter().zip(&region_taken) {
            if !taken {
                self.tracks.push(Track {
                    id: self.next_id,
                    bbox: region.bbox,
                    age: 0,
                    missed: 0,
                });
                self.next_id += 1;
            }
        }
        &self.tracks
    }

    pub fn first_region(&self, width: usize, height: usize) -> RegionMask {
        build_first_region(&self.tracks, width, height, &self.params)
    }
}

/// Union of the track boxes, each grown by `roi_dilation` and clamped to the frame.
pub fn build_first_region(tracks: &[Track], width: usize, height: usize, params: &TrackerParams) -> RegionMask {
    let mut mask = RegionMask::empty(width, height);
    for t in tracks {
        let b = t.bbox.dilate_clamped(params.roi_dilation, width, height);
        mask.fill_rect(b.x, b.y, b.w, b.h);
    }
    mask
}
