//! Backwash cancellation.
//!
//! A labeled blob usually holds a ship together with the foam wake it drags
//! behind it. Three tests strip the wake, in order:
//!
//! 1. **Height.** Columns of the blob shorter than `height_fraction` of the
//!    blob's box height are wake, since a hull is taller than its trail.
//! 2. **Brightness distortion.** Pixels whose color, projected onto the
//!    background color, falls inside `[t1, t2]` are foam brighter than water.
//! 3. **Photometric gain.** The ratio of background to current intensity is
//!    histogrammed over the pixels already identified as wake by steps 1 and
//!    2; the dominant mode gives a band `[tp1, tp2]` and any remaining pixel
//!    inside that band is cleared as well.
//!
//! The cleaned mask is labeled again and the surviving blobs become
//! [`ShipRegion`]s.

use crate::background_model::{median_color, BackgroundModel};
use crate::bbox::BBox;
use crate::frame_io::{Frame, Rgb};
use crate::labeling::{self, Component, Connectivity};
use crate::mask_ops::ForegroundMask;

/// Fewer gain samples than this fall back to the static band.
pub const MIN_GAIN_SAMPLES: usize = 32;

/// Fraction of the peak bin a neighbouring bin needs to stay in the band.
const PLATEAU_FRACTION: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct BackwashParams {
    pub t1: f64,
    pub t2: f64,
    /// Static gain band, used when too few wake samples exist to calibrate.
    pub tp1: f64,
    pub tp2: f64,
    pub height_fraction: f64,
    pub gain_hist_bins: usize,
    /// Gain reported when the current intensity is below 1, and the upper
    /// end of the gain histogram.
    pub gain_cap: f64,
}

impl Default for BackwashParams {
    fn default() -> Self {
        Self {
            t1: 1.15,
            t2: 2.5,
            tp1: 0.4,
            tp2: 0.87,
            height_fraction: 0.5,
            gain_hist_bins: 64,
            gain_cap: 8.0,
        }
    }
}

impl BackwashParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.t1 < self.t2) {
            return Err(format!("need t1 < t2, got {} and {}", self.t1, self.t2));
        }
        if !(self.tp1 < self.tp2) {
            return Err(format!("need tp1 < tp2, got {} and {}", self.tp1, self.tp2));
        }
        if !(self.height_fraction > 0.0 && self.height_fraction < 1.0) {
            return Err(format!("height_fraction {} outside (0, 1)", self.height_fraction));
        }
        if self.gain_hist_bins == 0 {
            return Err("gain_hist_bins must be positive".into());
        }
        if !(self.gain_cap > 0.0) {
            return Err("gain_cap must be positive".into());
        }
        Ok(())
    }
}

/// A blob believed to contain only ship pixels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShipRegion {
    pub bbox: BBox,
    /// Row-major `bbox.w × bbox.h` foreground bits of this region alone.
    pub mask_slice: Vec<bool>,
    pub track_hint: Option<u64>,
}

impl ShipRegion {
    pub fn from_component(component: &Component) -> Self {
        let b = component.bbox;
        let mut mask_slice = vec![false; b.w * b.h];
        for (x, y) in component.pixels() {
            mask_slice[(y - b.y) * b.w + (x - b.x)] = true;
        }
        Self {
            bbox: b,
            mask_slice,
            track_hint: None,
        }
    }

    pub fn area(&self) -> usize {
        self.mask_slice.iter().filter(|&&b| b).count()
    }
}

/// Per-pixel background color.
pub trait BackgroundSource {
    fn background_at(&self, x: usize, y: usize) -> Rgb;
}

impl BackgroundSource for BackgroundModel {
    fn background_at(&self, x: usize, y: usize) -> Rgb {
        median_color(self.pixel_model(x, y).expect("pixel within model bounds"))
    }
}

/// A plain background image.
pub struct BackgroundImage {
    width: usize,
    pixels: Vec<Rgb>,
}

impl BackgroundImage {
    pub fn new(width: usize, pixels: Vec<Rgb>) -> Self {
        Self { width, pixels }
    }

    pub fn from_frame(frame: &Frame) -> Self {
        Self::new(frame.width(), frame.pixels().to_vec())
    }
}

impl BackgroundSource for BackgroundImage {
    fn background_at(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }
}

/// Clears the component's columns whose pixel count is below
/// `height_fraction × bbox height`. Pixels outside the component are kept.
pub fn height_prune(component: &Component, mask: &ForegroundMask, height_fraction: f64) -> ForegroundMask {
    let mut out = mask.clone();
    prune_short_columns(component, &mut out, height_fraction, &mut Vec::new());
    out
}

fn prune_short_columns(
    component: &Component,
    mask: &mut ForegroundMask,
    height_fraction: f64,
    removed: &mut Vec<(usize, usize)>,
) {
    let b = component.bbox;
    let mut extent = vec![0usize; b.w];
    for r in &component.runs {
        for x in r.col_start..=r.col_end {
            extent[x - b.x] += 1;
        }
    }
    let min_extent = height_fraction * b.h as f64;
    for (x, y) in component.pixels() {
        if (extent[x - b.x] as f64) < min_extent && mask.get(x, y) {
            mask.set(x, y, false);
            removed.push((x, y));
        }
    }
}

/// Projection coefficient of `current` onto `background`:
/// `(current · background) / |background|²`. `None` for a black background.
pub fn brightness_distortion(current: Rgb, background: Rgb) -> Option<f64> {
    let dot = |a: Rgb, b: Rgb| -> f64 { (0..3).map(|c| a[c] as f64 * b[c] as f64).sum() };
    let norm = dot(background, background);
    if norm == 0.0 {
        None
    } else {
        Some(dot(current, background) / norm)
    }
}

/// Mean of the three channels.
pub fn intensity(rgb: Rgb) -> f64 {
    (rgb[0] as f64 + rgb[1] as f64 + rgb[2] as f64) / 3.0
}

/// Background-to-current intensity ratio; `gain_cap` when the current
/// intensity is below 1.
pub fn photometric_gain(background_intensity: f64, current_intensity: f64, gain_cap: f64) -> f64 {
    if current_intensity < 1.0 {
        gain_cap
    } else {
        background_intensity / current_intensity
    }
}

/// Band around the dominant mode of `gains`.
///
/// Gains are binned into `gain_hist_bins` equal bins over `[0, gain_cap]`
/// (larger values land in the last bin). Starting at the fullest bin, the band
/// grows left and right while the neighbouring bin holds at least a tenth of
/// the peak count; the result is the outer edges of that bin range. With fewer
/// than [`MIN_GAIN_SAMPLES`] values the static `(tp1, tp2)` is returned.
pub fn calibrate_gain_band(gains: &[f64], params: &BackwashParams) -> (f64, f64) {
    if gains.len() < MIN_GAIN_SAMPLES {
        return (params.tp1, params.tp2);
    }
    let bins = params.gain_hist_bins;
    let width = params.gain_cap / bins as f64;
    let mut hist = vec![0usize; bins];
    for &g in gains {
        let bin = if g.is_nan() || g <= 0.0 {
            0
        } else {
            ((g / width) as usize).min(bins - 1)
        };
        hist[bin] += 1;
    }
    let (peak, &peak_count) = hist
        .iter()
        .enumerate()
        .rev()
        .max_by_key(|&(_, &count)| count)
        .expect("at least one bin");
    let keep = |count: usize| count as f64 >= PLATEAU_FRACTION * peak_count as f64;
    let mut lo = peak;
    while lo > 0 && keep(hist[lo - 1]) {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < bins && keep(hist[hi + 1]) {
        hi += 1;
    }
    (lo as f64 * width, (hi + 1) as f64 * width)
}

/// How the cleaned mask is relabeled into ship regions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RelabelParams {
    pub connectivity: Connectivity,
    pub min_area: usize,
}

impl Default for RelabelParams {
    fn default() -> Self {
        Self {
            connectivity: Connectivity::Eight,
            min_area: 15,
        }
    }
}

/// Masks after each backwash step, for debugging.
#[derive(Clone, Debug)]
pub struct BackwashStages {
    pub after_height: ForegroundMask,
    pub after_distortion: ForegroundMask,
    pub after_gain: ForegroundMask,
}

#[derive(Clone, Debug)]
pub struct BackwashOutput {
    /// Union of the emitted regions; always a subset of the input mask.
    pub mask: ForegroundMask,
    pub regions: Vec<ShipRegion>,
    pub stages: Option<BackwashStages>,
}

/// Removes backwash from `components` and relabels what is left.
pub fn cancel_backwash(
    frame: &Frame,
    background: &impl BackgroundSource,
    components: &[Component],
    mask: &ForegroundMask,
    params: &BackwashParams,
    relabel: RelabelParams,
) -> (ForegroundMask, Vec<ShipRegion>) {
    let out = run(frame, background, components, mask, params, relabel, false);
    (out.mask, out.regions)
}

/// [`cancel_backwash`], also returning the mask after each step.
pub fn cancel_backwash_staged(
    frame: &Frame,
    background: &impl BackgroundSource,
    components: &[Component],
    mask: &ForegroundMask,
    params: &BackwashParams,
    relabel: RelabelParams,
) -> BackwashOutput {
    run(frame, background, components, mask, params, relabel, true)
}

fn run(
    frame: &Frame,
    background: &impl BackgroundSource,
    components: &[Component],
    mask: &ForegroundMask,
    params: &BackwashParams,
    relabel: RelabelParams,
    keep_stages: bool,
) -> BackwashOutput {
    if components.is_empty() {
        return BackwashOutput {
            mask: mask.clone(),
            regions: Vec::new(),
            stages: keep_stages.then(|| BackwashStages {
                after_height: mask.clone(),
                after_distortion: mask.clone(),
                after_gain: mask.clone(),
            }),
        };
    }

    let mut work = mask.clone();
    // Pixels identified as wake by the height and distortion tests, per component.
    let mut wake: Vec<Vec<(usize, usize)>> = vec![Vec::new(); components.len()];

    for (c, component) in components.iter().enumerate() {
        prune_short_columns(component, &mut work, params.height_fraction, &mut wake[c]);
    }
    let after_height = keep_stages.then(|| work.clone());

    // Background colour of each component's bbox pixels, computed once.
    let bg_cache: Vec<Vec<Rgb>> = components
        .iter()
        .map(|component| {
            let b = component.bbox;
            let mut cache = vec![[0; 3]; b.w * b.h];
            for (x, y) in component.pixels() {
                cache[(y - b.y) * b.w + (x - b.x)] = background.background_at(x, y);
            }
            cache
        })
        .collect();
    let bg = |c: usize, x: usize, y: usize| {
        let b = components[c].bbox;
        bg_cache[c][(y - b.y) * b.w + (x - b.x)]
    };

    for (c, component) in components.iter().enumerate() {
        for (x, y) in component.pixels() {
            if !work.get(x, y) {
                continue;
            }
            let alpha = brightness_distortion(frame.get(x, y), bg(c, x, y));
            if alpha.is_some_and(|a| a >= params.t1 && a <= params.t2) {
                work.set(x, y, false);
                wake[c].push((x, y));
            }
        }
    }
    let after_distortion = keep_stages.then(|| work.clone());

    let gain_at = |c: usize, x: usize, y: usize| {
        photometric_gain(intensity(bg(c, x, y)), intensity(frame.get(x, y)), params.gain_cap)
    };
    for (c, component) in components.iter().enumerate() {
        let gains: Vec<f64> = wake[c].iter().map(|&(x, y)| gain_at(c, x, y)).collect();
        let (lo, hi) = calibrate_gain_band(&gains, params);
        for (x, y) in component.pixels() {
            if work.get(x, y) {
                let g = gain_at(c, x, y);
                if g >= lo && g <= hi {
                    work.set(x, y, false);
                }
            }
        }
    }
    let after_gain = keep_stages.then(|| work.clone());

    let (w, h) = work.dims();
    let survivors = labeling::filter_small(
        labeling::label_components(&work, relabel.connectivity),
        relabel.min_area,
    );
    let cleaned = labeling::components_mask(&survivors, w, h);
    let regions = survivors.iter().map(ShipRegion::from_component).collect();

    BackwashOutput {
        mask: cleaned,
        regions,
        stages: match (after_height, after_distortion, after_gain) {
            (Some(after_height), Some(after_distortion), Some(after_gain)) => Some(BackwashStages {
                after_height,
                after_distortion,
                after_gain,
            }),
            _ => None,
        },
    }
}
