//! Sample-based background model with region-dependent match radius.
//!
//! Every pixel keeps `n_samples` past colors. A new value is background when
//! at least `phi_min` stored samples lie strictly within the match radius
//! (Euclidean RGB distance). Pixels inside the "first region" (where ships
//! were found on the previous frame) use the smaller radius `r1`, every other
//! pixel uses `r2`, which makes ship pixels that resemble the water easier to
//! keep as foreground.
//!
//! The model is seeded from the first `n_samples` frames, sample `k` of each
//! pixel coming from frame `k`. After that, each background pixel replaces a
//! random sample of its own model with probability `1 / subsample` and,
//! with an independent coin of the same odds, a random sample of a random
//! 8-neighbour's model.

use std::io::{self, Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use thiserror::Error;

use crate::frame_io::{Frame, Rgb};
use crate::mask_ops::ForegroundMask;

/// Largest possible squared RGB distance, plus one.
const DIST_SQ_CAP: u32 = 3 * 255 * 255 + 1;

const SNAPSHOT_MAGIC: &[u8; 4] = b"SWVB";
const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("model needs {expected} initialization frames, got {found}")]
    WrongFrameCount { expected: usize, found: usize },
    #[error("dimensions {found:?} do not match model {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("pixel ({0}, {1}) is outside the model")]
    OutOfBounds(usize, usize),
    #[error("model is still warming up ({absorbed} of {needed} frames)")]
    NotInitialized { absorbed: usize, needed: usize },
    #[error("model is already initialized")]
    AlreadyInitialized,
    #[error("bad snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    /// Samples kept per pixel.
    pub n_samples: usize,
    /// Matches required to call a pixel background.
    pub phi_min: usize,
    /// Match radius inside the first region.
    pub r1: f64,
    /// Match radius elsewhere.
    pub r2: f64,
    /// Inverse update probability.
    pub subsample: u32,
    pub rng_seed: u64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            n_samples: 20,
            phi_min: 2,
            r1: 10.0,
            r2: 20.0,
            subsample: 16,
            rng_seed: 0x5eed,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.phi_min < 1 || self.phi_min > self.n_samples {
            return Err(ModelError::InvalidParams(format!(
                "phi_min {} must lie in 1..={}",
                self.phi_min, self.n_samples
            )));
        }
        if !(self.r1 > 0.0 && self.r1 < self.r2) {
            return Err(ModelError::InvalidParams(format!(
                "need 0 < r1 < r2, got r1={} r2={}",
                self.r1, self.r2
            )));
        }
        if self.subsample < 1 {
            return Err(ModelError::InvalidParams("subsample must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Class {
    Background,
    Foreground,
}

#[inline]
pub fn distance_sq(a: Rgb, b: Rgb) -> u32 {
    let dr = a[0] as i32 - b[0] as i32;
    let dg = a[1] as i32 - b[1] as i32;
    let db = a[2] as i32 - b[2] as i32;
    (dr * dr + dg * dg + db * db) as u32
}

/// Match radius converted to an exclusive bound on squared integer distance,
/// so that `dist_sq < limit` holds exactly when `sqrt(dist_sq) < radius`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatchRadius {
    limit: u32,
}

impl MatchRadius {
    pub fn new(radius: f64) -> Self {
        if radius.is_nan() || radius <= 0.0 {
            return Self { limit: 0 };
        }
        let mut limit = (radius * radius).ceil().min(DIST_SQ_CAP as f64) as u32;
        while limit > 0 && ((limit - 1) as f64).sqrt() >= radius {
            limit -= 1;
        }
        while limit < DIST_SQ_CAP && (limit as f64).sqrt() < radius {
            limit += 1;
        }
        Self { limit }
    }

    #[inline]
    pub fn matches(&self, a: Rgb, b: Rgb) -> bool {
        distance_sq(a, b) < self.limit
    }
}

/// Background iff at least `phi_min` samples lie within `radius` of `value`.
pub fn classify_pixel(samples: &[Rgb], value: Rgb, radius: f64, phi_min: usize) -> Class {
    classify_with(samples, value, MatchRadius::new(radius), phi_min)
}

#[inline]
fn classify_with(samples: &[Rgb], value: Rgb, radius: MatchRadius, phi_min: usize) -> Class {
    let mut matches = 0;
    for &s in samples {
        if radius.matches(s, value) {
            matches += 1;
            if matches >= phi_min {
                return Class::Background;
            }
        }
    }
    Class::Foreground
}

/// Per-pixel flag marking the first region (likely foreground).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl RegionMask {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![true; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), width * height, "region bit count does not match dims");
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Sets every pixel of the `w × h` rectangle at `(x, y)`; the rectangle
    /// must lie within the mask.
    pub fn fill_rect(&mut self, x: usize, y: usize, w: usize, h: usize) {
        for row in y..y + h {
            self.bits[row * self.width + x..row * self.width + x + w].fill(true);
        }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

const NEIGHBOUR_OFFSETS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

pub struct BackgroundModel {
    width: usize,
    height: usize,
    params: ModelParams,
    /// Pixel-major: the samples of pixel `i` are `samples[i*n .. (i+1)*n]`.
    samples: Vec<Rgb>,
    frames_absorbed: usize,
    rng: ChaCha8Rng,
}

/// Builds a model from exactly `params.n_samples` frames.
pub fn init_model(params: ModelParams, first_frames: &[Frame]) -> Result<BackgroundModel> {
    if first_frames.len() != params.n_samples {
        return Err(ModelError::WrongFrameCount {
            expected: params.n_samples,
            found: first_frames.len(),
        });
    }
    let (w, h) = first_frames[0].dims();
    let mut model = BackgroundModel::new(params, w, h)?;
    for frame in first_frames {
        model.absorb(frame)?;
    }
    Ok(model)
}

impl BackgroundModel {
    /// Empty model awaiting `n_samples` warm-up frames via [`absorb`](Self::absorb).
    pub fn new(params: ModelParams, width: usize, height: usize) -> Result<Self> {
        params.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
        Ok(Self {
            width,
            height,
            samples: vec![[0, 0, 0]; width * height * params.n_samples],
            params,
            frames_absorbed: 0,
            rng,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn frames_absorbed(&self) -> usize {
        self.frames_absorbed
    }

    pub fn is_ready(&self) -> bool {
        self.frames_absorbed == self.params.n_samples
    }

    /// Stores `frame` as the next warm-up sample of every pixel.
    pub fn absorb(&mut self, frame: &Frame) -> Result<()> {
        self.check_dims(frame.dims())?;
        if self.is_ready() {
            return Err(ModelError::AlreadyInitialized);
        }
        let n = self.params.n_samples;
        let k = self.frames_absorbed;
        for (i, &value) in frame.pixels().iter().enumerate() {
            self.samples[i * n + k] = value;
        }
        self.frames_absorbed += 1;
        Ok(())
    }

    /// Samples of the pixel at `(x, y)`.
    pub fn pixel_model(&self, x: usize, y: usize) -> Result<&[Rgb]> {
        if x >= self.width || y >= self.height {
            return Err(ModelError::OutOfBounds(x, y));
        }
        let n = self.params.n_samples;
        let i = y * self.width + x;
        Ok(&self.samples[i * n..(i + 1) * n])
    }

    /// Classifies `frame` using `r1` inside `first_region` and `r2` elsewhere.
    pub fn segment(&self, frame: &Frame, first_region: &RegionMask) -> Result<ForegroundMask> {
        self.check_ready()?;
        self.check_dims(frame.dims())?;
        self.check_dims(first_region.dims())?;
        let n = self.params.n_samples;
        let phi_min = self.params.phi_min;
        let strict = MatchRadius::new(self.params.r1);
        let loose = MatchRadius::new(self.params.r2);
        let bits = frame
            .pixels()
            .iter()
            .zip(self.samples.chunks_exact(n))
            .zip(first_region.bits())
            .map(|((&value, samples), &first)| {
                let radius = if first { strict } else { loose };
                classify_with(samples, value, radius, phi_min) == Class::Foreground
            })
            .collect();
        Ok(ForegroundMask::from_bits(self.width, self.height, bits))
    }

    /// Stochastic self and neighbour update from the background pixels of `mask`.
    pub fn update(&mut self, frame: &Frame, mask: &ForegroundMask) -> Result<()> {
        self.check_ready()?;
        self.check_dims(frame.dims())?;
        self.check_dims(mask.dims())?;
        let n = self.params.n_samples;
        let subsample = self.params.subsample;
        let (w, h) = (self.width as isize, self.height as isize);
        // Each background pixel flips two independent 1/subsample coins; the
        // gaps between successes are drawn directly instead of every coin.
        let gap = Geometric::new(1.0 / subsample as f64).expect("subsample is at least 1");
        let mut self_gap = gap.sample(&mut self.rng);
        let mut neighbour_gap = gap.sample(&mut self.rng);
        for (i, (&value, &fg)) in frame.pixels().iter().zip(mask.bits()).enumerate() {
            if fg {
                continue;
            }
            if self_gap == 0 {
                let slot = self.rng.random_range(0..n);
                self.samples[i * n + slot] = value;
                self_gap = gap.sample(&mut self.rng);
            } else {
                self_gap -= 1;
            }
            if neighbour_gap == 0 {
                let x = (i % self.width) as isize;
                let y = (i / self.width) as isize;
                let neighbour = loop {
                    let (dx, dy) = NEIGHBOUR_OFFSETS[self.rng.random_range(0..8)];
                    let (nx, ny) = (x + dx, y + dy);
                    if nx >= 0 && nx < w && ny >= 0 && ny < h {
                        break (ny * w + nx) as usize;
                    }
                };
                let slot = self.rng.random_range(0..n);
                self.samples[neighbour * n + slot] = value;
                neighbour_gap = gap.sample(&mut self.rng);
            } else {
                neighbour_gap -= 1;
            }
        }
        Ok(())
    }

    /// Per-channel median of the pixel's samples; for an even count the two
    /// middle values are averaged and rounded down.
    pub fn background_estimate(&self, x: usize, y: usize) -> Result<Rgb> {
        Ok(median_color(self.pixel_model(x, y)?))
    }

    /// Writes the sample array behind a versioned header. The RNG state is not
    /// saved; a restored model reseeds from its params.
    pub fn save_snapshot<W: Write>(&self, mut writer: W) -> Result<()> {
        writer.write_all(SNAPSHOT_MAGIC)?;
        for v in [
            SNAPSHOT_VERSION,
            self.width as u32,
            self.height as u32,
            self.params.n_samples as u32,
            self.frames_absorbed as u32,
        ] {
            writer.write_all(&v.to_le_bytes())?;
        }
        let bytes: Vec<u8> = self.samples.iter().flatten().copied().collect();
        writer.write_all(&bytes)?;
        Ok(())
    }

    pub fn restore_snapshot<R: Read>(params: ModelParams, mut reader: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        reader.read_exact(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(ModelError::Snapshot("missing magic header".into()));
        }
        let mut fields = [0u32; 5];
        for f in &mut fields {
            let mut b = [0u8; 4];
            reader.read_exact(&mut b)?;
            *f = u32::from_le_bytes(b);
        }
        let [version, width, height, n_samples, absorbed] = fields.map(|v| v as usize);
        if version != SNAPSHOT_VERSION as usize {
            return Err(ModelError::Snapshot(format!("unsupported version {version}")));
        }
        if n_samples != params.n_samples || absorbed > n_samples {
            return Err(ModelError::Snapshot(format!(
                "snapshot holds {n_samples} samples ({absorbed} absorbed), params expect {}",
                params.n_samples
            )));
        }
        let mut model = Self::new(params, width, height)?;
        let mut bytes = vec![0u8; width * height * n_samples * 3];
        reader.read_exact(&mut bytes)?;
        for (dst, src) in model.samples.iter_mut().zip(bytes.chunks_exact(3)) {
            *dst = [src[0], src[1], src[2]];
        }
        model.frames_absorbed = absorbed;
        Ok(model)
    }

    fn check_ready(&self) -> Result<()> {
        if self.is_ready() {
            Ok(())
        } else {
            Err(ModelError::NotInitialized {
                absorbed: self.frames_absorbed,
                needed: self.params.n_samples,
            })
        }
    }

    fn check_dims(&self, dims: (usize, usize)) -> Result<()> {
        if dims == (self.width, self.height) {
            Ok(())
        } else {
            Err(ModelError::DimensionMismatch {
                expected: (self.width, self.height),
                found: dims,
            })
        }
    }
}

pub fn median_color(samples: &[Rgb]) -> Rgb {
    let n = samples.len();
    if n == 0 {
        return [0; 3];
    }
    let mut out = [0u8; 3];
    for (c, slot) in out.iter_mut().enumerate() {
        let (lo, hi) = if n <= LANES {
            // Padding with 255 never counts as "below" any threshold.
            let mut lanes = [u8::MAX; LANES];
            for (dst, s) in lanes.iter_mut().zip(samples) {
                *dst = s[c];
            }
            (kth_smallest_lanes(&lanes, (n - 1) / 2), kth_smallest_lanes(&lanes, n / 2))
        } else {
            let mut channel: Vec<u8> = samples.iter().map(|s| s[c]).collect();
            channel.sort_unstable();
            (channel[(n - 1) / 2], channel[n / 2])
        };
        *slot = ((lo as u16 + hi as u16) / 2) as u8;
    }
    out
}

const LANES: usize = 32;

/// `k`-th smallest value (0-based), built bit by bit from the top: the answer
/// is the largest `t` with at most `k` values below it.
fn kth_smallest_lanes(values: &[u8; LANES], k: usize) -> u8 {
    let mut ans = 0u8;
    for bit in (0..8).rev() {
        let t = ans | (1 << bit);
        let below: u8 = values.iter().map(|&v| (v < t) as u8).sum();
        if below as usize <= k {
            ans = t;
        }
    }
    ans
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frames(n: usize, w: usize, h: usize, f: impl Fn(usize, usize, usize) -> Rgb) -> Vec<Frame> {
        (0..n)
            .map(|k| {
                let pixels = (0..w * h).map(|i| f(k, i % w, i / w)).collect();
                Frame::new(w, h, k, pixels).unwrap()
            })
            .collect()
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::default().validate().is_ok());
        let bad = [
            ModelParams { phi_min: 0, ..Default::default() },
            ModelParams { phi_min: 21, ..Default::default() },
            ModelParams { r1: 20.0, ..Default::default() },
            ModelParams { r1: 0.0, ..Default::default() },
            ModelParams { subsample: 0, ..Default::default() },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }

    #[test]
    fn init_from_constant_frames() {
        let m = init_model(ModelParams::default(), &frames(20, 16, 16, |_, _, _| [128; 3])).unwrap();
        assert_eq!(m.frames_absorbed(), 20);
        assert_eq!(m.pixel_model(5, 7).unwrap(), &[[128u8; 3]; 20][..]);
        assert_eq!(m.background_estimate(0, 0).unwrap(), [128; 3]);
    }

    #[test]
    fn init_sample_k_comes_from_frame_k() {
        let fs = frames(20, 16, 16, |k, x, y| [k as u8 * 3, x as u8, y as u8]);
        let m = init_model(ModelParams::default(), &fs).unwrap();
        let expected: Vec<Rgb> = (0..20).map(|k| [k as u8 * 3, 0, 0]).collect();
        assert_eq!(m.pixel_model(0, 0).unwrap(), &expected[..]);
    }

    #[test]
    fn init_rejects_wrong_count() {
        let err = init_model(ModelParams::default(), &frames(19, 16, 16, |_, _, _| [0; 3]));
        assert!(matches!(err, Err(ModelError::WrongFrameCount { expected: 20, found: 19 })));
    }

    #[test]
    fn init_rejects_mixed_dims() {
        let mut fs = frames(19, 16, 16, |_, _, _| [0; 3]);
        fs.push(Frame::filled(20, 16, 19, [0; 3]).unwrap());
        assert!(matches!(
            init_model(ModelParams::default(), &fs),
            Err(ModelError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn classify_examples() {
        let black = [[0u8; 3]; 20];
        assert_eq!(classify_pixel(&black, [0, 0, 0], 20.0, 2), Class::Background);
        assert_eq!(classify_pixel(&black, [255, 255, 255], 20.0, 2), Class::Foreground);
        let mut mixed = vec![[10u8; 3], [12u8; 3]];
        mixed.extend([[200u8; 3]; 18]);
        assert_eq!(classify_pixel(&mixed, [11, 11, 11], 20.0, 2), Class::Background);
        assert_eq!(classify_pixel(&mixed, [11, 11, 11], 20.0, 3), Class::Foreground);
    }

    #[test]
    fn match_radius_is_strict() {
        // distance exactly 20 does not match radius 20
        let r = MatchRadius::new(20.0);
        assert!(!r.matches([0, 0, 0], [20, 0, 0]));
        assert!(r.matches([0, 0, 0], [19, 0, 0]));
        assert!(MatchRadius::new(20.0001).matches([0, 0, 0], [20, 0, 0]));
        assert!(!MatchRadius::new(0.0).matches([0, 0, 0], [0, 0, 0]));
        assert!(MatchRadius::new(1000.0).matches([0, 0, 0], [255, 255, 255]));
    }

    #[test]
    fn segment_constant_scene_is_background() {
        let m = init_model(ModelParams::default(), &frames(20, 16, 16, |_, _, _| [90; 3])).unwrap();
        let f = Frame::filled(16, 16, 20, [90; 3]).unwrap();
        assert!(m.segment(&f, &RegionMask::empty(16, 16)).unwrap().is_empty());
    }

    #[test]
    fn first_region_uses_strict_radius() {
        let m = init_model(ModelParams::default(), &frames(20, 16, 16, |_, _, _| [90; 3])).unwrap();
        // distance 15: background under r2 = 20, foreground under r1 = 10
        let f = Frame::filled(16, 16, 20, [105, 90, 90]).unwrap();
        let mut region = RegionMask::empty(16, 16);
        region.fill_rect(0, 0, 4, 4);
        let mask = m.segment(&f, &region).unwrap();
        assert_eq!(mask.count(), 16);
        assert!(mask.get(3, 3));
        assert!(!mask.get(4, 4));
    }

    #[test]
    fn equal_radii_ignore_region() {
        // No squared integer distance falls between these radii, so they are
        // the same radius as far as matching goes.
        let params = ModelParams {
            r1: 14.94,
            r2: 14.95,
            ..Default::default()
        };
        assert_eq!(MatchRadius::new(params.r1), MatchRadius::new(params.r2));
        let fs = frames(20, 16, 16, |k, x, y| [(k * 7 + x) as u8, (y * 9) as u8, 40]);
        let m = init_model(params, &fs).unwrap();
        let f = frames(1, 16, 16, |_, x, y| [(x * 5) as u8, (y * 11) as u8, 50]).remove(0);
        assert_eq!(
            m.segment(&f, &RegionMask::empty(16, 16)).unwrap(),
            m.segment(&f, &RegionMask::full(16, 16)).unwrap()
        );
    }

    #[test]
    fn segment_before_warmup_fails() {
        let m = BackgroundModel::new(ModelParams::default(), 16, 16).unwrap();
        let f = Frame::filled(16, 16, 0, [0; 3]).unwrap();
        assert!(matches!(
            m.segment(&f, &RegionMask::empty(16, 16)),
            Err(ModelError::NotInitialized { .. })
        ));
    }

    #[test]
    fn foreground_never_updates() {
        let mut m = init_model(ModelParams { subsample: 1, ..Default::default() }, &frames(20, 16, 16, |_, _, _| [0; 3])).unwrap();
        let before = m.samples.clone();
        let f = Frame::filled(16, 16, 20, [200; 3]).unwrap();
        m.update(&f, &ForegroundMask::from_fn(16, 16, |_, _| true)).unwrap();
        assert_eq!(m.samples, before);
    }

    #[test]
    fn subsample_one_updates_every_pixel() {
        let params = ModelParams { subsample: 1, ..Default::default() };
        let mut m = init_model(params, &frames(20, 16, 16, |_, _, _| [0; 3])).unwrap();
        // Encode location in the color so self and neighbour writes are distinguishable.
        let f = frames(1, 16, 16, |_, x, y| [x as u8 + 1, y as u8 + 1, 7]).remove(0);
        m.update(&f, &ForegroundMask::new(16, 16)).unwrap();
        let (mut own_kept, mut neighbour_writes) = (0, 0);
        for y in 0..16 {
            for x in 0..16 {
                let own = f.get(x, y);
                let samples = m.pixel_model(x, y).unwrap();
                let own_count = samples.iter().filter(|&&s| s == own).count();
                assert!(own_count <= 1);
                own_kept += own_count;
                neighbour_writes += samples.iter().filter(|&&s| s != own && s != [0; 3]).count();
            }
        }
        // A later neighbour write may land on the slot just written, so a few
        // of the 256 self writes and 256 neighbour writes are hidden.
        assert!(own_kept > 230, "{own_kept}");
        assert!(neighbour_writes <= 256 && neighbour_writes > 220, "{neighbour_writes}");
    }

    #[test]
    fn self_update_rate_matches_binomial() {
        // 100 x 100 = 10,000 background classifications in one update.
        let mut m = init_model(ModelParams::default(), &frames(20, 100, 100, |_, _, _| [0; 3])).unwrap();
        let f = frames(1, 100, 100, |_, x, y| [x as u8 + 1, y as u8 + 1, 7]).remove(0);
        m.update(&f, &ForegroundMask::new(100, 100)).unwrap();
        let mut self_updates = 0usize;
        for y in 0..100 {
            for x in 0..100 {
                let own = f.get(x, y);
                if m.pixel_model(x, y).unwrap().contains(&own) {
                    self_updates += 1;
                }
            }
        }
        let n = 10_000f64;
        let p = 1.0 / 16.0;
        let sigma = (n * p * (1.0 - p)).sqrt();
        let mean = n * p;
        assert!(
            (self_updates as f64 - mean).abs() <= 4.0 * sigma,
            "{self_updates} outside {mean} ± {}",
            4.0 * sigma
        );
    }

    #[test]
    fn median_examples() {
        assert_eq!(median_color(&[[100; 3]; 20]), [100; 3]);
        let alternating: Vec<Rgb> = (0..20).map(|i| if i % 2 == 0 { [0; 3] } else { [10; 3] }).collect();
        assert_eq!(median_color(&alternating), [5; 3]);
        assert_eq!(median_color(&[[1, 9, 3], [2, 8, 4], [3, 7, 5]]), [2, 8, 4]);
    }

    #[test]
    fn estimate_out_of_bounds() {
        let m = init_model(ModelParams::default(), &frames(20, 16, 16, |_, _, _| [1; 3])).unwrap();
        assert!(matches!(m.background_estimate(16, 0), Err(ModelError::OutOfBounds(16, 0))));
    }

    #[test]
    fn snapshot_round_trip() {
        let fs = frames(20, 16, 16, |k, x, y| [k as u8, x as u8, y as u8]);
        let m = init_model(ModelParams::default(), &fs).unwrap();
        let mut buf = Vec::new();
        m.save_snapshot(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"SWVB");
        let r = BackgroundModel::restore_snapshot(ModelParams::default(), &buf[..]).unwrap();
        assert_eq!(r.samples, m.samples);
        assert!(r.is_ready());

        let other = ModelParams { n_samples: 10, ..Default::default() };
        assert!(BackgroundModel::restore_snapshot(other, &buf[..]).is_err());
        assert!(BackgroundModel::restore_snapshot(ModelParams::default(), &buf[..10]).is_err());
    }
}
