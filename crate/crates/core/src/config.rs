//! Flat `section.key = value` configuration.
//!
//! A config file holds one assignment per line; `#` starts a comment. Every
//! key can also be given on the command line as `--section.key=value`, which
//! wins over the file. Unknown keys are rejected.
//!
//! ```text
//! model.r1 = 10
//! model.r2 = 20
//! mask.close_times = 2
//! synth.ship.0.color = 70,60,55
//! ```

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::background_model::ModelParams;
use crate::backwash::{BackwashParams, RelabelParams};
use crate::frame_io::{Rgb, SequenceDescriptor};
use crate::labeling::Connectivity;
use crate::synth::{SceneSpec, ShipSpec};
use crate::tracker::TrackerParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Ordered key/value assignments before interpretation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: line.to_string(),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    text: line.to_string(),
                });
            }
            raw.set(key, value.trim());
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    /// Later assignments win.
    pub fn merge(&mut self, other: RawConfig) {
        self.entries.extend(other.entries);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaskConfig {
    pub close_kernel: usize,
    pub close_times: usize,
}

impl Default for MaskConfig {
    fn default() -> Self {
        Self {
            close_kernel: 3,
            close_times: 2,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabelingConfig {
    pub connectivity: Connectivity,
    /// Fixed minimum blob area; `None` scales the default with frame size.
    pub min_area: Option<usize>,
}

/// Minimum blob area at the 200x150 reference size.
pub const REFERENCE_MIN_AREA: usize = 15;
const REFERENCE_PIXELS: usize = 200 * 150;

impl LabelingConfig {
    pub fn min_area_for(&self, width: usize, height: usize) -> usize {
        self.min_area.unwrap_or_else(|| {
            let scaled = REFERENCE_MIN_AREA as f64 * (width * height) as f64 / REFERENCE_PIXELS as f64;
            (scaled.round() as usize).max(1)
        })
    }

    pub fn relabel_for(&self, width: usize, height: usize) -> RelabelParams {
        RelabelParams {
            connectivity: self.connectivity,
            min_area: self.min_area_for(width, height),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    pub iou_min: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { iou_min: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IoConfig {
    pub input: Option<PathBuf>,
    pub raw_width: Option<usize>,
    pub raw_height: Option<usize>,
    pub output: PathBuf,
    pub detections: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub run_report: Option<PathBuf>,
    pub write_masks: bool,
    pub annotate: bool,
}

impl Default for IoConfig {
    fn default() -> Self {
        Self {
            input: None,
            raw_width: None,
            raw_height: None,
            output: PathBuf::from("out"),
            detections: None,
            truth: None,
            report: None,
            run_report: None,
            write_masks: true,
            annotate: false,
        }
    }
}

impl IoConfig {
    pub fn descriptor(&self) -> Result<SequenceDescriptor, ConfigError> {
        let input = self
            .input
            .clone()
            .ok_or_else(|| ConfigError::Invalid("io.input is required".into()))?;
        match (self.raw_width, self.raw_height) {
            (Some(width), Some(height)) => Ok(SequenceDescriptor::Raw {
                path: input,
                width,
                height,
            }),
            (None, None) => Ok(SequenceDescriptor::Directory(input)),
            _ => Err(ConfigError::Invalid(
                "io.raw_width and io.raw_height must be given together".into(),
            )),
        }
    }

    pub fn detections_path(&self) -> PathBuf {
        self.detections
            .clone()
            .unwrap_or_else(|| self.output.join("detections.jsonl"))
    }

    pub fn run_report_path(&self) -> PathBuf {
        self.run_report
            .clone()
            .unwrap_or_else(|| self.output.join("run.json"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    /// Frames per synthetic bench sequence.
    pub frames: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { frames: 500 }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PipelineConfig {
    pub model: ModelParams,
    pub mask: MaskConfig,
    pub labeling: LabelingConfig,
    pub backwash: BackwashParams,
    pub tracker: TrackerParams,
    pub eval: EvalConfig,
    pub io: IoConfig,
    pub synth: SceneSpec,
    pub bench: BenchConfig,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(ConfigError::InvalidValue {
            key: key.to_string(),
            value: value.to_string(),
            reason: "expected true or false".into(),
        }),
    }
}

fn parse_rgb(key: &str, value: &str) -> Result<Rgb, ConfigError> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(ConfigError::InvalidValue {
            key: key.to_string(),
            value: value.to_string(),
            reason: "expected r,g,b".into(),
        });
    }
    Ok([
        parse_value(key, parts[0])?,
        parse_value(key, parts[1])?,
        parse_value(key, parts[2])?,
    ])
}

fn fmt_rgb(c: Rgb) -> String {
    format!("{},{},{}", c[0], c[1], c[2])
}

impl PipelineConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        // Frame size picks the synthetic base scene before anything else applies.
        let dims = |k: &str, d: usize| -> Result<usize, ConfigError> {
            raw.entries.get(k).map_or(Ok(d), |v| parse_value(k, v))
        };
        let (w, h) = (dims("synth.width", 200)?, dims("synth.height", 150)?);
        if (w, h) != (200, 150) {
            cfg.synth = SceneSpec::scaled_default(w, h);
        }
        let mut ships_overridden = false;
        for (key, value) in raw.iter() {
            if let Some(rest) = key.strip_prefix("synth.ship.") {
                if !ships_overridden {
                    cfg.synth.ships.clear();
                    ships_overridden = true;
                }
                cfg.apply_ship(key, rest, value)?;
            } else {
                cfg.apply(key, value)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    fn apply(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        let k = key;
        match key {
            "model.n_samples" => self.model.n_samples = parse_value(k, v)?,
            "model.phi_min" => self.model.phi_min = parse_value(k, v)?,
            "model.r1" => self.model.r1 = parse_value(k, v)?,
            "model.r2" => self.model.r2 = parse_value(k, v)?,
            "model.subsample" => self.model.subsample = parse_value(k, v)?,
            "model.seed" => self.model.rng_seed = parse_value(k, v)?,

            "mask.close_kernel" => self.mask.close_kernel = parse_value(k, v)?,
            "mask.close_times" => self.mask.close_times = parse_value(k, v)?,

            "labeling.connectivity" => {
                self.labeling.connectivity = match v {
                    "4" => Connectivity::Four,
                    "8" => Connectivity::Eight,
                    _ => {
                        return Err(ConfigError::InvalidValue {
                            key: k.into(),
                            value: v.into(),
                            reason: "expected 4 or 8".into(),
                        })
                    }
                }
            }
            "labeling.min_area" => self.labeling.min_area = Some(parse_value(k, v)?),

            "backwash.t1" => self.backwash.t1 = parse_value(k, v)?,
            "backwash.t2" => self.backwash.t2 = parse_value(k, v)?,
            "backwash.tp1" => self.backwash.tp1 = parse_value(k, v)?,
            "backwash.tp2" => self.backwash.tp2 = parse_value(k, v)?,
            "backwash.height_fraction" => self.backwash.height_fraction = parse_value(k, v)?,
            "backwash.gain_hist_bins" => self.backwash.gain_hist_bins = parse_value(k, v)?,
            "backwash.gain_cap" => self.backwash.gain_cap = parse_value(k, v)?,

            "tracker.iou_match_min" => self.tracker.iou_match_min = parse_value(k, v)?,
            "tracker.max_missed" => self.tracker.max_missed = parse_value(k, v)?,
            "tracker.roi_dilation" => self.tracker.roi_dilation = parse_value(k, v)?,

            "eval.iou_min" => self.eval.iou_min = parse_value(k, v)?,

            "io.input" => self.io.input = Some(PathBuf::from(v)),
            "io.raw_width" => self.io.raw_width = Some(parse_value(k, v)?),
            "io.raw_height" => self.io.raw_height = Some(parse_value(k, v)?),
            "io.output" => self.io.output = PathBuf::from(v),
            "io.detections" => self.io.detections = Some(PathBuf::from(v)),
            "io.truth" => self.io.truth = Some(PathBuf::from(v)),
            "io.report" => self.io.report = Some(PathBuf::from(v)),
            "io.run_report" => self.io.run_report = Some(PathBuf::from(v)),
            "io.masks" => self.io.write_masks = parse_bool(k, v)?,
            "io.annotate" => self.io.annotate = parse_bool(k, v)?,

            "synth.width" => self.synth.width = parse_value(k, v)?,
            "synth.height" => self.synth.height = parse_value(k, v)?,
            "synth.frames" => self.synth.n_frames = parse_value(k, v)?,
            "synth.seed" => self.synth.seed = parse_value(k, v)?,
            "synth.water" => self.synth.water.base = parse_rgb(k, v)?,
            "synth.noise_std" => self.synth.water.noise_std = parse_value(k, v)?,
            "synth.wave_amplitude" => self.synth.water.wave_amplitude = parse_value(k, v)?,
            "synth.wave_length" => self.synth.water.wave_length = parse_value(k, v)?,
            "synth.wave_speed" => self.synth.water.wave_speed = parse_value(k, v)?,
            "synth.trail_length" => self.synth.wake.trail_length = parse_value(k, v)?,
            "synth.trail_height_fraction" => self.synth.wake.height_fraction = parse_value(k, v)?,
            "synth.trail_brightness" => self.synth.wake.brightness = parse_value(k, v)?,

            "bench.frames" => self.bench.frames = parse_value(k, v)?,

            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// `synth.ship.<index>.<field>`; missing ships up to `index` start as the default ship.
    fn apply_ship(&mut self, key: &str, rest: &str, v: &str) -> Result<(), ConfigError> {
        let (index, field) = rest
            .split_once('.')
            .ok_or_else(|| ConfigError::UnknownKey(key.to_string()))?;
        let index: usize = index
            .parse()
            .map_err(|_| ConfigError::UnknownKey(key.to_string()))?;
        let template = SceneSpec::default().ships[0].clone();
        while self.synth.ships.len() <= index {
            self.synth.ships.push(template.clone());
        }
        let ship: &mut ShipSpec = &mut self.synth.ships[index];
        let k = key;
        match field {
            "width" => ship.width = parse_value(k, v)?,
            "height" => ship.height = parse_value(k, v)?,
            "color" => ship.color = parse_rgb(k, v)?,
            "x" => ship.x = parse_value(k, v)?,
            "y" => ship.y = parse_value(k, v)?,
            "vx" => ship.vx = parse_value(k, v)?,
            "vy" => ship.vy = parse_value(k, v)?,
            "enter" => ship.enter = parse_value(k, v)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.backwash.validate().map_err(ConfigError::Invalid)?;
        self.tracker.validate().map_err(ConfigError::Invalid)?;
        if self.mask.close_kernel % 2 == 0 {
            return Err(ConfigError::Invalid(format!(
                "mask.close_kernel must be odd, got {}",
                self.mask.close_kernel
            )));
        }
        if self.mask.close_times < 1 {
            return Err(ConfigError::Invalid("mask.close_times must be at least 1".into()));
        }
        if !(self.eval.iou_min > 0.0 && self.eval.iou_min <= 1.0) {
            return Err(ConfigError::Invalid(format!(
                "eval.iou_min {} outside (0, 1]",
                self.eval.iou_min
            )));
        }
        Ok(())
    }

    /// Every setting as `(key, value)`, for report echoes.
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        let path = |p: &Option<PathBuf>| p.as_ref().map_or("-".to_string(), |p| p.display().to_string());
        push("model.n_samples", self.model.n_samples.to_string());
        push("model.phi_min", self.model.phi_min.to_string());
        push("model.r1", self.model.r1.to_string());
        push("model.r2", self.model.r2.to_string());
        push("model.subsample", self.model.subsample.to_string());
        push("model.seed", self.model.rng_seed.to_string());
        push("mask.close_kernel", self.mask.close_kernel.to_string());
        push("mask.close_times", self.mask.close_times.to_string());
        push(
            "labeling.connectivity",
            match self.labeling.connectivity {
                Connectivity::Four => "4".into(),
                Connectivity::Eight => "8".into(),
            },
        );
        push(
            "labeling.min_area",
            self.labeling.min_area.map_or("auto".into(), |a| a.to_string()),
        );
        push("backwash.t1", self.backwash.t1.to_string());
        push("backwash.t2", self.backwash.t2.to_string());
        push("backwash.tp1", self.backwash.tp1.to_string());
        push("backwash.tp2", self.backwash.tp2.to_string());
        push("backwash.height_fraction", self.backwash.height_fraction.to_string());
        push("backwash.gain_hist_bins", self.backwash.gain_hist_bins.to_string());
        push("backwash.gain_cap", self.backwash.gain_cap.to_string());
        push("tracker.iou_match_min", self.tracker.iou_match_min.to_string());
        push("tracker.max_missed", self.tracker.max_missed.to_string());
        push("tracker.roi_dilation", self.tracker.roi_dilation.to_string());
        push("eval.iou_min", self.eval.iou_min.to_string());
        push("io.input", path(&self.io.input));
        push("io.output", self.io.output.display().to_string());
        push("io.detections", path(&self.io.detections));
        push("io.truth", path(&self.io.truth));
        push("synth.width", self.synth.width.to_string());
        push("synth.height", self.synth.height.to_string());
        push("synth.frames", self.synth.n_frames.to_string());
        push("synth.seed", self.synth.seed.to_string());
        push("synth.water", fmt_rgb(self.synth.water.base));
        for (i, ship) in self.synth.ships.iter().enumerate() {
            push(&format!("synth.ship.{i}.color"), fmt_rgb(ship.color));
        }
        push("bench.frames", self.bench.frames.to_string());
        out
    }
}
