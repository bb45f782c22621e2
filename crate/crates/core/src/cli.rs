//! Subcommand implementations behind the `shipwake` binary.
//!
//! Exit codes: 0 on success, 1 on a runtime failure, 2 on a bad configuration.

use std::fmt::Display;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, PipelineConfig, RawConfig};
use crate::evaluation::{count_frames, timing_report, EvalReport, GroundTruth, TimingReport};
use crate::frame_io::{
    annotate, open_sequence, read_records_file, write_mask_file, write_png, write_ppm, BoxRecord,
    DetectionRecord, DetectionWriter,
};
use crate::mask_ops::ForegroundMask;
use crate::pipeline::{detect_sequence, Pipeline, Step};
use crate::synth::{Scene, SceneSpec};

/// Environment variable that overrides `model.seed`.
pub const SEED_ENV: &str = "SHIPWAKE_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{stage}: {message}")]
    Runtime { stage: &'static str, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime { .. } => 1,
        }
    }
}

fn at<E: Display>(stage: &'static str) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Runtime {
        stage,
        message: e.to_string(),
    }
}

/// Turns `--section.key=value` / `--section.key value` arguments into assignments.
pub fn parse_overrides(args: &[String]) -> Result<RawConfig, ConfigError> {
    let mut raw = RawConfig::default();
    let mut iter = args.iter();
    while let Some(arg) = iter.next() {
        let body = arg
            .strip_prefix("--")
            .ok_or_else(|| ConfigError::Invalid(format!("unexpected argument `{arg}`")))?;
        match body.split_once('=') {
            Some((key, value)) => raw.set(key, value),
            None => {
                let value = iter
                    .next()
                    .ok_or_else(|| ConfigError::Invalid(format!("missing value for `--{body}`")))?;
                raw.set(body, value);
            }
        }
    }
    Ok(raw)
}

/// File, then `SHIPWAKE_SEED`, then command-line overrides.
pub fn resolve_config(
    config_file: Option<&Path>,
    overrides: &[String],
    seed_env: Option<&str>,
) -> Result<PipelineConfig, ConfigError> {
    let mut raw = match config_file {
        Some(path) => RawConfig::load(path)?,
        None => RawConfig::default(),
    };
    if let Some(seed) = seed_env {
        raw.set("model.seed", seed.trim());
    }
    raw.merge(parse_overrides(overrides)?);
    PipelineConfig::from_raw(&raw)
}

/// Written next to the detections so `eval` can report timing and seed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub rng_seed: u64,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub processed: usize,
    pub timing: Option<TimingSummary>,
    pub config: Vec<(String, String)>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TimingSummary {
    pub frames: usize,
    pub mean_ns: f64,
    pub median_ns: f64,
    pub p95_ns: f64,
    pub max_ns: f64,
}

impl From<&TimingReport> for TimingSummary {
    fn from(t: &TimingReport) -> Self {
        Self {
            frames: t.frames,
            mean_ns: t.mean_ns,
            median_ns: t.median_ns,
            p95_ns: t.p95_ns,
            max_ns: t.max_ns,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DetectSummary {
    pub frames: usize,
    pub processed: usize,
    pub boxes: usize,
    pub timing: Option<TimingReport>,
    pub detections_path: PathBuf,
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Runtime {
        stage: "create output",
        message: format!("{}: {e}", path.display()),
    })
}

fn dump_mask(dir: &Path, frame: usize, name: &str, mask: &ForegroundMask) -> Result<(), CliError> {
    write_mask_file(mask, &dir.join(format!("{frame:06}_{name}.pgm"))).map_err(at("write stage dump"))
}

/// Runs detection over `io.input`, writing detections, masks and a run report under `io.output`.
pub fn run_detect(config: &PipelineConfig, dump_stages: bool) -> Result<DetectSummary, CliError> {
    let descriptor = config.io.descriptor()?;
    let source = open_sequence(&descriptor).map_err(at("open input"))?;
    let (w, h) = source.dims();
    let out_dir = &config.io.output;
    create_dir(out_dir)?;
    let masks_dir = out_dir.join("masks");
    let stages_dir = out_dir.join("stages");
    let annotated_dir = out_dir.join("annotated");
    if config.io.write_masks {
        create_dir(&masks_dir)?;
    }
    if dump_stages {
        create_dir(&stages_dir)?;
    }
    if config.io.annotate {
        create_dir(&annotated_dir)?;
    }

    let detections_path = config.io.detections_path();
    if let Some(parent) = detections_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let file = File::create(&detections_path).map_err(|e| CliError::Runtime {
        stage: "write detections",
        message: format!("{}: {e}", detections_path.display()),
    })?;
    let mut writer = DetectionWriter::new(BufWriter::new(file));

    let mut pipeline = Pipeline::new(config, w, h)
        .map_err(at("initialize pipeline"))?
        .capture_stages(dump_stages);
    let mut frame_ns = Vec::new();
    let mut frames = 0;
    let mut boxes = 0;
    for frame in source.frames().map_err(at("open input"))? {
        let frame = frame.map_err(at("read frame"))?;
        frames += 1;
        let start = Instant::now();
        let step = pipeline.process(&frame).map_err(at("detect"))?;
        let elapsed = start.elapsed().as_nanos() as u64;
        let Step::Processed(out) = step else { continue };
        frame_ns.push(elapsed);
        boxes += out.tracks.len();

        let record = DetectionRecord::from_tracks(out.frame_index, &out.tracks);
        writer.write_record(&record).map_err(at("write detections"))?;
        if config.io.write_masks {
            write_mask_file(&out.mask, &masks_dir.join(format!("mask_{:06}.pgm", out.frame_index)))
                .map_err(at("write mask"))?;
        }
        if config.io.annotate {
            let boxes: Vec<_> = out.tracks.iter().map(|t| t.bbox).collect();
            let path = annotated_dir.join(format!("frame_{:06}.png", out.frame_index));
            let file = File::create(&path).map_err(at("write annotated frame"))?;
            write_png(&annotate(&frame, &boxes), BufWriter::new(file)).map_err(at("write annotated frame"))?;
        }
        if let Some(stages) = &out.stages {
            let i = out.frame_index;
            dump_mask(&stages_dir, i, "1_segmented", &stages.segmented)?;
            dump_mask(&stages_dir, i, "2_median", &stages.median)?;
            dump_mask(&stages_dir, i, "3_closed", &stages.closed)?;
            dump_mask(&stages_dir, i, "4_labeled", &stages.labeled)?;
            dump_mask(&stages_dir, i, "5_height", &stages.backwash.after_height)?;
            dump_mask(&stages_dir, i, "6_distortion", &stages.backwash.after_distortion)?;
            dump_mask(&stages_dir, i, "7_gain", &stages.backwash.after_gain)?;
            dump_mask(&stages_dir, i, "8_final", &out.mask)?;
        }
    }
    writer.flush().map_err(at("write detections"))?;

    let timing = timing_report(&frame_ns, (w, h)).ok();
    let report = RunReport {
        rng_seed: config.model.rng_seed,
        width: w,
        height: h,
        frames,
        processed: frame_ns.len(),
        timing: timing.as_ref().map(TimingSummary::from),
        config: config.entries(),
    };
    let json = serde_json::to_string_pretty(&report).map_err(at("write run report"))?;
    fs::write(config.io.run_report_path(), json).map_err(at("write run report"))?;

    Ok(DetectSummary {
        frames,
        processed: frame_ns.len(),
        boxes,
        timing,
        detections_path,
    })
}

/// Scores `io.detections` against `io.truth`.
pub fn run_eval(config: &PipelineConfig) -> Result<EvalReport, CliError> {
    let truth_path = config
        .io
        .truth
        .clone()
        .ok_or_else(|| ConfigError::Invalid("io.truth is required for eval".into()))?;
    let truth_records = read_records_file(&truth_path).map_err(at("read ground truth"))?;
    let truth = GroundTruth::from_records(&truth_records).map_err(at("read ground truth"))?;
    let detections = read_records_file(&config.io.detections_path()).map_err(at("read detections"))?;
    let counts = count_frames(&detections, &truth, config.eval.iou_min).map_err(at("evaluate"))?;
    let mut report = EvalReport::new(counts, config.eval.iou_min).map_err(at("evaluate"))?;
    report.config = config.entries();

    if let Ok(text) = fs::read_to_string(config.io.run_report_path()) {
        let run: RunReport = serde_json::from_str(&text).map_err(at("read run report"))?;
        report.rng_seed = Some(run.rng_seed);
        if let Some(t) = run.timing {
            report.timing.push(TimingReport {
                frames: t.frames,
                width: run.width,
                height: run.height,
                mean_ns: t.mean_ns,
                median_ns: t.median_ns,
                p95_ns: t.p95_ns,
                max_ns: t.max_ns,
            });
        }
    }

    if let Some(path) = &config.io.report {
        fs::write(path, report.render_text()).map_err(at("write report"))?;
        fs::write(path.with_extension("json"), report.render_json()).map_err(at("write report"))?;
    }
    Ok(report)
}

/// Renders the configured synthetic scene as PPM frames plus a ground-truth file.
///
/// Layout: `<io.output>/frames/frame_NNNNNN.ppm` and `<io.output>/truth.jsonl`.
pub fn run_synth(config: &PipelineConfig) -> Result<usize, CliError> {
    let scene = Scene::new(config.synth.clone()).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let frames_dir = config.io.output.join("frames");
    create_dir(&frames_dir)?;
    for t in 0..scene.len() {
        let path = frames_dir.join(format!("frame_{t:06}.ppm"));
        let file = File::create(&path).map_err(at("write frame"))?;
        let mut w = BufWriter::new(file);
        write_ppm(&scene.frame(t), &mut w).map_err(at("write frame"))?;
        w.flush().map_err(at("write frame"))?;
    }
    let truth_path = config.io.output.join("truth.jsonl");
    let file = File::create(&truth_path).map_err(at("write ground truth"))?;
    let mut writer = DetectionWriter::new(BufWriter::new(file));
    for t in 0..scene.len() {
        writer.write_record(&truth_record(&scene, t)).map_err(at("write ground truth"))?;
    }
    writer.flush().map_err(at("write ground truth"))?;
    Ok(scene.len())
}

/// Ground truth of frame `t`; box ids are 1-based ship indices.
pub fn truth_record(scene: &Scene, t: usize) -> DetectionRecord {
    let boxes = scene
        .spec()
        .ships
        .iter()
        .enumerate()
        .filter_map(|(i, s)| {
            s.bbox_at(t).map(|b| BoxRecord {
                id: i as u64 + 1,
                x: b.x,
                y: b.y,
                w: b.w,
                h: b.h,
            })
        })
        .collect();
    DetectionRecord { frame: t, boxes }
}

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub timing: TimingReport,
    pub boxes: usize,
}

/// Frame sizes benched when no input sequence is configured.
pub const BENCH_SIZES: [(usize, usize); 2] = [(200, 150), (640, 480)];

/// Times the pipeline on `io.input` if set, otherwise on synthetic scenes at [`BENCH_SIZES`].
pub fn run_bench(config: &PipelineConfig) -> Result<Vec<BenchRow>, CliError> {
    if config.io.input.is_some() {
        let source = open_sequence(&config.io.descriptor()?).map_err(at("open input"))?;
        let frames: Vec<_> = source
            .frames()
            .map_err(at("open input"))?
            .collect::<Result<_, _>>()
            .map_err(at("read frame"))?;
        return Ok(vec![bench_frames(config, source.dims(), frames)?]);
    }
    BENCH_SIZES
        .iter()
        .map(|&(w, h)| {
            let spec = SceneSpec {
                n_frames: config.bench.frames,
                seed: config.synth.seed,
                ..SceneSpec::scaled_default(w, h)
            };
            let scene = Scene::new(spec).map_err(|e| ConfigError::Invalid(e.to_string()))?;
            bench_frames(config, (w, h), scene.frames().collect())
        })
        .collect()
}

fn bench_frames(
    config: &PipelineConfig,
    dims: (usize, usize),
    frames: Vec<crate::frame_io::Frame>,
) -> Result<BenchRow, CliError> {
    let run = detect_sequence(config, dims, frames).map_err(at("detect"))?;
    let timing = timing_report(&run.frame_ns, dims).map_err(|_| CliError::Runtime {
        stage: "bench",
        message: "sequence too short: no frame after model initialization".into(),
    })?;
    Ok(BenchRow {
        timing,
        boxes: run.records.iter().map(|r| r.boxes.len()).sum(),
    })
}
