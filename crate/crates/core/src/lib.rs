//! Ship detection and tracking for fixed-camera coastal video.
//!
//! The per-frame loop is:
//!
//! ```text
//! frame ─► segment (sample-based model, two thresholds) ─► update model
//!       ─► median 3x3 ─► closing ─► run-length labeling ─► small-blob filter
//!       ─► backwash cancellation ─► track association ─► first region ─┐
//!            ▲                                                         │
//!            └──────────────────── next frame ◄────────────────────────┘
//! ```
//!
//! Each stage lives in its own module; [`pipeline::Pipeline`] wires them
//! together and [`cli`] exposes the `detect`, `eval`, `synth` and `bench`
//! subcommands.

pub mod background_model;
pub mod backwash;
pub mod bbox;
pub mod cli;
pub mod config;
pub mod evaluation;
pub mod frame_io;
pub mod labeling;
pub mod mask_ops;
pub mod pipeline;
pub mod synth;
pub mod tracker;

pub use background_model::{BackgroundModel, ModelParams, RegionMask};
pub use backwash::{BackwashParams, ShipRegion};
pub use bbox::BBox;
pub use config::PipelineConfig;
pub use frame_io::{Frame, Rgb};
pub use labeling::{Component, Connectivity, Run};
pub use mask_ops::ForegroundMask;
pub use pipeline::Pipeline;
pub use tracker::{Track, Tracker, TrackerParams};
