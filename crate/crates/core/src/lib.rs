//! Data engineering and evaluation toolkit for industrial surface anomaly
//! detection.
//!
//! The crate covers the full supervised data path: synthetic defect textures
//! grown by a momentum random walk ([`synth`]), patch extraction, augmentation
//! and preprocessing ([`pipeline`]), the mixed fault-free / synthetic / real
//! training stream ([`stream`]), on-disk formats ([`io`]) and imbalance-aware
//! image- and pixel-level metrics ([`metrics`]).
//!
//! Every random decision goes through [`rng::SeedScope`], so a run is fixed by
//! its configuration and master seed regardless of thread count.

pub mod config;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod stream;
pub mod synth;

pub use config::{load_config, Fraction, ModalitySettings, PipelineConfig};
pub use error::{Error, Result};
pub use model::{BinaryMask, DefectGroup, GroundTruthMask, ImageLabel, Modality, ModalityId, Origin, Patch, Rect};
pub use rng::{derive_rng, SeedScope, StreamRng};
