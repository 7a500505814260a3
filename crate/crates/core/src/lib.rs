//! Metric, scoring, segmentation and search core for evaluating speech-corpus
//! preprocessing pipelines.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! computation over in-memory buffers and records; decoding audio, reading
//! manifests and writing reports live in the `curate` crate.
//!
//! Module map:
//!
//! - [`corpus`], [`metric`]: utterance and snapshot data model.
//! - [`sidecar`]: externally computed per-utterance values and their merge.
//! - [`dsp`]: WADA-SNR, YIN F0, MFCC and mel-cepstral distortion.
//! - [`vad`]: energy VAD, speech-rate classes, length-targeted concatenation.
//! - [`tpe`]: Tree-structured Parzen Estimator and VAD tuning.
//! - [`scoring`]: DR/SQ/AP/SD subset scores, composite objective, ranking.
//! - [`sweep`]: configuration grids, threshold filtering, sensitivity.
//! - [`synth`]: synthetic corpora with analytically known ground truth.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod corpus;
pub mod dsp;
mod error;
pub mod metric;
pub mod scoring;
pub mod sidecar;
pub mod stats;
pub mod sweep;
pub mod synth;
pub mod tpe;
pub mod vad;

pub use corpus::{CorpusSnapshot, Utterance};
pub use error::{Error, Result, RowIssue};
pub use metric::{Direction, MetricKind};
