//! Prosodic entrainment analysis toolkit.
//!
//! The crate covers the full chain from raw session inputs to entrainment
//! statistics:
//!
//! - [`ingest`]: WAV audio, f0 tracks, and dialog annotation parsing into a
//!   shared data model.
//! - [`dsp`]: contour preprocessing (gap interpolation, outlier removal,
//!   Savitzky-Golay smoothing, semitone transform), RMS energy, band-pass
//!   filtering, and a DCT with frequency mapping.
//! - [`structure`]: inter-pausal units, syllable nucleus detection, and a
//!   bootstrapped nearest-centroid pitch accent classifier.
//! - [`styl`]: superpositional f0 stylization (register lines, local accent
//!   polynomials, Gestalt deviations).
//! - [`features`]: the 37-feature turn vector across six feature sets.
//! - [`entrain`]: directed turn pairing, proximity/synchrony distances, and
//!   entrainment profiles.
//! - [`stats`]: mixed-effects tests with FDR correction, harvest tables,
//!   condensation probabilities, and task success measures.
//! - [`synthgen`]: synthetic dyads with controllable entrainment for
//!   end-to-end validation.
//! - [`pipeline`]: per-session orchestration of all stages.

pub mod dsp;
pub mod entrain;
pub mod error;
pub mod features;
pub mod ingest;
pub mod pipeline;
pub mod stats;
pub mod structure;
pub mod styl;
pub mod svg;
pub mod synthgen;
pub mod util;

pub use error::{Error, Result};
pub use ingest::{DialogAnnotation, Gender, Role, SampledTrack, TrackUnit, Waveform};
pub use pipeline::Params;
