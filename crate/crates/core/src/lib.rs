//! Clinical audio classification pipeline.
//!
//! The crate covers every stage between a folder of WAV recordings and a
//! participant-level evaluation report:
//!
//! - [`manifest`]: dataset model (participants, clips, labels, enrollment
//!   dates) and leakage-free temporal splits.
//! - [`audio_io`]: WAV decoding, band-limited resampling and fixed-length
//!   overlapping segmentation.
//! - [`stft_mel`]: STFT, mel filterbanks, log-mel planes and the three-FFT
//!   stacked mel representation.
//! - [`superlet`]: Morlet responses and the fractional adaptive superlet
//!   transform.
//! - [`render`]: normalization, colormaps, PNG export and small raster plots.
//! - [`model`]: a compact convolutional classifier trained with a weighted
//!   cross-entropy + pairwise contrastive loss under Adam.
//! - [`eval`]: majority voting, confusion matrices, ROC/AUC and stratified
//!   bootstrap intervals.
//! - [`synth_corpus`]: deterministic synthetic corpora used for pretraining
//!   and for end-to-end checks without clinical data.
//! - [`pipeline`]: configuration and orchestration used by the `specpipe` CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` rejects NaN too

pub mod audio_io;
pub mod eval;
pub mod manifest;
pub mod model;
pub mod pipeline;
pub mod render;
pub mod stft_mel;
pub mod superlet;
pub mod synth_corpus;
pub mod tensor;

pub use manifest::{Label, Manifest};
pub use tensor::{SpectrogramMode, SpectrogramTensor};
