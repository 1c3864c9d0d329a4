//! Noise-robust closed-set speaker identification.
//!
//! The pipeline denoises and trims each utterance ([`preprocess`]), turns it
//! into per-frame feature vectors ([`features`]), quantizes those against a
//! codebook designed by a genetic algorithm or by LBG ([`vq`]), and scores
//! the resulting symbol streams with one discrete HMM per speaker
//! ([`dhmm`]). [`eval`] runs the whole thing over a corpus at several noise
//! types and SNRs and renders identification-rate tables.
//!
//! The guide under `book/` walks through each stage; its code listings are
//! compiled and run as doctests of this crate.

pub mod config;
pub mod dhmm;
pub mod dsp;
mod error;
pub mod eval;
pub mod features;
pub mod model;
pub mod preprocess;
pub mod signal_io;
pub mod vq;

pub use error::Error;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/preprocessing.md")]
    pub struct Preprocessing;
    #[doc = include_str!("../../../book/src/features.md")]
    pub struct Features;
    #[doc = include_str!("../../../book/src/codebooks.md")]
    pub struct Codebooks;
    #[doc = include_str!("../../../book/src/dhmm.md")]
    pub struct Dhmm;
    #[doc = include_str!("../../../book/src/evaluation.md")]
    pub struct Evaluation;
    #[doc = include_str!("../../../book/src/formats.md")]
    pub struct Formats;
}
