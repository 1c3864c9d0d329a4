use thiserror::Error;

use crate::config::ConfigError;
use crate::dhmm::HmmError;
use crate::eval::EvalError;
use crate::features::FeatureError;
use crate::model::ModelError;
use crate::preprocess::PreprocessError;
use crate::signal_io::SignalError;
use crate::vq::VqError;

/// Any pipeline failure, tagged with the module it came from.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Vq(#[from] VqError),
    #[error(transparent)]
    Hmm(#[from] HmmError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl Error {
    /// `module::Variant`, e.g. `preprocess::NoSpeech`.
    pub fn name(&self) -> String {
        let (module, variant) = match self {
            Self::Signal(e) => ("signal_io", e.name()),
            Self::Preprocess(e) => ("preprocess", e.name()),
            Self::Features(e) => ("features", e.name()),
            Self::Vq(e) => ("vq", e.name()),
            Self::Hmm(e) => ("dhmm", e.name()),
            Self::Eval(e) => ("eval", e.name()),
            Self::Config(e) => ("config", e.name()),
            Self::Model(e) => ("model", e.name()),
        };
        format!("{module}::{variant}")
    }
}
