//! Author-age prediction from text: feature extraction, chi-squared
//! selection, a Maximum Entropy classifier trained with Generalized
//! Iterative Scaling, LASSO regression trained by SGD, and the chained
//! classifier-to-regressor ensemble.

pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod features;
pub mod maxent;
pub mod persist;
pub mod pipeline;
pub mod regression;
pub mod selection;
pub mod synth;
pub mod textproc;

pub use corpus::{bucketize, AgeCategory, CorpusSplit, Document};
pub use ensemble::{ChainedInput, EnsembleModel, LabelMode};
pub use error::{Error, Result};
pub use eval::{ClassificationReport, RegressionReport};
pub use features::{FeatureConfig, FeatureKey, FeatureKind, FeatureSpace, FeatureVector, Preset, Resources};
pub use maxent::{GisConfig, MaxEntModel};
pub use pipeline::PipelineConfig;
pub use regression::{LassoModel, SgdConfig};
pub use textproc::{PosTag, Token, TokenKind, TokenizedDocument};
