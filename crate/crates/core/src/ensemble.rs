//! Classifier-to-regressor chaining: the predicted age category is injected
//! as a one-hot indicator feature before regressing exact age.
//!
//! The classifier and the regressor index text in their own feature spaces,
//! so every document is carried as a pair of vectors ([`ChainedInput`]).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{bucketize, AgeCategory};
use crate::error::{Error, Result};
use crate::features::{CategoryIndicators, FeatureSpace, FeatureVector};
use crate::maxent::{self, MaxEntModel};
use crate::regression::{self, LassoModel, SgdConfig, TuneReport};

/// Indicator weight of the injected category.
pub const INDICATOR_WEIGHT: f64 = 1.0;

/// Which category labels the regressor sees during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    #[default]
    Predicted,
    Gold,
}

impl fmt::Display for LabelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelMode::Predicted => "predicted",
            LabelMode::Gold => "gold",
        })
    }
}

impl FromStr for LabelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "predicted" => Ok(LabelMode::Predicted),
            "gold" => Ok(LabelMode::Gold),
            _ => Err(Error::validation(format!("unknown label mode {s:?} (expected predicted or gold)"))),
        }
    }
}

/// One document vectorized in both the classifier and the regressor space.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainedInput {
    pub classifier: FeatureVector,
    pub regressor: FeatureVector,
}

/// `fv` with exactly one category indicator set, to `cat`.
pub fn augment(fv: &FeatureVector, cat: AgeCategory, space: &FeatureSpace) -> Result<FeatureVector> {
    Ok(augment_with(fv, cat, &space.category_indicators()?))
}

pub fn augment_with(fv: &FeatureVector, cat: AgeCategory, indicators: &CategoryIndicators) -> FeatureVector {
    fv.with_exclusive_entry(indicators.id(cat), INDICATOR_WEIGHT, |id| indicators.contains(id))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    pub classifier: MaxEntModel,
    pub regressor: LassoModel,
    pub indicators: CategoryIndicators,
    pub mode: LabelMode,
}

/// Augments each regression vector with its training category and tunes
/// the regressor on the result. `space` is the regression space, which
/// must already hold the six indicators.
pub fn train_ensemble(
    classifier: MaxEntModel,
    data: &[(ChainedInput, f64)],
    space: &FeatureSpace,
    config: &SgdConfig,
    mode: LabelMode,
) -> Result<(EnsembleModel, TuneReport)> {
    let indicators = space.category_indicators()?;
    let augmented = data
        .iter()
        .map(|(input, age)| {
            let cat = match mode {
                LabelMode::Predicted => maxent::predict(&classifier, &input.classifier),
                LabelMode::Gold => bucketize(age.round() as i64)?,
            };
            Ok((augment_with(&input.regressor, cat, &indicators), *age))
        })
        .collect::<Result<Vec<_>>>()?;
    let (regressor, report) = regression::tune_with_report(&augmented, config)?;
    Ok((
        EnsembleModel {
            classifier,
            regressor,
            indicators,
            mode,
        },
        report,
    ))
}

/// Predicted category and clamped age.
pub fn predict_ensemble(model: &EnsembleModel, input: &ChainedInput) -> (AgeCategory, f64) {
    let cat = maxent::predict(&model.classifier, &input.classifier);
    let age = regression::predict_age(&model.regressor, &augment_with(&input.regressor, cat, &model.indicators));
    (cat, age)
}
