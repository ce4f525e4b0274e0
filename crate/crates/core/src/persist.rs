//! Versioned JSON model files.
//!
//! Classifier and regressor files embed the feature space needed to
//! vectorize new text. Ensemble files reference both by path and SHA-256.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::AgeCategory;
use crate::ensemble::LabelMode;
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureKey, FeatureKind, FeatureSpace};
use crate::maxent::{Lambda, MaxEntModel};
use crate::regression::LassoModel;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceFile {
    pub n_docs: u32,
    /// `(kind, name, doc_freq)` in id order.
    pub features: Vec<(FeatureKind, String, u32)>,
}

impl SpaceFile {
    pub fn from_space(space: &FeatureSpace) -> Self {
        SpaceFile {
            n_docs: space.n_docs(),
            features: space.entries().map(|(k, df)| (k.kind, k.name.clone(), df)).collect(),
        }
    }

    pub fn to_space(&self) -> Result<FeatureSpace> {
        FeatureSpace::from_entries(
            self.features
                .iter()
                .map(|(kind, name, df)| (FeatureKey::new(*kind, name.clone()), *df))
                .collect(),
            self.n_docs,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierFile {
    pub schema_version: u32,
    pub preset: String,
    pub features: FeatureConfig,
    pub min_df: u32,
    pub critical: f64,
    pub categories: Vec<AgeCategory>,
    pub correction_constant: f64,
    pub correction_weights: Vec<f64>,
    /// `(category, feature id, lambda)`.
    pub lambda: Vec<(AgeCategory, u32, f64)>,
    pub feature_space: SpaceFile,
}

/// A classifier together with its feature extraction settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub preset: String,
    pub features: FeatureConfig,
    pub min_df: u32,
    pub critical: f64,
    pub space: FeatureSpace,
    pub model: MaxEntModel,
}

impl Classifier {
    pub fn to_file(&self) -> ClassifierFile {
        ClassifierFile {
            schema_version: SCHEMA_VERSION,
            preset: self.preset.clone(),
            features: self.features,
            min_df: self.min_df,
            critical: self.critical,
            categories: self.model.categories().to_vec(),
            correction_constant: self.model.correction_constant(),
            correction_weights: self.model.correction_weights().to_vec(),
            lambda: self.model.lambdas().map(|l| (l.category, l.feature, l.value)).collect(),
            feature_space: SpaceFile::from_space(&self.space),
        }
    }

    pub fn from_file(file: ClassifierFile) -> Result<Self> {
        check_version(file.schema_version)?;
        let space = file.feature_space.to_space()?;
        let model = MaxEntModel::from_parts(
            &file.categories,
            space.len(),
            file.lambda.iter().map(|&(category, feature, value)| Lambda {
                category,
                feature,
                value,
            }),
            file.correction_constant,
            file.correction_weights,
        )?;
        Ok(Classifier {
            preset: file.preset,
            features: file.features,
            min_df: file.min_df,
            critical: file.critical,
            space,
            model,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorKind {
    Default,
    Ensemble,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorFile {
    pub schema_version: u32,
    pub kind: RegressorKind,
    pub features: FeatureConfig,
    pub min_df: u32,
    pub intercept: f64,
    pub reg_param: f64,
    pub learning_rate: f64,
    /// `(feature id, weight)` for nonzero weights.
    pub weights: Vec<(u32, f64)>,
    pub feature_space: SpaceFile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regressor {
    pub kind: RegressorKind,
    pub features: FeatureConfig,
    pub min_df: u32,
    pub space: FeatureSpace,
    pub model: LassoModel,
}

impl Regressor {
    pub fn to_file(&self) -> RegressorFile {
        RegressorFile {
            schema_version: SCHEMA_VERSION,
            kind: self.kind,
            features: self.features,
            min_df: self.min_df,
            intercept: self.model.intercept,
            reg_param: self.model.reg_param,
            learning_rate: self.model.learning_rate,
            weights: self.model.nonzero_weights().collect(),
            feature_space: SpaceFile::from_space(&self.space),
        }
    }

    pub fn from_file(file: RegressorFile) -> Result<Self> {
        check_version(file.schema_version)?;
        let space = file.feature_space.to_space()?;
        let mut weights = vec![0.0; space.len()];
        for &(id, w) in &file.weights {
            let slot = weights
                .get_mut(id as usize)
                .ok_or_else(|| Error::validation(format!("regression weight for out-of-range feature {id}")))?;
            if !w.is_finite() {
                return Err(Error::validation(format!("non-finite regression weight for feature {id}")));
            }
            *slot = w;
        }
        if file.kind == RegressorKind::Ensemble {
            space.category_indicators()?;
        }
        Ok(Regressor {
            kind: file.kind,
            features: file.features,
            min_df: file.min_df,
            space,
            model: LassoModel {
                weights,
                intercept: file.intercept,
                reg_param: file.reg_param,
                learning_rate: file.learning_rate,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRef {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleFile {
    pub schema_version: u32,
    pub label_mode: LabelMode,
    pub classifier: FileRef,
    pub regressor: FileRef,
}

fn check_version(version: u32) -> Result<()> {
    if version != SCHEMA_VERSION {
        return Err(Error::validation(format!(
            "unsupported schema_version {version} (expected {SCHEMA_VERSION})"
        )));
    }
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("model types serialize");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_json(value)).map_err(|e| Error::io(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path, bytes: &[u8]) -> Result<T> {
    // check the version before the full parse so old files fail clearly
    #[derive(Deserialize)]
    struct Version {
        schema_version: Option<u32>,
    }
    let parse_err = |e: serde_json::Error| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    };
    let v: Version = serde_json::from_slice(bytes).map_err(parse_err)?;
    match v.schema_version {
        Some(version) => check_version(version)?,
        None => return Err(Error::validation(format!("{}: missing schema_version", path.display()))),
    }
    serde_json::from_slice(bytes).map_err(parse_err)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn save_classifier(path: impl AsRef<Path>, classifier: &Classifier) -> Result<()> {
    write_json(path, &classifier.to_file())
}

pub fn load_classifier(path: impl AsRef<Path>) -> Result<Classifier> {
    let path = path.as_ref();
    Classifier::from_file(read_json(path, &read_bytes(path)?)?)
}

pub fn save_regressor(path: impl AsRef<Path>, regressor: &Regressor) -> Result<()> {
    write_json(path, &regressor.to_file())
}

pub fn load_regressor(path: impl AsRef<Path>) -> Result<Regressor> {
    let path = path.as_ref();
    Regressor::from_file(read_json(path, &read_bytes(path)?)?)
}

/// Reference to an existing file, hashed from its current bytes.
pub fn file_ref(path: impl AsRef<Path>) -> Result<FileRef> {
    let path = path.as_ref();
    Ok(FileRef {
        path: path.to_path_buf(),
        sha256: sha256_hex(&read_bytes(path)?),
    })
}

pub fn save_ensemble(path: impl AsRef<Path>, file: &EnsembleFile) -> Result<()> {
    write_json(path, file)
}

/// Loads an ensemble file and the two models it references, verifying
/// their hashes. Relative references resolve against the ensemble file's
/// directory.
pub fn load_ensemble(path: impl AsRef<Path>) -> Result<(EnsembleFile, Classifier, Regressor)> {
    let path = path.as_ref();
    let file: EnsembleFile = read_json(path, &read_bytes(path)?)?;
    let base = path.parent().unwrap_or(Path::new(""));
    let load = |r: &FileRef| -> Result<(PathBuf, Vec<u8>)> {
        let target = if r.path.is_absolute() { r.path.clone() } else { base.join(&r.path) };
        let bytes = read_bytes(&target)?;
        let actual = sha256_hex(&bytes);
        if actual != r.sha256 {
            return Err(Error::validation(format!(
                "{}: content hash {actual} does not match the recorded {}",
                target.display(),
                r.sha256
            )));
        }
        Ok((target, bytes))
    };
    let (cpath, cbytes) = load(&file.classifier)?;
    let (rpath, rbytes) = load(&file.regressor)?;
    let classifier = Classifier::from_file(read_json(&cpath, &cbytes)?)?;
    let regressor = Regressor::from_file(read_json(&rpath, &rbytes)?)?;
    if regressor.kind != RegressorKind::Ensemble {
        return Err(Error::validation(format!("{} is not an ensemble regressor", rpath.display())));
    }
    Ok((file, classifier, regressor))
}
