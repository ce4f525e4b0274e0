//! End-to-end commands: prepare, synth, train-classifier, train-regressor,
//! evaluate and predict. Every command is a pure function of its inputs,
//! configuration and seed; output files are written only after all work
//! has succeeded.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, category_counts, AgeCategory, Document, Labels, OversampleOptions};
use crate::ensemble::{self, ChainedInput, LabelMode};
use crate::error::{Error, Result};
use crate::eval::{self, ClassificationReport, RegressionReport};
use crate::features::{self, FeatureConfig, FeatureCounts, FeatureSpace, FeatureVector, Preset, Resources, WordClasses};
use crate::maxent::{self, GisConfig, StopReason};
use crate::persist::{self, Classifier, EnsembleFile, FileRef, Regressor, RegressorKind, SCHEMA_VERSION};
use crate::regression::{self, SgdConfig, TuneReport};
use crate::selection::{self, CRITICAL_90};
use crate::synth::{self, SynthConfig};
use crate::textproc::{self, Lexicon};

/// All pipeline settings. Loaded from TOML; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Corpus files used by `prepare` when none are given on the command line.
    pub corpus: Vec<PathBuf>,
    pub preset: Preset,
    pub classifier_min_df: u32,
    pub regressor_min_df: u32,
    pub critical: f64,
    pub split_ratio: f64,
    pub seed: u64,
    pub oversample_cap: Option<usize>,
    pub ensemble_mode: LabelMode,
    pub gis: GisConfig,
    pub sgd: SgdConfig,
    pub resources: ResourcePaths,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: Vec::new(),
            preset: Preset::Global,
            classifier_min_df: 10,
            regressor_min_df: 5,
            critical: CRITICAL_90,
            split_ratio: 0.9,
            seed: 42,
            oversample_cap: None,
            ensemble_mode: LabelMode::Predicted,
            gis: GisConfig::default(),
            sgd: SgdConfig::default(),
            resources: ResourcePaths::default(),
        }
    }
}

/// Optional replacements for the bundled word lists and lexicon.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourcePaths {
    pub stopwords: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub word_class_dir: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::validation(format!("invalid configuration: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::validation(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.classifier_min_df == 0 || self.regressor_min_df == 0 {
            return Err(Error::validation("min_df values must be at least 1"));
        }
        if !(self.critical.is_finite() && self.critical >= 0.0) {
            return Err(Error::validation("critical value must be non-negative"));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::validation("split_ratio must lie in (0, 1)"));
        }
        self.gis.validate()?;
        self.sgd.validate()
    }

    /// SGD settings with the pipeline seed.
    pub fn sgd_config(&self) -> SgdConfig {
        SgdConfig {
            seed: self.seed,
            ..self.sgd.clone()
        }
    }

    pub fn load_resources(&self) -> Result<Resources> {
        let mut res = Resources::bundled();
        let read = |p: &Path| fs::read_to_string(p).map_err(|e| Error::io(p, e));
        if let Some(p) = &self.resources.stopwords {
            res.stopwords = textproc::parse_word_list(&read(p)?);
        }
        if let Some(p) = &self.resources.lexicon {
            res.lexicon = Lexicon::parse(&read(p)?).map_err(|e| Error::validation(format!("{}: {e}", p.display())))?;
        }
        if let Some(p) = &self.resources.word_class_dir {
            res.word_classes = WordClasses::from_dir(p)?;
        }
        Ok(res)
    }
}

fn write_bytes(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// `dir/stem.suffix`, where `stem` is `path` without its extension.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

// ---------------------------------------------------------------- prepare

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideCounts {
    pub total: usize,
    pub categories: BTreeMap<AgeCategory, usize>,
}

impl SideCounts {
    fn of(docs: &[Document]) -> Self {
        SideCounts {
            total: docs.len(),
            categories: category_counts(docs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub seed: u64,
    pub split_ratio: f64,
    pub inputs: Vec<PathBuf>,
    pub oversampled: bool,
    pub train: SideCounts,
    pub test: SideCounts,
}

/// Cleans, labels and splits the inputs, then oversamples the training
/// side. Writes `train.jsonl`, `test.jsonl` and `manifest.json`.
pub fn prepare(inputs: &[PathBuf], out_dir: &Path, config: &PipelineConfig, oversample: bool) -> Result<Manifest> {
    let inputs = if inputs.is_empty() { &config.corpus[..] } else { inputs };
    if inputs.is_empty() {
        return Err(Error::validation("prepare needs at least one corpus file"));
    }
    let mut docs = Vec::new();
    for path in inputs {
        docs.extend(corpus::load_corpus(path)?);
    }
    let split = corpus::split(&docs, config.split_ratio, config.seed)?;
    let train = if oversample {
        corpus::oversample(
            &split.train,
            config.seed,
            &OversampleOptions {
                categories: None,
                cap: config.oversample_cap,
            },
        )?
    } else {
        split.train
    };
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        seed: config.seed,
        split_ratio: config.split_ratio,
        inputs: inputs.to_vec(),
        oversampled: oversample,
        train: SideCounts::of(&train),
        test: SideCounts::of(&split.test),
    };
    create_dir(out_dir)?;
    corpus::write_corpus(out_dir.join("train.jsonl"), &train)?;
    corpus::write_corpus(out_dir.join("test.jsonl"), &split.test)?;
    persist::write_json(out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

// ------------------------------------------------------------------ synth

pub fn synth(out: &Path, config: &SynthConfig) -> Result<usize> {
    let docs = synth::generate(config)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    corpus::write_corpus(out, &docs)?;
    Ok(docs.len())
}

// --------------------------------------------------------------- features

/// Feature counts of each document, in input order.
pub fn featurize_docs(docs: &[Document], config: FeatureConfig, resources: &Resources) -> Vec<FeatureCounts> {
    docs.par_iter()
        .map(|d| features::featurize(&d.text, config, resources))
        .collect()
}

/// Vectorizes counts; token-free documents give an empty vector.
pub fn vectorize_all(counts: &[FeatureCounts], space: &FeatureSpace) -> Vec<FeatureVector> {
    counts
        .par_iter()
        .map(|c| {
            if c.token_count == 0 {
                FeatureVector::default()
            } else {
                features::vectorize_counts(c, space).expect("token count checked")
            }
        })
        .collect()
}

fn classifier_vectors(docs: &[Document], classifier: &Classifier, resources: &Resources) -> Vec<FeatureVector> {
    vectorize_all(&featurize_docs(docs, classifier.features, resources), &classifier.space)
}

fn regressor_vectors(docs: &[Document], regressor: &Regressor, resources: &Resources) -> Vec<FeatureVector> {
    vectorize_all(&featurize_docs(docs, regressor.features, resources), &regressor.space)
}

// ------------------------------------------------------- train-classifier

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierSummary {
    pub candidate_features: usize,
    pub selected_features: usize,
    pub parameters: usize,
    pub iterations: usize,
    pub stop: StopReason,
    pub final_log_likelihood: f64,
}

/// Builds the classifier feature space for `docs`: indexing at
/// `classifier_min_df`, then chi-squared selection.
pub fn classifier_space(
    counts: &[FeatureCounts],
    labels: &[AgeCategory],
    config: &PipelineConfig,
) -> Result<(FeatureSpace, FeatureSpace, Vec<AgeCategory>, Vec<selection::FeatureScore>)> {
    let full = features::build_space(counts, config.classifier_min_df)?;
    let vectors = vectorize_all(counts, &full);
    let labeled: Vec<_> = vectors.into_iter().zip(labels.iter().copied()).collect();
    let (categories, scores) = selection::score_features(&full, &labeled, config.critical)?;
    let kept: BTreeSet<u32> = scores.iter().filter(|s| s.kept).map(|s| s.id).collect();
    if kept.is_empty() {
        return Err(Error::validation(format!(
            "no feature reaches the chi-squared critical value {}",
            config.critical
        )));
    }
    Ok((full.restrict(&kept), full, categories, scores))
}

/// Trains and saves a classifier; also writes `<stem>.log.csv` (GIS trace)
/// and `<stem>.chi2.csv` (selection report) next to `out`.
pub fn train_classifier(train: &Path, out: &Path, config: &PipelineConfig) -> Result<ClassifierSummary> {
    config.validate()?;
    let docs = corpus::load_corpus(train)?;
    if docs.is_empty() {
        return Err(Error::validation(format!("{}: no training documents", train.display())));
    }
    let resources = config.load_resources()?;
    let features = config.preset.config();
    let counts = featurize_docs(&docs, features, &resources);
    let labels: Vec<AgeCategory> = docs.iter().map(|d| d.category.expect("labeled load")).collect();
    let (space, full, categories, scores) = classifier_space(&counts, &labels, config)?;
    let vectors = vectorize_all(&counts, &space);
    let data: Vec<_> = vectors.into_iter().zip(labels).collect();
    let (model, log) = maxent::train_gis_logged(&data, &config.gis)?;

    let classifier = Classifier {
        preset: config.preset.name().to_string(),
        features,
        min_df: config.classifier_min_df,
        critical: config.critical,
        space,
        model,
    };
    let mut report = Vec::new();
    selection::write_report(&mut report, &full, &categories, &scores).expect("writing to memory");
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    persist::save_classifier(out, &classifier)?;
    write_bytes(&sibling(out, "log.csv"), log.to_csv())?;
    write_bytes(&sibling(out, "chi2.csv"), report)?;
    Ok(ClassifierSummary {
        candidate_features: full.len(),
        selected_features: classifier.space.len(),
        parameters: classifier.model.n_parameters(),
        iterations: log.records.len() - 1,
        stop: log.stop,
        final_log_likelihood: log.final_record().log_likelihood,
    })
}

// -------------------------------------------------------- train-regressor

#[derive(Debug, Clone, PartialEq)]
pub struct RegressorSummary {
    pub features: usize,
    pub documents: usize,
    pub tuning: TuneReport,
    pub ensemble_file: Option<PathBuf>,
}

/// Keeps documents with an exact age. Category-only documents are an error
/// unless `drop_category_only` is set.
fn age_labeled(docs: Vec<Document>, drop_category_only: bool) -> Result<Vec<Document>> {
    let missing: Vec<&str> = docs.iter().filter(|d| d.age.is_none()).map(|d| d.id.as_str()).collect();
    if !missing.is_empty() && !drop_category_only {
        let shown: Vec<_> = missing.iter().take(10).collect();
        return Err(Error::validation(format!(
            "{} document(s) have no exact age and cannot train a regressor: {shown:?}{}",
            missing.len(),
            if missing.len() > shown.len() { " ..." } else { "" }
        )));
    }
    if !missing.is_empty() {
        log::info!("dropping {} category-only document(s)", missing.len());
    }
    Ok(docs.into_iter().filter(|d| d.age.is_some()).collect())
}

/// Reference from an ensemble file to `target`: relative to the ensemble's
/// directory when `target` lives inside it, absolute otherwise.
fn reference(ensemble_dir: &Path, target: &Path) -> Result<FileRef> {
    let mut r = persist::file_ref(target)?;
    let canon = |p: &Path| fs::canonicalize(p).map_err(|e| Error::io(p, e));
    let dir = canon(if ensemble_dir.as_os_str().is_empty() { Path::new(".") } else { ensemble_dir })?;
    let full = canon(target)?;
    r.path = full.strip_prefix(&dir).map(Path::to_path_buf).unwrap_or(full);
    Ok(r)
}

/// Trains and saves a regressor. With `ensemble_classifier`, the predicted
/// (or gold) category is injected as an indicator feature and
/// `<stem>.ensemble.json` is written next to `out`. A grid report goes to
/// `<stem>.tuning.csv`.
pub fn train_regressor(
    train: &Path,
    out: &Path,
    config: &PipelineConfig,
    ensemble_classifier: Option<&Path>,
    drop_category_only: bool,
) -> Result<RegressorSummary> {
    config.validate()?;
    let docs = age_labeled(corpus::load_corpus(train)?, drop_category_only)?;
    if docs.is_empty() {
        return Err(Error::validation(format!("{}: no documents with an exact age", train.display())));
    }
    let classifier = ensemble_classifier.map(persist::load_classifier).transpose()?;
    let resources = config.load_resources()?;
    let features = config.preset.config().without_bigrams();
    let counts = featurize_docs(&docs, features, &resources);
    let text_space = features::build_space(&counts, config.regressor_min_df)?;
    let ages: Vec<f64> = docs.iter().map(|d| f64::from(d.age.expect("filtered"))).collect();
    let sgd = config.sgd_config();

    let (regressor, tuning) = match &classifier {
        None => {
            let data: Vec<_> = vectorize_all(&counts, &text_space).into_iter().zip(ages).collect();
            let (model, tuning) = regression::tune_with_report(&data, &sgd)?;
            let r = Regressor {
                kind: RegressorKind::Default,
                features,
                min_df: config.regressor_min_df,
                space: text_space,
                model,
            };
            (r, tuning)
        }
        Some(classifier) => {
            let class_vectors = classifier_vectors(&docs, classifier, &resources);
            let assigned: Vec<AgeCategory> = match config.ensemble_mode {
                LabelMode::Predicted => class_vectors
                    .par_iter()
                    .map(|v| maxent::predict(&classifier.model, v))
                    .collect(),
                LabelMode::Gold => docs.iter().map(|d| d.category.expect("labeled load")).collect(),
            };
            let mut indicator_df = [0u32; 6];
            for c in &assigned {
                indicator_df[c.ordinal()] += 1;
            }
            let space = text_space.with_category_indicators(indicator_df)?;
            let data: Vec<_> = class_vectors
                .into_iter()
                .zip(vectorize_all(&counts, &space))
                .zip(ages)
                .map(|((classifier, regressor), age)| (ChainedInput { classifier, regressor }, age))
                .collect();
            let (model, tuning) =
                ensemble::train_ensemble(classifier.model.clone(), &data, &space, &sgd, config.ensemble_mode)?;
            let r = Regressor {
                kind: RegressorKind::Ensemble,
                features,
                min_df: config.regressor_min_df,
                space,
                model: model.regressor,
            };
            (r, tuning)
        }
    };

    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    persist::save_regressor(out, &regressor)?;
    write_bytes(&sibling(out, "tuning.csv"), tuning_csv(&tuning))?;
    let ensemble_file = match ensemble_classifier {
        None => None,
        Some(cpath) => {
            let epath = sibling(out, "ensemble.json");
            let dir = epath.parent().unwrap_or(Path::new(""));
            let file = EnsembleFile {
                schema_version: SCHEMA_VERSION,
                label_mode: config.ensemble_mode,
                classifier: reference(dir, cpath)?,
                regressor: reference(dir, out)?,
            };
            persist::save_ensemble(&epath, &file)?;
            Some(epath)
        }
    };
    Ok(RegressorSummary {
        features: regressor.space.len(),
        documents: docs.len(),
        tuning,
        ensemble_file,
    })
}

fn tuning_csv(report: &TuneReport) -> String {
    let mut s = String::from("learning_rate,reg_param,validation_mae,chosen\n");
    for c in &report.cells {
        s.push_str(&format!(
            "{},{},{},{}\n",
            c.learning_rate,
            c.reg_param,
            c.validation_mae,
            c == &report.chosen
        ));
    }
    s
}

// ------------------------------------------------------- evaluate/predict

/// Models to evaluate or apply.
#[derive(Debug, Clone, Default)]
pub struct ModelPaths {
    pub classifier: Option<PathBuf>,
    pub regressor: Option<PathBuf>,
    pub ensemble: Option<PathBuf>,
}

struct LoadedModels {
    classifier: Option<Classifier>,
    regressor: Option<Regressor>,
    ensemble: Option<(Classifier, Regressor)>,
}

impl ModelPaths {
    fn load(&self) -> Result<LoadedModels> {
        if self.classifier.is_none() && self.regressor.is_none() && self.ensemble.is_none() {
            return Err(Error::validation("no model given (use --classifier, --regressor or --ensemble)"));
        }
        let regressor = self.regressor.as_deref().map(persist::load_regressor).transpose()?;
        if let Some(r) = &regressor {
            if r.kind == RegressorKind::Ensemble {
                return Err(Error::validation(
                    "an ensemble regressor needs its classifier; pass the .ensemble.json file with --ensemble",
                ));
            }
        }
        Ok(LoadedModels {
            classifier: self.classifier.as_deref().map(persist::load_classifier).transpose()?,
            regressor,
            ensemble: self
                .ensemble
                .as_deref()
                .map(persist::load_ensemble)
                .transpose()?
                .map(|(_, c, r)| (c, r)),
        })
    }
}

/// Per-document outputs of every loaded model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub category: Option<AgeCategory>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub age: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble_category: Option<AgeCategory>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble_age: Option<f64>,
}

fn predict_docs(models: &LoadedModels, docs: &[Document], resources: &Resources) -> Vec<Prediction> {
    let categories: Option<Vec<AgeCategory>> = models.classifier.as_ref().map(|c| {
        classifier_vectors(docs, c, resources)
            .par_iter()
            .map(|v| maxent::predict(&c.model, v))
            .collect()
    });
    let ages: Option<Vec<f64>> = models.regressor.as_ref().map(|r| {
        regressor_vectors(docs, r, resources)
            .par_iter()
            .map(|v| regression::predict_age(&r.model, v))
            .collect()
    });
    let chained: Option<Vec<(AgeCategory, f64)>> = models.ensemble.as_ref().map(|(c, r)| {
        let model = ensemble::EnsembleModel {
            classifier: c.model.clone(),
            regressor: r.model.clone(),
            indicators: r.space.category_indicators().expect("checked when loading"),
            mode: LabelMode::default(),
        };
        classifier_vectors(docs, c, resources)
            .into_par_iter()
            .zip(regressor_vectors(docs, r, resources))
            .map(|(classifier, regressor)| ensemble::predict_ensemble(&model, &ChainedInput { classifier, regressor }))
            .collect()
    });
    docs.iter()
        .enumerate()
        .map(|(i, d)| Prediction {
            id: d.id.clone(),
            category: categories.as_ref().map(|v| v[i]),
            age: ages.as_ref().map(|v| v[i]),
            ensemble_category: chained.as_ref().map(|v| v[i].0),
            ensemble_age: chained.as_ref().map(|v| v[i].1),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvaluationSummary {
    pub classification: Option<ClassificationReport>,
    pub ensemble_classification: Option<ClassificationReport>,
    pub default_regression: Option<RegressionReport>,
    pub ensemble_regression: Option<RegressionReport>,
    pub predictions: Vec<Prediction>,
}

fn regression_pairs(docs: &[Document], preds: &[Prediction], pick: impl Fn(&Prediction) -> Option<f64>) -> Vec<(f64, f64)> {
    docs.iter()
        .zip(preds)
        .filter_map(|(d, p)| Some((f64::from(d.age?), pick(p)?)))
        .collect()
}

/// Evaluates every given model on `test` and writes reports to `out_dir`:
/// `classification.{txt,csv}`, `confusion.csv`, `regression_<kind>.txt`,
/// `scatter_<kind>.csv` and `predictions.jsonl`.
pub fn evaluate(models: &ModelPaths, test: &Path, out_dir: &Path, config: &PipelineConfig) -> Result<EvaluationSummary> {
    let loaded = models.load()?;
    let docs = corpus::load_corpus(test)?;
    if docs.is_empty() {
        return Err(Error::validation(format!("{}: no test documents", test.display())));
    }
    let resources = config.load_resources()?;
    let preds = predict_docs(&loaded, &docs, &resources);
    let gold: Vec<AgeCategory> = docs.iter().map(|d| d.category.expect("labeled load")).collect();

    let mut summary = EvaluationSummary::default();
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    if loaded.classifier.is_some() {
        let pred: Vec<AgeCategory> = preds.iter().map(|p| p.category.expect("classifier ran")).collect();
        let report = eval::classification_report(&gold, &pred)?;
        files.push((out_dir.join("classification.txt"), report.to_table("classifier")));
        files.push((out_dir.join("classification.csv"), report.to_csv()));
        files.push((out_dir.join("confusion.csv"), report.confusion_csv()));
        summary.classification = Some(report);
    }
    if loaded.ensemble.is_some() {
        let pred: Vec<AgeCategory> = preds.iter().map(|p| p.ensemble_category.expect("ensemble ran")).collect();
        summary.ensemble_classification = Some(eval::classification_report(&gold, &pred)?);
    }
    for (kind, present, pick) in [
        ("default", loaded.regressor.is_some(), (|p: &Prediction| p.age) as fn(&Prediction) -> Option<f64>),
        ("ensemble", loaded.ensemble.is_some(), |p: &Prediction| p.ensemble_age),
    ] {
        if !present {
            continue;
        }
        let pairs = regression_pairs(&docs, &preds, pick);
        if pairs.is_empty() {
            return Err(Error::validation(format!("{}: no test documents with an exact age", test.display())));
        }
        let mut scatter = Vec::new();
        eval::write_scatter(&mut scatter, &pairs).expect("writing to memory");
        let report = eval::regression_report(pairs)?;
        files.push((out_dir.join(format!("regression_{kind}.txt")), report.to_table(&format!("{kind} regressor"))));
        files.push((out_dir.join(format!("scatter_{kind}.csv")), String::from_utf8(scatter).expect("ascii csv")));
        match kind {
            "default" => summary.default_regression = Some(report),
            _ => summary.ensemble_regression = Some(report),
        }
    }
    files.push((out_dir.join("predictions.jsonl"), predictions_jsonl(&preds)));

    create_dir(out_dir)?;
    for (path, content) in files {
        write_bytes(&path, content)?;
    }
    summary.predictions = preds;
    Ok(summary)
}

fn predictions_jsonl(preds: &[Prediction]) -> String {
    preds
        .iter()
        .map(|p| serde_json::to_string(p).expect("predictions serialize") + "\n")
        .collect()
}

/// Source of documents for [`predict`].
pub enum PredictInput {
    /// A JSON Lines corpus; labels are optional.
    Corpus(PathBuf),
    /// One raw text per line; ids are `line-<n>`.
    Lines(String),
}

/// One JSON line per input document.
pub fn predict(models: &ModelPaths, input: PredictInput, config: &PipelineConfig) -> Result<String> {
    let loaded = models.load()?;
    let docs = match input {
        PredictInput::Corpus(path) => corpus::load_corpus_with(path, Labels::Optional)?,
        PredictInput::Lines(text) => text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| Document {
                id: format!("line-{}", i + 1),
                text: corpus::clean_text(l),
                age: None,
                category: None,
                source: String::new(),
            })
            .collect(),
    };
    let resources = config.load_resources()?;
    Ok(predictions_jsonl(&predict_docs(&loaded, &docs, &resources)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_round_trip_through_toml() {
        let config = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml_str(&config.to_toml()).unwrap(), config);
        let partial = PipelineConfig::from_toml_str("seed = 7\npreset = \"NGRAM\"\n[gis]\nmax_iterations = 5\n").unwrap();
        assert_eq!(partial.seed, 7);
        assert_eq!(partial.preset, Preset::Ngram);
        assert_eq!(partial.gis.max_iterations, 5);
        assert_eq!(partial.gis.constraint_tolerance, 1e-3);
        assert_eq!(partial.classifier_min_df, 10);
        assert_eq!(partial.regressor_min_df, 5);
        assert_eq!(partial.critical, 2.71);
        assert_eq!(partial.split_ratio, 0.9);
    }

    #[test]
    fn config_rejects_unknown_and_invalid_fields() {
        assert!(PipelineConfig::from_toml_str("sed = 1").is_err());
        assert!(PipelineConfig::from_toml_str("split_ratio = 1.5").is_err());
        assert!(PipelineConfig::from_toml_str("preset = \"BIGRAM\"").is_err());
    }

    #[test]
    fn sibling_paths() {
        assert_eq!(sibling(Path::new("m/c.json"), "log.csv"), PathBuf::from("m/c.log.csv"));
        assert_eq!(sibling(Path::new("r.json"), "ensemble.json"), PathBuf::from("r.ensemble.json"));
    }

    #[test]
    fn category_only_documents_are_named() {
        let docs = vec![
            Document::labeled("a", "x", Some(30), None).unwrap(),
            Document::labeled("b", "y", None, Some(AgeCategory::From65)).unwrap(),
        ];
        let err = age_labeled(docs.clone(), false).unwrap_err();
        assert!(err.to_string().contains("\"b\""));
        assert_eq!(age_labeled(docs, true).unwrap().len(), 1);
    }
}
