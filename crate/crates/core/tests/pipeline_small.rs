use std::fs;
use std::io::BufReader;
use std::path::Path;

use agepred::pipeline::{self, Manifest, ModelPaths, PipelineConfig, PredictInput};
use agepred::synth::SynthConfig;
use agepred::{eval, AgeCategory};

fn line_count(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count()
}

struct Fixture {
    dir: tempfile::TempDir,
    config: PipelineConfig,
}

impl Fixture {
    fn new(n_docs: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let corpus = dir.path().join("corpus.jsonl");
        pipeline::synth(&corpus, &SynthConfig { n_docs, seed: 3, ..Default::default() }).unwrap();
        let config = PipelineConfig { seed: 3, ..Default::default() };
        pipeline::prepare(&[corpus], &dir.path().join("data"), &config, true).unwrap();
        Fixture { dir, config }
    }

    fn path(&self, rel: &str) -> std::path::PathBuf {
        self.dir.path().join(rel)
    }
}

#[test]
fn manifest_matches_written_splits() {
    let f = Fixture::new(400);
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(f.path("data/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.train.total, line_count(&f.path("data/train.jsonl")));
    assert_eq!(manifest.test.total, line_count(&f.path("data/test.jsonl")));
    assert_eq!(manifest.train.categories.values().sum::<usize>(), manifest.train.total);
    assert!(manifest.oversampled);
    // oversampling equalizes the training categories
    let counts: Vec<usize> = manifest.train.categories.values().copied().collect();
    assert!(counts.windows(2).all(|w| w[0] == w[1]), "{counts:?}");
}

#[test]
fn classifier_log_is_monotone_and_reports_match_direct_metrics() {
    let f = Fixture::new(600);
    let train = f.path("data/train.jsonl");
    let clf = f.path("models/clf.json");
    let reg = f.path("models/reg.json");
    let summary = pipeline::train_classifier(&train, &clf, &f.config).unwrap();
    pipeline::train_regressor(&train, &reg, &f.config, None, false).unwrap();

    let log = fs::read_to_string(f.path("models/clf.log.csv")).unwrap();
    let mut lines = log.lines();
    assert_eq!(lines.next(), Some("iteration,log_likelihood,max_residual"));
    let ll: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(ll.len(), summary.iterations + 1);
    assert!(ll.windows(2).all(|w| w[1] >= w[0] - 1e-9));

    let models = ModelPaths {
        classifier: Some(clf),
        regressor: Some(reg),
        ensemble: None,
    };
    let test = f.path("data/test.jsonl");
    let s = pipeline::evaluate(&models, &test, &f.path("reports"), &f.config).unwrap();
    let docs = agepred::corpus::load_corpus(&test).unwrap();
    let gold: Vec<AgeCategory> = docs.iter().map(|d| d.category.unwrap()).collect();
    let pred: Vec<AgeCategory> = s.predictions.iter().map(|p| p.category.unwrap()).collect();
    assert_eq!(s.classification.as_ref().unwrap(), &eval::classification_report(&gold, &pred).unwrap());

    let scatter_path = f.path("reports/scatter_default.csv");
    let pairs = eval::read_scatter(BufReader::new(fs::File::open(&scatter_path).unwrap()), &scatter_path).unwrap();
    let direct = eval::regression_report(pairs).unwrap();
    let reported = s.default_regression.unwrap();
    assert_eq!(reported.mae, direct.mae);
    assert_eq!(reported.pearson_r, direct.pearson_r);
    assert!(f.path("reports/classification.txt").exists());
    assert!(!f.path("reports/regression_ensemble.txt").exists());

    let empty = pipeline::predict(&models, PredictInput::Lines(String::new()), &f.config).unwrap();
    assert!(empty.is_empty());
}

#[test]
fn schema_mismatch_fails_without_partial_output() {
    let f = Fixture::new(300);
    let reg = f.path("models/reg.json");
    pipeline::train_regressor(&f.path("data/train.jsonl"), &reg, &f.config, None, false).unwrap();
    let text = fs::read_to_string(&reg).unwrap().replacen("\"schema_version\": 1", "\"schema_version\": 2", 1);
    fs::write(&reg, text).unwrap();
    let models = ModelPaths {
        regressor: Some(reg),
        ..Default::default()
    };
    let err = pipeline::evaluate(&models, &f.path("data/test.jsonl"), &f.path("reports"), &f.config).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(err.to_string().contains("schema_version"), "{err}");
    assert!(!f.path("reports").exists());
}
