//! Benchmark fixtures built from a seeded synthetic corpus.

use agepred::features::{self, FeatureCounts};
use agepred::synth::{self, SynthConfig};
use agepred::{AgeCategory, Document, FeatureSpace, FeatureVector, Preset, Resources};

pub struct Fixture {
    pub docs: Vec<Document>,
    pub resources: Resources,
    pub counts: Vec<FeatureCounts>,
    pub space: FeatureSpace,
    pub vectors: Vec<FeatureVector>,
}

impl Fixture {
    /// `n_docs` synthetic documents featurized with `preset` at `min_df`.
    pub fn new(n_docs: usize, preset: Preset, min_df: u32) -> Self {
        let docs = synth::generate(&SynthConfig {
            n_docs,
            seed: 1,
            ..Default::default()
        })
        .expect("valid synth config");
        let resources = Resources::bundled();
        let counts: Vec<_> = docs
            .iter()
            .map(|d| features::featurize(&d.text, preset.config(), &resources))
            .collect();
        let space = features::build_space(&counts, min_df).expect("min_df >= 1");
        let vectors = counts
            .iter()
            .map(|c| features::vectorize_counts(c, &space).expect("same space"))
            .collect();
        Fixture {
            docs,
            resources,
            counts,
            space,
            vectors,
        }
    }

    pub fn labeled(&self) -> Vec<(FeatureVector, AgeCategory)> {
        self.vectors
            .iter()
            .zip(&self.docs)
            .map(|(v, d)| (v.clone(), d.category.expect("synthetic docs are labeled")))
            .collect()
    }

    pub fn aged(&self) -> Vec<(FeatureVector, f64)> {
        self.vectors
            .iter()
            .zip(&self.docs)
            .map(|(v, d)| (v.clone(), f64::from(d.age.expect("synthetic docs have ages"))))
            .collect()
    }
}
