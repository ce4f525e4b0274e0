//! Content and stylistic feature extraction, the feature index, and
//! length-normalized sparse document vectors.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::AgeCategory;
use crate::error::{Error, Result};
use crate::textproc::{self, Lexicon, TokenKind, TokenizedDocument};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Unigram,
    Bigram,
    PosUnigram,
    PosBigram,
    LiwcClass,
    StyleStat,
    CategoryIndicator,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FeatureKey {
    pub kind: FeatureKind,
    pub name: String,
}

impl FeatureKey {
    pub fn new(kind: FeatureKind, name: impl Into<String>) -> Self {
        FeatureKey { kind, name: name.into() }
    }

    pub fn category_indicator(category: AgeCategory) -> Self {
        FeatureKey::new(FeatureKind::CategoryIndicator, category.label())
    }
}

impl fmt::Display for FeatureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            FeatureKind::Unigram => "unigram",
            FeatureKind::Bigram => "bigram",
            FeatureKind::PosUnigram => "pos_unigram",
            FeatureKind::PosBigram => "pos_bigram",
            FeatureKind::LiwcClass => "liwc_class",
            FeatureKind::StyleStat => "style_stat",
            FeatureKind::CategoryIndicator => "category_indicator",
        };
        write!(f, "{kind}:{}", self.name)
    }
}

/// Names of the `style_stat` features.
pub mod style {
    pub const SENTENCE_COUNT: &str = "sentence_count";
    pub const WORD_COUNT: &str = "word_count";
    pub const AVG_WORDS_PER_SENTENCE: &str = "avg_words_per_sentence";

    /// Per-character punctuation counters.
    pub const PUNCTUATION: [(char, &str); 11] = [
        ('.', "punct_period"),
        (',', "punct_comma"),
        (';', "punct_semicolon"),
        (':', "punct_colon"),
        ('!', "punct_exclamation"),
        ('?', "punct_question"),
        ('\'', "punct_apostrophe"),
        ('"', "punct_quote"),
        ('(', "punct_lparen"),
        (')', "punct_rparen"),
        ('-', "punct_hyphen"),
    ];

    pub fn punctuation_name(c: char) -> Option<&'static str> {
        PUNCTUATION.iter().find(|(p, _)| *p == c).map(|(_, n)| *n)
    }

    pub fn all_names() -> impl Iterator<Item = &'static str> {
        [SENTENCE_COUNT, WORD_COUNT, AVG_WORDS_PER_SENTENCE]
            .into_iter()
            .chain(PUNCTUATION.iter().map(|(_, n)| *n))
    }
}

/// The four feature presets used for the classifier comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Preset {
    Unigram,
    Ngram,
    Style,
    Global,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Unigram, Preset::Ngram, Preset::Style, Preset::Global];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Unigram => "UNIGRAM",
            Preset::Ngram => "NGRAM",
            Preset::Style => "STYLE",
            Preset::Global => "GLOBAL",
        }
    }

    pub fn config(self) -> FeatureConfig {
        let (bigrams, style) = match self {
            Preset::Unigram => (false, false),
            Preset::Ngram => (true, false),
            Preset::Style => (false, true),
            Preset::Global => (true, true),
        };
        FeatureConfig {
            unigrams: true,
            bigrams,
            style,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::validation(format!("unknown feature preset {s:?}")))
    }
}

/// Which feature families are extracted. `style` covers POS n-grams,
/// punctuation and length counts, and word-class counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub unigrams: bool,
    pub bigrams: bool,
    pub style: bool,
}

impl FeatureConfig {
    pub fn without_bigrams(self) -> Self {
        FeatureConfig { bigrams: false, ..self }
    }

    /// Number of feature kinds this configuration can emit.
    pub fn enabled_kinds(self) -> usize {
        usize::from(self.unigrams) + usize::from(self.bigrams) + if self.style { 4 } else { 0 }
    }
}

/// Named word-class lists (personal pronouns, sentiment, quantifiers, ...).
#[derive(Debug, Clone, Default)]
pub struct WordClasses {
    classes: Vec<(String, HashSet<String>)>,
}

const BUNDLED_CLASSES: [(&str, &str); 9] = [
    ("articles", include_str!("../assets/liwc/articles.txt")),
    ("certainty", include_str!("../assets/liwc/certainty.txt")),
    ("negations", include_str!("../assets/liwc/negations.txt")),
    ("negative", include_str!("../assets/liwc/negative.txt")),
    ("personal", include_str!("../assets/liwc/personal.txt")),
    ("positive", include_str!("../assets/liwc/positive.txt")),
    ("prepositions", include_str!("../assets/liwc/prepositions.txt")),
    ("quantifiers", include_str!("../assets/liwc/quantifiers.txt")),
    ("tentative", include_str!("../assets/liwc/tentative.txt")),
];

impl WordClasses {
    pub fn new(classes: impl IntoIterator<Item = (String, HashSet<String>)>) -> Self {
        let mut classes: Vec<_> = classes.into_iter().collect();
        classes.sort_by(|a, b| a.0.cmp(&b.0));
        WordClasses { classes }
    }

    pub fn bundled() -> Self {
        Self::new(
            BUNDLED_CLASSES
                .iter()
                .map(|(name, words)| (name.to_string(), textproc::parse_word_list(words))),
        )
    }

    /// One file per class, one word per line; the class name is the file stem.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut classes = Vec::new();
        for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if !path.is_file() {
                continue;
            }
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            classes.push((stem.to_string(), textproc::parse_word_list(&text)));
        }
        Ok(Self::new(classes))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.classes.iter().map(|(n, _)| n.as_str())
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    fn classes_of<'a>(&'a self, word: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.classes
            .iter()
            .filter(move |(_, words)| words.contains(word))
            .map(|(n, _)| n.as_str())
    }
}

/// Read-only linguistic resources shared by every extraction call.
#[derive(Debug, Clone)]
pub struct Resources {
    pub stopwords: HashSet<String>,
    pub word_classes: WordClasses,
    pub lexicon: Lexicon,
}

impl Resources {
    pub fn bundled() -> Self {
        Resources {
            stopwords: textproc::bundled_stopwords(),
            word_classes: WordClasses::bundled(),
            lexicon: Lexicon::bundled(),
        }
    }
}

/// Raw feature counts of one document together with its token count.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureCounts {
    pub counts: HashMap<FeatureKey, u32>,
    pub token_count: usize,
}

impl FeatureCounts {
    fn bump(&mut self, kind: FeatureKind, name: impl Into<String>) {
        *self.counts.entry(FeatureKey::new(kind, name)).or_insert(0) += 1;
    }

    fn set(&mut self, kind: FeatureKind, name: &str, count: u32) {
        if count > 0 {
            self.counts.insert(FeatureKey::new(kind, name), count);
        }
    }
}

/// Counts every enabled feature of a tokenized document.
pub fn extract_counts(doc: &TokenizedDocument<'_>, config: FeatureConfig, resources: &Resources) -> FeatureCounts {
    let mut out = FeatureCounts {
        counts: HashMap::new(),
        token_count: doc.tokens.len(),
    };
    let folded: Vec<Option<String>> = doc
        .tokens
        .iter()
        .map(|t| t.is_word().then(|| t.text.to_lowercase()))
        .collect();

    if config.unigrams {
        for word in folded.iter().flatten() {
            if !resources.stopwords.contains(word) {
                out.bump(FeatureKind::Unigram, word.as_str());
            }
        }
    }
    if config.bigrams {
        for pair in folded.windows(2) {
            if let [Some(a), Some(b)] = pair {
                out.bump(FeatureKind::Bigram, format!("{a} {b}"));
            }
        }
    }
    if config.style {
        for tag in &doc.pos {
            out.bump(FeatureKind::PosUnigram, tag.as_str());
        }
        for pair in doc.pos.windows(2) {
            out.bump(FeatureKind::PosBigram, format!("{} {}", pair[0], pair[1]));
        }
        for word in folded.iter().flatten() {
            for class in resources.word_classes.classes_of(word) {
                out.bump(FeatureKind::LiwcClass, class);
            }
        }
        let words = doc.tokens.iter().filter(|t| t.kind == TokenKind::Word).count();
        let sentences = doc.sentences.len();
        out.set(FeatureKind::StyleStat, style::SENTENCE_COUNT, sentences as u32);
        out.set(FeatureKind::StyleStat, style::WORD_COUNT, words as u32);
        if sentences > 0 {
            let avg = (words as f64 / sentences as f64).round() as u32;
            out.set(FeatureKind::StyleStat, style::AVG_WORDS_PER_SENTENCE, avg);
        }
        for token in doc.tokens.iter().filter(|t| t.kind == TokenKind::Punctuation) {
            if let Some(name) = token.text.chars().next().and_then(style::punctuation_name) {
                out.bump(FeatureKind::StyleStat, name);
            }
        }
    }
    out
}

/// Tokenizes, tags and counts features of raw (already cleaned) text.
pub fn featurize(text: &str, config: FeatureConfig, resources: &Resources) -> FeatureCounts {
    let doc = TokenizedDocument::new(text, &resources.lexicon);
    extract_counts(&doc, config, resources)
}

/// Bidirectional feature index with document frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpace {
    keys: Vec<FeatureKey>,
    doc_freq: Vec<u32>,
    index: HashMap<FeatureKey, u32>,
    n_docs: u32,
}

impl FeatureSpace {
    /// Rebuilds a space from `(key, doc_freq)` pairs listed in id order.
    pub fn from_entries(entries: Vec<(FeatureKey, u32)>, n_docs: u32) -> Result<Self> {
        let mut keys = Vec::with_capacity(entries.len());
        let mut doc_freq = Vec::with_capacity(entries.len());
        let mut index = HashMap::with_capacity(entries.len());
        for (id, (key, df)) in entries.into_iter().enumerate() {
            if index.insert(key.clone(), id as u32).is_some() {
                return Err(Error::validation(format!("duplicate feature {key}")));
            }
            keys.push(key);
            doc_freq.push(df);
        }
        Ok(FeatureSpace {
            keys,
            doc_freq,
            index,
            n_docs,
        })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn n_docs(&self) -> u32 {
        self.n_docs
    }

    pub fn id(&self, key: &FeatureKey) -> Option<u32> {
        self.index.get(key).copied()
    }

    pub fn key(&self, id: u32) -> Option<&FeatureKey> {
        self.keys.get(id as usize)
    }

    pub fn doc_freq(&self, id: u32) -> Option<u32> {
        self.doc_freq.get(id as usize).copied()
    }

    pub fn keys(&self) -> &[FeatureKey] {
        &self.keys
    }

    pub fn entries(&self) -> impl Iterator<Item = (&FeatureKey, u32)> {
        self.keys.iter().zip(self.doc_freq.iter().copied())
    }

    /// A new space holding only `ids`, re-indexed densely in the original order.
    pub fn restrict(&self, ids: &BTreeSet<u32>) -> FeatureSpace {
        let entries = ids
            .iter()
            .filter_map(|&id| Some((self.key(id)?.clone(), self.doc_freq(id)?)))
            .collect();
        FeatureSpace::from_entries(entries, self.n_docs).expect("subset of a valid space")
    }

    /// Appends the six category indicator features. `doc_freq[c]` is the
    /// number of training documents carrying indicator `c`.
    pub fn with_category_indicators(&self, doc_freq: [u32; 6]) -> Result<FeatureSpace> {
        let mut entries: Vec<_> = self.entries().map(|(k, df)| (k.clone(), df)).collect();
        for c in AgeCategory::ALL {
            entries.push((FeatureKey::category_indicator(c), doc_freq[c.ordinal()]));
        }
        FeatureSpace::from_entries(entries, self.n_docs)
    }

    /// Ids of the six indicators, if registered.
    pub fn category_indicators(&self) -> Result<CategoryIndicators> {
        let mut ids = [0u32; 6];
        for c in AgeCategory::ALL {
            ids[c.ordinal()] = self.id(&FeatureKey::category_indicator(c)).ok_or_else(|| {
                Error::validation(format!("category indicator {c} is not registered in the feature space"))
            })?;
        }
        Ok(CategoryIndicators { ids })
    }

    pub fn count_kind(&self, kind: FeatureKind) -> usize {
        self.keys.iter().filter(|k| k.kind == kind).count()
    }
}

/// Feature ids of the six category indicators in a regression space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CategoryIndicators {
    ids: [u32; 6],
}

impl CategoryIndicators {
    pub fn id(&self, category: AgeCategory) -> u32 {
        self.ids[category.ordinal()]
    }

    pub fn contains(&self, id: u32) -> bool {
        self.ids.contains(&id)
    }
}

/// Indexes every key seen in at least `min_df` documents. Ids follow the
/// sorted `(kind, name)` order.
pub fn build_space(count_maps: &[FeatureCounts], min_df: u32) -> Result<FeatureSpace> {
    if min_df == 0 {
        return Err(Error::validation("min_df must be at least 1"));
    }
    let doc_freq = count_maps
        .par_iter()
        .fold(HashMap::<&FeatureKey, u32>::new, |mut acc, doc| {
            for key in doc.counts.keys() {
                *acc.entry(key).or_insert(0) += 1;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        });
    let mut kept: Vec<(FeatureKey, u32)> = doc_freq
        .into_iter()
        .filter(|&(_, df)| df >= min_df)
        .map(|(k, df)| (k.clone(), df))
        .collect();
    if kept.is_empty() {
        return Err(Error::validation(format!(
            "no feature occurs in at least {min_df} documents; lower min_df or supply more data"
        )));
    }
    kept.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    FeatureSpace::from_entries(kept, count_maps.len() as u32)
}

/// Sparse document vector; entries are sorted by feature id and every
/// stored weight is nonzero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureVector {
    entries: Vec<(u32, f64)>,
    doc_token_count: usize,
}

impl FeatureVector {
    /// Builds a vector from explicit weights, each of which must lie in (0, 1].
    pub fn from_weights(entries: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let mut entries: Vec<(u32, f64)> = entries.into_iter().collect();
        if let Some(&(id, w)) = entries.iter().find(|(_, w)| !(w.is_finite() && *w > 0.0 && *w <= 1.0)) {
            return Err(Error::validation(format!("feature {id}: weight {w} outside (0, 1]")));
        }
        entries.sort_unstable_by_key(|&(id, _)| id);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::validation(format!("feature {} listed twice", w[0].0)));
        }
        Ok(FeatureVector {
            entries,
            doc_token_count: 0,
        })
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn doc_token_count(&self) -> usize {
        self.doc_token_count
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<f64> {
        self.entries
            .binary_search_by_key(&id, |&(i, _)| i)
            .ok()
            .map(|pos| self.entries[pos].1)
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|&(id, _)| id)
    }

    /// Sum of all weights.
    pub fn mass(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w).sum()
    }

    /// Keeps entries whose id passes `keep`, renumbered through `remap`.
    pub fn remap(&self, mut remap: impl FnMut(u32) -> Option<u32>) -> FeatureVector {
        let mut entries: Vec<_> = self
            .entries
            .iter()
            .filter_map(|&(id, w)| remap(id).map(|new| (new, w)))
            .collect();
        entries.sort_unstable_by_key(|&(id, _)| id);
        FeatureVector {
            entries,
            doc_token_count: self.doc_token_count,
        }
    }

    /// Sets `id` to `weight`, dropping every id for which `clear` holds first.
    pub(crate) fn with_exclusive_entry(&self, id: u32, weight: f64, clear: impl Fn(u32) -> bool) -> FeatureVector {
        let mut entries: Vec<_> = self.entries.iter().copied().filter(|&(i, _)| !clear(i)).collect();
        let pos = entries.partition_point(|&(i, _)| i < id);
        entries.insert(pos, (id, weight));
        FeatureVector {
            entries,
            doc_token_count: self.doc_token_count,
        }
    }
}

/// Divides each indexed count by the document's token count; keys absent
/// from `space` are ignored.
pub fn vectorize(counts: &HashMap<FeatureKey, u32>, space: &FeatureSpace, token_count: usize) -> Result<FeatureVector> {
    if token_count == 0 {
        return Err(Error::validation("cannot vectorize a document with zero tokens"));
    }
    let denom = token_count as f64;
    let mut entries: Vec<(u32, f64)> = counts
        .iter()
        .filter_map(|(key, &count)| Some((space.id(key)?, count as f64 / denom)))
        .filter(|&(_, w)| w > 0.0)
        .collect();
    entries.sort_unstable_by_key(|&(id, _)| id);
    Ok(FeatureVector {
        entries,
        doc_token_count: token_count,
    })
}

/// [`vectorize`] applied to a [`FeatureCounts`].
pub fn vectorize_counts(counts: &FeatureCounts, space: &FeatureSpace) -> Result<FeatureVector> {
    vectorize(&counts.counts, space, counts.token_count)
}
