//! Author-aggregated documents: loading, cleaning, labeling, oversampling
//! and the stratified train/test split.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_AGE: i64 = 5;
pub const MAX_AGE: i64 = 120;

/// The six age buckets, ordered by lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AgeCategory {
    UpTo17,
    From18To24,
    From25To34,
    From35To49,
    From50To64,
    From65,
}

impl AgeCategory {
    pub const ALL: [AgeCategory; 6] = [
        AgeCategory::UpTo17,
        AgeCategory::From18To24,
        AgeCategory::From25To34,
        AgeCategory::From35To49,
        AgeCategory::From50To64,
        AgeCategory::From65,
    ];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(ordinal: usize) -> Option<Self> {
        Self::ALL.get(ordinal).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            AgeCategory::UpTo17 => "xx-17",
            AgeCategory::From18To24 => "18-24",
            AgeCategory::From25To34 => "25-34",
            AgeCategory::From35To49 => "35-49",
            AgeCategory::From50To64 => "50-64",
            AgeCategory::From65 => "65-xx",
        }
    }

    /// Inclusive age bounds; open ends are `None`.
    pub fn bounds(self) -> (Option<u32>, Option<u32>) {
        match self {
            AgeCategory::UpTo17 => (None, Some(17)),
            AgeCategory::From18To24 => (Some(18), Some(24)),
            AgeCategory::From25To34 => (Some(25), Some(34)),
            AgeCategory::From35To49 => (Some(35), Some(49)),
            AgeCategory::From50To64 => (Some(50), Some(64)),
            AgeCategory::From65 => (Some(65), None),
        }
    }
}

impl fmt::Display for AgeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for AgeCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AgeCategory::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| {
                let hint = if s == "24-34" {
                    " (did you mean \"25-34\"?)"
                } else {
                    ""
                };
                Error::validation(format!("unknown age category {s:?}{hint}"))
            })
    }
}

impl Serialize for AgeCategory {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for AgeCategory {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Maps an age in years onto its bucket.
pub fn bucketize(age: i64) -> Result<AgeCategory> {
    if !(MIN_AGE..=MAX_AGE).contains(&age) {
        return Err(Error::validation(format!(
            "age {age} outside the accepted range [{MIN_AGE}, {MAX_AGE}]"
        )));
    }
    Ok(match age {
        ..=17 => AgeCategory::UpTo17,
        18..=24 => AgeCategory::From18To24,
        25..=34 => AgeCategory::From25To34,
        35..=49 => AgeCategory::From35To49,
        50..=64 => AgeCategory::From50To64,
        _ => AgeCategory::From65,
    })
}

/// One author's aggregated text and labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<AgeCategory>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub source: String,
}

impl Document {
    /// Builds a labeled document, back-filling the category from the age and
    /// rejecting conflicting labels.
    pub fn labeled(
        id: impl Into<String>,
        text: impl Into<String>,
        age: Option<u32>,
        category: Option<AgeCategory>,
    ) -> Result<Self> {
        let id = id.into();
        let category = reconcile_labels(&id, age.map(i64::from), category)?;
        Ok(Document {
            id,
            text: text.into(),
            age,
            category: Some(category),
            source: String::new(),
        })
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }
}

fn reconcile_labels(id: &str, age: Option<i64>, category: Option<AgeCategory>) -> Result<AgeCategory> {
    match (age, category) {
        (None, None) => Err(Error::validation(format!(
            "document {id:?} has neither an age nor a category"
        ))),
        (None, Some(c)) => Ok(c),
        (Some(age), declared) => {
            let bucket = bucketize(age)
                .map_err(|e| Error::validation(format!("document {id:?}: {e}")))?;
            match declared {
                Some(c) if c != bucket => Err(Error::validation(format!(
                    "document {id:?}: age {age} belongs to {bucket} but category {c} was given"
                ))),
                _ => Ok(bucket),
            }
        }
    }
}

/// A stratified train/test partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSplit {
    pub train: Vec<Document>,
    pub test: Vec<Document>,
    pub seed: u64,
}

fn markup_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"<[^>]*>").unwrap())
}

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(?:[a-z][a-z0-9+.\-]*://|www\.)\S+").unwrap())
}

fn is_tag_or_mention(token: &str) -> bool {
    let mut chars = token.chars();
    matches!(chars.next(), Some('#') | Some('@'))
        && chars.next().is_some_and(|c| c.is_alphanumeric() || c == '_')
}

/// Normalizes raw post text: strips markup, replaces links with `urllink`,
/// drops hashtags and mentions, and collapses whitespace.
pub fn clean_text(raw: &str) -> String {
    let no_markup = markup_re().replace_all(raw, " ");
    let linked = url_re().replace_all(&no_markup, "urllink");
    let mut out = String::with_capacity(linked.len());
    for token in linked.split_whitespace().filter(|t| !is_tag_or_mention(t)) {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(token);
    }
    out
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    text: String,
    #[serde(default)]
    age: Option<i64>,
    #[serde(default)]
    category: Option<String>,
    #[serde(default)]
    source: Option<String>,
}

/// Whether a corpus load insists on every document carrying a label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Labels {
    Required,
    Optional,
}

/// Loads a labeled JSON Lines corpus.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    load_corpus_with(path, Labels::Required)
}

pub fn load_corpus_with(path: impl AsRef<Path>, labels: Labels) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(BufReader::new(file), path, labels)
}

pub(crate) fn parse_corpus(reader: impl BufRead, path: &Path, labels: Labels) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let category = raw
            .category
            .as_deref()
            .map(AgeCategory::from_str)
            .transpose()
            .map_err(|e| parse_err(e.to_string()))?;
        let (age, category) = match (raw.age, category, labels) {
            (None, None, Labels::Optional) => (None, None),
            (age, category, _) => {
                let c = reconcile_labels(&raw.id, age, category).map_err(|e| parse_err(e.to_string()))?;
                // reconcile_labels has range-checked the age
                (age.map(|a| a as u32), Some(c))
            }
        };
        if !seen.insert(raw.id.clone()) {
            return Err(parse_err(format!("duplicate document id {:?}", raw.id)));
        }
        let text = clean_text(&raw.text);
        if text.is_empty() {
            log::warn!("{}:{line_no}: document {:?} is empty after cleaning; skipped", path.display(), raw.id);
            continue;
        }
        docs.push(Document {
            id: raw.id,
            text,
            age,
            category,
            source: raw.source.unwrap_or_default(),
        });
    }
    Ok(docs)
}

/// Writes documents as JSON Lines, one object per line.
pub fn write_corpus(path: impl AsRef<Path>, docs: &[Document]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for doc in docs {
        let line = serde_json::to_string(doc).expect("documents always serialize");
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Tunables for [`oversample`].
#[derive(Debug, Clone, Default)]
pub struct OversampleOptions {
    /// Categories that must be represented. Defaults to those present.
    pub categories: Option<Vec<AgeCategory>>,
    /// Upper bound on the per-category target count.
    pub cap: Option<usize>,
}

fn require_category(doc: &Document) -> Result<AgeCategory> {
    doc.category
        .ok_or_else(|| Error::validation(format!("document {:?} has no category", doc.id)))
}

fn group_by_category(docs: &[Document]) -> Result<BTreeMap<AgeCategory, Vec<usize>>> {
    let mut groups: BTreeMap<AgeCategory, Vec<usize>> = BTreeMap::new();
    for (i, doc) in docs.iter().enumerate() {
        groups.entry(require_category(doc)?).or_default().push(i);
    }
    Ok(groups)
}

/// Duplicates documents of minority categories until every category matches
/// the majority count (or the cap, when set). Originals are kept in order
/// and duplicates are appended with `#dupN` id suffixes.
pub fn oversample(docs: &[Document], seed: u64, options: &OversampleOptions) -> Result<Vec<Document>> {
    let mut groups = group_by_category(docs)?;
    if let Some(expected) = &options.categories {
        for c in expected {
            groups.entry(*c).or_default();
        }
    }
    if let Some((c, _)) = groups.iter().find(|(_, members)| members.is_empty()) {
        return Err(Error::validation(format!(
            "category {c} has no documents and cannot be oversampled"
        )));
    }
    let majority = groups.values().map(Vec::len).max().unwrap_or(0);
    let target = options.cap.map_or(majority, |cap| cap.min(majority));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = docs.to_vec();
    for members in groups.values() {
        for k in 1..=target.saturating_sub(members.len()) {
            let source = &docs[members[rng.gen_range(0..members.len())]];
            let mut dup = source.clone();
            dup.id = format!("{}#dup{k}", source.id);
            out.push(dup);
        }
    }
    Ok(out)
}

/// Stratified split: each category contributes `round(n * ratio)` documents
/// to the training side, clamped so both sides keep at least one.
pub fn split(docs: &[Document], ratio: f64, seed: u64) -> Result<CorpusSplit> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::validation(format!("split ratio {ratio} must lie in (0, 1)")));
    }
    let mut ids = HashSet::new();
    if let Some(doc) = docs.iter().find(|d| !ids.insert(d.id.as_str())) {
        return Err(Error::validation(format!("duplicate document id {:?}", doc.id)));
    }
    let groups = group_by_category(docs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; docs.len()];
    for (category, members) in &groups {
        let n = members.len();
        if n < 2 {
            return Err(Error::validation(format!(
                "category {category} has {n} document(s); at least 2 are needed to split"
            )));
        }
        let n_train = ((n as f64 * ratio).round() as usize).clamp(1, n - 1);
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut rng);
        for &i in &shuffled[..n_train] {
            in_train[i] = true;
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (doc, &is_train) in docs.iter().zip(&in_train) {
        if is_train {
            train.push(doc.clone());
        } else {
            test.push(doc.clone());
        }
    }
    Ok(CorpusSplit { train, test, seed })
}

/// Per-category document counts, in category order.
pub fn category_counts(docs: &[Document]) -> BTreeMap<AgeCategory, usize> {
    let mut counts = BTreeMap::new();
    for c in docs.iter().filter_map(|d| d.category) {
        *counts.entry(c).or_insert(0) += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(id: &str, c: AgeCategory) -> Document {
        Document::labeled(id, "text", None, Some(c)).unwrap()
    }

    fn docs_with(counts: &[(AgeCategory, usize)]) -> Vec<Document> {
        counts
            .iter()
            .flat_map(|&(c, n)| (0..n).map(move |i| doc(&format!("{}-{i}", c.label()), c)))
            .collect()
    }

    #[test]
    fn clean_text_replaces_links() {
        assert_eq!(clean_text("see http://x.y/z now"), "see urllink now");
        assert_eq!(clean_text("go to www.example.com/a?b=1 today"), "go to urllink today");
        assert_eq!(clean_text(""), "");
    }

    #[test]
    fn clean_text_strips_tags_mentions_and_markup() {
        assert_eq!(clean_text("ok #tag @bob <b>hi</b>"), "ok hi");
        assert_eq!(clean_text("  a \t\n b  "), "a b");
        assert_eq!(clean_text("mail me a@b.com # not a tag"), "mail me a@b.com # not a tag");
    }

    #[test]
    fn bucketize_boundaries() {
        assert_eq!(bucketize(17).unwrap(), AgeCategory::UpTo17);
        assert_eq!(bucketize(18).unwrap(), AgeCategory::From18To24);
        assert_eq!(bucketize(34).unwrap(), AgeCategory::From25To34);
        assert_eq!(bucketize(35).unwrap(), AgeCategory::From35To49);
        assert_eq!(bucketize(64).unwrap(), AgeCategory::From50To64);
        assert_eq!(bucketize(65).unwrap(), AgeCategory::From65);
        let err = bucketize(3).unwrap_err().to_string();
        assert!(err.contains('3'), "{err}");
        assert!(bucketize(121).is_err());
    }

    #[test]
    fn bucket_bounds_are_contiguous() {
        for pair in AgeCategory::ALL.windows(2) {
            let (_, hi) = pair[0].bounds();
            let (lo, _) = pair[1].bounds();
            assert_eq!(hi.unwrap() + 1, lo.unwrap());
        }
    }

    #[test]
    fn category_labels_round_trip() {
        for c in AgeCategory::ALL {
            assert_eq!(c.label().parse::<AgeCategory>().unwrap(), c);
        }
        let err = "24-34".parse::<AgeCategory>().unwrap_err().to_string();
        assert!(err.contains("25-34"));
    }

    #[test]
    fn load_backfills_category() {
        let input = r#"{"id":"a","text":"hi","age":30}"#;
        let docs = parse_corpus(input.as_bytes(), Path::new("mem"), Labels::Required).unwrap();
        assert_eq!(docs[0].category, Some(AgeCategory::From25To34));
        assert!(parse_corpus(&b""[..], Path::new("mem"), Labels::Required).unwrap().is_empty());
    }

    #[test]
    fn load_rejects_conflicts_with_line_numbers() {
        let input = "{\"id\":\"a\",\"text\":\"hi\",\"age\":30}\n{\"id\":\"b\",\"text\":\"hi\",\"age\":30,\"category\":\"50-64\"}\n";
        match parse_corpus(input.as_bytes(), Path::new("mem"), Labels::Required) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let malformed = "{\"id\":\"a\",\"text\":\"hi\",\"age\":30}\n{not json\n";
        assert!(matches!(
            parse_corpus(malformed.as_bytes(), Path::new("mem"), Labels::Required),
            Err(Error::Parse { line: 2, .. })
        ));
        let unlabeled = r#"{"id":"a","text":"hi"}"#;
        assert!(parse_corpus(unlabeled.as_bytes(), Path::new("mem"), Labels::Required).is_err());
        let ok = parse_corpus(unlabeled.as_bytes(), Path::new("mem"), Labels::Optional).unwrap();
        assert_eq!(ok[0].category, None);
    }

    #[test]
    fn oversample_balances_counts() {
        let a = AgeCategory::UpTo17;
        let b = AgeCategory::From18To24;
        let balanced = docs_with(&[(a, 10), (b, 10)]);
        assert_eq!(oversample(&balanced, 1, &Default::default()).unwrap(), balanced);

        let skewed = docs_with(&[(a, 4), (b, 2)]);
        let out = oversample(&skewed, 1, &Default::default()).unwrap();
        let counts = category_counts(&out);
        assert_eq!(counts[&a], 4);
        assert_eq!(counts[&b], 4);
        assert_eq!(&out[..skewed.len()], &skewed[..]);

        let opts = OversampleOptions {
            categories: Some(vec![a, b]),
            cap: None,
        };
        assert!(oversample(&docs_with(&[(a, 3)]), 1, &opts).is_err());
    }

    #[test]
    fn oversample_cap_limits_target() {
        let a = AgeCategory::UpTo17;
        let b = AgeCategory::From18To24;
        let opts = OversampleOptions {
            categories: None,
            cap: Some(6),
        };
        let out = oversample(&docs_with(&[(a, 10), (b, 2)]), 3, &opts).unwrap();
        let counts = category_counts(&out);
        assert_eq!((counts[&a], counts[&b]), (10, 6));
    }

    #[test]
    fn split_is_stratified() {
        let a = AgeCategory::From25To34;
        let b = AgeCategory::From35To49;
        let docs = docs_with(&[(a, 100)]);
        let s = split(&docs, 0.9, 7).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (90, 10));

        let docs = docs_with(&[(a, 60), (b, 40)]);
        let s = split(&docs, 0.9, 7).unwrap();
        let counts = category_counts(&s.train);
        assert_eq!((counts[&a], counts[&b]), (54, 36));
        assert_eq!(s, split(&docs, 0.9, 7).unwrap());
    }

    #[test]
    fn split_rejects_tiny_strata() {
        let docs = docs_with(&[(AgeCategory::UpTo17, 10), (AgeCategory::From65, 1)]);
        assert!(split(&docs, 0.9, 0).is_err());
        assert!(split(&docs, 1.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn clean_text_is_idempotent(s in "[a-zA-Z<>#@:/. \t_wh]{0,60}") {
            let once = clean_text(&s);
            prop_assert_eq!(clean_text(&once), once);
        }

        #[test]
        fn bucketize_is_monotone(a in MIN_AGE..=MAX_AGE, b in MIN_AGE..=MAX_AGE) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(bucketize(lo).unwrap() <= bucketize(hi).unwrap());
        }

        #[test]
        fn split_partitions_input(n_a in 2usize..40, n_b in 2usize..40, seed in any::<u64>()) {
            let docs = docs_with(&[(AgeCategory::UpTo17, n_a), (AgeCategory::From50To64, n_b)]);
            let s = split(&docs, 0.9, seed).unwrap();
            let mut ids: Vec<_> = s.train.iter().chain(&s.test).map(|d| d.id.clone()).collect();
            ids.sort();
            let mut expected: Vec<_> = docs.iter().map(|d| d.id.clone()).collect();
            expected.sort();
            prop_assert_eq!(ids, expected);
        }

        #[test]
        fn oversample_equalizes_and_keeps_originals(n_a in 1usize..15, n_b in 1usize..15, n_c in 1usize..15, seed in any::<u64>()) {
            let docs = docs_with(&[(AgeCategory::UpTo17, n_a), (AgeCategory::From18To24, n_b), (AgeCategory::From65, n_c)]);
            let out = oversample(&docs, seed, &Default::default()).unwrap();
            let counts: Vec<usize> = category_counts(&out).into_values().collect();
            prop_assert!(counts.iter().all(|&c| c == counts[0]));
            let ids: HashSet<_> = out.iter().map(|d| d.id.as_str()).collect();
            prop_assert!(docs.iter().all(|d| ids.contains(d.id.as_str())));
            prop_assert_eq!(ids.len(), out.len());
        }
    }
}
