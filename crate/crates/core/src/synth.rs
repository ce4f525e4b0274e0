//! Synthetic labeled corpus with age-correlated vocabulary and style.
//!
//! Each document draws an age category from a young-skewed distribution and
//! an exact age within it. Words come from a shared pool, the category's
//! topic list, or a neighboring category's topic list. Sentence length,
//! comma use and terminal punctuation drift with age. A fraction of authors
//! write "off-topic" using another category's vocabulary.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AgeCategory, Document};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_docs: usize,
    pub seed: u64,
    /// Relative frequency of each category, in category order.
    pub category_weights: [f64; 6],
    /// Probability that a word comes from the author's own topic list.
    pub topic_rate: f64,
    /// Probability that a word comes from an adjacent category's list.
    pub neighbor_rate: f64,
    /// Fraction of authors whose topic list belongs to a random category.
    pub off_topic_rate: f64,
    pub min_words: usize,
    pub max_words: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_docs: 5000,
            seed: 42,
            category_weights: [0.20, 0.33, 0.25, 0.12, 0.07, 0.03],
            topic_rate: 0.06,
            neighbor_rate: 0.03,
            off_topic_rate: 0.15,
            min_words: 40,
            max_words: 160,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let rates = [self.topic_rate, self.neighbor_rate, self.off_topic_rate];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) || self.topic_rate + 2.0 * self.neighbor_rate > 1.0 {
            return Err(Error::validation("synthetic word rates must be probabilities summing to at most 1"));
        }
        if self.min_words == 0 || self.min_words > self.max_words {
            return Err(Error::validation("synthetic document length bounds must satisfy 1 <= min <= max"));
        }
        if self.category_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || self.category_weights.iter().sum::<f64>() <= 0.0
        {
            return Err(Error::validation("category weights must be non-negative with a positive sum"));
        }
        Ok(())
    }
}

const COMMON: &[&str] = &[
    "the", "a", "and", "to", "of", "i", "it", "was", "is", "that", "in", "for", "on", "with", "my", "this", "but",
    "so", "just", "about", "like", "really", "think", "know", "today", "time", "day", "people", "went", "got",
    "good", "great", "new", "little", "thing", "things", "going", "back", "still", "well", "week", "night",
    "morning", "weekend", "friend", "friends", "home", "house", "food", "dinner", "lunch", "coffee", "weather",
    "rain", "sun", "walk", "read", "book", "movie", "music", "song", "phone", "car", "town", "city", "store",
    "long", "short", "nice", "bad", "happy", "sad", "tired", "busy", "fun", "funny", "strange", "nothing",
    "something", "everything", "anyway", "finally", "maybe", "probably", "always", "never", "sometimes", "again",
    "we", "they", "you", "he", "she", "our", "their", "had", "have", "will", "would", "could", "did", "do", "get",
    "make", "made", "see", "saw", "say", "said", "want", "wanted", "feel", "felt", "look", "looked", "love",
    "hate", "hope", "wish", "need", "try", "tried", "start", "started", "talk", "talked", "call", "called",
    "year", "hour", "minute", "picture", "story", "idea", "plan", "problem", "question", "answer", "life",
    "world", "family", "name", "place", "way", "side", "end", "first", "last", "next", "few", "many", "much",
    "some", "all", "one", "two", "three", "not", "no", "very", "too", "also", "then", "now", "here", "there",
];

const TOPICS: [&[&str]; 6] = [
    &[
        "homework", "teacher", "mom", "school", "class", "exam", "prom", "locker", "bus", "grade", "sleepover",
        "detention", "algebra", "cafeteria", "principal", "crush", "bestie", "videogame", "skateboard", "allowance",
        "curfew", "sophomore", "freshman", "gym", "quiz", "recess", "cheerleading", "band", "anime", "youtube",
    ],
    &[
        "college", "dorm", "roommate", "party", "campus", "professor", "semester", "internship", "beer", "tuition",
        "finals", "major", "frat", "concert", "festival", "hangover", "textbook", "lecture", "thesis", "roadtrip",
        "nightclub", "scholarship", "graduation", "hostel", "backpacking", "playlist", "tinder", "ramen",
        "sorority", "midterm",
    ],
    &[
        "wedding", "apartment", "career", "boss", "office", "promotion", "rent", "fiance", "startup", "commute",
        "brunch", "salary", "coworker", "interview", "deadline", "honeymoon", "condo", "yoga", "marathon",
        "newborn", "pregnancy", "engagement", "bachelorette", "resume", "networking", "freelance", "client",
        "project", "landlord", "crossfit",
    ],
    &[
        "kids", "daughter", "son", "mortgage", "soccer", "minivan", "husband", "wife", "teenager", "pta",
        "renovation", "lawn", "budget", "carpool", "orthodontist", "babysitter", "homeowner", "manager",
        "daycare", "recital", "braces", "chores", "allergies", "savings", "insurance", "barbecue", "playdate",
        "vacation", "kitchen", "garage",
    ],
    &[
        "retirement", "grandchildren", "pension", "garden", "church", "cholesterol", "nest", "knee", "investment",
        "cruise", "golf", "spouse", "reunion", "colonoscopy", "downsizing", "bifocals", "menopause", "heirloom",
        "caregiver", "anniversary", "volunteer", "tomatoes", "birdwatching", "quilt", "seminar", "stocks",
        "portfolio", "decades", "sciatica", "layoff",
    ],
    &[
        "grandson", "granddaughter", "medicare", "retired", "knitting", "memories", "pills", "doctor", "widow",
        "bingo", "veterans", "porch", "hearing", "arthritis", "nursing", "greatgrandchildren", "wartime",
        "hymns", "crossword", "cane", "pharmacy", "funeral", "widower", "scrapbook", "rocking", "postcard",
        "typewriter", "hospital", "casserole", "almanac",
    ],
];

/// Age-dependent style knobs for one category, young to old.
struct Style {
    sentence_len: (usize, usize),
    comma_rate: f64,
    exclaim_rate: f64,
    question_rate: f64,
    lowercase_start: f64,
}

fn style_of(cat: AgeCategory) -> Style {
    let k = cat.ordinal() as f64;
    Style {
        sentence_len: (4 + cat.ordinal(), 9 + 2 * cat.ordinal()),
        comma_rate: 0.02 + 0.015 * k,
        exclaim_rate: 0.35 - 0.06 * k,
        question_rate: 0.15 - 0.02 * k,
        lowercase_start: 0.5 - 0.1 * k,
    }
}

fn sample_age(rng: &mut ChaCha8Rng, cat: AgeCategory) -> u32 {
    match cat.bounds() {
        (None, Some(hi)) => rng.gen_range(13..=hi),
        (Some(lo), Some(hi)) => rng.gen_range(lo..=hi),
        (Some(lo), None) => rng.gen_range(lo..=85),
        (None, None) => unreachable!("every bucket has a bound"),
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, words: &[&'a str]) -> &'a str {
    words[rng.gen_range(0..words.len())]
}

fn write_text(rng: &mut ChaCha8Rng, topic: AgeCategory, style: &Style, config: &SynthConfig) -> String {
    let n_words = rng.gen_range(config.min_words..=config.max_words);
    let k = topic.ordinal();
    let neighbors: Vec<usize> = [k.checked_sub(1), (k + 1 < 6).then_some(k + 1)].into_iter().flatten().collect();
    let mut text = String::new();
    let mut written = 0;
    while written < n_words {
        let len = rng.gen_range(style.sentence_len.0..=style.sentence_len.1).min(n_words - written).max(1);
        for i in 0..len {
            let r: f64 = rng.gen();
            let word = if r < config.topic_rate {
                pick(rng, TOPICS[k])
            } else if r < config.topic_rate + config.neighbor_rate * neighbors.len() as f64 {
                let n = neighbors[rng.gen_range(0..neighbors.len())];
                pick(rng, TOPICS[n])
            } else {
                pick(rng, COMMON)
            };
            if i == 0 {
                if !text.is_empty() {
                    text.push(' ');
                }
                if rng.gen_bool(style.lowercase_start.clamp(0.0, 1.0)) {
                    text.push_str(word);
                } else {
                    let mut chars = word.chars();
                    let first = chars.next().expect("non-empty word");
                    text.extend(first.to_uppercase());
                    text.push_str(chars.as_str());
                }
            } else {
                if rng.gen_bool(style.comma_rate) {
                    text.push(',');
                }
                text.push(' ');
                text.push_str(word);
            }
        }
        let r: f64 = rng.gen();
        text.push(if r < style.exclaim_rate {
            '!'
        } else if r < style.exclaim_rate + style.question_rate {
            '?'
        } else {
            '.'
        });
        written += len;
    }
    text
}

/// Generates `config.n_docs` documents with exact ages and categories.
pub fn generate(config: &SynthConfig) -> Result<Vec<Document>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let categories = WeightedIndex::new(config.category_weights)
        .map_err(|e| Error::validation(format!("category weights: {e}")))?;
    let width = config.n_docs.max(1).to_string().len();
    (0..config.n_docs)
        .map(|i| {
            let cat = AgeCategory::ALL[categories.sample(&mut rng)];
            let age = sample_age(&mut rng, cat);
            let topic = if rng.gen_bool(config.off_topic_rate) {
                AgeCategory::ALL[rng.gen_range(0..6)]
            } else {
                cat
            };
            let text = write_text(&mut rng, topic, &style_of(cat), config);
            Ok(Document::labeled(format!("synth-{i:0width$}"), text, Some(age), Some(cat))?.with_source("synthetic"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{bucketize, category_counts};

    fn small() -> SynthConfig {
        SynthConfig {
            n_docs: 300,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_and_labeled() {
        let a = generate(&small()).unwrap();
        assert_eq!(a, generate(&small()).unwrap());
        assert_eq!(a.len(), 300);
        for d in &a {
            assert_eq!(d.category, Some(bucketize(d.age.unwrap() as i64).unwrap()));
            assert!(!d.text.is_empty());
        }
        let other = generate(&SynthConfig { seed: 7, ..small() }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn young_categories_dominate() {
        let docs = generate(&small()).unwrap();
        let counts = category_counts(&docs);
        assert!(counts[&AgeCategory::From18To24] > counts[&AgeCategory::From65]);
        assert_eq!(counts.len(), 6);
    }

    #[test]
    fn topic_words_track_category() {
        let docs = generate(&SynthConfig {
            off_topic_rate: 0.0,
            ..small()
        })
        .unwrap();
        for d in docs.iter().filter(|d| d.category == Some(AgeCategory::From65)) {
            assert!(!TOPICS[0].iter().any(|w| d.text.split(|c: char| !c.is_alphanumeric()).any(|t| t == *w)));
        }
    }

    #[test]
    fn rejects_bad_config() {
        assert!(generate(&SynthConfig { min_words: 0, ..small() }).is_err());
        assert!(generate(&SynthConfig { topic_rate: 0.9, neighbor_rate: 0.2, ..small() }).is_err());
        assert!(generate(&SynthConfig { category_weights: [0.0; 6], ..small() }).is_err());
    }
}
