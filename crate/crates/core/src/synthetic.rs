//! Deterministic synthetic corpora.
//!
//! Informative and uninformative tweets draw from disjoint keyword
//! vocabularies, so the task is linearly separable for a bag-of-words model.
//! Labels alternate by record index, making per-label counts exact:
//! `ceil(n/2)` informative, `floor(n/2)` uninformative.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{DatasetSplit, Label, SplitName, TweetRecord};

const INFORMATIVE_WORDS: &[&str] = &[
    "confirmed", "cases", "deaths", "reported", "hospital", "county", "health", "officials",
    "total", "positive", "toll", "outbreak", "recovered", "patients",
];

const UNINFORMATIVE_WORDS: &[&str] = &[
    "lol", "coffee", "mood", "vibes", "blessed", "weekend", "love", "happy", "music", "movie",
    "dreams", "chill", "selfie", "bored",
];

const FILLER_WORDS: &[&str] = &["the", "a", "in", "of", "to", "and", "is", "on"];

fn make_text(rng: &mut ChaCha8Rng, keywords: &[&str]) -> String {
    let n_keywords = rng.random_range(2..=4);
    let n_fillers = rng.random_range(1..=2);
    let mut words: Vec<&str> = Vec::with_capacity(n_keywords + n_fillers + 2);
    for _ in 0..n_keywords {
        words.push(keywords[rng.random_range(0..keywords.len())]);
    }
    for _ in 0..n_fillers {
        words.push(FILLER_WORDS[rng.random_range(0..FILLER_WORDS.len())]);
    }
    // Occasional twitterisms so normalization sees real work.
    if rng.random_range(0..5) == 0 {
        words.push("@somebody");
    }
    if rng.random_range(0..5) == 0 {
        words.push("https://t.co/xyz");
    }
    for i in (1..words.len()).rev() {
        words.swap(i, rng.random_range(0..=i));
    }
    words.join(" ")
}

fn make_split(name: SplitName, prefix: &str, n: usize, rng: &mut ChaCha8Rng) -> DatasetSplit {
    let records = (0..n)
        .map(|i| {
            let label = if i % 2 == 0 {
                Label::Informative
            } else {
                Label::Uninformative
            };
            let keywords = match label {
                Label::Informative => INFORMATIVE_WORDS,
                Label::Uninformative => UNINFORMATIVE_WORDS,
            };
            TweetRecord {
                id: format!("{prefix}{i}"),
                text: make_text(rng, keywords),
                label: Some(label),
            }
        })
        .collect();
    DatasetSplit { name, records }
}

/// A linearly separable train/valid pair, reproducible from the seed.
pub fn separable_corpus(n_train: usize, n_valid: usize, seed: u64) -> (DatasetSplit, DatasetSplit) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let train = make_split(SplitName::Train, "t", n_train, &mut rng);
    let valid = make_split(SplitName::Valid, "v", n_valid, &mut rng);
    (train, valid)
}
