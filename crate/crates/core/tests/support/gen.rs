//! Random corpora for property and oracle tests.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use segmix::corpus::{BioLabel, RECorpus, RESample, Sentence, Span, TaggedCorpus, Token};

pub const TYPES: &[&str] = &["PER", "LOC", "ORG", "MISC"];
pub const WORDS: &[&str] = &["w0", "w1", "w2", "w3", "w4", "w5", "w6", "w7", "w8", "w9"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// BIO-valid labels: mentions of 1..=3 tokens separated by random gaps.
pub fn random_labels(rng: &mut ChaCha8Rng, len: usize) -> Vec<BioLabel> {
    let mut labels = Vec::with_capacity(len);
    while labels.len() < len {
        if rng.random_bool(0.5) {
            labels.push(BioLabel::outside());
            continue;
        }
        let ty = *TYPES.choose(rng).unwrap();
        let m = rng.random_range(1..=3).min(len - labels.len());
        labels.push(BioLabel::begin(ty));
        for _ in 1..m {
            labels.push(BioLabel::inside(ty));
        }
    }
    labels
}

pub fn random_tokens(rng: &mut ChaCha8Rng, len: usize) -> Vec<Token> {
    (0..len).map(|_| Token::new(*WORDS.choose(rng).unwrap()).unwrap()).collect()
}

pub fn random_sentence(rng: &mut ChaCha8Rng, max_len: usize) -> Sentence {
    let len = rng.random_range(1..=max_len);
    Sentence::new(random_tokens(rng, len), random_labels(rng, len)).unwrap()
}

pub fn random_corpus(rng: &mut ChaCha8Rng, max_sentences: usize, max_len: usize) -> TaggedCorpus {
    let n = rng.random_range(1..=max_sentences);
    TaggedCorpus::new((0..n).map(|_| random_sentence(rng, max_len)).collect())
}

/// Predictions near `gold`: per position keep, retype, flip B/I, or blank.
/// The result may be BIO-invalid (dangling `I`), as raw tagger output can be.
pub fn noisy_predictions(rng: &mut ChaCha8Rng, gold: &TaggedCorpus) -> Vec<Vec<BioLabel>> {
    gold.sentences()
        .iter()
        .map(|s| {
            s.labels()
                .iter()
                .map(|l| match rng.random_range(0..10) {
                    0 => BioLabel::outside(),
                    1 => BioLabel::begin(*TYPES.choose(rng).unwrap()),
                    2 => BioLabel::inside(*TYPES.choose(rng).unwrap()),
                    3 => match l.entity_type() {
                        Some(t) if l.to_begin() == *l => BioLabel::inside(t),
                        Some(t) => BioLabel::begin(t),
                        None => l.clone(),
                    },
                    _ => l.clone(),
                })
                .collect()
        })
        .collect()
}

pub const RELATIONS: &[&str] = &[
    "Cause-Effect(e1,e2)",
    "Cause-Effect(e2,e1)",
    "Component-Whole(e1,e2)",
    "Component-Whole(e2,e1)",
    "Other",
];

pub fn random_re_sample(rng: &mut ChaCha8Rng) -> RESample {
    let len = rng.random_range(2..=10);
    let tokens = random_tokens(rng, len);
    let split = rng.random_range(1..len);
    let a0 = rng.random_range(0..split);
    let a1 = rng.random_range(a0 + 1..=split);
    let b0 = rng.random_range(split..len);
    let b1 = rng.random_range(b0 + 1..=len);
    let relation = *RELATIONS.choose(rng).unwrap();
    RESample::new(tokens, Span::new(a0, a1), Span::new(b0, b1), relation).unwrap()
}

pub fn random_re_corpus(rng: &mut ChaCha8Rng, max_samples: usize) -> RECorpus {
    let n = rng.random_range(1..=max_samples);
    RECorpus::new((0..n).map(|_| random_re_sample(rng)).collect())
}
