//! Template-generated corpora for demos, benchmarks and tests.
//!
//! Sentences are built from fixed templates whose slots are filled with
//! multi-token names drawn from per-type inventories. Names are shared between
//! generated splits, contexts are partly shared between types, so a model has
//! to combine word identity and context.

use rand::seq::IndexedRandom;
use rand::Rng as _;

use crate::corpus::{BioLabel, RECorpus, RESample, Sentence, Span, TaggedCorpus, Token};
use crate::pools::SynonymLexicon;
use crate::rng::{self, Rng};

pub const ENTITY_TYPES: [&str; 6] = ["PER", "LOC", "ORG", "MISC", "DATE", "PROD"];

const PER_FIRST: &[&str] = &[
    "Anna", "Boris", "Carla", "Dmitri", "Elena", "Farid", "Greta", "Hiro", "Ines", "Jonas", "Kemal",
    "Lena", "Marco", "Nadia", "Oskar", "Priya", "Quentin", "Rosa", "Samir", "Tomas",
];
const PER_LAST: &[&str] = &[
    "Alvarez", "Brandt", "Costa", "Dubois", "Eriksen", "Fischer", "Garcia", "Horvat", "Ivanova",
    "Jensen", "Kowalski", "Lindqvist", "Moreau", "Novak", "Okafor", "Petrov",
];
const LOC_HEAD: &[&str] = &[
    "Berlin", "Lagos", "Lima", "Oslo", "Kyoto", "Quito", "Porto", "Dakar", "Hanoi", "Tunis",
    "Riga", "Perth", "Cusco", "Accra", "Malmo", "Graz",
];
const LOC_MOD: &[&str] = &["North", "South", "East", "West", "New", "Old", "Upper", "Lower"];
const ORG_HEAD: &[&str] = &[
    "Acme", "Borealis", "Cobalt", "Delta", "Everest", "Falcon", "Granite", "Helix", "Ion",
    "Juniper", "Keystone", "Lumen", "Meridian", "Nimbus",
];
const ORG_TAIL: &[&str] = &["Corp", "Group", "Bank", "Holdings", "Labs", "Airlines", "Motors", "Energy"];
const MISC_WORDS: &[&str] = &[
    "Olympic", "Nobel", "Baroque", "Gothic", "Renaissance", "Buddhist", "Catholic", "Celtic",
    "Nordic", "Latin", "Arctic", "Persian",
];
const MISC_TAIL: &[&str] = &["Games", "Prize", "Festival", "Cup", "Award", "Era"];
const MONTHS: &[&str] = &[
    "January", "February", "March", "April", "May", "June", "July", "August", "September",
    "October", "November", "December",
];
const YEARS: &[&str] = &["1998", "2003", "2011", "2015", "2019", "2021", "2024"];
const PROD_HEAD: &[&str] = &[
    "Zephyr", "Orion", "Pixel", "Nova", "Aurora", "Titan", "Vector", "Quasar", "Photon", "Comet",
];
const PROD_TAIL: &[&str] = &["X", "Pro", "Max", "Mini", "One", "II", "Lite"];

fn name(ty: &str, rng: &mut Rng) -> Vec<&'static str> {
    let one = |list: &[&'static str], rng: &mut Rng| *list.choose(rng).expect("non-empty");
    match ty {
        "PER" => {
            if rng.random_bool(0.3) {
                vec![one(PER_LAST, rng)]
            } else {
                vec![one(PER_FIRST, rng), one(PER_LAST, rng)]
            }
        }
        "LOC" => {
            if rng.random_bool(0.3) {
                vec![one(LOC_MOD, rng), one(LOC_HEAD, rng)]
            } else {
                vec![one(LOC_HEAD, rng)]
            }
        }
        "ORG" => {
            if rng.random_bool(0.5) {
                vec![one(ORG_HEAD, rng), one(ORG_TAIL, rng)]
            } else {
                vec![one(ORG_HEAD, rng)]
            }
        }
        "MISC" => {
            if rng.random_bool(0.5) {
                vec![one(MISC_WORDS, rng), one(MISC_TAIL, rng)]
            } else {
                vec![one(MISC_WORDS, rng)]
            }
        }
        "DATE" => match rng.random_range(0..3) {
            0 => vec![one(MONTHS, rng)],
            1 => vec![one(MONTHS, rng), one(YEARS, rng)],
            _ => vec![one(YEARS, rng)],
        },
        _ => {
            if rng.random_bool(0.6) {
                vec![one(PROD_HEAD, rng), one(PROD_TAIL, rng)]
            } else {
                vec![one(PROD_HEAD, rng)]
            }
        }
    }
}

/// `{TYPE}` marks an entity slot; everything else is a literal `O` token.
const TEMPLATES: &[&str] = &[
    "{PER} visited {LOC} in {DATE} .",
    "{PER} joined {ORG} as a senior engineer .",
    "{ORG} opened a new office in {LOC} .",
    "the {MISC} took place in {LOC} during {DATE} .",
    "{ORG} will launch the {PROD} in {DATE} .",
    "{PER} reviewed the {PROD} for {ORG} .",
    "officials in {LOC} praised {PER} after the {MISC} .",
    "shares of {ORG} rose after the {PROD} was announced .",
    "{PER} won the {MISC} in {DATE} .",
    "according to {PER} , {ORG} is based in {LOC} .",
    "the new {PROD} sold out in {LOC} within a week .",
    "{PER} and {PER} met in {LOC} on {DATE} .",
    "a spokesman for {ORG} declined to comment .",
    "the weather was mild and the markets were quiet .",
    "{LOC} hosted the {MISC} for the first time .",
    "{PER} bought a {PROD} from {ORG} .",
    "in {DATE} , {ORG} moved its headquarters to {LOC} .",
    "critics said the {PROD} was too expensive .",
];

fn fill(template: &str, rng: &mut Rng) -> Sentence {
    let mut tokens = Vec::new();
    let mut labels = Vec::new();
    for word in template.split_whitespace() {
        match word.strip_prefix('{').and_then(|w| w.strip_suffix('}')) {
            Some(ty) => {
                for (k, part) in name(ty, rng).into_iter().enumerate() {
                    tokens.push(Token::new(part).expect("static token"));
                    labels.push(if k == 0 { BioLabel::begin(ty) } else { BioLabel::inside(ty) });
                }
            }
            None => {
                tokens.push(Token::new(word).expect("static token"));
                labels.push(BioLabel::outside());
            }
        }
    }
    Sentence::new(tokens, labels).expect("templates are BIO-valid")
}

/// `n` template sentences over the six entity types in [`ENTITY_TYPES`].
pub fn synthetic_ner(n: usize, seed: u64) -> TaggedCorpus {
    let sentences = (0..n)
        .map(|i| {
            let mut rng = rng::stream(seed, "synth.ner", i as u64);
            let template = TEMPLATES[rng.random_range(0..TEMPLATES.len())];
            fill(template, &mut rng)
        })
        .collect();
    TaggedCorpus::new(sentences)
}

/// Synonyms for some template filler words.
pub fn synthetic_lexicon() -> SynonymLexicon {
    let mut lex = SynonymLexicon::new();
    let entries: &[(&str, &[&str])] = &[
        ("visited", &["toured", "saw"]),
        ("joined", &["entered"]),
        ("opened", &["launched", "started"]),
        ("new", &["fresh", "recent"]),
        ("praised", &["lauded", "commended"]),
        ("rose", &["climbed", "increased"]),
        ("won", &["took", "claimed"]),
        ("bought", &["purchased", "acquired"]),
        ("expensive", &["costly", "pricey"]),
        ("mild", &["gentle"]),
        ("quiet", &["calm", "still"]),
        ("moved", &["relocated", "shifted"]),
    ];
    for (word, syns) in entries {
        let syns = syns.iter().map(|s| Token::new(*s).expect("static token")).collect();
        lex.insert(*word, syns).expect("non-empty");
    }
    lex
}

const CAUSES: &[&str] = &["fire", "storm", "virus", "flood", "quake", "leak"];
const EFFECTS: &[&str] = &["smoke", "damage", "fever", "panic", "outage", "rust"];
const PARTS: &[&str] = &["wheel", "handle", "engine", "hinge", "keyboard", "lens"];
const WHOLES: &[&str] = &["car", "door", "truck", "cabinet", "laptop", "camera"];
const ITEMS: &[&str] = &["letter", "cup", "key", "coin", "ticket", "seed"];
const CONTAINERS: &[&str] = &["envelope", "drawer", "box", "jar", "pocket", "bag"];

/// `(relation, e1 nouns, middle words, e2 nouns)`; nominal vocabularies are
/// relation- and role-specific, so direction is recoverable from the pair.
const RE_TEMPLATES: &[(&str, &[&str], &str, &[&str])] = &[
    ("Cause-Effect(e1,e2)", CAUSES, "led to the", EFFECTS),
    ("Cause-Effect(e2,e1)", EFFECTS, "was caused by the", CAUSES),
    ("Component-Whole(e1,e2)", PARTS, "is part of the", WHOLES),
    ("Component-Whole(e2,e1)", WHOLES, "contains a", PARTS),
    ("Entity-Destination(e1,e2)", ITEMS, "was put into the", CONTAINERS),
    ("Other", ITEMS, "was seen near the", CAUSES),
];

/// `n` RE samples over six directed relation labels.
pub fn synthetic_re(n: usize, seed: u64) -> RECorpus {
    let samples = (0..n)
        .map(|i| {
            let mut rng = rng::stream(seed, "synth.re", i as u64);
            let (relation, first, middle, second) = RE_TEMPLATES[rng.random_range(0..RE_TEMPLATES.len())];
            let a = *first.choose(&mut rng).expect("non-empty");
            let b = *second.choose(&mut rng).expect("non-empty");
            let mut words = vec!["the", a];
            words.extend(middle.split_whitespace());
            let start = words.len();
            words.push(b);
            words.push(".");
            let tokens = words.iter().map(|w| Token::new(*w).expect("static token")).collect();
            RESample::new(tokens, Span::new(1, 2), Span::new(start, start + 1), relation).expect("valid sample")
        })
        .collect();
    RECorpus::new(samples)
}
