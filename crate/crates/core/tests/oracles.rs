//! Library results against independent brute-force implementations.

mod support;

use ndarray::Array2;
use rand::Rng;
use segmix::corpus::{parse_conll, Vocab};
use segmix::eval::{self, confusion_matrix, entity_f1, re_accuracy, span_only_f1};
use segmix::mixer::EmbeddingTable;
use segmix::model::TaggerModel;
use segmix::pools::{build_mention_pool, build_relation_pool, build_token_pool, SegmentPool, TupleLabels};
use support::{gen, oracles};

fn pool_multiset(pool: &SegmentPool) -> Vec<(Vec<String>, Vec<String>)> {
    let mut out: Vec<_> = pool
        .entries()
        .iter()
        .map(|e| {
            let tokens = e.segments[0].iter().map(|t| t.as_str().to_string()).collect();
            let labels = oracles::strings(e.bio_labels(0).unwrap());
            (tokens, labels)
        })
        .collect();
    out.sort();
    out
}

#[test]
fn mention_and_token_pools_match_scanner() {
    for seed in 0..50 {
        let mut rng = gen::rng(seed);
        let corpus = gen::random_corpus(&mut rng, 20, 12);
        assert_eq!(pool_multiset(&build_mention_pool(&corpus)), oracles::mention_pool(&corpus));
        assert_eq!(pool_multiset(&build_token_pool(&corpus)), oracles::token_pool(&corpus));
        let b_count: usize = corpus
            .sentences()
            .iter()
            .map(|s| s.labels().iter().filter(|l| l.to_string().starts_with("B-")).count())
            .sum();
        assert_eq!(build_mention_pool(&corpus).len(), b_count);
    }
}

#[test]
fn mention_pool_on_hand_written_sentences() {
    let text = "Anna\tB-PER\nmet\tO\nBob\tB-PER\n\n\
                Anna\tB-PER\nin\tO\nNew\tB-LOC\nYork\tI-LOC\n\n\
                the\tO\nUN\tB-ORG\n\n\
                nothing\tO\n\n\
                Bob\tB-PER\nand\tO\nNew\tB-LOC\nYork\tI-LOC\n";
    let corpus = parse_conll(text.as_bytes()).unwrap();
    let pool = build_mention_pool(&corpus);
    assert_eq!(pool.len(), 7);
    assert_eq!(pool_multiset(&pool), oracles::mention_pool(&corpus));
    assert_eq!(build_token_pool(&corpus).len(), 9);
}

#[test]
fn relation_pool_matches_enumeration() {
    for seed in 0..50 {
        let mut rng = gen::rng(1000 + seed);
        let corpus = gen::random_re_corpus(&mut rng, 20);
        let pool = build_relation_pool(&corpus);
        let mut got: Vec<_> = pool
            .entries()
            .iter()
            .map(|e| {
                let words = |j: usize| e.segments[j].iter().map(|t| t.as_str().to_string()).collect::<Vec<_>>();
                let TupleLabels::Relation(r) = &e.labels else { panic!("relation labels") };
                (words(0), words(1), r.clone())
            })
            .collect();
        got.sort();
        assert_eq!(got, oracles::relation_pool(&corpus));
    }
}

#[test]
fn entity_metrics_match_brute_force() {
    for seed in 0..100 {
        let mut rng = gen::rng(2000 + seed);
        let gold = gen::random_corpus(&mut rng, 10, 10);
        let pred = gen::noisy_predictions(&mut rng, &gold);
        let g = oracles::gold_strings(&gold);
        let p: Vec<Vec<String>> = pred.iter().map(|x| oracles::strings(x)).collect();

        let r = entity_f1(&gold, &pred).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), oracles::f1(&g, &p), "seed {seed}");

        let erased_g: Vec<_> = g.iter().map(|x| oracles::erase(x)).collect();
        let erased_p: Vec<_> = p.iter().map(|x| oracles::erase(x)).collect();
        let s = span_only_f1(&gold, &pred).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), oracles::f1(&erased_g, &erased_p), "seed {seed}");

        let cm = confusion_matrix(&gold, &pred).unwrap();
        let want = oracles::confusion(&g, &p);
        let mut total = 0;
        for a in &cm.labels {
            for b in &cm.labels {
                let n = cm.get(a, b);
                assert_eq!(n, want.get(&(a.clone(), b.clone())).copied().unwrap_or(0));
                total += n;
            }
        }
        assert_eq!(total, want.values().sum::<usize>());
    }
}

#[test]
fn metrics_are_sentence_permutation_invariant() {
    let mut rng = gen::rng(7);
    let gold = gen::random_corpus(&mut rng, 10, 10);
    let pred = gen::noisy_predictions(&mut rng, &gold);
    let mut order: Vec<usize> = (0..gold.len()).collect();
    order.reverse();
    let gold_rev = segmix::corpus::TaggedCorpus::new(order.iter().map(|&i| gold.sentences()[i].clone()).collect());
    let pred_rev: Vec<_> = order.iter().map(|&i| pred[i].clone()).collect();
    assert_eq!(entity_f1(&gold, &pred).unwrap().f1, entity_f1(&gold_rev, &pred_rev).unwrap().f1);
}

#[test]
fn re_accuracy_matches_brute_force() {
    let vocab = Vocab::from_items(gen::RELATIONS.iter().copied());
    for seed in 0..100 {
        let mut rng = gen::rng(3000 + seed);
        let gold = gen::random_re_corpus(&mut rng, 10);
        let pred: Vec<String> = gold
            .samples()
            .iter()
            .map(|s| {
                if rng.random_bool(0.4) {
                    s.relation().to_string()
                } else {
                    gen::RELATIONS[rng.random_range(0..gen::RELATIONS.len())].to_string()
                }
            })
            .collect();
        let g: Vec<String> = gold.samples().iter().map(|s| s.relation().to_string()).collect();
        let r = re_accuracy(&gold, &pred, &vocab).unwrap();
        assert_eq!((r.full, r.type_only, r.direction_only), oracles::re_accuracy(&g, &pred));
        assert!(r.full <= r.type_only.min(r.direction_only));
    }
}

#[test]
fn re_accuracy_hand_tally() {
    let lines = [
        ("Cause-Effect(e1,e2)", "Cause-Effect(e1,e2)"),
        ("Cause-Effect(e1,e2)", "Cause-Effect(e2,e1)"),
        ("Cause-Effect(e2,e1)", "Component-Whole(e2,e1)"),
        ("Component-Whole(e1,e2)", "Component-Whole(e1,e2)"),
        ("Component-Whole(e1,e2)", "Other"),
        ("Other", "Other"),
        ("Other", "Cause-Effect(e1,e2)"),
        ("Component-Whole(e2,e1)", "Cause-Effect(e1,e2)"),
        ("Cause-Effect(e2,e1)", "Cause-Effect(e2,e1)"),
        ("Component-Whole(e2,e1)", "Component-Whole(e1,e2)"),
    ];
    let text: String = lines.iter().map(|(g, _)| format!("a b\t0\t1\t1\t2\t{g}\n")).collect();
    let gold = segmix::corpus::parse_re(text.as_bytes()).unwrap();
    let pred: Vec<String> = lines.iter().map(|(_, p)| p.to_string()).collect();
    let vocab = Vocab::from_items(gen::RELATIONS.iter().copied());
    let r = re_accuracy(&gold, &pred, &vocab).unwrap();
    // full: rows 1,4,6,9; type: 1,2,4,6,9,10; direction: all but 2,8,10
    assert_eq!((r.full, r.type_only, r.direction_only), (0.4, 0.6, 0.7));
}

#[test]
fn decode_matches_argmax_oracle() {
    let vocab = Vocab::from_items(["O", "B-PER", "I-PER", "B-LOC"]);
    let mut rng = gen::rng(11);
    for _ in 0..200 {
        let rows = rng.random_range(1..8);
        // coarse values so ties happen
        let m = Array2::from_shape_fn((rows, 4), |_| f64::from(rng.random_range(0..4u8)) / 4.0);
        let labels = eval::decode_labels(m.view(), &vocab, false).unwrap();
        for (r, l) in m.rows().into_iter().zip(&labels) {
            let mut best = 0;
            for c in 1..4 {
                if r[c] > r[best] {
                    best = c;
                }
            }
            assert_eq!(l.to_string(), vocab.item(best));
        }
    }
}

#[test]
fn nearest_token_matches_exhaustive_scan() {
    let mut rng = gen::rng(12);
    for case in 0..50 {
        let vocab = Vocab::from_items((0..20).map(|i| format!("t{i}")));
        let table = EmbeddingTable::random(vocab, 8, 4, case).unwrap();
        let a = rng.random_range(0..20);
        let b = rng.random_range(0..20);
        let lambda: f64 = rng.random_range(0.0..=1.0);
        let v = &table.vectors().row(a) * lambda + &table.vectors().row(b) * (1.0 - lambda);
        let mut best = (0, f64::INFINITY);
        for i in 0..20 {
            let d = (&table.vectors().row(i) - &v).mapv(|x| x * x).sum();
            if d < best.1 {
                best = (i, d);
            }
        }
        let got = eval::nearest_token(&table, v.view()).unwrap();
        assert_eq!(got.as_str(), format!("t{}", best.0));
        if lambda >= 0.9 {
            // well-separated random rows: the dominant token wins
            let margin = (&table.vectors().row(a) - &table.vectors().row(b)).mapv(|x| x * x).sum();
            if margin > 1.0 {
                assert_eq!(got.as_str(), format!("t{a}"));
            }
        }
    }
}

#[test]
fn tagger_forward_matches_dense_oracle() {
    let mut rng = gen::rng(13);
    for window in 0..3usize {
        let dim = 3;
        let labels = Vocab::from_items(["O", "B-X", "I-X"]);
        let features = (2 * window + 1) * dim + 1;
        let weights = Array2::from_shape_fn((features, 3), |_| rng.random_range(-1.0..1.0));
        let model = TaggerModel::from_weights(window, dim, labels, weights.clone()).unwrap();
        let n = 5;
        let emb = Array2::from_shape_fn((n, dim), |_| rng.random_range(-1.0..1.0));
        let logits = model.forward(emb.view()).unwrap();
        for t in 0..n {
            for c in 0..3 {
                let mut z = weights[[features - 1, c]];
                for k in 0..2 * window + 1 {
                    let pos = t as i64 + k as i64 - window as i64;
                    if pos < 0 || pos >= n as i64 {
                        continue;
                    }
                    for d in 0..dim {
                        z += emb[[pos as usize, d]] * weights[[k * dim + d, c]];
                    }
                }
                assert!((logits[[t, c]] - z).abs() < 1e-6);
            }
        }
    }
    let zero = TaggerModel::new(1, 4, Vocab::from_items(["O"]));
    assert!(zero.forward(Array2::ones((3, 4)).view()).unwrap().iter().all(|&z| z == 0.0));
}
