use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use segmix::experiment::union_tokens;
use segmix::mixer::{segmix_generate, EmbeddingTable, MixConfig, NerPools};
use segmix::par::Execution;
use segmix::synth;

fn executions() -> Vec<Execution> {
    if Execution::parallel_available() {
        vec![Execution::Sequential, Execution::Parallel]
    } else {
        vec![Execution::Sequential]
    }
}

fn generation(c: &mut Criterion) {
    let mut group = c.benchmark_group("segmix_generate");
    for n in [200usize, 2000] {
        let corpus = synth::synthetic_ner(n, 1);
        let pools = NerPools::from_corpus(&corpus, Some(synth::synthetic_lexicon()));
        let table = EmbeddingTable::random(union_tokens(&[&corpus]), 32, 16, 1).unwrap();
        for execution in executions() {
            let config = MixConfig {
                rate: 1.0,
                variant: "mention+token+synonym".parse().unwrap(),
                execution,
                ..MixConfig::default()
            };
            group.bench_with_input(BenchmarkId::new(format!("{execution:?}"), n), &config, |b, config| {
                b.iter(|| segmix_generate(&corpus, &pools, &table, config).unwrap())
            });
        }
    }
    group.finish();
}

fn evaluation(c: &mut Criterion) {
    let mut group = c.benchmark_group("predict");
    let corpus = synth::synthetic_ner(2000, 2);
    let table = EmbeddingTable::random(union_tokens(&[&corpus]), 32, 16, 2).unwrap();
    let model = segmix::model::TaggerModel::new(1, 32, corpus.label_vocab().clone());
    for execution in executions() {
        group.bench_function(format!("{execution:?}"), |b| {
            b.iter(|| model.predict_with(&table, &corpus, execution).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, generation, evaluation);
criterion_main!(benches);
