use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use sentrep::baselines::TfidfModel;
use sentrep::synthetic::throughput_sentences;
use sentrep::{Corpus, FastSentConfig, FastSentModel, SdaeConfig, SentenceEncoder, Seq2SeqModel};

fn encode(c: &mut Criterion) {
    let lines = throughput_sentences(1, 2_000, 5_000);
    let corpus = Corpus::from_sentences(lines.clone());
    let vocab = corpus.build_vocab(1, usize::MAX).unwrap();
    let idx = corpus.index(&vocab);
    let fastsent = FastSentModel::<f32>::new(vocab.clone(), FastSentConfig::default()).unwrap();
    let sdae = Seq2SeqModel::<f32>::new(vocab.clone(), SdaeConfig::default()).unwrap();
    let tfidf = TfidfModel::fit(&idx, vocab, 200_000).unwrap();
    let encoders: [(&str, &dyn SentenceEncoder); 3] = [("fastsent", &fastsent), ("sdae", &sdae), ("tfidf", &tfidf)];

    let mut group = c.benchmark_group("encode_batch");
    group.throughput(Throughput::Elements(lines.len() as u64));
    group.sample_size(10);
    for (name, enc) in encoders {
        group.bench_with_input(BenchmarkId::from_parameter(name), &lines, |b, lines| {
            b.iter(|| enc.encode_batch(lines))
        });
    }
    group.finish();
}

criterion_group!(benches, encode);
criterion_main!(benches);
