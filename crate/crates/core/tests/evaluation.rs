use rand::Rng as _;
use sentrep::eval::{labeled_cv, pearson, spearman, train_logreg, CvOptions, LogRegOptions};
use sentrep::nn::NnIndex;
use sentrep::numeric::seeded_rng;
use sentrep::synthetic::throughput_sentences;
use sentrep::throughput::benchmark_encode;
use sentrep::{Corpus, FastSentConfig, FastSentModel};

fn brute_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for i in 0..x.len() {
        num += (x[i] - mx) * (y[i] - my);
        dx += (x[i] - mx) * (x[i] - mx);
        dy += (y[i] - my) * (y[i] - my);
    }
    num / (dx * dy).sqrt()
}

/// Rank of each value: one plus the number of smaller values, plus half the
/// number of other equal values.
fn brute_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let less = x.iter().filter(|&&w| w < v).count() as f64;
            let equal = x.iter().filter(|&&w| w == v).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

#[test]
fn correlations_match_brute_force() {
    let mut rng = seeded_rng(21);
    for case in 0..100 {
        let n = rng.gen_range(3..60);
        // Coarse values in every other case to force ties.
        let draw = |rng: &mut sentrep::numeric::Rng| -> f64 {
            if case % 2 == 0 {
                rng.gen_range(0..5) as f64
            } else {
                rng.gen_range(-3.0..3.0)
            }
        };
        let x: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let y: Vec<f64> = x.iter().map(|v| v + draw(&mut rng)).collect();
        let bp = brute_pearson(&x, &y);
        let bs = brute_pearson(&brute_ranks(&x), &brute_ranks(&y));
        if !bp.is_finite() || !bs.is_finite() {
            continue;
        }
        assert!((pearson(&x, &y).unwrap() - bp).abs() < 1e-12, "case {case}");
        assert!((spearman(&x, &y).unwrap() - bs).abs() < 1e-12, "case {case}");
    }
}

fn gaussian_blobs(seed: u64, n: usize, d: usize, shuffle_labels: bool) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = seeded_rng(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2;
        let shift = if label == 1 { 3.0 } else { -3.0 };
        x.push((0..d).map(|j| rng.gen_range(-1.0..1.0) + if j == 0 { shift } else { 0.0 }).collect());
        y.push(label);
    }
    if shuffle_labels {
        y = (0..n).map(|_| rng.gen_range(0..2)).collect();
    }
    (x, y)
}

#[test]
fn cross_validation_on_separable_and_random_labels() {
    let opts = CvOptions::default();
    let (x, y) = gaussian_blobs(1, 400, 5, false);
    let r = labeled_cv(&x, &y, &opts, true).unwrap();
    assert!(r.accuracy >= 0.99, "{}", r.accuracy);
    assert_eq!(r.fold_accuracies.len(), 10);

    let (x, y) = gaussian_blobs(2, 400, 5, true);
    let r = labeled_cv(&x, &y, &opts, false).unwrap();
    let sigma = (0.25f64 / 400.0).sqrt();
    assert!((r.accuracy - 0.5).abs() <= 3.0 * sigma, "{}", r.accuracy);
}

#[test]
fn overwhelming_penalty_gives_the_null_model() {
    let (x, mut y) = gaussian_blobs(3, 90, 4, false);
    // Two thirds class 1.
    for (i, l) in y.iter_mut().enumerate() {
        *l = usize::from(i % 3 != 0);
    }
    let m = train_logreg(&x, &y, &LogRegOptions { l2: 1e8, ..Default::default() }).unwrap();
    for f in &x {
        assert_eq!(m.predict(f), 1);
    }
    // Logits collapse to the class log-odds.
    let z = m.scores(&x[0]);
    let p1 = 1.0 / (1.0 + (z[0] - z[1]).exp());
    assert!((p1 - 2.0 / 3.0).abs() < 1e-3, "{p1}");
}

fn small_fastsent() -> FastSentModel {
    let sentences = throughput_sentences(4, 300, 500);
    let corpus = Corpus::from_sentences(sentences);
    let vocab = corpus.build_vocab(1, usize::MAX).unwrap();
    let mut config = FastSentConfig::default();
    config.train.dim = 16;
    FastSentModel::new(vocab, config).unwrap()
}

#[test]
fn throughput_benchmark_returns_one_vector_per_line() {
    let m = small_fastsent();
    let mut lines = throughput_sentences(5, 999, 500);
    lines.push("entirely unknown words".into());
    let (enc, report) = benchmark_encode(&m, &lines);
    assert_eq!(enc.len(), 1000);
    assert_eq!(report.sentences, 1000);
    assert!(enc.last().unwrap().empty);
    assert!(enc.iter().all(|e| e.repr.dim() == 16));
    assert!(report.sentences_per_second > 0.0);
}

#[test]
fn nearest_neighbour_of_an_indexed_sentence_is_itself() {
    let m = small_fastsent();
    let sentences = throughput_sentences(6, 200, 500);
    let index = NnIndex::build(&m, sentences.clone());
    for s in sentences.iter().take(20) {
        let hits = index.query(&m, s, 3).unwrap();
        assert_eq!(hits.len(), 3);
        assert!((hits[0].cosine - 1.0).abs() < 1e-5);
        assert!(hits.windows(2).all(|w| w[0].cosine >= w[1].cosine));
    }
    assert!(index.query(&m, "unknown tokens only", 3).is_err());
}
