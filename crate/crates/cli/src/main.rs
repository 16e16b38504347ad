mod manifest;
mod settings;

use std::fs;
use std::io::{self, BufRead, BufWriter, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use sentrep::baselines::{TfidfModel, DEFAULT_MAX_FEATURES};
use sentrep::eval::battery::{load_benchmarks, run_battery, VALIDATION_FILE};
use sentrep::eval::data::{load_classification, load_pairs};
use sentrep::eval::{classification_eval, consistency_report, relatedness_eval, CvOptions, ScoreMatrix};
use sentrep::model_io::{read_text_embeddings, write_encodings, write_text_embeddings};
use sentrep::nn::NnIndex;
use sentrep::numeric::seeded_rng;
use sentrep::sdae::noise::corrupt;
use sentrep::throughput::benchmark_encode;
use sentrep::{
    tokenize, AnyModel, Corpus, EmbeddingMode, Error, FastSentConfig, FastSentModel, NoiseParams, SdaeConfig,
    SentenceEncoder, Seq2SeqModel, TrainingReport, WordEmbeddingConfig, WordEmbeddingModel,
};

use crate::manifest::RunManifest;
use crate::settings::Settings;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    /// 1 usage, 2 data error, 3 numeric failure.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_numeric() => 3,
            CliError::Core(Error::InvalidArgument(_) | Error::TooManyNegatives { .. }) => 1,
            CliError::Core(_) => 2,
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "sentrep", version, about = "Train, encode and evaluate unsupervised sentence representations")]
struct Cli {
    /// Seed for every random choice (initialisation, sampling, noise, folds).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Training threads; ignored under --deterministic.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Single-threaded training so that runs are bit-reproducible.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Settings file with one key=value per line.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Extra key=value setting, applied after --config.
    #[arg(long = "set", short = 's', global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TrainKind {
    Fastsent,
    Sdae,
    Cbow,
    Skipgram,
    Tfidf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model on a corpus (one sentence per line, blank line between documents).
    Train {
        #[arg(value_enum)]
        kind: TrainKind,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Encode one sentence per line into a binary vector file.
    Encode {
        #[arg(long, short)]
        model: PathBuf,
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Correlate cosine similarities with gold relatedness ratings.
    EvalSim {
        #[arg(long, short)]
        model: PathBuf,
        /// Pair file: sentence1<TAB>sentence2<TAB>gold.
        #[arg(long, required_unless_present = "validation")]
        data: Vec<PathBuf>,
        /// Dataset directory; evaluates only its held-out SICK trial pairs.
        #[arg(long, conflicts_with = "data", value_name = "DIR")]
        validation: Option<PathBuf>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Logistic regression on frozen sentence vectors.
    EvalClf {
        #[arg(long, short)]
        model: PathBuf,
        /// label<TAB>sentence or label<TAB>s1<TAB>s2.
        #[arg(long)]
        data: PathBuf,
        /// Predefined test split; cross-validation is used without it.
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Cronbach's alpha over a benchmark score matrix.
    Consistency {
        /// Score CSV; defaults to the bundled published scores.
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Interactive nearest-neighbour search; reads queries from stdin.
    Nn {
        #[arg(long, short)]
        model: PathBuf,
        /// Sentences to index, one per line.
        #[arg(long)]
        sentences: PathBuf,
        #[arg(short, default_value_t = 5)]
        k: usize,
    },
    /// Apply word deletion and bigram swaps to each line.
    Corrupt {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 0.1)]
        p_drop: f64,
        #[arg(long, default_value_t = 0.1)]
        p_swap: f64,
    },
    /// Time batch encoding of a sentence file.
    BenchEncode {
        #[arg(long, short)]
        model: PathBuf,
        #[arg(long, short)]
        input: PathBuf,
        /// Also write the vectors here.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Write word vectors in the plain text embedding format.
    ExportText {
        #[arg(long, short)]
        model: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Evaluate models on every benchmark in a directory.
    Battery {
        #[arg(long = "model", short, required = true)]
        models: Vec<PathBuf>,
        #[arg(long)]
        datasets: PathBuf,
        /// Only the held-out SICK trial pairs.
        #[arg(long)]
        validation: bool,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

struct Context {
    seed: Option<u64>,
    workers: Option<usize>,
    settings: Settings,
    argv: Vec<String>,
}

impl Context {
    fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> CliResult {
    let mut settings = match &cli.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    for s in &cli.set {
        settings.push_flag(s)?;
    }
    let workers = if cli.deterministic { Some(1) } else { cli.workers };
    if workers == Some(0) {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let ctx = Context {
        seed: cli.seed,
        workers,
        settings,
        argv: std::env::args().collect(),
    };
    match cli.command {
        Command::Train { kind, corpus, output } => train(&ctx, kind, &corpus, &output),
        Command::Encode { model, input, output } => encode(&model, &input, &output),
        Command::EvalSim {
            model,
            data,
            validation,
            output,
        } => eval_sim(&model, data, validation, output.as_deref()),
        Command::EvalClf {
            model,
            data,
            test,
            folds,
            output,
        } => eval_clf(&ctx, &model, &data, test.as_deref(), folds, output.as_deref()),
        Command::Consistency { scores, output } => consistency(scores.as_deref(), output.as_deref()),
        Command::Nn { model, sentences, k } => nn(&model, &sentences, k),
        Command::Corrupt {
            input,
            output,
            p_drop,
            p_swap,
        } => corrupt_lines(&ctx, &input, output.as_deref(), p_drop, p_swap),
        Command::BenchEncode { model, input, output } => bench_encode(&model, &input, output.as_deref()),
        Command::ExportText { model, output } => export_text(&model, &output),
        Command::Battery {
            models,
            datasets,
            validation,
            folds,
            output,
        } => battery(&ctx, &models, &datasets, validation, folds, output.as_deref()),
    }
}

fn read_lines(path: &Path) -> CliResult<Vec<String>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    io::BufReader::new(f)
        .lines()
        .map(|l| l.map(|l| l.trim_end_matches('\r').to_string()).map_err(|e| Error::io(path, e).into()))
        .collect()
}

fn create(path: &Path) -> CliResult<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?))
}

/// Writes `text` to `path`, or to stdout without one.
fn emit(text: &str, path: Option<&Path>) -> CliResult {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e).into()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn train(ctx: &Context, kind: TrainKind, corpus_path: &Path, output: &Path) -> CliResult {
    let mut settings = ctx.settings.clone();
    let min_count = settings.take_parsed::<u64>("min_count")?.unwrap_or(1);
    let max_vocab = settings.take_parsed::<usize>("max_vocab")?.unwrap_or(usize::MAX);
    let bytes = fs::read(corpus_path).map_err(|e| Error::io(corpus_path, e))?;
    let checksum = format!("{:08x}", crc32fast::hash(&bytes));
    let corpus = Corpus::from_reader(bytes.as_slice())?;
    log::info!("{} documents, {} sentences", corpus.documents.len(), corpus.num_sentences());
    let started = Instant::now();

    let (model, report): (AnyModel, Option<TrainingReport>) = match kind {
        TrainKind::Fastsent => {
            let mut cfg = settings.apply(&FastSentConfig::default())?;
            cfg.train.seed = ctx.seed.unwrap_or(cfg.train.seed);
            cfg.train.workers = ctx.workers.unwrap_or(cfg.train.workers);
            let vocab = corpus.build_vocab(min_count, max_vocab)?;
            let indexed = corpus.index(&vocab);
            let mut m = FastSentModel::new(vocab, cfg)?;
            let r = m.train(&indexed)?;
            (m.into(), Some(r))
        }
        TrainKind::Sdae => {
            let pretrained = settings.take("pretrained");
            let mut cfg = settings.apply(&SdaeConfig::default())?;
            cfg.seed = ctx.seed.unwrap_or(cfg.seed);
            let vocab = corpus.build_vocab(min_count, max_vocab)?;
            let indexed = corpus.index(&vocab);
            let mut m = Seq2SeqModel::new(vocab, cfg)?;
            if let Some(p) = pretrained {
                let p = PathBuf::from(p);
                let f = fs::File::open(&p).map_err(|e| Error::io(&p, e))?;
                let (tokens, vectors) = read_text_embeddings(io::BufReader::new(f))?;
                let found = m.load_pretrained(&tokens, &vectors)?;
                log::info!("initialised {found} of {} word embeddings from {}", m.vocab.len(), p.display());
            }
            let r = m.train(&indexed)?;
            (m.into(), Some(r))
        }
        TrainKind::Cbow | TrainKind::Skipgram => {
            let mode = if kind == TrainKind::Cbow {
                EmbeddingMode::Cbow
            } else {
                EmbeddingMode::Skipgram
            };
            let mut cfg = settings.apply(&WordEmbeddingConfig::new(mode))?;
            cfg.mode = mode;
            cfg.train.seed = ctx.seed.unwrap_or(cfg.train.seed);
            cfg.train.workers = ctx.workers.unwrap_or(cfg.train.workers);
            let vocab = corpus.build_vocab(min_count, max_vocab)?;
            let indexed = corpus.index(&vocab);
            let mut m = WordEmbeddingModel::new(vocab, cfg)?;
            let r = m.train(&indexed)?;
            (m.into(), Some(r))
        }
        TrainKind::Tfidf => {
            let max_features = settings.take_parsed::<usize>("max_features")?.unwrap_or(DEFAULT_MAX_FEATURES);
            if let Some((k, _)) = settings.entries.first() {
                return Err(CliError::Usage(format!("unknown setting `{k}` for tfidf")));
            }
            let vocab = corpus.build_vocab(min_count, max_vocab.min(max_features))?;
            let indexed = corpus.index(&vocab);
            (TfidfModel::fit(&indexed, vocab, max_features)?.into(), None)
        }
    };
    let wall = started.elapsed();
    if let Some(r) = &report {
        log::info!("trained on {} examples in {:.1}s, mean loss {:.4}", r.examples, wall.as_secs_f64(), r.mean_loss);
    }

    let manifest = RunManifest::new(&ctx.argv, &model, Some(checksum), ctx.seed(), wall);
    manifest.write_beside(output)?;
    if let Err(e) = model.save(output) {
        let _ = fs::remove_file(RunManifest::path_for(output));
        return Err(e.into());
    }
    if let Some(r) = report {
        let path = sibling(output, "report.json");
        let text = serde_json::to_string_pretty(&manifest::LossSummary::from(&r)).expect("report serializes");
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        println!("examples\t{}\nmean_loss\t{:.6}\nlast_decile_loss\t{:.6}", r.examples, r.mean_loss, r.last_decile_loss());
    }
    println!("model\t{}", output.display());
    Ok(())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn load(path: &Path) -> CliResult<AnyModel> {
    Ok(AnyModel::load(path)?)
}

fn encode(model: &Path, input: &Path, output: &Path) -> CliResult {
    let m = load(model)?;
    let lines = read_lines(input)?;
    let enc = m.encode_batch(&lines);
    let empty = enc.iter().filter(|e| e.empty).count();
    if empty > 0 {
        log::warn!("{empty} of {} sentences had no known words and encode to zero", enc.len());
    }
    write_encodings(&enc, m.dim(), create(output)?)?;
    println!("encoded\t{}", enc.len());
    Ok(())
}

fn eval_sim(model: &Path, data: Vec<PathBuf>, validation: Option<PathBuf>, output: Option<&Path>) -> CliResult {
    let m = load(model)?;
    let files = match validation {
        Some(dir) => vec![dir.join(VALIDATION_FILE)],
        None => data,
    };
    let mut text = String::from("dataset,spearman,pearson,pairs\n");
    for f in files {
        let pairs = load_pairs(&f)?;
        let r = relatedness_eval(&m, &pairs)?;
        let name = f.file_stem().map_or_else(|| f.display().to_string(), |s| s.to_string_lossy().into_owned());
        text.push_str(&format!("{name},{:.6},{:.6},{}\n", r.spearman, r.pearson, r.pairs));
    }
    if let Some(p) = output {
        emit(&text, Some(p))?;
    }
    print!("{text}");
    Ok(())
}

fn eval_clf(ctx: &Context, model: &Path, data: &Path, test: Option<&Path>, folds: usize, output: Option<&Path>) -> CliResult {
    let m = load(model)?;
    let name = data.file_stem().map_or("data".into(), |s| s.to_string_lossy().into_owned());
    let ds = load_classification(&name, data, test)?;
    let opts = CvOptions {
        folds,
        seed: ctx.seed(),
        ..CvOptions::default()
    };
    let r = classification_eval(&m, &ds, &opts)?;
    let text = serde_json::to_string_pretty(&r).expect("result serializes") + "\n";
    if let Some(p) = output {
        emit(&text, Some(p))?;
    }
    print!("{text}");
    Ok(())
}

fn consistency(scores: Option<&Path>, output: Option<&Path>) -> CliResult {
    let m = match scores {
        Some(p) => ScoreMatrix::from_path(p)?,
        None => ScoreMatrix::from_reader(sentrep::eval::PUBLISHED_SCORES.as_bytes())?,
    };
    let r = consistency_report(&m)?;
    let text = format!(
        "cohort,columns,alpha\nsupervised,{},{:.4}\nunsupervised,{},{:.4}\ncombined,{},{:.4}\n",
        r.supervised_columns,
        r.supervised,
        r.unsupervised_columns,
        r.unsupervised,
        r.supervised_columns + r.unsupervised_columns,
        r.combined
    );
    if let Some(p) = output {
        emit(&text, Some(p))?;
    }
    print!("{text}");
    Ok(())
}

fn nn(model: &Path, sentences: &Path, k: usize) -> CliResult {
    let m = load(model)?;
    let lines: Vec<String> = read_lines(sentences)?.into_iter().filter(|l| !l.trim().is_empty()).collect();
    let index = NnIndex::build(&m, lines);
    if index.is_empty() {
        return Err(Error::Eval("nearest-neighbour index is empty".into()).into());
    }
    eprintln!("indexed {} sentences ({} left out)", index.len(), index.excluded);
    let interactive = io::stdin().is_terminal();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let prompt = || {
        if interactive {
            eprint!("> ");
            let _ = io::stderr().flush();
        }
    };
    prompt();
    for line in io::stdin().lock().lines() {
        let line = line.map_err(Error::Stream)?;
        let query = line.trim();
        if !query.is_empty() {
            match index.query(&m, query, k) {
                Ok(hits) => {
                    for (rank, h) in hits.iter().enumerate() {
                        writeln!(out, "{}\t{:.4}\t{}", rank + 1, h.cosine, h.sentence).map_err(Error::Stream)?;
                    }
                    writeln!(out).map_err(Error::Stream)?;
                }
                Err(e) => eprintln!("error: {e}"),
            }
            out.flush().map_err(Error::Stream)?;
        }
        prompt();
    }
    Ok(())
}

fn corrupt_lines(ctx: &Context, input: &Path, output: Option<&Path>, p_drop: f64, p_swap: f64) -> CliResult {
    let noise = NoiseParams::new(p_drop, p_swap)?;
    let mut rng = seeded_rng(ctx.seed());
    let mut text = String::new();
    for line in read_lines(input)? {
        text.push_str(&corrupt(&tokenize(&line), noise, &mut rng).join(" "));
        text.push('\n');
    }
    emit(&text, output)
}

fn bench_encode(model: &Path, input: &Path, output: Option<&Path>) -> CliResult {
    let m = load(model)?;
    let lines = read_lines(input)?;
    let (enc, report) = benchmark_encode(&m, &lines);
    if let Some(p) = output {
        write_encodings(&enc, m.dim(), create(p)?)?;
    }
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}

fn export_text(model: &Path, output: &Path) -> CliResult {
    let m = load(model)?;
    let (tokens, matrix) = m.word_vectors()?;
    write_text_embeddings(&tokens, matrix, create(output)?)?;
    Ok(())
}

fn battery(ctx: &Context, models: &[PathBuf], datasets: &Path, validation: bool, folds: usize, output: Option<&Path>) -> CliResult {
    let loaded: Vec<(String, AnyModel)> = models
        .iter()
        .map(|p| {
            let name = p.file_stem().map_or(p.display().to_string(), |s| s.to_string_lossy().into_owned());
            load(p).map(|m| (name, m))
        })
        .collect::<CliResult<_>>()?;
    let (benchmarks, skipped) = load_benchmarks(datasets, validation)?;
    if benchmarks.is_empty() {
        return Err(Error::Eval(format!("no benchmark files found in {}", datasets.display())).into());
    }
    let encoders: Vec<(String, &dyn SentenceEncoder)> =
        loaded.iter().map(|(n, m)| (n.clone(), m as &dyn SentenceEncoder)).collect();
    let opts = CvOptions {
        folds,
        seed: ctx.seed(),
        ..CvOptions::default()
    };
    let report = run_battery(&encoders, &benchmarks, skipped, &opts)?;
    for s in &report.skipped {
        eprintln!("warning: {s} not found, column skipped");
    }
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    emit(&String::from_utf8(buf).expect("CSV is UTF-8"), output)?;
    if output.is_some() {
        println!("models\t{}\ncolumns\t{}", report.rows.len(), report.columns.len());
    }
    Ok(())
}
