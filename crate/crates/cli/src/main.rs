mod backend;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use mcqdg::baseline::{run_baseline, BaselineConfig};
use mcqdg::corpus::{corpus_stats, import_released, load_corpus, Corpus, SdKind, Split};
use mcqdg::extract::{extract_corpus, tokenize_mcq, write_examples, ExtractionConfig, Variant};
use mcqdg::generate::{
    generate_l2r, generate_upmlm, order_lengths, plan_lengths, GenConfig, OrderMode,
};
use mcqdg::grct::GrctNode;
use mcqdg::humaneval::{
    acceptance_summary, entropy_buckets, entropy_report, gamma_n, iqr_outliers, lf_dis,
    one_sample_ttest, read_entropy_report, write_entropy_report, JudgmentMatrix, ResponseMatrix,
    LF_THRESHOLD,
};
use mcqdg::io::{read_suggestions, write_suggestions, Header, SuggestionRecord, SCHEMA_VERSION};
use mcqdg::kernel::{ncptk, ptk, KernelParams};
use mcqdg::metrics::{evaluate, GeneratedSet, MetricReport};
use mcqdg::parses::{phrase_block, ParseStore, PhraseRole};
use mcqdg::predictor::{serve_lines, MockPredictor};
use mcqdg::seeding::derive_seed;
use mcqdg::select::model_select;
use mcqdg::tokens::{Tokenizer, WhitespaceTokenizer};

use backend::{connect, load_script};

#[derive(Parser)]
#[command(name = "mcqdg", version, about = "Distractor generation and evaluation for reading-comprehension MCQs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Descriptive statistics of a corpus split.
    Stats(StatsArgs),
    /// Kernel-based baseline distractors from the base text's parses.
    Baseline(BaselineArgs),
    /// Training datapoints for a masked-LM fine-tune.
    Extract(ExtractArgs),
    /// Generate distractors with a masked-LM predictor.
    Generate(GenerateArgs),
    /// Quantitative metrics for a generated-distractor file.
    Metrics(MetricsArgs),
    /// Human-evaluation statistics.
    Humaneval {
        #[command(subcommand)]
        command: HumanevalCommand,
    },
    /// Compare metric reports and rank models by best-metric wins.
    ModelSelect(ModelSelectArgs),
    /// Kernel similarity of two bracketed trees.
    Kernel(KernelArgs),
    /// Serve a scripted mock predictor over stdio or TCP.
    MockServe(MockServeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CorpusFormat {
    Jsonl,
    Released,
}

#[derive(Args)]
struct CorpusArgs {
    /// Corpus file.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "test")]
    split: Split,
    #[arg(long, value_enum, default_value = "jsonl")]
    format: CorpusFormat,
}

impl CorpusArgs {
    fn load(&self) -> Result<Corpus> {
        read_corpus(&self.corpus, self.split, self.format)
    }
}

fn read_corpus(path: &Path, split: Split, format: CorpusFormat) -> Result<Corpus> {
    let c = match format {
        CorpusFormat::Jsonl => load_corpus(path, split),
        CorpusFormat::Released => import_released(path, split),
    };
    c.with_context(|| format!("loading corpus {}", path.display()))
}

#[derive(Args)]
struct KernelParamArgs {
    /// Decay for gaps between matched children.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Decay for fragment depth.
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
}

impl KernelParamArgs {
    fn params(&self) -> Result<KernelParams> {
        Ok(KernelParams::new(self.lambda, self.mu)?)
    }
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Population instead of sample standard deviation.
    #[arg(long)]
    population_sd: bool,
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// CoNLL-U file or directory with sentence and key parses.
    #[arg(long)]
    parses: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write the parses of the suggested distractors here.
    #[arg(long)]
    parses_out: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Match morphological features as a subset instead of exactly.
    #[arg(long)]
    subset_features: bool,
    #[command(flatten)]
    kernel: KernelParamArgs,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, default_value = "upmlm")]
    variant: Variant,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    max_maskings: usize,
    #[arg(long, default_value_t = 384)]
    context_limit: usize,
    /// Predictor whose tokenizer to use; whitespace tokenization otherwise.
    #[arg(long)]
    predictor: Option<String>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// `host:port`, `cmd:<program args>` or `mock:<script.json>`.
    #[arg(long)]
    predictor: String,
    #[arg(long, default_value = "upmlm")]
    variant: Variant,
    /// Length order for u-PMLM: sf, lf or rnd.
    #[arg(long, default_value = "sf")]
    order: OrderMode,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    top_k: usize,
    #[arg(long, default_value_t = 20)]
    max_len: usize,
    #[arg(long, default_value_t = 384)]
    context_limit: usize,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    generated: PathBuf,
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Training corpus for the training-overlap metrics.
    #[arg(long)]
    train_corpus: Option<PathBuf>,
    /// Parses of keys and generated distractors.
    #[arg(long)]
    parses: Option<PathBuf>,
    /// Write the report as JSON here.
    #[arg(long)]
    json_out: Option<PathBuf>,
    #[command(flatten)]
    kernel: KernelParamArgs,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Subcommand)]
enum HumanevalCommand {
    /// Entropy, LF-DIS, t-test and outlier analysis of student answers.
    Students {
        #[arg(long)]
        responses: PathBuf,
        /// Expected number of correct answers under random guessing.
        #[arg(long)]
        mu0: f64,
        #[arg(long, default_value_t = LF_THRESHOLD)]
        threshold: f64,
        /// Write the per-MCQ entropy report (CSV) here.
        #[arg(long)]
        entropy_out: Option<PathBuf>,
        #[arg(long)]
        json_out: Option<PathBuf>,
    },
    /// Acceptance summary and agreement of teacher judgments.
    Teachers {
        #[arg(long)]
        judgments: PathBuf,
        /// Student responses, for the LF-DIS cross-table.
        #[arg(long)]
        responses: Option<PathBuf>,
        #[arg(long)]
        json_out: Option<PathBuf>,
    },
    /// Entropy-bucketed sample of MCQs for the teacher round.
    Sample {
        #[arg(long)]
        entropy_report: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        buckets: usize,
        #[arg(long, default_value_t = 9)]
        per_bucket: usize,
        #[arg(long)]
        json_out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ModelSelectArgs {
    /// Metric reports as `name=path` or `path` (named by file stem).
    #[arg(required = true, num_args = 2..)]
    reports: Vec<String>,
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: String,
    /// Trees carry a lexical layer under POS nodes.
    #[arg(long)]
    lexicals: bool,
    #[command(flatten)]
    kernel: KernelParamArgs,
}

#[derive(Args)]
struct MockServeArgs {
    #[arg(long)]
    script: String,
    /// Listen on this TCP address instead of stdio.
    #[arg(long)]
    listen: Option<String>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn envelope<T: Serialize>(header: &Header, report: &T) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "tool": header.tool,
        "seed": header.seed,
        "params": header.params,
        "report": report,
    })
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, v)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn print_table(rows: &[(String, String)]) {
    let w = rows.iter().map(|(n, _)| n.chars().count()).max().unwrap_or(0);
    for (n, v) in rows {
        println!("{n:<w$}  {v}");
    }
}

fn stats(a: StatsArgs) -> Result<()> {
    let corpus = a.corpus.load()?;
    let kind = if a.population_sd { SdKind::Population } else { SdKind::Sample };
    let report = corpus_stats(&corpus, kind)?;
    if a.json {
        let h = Header::new("stats", 0).with("split", a.corpus.split.to_string());
        println!("{}", serde_json::to_string_pretty(&envelope(&h, &report))?);
    } else {
        println!("split: {}", report.split);
        let rows: Vec<(String, String)> =
            report.rows().into_iter().map(|(n, v)| (n.to_string(), v)).collect();
        print_table(&rows);
    }
    Ok(())
}

fn baseline(a: BaselineArgs) -> Result<()> {
    let corpus = a.corpus.load()?;
    let parses = ParseStore::load(&a.parses)
        .with_context(|| format!("loading parses {}", a.parses.display()))?;
    let config = BaselineConfig {
        k: a.k,
        params: a.kernel.params()?,
        pad: true,
        feature_match: if a.subset_features {
            mcqdg::udtree::FeatureMatch::Subset
        } else {
            mcqdg::udtree::FeatureMatch::Exact
        },
    };
    let out = run_baseline(&corpus, &parses, &config)?;
    let header = Header::new("baseline", a.seed)
        .with("k", a.k)
        .with("lambda", a.kernel.lambda)
        .with("mu", a.kernel.mu)
        .with("feature_match", if a.subset_features { "subset" } else { "exact" });
    let records: Vec<SuggestionRecord> = out
        .iter()
        .map(|(id, sugg)| {
            let mut r = SuggestionRecord::new(id, sugg.iter().map(|s| s.surface.clone()).collect());
            r.scores = Some(sugg.iter().map(|s| s.score).collect());
            r
        })
        .collect();
    let mut w = create(&a.out)?;
    write_suggestions(&mut w, &header, &records)?;
    w.flush()?;

    if let Some(path) = &a.parses_out {
        let mut w = create(path)?;
        for mcq in &corpus.mcqs {
            if let Some(Ok(key)) = parses.key(&mcq.id) {
                w.write_all(phrase_block(key, &mcq.id, PhraseRole::Key).as_bytes())?;
            }
            for (slot, s) in out[&mcq.id].iter().enumerate() {
                if let Some(tree) = &s.tree {
                    w.write_all(phrase_block(tree, &mcq.id, PhraseRole::Generated(slot)).as_bytes())?;
                }
            }
        }
        w.flush()?;
    }
    eprintln!("baseline: {} MCQs written to {}", records.len(), a.out.display());
    Ok(())
}

fn extract(a: ExtractArgs) -> Result<()> {
    let corpus = a.corpus.load()?;
    let config = ExtractionConfig {
        variant: a.variant,
        max_maskings: a.max_maskings,
        context_limit: a.context_limit,
        seed: a.seed,
    };
    let remote = a.predictor.as_deref().map(connect).transpose()?;
    let tokenizer: &dyn Tokenizer = match &remote {
        Some(b) => b.as_ref(),
        None => &WhitespaceTokenizer,
    };
    let examples = extract_corpus(&corpus, tokenizer, &config)?;
    let header = Header::new("extract", a.seed)
        .with("variant", a.variant)
        .with("max_maskings", a.max_maskings)
        .with("context_limit", a.context_limit)
        .with("split", a.corpus.split.to_string());
    let mut w = create(&a.out)?;
    write_examples(&mut w, &header, &examples)?;
    w.flush()?;
    eprintln!("extract: {} examples written to {}", examples.len(), a.out.display());
    Ok(())
}

fn generate(a: GenerateArgs) -> Result<()> {
    let corpus = a.corpus.load()?;
    let backend = connect(&a.predictor)?;
    let config = GenConfig {
        variant: a.variant,
        max_len: a.max_len,
        n_distractors: 3,
        top_k: a.top_k,
    };
    let texts = corpus.text_index();
    let mut records = Vec::with_capacity(corpus.mcqs.len());
    for mcq in &corpus.mcqs {
        let body = &texts[mcq.text_id.as_str()].body;
        let tm = tokenize_mcq(mcq, body, backend.as_ref(), a.context_limit)?;
        let generated = match a.variant {
            Variant::L2r => generate_l2r(&tm.context, backend.as_ref(), backend.as_ref(), &config),
            Variant::Upmlm => {
                let planned = plan_lengths(mcq, backend.as_ref(), config.n_distractors)?;
                let lengths = order_lengths(&planned, a.order, derive_seed(a.seed, &mcq.id));
                generate_upmlm(&tm.context, backend.as_ref(), backend.as_ref(), &lengths, &config)
            }
        }
        .with_context(|| format!("generating for {}", mcq.id))?;
        let mut r = SuggestionRecord::new(&mcq.id, generated.iter().map(|g| g.text.clone()).collect());
        r.stop_reasons = Some(generated.iter().map(|g| g.stop.as_str().to_string()).collect());
        records.push(r);
    }
    let mut header = Header::new("generate", a.seed)
        .with("variant", a.variant)
        .with("top_k", a.top_k)
        .with("max_len", a.max_len)
        .with("context_limit", a.context_limit)
        .with("predictor", &a.predictor);
    if a.variant == Variant::Upmlm {
        header = header.with("order", a.order);
    }
    let mut w = create(&a.out)?;
    write_suggestions(&mut w, &header, &records)?;
    w.flush()?;
    eprintln!("generate: {} MCQs written to {}", records.len(), a.out.display());
    Ok(())
}

fn metrics(a: MetricsArgs) -> Result<()> {
    let corpus = a.corpus.load()?;
    let (_, records) = read_suggestions(&a.generated)
        .with_context(|| format!("reading {}", a.generated.display()))?;
    let generated = GeneratedSet::from_records(&records)?;
    let train = a
        .train_corpus
        .as_deref()
        .map(|p| read_corpus(p, Split::Train, a.corpus.format))
        .transpose()?;
    let parses = a.parses.as_deref().map(ParseStore::load).transpose()?;
    let report = evaluate(&generated, &corpus, train.as_ref(), parses.as_ref(), &a.kernel.params()?)?;
    print!("{report}");
    if let Some(path) = &a.json_out {
        let h = Header::new("metrics", a.seed)
            .with("generated", a.generated.display().to_string())
            .with("lambda", a.kernel.lambda)
            .with("mu", a.kernel.mu);
        write_json(path, &envelope(&h, &report))?;
    }
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn humaneval(cmd: HumanevalCommand) -> Result<()> {
    match cmd {
        HumanevalCommand::Students {
            responses,
            mu0,
            threshold,
            entropy_out,
            json_out,
        } => {
            let m = ResponseMatrix::read_csv(open(&responses)?)?;
            let entropies = entropy_report(&m)?;
            let lf = lf_dis(&m, threshold);
            let correct = m.correct_per_subject();
            let ttest = one_sample_ttest(&correct, mu0)?;
            let mild = iqr_outliers(&correct, 1.5)?;
            let extreme = iqr_outliers(&correct, 3.0)?;
            let mean_h = entropies.iter().map(|r| r.entropy).sum::<f64>() / entropies.len() as f64;
            print_table(&[
                ("Subjects".into(), m.subjects.len().to_string()),
                ("MCQs".into(), m.mcqs.len().to_string()),
                ("Mean entropy (nats)".into(), format!("{mean_h:.4}")),
                ("MCQs with H = 0".into(), entropies.iter().filter(|r| r.entropy == 0.0).count().to_string()),
                ("MCQs losing >= 1 distractor".into(), lf.losing_any.to_string()),
                ("MCQs losing all distractors".into(), lf.losing_all.to_string()),
                ("MCQs keeping all distractors".into(), lf.keeping_all.to_string()),
                ("Mean correct".into(), format!("{:.2}", ttest.mean)),
                ("SE".into(), format!("{:.2}", ttest.se)),
                ("t".into(), format!("t({}) = {:.2}", ttest.df, ttest.t)),
                ("p (two-tailed)".into(), format!("{:.3e}", ttest.p)),
                ("r".into(), format!("{:.2}", ttest.r)),
                ("Mild outliers (1.5 IQR)".into(), mild.count().to_string()),
                ("Extreme outliers (3 IQR)".into(), extreme.count().to_string()),
            ]);
            if let Some(p) = entropy_out {
                let mut w = create(&p)?;
                write_entropy_report(&mut w, &entropies)?;
                w.flush()?;
            }
            if let Some(p) = json_out {
                let h = Header::new("humaneval-students", 0).with("mu0", mu0).with("threshold", threshold);
                let report = json!({
                    "entropy": entropies,
                    "lf_dis": lf,
                    "ttest": ttest,
                    "outliers_mild": mild,
                    "outliers_extreme": extreme,
                });
                write_json(&p, &envelope(&h, &report))?;
            }
        }
        HumanevalCommand::Teachers {
            judgments,
            responses,
            json_out,
        } => {
            let j = JudgmentMatrix::read_csv(open(&judgments)?)?;
            let lf = responses
                .as_deref()
                .map(|p| -> Result<_> { Ok(lf_dis(&ResponseMatrix::read_csv(open(p)?)?, LF_THRESHOLD)) })
                .transpose()?;
            let s = acceptance_summary(&j, lf.as_ref());
            let gamma = gamma_n(&j);
            let mut rows = vec![
                ("MCQs".to_string(), s.n_mcqs.to_string()),
                ("Teachers".into(), s.n_teachers.to_string()),
                ("Mean accepted per MCQ per teacher".into(), format!("{:.2}", s.mean_accepted)),
                ("All teachers accept >= 1".into(), format!("{:.1}%", s.pct_all_accept_any)),
                ("Majority accept >= 1".into(), format!("{:.1}%", s.pct_majority_accept_any)),
                ("Majority accept all".into(), format!("{:.1}%", s.pct_majority_accept_all)),
                ("Majority reject all".into(), format!("{:.1}%", s.pct_majority_reject_all)),
                (
                    "gamma_N".into(),
                    match &gamma {
                        Ok(g) => format!("{g:.2}"),
                        Err(e) => format!("undefined ({e})"),
                    },
                ),
            ];
            for (cat, n) in &s.reasons {
                rows.push((format!("Rejected: {cat}"), n.to_string()));
            }
            if let Some(x) = &s.lf_cross {
                rows.push(("LF-DIS, majority accepted".into(), x.lf_majority_accepted.to_string()));
                rows.push(("LF-DIS, majority rejected".into(), x.lf_majority_rejected.to_string()));
                rows.push(("Other, majority accepted".into(), x.non_lf_majority_accepted.to_string()));
                rows.push(("Other, majority rejected".into(), x.non_lf_majority_rejected.to_string()));
            }
            print_table(&rows);
            if let Some(p) = json_out {
                let h = Header::new("humaneval-teachers", 0);
                let report = json!({ "summary": s, "gamma_n": gamma.ok() });
                write_json(&p, &envelope(&h, &report))?;
            }
        }
        HumanevalCommand::Sample {
            entropy_report,
            seed,
            buckets,
            per_bucket,
            json_out,
        } => {
            let rows = read_entropy_report(open(&entropy_report)?)?;
            let entropies: Vec<(String, f64)> = rows.into_iter().map(|r| (r.mcq_id, r.entropy)).collect();
            let sample = entropy_buckets(&entropies, buckets, per_bucket, seed)?;
            for (i, b) in sample.iter().enumerate() {
                println!("bucket {}: {}", i + 1, b.join(" "));
            }
            if let Some(p) = json_out {
                let h = Header::new("humaneval-sample", seed)
                    .with("buckets", buckets)
                    .with("per_bucket", per_bucket);
                write_json(&p, &envelope(&h, &sample))?;
            }
        }
    }
    Ok(())
}

fn read_report(path: &Path) -> Result<MetricReport> {
    let v: Value = serde_json::from_reader(open(path)?)?;
    let inner = v.get("report").cloned().unwrap_or(v);
    serde_json::from_value(inner).with_context(|| format!("{} is not a metric report", path.display()))
}

fn model_select_cmd(a: ModelSelectArgs) -> Result<()> {
    let mut reports = Vec::new();
    for arg in &a.reports {
        let (name, path) = match arg.split_once('=') {
            Some((n, p)) => (n.to_string(), PathBuf::from(p)),
            None => {
                let p = PathBuf::from(arg);
                let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                (stem, p)
            }
        };
        reports.push((name, read_report(&path)?));
    }
    let table = model_select(&reports)?;
    print!("{table}");
    println!("best: {}", table.winners().join(", "));
    if let Some(p) = a.json_out {
        write_json(&p, &envelope(&Header::new("model-select", 0), &table))?;
    }
    Ok(())
}

fn kernel(a: KernelArgs) -> Result<()> {
    let t1 = GrctNode::parse_bracketed(&a.a, a.lexicals)?;
    let t2 = GrctNode::parse_bracketed(&a.b, a.lexicals)?;
    let p = a.kernel.params()?;
    let out: BTreeMap<&str, f64> = [
        ("ptk", ptk(&t1, &t2, &p)),
        ("ptk_aa", ptk(&t1, &t1, &p)),
        ("ptk_bb", ptk(&t2, &t2, &p)),
        ("ncptk", ncptk(&t1, &t2, &p)?),
    ]
    .into_iter()
    .collect();
    println!("{}", serde_json::to_string(&out)?);
    Ok(())
}

fn mock_serve(a: MockServeArgs) -> Result<()> {
    let mock = MockPredictor::new(load_script(&a.script)?);
    match a.listen {
        None => {
            let stdin = io::stdin();
            serve_lines(&mock, &mock, stdin.lock(), io::stdout().lock())?;
        }
        Some(addr) => {
            let listener = std::net::TcpListener::bind(&addr).with_context(|| format!("binding {addr}"))?;
            eprintln!("mock predictor listening on {}", listener.local_addr()?);
            for stream in listener.incoming() {
                let stream = stream?;
                let reader = BufReader::new(stream.try_clone()?);
                if let Err(e) = serve_lines(&mock, &mock, reader, stream) {
                    eprintln!("connection ended: {e}");
                }
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Stats(a) => stats(a),
        Command::Baseline(a) => baseline(a),
        Command::Extract(a) => extract(a),
        Command::Generate(a) => generate(a),
        Command::Metrics(a) => metrics(a),
        Command::Humaneval { command } => humaneval(command),
        Command::ModelSelect(a) => model_select_cmd(a),
        Command::Kernel(a) => kernel(a),
        Command::MockServe(a) => mock_serve(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
