use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, LevelFilter};
use serde::Serialize;

use selpref::clustering::{
    initial_classification, run_exchange, write_trace, Criterion, InitPolicy, SweepPolicy, DEFAULT_DISCOUNT,
};
use selpref::corpus::parse_tagged_stream;
use selpref::counts::{encode_corpus, read_classes, write_classes, Classification, GridPolicy, Side};
use selpref::evaluation::{common_events, perplexity, tune_lambda, SplitConfig};
use selpref::exec::Execution;
use selpref::extractor::{
    extract_pairs, read_pairs, read_records, select_training_pairs, write_pairs, write_records, PairMode, PairRecord,
};
use selpref::io::{open, write_atomic};
use selpref::model::{
    AnyModel, BPolicy, ClusterBigramModel, InterpolatedModel, ModelOptions, OovPolicy, Scorer, UnigramModel,
};
use selpref::pipeline::{run_pipeline, PipelineConfig, PipelineOutput};
use selpref::synth::{generate_tagged, SynthConfig};

#[derive(Parser, Debug)]
#[command(name = "selpref", version, about = "Class-based models of verb-object selection")]
struct Cli {
    /// Log progress to stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    /// Run everything on one thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic tagged corpus.
    Generate(GenerateArgs),
    /// Run the clause automaton over a tagged corpus.
    Extract(ExtractArgs),
    /// Cluster both sides of a pair file.
    Cluster(ClusterArgs),
    /// Fit a class-based or unigram model.
    Train(TrainArgs),
    /// Score records with a model.
    Perplexity(PerplexityArgs),
    /// Tune λ on dev records and write the mixture of two models.
    Interpolate(InterpolateArgs),
    /// Extract, cluster, train, tune and evaluate in one go.
    Pipeline(PipelineArgs),
}

#[derive(Args, Debug, Serialize)]
struct SynthArgs {
    /// Sentences in the synthetic corpus.
    #[arg(long, default_value_t = SynthConfig::default().sentences)]
    sentences: usize,
    #[arg(long, default_value_t = SynthConfig::default().seed)]
    seed: u64,
}

impl SynthArgs {
    fn config(&self) -> SynthConfig {
        SynthConfig { sentences: self.sentences, seed: self.seed, ..Default::default() }
    }
}

#[derive(Args, Debug, Serialize)]
struct GenerateArgs {
    #[arg(short, long)]
    output: PathBuf,
    #[command(flatten)]
    synth: SynthArgs,
}

#[derive(Args, Debug, Serialize)]
struct ExtractArgs {
    /// Tagged corpus, one `word<TAB>tag` per line.
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Write `predictor<TAB>object` pairs for this mode instead of full records.
    #[arg(long)]
    mode: Option<PairMode>,
    /// Tag prefixes that mark nouns; repeatable.
    #[arg(long = "noun-prefix", default_value = "nn")]
    noun_prefixes: Vec<String>,
}

#[derive(Args, Debug, Serialize, Clone)]
struct ClusterOptions {
    #[arg(long, default_value = "lo")]
    criterion: Criterion,
    /// Discount used by the leaving-one-out criterion.
    #[arg(long, default_value_t = DEFAULT_DISCOUNT)]
    discount: f64,
    /// Clusters per side.
    #[arg(long, default_value_t = 50)]
    clusters: usize,
    /// Overrides --clusters for the predictor side.
    #[arg(long)]
    clusters_x: Option<usize>,
    /// Overrides --clusters for the object side.
    #[arg(long)]
    clusters_y: Option<usize>,
    /// Words seen fewer times stay where initialisation put them.
    #[arg(long, default_value_t = 5)]
    min_count: u64,
    #[arg(long, default_value_t = 20)]
    max_iterations: usize,
    #[arg(long, default_value = "per-word")]
    sweep_policy: SweepPolicy,
    #[arg(long, default_value = "frequency")]
    init: InitPolicy,
    /// Cells that count as unseen: `non-empty` or `full`.
    #[arg(long, default_value = "non-empty")]
    grid: GridPolicy,
}

impl ClusterOptions {
    fn criterion(&self) -> Result<Criterion> {
        let c = match self.criterion {
            Criterion::Ml => Criterion::Ml,
            Criterion::Lo { .. } => Criterion::Lo { b: self.discount },
        };
        c.validate()?;
        Ok(c)
    }

    fn apply(&self, config: &mut PipelineConfig) -> Result<()> {
        config.criterion = self.criterion()?;
        config.clusters_x = self.clusters_x.unwrap_or(self.clusters);
        config.clusters_y = self.clusters_y.unwrap_or(self.clusters);
        config.min_count = self.min_count;
        config.max_iterations = self.max_iterations;
        config.sweep_policy = self.sweep_policy;
        config.init = self.init;
        config.grid = self.grid;
        Ok(())
    }
}

#[derive(Args, Debug, Serialize)]
struct ClusterArgs {
    /// Pair file, one `predictor<TAB>object` per line.
    #[arg(short, long)]
    pairs: PathBuf,
    /// Receives classes_x.tsv, classes_y.tsv, trace.tsv and config.json.
    #[arg(short, long)]
    out_dir: PathBuf,
    #[command(flatten)]
    options: ClusterOptions,
}

#[derive(Args, Debug, Serialize)]
struct ModelArgs {
    /// Discount for the fitted model: `estimated`, `fixed` or `fixed:B`.
    #[arg(long, default_value = "estimated")]
    b_policy: BPolicy,
    /// Renormalise each conditional distribution to sum to one.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    #[arg(short, long)]
    pairs: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Fit a unigram model over the objects instead.
    #[arg(long)]
    unigram: bool,
    /// Which predictor the pairs hold; stored in the model.
    #[arg(long, default_value = "verb-object")]
    mode: PairMode,
    /// Directory with classes_x.tsv and classes_y.tsv; clusters the pairs when absent.
    #[arg(long)]
    classes: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    cluster: ClusterOptions,
}

#[derive(Args, Debug, Serialize)]
struct PerplexityArgs {
    #[arg(short, long)]
    model: PathBuf,
    /// Record file as written by `extract` without --mode.
    #[arg(short, long)]
    records: PathBuf,
    /// Report file; printed to stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct InterpolateArgs {
    #[arg(long)]
    model_a: PathBuf,
    #[arg(long)]
    model_b: PathBuf,
    /// Held-out records used to pick λ.
    #[arg(long)]
    dev: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Number of λ values tried, evenly spaced inside (0, 1).
    #[arg(long, default_value_t = 50)]
    lambda_points: usize,
}

#[derive(Args, Debug, Serialize)]
struct PipelineArgs {
    /// Tagged corpus; the synthetic corpus is used when absent.
    #[arg(short, long)]
    input: Option<PathBuf>,
    #[arg(short, long)]
    out_dir: PathBuf,
    #[command(flatten)]
    synth: SynthArgs,
    #[arg(long = "noun-prefix", default_value = "nn")]
    noun_prefixes: Vec<String>,
    #[command(flatten)]
    cluster: ClusterOptions,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 50)]
    lambda_points: usize,
    #[arg(long, default_value_t = 0.75)]
    train_fraction: f64,
    /// Share of the training part held out for tuning λ.
    #[arg(long, default_value_t = 0.05)]
    dev_fraction: f64,
    /// Shuffle records with this seed before splitting.
    #[arg(long)]
    shuffle_seed: Option<u64>,
    /// `skip` or `unk[:N]`.
    #[arg(long, default_value = "skip")]
    oov: OovPolicy,
}

/// Files written so far, removed again if the command fails.
#[derive(Default)]
struct Outputs {
    files: Vec<PathBuf>,
    dirs: Vec<PathBuf>,
}

impl Outputs {
    fn dir(&mut self, path: &Path) -> Result<()> {
        let mut missing: Vec<PathBuf> =
            path.ancestors().take_while(|p| !p.as_os_str().is_empty() && !p.exists()).map(Path::to_path_buf).collect();
        fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))?;
        missing.reverse();
        self.dirs.extend(missing);
        Ok(())
    }

    fn write<F>(&mut self, path: &Path, write: F) -> Result<()>
    where
        F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
    {
        write_atomic(path, write)?;
        self.files.push(path.to_path_buf());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, path: &Path, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        self.write(path, |w| writeln!(w, "{text}"))
    }

    fn remove_all(&self) {
        for f in self.files.iter().rev() {
            let _ = fs::remove_file(f);
        }
        for d in self.dirs.iter().rev() {
            let _ = fs::remove_dir(d);
        }
    }
}

/// `<path>.config.json` next to a single-file output.
fn config_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".config.json");
    output.with_file_name(name)
}

#[derive(Serialize)]
struct Resolved<'a, A, C> {
    command: &'a str,
    version: &'a str,
    execution: Execution,
    args: &'a A,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<C>,
}

fn resolved<'a, A: Serialize>(command: &'a str, args: &'a A, exec: Execution) -> Resolved<'a, A, ()> {
    with_config(command, args, exec, None)
}

fn with_config<'a, A: Serialize, C: Serialize>(
    command: &'a str,
    args: &'a A,
    exec: Execution,
    config: Option<C>,
) -> Resolved<'a, A, C> {
    Resolved { command, version: env!("CARGO_PKG_VERSION"), execution: exec, args, config }
}

fn read_tagged(path: &Path) -> Result<Vec<selpref::corpus::TaggedToken>> {
    parse_tagged_stream(open(path)?).with_context(|| format!("reading {}", path.display()))
}

fn read_model(path: &Path) -> Result<AnyModel> {
    AnyModel::read(open(path)?).with_context(|| format!("reading model {}", path.display()))
}

fn read_record_file(path: &Path) -> Result<Vec<PairRecord>> {
    read_records(open(path)?).with_context(|| format!("reading records {}", path.display()))
}

fn generate(args: &GenerateArgs, exec: Execution, out: &mut Outputs) -> Result<()> {
    let tokens = generate_tagged(&args.synth.config());
    out.write(&args.output, |w| {
        for t in &tokens {
            writeln!(w, "{}\t{}", t.word, t.tag)?;
        }
        Ok(())
    })?;
    out.json(&config_path(&args.output), &resolved("generate", args, exec))
}

fn extract(args: &ExtractArgs, exec: Execution, out: &mut Outputs) -> Result<()> {
    let tokens = read_tagged(&args.input)?;
    let config = PipelineConfig { noun_prefixes: args.noun_prefixes.clone(), ..Default::default() };
    let records = extract_pairs(&tokens, &config.classifier());
    info!("{} tokens, {} noun records", tokens.len(), records.len());
    match args.mode {
        Some(mode) => {
            let pairs = select_training_pairs(&records, mode);
            out.write(&args.output, |w| write_pairs(w, &pairs))?;
        }
        None => out.write(&args.output, |w| write_records(w, &records))?,
    }
    out.json(&config_path(&args.output), &resolved("extract", args, exec))
}

fn cluster(args: &ClusterArgs, exec: Execution, out: &mut Outputs) -> Result<()> {
    let pairs = read_pairs(open(&args.pairs)?).with_context(|| format!("reading {}", args.pairs.display()))?;
    let mut config = PipelineConfig { execution: exec, ..Default::default() };
    args.options.apply(&mut config)?;
    let clustered = selpref::pipeline::cluster_pairs(&pairs, &config)?;
    let (corpus, result) = (&clustered.corpus, &clustered.exchange);
    info!("score {:.4} after {} sweeps", result.final_score(), result.trace.len() - 1);

    out.dir(&args.out_dir)?;
    let g = &result.classification;
    out.write(&args.out_dir.join("classes_x.tsv"), |w| write_classes(w, &corpus.x_vocab, g.assignments(Side::X)))?;
    out.write(&args.out_dir.join("classes_y.tsv"), |w| write_classes(w, &corpus.y_vocab, g.assignments(Side::Y)))?;
    out.write(&args.out_dir.join("trace.tsv"), |w| write_trace(w, &result.trace))?;
    out.json(&args.out_dir.join("config.json"), &with_config("cluster", args, exec, Some(&config)))
}

fn load_classes(dir: &Path, corpus: &selpref::counts::PairCorpus) -> Result<Classification> {
    let read = |name: &str, side: Side| -> Result<Vec<usize>> {
        let path = dir.join(name);
        read_classes(open(&path)?, corpus.vocab(side)).with_context(|| format!("reading {}", path.display()))
    };
    let (g1, g2) = (read("classes_x.tsv", Side::X)?, read("classes_y.tsv", Side::Y)?);
    let count = |g: &[usize]| g.iter().max().map_or(1, |m| m + 1);
    let (mx, my) = (count(&g1), count(&g2));
    Ok(Classification::new(g1, g2, mx, my)?)
}

fn train(args: &TrainArgs, exec: Execution, out: &mut Outputs) -> Result<()> {
    let pairs = read_pairs(open(&args.pairs)?).with_context(|| format!("reading {}", args.pairs.display()))?;
    let model = if args.unigram {
        AnyModel::Unigram(UnigramModel::fit(pairs.iter().map(|(_, y)| y))?)
    } else {
        let mut config = PipelineConfig { execution: exec, ..Default::default() };
        args.cluster.apply(&mut config)?;
        let corpus = encode_corpus(&pairs);
        let g = match &args.classes {
            Some(dir) => load_classes(dir, &corpus)?,
            None => {
                let init = initial_classification(&corpus, config.clusters_x, config.clusters_y, config.init)?;
                run_exchange(&corpus, &config.exchange_config(), config.criterion, init)?.classification
            }
        };
        let options =
            ModelOptions { b_policy: args.model.b_policy, strict: args.model.strict, grid: args.cluster.grid };
        let m = ClusterBigramModel::fit(corpus, g, args.mode, options)?;
        info!("model discount b = {:.4}", m.b());
        AnyModel::Cluster(Box::new(m))
    };
    out.write(&args.output, |w| model.write(w))?;
    out.json(&config_path(&args.output), &resolved("train", args, exec))
}

fn perplexity_cmd(args: &PerplexityArgs, exec: Execution, out: &mut Outputs) -> Result<()> {
    let model = read_model(&args.model)?;
    let records = read_record_file(&args.records)?;
    let events = common_events(&records, &[&model as &dyn Scorer], exec);
    let mut report = perplexity(&args.model.display().to_string(), &model, &events, exec)?;
    report.skipped = records.len() - events.len();
    let text = format!(
        "model\tevents\tskipped\tlog_likelihood\tperplexity\n{}\t{}\t{}\t{}\t{}\n",
        report.model, report.events, report.skipped, report.log_likelihood, report.perplexity
    );
    match &args.output {
        Some(path) => {
            out.write(path, |w| w.write_all(text.as_bytes()))?;
            out.json(&config_path(path), &resolved("perplexity", args, exec))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn interpolate(args: &InterpolateArgs, exec: Execution, out: &mut Outputs) -> Result<()> {
    let (a, b) = (read_model(&args.model_a)?, read_model(&args.model_b)?);
    let dev = read_record_file(&args.dev)?;
    let search = tune_lambda(&a, &b, &dev, args.lambda_points, exec)?;
    info!("lambda = {} over {} dev events", search.lambda, search.events);
    let model = AnyModel::Interpolated(Box::new(InterpolatedModel::new(search.lambda, a, b)?));
    out.write(&args.output, |w| model.write(w))?;
    out.json(&config_path(&args.output), &resolved("interpolate", args, exec))
}

fn write_stage(out: &mut Outputs, dir: &Path, stage: &selpref::pipeline::ModelStage) -> Result<()> {
    out.dir(dir)?;
    let vocab = |side| stage.model.vocab(side);
    let g = stage.model.classification();
    out.write(&dir.join("pairs.tsv"), |w| write_pairs(w, &stage.pairs))?;
    out.write(&dir.join("classes_x.tsv"), |w| write_classes(w, vocab(Side::X), g.assignments(Side::X)))?;
    out.write(&dir.join("classes_y.tsv"), |w| write_classes(w, vocab(Side::Y), g.assignments(Side::Y)))?;
    out.write(&dir.join("trace.tsv"), |w| write_trace(w, &stage.exchange.trace))?;
    out.write(&dir.join("model.txt"), |w| stage.model.write(w))
}

fn write_pipeline(out: &mut Outputs, dir: &Path, result: &PipelineOutput) -> Result<()> {
    out.write(&dir.join("records.tsv"), |w| write_records(w, &result.records))?;
    for (name, part) in
        [("train.tsv", &result.split.train), ("dev.tsv", &result.split.dev), ("test.tsv", &result.split.test)]
    {
        out.write(&dir.join(name), |w| write_records(w, part))?;
    }
    write_stage(out, &dir.join("verb-object"), &result.verb_object)?;
    write_stage(out, &dir.join("bigram"), &result.bigram)?;
    out.write(&dir.join("unigram.txt"), |w| result.unigram.write(w))?;
    out.write(&dir.join("lambda.tsv"), |w| {
        writeln!(w, "lambda\tlog_likelihood")?;
        for (l, ll) in &result.lambda.grid {
            writeln!(w, "{l}\t{ll}")?;
        }
        Ok(())
    })?;
    out.write(&dir.join("report.txt"), |w| w.write_all(result.comparison.to_text().as_bytes()))?;
    out.write(&dir.join("report.tsv"), |w| w.write_all(result.comparison.to_tsv().as_bytes()))
}

fn pipeline(args: &PipelineArgs, exec: Execution, out: &mut Outputs) -> Result<()> {
    if !(0.0..=1.0).contains(&args.dev_fraction) {
        bail!("--dev-fraction must lie in [0, 1]");
    }
    let tokens = match &args.input {
        Some(path) => read_tagged(path)?,
        None => generate_tagged(&args.synth.config()),
    };
    let mut config = PipelineConfig {
        noun_prefixes: args.noun_prefixes.clone(),
        b_policy: args.model.b_policy,
        strict: args.model.strict,
        lambda_points: args.lambda_points,
        split: SplitConfig {
            train_fraction: args.train_fraction,
            dev_fraction: args.dev_fraction,
            shuffle_seed: args.shuffle_seed,
        },
        oov: args.oov,
        execution: exec,
        ..Default::default()
    };
    args.cluster.apply(&mut config)?;
    let result = run_pipeline(&tokens, &config)?;

    out.dir(&args.out_dir)?;
    write_pipeline(out, &args.out_dir, &result)?;
    out.json(&args.out_dir.join("config.json"), &with_config("pipeline", args, exec, Some(&config)))?;
    print!("{}", result.comparison.to_text());
    Ok(())
}

fn run(cli: &Cli, out: &mut Outputs) -> Result<()> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    match &cli.command {
        Command::Generate(a) => generate(a, exec, out),
        Command::Extract(a) => extract(a, exec, out),
        Command::Cluster(a) => cluster(a, exec, out),
        Command::Train(a) => train(a, exec, out),
        Command::Perplexity(a) => perplexity_cmd(a, exec, out),
        Command::Interpolate(a) => interpolate(a, exec, out),
        Command::Pipeline(a) => pipeline(a, exec, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    let mut out = Outputs::default();
    match run(&cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            out.remove_all();
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
