//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for data or model
//! errors. File arguments accept `-` for the standard streams.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::corpus::{self, Corpus};
use crate::evalbench::{self, EvalReport};
use crate::pipeline::{self, LemmatizerModel, Source, Stages};
use crate::rules::RuleConfig;
use crate::selector::SelectorConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "hylem",
    version,
    about = "Hybrid lookup + edit-tree lemmatizer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model from a CoNLL-U corpus with gold lemmas.
    Train(TrainArgs),
    /// Fill the LEMMA column of a CoNLL-U file.
    Lemmatize(LemmatizeArgs),
    /// Score a model against a gold CoNLL-U file.
    Evaluate(EvaluateArgs),
    /// Measure lemmatization throughput.
    Bench(BenchArgs),
    /// Show model contents.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 3)]
    top_k: usize,
    #[arg(long, default_value_t = SelectorConfig::default().epochs)]
    epochs: usize,
    #[arg(long, default_value_t = SelectorConfig::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = SelectorConfig::default().min_tree_freq)]
    min_tree_freq: u64,
    #[arg(long, default_value_t = SelectorConfig::default().learning_rate)]
    learning_rate: f32,
    /// log2 of the hashed feature space size.
    #[arg(long, default_value_t = SelectorConfig::default().feature_space_size.trailing_zeros())]
    feature_bits: u32,
    #[arg(long)]
    no_casing: bool,
    #[arg(long)]
    no_mark_strip: bool,
    #[arg(long)]
    no_number_trim: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct StageArgs {
    /// Override the model's top_k.
    #[arg(long)]
    top_k: Option<usize>,
    /// Skip the lookup stage.
    #[arg(long)]
    no_lookup: bool,
    /// Skip post-processing rules.
    #[arg(long)]
    no_rules: bool,
}

impl StageArgs {
    fn stages(&self) -> Stages {
        Stages {
            lookup: !self.no_lookup,
            rules: !self.no_rules,
        }
    }
}

#[derive(Debug, Args)]
struct LemmatizeArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Worker threads for batch lemmatization (0 = all cores).
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[command(flatten)]
    stages: StageArgs,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    json: bool,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[command(flatten)]
    stages: StageArgs,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 3)]
    runs: usize,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[arg(long)]
    model: PathBuf,
    /// Dump the edit-tree inventory.
    #[arg(long, conflicts_with = "lookup")]
    trees: bool,
    /// Dump the lookup table.
    #[arg(long)]
    lookup: bool,
    #[arg(long)]
    json: bool,
}

/// An error that maps to exit code 2.
#[derive(Debug)]
struct DataError(String);

impl<E: std::error::Error> From<E> for DataError {
    fn from(e: E) -> Self {
        DataError(e.to_string())
    }
}

type CmdResult = Result<(), DataError>;

struct Io<'a> {
    stdin: &'a mut dyn BufRead,
    stdout: &'a mut dyn Write,
}

impl Io<'_> {
    fn read_all(&mut self, path: &PathBuf) -> Result<Vec<u8>, DataError> {
        let mut data = Vec::new();
        if path.as_os_str() == "-" {
            self.stdin.read_to_end(&mut data)?;
        } else {
            File::open(path)
                .map_err(|e| DataError(format!("{}: {}", path.display(), e)))?
                .read_to_end(&mut data)?;
        }
        Ok(data)
    }

    fn read_corpus(&mut self, path: &PathBuf) -> Result<Corpus, DataError> {
        let data = self.read_all(path)?;
        let name = path.display().to_string();
        corpus::parse_conllu(&data[..], &name)
            .map_err(|e| DataError(format!("{}: {}", path.display(), e)))
    }

    fn read_model(&mut self, path: &PathBuf) -> Result<LemmatizerModel, DataError> {
        let data = self.read_all(path)?;
        pipeline::load_model(&data[..]).map_err(|e| DataError(format!("{}: {}", path.display(), e)))
    }

    fn write_to(
        &mut self,
        path: &PathBuf,
        f: impl FnOnce(&mut dyn Write) -> CmdResult,
    ) -> CmdResult {
        if path.as_os_str() == "-" {
            f(self.stdout)
        } else {
            let file =
                File::create(path).map_err(|e| DataError(format!("{}: {}", path.display(), e)))?;
            let mut writer = BufWriter::new(file);
            f(&mut writer)?;
            writer.flush()?;
            Ok(())
        }
    }
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, DataError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()?;
    Ok(pool.install(f))
}

fn apply_top_k(model: &mut LemmatizerModel, top_k: Option<usize>) -> CmdResult {
    if let Some(k) = top_k {
        if k == 0 {
            return Err(DataError("--top-k must be at least 1".to_owned()));
        }
        model.selector.config.top_k = k;
    }
    Ok(())
}

#[derive(Serialize)]
struct TrainSummary {
    model: String,
    sentences: usize,
    tokens: usize,
    trees: usize,
    lookup_entries: usize,
    selector_classes: usize,
    selector_weights: usize,
}

fn train(args: TrainArgs, io: &mut Io) -> CmdResult {
    if args.feature_bits < 10 || args.feature_bits > 31 {
        return Err(DataError(
            "--feature-bits must be between 10 and 31".to_owned(),
        ));
    }
    let corpus = io.read_corpus(&args.corpus)?;
    let config = SelectorConfig {
        top_k: args.top_k,
        feature_space_size: 1 << args.feature_bits,
        epochs: args.epochs,
        learning_rate: args.learning_rate,
        seed: args.seed,
        min_tree_freq: args.min_tree_freq,
    };
    let rules = RuleConfig {
        enable_casing: !args.no_casing,
        enable_mark_strip: !args.no_mark_strip,
        enable_number_trim: !args.no_number_trim,
    };
    let model = pipeline::train(&corpus, &config, &rules)?;
    io.write_to(&args.out, |w| Ok(model.save(w)?))?;

    if args.out.as_os_str() != "-" {
        let summary = TrainSummary {
            model: args.out.display().to_string(),
            sentences: corpus.sentences.len(),
            tokens: corpus.token_count(),
            trees: model.inventory.len(),
            lookup_entries: model.lookup.len(),
            selector_classes: model.selector.n_classes(),
            selector_weights: model.selector.weights.nnz(),
        };
        if args.json {
            writeln!(io.stdout, "{}", serde_json::to_string(&summary)?)?;
        } else {
            writeln!(
                io.stdout,
                "trained on {} tokens: {} edit trees, {} lookup entries, {} selector classes -> {}",
                summary.tokens,
                summary.trees,
                summary.lookup_entries,
                summary.selector_classes,
                summary.model
            )?;
        }
    }
    Ok(())
}

fn lemmatize(args: LemmatizeArgs, io: &mut Io) -> CmdResult {
    let mut model = io.read_model(&args.model)?;
    apply_top_k(&mut model, args.stages.top_k)?;
    let input = io.read_corpus(&args.input)?;
    let stages = args.stages.stages();
    let output = with_threads(args.threads, || model.lemmatize_corpus(&input, stages))?;
    io.write_to(&args.output, |w| Ok(corpus::write_conllu(&output, w)?))
}

#[derive(Serialize, Default)]
struct SourceCounts {
    lookup: usize,
    selector: usize,
    fallback: usize,
}

#[derive(Serialize)]
struct EvaluateOutput {
    top_k: usize,
    lookup: bool,
    rules: bool,
    sources: SourceCounts,
    #[serde(flatten)]
    report: EvalReport,
}

fn evaluate(args: EvaluateArgs, io: &mut Io) -> CmdResult {
    let mut model = io.read_model(&args.model)?;
    apply_top_k(&mut model, args.stages.top_k)?;
    let gold = io.read_corpus(&args.gold)?;
    let stages = args.stages.stages();

    let decisions = with_threads(args.threads, || {
        use rayon::prelude::*;
        gold.sentences
            .par_iter()
            .map(|s| model.lemmatize_with(s, stages))
            .collect::<Vec<_>>()
    })?;
    let mut predicted = gold.clone();
    let mut sources = SourceCounts::default();
    for (sentence, decisions) in predicted.sentences.iter_mut().zip(decisions) {
        for (token, decision) in sentence.tokens_mut().iter_mut().zip(decisions) {
            match decision.source {
                Source::Lookup => sources.lookup += 1,
                Source::Selector(_) => sources.selector += 1,
                Source::Fallback => sources.fallback += 1,
            }
            token.lemma = Some(decision.lemma);
        }
    }
    let report = evalbench::lemma_accuracy(&gold, &predicted)?;

    if args.json {
        let out = EvaluateOutput {
            top_k: model.selector.config.top_k,
            lookup: stages.lookup,
            rules: stages.rules,
            sources,
            report,
        };
        writeln!(io.stdout, "{}", serde_json::to_string(&out)?)?;
    } else {
        write!(io.stdout, "{}", report)?;
        writeln!(
            io.stdout,
            "sources: {} lookup, {} selector, {} fallback (top_k = {})",
            sources.lookup, sources.selector, sources.fallback, model.selector.config.top_k
        )?;
    }
    Ok(())
}

fn bench(args: BenchArgs, io: &mut Io) -> CmdResult {
    let mut model = io.read_model(&args.model)?;
    apply_top_k(&mut model, args.top_k)?;
    let corpus = io.read_corpus(&args.corpus)?;
    let report = evalbench::throughput_bench(&model, &corpus, args.runs)?;
    if args.json {
        writeln!(io.stdout, "{}", serde_json::to_string(&report)?)?;
    } else {
        write!(io.stdout, "{}", report)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct InspectSummary<'a> {
    format_version: u32,
    metadata: &'a str,
    trees: usize,
    lookup_entries: usize,
    selector_classes: usize,
    selector_features: usize,
    selector_weights: usize,
    top_k: usize,
    rules: RuleConfig,
}

#[derive(Serialize)]
struct TreeRecord {
    id: u32,
    freq: u64,
    tree: String,
}

#[derive(Serialize)]
struct LookupRecord<'a> {
    masked_form: &'a str,
    upos: &'a str,
    feats: String,
    tree: String,
    count: u64,
    total: u64,
}

fn inspect(args: InspectArgs, io: &mut Io) -> CmdResult {
    let model = io.read_model(&args.model)?;
    if args.trees {
        if args.json {
            for (id, tree, freq) in model.inventory.iter() {
                let record = TreeRecord {
                    id,
                    freq,
                    tree: tree.to_string(),
                };
                writeln!(io.stdout, "{}", serde_json::to_string(&record)?)?;
            }
        } else {
            write!(io.stdout, "{}", model.dump_trees())?;
        }
    } else if args.lookup {
        if args.json {
            for (key, entry) in model.lookup.sorted_entries() {
                let record = LookupRecord {
                    masked_form: &key.masked_form,
                    upos: &key.upos,
                    feats: corpus::feats_to_string(&key.feats),
                    tree: model
                        .inventory
                        .get(entry.tree)
                        .map(ToString::to_string)
                        .unwrap_or_default(),
                    count: entry.count,
                    total: entry.total,
                };
                writeln!(io.stdout, "{}", serde_json::to_string(&record)?)?;
            }
        } else {
            write!(io.stdout, "{}", model.lookup.dump(&model.inventory))?;
        }
    } else {
        let summary = InspectSummary {
            format_version: model.format_version,
            metadata: &model.metadata,
            trees: model.inventory.len(),
            lookup_entries: model.lookup.len(),
            selector_classes: model.selector.n_classes(),
            selector_features: model.selector.weights.features.len(),
            selector_weights: model.selector.weights.nnz(),
            top_k: model.selector.config.top_k,
            rules: model.rules,
        };
        if args.json {
            writeln!(io.stdout, "{}", serde_json::to_string(&summary)?)?;
        } else {
            writeln!(io.stdout, "format version:    {}", summary.format_version)?;
            writeln!(io.stdout, "metadata:          {}", summary.metadata)?;
            writeln!(io.stdout, "edit trees:        {}", summary.trees)?;
            writeln!(io.stdout, "lookup entries:    {}", summary.lookup_entries)?;
            writeln!(io.stdout, "selector classes:  {}", summary.selector_classes)?;
            writeln!(
                io.stdout,
                "selector features: {}",
                summary.selector_features
            )?;
            writeln!(io.stdout, "selector weights:  {}", summary.selector_weights)?;
            writeln!(io.stdout, "top_k:             {}", summary.top_k)?;
            writeln!(io.stdout, "rules:             {:?}", summary.rules)?;
        }
    }
    Ok(())
}

/// Run the CLI against explicit streams and return the exit code.
pub fn run_with_io<I, T>(
    argv: I,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e);
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };

    let mut io = Io { stdin, stdout };
    let result = match cli.command {
        Command::Train(args) => train(args, &mut io),
        Command::Lemmatize(args) => lemmatize(args, &mut io),
        Command::Evaluate(args) => evaluate(args, &mut io),
        Command::Bench(args) => bench(args, &mut io),
        Command::Inspect(args) => inspect(args, &mut io),
    };
    let flushed = io.stdout.flush();

    match result.and(flushed.map_err(DataError::from)) {
        Ok(()) => EXIT_OK,
        Err(DataError(message)) => {
            let _ = writeln!(stderr, "error: {}", message);
            EXIT_DATA
        }
    }
}

/// Run the CLI on the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdin = io::stdin();
    let mut stdin = BufReader::new(stdin.lock());
    let stdout = io::stdout();
    let mut stdout = BufWriter::new(stdout.lock());
    let stderr = io::stderr();
    let mut stderr = stderr.lock();
    run_with_io(argv, &mut stdin, &mut stdout, &mut stderr)
}
