use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand, ValueEnum};
use tempfile::NamedTempFile;

use rpq::features::write_features_to;
use rpq::quantizer::save_model_to;
use rpq::theory::{self, VerifyConfig};
use rpq::tokens::{
    read_merge_table, read_token_streams, train_merges_with_base, write_merge_table_to,
    write_token_streams_to, DEFAULT_TARGET_VOCAB,
};
use rpq::{
    apply_merges, dedup, encode_batch, generate_synthetic, load_model, read_features,
    stream_stats, InitMethod, Method, QuantizerConfig, SynthSpec, TokenStream,
};

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, error: anyhow!(msg.into()) }
    }

    fn validation(error: anyhow::Error) -> Self {
        Self { code: EXIT_VALIDATION, error }
    }
}

impl From<rpq::Error> for Failure {
    fn from(e: rpq::Error) -> Self {
        let code = if e.is_io_or_format() { EXIT_IO } else { EXIT_VALIDATION };
        Self { code, error: e.into() }
    }
}

trait PathContext<T> {
    fn at(self, path: &Path) -> Result<T, Failure>;
}

impl<T> PathContext<T> for rpq::Result<T> {
    fn at(self, path: &Path) -> Result<T, Failure> {
        self.map_err(|e| {
            let mut f = Failure::from(e);
            f.error = f.error.context(path.display().to_string());
            f
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "rpq", version, about = "Discretize feature sequences with K-means, PQ and RPQ")]
pub struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded Gaussian-mixture corpus as a DSRF file.
    GenSynth(GenSynthArgs),
    /// Train a K-means, PQ or RPQ model on a DSRF file.
    Train(TrainArgs),
    /// Encode DSRF files into a token file, one line per input.
    Encode(EncodeArgs),
    /// Collapse repeated consecutive tokens.
    Dedup(InOut),
    /// Learn pair-merge rules from a single-stream token file.
    BpeTrain(BpeTrainArgs),
    /// Apply learned merge rules.
    BpeApply(BpeApplyArgs),
    /// Print average length and vocabulary usage of a token file.
    Stats(StatsArgs),
    /// Run the Monte-Carlo checks of the RPQ error analysis.
    VerifyTheory(VerifyArgs),
}

#[derive(Debug, Args)]
struct GenSynthArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    frames: usize,
    #[arg(long, default_value_t = 8)]
    modes: usize,
    #[arg(long, default_value_t = 0.0)]
    correlation: f64,
    #[arg(long, default_value_t = SynthSpec::DEFAULT_MODE_SPREAD)]
    mode_spread: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Kmeans,
    Pq,
    Rpq,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Kmeans => Method::Kmeans,
            MethodArg::Pq => Method::Pq,
            MethodArg::Rpq => Method::Rpq,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InitArg {
    Random,
    Kmeanspp,
}

impl From<InitArg> for InitMethod {
    fn from(i: InitArg) -> Self {
        match i {
            InitArg::Random => InitMethod::Random,
            InitArg::Kmeanspp => InitMethod::KmeansPlusPlus,
        }
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long = "num-subspaces")]
    num_subspaces: Option<usize>,
    #[arg(long, default_value_t = rpq::kmeans::DEFAULT_CLUSTERS)]
    clusters: usize,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum)]
    init: Option<InitArg>,
    #[arg(long, default_value_t = rpq::kmeans::DEFAULT_MAX_ITERS)]
    max_iters: usize,
    #[arg(long, default_value_t = rpq::kmeans::DEFAULT_REL_TOL)]
    rel_tol: f64,
}

#[derive(Debug, Args)]
struct EncodeArgs {
    #[arg(long, short)]
    model: PathBuf,
    #[arg(long, short, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct InOut {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct BpeTrainArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TARGET_VOCAB)]
    target_vocab: usize,
    /// Defaults to the largest token in the corpus plus one.
    #[arg(long)]
    base_vocab: Option<usize>,
}

#[derive(Debug, Args)]
struct BpeApplyArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long)]
    merges: PathBuf,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long, short)]
    input: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1_000_000)]
    n_trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the error-law grid as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Also train K-means and RPQ models on the synthetic reference corpus.
    #[arg(long)]
    end_to_end: bool,
    /// Write the end-to-end alpha sweep as CSV (needs --end-to-end).
    #[arg(long, requires = "end_to_end")]
    sweep_csv: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    if cli.threads == 0 {
        return Err(Failure::usage("--threads must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| Failure::validation(e.into()))?;
    match cli.command {
        Command::GenSynth(a) => gen_synth(a),
        Command::Train(a) => train(a),
        Command::Encode(a) => encode(a),
        Command::Dedup(a) => dedup_cmd(a),
        Command::BpeTrain(a) => bpe_train(a),
        Command::BpeApply(a) => bpe_apply(a),
        Command::Stats(a) => stats(a),
        Command::VerifyTheory(a) => verify(a),
    }
}

/// Writes through a temporary file in the destination directory and renames
/// it into place, so a failed command never leaves a partial output.
fn write_atomic<F>(path: &Path, write: F) -> Result<(), Failure>
where
    F: FnOnce(&mut BufWriter<&mut NamedTempFile>) -> rpq::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Failure {
        code: EXIT_IO,
        error: anyhow::Error::from(e).context(path.display().to_string()),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
    {
        let mut w = BufWriter::new(&mut tmp);
        write(&mut w).at(path)?;
        w.flush().map_err(io)?;
    }
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn gen_synth(a: GenSynthArgs) -> Result<(), Failure> {
    let spec = SynthSpec::new(a.dim, a.frames, a.modes, a.correlation, a.seed).with_mode_spread(a.mode_spread);
    let m = generate_synthetic::<f32>(&spec)?;
    write_atomic(&a.output, |w| write_features_to(&m, w))
}

fn train(a: TrainArgs) -> Result<(), Failure> {
    let method = Method::from(a.method);
    let n_subspaces = match (method, a.num_subspaces) {
        (Method::Kmeans, None | Some(1)) => 1,
        (Method::Kmeans, Some(_)) => {
            return Err(Failure::usage("--method kmeans uses a single sub-vector"))
        }
        (_, Some(m)) => m,
        (_, None) => return Err(Failure::usage(format!("--method {method} requires --num-subspaces"))),
    };
    match (method, a.alpha) {
        (Method::Rpq, None) => return Err(Failure::usage("--method rpq requires --alpha")),
        (Method::Kmeans | Method::Pq, Some(_)) => {
            return Err(Failure::usage(format!("--alpha only applies to --method rpq, not {method}")))
        }
        _ => {}
    }
    let cfg = QuantizerConfig {
        method,
        n_subspaces,
        k_star: a.clusters,
        alpha: a.alpha,
        seed: a.seed,
        init: a.init.map(InitMethod::from),
        max_iters: a.max_iters,
        rel_tol: a.rel_tol,
    };
    let data = read_features(&a.input).at(&a.input)?;
    let model = cfg.fit(&data)?;
    write_atomic(&a.output, |w| save_model_to(&model, w))
}

fn encode(a: EncodeArgs) -> Result<(), Failure> {
    let model = load_model(&a.model).at(&a.model)?;
    let mut streams = Vec::with_capacity(a.input.len());
    for path in &a.input {
        let data = read_features(path).at(path)?;
        let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        streams.push(encode_batch(&data, &model, &id).at(path)?);
    }
    write_atomic(&a.output, |w| write_token_streams_to(&streams, w))
}

fn read_streams(path: &Path) -> Result<Vec<TokenStream>, Failure> {
    read_token_streams(path).at(path)
}

fn dedup_cmd(a: InOut) -> Result<(), Failure> {
    let out = read_streams(&a.input)?
        .iter()
        .map(dedup)
        .collect::<rpq::Result<Vec<_>>>()
        .at(&a.input)?;
    write_atomic(&a.output, |w| write_token_streams_to(&out, w))
}

fn bpe_train(a: BpeTrainArgs) -> Result<(), Failure> {
    let corpus = read_streams(&a.input)?;
    let base = a.base_vocab.unwrap_or_else(|| {
        corpus
            .iter()
            .flat_map(|s| s.as_slice().iter().copied())
            .max()
            .map_or(0, |m| m as usize + 1)
    });
    let table = train_merges_with_base(&corpus, base, a.target_vocab).at(&a.input)?;
    write_atomic(&a.output, |w| write_merge_table_to(&table, w))
}

fn bpe_apply(a: BpeApplyArgs) -> Result<(), Failure> {
    let table = read_merge_table(&a.merges).at(&a.merges)?;
    let out = read_streams(&a.input)?
        .iter()
        .map(|s| apply_merges(s, &table))
        .collect::<rpq::Result<Vec<_>>>()
        .at(&a.input)?;
    write_atomic(&a.output, |w| write_token_streams_to(&out, w))
}

fn stats(a: StatsArgs) -> Result<(), Failure> {
    let corpus = read_streams(&a.input)?;
    let st = stream_stats(&corpus);
    println!("utterances={} avg_length={:.4} vocab_used={}", corpus.len(), st.avg_length, st.vocab_used);
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<(), Failure> {
    if a.n_trials == 0 {
        return Err(Failure::usage("--n-trials must be at least 1"));
    }
    let cfg = VerifyConfig { n_trials: a.n_trials, seed: a.seed, ..VerifyConfig::default() };
    let outcome = theory::run_checks(&cfg)?;
    let mut checks = outcome.checks;
    let mut sweep = Vec::new();
    if a.end_to_end {
        let e2e = theory::run_end_to_end_checks(a.seed)?;
        checks.extend(e2e.checks);
        sweep = e2e.sweep;
    }
    if let Some(path) = &a.csv {
        let csv = theory::sweep_csv(&outcome.grid);
        write_atomic(path, |w| Ok(w.write_all(csv.as_bytes())?))?;
    }
    if let Some(path) = &a.sweep_csv {
        let csv = theory::alpha_sweep_csv(&sweep);
        write_atomic(path, |w| Ok(w.write_all(csv.as_bytes())?))?;
    }
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        return Err(Failure::validation(anyhow!("{failed} of {} checks failed", checks.len())));
    }
    Ok(())
}

