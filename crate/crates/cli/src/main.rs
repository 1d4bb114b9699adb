//! `semff`: synthetic data, encoder and agent training, fast-forwarding and
//! evaluation from the command line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use semff::agent::Agent;
use semff::config::RunConfig;
use semff::env::{rollout, Dataset, RolloutConfig, SyntheticWorld, VideoEmbeddings};
use semff::eval::{
    overall_performance, parse_targets, summarize, sweep_traces, write_skip_profile, write_sweep_csv, MetricReport,
    Selection,
};
use semff::rl::train_agent;
use semff::vdan::{train_encoder, Corpus, Vdan, Vocabulary};
use semff::{Error, Result};

#[derive(Parser)]
#[command(name = "semff", version, about = "Text-driven semantic fast-forwarding")]
struct Cli {
    /// JSON run configuration; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic caption corpus and train/test video datasets.
    Synth(SynthArgs),
    /// Train the cross-modal encoder on a caption corpus.
    TrainEncoder(TrainEncoderArgs),
    /// Train the fast-forwarding agent with a frozen encoder.
    TrainAgent(TrainAgentArgs),
    /// Run the greedy agent over videos and write selections.
    Fastforward(FastforwardArgs),
    /// Score selections, run a speed-up sweep, or recompute OP.
    Eval(EvalArgs),
    /// Configuration utilities.
    Config {
        #[command(subcommand)]
        action: ConfigAction,
    },
}

#[derive(Subcommand)]
enum ConfigAction {
    /// Print the default configuration as JSON.
    PrintDefaults,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    /// Training videos (default from the config).
    #[arg(long)]
    videos: Option<usize>,
    #[arg(long)]
    test_videos: Option<usize>,
    #[arg(long)]
    corpus_clips: Option<usize>,
}

#[derive(Args)]
struct TrainEncoderArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    /// NDJSON training log (default: next to the checkpoint).
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct TrainAgentArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    encoder: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct FastforwardArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Only this video; all videos otherwise.
    #[arg(long)]
    video: Option<String>,
    #[arg(long)]
    encoder: PathBuf,
    #[arg(long)]
    agent: PathBuf,
    #[arg(long)]
    speedup: usize,
    /// Output directory for `<id>.json` and `<id>.skips.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct EvalArgs {
    #[command(subcommand)]
    op: Option<EvalOp>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Selection JSON files or directories containing them.
    #[arg(long, num_args = 1..)]
    selections: Vec<PathBuf>,
    /// Targets such as `2..20` or `2,4,8`; needs --encoder and --agent.
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long)]
    encoder: Option<PathBuf>,
    #[arg(long)]
    agent: Option<PathBuf>,
    /// Output path prefix; `.json` and `.csv` are appended.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum EvalOp {
    /// Overall performance from F1 (percent), OS and the target.
    Op {
        #[arg(long)]
        f1: f64,
        #[arg(long)]
        os: f64,
        #[arg(long)]
        sstar: f64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FFAGENT_LOG", "info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    match cli.command {
        Command::Config {
            action: ConfigAction::PrintDefaults,
        } => {
            println!("{}", RunConfig::default().to_json());
            Ok(())
        }
        Command::Synth(a) => synth(&config, a),
        Command::TrainEncoder(a) => train_encoder_cmd(&config, a),
        Command::TrainAgent(a) => train_agent_cmd(&config, a),
        Command::Fastforward(a) => fastforward(a),
        Command::Eval(a) => eval(a),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn default_log(out: &Path) -> PathBuf {
    out.with_extension("log.ndjson")
}

struct NdjsonLog {
    path: PathBuf,
    file: fs::File,
}

impl NdjsonLog {
    fn create(path: PathBuf) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            create_dir(dir)?;
        }
        let file = fs::File::create(&path).map_err(|e| io_error(&path, e))?;
        Ok(Self { path, file })
    }

    fn write<T: Serialize>(&mut self, record: &T) -> Result<()> {
        let line = serde_json::to_string(record).expect("log record serializes");
        writeln!(self.file, "{line}").map_err(|e| io_error(&self.path, e))
    }
}

fn synth(config: &RunConfig, a: SynthArgs) -> Result<()> {
    let world = SyntheticWorld::new(config.synthetic.clone())?;
    let clips = a.corpus_clips.unwrap_or(config.synthetic.corpus_clips);
    let train_n = a.videos.unwrap_or(config.splits.train_videos);
    let test_n = a.test_videos.unwrap_or(config.splits.test_videos);
    create_dir(&a.out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let corpus = world.corpus(clips, &mut rng)?;
    corpus.save(&a.out.join("corpus.json"))?;
    for (split, n, offset, prefix) in [("train", train_n, 1, "train"), ("test", test_n, 2, "test")] {
        let dir = a.out.join(split);
        create_dir(&dir)?;
        let videos = world.videos(n, config.seed.wrapping_mul(31).wrapping_add(offset), &format!("{prefix}-"))?;
        let ds = Dataset {
            videos: videos.into_iter().map(|v| v.spec).collect(),
        };
        ds.save(&dir.join("manifest.json"))?;
        let frames: usize = ds.videos.iter().map(|v| v.num_frames()).sum();
        log::info!("{split}: {} videos, {frames} frames", ds.len());
    }
    log::info!("corpus: {} clips in {}", corpus.len(), a.out.join("corpus.json").display());
    Ok(())
}

fn train_encoder_cmd(config: &RunConfig, a: TrainEncoderArgs) -> Result<()> {
    let corpus = Corpus::load(&a.corpus)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vocab = Vocabulary::new(corpus.tokens(), config.encoder.word_dim, &mut rng);
    let mut enc_cfg = config.encoder.clone();
    if let Some(z) = corpus.feature_dim() {
        enc_cfg.feature_dim = z;
        enc_cfg.document_hidden = z;
    }
    let model = Vdan::new(enc_cfg, vocab, &mut rng)?;
    let mut train_cfg = config.encoder_train.clone();
    train_cfg.seed = config.seed;
    if let Some(e) = a.epochs {
        train_cfg.epochs = e;
    }
    let mut log = NdjsonLog::create(a.log.unwrap_or_else(|| default_log(&a.out)))?;
    let mut log_err = None;
    let out = train_encoder(model, &corpus, &train_cfg, |r| {
        if let Err(e) = log.write(r) {
            log_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = log_err {
        return Err(e);
    }
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    out.model.save(&a.out)?;
    log::info!(
        "best epoch {} validation loss {:.6}; saved {}",
        out.best_epoch,
        out.best_val_loss,
        a.out.display()
    );
    Ok(())
}

fn train_agent_cmd(config: &RunConfig, a: TrainAgentArgs) -> Result<()> {
    let ds = Dataset::load(&a.dataset)?;
    let encoder = Vdan::load(&a.encoder)?;
    let mut agent_cfg = config.agent.clone();
    agent_cfg.embed_dim = encoder.embed_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let agent = Agent::new(agent_cfg, &mut rng)?;
    let mut train_cfg = config.agent_train.clone();
    train_cfg.seed = config.seed;
    if let Some(e) = a.epochs {
        train_cfg.epochs = e;
    }
    let mut log = NdjsonLog::create(a.log.unwrap_or_else(|| default_log(&a.out)))?;
    let mut log_err = None;
    let out = train_agent(agent, &ds.videos, &encoder, &train_cfg, |r| {
        if let Err(e) = log.write(r) {
            log_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = log_err {
        return Err(e);
    }
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    out.agent.save(&a.out)?;
    log::info!("saved {}", a.out.display());
    Ok(())
}

fn fastforward(a: FastforwardArgs) -> Result<()> {
    let ds = Dataset::load(&a.dataset)?;
    let encoder = Vdan::load(&a.encoder)?;
    let agent = Agent::load(&a.agent)?;
    if a.speedup == 0 || a.speedup > agent.config.nu_max {
        return Err(Error::Config(format!(
            "--speedup {} outside [1, {}]",
            a.speedup, agent.config.nu_max
        )));
    }
    let videos: Vec<_> = match &a.video {
        Some(id) => vec![ds
            .get(id)
            .ok_or_else(|| Error::Validation(format!("no video with id `{id}` in {}", a.dataset.display())))?],
        None => ds.videos.iter().collect(),
    };
    create_dir(&a.out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for v in videos {
        let cache = VideoEmbeddings::new(v, &encoder)?;
        let trace = rollout(&cache, &agent, &RolloutConfig::greedy(a.speedup), &mut rng)?;
        let sel = Selection::from_trace(&trace);
        sel.save(&a.out.join(format!("{}.json", v.id)))?;
        write_skip_profile(&a.out.join(format!("{}.skips.csv", v.id)), &trace)?;
        log::info!("{}: {} of {} frames, OS {:.3}", v.id, trace.len(), v.num_frames(), sel.os);
    }
    Ok(())
}

fn collect_selections(paths: &[PathBuf]) -> Result<Vec<Selection>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| io_error(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|q| q.extension().is_some_and(|x| x == "json"))
                .collect();
            entries.sort();
            files.extend(entries);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err(Error::Empty("selection files"));
    }
    files.iter().map(|f| Selection::load(f)).collect()
}

fn require<'a>(v: &'a Option<PathBuf>, flag: &str) -> Result<&'a PathBuf> {
    v.as_ref().ok_or_else(|| Error::Config(format!("{flag} is required")))
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    PathBuf::from(format!("{}.{ext}", prefix.display()))
}

fn write_report(report: &MetricReport, prefix: &Path) -> Result<()> {
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    report.write_json(&with_suffix(prefix, "json"))?;
    report.write_csv(&with_suffix(prefix, "csv"))
}

fn eval(a: EvalArgs) -> Result<()> {
    if let Some(EvalOp::Op { f1, os, sstar }) = a.op {
        if !(sstar > 0.0) {
            return Err(Error::Config("--sstar must be positive".into()));
        }
        println!("{:.2}", 100.0 * overall_performance(f1 / 100.0, os, sstar));
        return Ok(());
    }
    let ds = Dataset::load(require(&a.dataset, "--dataset")?)?;
    let out = require(&a.out, "--out")?;
    if let Some(spec) = &a.sweep {
        let targets = parse_targets(spec)?;
        let encoder = Vdan::load(require(&a.encoder, "--encoder")?)?;
        let agent = Agent::load(require(&a.agent, "--agent")?)?;
        let caches: Vec<VideoEmbeddings<'_>> = ds
            .videos
            .iter()
            .map(|v| VideoEmbeddings::new(v, &encoder))
            .collect::<Result<_>>()?;
        let traces = sweep_traces(&caches, &agent, &targets)?;
        for per_target in &traces {
            let sels: Vec<Selection> = per_target.iter().map(Selection::from_trace).collect();
            let report = MetricReport::evaluate(&sels, &ds.videos)?;
            let s = per_target[0].target;
            write_report(&report, &with_suffix(out, &format!("s{s:02}")))?;
        }
        let rows = summarize(&traces);
        for r in &rows {
            log::info!("S* {:>2}: mean error {:+.3}, mean |error| {:.3}", r.s_star, r.mean_error, r.mean_abs_error);
        }
        return write_sweep_csv(&with_suffix(out, "sweep.csv"), &rows);
    }
    let sels = collect_selections(&a.selections)?;
    let report = MetricReport::evaluate(&sels, &ds.videos)?;
    write_report(&report, out)?;
    let m = &report.aggregate;
    log::info!(
        "{} videos: P {:.4} R {:.4} F1 {:.4} OS {:.3} OP {:.4}",
        report.rows.len(),
        m.precision,
        m.recall,
        m.f1,
        m.os,
        m.op
    );
    Ok(())
}
