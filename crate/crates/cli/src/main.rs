use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use persona_probe::annotate::fixture::{parse_fixture, tile_tokens, BUILTIN_FIXTURE};
use persona_probe::corpus::{save_corpus, write_tokens, Nationality};
use persona_probe::extract::CalibrationSplit;
use persona_probe::par;
use persona_probe::pipeline::{run_pipeline, write_json, RunConfig, Session, Stage, StageOutcome};
use persona_probe::probe::Target;
use persona_probe::synth::{generate, SynthConfig};
use persona_probe::{Error, ErrorKind, Result};

#[derive(Parser)]
#[command(name = "persona-probe", version, about = "Layer-wise probing of persona attributes in hidden states")]
struct Cli {
    /// Worker threads for the data-parallel stages (0 = all cores).
    #[arg(long, global = true, env = "PERSONA_PROBE_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with a planted signal.
    Synth(SynthArgs),
    /// Cross-validate probes at every layer and fit the best-layer probe.
    Sweep(RunArgs),
    /// Shuffled-label baseline, selectivity, surface-text skyline, transfer.
    Controls(RunArgs),
    /// Select high-signal windows and single tokens.
    Extract(RunArgs),
    /// Map dependency parses to structural, stance and domain labels.
    Annotate(RunArgs),
    /// Run the statistical battery.
    Stats(RunArgs),
    /// Assemble report tables from the stage artifacts.
    Report(RunArgs),
    /// Run every stage in order.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus directory (meta.jsonl and .actd files).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Output directory for all artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// tokens.jsonl path (default: inside the corpus directory).
    #[arg(long)]
    tokens: Option<PathBuf>,
    /// Directory of lexicon files replacing the builtin lists.
    #[arg(long)]
    lexicons: Option<PathBuf>,
    #[arg(long)]
    run_id: Option<String>,
    /// Attribute for extraction and statistics: nationality, medium, role, cohort6.
    #[arg(long, value_parser = parse_enum::<Target>)]
    target: Option<Target>,
    /// Attributes shown in the probe table, comma-separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_enum::<Target>)]
    report_targets: Option<Vec<Target>>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    permutations: Option<usize>,
    #[arg(long)]
    k_folds: Option<usize>,
    /// Inverse regularisation strength of the probes.
    #[arg(long)]
    inverse_reg: Option<f64>,
    /// Layers sampled for extraction, comma-separated.
    #[arg(long, value_delimiter = ',')]
    layers: Option<Vec<usize>>,
    #[arg(long)]
    reference_layer: Option<usize>,
    /// Examples used to calibrate thresholds: train or all.
    #[arg(long, value_parser = parse_enum::<CalibrationSplit>)]
    calibrate_on: Option<CalibrationSplit>,
    /// Apply Yates' correction to 2x2 chi-square tests.
    #[arg(long)]
    yates: bool,
    /// Window stance flags from any token in the window.
    #[arg(long)]
    window_stance: bool,
    /// Nationality class in the Chinese-persona role: A or B.
    #[arg(long, value_parser = parse_enum::<Nationality>)]
    chinese_class: Option<Nationality>,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Stages to skip, comma-separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_enum::<Stage>)]
    skip: Vec<Stage>,
}

#[derive(Args)]
struct SynthArgs {
    /// JSON synthesis configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus directory to write.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    examples: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    tokens_min: Option<usize>,
    #[arg(long)]
    tokens_max: Option<usize>,
    /// Plant the class signal at this layer (with --strength).
    #[arg(long)]
    plant_layer: Option<usize>,
    #[arg(long, default_value_t = 4.0)]
    strength: f64,
    /// Fraction of token rows carrying the signal.
    #[arg(long)]
    sparsity: Option<f64>,
    #[arg(long)]
    noise_sd: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sentence fixture tiled into tokens.jsonl (default: the bundled one).
    #[arg(long)]
    fixture: Option<PathBuf>,
    /// Do not write tokens.jsonl.
    #[arg(long)]
    no_tokens: bool,
}

/// Parse a value through its serde name, case-insensitively.
fn parse_enum<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    for cand in [s.to_string(), s.to_uppercase(), s.to_lowercase()] {
        if let Ok(v) = serde_json::from_value(serde_json::Value::String(cand)) {
            return Ok(v);
        }
    }
    Err(format!("unrecognised value {s:?}"))
}

fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(p) = path else { return Ok(T::default()) };
    let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
}

fn run_config(a: &RunArgs) -> Result<RunConfig> {
    let mut c = match &a.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let s = &mut c.settings;
    if let Some(v) = &a.corpus {
        c.corpus_dir = v.clone();
    }
    if let Some(v) = &a.out {
        c.out_dir = v.clone();
    }
    if let Some(v) = &a.tokens {
        c.tokens = Some(v.clone());
    }
    if let Some(v) = &a.lexicons {
        c.lexicon_dir = Some(v.clone());
    }
    if let Some(v) = &a.run_id {
        c.run_id = Some(v.clone());
    }
    if let Some(v) = a.target {
        s.target = v;
    }
    if let Some(v) = &a.report_targets {
        s.report_targets = v.clone();
    }
    if let Some(v) = a.seed {
        s.seed = v;
    }
    if let Some(v) = a.permutations {
        s.n_permutations = v;
    }
    if let Some(v) = a.k_folds {
        s.probe.k_folds = v;
    }
    if let Some(v) = a.inverse_reg {
        s.probe.inverse_reg_c = v;
    }
    if let Some(v) = &a.layers {
        s.extraction.sampled_layers = v.clone();
    }
    if let Some(v) = a.reference_layer {
        s.extraction.reference_layer = v;
    }
    if let Some(v) = a.calibrate_on {
        s.extraction.calibrate_on = v;
    }
    if a.yates {
        s.stats.yates = true;
    }
    if a.window_stance {
        s.stats.window_stance = true;
    }
    if let Some(v) = a.chinese_class {
        s.stats.chinese_class = v;
    }
    if let Some(v) = a.alpha {
        s.stats.alpha = v;
    }
    c.validate()?;
    Ok(c)
}

fn synth(a: &SynthArgs) -> Result<()> {
    let mut c: SynthConfig = read_config(a.config.as_deref())?;
    if let Some(v) = a.examples {
        c.n_examples = v;
    }
    if let Some(v) = a.layers {
        c.n_layers = v;
        c.strength_profile.resize(v, 0.0);
    }
    if let Some(v) = a.dim {
        c.hidden_dim = v;
    }
    if let Some(v) = a.tokens_min {
        c.tokens_min = v;
    }
    if let Some(v) = a.tokens_max {
        c.tokens_max = v;
    }
    if let Some(l) = a.plant_layer {
        if l >= c.n_layers {
            return Err(Error::Config(format!("plant layer {l} out of range for {} layers", c.n_layers)));
        }
        c.strength_profile[l] = a.strength;
    }
    if let Some(v) = a.sparsity {
        c.token_sparsity = v;
    }
    if let Some(v) = a.noise_sd {
        c.noise_sd = v;
    }
    if let Some(v) = a.seed {
        c.seed = v;
    }
    c.validate()?;
    let (store, meta, plant) = generate(&c)?;
    save_corpus(&a.out, &store, &meta)?;
    write_json(&a.out.join("plant.json"), &plant)?;
    write_json(&a.out.join("synth_config.json"), &c)?;
    if !a.no_tokens {
        let text = match &a.fixture {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
            None => BUILTIN_FIXTURE.to_string(),
        };
        let sentences = parse_fixture(&text)?;
        write_tokens(&a.out.join("tokens.jsonl"), &tile_tokens(&meta, &sentences, c.seed))?;
    }
    log::info!("wrote {} examples to {}", meta.len(), a.out.display());
    Ok(())
}

fn stage(a: &RunArgs, stage: Stage) -> Result<()> {
    let session = Session::new(run_config(a)?)?;
    match session.run_stage(stage)? {
        StageOutcome::Done => {}
        StageOutcome::Skipped(why) => log::warn!("{}: skipped ({why})", stage.name()),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    par::init_workers(cli.threads);
    match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Sweep(a) => stage(a, Stage::Sweep),
        Command::Controls(a) => stage(a, Stage::Controls),
        Command::Extract(a) => stage(a, Stage::Extract),
        Command::Annotate(a) => stage(a, Stage::Annotate),
        Command::Stats(a) => stage(a, Stage::Stats),
        Command::Report(a) => stage(a, Stage::Report),
        Command::Pipeline(a) => {
            let report = run_pipeline(run_config(&a.run)?, &a.skip)?;
            println!("{}", report.run_id);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::Stage => 4,
            })
        }
    }
}
