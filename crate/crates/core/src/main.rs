use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use qnlp::circuit::AnsatzConfig;
use qnlp::cli::{self, NoiseOverrides, Profile, RunConfig, Stage};
use qnlp::dataset::default_split_sizes;
use qnlp::diagram::RenderFormat;
use qnlp::Exec;

#[derive(Parser)]
#[command(name = "qnlp", version, about = "Sentence classification with pregroup grammar and quantum circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct NoiseArgs {
    /// Single-qubit depolarizing probability.
    #[arg(long)]
    noise_p1: Option<f64>,
    /// Two-qubit depolarizing probability.
    #[arg(long)]
    noise_p2: Option<f64>,
    /// Readout bit-flip probability.
    #[arg(long)]
    noise_readout: Option<f64>,
    #[arg(long)]
    shots: Option<usize>,
}

impl NoiseArgs {
    fn overrides(&self) -> NoiseOverrides {
        NoiseOverrides { p1: self.noise_p1, p2: self.noise_p2, readout: self.noise_readout, shots: self.shots }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled dataset and its train/dev/test split.
    GenData {
        #[arg(long, default_value_t = cli::DEFAULT_COUNT)]
        count: usize,
        /// Split sizes as TRAIN/DEV/TEST (default 70/30/30 scaled to --count).
        #[arg(long)]
        split: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print types, diagrams or circuits for one sentence.
    Inspect {
        sentence: String,
        /// Comma-separated stages: types, diagram, rewritten, circuit.
        #[arg(long, default_value = "types,diagram,rewritten,circuit")]
        stage: String,
        /// Diagram output format: text or dot.
        #[arg(long, default_value = "text")]
        format: String,
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Train one profile and write metrics, parameters and a summary.
    Run {
        #[arg(long, value_parser = parse_profile)]
        profile: Profile,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Epochs (classical) or SPSA iterations (quantum).
        #[arg(long)]
        iterations: Option<usize>,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Dataset directory or file; defaults to the built-in generated set.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Run on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Score saved parameters on every split.
    Eval {
        /// A params.txt written by `run`.
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    s.parse().map_err(|e: qnlp::Error| e.to_string())
}

fn parse_split(s: &str) -> anyhow::Result<[usize; 3]> {
    let parts: Vec<usize> = s.split('/').map(str::parse).collect::<Result<_, _>>().context("split must be TRAIN/DEV/TEST")?;
    <[usize; 3]>::try_from(parts).map_err(|_| anyhow::anyhow!("split must have three parts"))
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::GenData { count, split, seed, lexicon, out } => {
            let lex = cli::load_lexicon(lexicon.as_deref())?;
            let sizes = match split {
                Some(s) => parse_split(&s)?,
                None => default_split_sizes(count),
            };
            let ds = cli::gen_data(&lex, count, sizes, seed, &out)?;
            println!("wrote {} sentences to {}", ds.len(), out.display());
        }
        Command::Inspect { sentence, stage, format, lexicon } => {
            let lex = cli::load_lexicon(lexicon.as_deref())?;
            let stages = stage.split(',').map(|s| s.trim().parse::<Stage>()).collect::<Result<Vec<_>, _>>()?;
            let format = match format.as_str() {
                "text" => RenderFormat::Text,
                "dot" => RenderFormat::Dot,
                other => anyhow::bail!("unknown format {other:?}"),
            };
            print!("{}", cli::inspect(&sentence, &lex, &stages, format, &AnsatzConfig::default())?);
        }
        Command::Run { profile, seed, iterations, noise, out, lexicon, data, sequential } => {
            let cfg = RunConfig {
                profile,
                data,
                lexicon,
                seed,
                iterations,
                noise: noise.overrides(),
                out,
                exec: if sequential { Exec::Sequential } else { Exec::Parallel },
            };
            print!("{}", cli::run(&cfg)?.summary);
        }
        Command::Eval { params, seed, noise, lexicon, data } => {
            print!("{}", cli::eval(&params, data.as_deref(), lexicon.as_deref(), &noise.overrides(), seed)?);
        }
    }
    Ok(())
}
