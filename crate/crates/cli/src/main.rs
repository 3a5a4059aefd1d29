use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use uwnet_cli::{bench, enhance, eval, train, CliError, Format, Outcome, RunConfig};
use uwnet_core::bench::TimingConfig;

#[derive(Parser)]
#[command(name = "uwnet", version, about = "Shallow underwater image enhancement: train, enhance, evaluate, benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train from a seeded initialisation on a paired dataset (raw/ and ref/, or manifest.json).
    Train(Common),
    /// Enhance one image or every image in a directory.
    Enhance(Common),
    /// Score enhanced images against references (PSNR, SSIM, UIQM).
    Eval(Common),
    /// Parameter count, per-image latency and compression/speed-up against baselines.
    Bench(Common),
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct Common {
    /// Dataset root (train/eval), input file or directory (enhance), timing images (bench).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Weight file to read; for train, where to write it (default <out>/weights.suwn).
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    epochs: u32,
    #[arg(long, default_value_t = 2e-4)]
    lr: f64,
    #[arg(long, default_value_t = 1)]
    batch: usize,
    #[arg(long, default_value_t = 0.2)]
    dropout: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Feature-extractor manifest; weights are read from the same path with a .suwn extension.
    /// Without it the perceptual term uses the identity extractor.
    #[arg(long)]
    extractor: Option<PathBuf>,
    /// Square size images are resized to for training, and of synthetic bench inputs.
    #[arg(long = "size", default_value_t = 256)]
    image_size: usize,
    /// Number of training pairs (default: all pairs not used for validation).
    #[arg(long)]
    train_pairs: Option<usize>,
    #[arg(long, default_value_t = 0)]
    val_pairs: usize,
    /// Directory of enhanced images to score (eval).
    #[arg(long)]
    enhanced: Option<PathBuf>,
    /// Directory of reference images (eval).
    #[arg(long)]
    reference: Option<PathBuf>,
    /// JSON list of {"name", "alpha", "beta_seconds"} rows (bench; default: published baselines).
    #[arg(long)]
    baselines: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    warmup_runs: usize,
    #[arg(long, default_value_t = 30)]
    timed_runs: usize,
    #[arg(long, default_value_t = 1)]
    timing_images: usize,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

impl Common {
    fn into_config(self, command: &str) -> RunConfig {
        RunConfig {
            command: command.to_owned(),
            data: self.data,
            weights: self.weights,
            out: self.out,
            epochs: self.epochs,
            lr: self.lr,
            batch: self.batch,
            dropout: self.dropout,
            seed: self.seed,
            extractor: self.extractor,
            image_size: self.image_size,
            train_pairs: self.train_pairs,
            val_pairs: self.val_pairs,
            enhanced: self.enhanced,
            reference: self.reference,
            baselines: self.baselines,
            timing: TimingConfig {
                warmup_runs: self.warmup_runs,
                timed_runs: self.timed_runs,
            },
            timing_images: self.timing_images,
            format: self.format,
        }
    }
}

fn emit<T: Serialize>(format: Format, report: &T, table: impl FnOnce() -> String) -> Result<(), CliError> {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(report).map_err(CliError::failed)?),
        Format::Table => print!("{}", table()),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Train(c) => {
            let config = c.into_config("train");
            let r = train::run(&config)?;
            emit(config.format, &r, || r.render())?;
            Ok(Outcome::Complete)
        }
        Command::Enhance(c) => {
            let config = c.into_config("enhance");
            let r = enhance::run(&config)?;
            emit(config.format, &r, || r.render())?;
            Ok(r.outcome())
        }
        Command::Eval(c) => {
            let config = c.into_config("eval");
            let r = eval::run(&config)?;
            emit(config.format, &r, || r.render())?;
            Ok(r.outcome())
        }
        Command::Bench(c) => {
            let config = c.into_config("bench");
            let r = bench::run(&config)?;
            emit(config.format, &r, || r.render())?;
            Ok(Outcome::Complete)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
