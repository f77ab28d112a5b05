use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod manifest;
mod run;

#[derive(Parser)]
#[command(name = "psgan", version, about = "Synthesize pseudo-radio-signals from a recorded I/Q prototype")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
pub struct Global {
    /// Seed for every random stream (overrides the config file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Training config as key = value lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for outputs.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// No progress messages on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic prototype recording.
    Protogen(ProtogenArgs),
    /// Train the I and Q models on one prototype frame.
    Train(TrainArgs),
    /// Synthesize a pseudo-radio-signal from trained models.
    Generate(GenerateArgs),
    /// Compare generated output with the prototype (exit 0 pass, 1 fail, 2 error).
    Validate(ValidateArgs),
    /// Print statistics of a recording.
    Inspect(InspectArgs),
}

#[derive(Args, Debug)]
pub struct ProtogenArgs {
    #[arg(long, default_value = "qpsk-burst")]
    pub preset: String,
    /// Output payload path; the sidecar and manifest go next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    #[arg(long)]
    pub duty: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    /// n_fft 2048, 1000 epochs, 128 examples per epoch.
    Full,
    /// n_fft 256, 300 epochs; runs in minutes on one core.
    Desk,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sweep {
    Regularization,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub prototype: PathBuf,
    #[arg(long, value_enum, default_value = "full")]
    pub profile: Profile,
    #[arg(long)]
    pub nfft: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub frames: usize,
    /// Frame used for training.
    #[arg(long, default_value_t = 0)]
    pub frame: usize,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Latent SNR range in dB as lo:hi.
    #[arg(long, allow_hyphen_values = true)]
    pub snr_range: Option<String>,
    #[arg(long)]
    pub examples: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    /// Record per-epoch wall time in the logs.
    #[arg(long)]
    pub timing: bool,
    /// Retrain under each regularization setting and write sweep.csv.
    #[arg(long, value_enum)]
    pub sweep: Option<Sweep>,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, default_value = "run")]
    pub model_dir: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Packets to generate (default 20 x packets per frame).
    #[arg(long)]
    pub ngen: Option<usize>,
    #[arg(long, default_value_t = 129)]
    pub rc_length: usize,
    #[arg(long, default_value_t = 0.25)]
    pub rolloff: f64,
    /// Latent SNR (default: middle of the training range).
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    /// Frame whose power rescales the output: an index, "random" or "per-packet".
    #[arg(long, default_value = "random")]
    pub frame: String,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(long)]
    pub prototype: PathBuf,
    #[arg(long, default_value = "run")]
    pub model_dir: PathBuf,
    /// Compare this recording instead of fresh generator output.
    #[arg(long)]
    pub generated: Option<PathBuf>,
    #[arg(long)]
    pub ngen: Option<usize>,
    /// Prototype frame to compare against (default: the training frame).
    #[arg(long)]
    pub frame: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
}

#[derive(Args, Debug)]
pub struct InspectArgs {
    pub path: PathBuf,
    /// Also report the framing at this packet length.
    #[arg(long)]
    pub nfft: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub frames: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    let result = match &cli.command {
        Command::Protogen(a) => commands::protogen(g, a),
        Command::Train(a) => commands::train(g, a),
        Command::Generate(a) => commands::generate(g, a),
        Command::Validate(a) => commands::validate(g, a),
        Command::Inspect(a) => commands::inspect(g, a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<psgan_core::Error>() {
                Some(psgan_core::Error::Diverged { .. }) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
