use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

mod commands;
mod config;
mod spec;

use config::Config;

#[derive(Parser, Debug)]
#[command(name = "birkhoff", version, about = "Pressure, spectra and Gibbs measures for weighted Birkhoff averages")]
struct Cli {
    /// JSON file with default values for any long flag
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write to this file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the first weights of a sequence
    Weights(WeightsArgs),
    /// Pressure curve on a λ grid
    Pressure(PressureArgs),
    /// Multifractal spectrum on an α grid
    Spectrum(SpectrumArgs),
    /// Sample the Markov Gibbs measure of the xy potential
    Gibbs(GibbsArgs),
    /// Return-word decomposition of a sequence
    Returnwords(ReturnWordsArgs),
    /// Run the oracle checks
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct WeightsArgs {
    /// Weight spec, e.g. moebius, constant:1, subst:thue-morse:0=-1,1=1
    #[arg(long)]
    pub weights: Option<String>,
    /// moebius | squarefree | constant | iid | rotation | subst | file
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub value: Option<f64>,
    /// Substitution JSON (subst) or value list (file)
    #[arg(long)]
    pub file: Option<String>,
    /// Letter values for subst, e.g. "0=-1,1=1"
    #[arg(long, allow_hyphen_values = true)]
    pub map: Option<String>,
    /// Value frequencies for iid and rotation, e.g. "-1=0.5,1=0.5"
    #[arg(long, allow_hyphen_values = true)]
    pub freqs: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of weights
    #[arg(long)]
    pub n: Option<usize>,
    /// First index
    #[arg(long)]
    pub start: Option<usize>,
}

#[derive(Args, Debug)]
pub struct GridArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_max: Option<f64>,
    #[arg(long)]
    pub lambda_steps: Option<usize>,
}

#[derive(Args, Debug)]
pub struct PressureArgs {
    #[arg(long)]
    pub weights: Option<String>,
    /// xy, affine:a,b,c or a potential JSON file
    #[arg(long)]
    pub potential: Option<String>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Horizon
    #[arg(long)]
    pub n: Option<usize>,
    /// Closed form from the weight frequencies (xy potential only)
    #[arg(long)]
    pub closed_form: bool,
    /// Return-word estimate over the prefix of this length
    #[arg(long)]
    pub return_word: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long, conflicts_with = "numeric")]
    pub closed_form: bool,
    /// Legendre transform of a finite-n pressure curve
    #[arg(long)]
    pub numeric: bool,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_max: Option<f64>,
    #[arg(long)]
    pub alpha_steps: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Args, Debug)]
pub struct GibbsArgs {
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Path length N
    #[arg(long)]
    pub len: Option<usize>,
    /// Number of paths K
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Depths for the local dimension of path 0, e.g. 10,100,1000
    #[arg(long, value_delimiter = ',')]
    pub depths: Option<Vec<usize>>,
}

#[derive(Args, Debug)]
pub struct ReturnWordsArgs {
    /// thue-morse, fibonacci or a substitution JSON file; letters are the symbols
    #[arg(long, conflicts_with = "weights")]
    pub subst: Option<String>,
    /// Weight spec; weight values are the symbols
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long)]
    pub prefix_len: Option<usize>,
    /// Explicit prefix in the substitution's letters (must be a prefix)
    #[arg(long, conflicts_with = "prefix_len")]
    pub prefix: Option<String>,
    /// Horizon
    #[arg(long)]
    pub n: Option<usize>,
    /// Also report the return-word pressure at this λ (with --weights)
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub potential: Option<String>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// partition | fenchel-young | duality | gibbs | thue-morse
    #[arg(long)]
    pub only: Option<String>,
    /// Potential JSON with a "reference" list of known log Z values
    #[arg(long)]
    pub potential: Option<String>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub const USAGE: u8 = 1;
    pub const RANGE: u8 = 2;
    pub const VERIFY: u8 = 3;

    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: Self::USAGE,
            message: message.into(),
        }
    }
}

impl From<birkhoff::Error> for CliError {
    fn from(e: birkhoff::Error) -> Self {
        Self {
            code: if e.is_range_error() { Self::RANGE } else { Self::USAGE },
            message: e.to_string(),
        }
    }
}

pub struct Ctx {
    pub cfg: Config,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl Ctx {
    pub fn emit(&self, text: &str) -> Result<(), CliError> {
        match &self.out {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display()))),
            None => {
                use std::io::Write;
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(text.as_bytes())
                    .and_then(|_| stdout.flush())
                    .map_err(|e| CliError::usage(format!("cannot write to stdout: {e}")))
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let ctx = Ctx {
        format: cli.format.or(cfg.format).unwrap_or(Format::Csv),
        out: cli.out.or_else(|| cfg.out.clone()),
        cfg,
    };
    match cli.command {
        Command::Weights(a) => commands::weights(&ctx, a),
        Command::Pressure(a) => commands::pressure(&ctx, a),
        Command::Spectrum(a) => commands::spectrum(&ctx, a),
        Command::Gibbs(a) => commands::gibbs(&ctx, a),
        Command::Returnwords(a) => commands::returnwords(&ctx, a),
        Command::Verify(a) => commands::verify(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { CliError::USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
