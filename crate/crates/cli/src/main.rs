//! `mrivw`: causal-effect estimation from summarized genetic association
//! data, with a Monte Carlo simulation engine for studying estimator
//! behavior.
//!
//! Exit codes: 0 on success, 1 for input problems (unreadable or malformed
//! data, unknown variant), 2 for numeric problems (null instrument,
//! non-positive variance, degenerate design).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mrivw_cli::plot::{render_plot, PlotKind};
use mrivw_cli::report::{
    analysis_report, leave_one_out, sensitivity, OutputFormat, DEFAULT_THETA_GRID,
};
use mrivw_core::meta::PoolingModel;
use mrivw_core::simulate::{run_grid, write_grid_csv, Scenario};
use mrivw_core::summary::{bundled_menopause_dataset, load_dataset, SummaryDataset};
use mrivw_core::Error;

#[derive(Parser)]
#[command(
    name = "mrivw",
    version,
    about = "Inverse-variance weighted causal-effect estimation from summarized genetic association data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run all six weight/model combinations on a dataset.
    Analyze(AnalyzeArgs),
    /// Re-run the analysis with one variant removed.
    LeaveOneOut(LeaveOneOutArgs),
    /// Sweep the correlation parameter of the second-order weights.
    Sensitivity(SensitivityArgs),
    /// Run Monte Carlo simulation cells and write a results CSV.
    Simulate(SimulateArgs),
    /// Emit an SVG plot of a dataset.
    Plot(PlotArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Dataset CSV path, or "bundled" for the built-in 47-variant example.
    #[arg(long, default_value = "bundled")]
    input: String,
    /// Write to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Table,
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> OutputFormat {
        match f {
            FormatArg::Table => OutputFormat::Table,
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value_t = FormatArg::Table)]
    format: FormatArg,
}

#[derive(Args)]
struct LeaveOneOutArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Variant id to remove.
    variant: String,
    #[arg(long, value_enum, default_value_t = FormatArg::Table)]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Fixed,
    Additive,
    Multiplicative,
}

impl From<ModelArg> for PoolingModel {
    fn from(m: ModelArg) -> PoolingModel {
        match m {
            ModelArg::Fixed => PoolingModel::Fixed,
            ModelArg::Additive => PoolingModel::AdditiveRandom,
            ModelArg::Multiplicative => PoolingModel::MultiplicativeRandom,
        }
    }
}

#[derive(Args)]
struct SensitivityArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Correlation values to evaluate, strictly increasing, each |theta| <= 1.
    #[arg(long = "theta", value_delimiter = ',', num_args = 1..)]
    thetas: Option<Vec<f64>>,
    /// Pooling models to include (default: all three).
    #[arg(long = "model", value_enum, num_args = 1..)]
    models: Option<Vec<ModelArg>>,
    #[arg(long, value_enum, default_value_t = FormatArg::Table)]
    format: FormatArg,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario numbers 1-7 (repeatable).
    #[arg(long = "scenario", num_args = 1..)]
    scenarios: Option<Vec<u32>>,
    /// Mean per-allele instrument strengths (repeatable).
    #[arg(long = "alpha", num_args = 1..)]
    alphas: Option<Vec<f64>>,
    /// Causal effect values (repeatable; crossed with --beta-u).
    #[arg(long = "beta-x", num_args = 1.., allow_negative_numbers = true)]
    betas_x: Option<Vec<f64>>,
    /// Confounder effect values (repeatable; crossed with --beta-x).
    #[arg(long = "beta-u", num_args = 1.., allow_negative_numbers = true)]
    betas_u: Option<Vec<f64>>,
    /// Preset grid reproducing a published table layout.
    #[arg(long, value_enum, conflicts_with_all = ["scenarios", "alphas", "betas_x", "betas_u"])]
    table: Option<TablePreset>,
    /// Replications per cell.
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    /// Random seed (MRIVW_SEED is used when the flag is absent).
    #[arg(long, env = "MRIVW_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker threads for the simulator (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Write the results CSV here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Published grid layouts: one-sample (2), two-sample (3), heavy-tailed
/// pleiotropy (4), directional pleiotropy (a6).
#[derive(Clone, Copy, ValueEnum)]
enum TablePreset {
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
    #[value(name = "4")]
    Four,
    #[value(name = "a6")]
    A6,
}

impl TablePreset {
    fn scenarios(self) -> Vec<Scenario> {
        match self {
            TablePreset::Two => vec![Scenario::S1, Scenario::S2],
            TablePreset::Three => vec![Scenario::S3, Scenario::S4],
            TablePreset::Four => vec![Scenario::S5],
            TablePreset::A6 => vec![Scenario::S6, Scenario::S7],
        }
    }

    /// The heavy-tailed-outlier table only reports the null causal effect.
    fn effect_settings(self) -> Vec<(f64, f64)> {
        match self {
            TablePreset::Four => vec![(0.0, 1.0), (0.0, -1.0)],
            _ => cross(&PRESET_BETAS_X, &PRESET_BETAS_U),
        }
    }
}

const PRESET_ALPHAS: [f64; 4] = [0.03, 0.05, 0.08, 0.10];
const PRESET_BETAS_X: [f64; 2] = [0.0, 0.2];
const PRESET_BETAS_U: [f64; 2] = [1.0, -1.0];

#[derive(Args)]
struct PlotArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Plot kind.
    #[arg(value_enum)]
    kind: PlotKindArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotKindArg {
    Scatter,
    Weights,
}

fn load_input(input: &str) -> Result<SummaryDataset, Error> {
    if input == "bundled" {
        Ok(bundled_menopause_dataset())
    } else {
        load_dataset(Path::new(input))
    }
}

fn open_output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    match path {
        Some(p) => Ok(Box::new(BufWriter::new(File::create(p)?))),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

/// Distinguishes bad input (exit 1) from numeric failure (exit 2).
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(_)
        | Error::Csv(_)
        | Error::MissingColumn(_)
        | Error::ParseNumber { .. }
        | Error::NonPositiveStandardError { .. }
        | Error::NonFinite { .. }
        | Error::DuplicateId(_)
        | Error::EmptyDataset
        | Error::UnknownVariant(_)
        | Error::InvalidArgument(_) => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Analyze(args) => {
            let dataset = load_input(&args.input.input)?;
            let report = analysis_report(&dataset)?;
            let mut out = open_output(&args.input.output)?;
            report.write(args.format.into(), &mut out)?;
        }
        Command::LeaveOneOut(args) => {
            let dataset = load_input(&args.input.input)?;
            let report = leave_one_out(&dataset, &args.variant)?;
            let mut out = open_output(&args.input.output)?;
            report.write(args.format.into(), &mut out)?;
        }
        Command::Sensitivity(args) => {
            let dataset = load_input(&args.input.input)?;
            let thetas = args.thetas.unwrap_or_else(|| DEFAULT_THETA_GRID.to_vec());
            let models: Vec<PoolingModel> = match args.models {
                Some(models) => models.into_iter().map(PoolingModel::from).collect(),
                None => vec![
                    PoolingModel::Fixed,
                    PoolingModel::AdditiveRandom,
                    PoolingModel::MultiplicativeRandom,
                ],
            };
            let report = sensitivity(&dataset, &thetas, &models)?;
            let mut out = open_output(&args.input.output)?;
            report.write(args.format.into(), &mut out)?;
        }
        Command::Simulate(args) => {
            let (scenarios, alphas, effect_settings) = if let Some(preset) = args.table {
                (
                    preset.scenarios(),
                    PRESET_ALPHAS.to_vec(),
                    preset.effect_settings(),
                )
            } else {
                let scenarios = args
                    .scenarios
                    .unwrap_or_else(|| vec![1])
                    .into_iter()
                    .map(|n| {
                        Scenario::from_number(n)
                            .ok_or_else(|| Error::InvalidArgument(format!("unknown scenario {n}")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let alphas = args.alphas.unwrap_or_else(|| PRESET_ALPHAS.to_vec());
                let bx = args.betas_x.unwrap_or_else(|| vec![0.0]);
                let bu = args.betas_u.unwrap_or_else(|| vec![1.0]);
                (scenarios, alphas, cross(&bx, &bu))
            };
            let cells = scenarios.len() * alphas.len() * effect_settings.len();
            eprintln!(
                "running {cells} cell(s) at {} replication(s) each, seed {}",
                args.reps, args.seed
            );
            let summaries = run_grid(
                &scenarios,
                &alphas,
                &effect_settings,
                args.reps,
                args.seed,
                args.jobs,
            )?;
            let mut out = open_output(&args.output)?;
            write_grid_csv(&summaries, &mut out)?;
        }
        Command::Plot(args) => {
            let dataset = load_input(&args.input.input)?;
            let kind = match args.kind {
                PlotKindArg::Scatter => PlotKind::Scatter,
                PlotKindArg::Weights => PlotKind::Weights,
            };
            let svg = render_plot(&dataset, kind)?;
            let mut out = open_output(&args.input.output)?;
            out.write_all(svg.as_bytes())?;
        }
    }
    Ok(())
}

fn cross(bx: &[f64], bu: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(bx.len() * bu.len());
    for &x in bx {
        for &u in bu {
            out.push((x, u));
        }
    }
    out
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
