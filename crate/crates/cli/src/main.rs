//! `maizx`: validate traces, rank nodes, forecast intensity, simulate
//! placement scenarios and account measured emissions.
//!
//! Exit codes: 0 on success, 1 on validation or domain errors (one line on
//! stderr), 2 on usage errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use maizx_core::ingest::ScenarioSelection;
use maizx_core::GapPolicy;

#[derive(Debug, Parser)]
#[command(name = "maizx", version, about = "Carbon-aware node ranking and scheduling scenario simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a cluster config and its carbon-intensity (and optional power) traces.
    Validate(ValidateArgs),
    /// Print the node ranking for one decision hour as CSV.
    Rank(RankArgs),
    /// Forecast a carbon-intensity trace and print it as CSV.
    Forecast(ForecastArgs),
    /// Run placement scenarios and write report.json, hourly_cf.csv and totals.csv.
    Simulate(SimulateArgs),
    /// Emissions report from measured power traces.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Cluster config JSON.
    #[arg(long, env = "MAIZX_CONFIG", value_name = "FILE")]
    config: PathBuf,
    /// Directory of carbon-intensity CSV files, one zone per file.
    #[arg(long, value_name = "DIR")]
    ci_dir: PathBuf,
    /// How to handle missing hours in CI traces [config: gap_fill].
    #[arg(long, value_enum)]
    gap_fill: Option<GapFill>,
    /// Simulated hours, overriding the config [config: horizon_hours].
    #[arg(long, value_name = "HOURS")]
    horizon_hours: Option<usize>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: ConfigArgs,
    /// Directory of power-sample CSV files to check as well.
    #[arg(long, value_name = "DIR")]
    power_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RankingArgs {
    /// Ranking weights as `w1,w2,w3,w4` [config: weights].
    #[arg(long, value_name = "W1,W2,W3,W4", allow_hyphen_values = true)]
    weights: Option<String>,
    /// Forecast method for the forecasted-footprint term [config: forecast.method].
    #[arg(long, value_enum)]
    forecast_method: Option<Method>,
    /// Window for the moving-average forecast [config: forecast.window_hours].
    #[arg(long, value_name = "HOURS")]
    window_hours: Option<usize>,
    /// Forecast horizon [config: forecast.horizon_hours].
    #[arg(long, value_name = "HOURS")]
    forecast_horizon_hours: Option<usize>,
    /// Trailing hours in the realized-footprint term [config: scenario_c.cfp_window_hours].
    #[arg(long, value_name = "HOURS")]
    cfp_window_hours: Option<usize>,
}

#[derive(Debug, Args)]
struct RankArgs {
    #[command(flatten)]
    common: ConfigArgs,
    #[command(flatten)]
    ranking: RankingArgs,
    /// Decision hour, counted from the first trace hour.
    #[arg(long, default_value_t = 0)]
    hour: usize,
}

#[derive(Debug, Args)]
struct ForecastArgs {
    /// Carbon-intensity CSV file to forecast from.
    #[arg(long, value_name = "FILE")]
    ci: PathBuf,
    /// Optional cluster config supplying forecast defaults.
    #[arg(long, env = "MAIZX_CONFIG", value_name = "FILE")]
    config: Option<PathBuf>,
    /// Forecast method [config: forecast.method].
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Window for the moving-average method [config: forecast.window_hours].
    #[arg(long, value_name = "HOURS")]
    window_hours: Option<usize>,
    /// Hours to forecast [config: forecast.horizon_hours].
    #[arg(long, value_name = "HOURS")]
    horizon_hours: Option<usize>,
    /// Forecast from history ending at this hour (exclusive); defaults to the whole trace.
    #[arg(long, value_name = "HOUR")]
    history_hours: Option<usize>,
    /// How to handle missing hours in the trace.
    #[arg(long, value_enum)]
    gap_fill: Option<GapFill>,
    /// Write CSV here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: ConfigArgs,
    #[command(flatten)]
    ranking: RankingArgs,
    /// Scenario to run against the baseline, or all four [config: scenario].
    #[arg(long, value_name = "baseline|a|b|c|all")]
    scenario: Option<ScenarioSelection>,
    /// Hours between re-rankings in scenario C [config: scenario_c.epoch_hours].
    #[arg(long, value_name = "HOURS")]
    epoch_hours: Option<usize>,
    /// Report JSON path; hourly_cf.csv and totals.csv go next to it.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Override the hourly footprint CSV path.
    #[arg(long, value_name = "FILE")]
    hourly_csv: Option<PathBuf>,
    /// Override the totals CSV path.
    #[arg(long, value_name = "FILE")]
    totals_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[command(flatten)]
    common: ConfigArgs,
    /// Directory of power-sample CSV files, one node per file.
    #[arg(long, value_name = "DIR")]
    power_dir: PathBuf,
    /// Report JSON path.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Override the annual per-unit reduction used for the projection, kg.
    #[arg(long, value_name = "KG")]
    annual_reduction_per_unit_kg: Option<f64>,
    /// Override the projection target, kg.
    #[arg(long, value_name = "KG")]
    target_kg: Option<f64>,
    /// Override the projection period, years.
    #[arg(long, value_name = "YEARS")]
    years: Option<u32>,
    /// Eco-cost factor in EUR per kg; omitted from the report unless given.
    #[arg(long, value_name = "EUR")]
    eur_per_kg: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GapFill {
    Fail,
    Linear,
}

impl From<GapFill> for GapPolicy {
    fn from(g: GapFill) -> Self {
        match g {
            GapFill::Fail => GapPolicy::Fail,
            GapFill::Linear => GapPolicy::Linear,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Persistence,
    #[value(name = "seasonal-naive-24h")]
    SeasonalNaive24h,
    MovingAverage,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(u8::try_from(code).unwrap_or(2));
        }
    };
    let result = match cli.command {
        Command::Validate(args) => commands::validate(args),
        Command::Rank(args) => commands::rank(args),
        Command::Forecast(args) => commands::forecast(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Report(args) => commands::report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = format!("{e:#}").replace(['\n', '\r'], " ");
            eprintln!("maizx: error: {line}");
            ExitCode::from(1)
        }
    }
}
