use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use srr_cli::config::{Overrides, RunConfig};
use srr_cli::{CliError, CliResult, Run, Stage};
use srr_core::synthetic::{generate, SyntheticConfig};

#[derive(Parser)]
#[command(name = "srr", version, about = "Systemic-risk early warning from rolling correlation networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Crisis period: dotcom, gfc or covid.
    #[arg(long)]
    preset: Option<String>,
    /// Run directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    Ingest(Common),
    Features(Common),
    Graphs(Common),
    Train(Common),
    Evaluate(Common),
    Report(Common),
    /// All stages in order.
    RunAll(Common),
    /// Writes a synthetic price file and universe.
    Synth {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        tickers: usize,
        #[arg(long, default_value_t = 600)]
        days: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(c: &Common) -> CliResult<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: c.seed,
        preset: c.preset.clone(),
        out: c.out.clone(),
    });
    Ok(cfg)
}

fn stage(c: &Common, s: Option<Stage>) -> CliResult<()> {
    let cfg = load(c)?;
    let mut run = Run::new(&cfg)?;
    match s {
        Some(s) => run.run_stage(s)?,
        None => run.run_all()?,
    }
    eprintln!("{}: done ({})", s.map_or("run-all", Stage::name), run.dir.display());
    Ok(())
}

fn synth(seed: u64, tickers: usize, days: usize, out: &PathBuf) -> CliResult<()> {
    let cfg = SyntheticConfig {
        seed,
        n_tickers: tickers,
        n_days: days,
        ..Default::default()
    };
    let market = generate(&cfg)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
    for (name, text) in [("prices.csv", market.prices.to_csv_string()), ("universe.csv", market.universe_csv())] {
        let p = out.join(name);
        std::fs::write(&p, text).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Ingest(c) => stage(c, Some(Stage::Ingest)),
        Command::Features(c) => stage(c, Some(Stage::Features)),
        Command::Graphs(c) => stage(c, Some(Stage::Graphs)),
        Command::Train(c) => stage(c, Some(Stage::Train)),
        Command::Evaluate(c) => stage(c, Some(Stage::Evaluate)),
        Command::Report(c) => stage(c, Some(Stage::Report)),
        Command::RunAll(c) => stage(c, None),
        Command::Synth { seed, tickers, days, out } => synth(*seed, *tickers, *days, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("srr: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
