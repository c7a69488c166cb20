use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hourcast::commands;
use hourcast::config::{parse_models, RunConfig};
use hourcast::io::write_atomic;
use hourcast::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "hourcast", version, about = "Hourly temperature and humidity forecasting benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Hourly observations CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Comma-separated families: svr, mlp, rf, dt, lstm, cnn_lstm, xgb.
    #[arg(long)]
    models: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Extra `key=value` settings, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| CliError::InvalidConfig {
                key: kv.clone(),
                reason: "expected key=value".into(),
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        if let Some(d) = &self.data {
            cfg.data = Some(d.clone());
        }
        if let Some(m) = &self.models {
            cfg.models = parse_models(m)?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(j) = self.jobs {
            cfg.jobs = j;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Histograms of temperature and humidity and the variable correlation matrix.
    Analyze(RunArgs),
    /// Grid search, refit and evaluation of every requested family.
    Benchmark(RunArgs),
    /// Apply a saved model to a dataset.
    Predict {
        #[arg(long)]
        artifact: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Output CSV; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Actual-versus-predicted files from a finished benchmark run.
    Plotdata {
        /// Benchmark output directory.
        #[arg(long)]
        out: PathBuf,
        /// Family name or `seasonal_naive`.
        #[arg(long = "models")]
        model: String,
        #[arg(long, default_value = "test", value_parser = ["train", "test"])]
        split: String,
    },
    /// Write a seeded synthetic hourly dataset.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2000)]
        hours: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "2023-01-01T00:00:00")]
        start: String,
    },
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Analyze(args) => print_paths(&commands::analyze(&args.resolve()?)?),
        Command::Benchmark(args) => {
            let cfg = args.resolve()?;
            let summary = commands::benchmark(&cfg)?;
            let report = cfg.out.join(commands::REPORTS_DIR).join("report.txt");
            let text = std::fs::read_to_string(&report).map_err(|e| CliError::io(&report, e))?;
            print!("{text}");
            log::info!("{} files written", summary.written.len());
        }
        Command::Predict { artifact, data, out } => {
            let csv = commands::predict(&artifact, &data)?;
            match out {
                Some(p) => write_atomic(&p, csv.as_bytes())?,
                None => print!("{csv}"),
            }
        }
        Command::Plotdata { out, model, split } => print_paths(&commands::plotdata(&out, &model, &split)?),
        Command::Synth { out, hours, seed, start } => {
            let start = hourcast_core::data::parse_timestamp(&start).ok_or_else(|| CliError::InvalidConfig {
                key: "start".into(),
                reason: format!("cannot parse {start:?}"),
            })?;
            print_paths(&[commands::synth(&out, hours, start, seed)?]);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.json_line());
            ExitCode::FAILURE
        }
    }
}
