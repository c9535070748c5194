use std::fs;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use usc_laser::Gauge;
use usc_laser_cli::config::Format;
use usc_laser_cli::{parse_config, run, CliError, Command, RunConfig};

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum GaugeArg {
    Coulomb,
    Dipole,
}

/// Steady states of ultrastrongly coupled lasers.
///
/// Set USC_LASER_THREADS to cap the number of worker threads.
#[derive(Debug, Parser)]
#[command(name = "usc-laser", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<String>,
    #[arg(long, value_enum)]
    gauge: Option<GaugeArg>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Comma-separated artifact formats.
    #[arg(long, value_enum, value_delimiter = ',')]
    format: Option<Vec<Format>>,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("USC_LASER_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("USC_LASER_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size the thread pool: {e}")))
}

fn load(args: &Args) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::ConfigIo {
                path: path.clone(),
                message: e.to_string(),
            })?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(g) = args.gauge {
        cfg.gauge = match g {
            GaugeArg::Coulomb => Gauge::Coulomb,
            GaugeArg::Dipole => Gauge::ElectricDipole,
        };
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    if let Some(f) = &args.format {
        cfg.output.formats = f.clone();
    }
    cfg.normalize()
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(CliError::Usage(e.render().to_string().trim_end().to_string())),
    };
    if let Err(e) = init_threads() {
        return fail(e);
    }
    let cfg = match load(&args) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    match run(args.command, &cfg) {
        Ok(out) => {
            println!("{}", out.summary());
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}
