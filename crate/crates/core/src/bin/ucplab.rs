use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ucplab::scenario::{parse_config, run_scenario, Kind, Overrides};
use ucplab::Error;

/// Run one configured experiment and write results.csv, results.json and
/// manifest.json into the output directory.
#[derive(Debug, Parser)]
#[command(name = "ucplab", version)]
struct Cli {
    /// ucp, lifting, wegner, observability, control or estimate-N.
    kind: String,
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Allow Wegner windows wider than epsilon_max.
    #[arg(long)]
    force: bool,
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("UCPLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| Error::Config {
        path: "UCPLAB_THREADS".into(),
        message: format!("expected a positive integer, got `{raw}`"),
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), Error> {
    configure_threads()?;
    let kind: Kind = cli.kind.parse()?;
    let text = std::fs::read_to_string(&cli.config).map_err(|e| Error::Config {
        path: "config".into(),
        message: format!("cannot read {}: {e}", cli.config.display()),
    })?;
    let overrides = Overrides {
        kind: Some(kind),
        seed: cli.seed,
        output: cli.out,
        force: cli.force,
    };
    let (config, raw) = parse_config(&text, &overrides)?;
    let out = config.output_dir();
    let manifest = run_scenario(&config, &raw, &out)?;
    for f in &manifest.findings {
        eprintln!("finding: {f}");
    }
    println!("{}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
