use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use interfacial::scenario::{
    emit, exit_code, load_config, run_scenario, CaseName, Format, ScenarioConfig,
};
use interfacial::Error;

/// Batch driver: runs one scenario file or one preset case.
#[derive(Debug, Parser)]
#[command(name = "interfacial", version, about)]
struct Cli {
    /// Scenario file (JSON).
    #[arg(long, conflicts_with = "case", required_unless_present = "case")]
    config: Option<PathBuf>,

    /// Preset case: air_water_long, air_water_breaking, koop_butler or grue.
    #[arg(long)]
    case: Option<CaseName>,

    /// Output directory; the report goes to stdout when neither this nor the
    /// scenario names one.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Comma-separated subset of json,csv.
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<Format>>,

    /// Exit with status 3 when the stability verdict is negative.
    #[arg(long)]
    assert_stable: bool,

    /// Seed for randomized inputs.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Worker threads for parameter sweeps.
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cli: Cli) -> Result<u8, Error> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "--threads must be at least 1".into(),
            ));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
    }
    let mut cfg = match (&cli.config, cli.case) {
        (Some(path), _) => load_config(path)?,
        (None, Some(name)) => ScenarioConfig::for_case(name),
        (None, None) => unreachable!("clap requires one of --config or --case"),
    };
    if let Some(out) = cli.out {
        cfg.output.path = Some(out);
    }
    if let Some(f) = cli.format {
        cfg.output.formats = f;
    }
    let outcome = run_scenario(&cfg, cli.seed)?;
    match &cfg.output.path {
        Some(dir) => {
            for p in emit(&outcome, dir, &cfg.output.formats)? {
                eprintln!("wrote {}", p.display());
            }
        }
        None => println!("{}", outcome.report_json()?),
    }
    if let Some(msg) = &outcome.failure {
        eprintln!("{msg}");
        return Ok(3);
    }
    if cli.assert_stable {
        match outcome.stable {
            Some(true) => {}
            Some(false) => {
                eprintln!("stability assertion failed: the configuration is not stable");
                return Ok(3);
            }
            None => {
                return Err(Error::InvalidArgument(
                    "--assert-stable needs a run kind that produces a stability verdict".into(),
                ))
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
