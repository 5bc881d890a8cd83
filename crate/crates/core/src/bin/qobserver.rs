use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qobserver::config::{example_sec4, parse_config, ExperimentConfig};
use qobserver::runner::{
    run_simulate, run_synthesize, run_verify, run_verify_sweep, write_synthesis, SweepConfig,
};
use qobserver::Error;

#[derive(Parser)]
#[command(
    name = "qobserver",
    version,
    about = "Synthesize, simulate and verify qubit observer networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the observer network and print its matrices and certificate.
    Synthesize(Common),
    /// Write coefficient traces and running averages.
    Simulate(Common),
    /// Run the invariant checks on a config or on a random-graph sweep.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Check this many random connected networks instead of a config.
        #[arg(long)]
        sweep: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML). Defaults to the bundled five-observer example.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "t-max")]
    t_max: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    /// Comma-separated averaging horizons.
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<f64>>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => {
                let bytes = std::fs::read(path).map_err(|source| Error::Io {
                    path: path.clone(),
                    source,
                })?;
                parse_config(&bytes)?
            }
            None => example_sec4(),
        };
        if let Some(seed) = self.seed {
            cfg.set_seed(seed);
        }
        if let Some(t) = self.t_max {
            cfg.grid.t_max = t;
        }
        if let Some(h) = self.step {
            cfg.grid.step = h;
        }
        if let Some(hs) = &self.horizons {
            cfg.averaging.horizons = hs.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Synthesize(common) => {
            let cfg = common.load()?;
            let report = run_synthesize(&cfg)?.report(&cfg.name);
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
            if let Some(out) = &common.out {
                let path = write_synthesis(&report, out)?;
                eprintln!("wrote {}", path.display());
            }
            Ok(0)
        }
        Command::Simulate(common) => {
            let cfg = common.load()?;
            let archive = run_simulate(&cfg)?;
            let out = common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            let written = archive.write(&out, &cfg.output.artifacts)?;
            for r in &archive.residuals {
                let status = if r.passed { "PASS" } else { "FAIL" };
                println!("{status} {:<32} {:.4e} <= {:.4e}", r.name, r.value, r.limit);
            }
            for a in &archive.advisories {
                println!("ADVISORY {a}");
            }
            eprintln!("wrote {} files to {}", written.len(), out.display());
            Ok(if archive.residuals_passed() { 0 } else { 3 })
        }
        Command::Verify { common, sweep } => {
            let report = match sweep {
                Some(count) => {
                    let mut s = SweepConfig {
                        count,
                        ..SweepConfig::default()
                    };
                    if let Some(seed) = common.seed {
                        s.seed = seed;
                    }
                    if let Some(t) = common.t_max {
                        s.t_max = t;
                    }
                    if let Some(h) = common.step {
                        s.step = h;
                    }
                    if let Some(hs) = &common.horizons {
                        s.horizons = hs.clone();
                    }
                    run_verify_sweep(&s)?
                }
                None => run_verify(&common.load()?)?,
            };
            println!("{report}");
            if let Some(out) = &common.out {
                std::fs::create_dir_all(out).map_err(|source| Error::Io {
                    path: out.clone(),
                    source,
                })?;
                let path = out.join("verify.json");
                let text = serde_json::to_string_pretty(&report).expect("report serializes");
                std::fs::write(&path, text + "\n").map_err(|source| Error::Io { path, source })?;
            }
            Ok(report.exit_code())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
