use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shc_core::asymptotics::ConstantsCache;
use shc_harness::config::{ExperimentConfig, LEVEL_SET_FIELDS};
use shc_harness::error::HarnessError;
use shc_harness::oracle::{regenerate_constants, OracleConfig};
use shc_harness::runner::{run_experiment, RunOptions};
use shc_harness::suite::{load_suite, SuiteOptions};

/// Environment variable that overrides `--threads`.
const THREADS_ENV: &str = "SHC_THREADS";

#[derive(Parser)]
#[command(name = "shc", version, about = "Monte Carlo spectral heat content experiments")]
struct Cli {
    /// Worker threads (default: all cores). SHC_THREADS overrides this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment, suite or oracle config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of paths per point.
    #[arg(long = "n-paths")]
    n_paths: Option<usize>,
    /// Record runtimes as 0 so that CSVs are byte-identical across runs.
    #[arg(long = "no-timing")]
    no_timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one t-ladder experiment.
    Run {
        #[command(flatten)]
        common: Common,
        /// Print the CSV to stdout instead of the table.
        #[arg(long)]
        csv: bool,
        /// Constants cache.
        #[arg(long, default_value = "constants/sup_means.tsv")]
        constants: PathBuf,
    },
    /// Run an acceptance suite.
    Suite {
        #[command(flatten)]
        common: Common,
        /// Run only these entries.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<String>>,
        /// Print per-entry details after the table.
        #[arg(long)]
        verbose: bool,
    },
    /// Regenerate the constants cache from an oracle config.
    Constants {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "constants")]
        out: PathBuf,
    },
    /// List process families, domains and named level-set fields.
    ListFamilies,
}

fn threads(cli: Option<usize>) -> Result<(usize, String), HarnessError> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| HarnessError::Config(format!("{THREADS_ENV}={v:?} is not a thread count")))?;
        return Ok((n, format!("env {THREADS_ENV}")));
    }
    match cli {
        Some(n) => Ok((n, "--threads".into())),
        None => Ok((0, "default".into())),
    }
}

fn exit_code_for(e: &HarnessError) -> u8 {
    match e {
        HarnessError::Config(_) | HarnessError::MissingConstants { .. } => 3,
        _ => 1,
    }
}

fn list_families() {
    println!("process families:");
    println!("  brownian        dim, scale = heat_kernel (variance 2t) | standard (variance t)");
    println!("  stable          dim, alpha in (0, 2]");
    println!("  fbm             dim, hurst in (0, 1)");
    println!("  time_changed    dim, alpha in (1, 2], clock = inverse_subordinator | lamperti_inverse | power");
    println!("subordinators: stable(beta), tempered_stable(beta, theta), drift_compound_poisson(drift, rate, jump)");
    println!("domains: ball, annulus, ellipsoid, interval, level_set");
    println!("level-set fields:");
    for f in LEVEL_SET_FIELDS {
        println!("  {f}");
    }
    println!("normalizers: estimated_mu, reference_mu, estimated_m, clock_scale");
}

fn run(cli: Cli) -> Result<i32, HarnessError> {
    let (n_threads, threads_source) = threads(cli.threads)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n_threads)
        .build_global()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    let run_opts = |c: &Common| RunOptions {
        seed: c.seed,
        n_paths: c.n_paths,
        timing: !c.no_timing,
        threads_source: threads_source.clone(),
        ..RunOptions::default()
    };
    match cli.command {
        Command::Run { common, csv, constants } => {
            let cfg = ExperimentConfig::load(&common.config)?;
            let cache = ConstantsCache::load(&constants).map_err(|e| HarnessError::MissingConstants {
                path: constants.display().to_string(),
                reason: e.to_string(),
            })?;
            let mut opts = run_opts(&common);
            opts.constants_path = constants.display().to_string();
            let report = run_experiment(&cfg, &cache, &opts)?;
            if let Some(dir) = &common.out {
                let (c, j) = report.save(dir)?;
                log::info!("wrote {} and {}", c.display(), j.display());
            }
            if csv {
                print!("{}", report.csv_string());
            } else {
                print!("{}", report.table());
            }
            Ok(report.verdict.exit_code())
        }
        Command::Suite { common, only, verbose } => {
            let suite = load_suite(&common.config)?;
            let summary = suite.run(&SuiteOptions {
                run: run_opts(&common),
                out: common.out.clone(),
                only,
            })?;
            print!("{}", summary.table());
            if verbose {
                for o in &summary.outcomes {
                    println!("\n== {}", o.id);
                    for d in &o.details {
                        println!("{d}");
                    }
                }
            }
            Ok(summary.exit_code())
        }
        Command::Constants { config, out } => {
            let cfg = OracleConfig::load(&config)?;
            let path = regenerate_constants(&cfg, &out)?;
            println!("wrote {}", path.display());
            Ok(0)
        }
        Command::ListFamilies => {
            list_families();
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
