use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fraclab_cli::config::{self, ExperimentKind, Overrides};
use fraclab_cli::outputs::RECORD_FILE;
use fraclab_cli::record::EXIT_CONFIG;

#[derive(Parser, Debug)]
#[command(
    name = "fraclab",
    version,
    about = "Decay experiments for fractional dissipative equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// TOML configuration; defaults are used for everything it omits.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory (FRACLAB_OUT overrides it).
    #[arg(long, short, env = "FRACLAB_OUT")]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 picks the number of cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Relative slope tolerance in percent.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Print the filled configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Linear decay from the frequency-space oracle.
    Oracle(Common),
    /// Linear decay on the grid.
    Linear(Common),
    /// Dissipative SQG.
    Sqg(Common),
    /// Critical Keller-Segel.
    Ks(Common),
    /// Besov norm of a stored field.
    Besov {
        /// BSVF field file.
        field: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Built-in property checks.
    Selftest(Common),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (kind, common, field) = match cli.command {
        Command::Oracle(c) => (ExperimentKind::Oracle, c, None),
        Command::Linear(c) => (ExperimentKind::Linear, c, None),
        Command::Sqg(c) => (ExperimentKind::Sqg, c, None),
        Command::Ks(c) => (ExperimentKind::Ks, c, None),
        Command::Besov { field, common } => (ExperimentKind::Besov, common, Some(field)),
        Command::Selftest(c) => (ExperimentKind::Selftest, c, None),
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads)
        .build_global()
    {
        log::warn!("thread pool: {e}");
    }
    let overrides = Overrides {
        kind: Some(kind),
        seed: common.seed,
        tolerance: common.tolerance,
        output_dir: common.out,
        field,
    };
    let loaded = match &common.config {
        Some(path) => config::load_config(path, &overrides),
        None => config::parse_config("", &overrides),
    };
    let cfg = match loaded {
        Ok(c) => c,
        Err(e) => {
            eprintln!("fraclab: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    if common.print_config {
        print!("{}", config::to_toml(&cfg));
        return ExitCode::SUCCESS;
    }

    let record = fraclab_cli::execute(&cfg);
    for check in &record.selftest {
        println!(
            "{} {}: {}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
    if let Some(report) = &record.report {
        for e in &report.entries {
            println!(
                "{} slope {:.6} vs theory {:.6} (relative error {:.2}%, tolerance {:.1}%)",
                if e.passed { "PASS" } else { "FAIL" },
                e.fitted,
                e.theoretical,
                100.0 * e.relative_error,
                100.0 * report.tolerance
            );
        }
    }
    if let Some(c) = &record.oracle_comparison {
        println!(
            "{} grid vs oracle: max relative deviation {:e} (tolerance {:e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.max_relative_deviation,
            c.tolerance
        );
    }
    if let Some(b) = &record.boundedness {
        println!(
            "{} {} stays below {}x initial: max {:e}, initial {:e}",
            if b.passed { "PASS" } else { "FAIL" },
            b.label,
            b.factor,
            b.max,
            b.initial
        );
    }
    if let Some(f) = &record.failure {
        eprintln!("fraclab: {:?} failure: {}", f.kind, f.message);
    }
    println!("record: {}", cfg.output_dir.join(RECORD_FILE).display());
    ExitCode::from(record.exit_code() as u8)
}
