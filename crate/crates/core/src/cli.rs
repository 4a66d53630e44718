//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 on usage, configuration or validation errors,
//! 3 when a suite ran but at least one acceptance check failed.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::alternatives::{classify, AlternativeSequence, Thresholds};
use crate::chi2::{chi2_decide_predict, Chi2Config};
use crate::classes::{compactness_diagnostic, greedy_widths, SetDescriptor};
use crate::cvm::{cvm_statistic, CvmNullTable, DEFAULT_J_NULL};
use crate::error::{Error, Result};
use crate::kernel::{kernel_statistic_fourier, Kernel, KernelTestConfig};
use crate::quad::{decide_and_predict, fixed_kappa_statistic, ProfileAtN, QuadTestConfig};
use crate::suites::{env_seed, run_named, SuiteConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CHECKS_FAILED: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "uniconsist", version, about = "Goodness-of-fit test laboratory")]
struct Cli {
    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment suite and write `<suite>.csv` and `<suite>_summary.json`.
    Suite {
        name: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the configured replicate count.
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Evaluate one test statistic on the data in a JSON file.
    Statistic {
        family: StatFamily,
        #[arg(long)]
        data: PathBuf,
    },
    /// Classify an alternative sequence.
    Classify {
        #[arg(long)]
        sequence: PathBuf,
    },
    /// Simulate critical values of a limiting null law.
    Nulltable {
        kind: NullKind,
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<f64>,
        #[arg(long)]
        replicates: usize,
        #[arg(long = "J-null", default_value_t = DEFAULT_J_NULL)]
        j_null: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Greedy widths of a finite-dimensional set.
    Widths {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        i_max: Option<usize>,
        /// Also report the first index with width below this level.
        #[arg(long)]
        epsilon: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StatFamily {
    Quad,
    Fixed,
    Kernel,
    Chi2,
    Cvm,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum NullKind {
    Cvm,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadData {
    y: Vec<f64>,
    kappa_sq: Vec<f64>,
    n: usize,
    #[serde(default = "unit")]
    sigma: f64,
    #[serde(default = "five_percent")]
    alpha: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FixedData {
    z: Vec<f64>,
    kappa_sq: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelData {
    y: Vec<f64>,
    kernel: Kernel,
    h: f64,
    n: usize,
    frequencies: usize,
    #[serde(default = "unit")]
    sigma: f64,
    #[serde(default = "five_percent")]
    alpha: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Chi2Data {
    points: Vec<f64>,
    m: usize,
    #[serde(default = "five_percent")]
    alpha: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CvmData {
    points: Vec<f64>,
    #[serde(default)]
    critical: Option<f64>,
}

#[derive(Serialize)]
struct CvmOutput {
    statistic: f64,
    reject: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassifyInput {
    sequence: AlternativeSequence,
    thresholds: Thresholds,
}

fn unit() -> f64 {
    1.0
}

fn five_percent() -> f64 {
    0.05
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|source| Error::Config {
        path: path.display().to_string(),
        source,
    })
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn statistic(family: StatFamily, data: &Path) -> Result<()> {
    match family {
        StatFamily::Quad => {
            let d: QuadData = read_json(data)?;
            let profile = ProfileAtN::from_table(d.n, d.kappa_sq)?;
            print_json(&decide_and_predict(&d.y, None, &profile, &QuadTestConfig::new(d.sigma, d.alpha)?)?)
        }
        StatFamily::Fixed => {
            let d: FixedData = read_json(data)?;
            print_json(&serde_json::json!({ "statistic": fixed_kappa_statistic(&d.z, &d.kappa_sq)? }))
        }
        StatFamily::Kernel => {
            let d: KernelData = read_json(data)?;
            let config = KernelTestConfig::new(d.kernel, d.h, d.sigma, d.n, d.alpha, d.frequencies)?;
            print_json(&kernel_statistic_fourier(&d.y, &config)?)
        }
        StatFamily::Chi2 => {
            let d: Chi2Data = read_json(data)?;
            let config = Chi2Config::new(d.m, d.points.len(), d.alpha)?;
            print_json(&chi2_decide_predict(&d.points, None, &config)?)
        }
        StatFamily::Cvm => {
            let d: CvmData = read_json(data)?;
            let statistic = cvm_statistic(&d.points)?;
            print_json(&CvmOutput {
                statistic,
                reject: d.critical.map(|c| statistic > c),
            })
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Suite {
            name,
            config,
            out,
            replicates,
        } => {
            let mut cfg = SuiteConfig::load(&config)?;
            if let Some(seed) = env_seed()? {
                cfg.set_seed(seed);
            }
            if let Some(r) = replicates {
                cfg.set_replicates(r);
            }
            let report = run_named(&name, &cfg)?;
            let (csv, summary) = report.write(&out)?;
            println!("{}", csv.display());
            println!("{}", summary.display());
            for c in report.failed_checks() {
                eprintln!("check failed: {} = {} (threshold {:?})", c.name, c.value, c.threshold);
            }
            Ok(if report.passed() { EXIT_OK } else { EXIT_CHECKS_FAILED })
        }
        Command::Statistic { family, data } => statistic(family, &data).map(|_| EXIT_OK),
        Command::Classify { sequence } => {
            let input: ClassifyInput = read_json(&sequence)?;
            print_json(&classify(&input.sequence, input.thresholds)?)?;
            Ok(EXIT_OK)
        }
        Command::Nulltable {
            kind: NullKind::Cvm,
            alpha,
            replicates,
            j_null,
            seed,
        } => {
            let seed = env_seed()?.unwrap_or(seed);
            print_json(&CvmNullTable::generate(&alpha, j_null, replicates, seed)?)?;
            Ok(EXIT_OK)
        }
        Command::Widths { set, i_max, epsilon } => {
            let set: SetDescriptor = read_json(&set)?;
            let i_max = i_max.unwrap_or_else(|| set.dim());
            let widths = greedy_widths(&set, i_max)?;
            let diagnostic = epsilon.map(|e| compactness_diagnostic(&set, e, i_max)).transpose()?;
            print_json(&serde_json::json!({ "widths": widths.d, "diagnostic": diagnostic }))?;
            Ok(EXIT_OK)
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let result = match cli.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build() {
            Ok(pool) => pool.install(|| run(cli)),
            Err(e) => Err(Error::precondition(format!("cannot build thread pool: {e}"))),
        },
        None => run(cli),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}
