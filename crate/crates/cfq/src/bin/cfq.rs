//! Command line driver for the continued-fraction family experiments.
//!
//! Every subcommand prints a machine-readable result (JSON report or CSV)
//! on stdout and exits 0 iff all of its checks pass.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cfq::family::{self, q_parities, CfWord, FamilyPoly};
use cfq::harness::{
    self, scan, scan_csv, ExperimentReport, DEFAULT_EXACT_CAP, DEFAULT_PRIME_BOUND,
};

#[derive(Parser)]
#[command(name = "cfq", about = "Continued-fraction families of real quadratic fields", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the family polynomial of a symmetric word.
    Synth {
        /// Family description file (JSON with "case" and "word").
        #[arg(long)]
        family: PathBuf,
    },
    /// Scan all squarefree members d <= x: unit, regulator, L-value, class number.
    Scan {
        #[arg(long)]
        family: PathBuf,
        /// Upper bound on the discriminant d.
        #[arg(long, default_value_t = 1_000_000)]
        x: u64,
        /// Ceiling on Delta for the exact L(1) character sum.
        #[arg(long, default_value_t = DEFAULT_EXACT_CAP)]
        exact_cap: i64,
        #[arg(long, default_value_t = DEFAULT_PRIME_BOUND)]
        prime_bound: u64,
        /// JSON-lines cache file to resume from and append to.
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        out: OutFormat,
    },
    /// Verify the arithmetic identity suites on a family.
    Verify {
        #[arg(long)]
        family: PathBuf,
        /// Deliberately corrupt the named suite (tests the failure path).
        #[arg(long)]
        fault: Option<String>,
    },
    /// Compare member counts and character averages against the model.
    Density {
        #[arg(long)]
        family: PathBuf,
        /// Evaluation points (repeatable).
        #[arg(long, required = true)]
        x: Vec<u64>,
        #[arg(long, default_value_t = DEFAULT_PRIME_BOUND)]
        prime_bound: u64,
    },
    /// Compare empirical moments of L(1, chi_d) against the model.
    Moments {
        #[arg(long)]
        family: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        x: u64,
        /// Moment exponents (repeatable).
        #[arg(long = "z", required = true)]
        z: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_PRIME_BOUND)]
        prime_bound: u64,
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Compare the distribution of L(1, chi_d) against the model:
    /// tails, saddle-point evaluation, and KS distance.
    Dist {
        #[arg(long)]
        family: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        x: u64,
        /// Tail thresholds tau (the tail is L > e^gamma tau; repeatable).
        #[arg(long = "tau", required = true)]
        tau: Vec<f64>,
        #[arg(long, default_value_t = 200_000)]
        mc_samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_PRIME_BOUND)]
        prime_bound: u64,
        /// Prime cutoff for the Monte-Carlo sampler.
        #[arg(long, default_value_t = 10_000)]
        mc_bound: u64,
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Census of class numbers h <= H against the C2 H log H law.
    Census {
        #[arg(long)]
        family: PathBuf,
        #[arg(long = "H")]
        h: u64,
        /// Hard cap on the scan range X = min(x_cap, H^2 (log H)^8).
        #[arg(long, default_value_t = 100_000_000)]
        x_cap: u64,
        #[arg(long, default_value_t = DEFAULT_PRIME_BOUND)]
        prime_bound: u64,
        #[arg(long)]
        cache: Option<PathBuf>,
    },
}

fn load_family(path: &PathBuf) -> cfq::Result<FamilyPoly> {
    family::load(path)
}

fn emit_report(report: &ExperimentReport) -> ExitCode {
    println!("{}", report.to_json());
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run(cli: Cli) -> cfq::Result<ExitCode> {
    match cli.command {
        Command::Synth { family } => {
            let file: family::FamilyFile =
                serde_json::from_str(&std::fs::read_to_string(&family)?)?;
            let word = match &file.word {
                Some(u) => CfWord::new(file.case, u.clone())?,
                None => {
                    return Err(cfq::Error::Invalid(
                        "synth needs a family file with a \"word\" entry".into(),
                    ))
                }
            };
            let (q1, q2, q3) = q_parities(&word);
            let fam = family::normalize(&family::synthesize(&word)?)?;
            let out = serde_json::json!({
                "case": file.case,
                "word": word.u,
                "period": word.s(),
                "q_parity": { "q_s_minus_1": q1, "q_s_minus_2": q2, "q_s_minus_3": q3 },
                "poly": { "a": fam.a, "b": fam.b, "c": fam.c },
                "leading_quotient": { "e": fam.e, "f": fam.f },
                "id": fam.id(),
                "first_members": (1..=5u64).map(|n| fam.d_value(n)).collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Scan { family, x, exact_cap, prime_bound, cache, out } => {
            let fam = load_family(&family)?;
            let rows = scan(&fam, x, exact_cap, prime_bound, cache.as_deref())?;
            match out {
                OutFormat::Csv => print!("{}", scan_csv(&rows)),
                OutFormat::Json => println!("{}", serde_json::to_string_pretty(&rows)?),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { family, fault } => {
            let fam = load_family(&family)?;
            Ok(emit_report(&harness::cmd_verify(&fam, fault.as_deref())?))
        }
        Command::Density { family, x, prime_bound } => {
            let fam = load_family(&family)?;
            Ok(emit_report(&harness::cmd_density(&fam, &x, prime_bound)?))
        }
        Command::Moments { family, x, z, prime_bound, cache } => {
            let fam = load_family(&family)?;
            let rows = scan(&fam, x, DEFAULT_EXACT_CAP, prime_bound, cache.as_deref())?;
            Ok(emit_report(&harness::cmd_moments(&fam, &rows, &z, prime_bound)?))
        }
        Command::Dist { family, x, tau, mc_samples, seed, prime_bound, mc_bound, cache } => {
            let fam = load_family(&family)?;
            let rows = scan(&fam, x, DEFAULT_EXACT_CAP, prime_bound, cache.as_deref())?;
            Ok(emit_report(&harness::cmd_dist(
                &fam, &rows, &tau, mc_samples, seed, prime_bound, mc_bound,
            )?))
        }
        Command::Census { family, h, x_cap, prime_bound, cache } => {
            let fam = load_family(&family)?;
            Ok(emit_report(&harness::cmd_census(
                &fam, h, x_cap, prime_bound, cache.as_deref(),
            )?))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
