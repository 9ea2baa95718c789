//! Command-line frontend: evaluate plan scripts, unnest them, diff the two,
//! and drive the randomized rewrite suites.
//!
//! Exit codes: 0 on success or pass, 1 on an equivalence failure, 2 on
//! usage, parse or evaluation errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use relalg::harness::{run_fuzz, run_lemma_suite, EquivalenceReport, GenSpec, PAPER_SUITES};
use relalg::text::{parse_script, print_plan, print_relation};
use relalg::unnest::{unnest, PerfectMode, UnnestConfig};
use relalg::{evaluate, BindEnv, Catalog, Plan};

#[derive(Parser)]
#[command(
    name = "relalg",
    about = "Bag-semantics relational algebra: evaluate plans, unnest dependent joins, verify rewrites",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Perfect {
    /// Substitute maps for the domain join when every column is covered.
    Auto,
    /// Insist on map substitution; error when it cannot apply.
    Always,
    /// Always join with the domain.
    Never,
}

impl From<Perfect> for PerfectMode {
    fn from(p: Perfect) -> Self {
        match p {
            Perfect::Auto => PerfectMode::Auto,
            Perfect::Always => PerfectMode::Always,
            Perfect::Never => PerfectMode::Never,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Rewrite the plan in FILE so no dependent join remains, and print it.
    Unnest {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Perfect::Auto)]
        perfect: Perfect,
    },
    /// Evaluate the plan in FILE against its table definitions.
    Eval { file: PathBuf },
    /// Evaluate FILE before and after unnesting and diff the results.
    Check {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Perfect::Auto)]
        perfect: Perfect,
    },
    /// Run the randomized per-rewrite suites (mutation suites, selectable
    /// with --only, are expected to fail).
    Lemmas {
        /// Run a single suite, e.g. L4.12 or T4.1-superset.
        #[arg(long)]
        only: Option<String>,
        #[arg(long, default_value_t = 200)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print failure records as line-delimited JSON.
        #[arg(long)]
        json: bool,
    },
    /// Generate random correlated plans, unnest them, and compare the
    /// evaluations.
    Fuzz {
        #[arg(long, default_value_t = 200)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Perfect::Auto)]
        perfect: Perfect,
        /// Print failure records as line-delimited JSON.
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load(file: &Path) -> Result<(Catalog, Plan), String> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| format!("cannot read {}: {e}", file.display()))?;
    parse_script(&text).map_err(|e| format!("{}: {e}", file.display()))
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.cmd {
        Cmd::Unnest { file, perfect } => {
            let (_, plan) = load(&file)?;
            let cfg = UnnestConfig::with_mode(perfect.into());
            let rewritten = unnest(&plan, &cfg).map_err(|e| e.to_string())?;
            print!("{}", print_plan(&rewritten));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Eval { file } => {
            let (cat, plan) = load(&file)?;
            let rel = evaluate(&plan, &cat, &BindEnv::empty()).map_err(|e| e.to_string())?;
            print!("{}", print_relation(&rel));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Check { file, perfect } => {
            let (cat, plan) = load(&file)?;
            let cfg = UnnestConfig::with_mode(perfect.into());
            let naive = evaluate(&plan, &cat, &BindEnv::empty()).map_err(|e| e.to_string())?;
            let rewritten = unnest(&plan, &cfg).map_err(|e| e.to_string())?;
            let unnested =
                evaluate(&rewritten, &cat, &BindEnv::empty()).map_err(|e| e.to_string())?;
            if naive == unnested {
                println!(
                    "plans agree: {} distinct tuple(s), total multiplicity {}",
                    naive.distinct_len(),
                    naive.total()
                );
                print!("{}", print_relation(&naive));
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("plans disagree");
                if let Some((t, a, b)) = naive.first_difference(&unnested) {
                    eprintln!("first differing tuple {t}: naive count {a}, unnested count {b}");
                }
                eprint!("naive:    {}", print_relation(&naive));
                eprint!("unnested: {}", print_relation(&unnested));
                Ok(ExitCode::from(1))
            }
        }
        Cmd::Lemmas { only, trials, seed, json } => {
            let spec = GenSpec::with_seed(seed);
            let ids: Vec<String> = match only {
                Some(id) => vec![id],
                None => PAPER_SUITES.iter().map(|s| s.to_string()).collect(),
            };
            let mut all_pass = true;
            for id in &ids {
                let report = run_lemma_suite(id, trials, &spec)?;
                emit_report(&report, json);
                all_pass &= report.passed();
            }
            Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Cmd::Fuzz { trials, seed, perfect, json } => {
            let spec = GenSpec::with_seed(seed);
            let report = run_fuzz(&spec, trials, &[perfect.into()]);
            emit_report(&report, json);
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn emit_report(report: &EquivalenceReport, json: bool) {
    println!("{}", report.summary());
    if !report.passed() {
        if json {
            print!("{}", report.failure_lines());
        } else {
            for f in &report.failures {
                eprintln!(
                    "seed {} (rows<={}, depth<={}): {}",
                    f.seed, f.max_rows, f.max_plan_depth, f.diff
                );
            }
        }
    }
}
