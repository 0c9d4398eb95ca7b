use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use zgf_cli::{run_file, run_suite, status, CliError, RunOptions, SuiteName, DEFAULT_OUT};

/// Runs height/spin duality experiments and the acceptance batteries.
///
/// Every flag can also be set through the environment variable shown, all
/// with the prefix `ZGF_`; a flag on the command line wins.
#[derive(Parser, Debug)]
#[command(name = "zgf", version)]
struct Args {
    /// Experiment file (TOML).
    #[arg(long, env = "ZGF_CONFIG", conflicts_with = "suite", required_unless_present = "suite")]
    config: Option<PathBuf>,
    /// Predeclared battery: `smoke` or `full`.
    #[arg(long, env = "ZGF_SUITE")]
    suite: Option<SuiteName>,
    /// Master seed; replaces the one in the file.
    #[arg(long, env = "ZGF_SEED")]
    seed: Option<u64>,
    /// Directory for reports.
    #[arg(long, env = "ZGF_OUT")]
    out: Option<PathBuf>,
    /// Worker threads for the sampled experiments.
    #[arg(long, env = "ZGF_THREADS")]
    threads: Option<usize>,
    /// Reverse every check with this name (or of this experiment).
    #[arg(long, env = "ZGF_INJECT_FAULT")]
    inject_fault: Option<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("zgf: cannot set up {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let opts = RunOptions { seed: args.seed, out: args.out.clone(), inject_fault: args.inject_fault.clone() };
    let code = match (&args.config, args.suite) {
        (Some(path), _) => match run_file(path, &opts) {
            Ok((report, files)) => {
                for c in report.failed_checks() {
                    println!("FAIL {} [{}]: lhs={} rhs={} slack={}", c.name, c.instance, c.lhs, c.rhs, c.slack);
                }
                let verdict = if report.pass { "PASS" } else { "FAIL" };
                println!("{} {verdict} ({})", report.experiment, report.summary());
                for f in files {
                    println!("wrote {}", f.display());
                }
                status(report.pass)
            }
            Err(e) => fail(&e),
        },
        (None, Some(name)) => {
            let out = args.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
            match run_suite(name, &opts, &out) {
                Ok((rows, code)) => {
                    let passed = rows.iter().filter(|r| r.pass).count();
                    println!("{passed}/{} passed; reports in {}", rows.len(), out.display());
                    code
                }
                Err(e) => fail(&e),
            }
        }
        (None, None) => unreachable!("clap requires --config or --suite"),
    };
    ExitCode::from(code as u8)
}

fn fail(e: &CliError) -> i32 {
    eprintln!("zgf: {e}");
    e.exit_code()
}
