use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dzk_runner::bench::{bench, bench_csv};
use dzk_runner::emit::write_new;
use dzk_runner::{all_passed, parse_config, run, ExperimentConfig, RunnerError};

#[derive(Parser)]
#[command(name = "dzk", version, about = "Numerical laboratory for the degenerate Zakharov system")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Configuration file (`section.key = value` lines)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: run.out, then $DZK_OUT, then ./dzk-out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the random families
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one case (an estimate id or `solve`)
    Verify {
        case: String,
        #[command(flatten)]
        common: Common,
    },
    /// Growth of the maximal norm on dyadic annulus data
    Counterexample(Common),
    /// Envelope of the oscillatory kernel
    Kernel(Common),
    /// Picard solve with manifest and field dumps
    Solve(Common),
    /// Every case listed in the configuration
    Suite(Common),
    /// Time the spectral core
    Bench(Common),
}

fn load(common: &Common, cases: Option<&str>) -> Result<ExperimentConfig, RunnerError> {
    let text = match &common.config {
        Some(p) => std::fs::read_to_string(p).map_err(|source| RunnerError::Unwritable {
            path: p.display().to_string(),
            source,
        })?,
        None => String::new(),
    };
    let mut cfg = parse_config(&text)?;
    if let Some(s) = common.seed {
        cfg = cfg.with("run.seed", s)?;
    }
    if let Some(o) = &common.out {
        cfg = cfg.with("run.out", o.display())?;
    }
    if let Some(c) = cases {
        cfg = cfg.with("estimate.case", c)?;
    }
    Ok(cfg)
}

fn suite(cfg: &ExperimentConfig) -> Result<bool, RunnerError> {
    let records = run(cfg)?;
    for r in &records {
        println!("{:<22} {}", r.case, r.status);
        for d in &r.diagnostics {
            println!("    {d}");
        }
    }
    println!("reports in {}", cfg.out.display());
    Ok(all_passed(&records))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.cmd {
        Cmd::Verify { case, common } => load(common, Some(case)).and_then(|c| suite(&c)),
        Cmd::Counterexample(c) => load(c, Some("counterexample")).and_then(|c| suite(&c)),
        Cmd::Kernel(c) => load(c, Some("kernel-envelope")).and_then(|c| suite(&c)),
        Cmd::Solve(c) => load(c, Some("solve")).and_then(|c| suite(&c)),
        Cmd::Suite(c) => load(c, None).and_then(|c| suite(&c)),
        Cmd::Bench(c) => load(c, None).and_then(|cfg| {
            let rows = bench(&cfg)?;
            for r in &rows {
                println!("{:<18} {:>12.3e} s  {:>12.3e} samples/s", r.op, r.mean_seconds, r.samples_per_second);
            }
            std::fs::create_dir_all(&cfg.out).map_err(|source| RunnerError::Unwritable {
                path: cfg.out.display().to_string(),
                source,
            })?;
            write_new(&cfg.out, "bench.csv", &bench_csv(&rows))?;
            Ok(true)
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("dzk: {e}");
            ExitCode::from(2)
        }
    }
}
