//! Configuration, orchestration and report files for the laboratory.
//!
//! ```no_run
//! let cfg = dzk_runner::parse_config("estimate.case = unitarity\nrun.out = /tmp/dzk").unwrap();
//! let records = dzk_runner::run(&cfg).unwrap();
//! assert!(dzk_runner::all_passed(&records));
//! ```

pub mod bench;
pub mod cases;
pub mod config;
pub mod emit;
pub mod error;

use std::path::Path;

pub use cases::{execute, Payload, ReportRecord, Status};
pub use config::{parse_config, ExperimentConfig, Task};
pub use emit::emit_reports;
pub use error::{Result, RunnerError};

/// Executes the configured tasks in order without writing anything.
pub fn execute_all(cfg: &ExperimentConfig) -> Vec<ReportRecord> {
    cfg.tasks.iter().map(|&t| execute(t, cfg)).collect()
}

/// Executes the configured tasks and writes the config echo and all reports
/// under `cfg.out`.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<ReportRecord>> {
    run_into(cfg, &cfg.out)
}

pub fn run_into(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<ReportRecord>> {
    let mut records = execute_all(cfg);
    std::fs::create_dir_all(dir).map_err(|source| RunnerError::Unwritable {
        path: dir.display().to_string(),
        source,
    })?;
    emit::write_new(dir, "config.txt", cfg.echo().as_bytes())?;
    emit_reports(&mut records, dir)?;
    Ok(records)
}

/// `false` iff some record failed; degenerate records do not count as failures.
pub fn all_passed(records: &[ReportRecord]) -> bool {
    records.iter().all(|r| r.status != Status::Fail)
}
