//! Experiment registry, configuration and reports.

mod config;
mod experiments;
mod functionals;
mod report;

use std::time::Instant;

pub use config::{ExperimentConfig, Format, MIN_PATHS, OUT_DIR_ENV};
pub use experiments::{list_experiments, lookup, ExperimentInfo, CATALOG};
pub use functionals::{functional, FUNCTIONALS};
pub use report::{summarize, ErrorRecord, ExperimentReport, Rule, Statistic, Verdict, CSV_HEADER};

use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Runs one experiment. Unknown ids and invalid configs are errors; numerical
/// failures inside the experiment come back as the report's error record.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let info = lookup(&config.experiment)?;
    config.validate(info.statistical)?;
    // resolve the functional up front so a typo is a usage error, not a failed run
    if let (Some(id), false) = (&config.functional, info.id == "bsde_residual") {
        functional(id, &config.params)?;
    }
    let start = Instant::now();
    let (statistics, notes, error) = match experiments::dispatch(info, config) {
        Ok(o) => (o.statistics, o.notes, None),
        Err(e) => (
            Vec::new(),
            Vec::new(),
            Some(ErrorRecord {
                kind: error_kind(&e),
                message: e.to_string(),
            }),
        ),
    };
    Ok(ExperimentReport {
        experiment: info.id.to_string(),
        anchor: info.anchor.to_string(),
        version: VERSION.to_string(),
        config: config.clone(),
        statistics,
        notes,
        error,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

fn error_kind(e: &Error) -> String {
    format!("{e:?}").chars().take_while(|c| c.is_alphanumeric()).collect()
}

/// Writes the report in the configured format to the configured destination,
/// stdout when there is none. Returns the path written, if any.
pub fn emit(report: &ExperimentReport) -> Result<Option<std::path::PathBuf>> {
    let path = report.config.output_path();
    let mut sink: Box<dyn std::io::Write> = match &path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            Box::new(std::fs::File::create(p)?)
        }
        None => Box::new(std::io::stdout().lock()),
    };
    match report.config.format {
        Format::Json => writeln!(sink, "{}", report.to_json()?)?,
        Format::Csv => report.write_csv(&mut sink)?,
    }
    sink.flush()?;
    Ok(path)
}
