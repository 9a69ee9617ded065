//! Config, runner and output formats for `xsect-core` experiments.

pub mod config;
pub mod output;
pub mod run;

pub use config::{validate_config, Command, ConfigErrors, ExperimentConfig};
pub use run::{run, ResultRecord, RunError};

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "XSECT_THREADS";

/// Write the JSON record and the optional CSV table where the config asks for them.
pub fn emit(record: &ResultRecord) -> std::io::Result<String> {
    let json = output::to_json(record);
    if let Some(path) = &record.config.output {
        std::fs::write(path, &json)?;
    }
    if let (Some(path), Some(table)) = (&record.config.csv, &record.table) {
        table.write(path)?;
    }
    Ok(json)
}
