//! Run directories: echoed config, CSV outputs and the manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

/// Overrides the default output root `runs`.
pub const OUTPUT_ROOT_VAR: &str = "THERMPEPS_OUTPUT_ROOT";
pub const CONFIG_FILE: &str = "config.ini";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    config_file: &'a str,
    config_hash: String,
    versions: Versions,
    started_unix: u64,
    wall_seconds: f64,
    timings: &'a [(String, f64)],
    outputs: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    resumed_from: Option<&'a str>,
    status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct Versions {
    thermpeps: &'static str,
    thermpeps_cli: &'static str,
}

pub struct RunDir {
    path: PathBuf,
    subcommand: &'static str,
    config: RunConfig,
    started: SystemTime,
    clock: Instant,
    timings: Vec<(String, f64)>,
    outputs: Vec<String>,
    pub resumed_from: Option<String>,
}

impl RunDir {
    /// `out`, or `<root>/<subcommand>-<config hash prefix>`.
    pub fn create(subcommand: &'static str, config: RunConfig, out: Option<&Path>) -> Result<Self, CliError> {
        let path = match out {
            Some(p) => p.to_path_buf(),
            None => {
                let root = std::env::var_os(OUTPUT_ROOT_VAR)
                    .map(PathBuf::from)
                    .unwrap_or_else(|| "runs".into());
                root.join(format!("{subcommand}-{}", &config.hash()[..12]))
            }
        };
        std::fs::create_dir_all(&path)?;
        std::fs::write(path.join(CONFIG_FILE), config.to_text())?;
        log::info!("output directory {}", path.display());
        Ok(RunDir {
            path,
            subcommand,
            config,
            started: SystemTime::now(),
            clock: Instant::now(),
            timings: Vec::new(),
            outputs: Vec::new(),
            resumed_from: None,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Path of an output file, registered for the manifest.
    pub fn output(&mut self, name: &str) -> PathBuf {
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
        self.path.join(name)
    }

    /// CSV file with `header` already written.
    pub fn csv(&mut self, name: &str, header: &str) -> Result<BufWriter<File>, CliError> {
        let mut w = BufWriter::new(File::create(self.output(name))?);
        writeln!(w, "{header}")?;
        Ok(w)
    }

    pub fn timed<T>(&mut self, phase: &str, f: impl FnOnce(&mut Self) -> Result<T, CliError>) -> Result<T, CliError> {
        let t = Instant::now();
        let out = f(self);
        self.timings.push((phase.to_string(), t.elapsed().as_secs_f64()));
        out
    }

    /// Writes the manifest; called on success and on failure.
    pub fn finish(&self, result: &Result<(), CliError>) -> Result<(), CliError> {
        let manifest = Manifest {
            subcommand: self.subcommand,
            config_file: CONFIG_FILE,
            config_hash: self.config.hash(),
            versions: Versions {
                thermpeps: thermpeps::VERSION,
                thermpeps_cli: env!("CARGO_PKG_VERSION"),
            },
            started_unix: self
                .started
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            wall_seconds: self.clock.elapsed().as_secs_f64(),
            timings: &self.timings,
            outputs: &self.outputs,
            resumed_from: self.resumed_from.as_deref(),
            status: if result.is_ok() { "ok" } else { "failed" },
            error: result.as_ref().err().map(|e| e.to_string()),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(self.path.join(MANIFEST_FILE), text + "\n")?;
        Ok(())
    }
}
