//! `manifest.json`: written before any other output, rewritten when the run
//! ends with its status and wall time. The only output that differs between
//! identical runs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use soliton_core::diagnostics::config_hash;

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

impl InputFile {
    pub fn read(path: &Path) -> Result<(Self, Vec<u8>), CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::Input {
            path: path.to_path_buf(),
            source: e.into(),
        })?;
        let sha256 = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        Ok((
            Self {
                path: path.display().to_string(),
                sha256,
            },
            bytes,
        ))
    }
}

#[derive(Debug, Serialize)]
struct Body<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    status: &'a str,
    exit_code: Option<u8>,
    error: Option<&'a str>,
    wall_time_s: Option<f64>,
    config_hash: String,
    config: &'a RunConfig,
    inputs: &'a [InputFile],
    outputs: &'a [String],
    notes: &'a Map<String, Value>,
}

pub struct Manifest {
    path: PathBuf,
    subcommand: String,
    config: RunConfig,
    inputs: Vec<InputFile>,
    started: Instant,
}

impl Manifest {
    pub fn begin(dir: &Path, subcommand: &str, config: &RunConfig, inputs: Vec<InputFile>) -> Result<Self, CliError> {
        let m = Self {
            path: dir.join("manifest.json"),
            subcommand: subcommand.to_string(),
            config: config.clone(),
            inputs,
            started: Instant::now(),
        };
        m.write("running", None, None, None, &[], &Map::new())?;
        Ok(m)
    }

    pub fn finish(
        &self,
        exit_code: u8,
        error: Option<&str>,
        outputs: &[String],
        notes: &Map<String, Value>,
    ) -> Result<(), CliError> {
        let status = if exit_code == 0 { "ok" } else { "failed" };
        let wall = self.started.elapsed().as_secs_f64();
        self.write(status, Some(exit_code), error, Some(wall), outputs, notes)
    }

    fn write(
        &self,
        status: &str,
        exit_code: Option<u8>,
        error: Option<&str>,
        wall_time_s: Option<f64>,
        outputs: &[String],
        notes: &Map<String, Value>,
    ) -> Result<(), CliError> {
        let body = Body {
            tool: "acyl-soliton",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: &self.subcommand,
            status,
            exit_code,
            error,
            wall_time_s,
            config_hash: config_hash(&self.config),
            config: &self.config,
            inputs: &self.inputs,
            outputs,
            notes,
        };
        let text = serde_json::to_string_pretty(&body).expect("manifest serializes") + "\n";
        fs::write(&self.path, text).map_err(|source| CliError::Output {
            path: self.path.clone(),
            source,
        })
    }
}
