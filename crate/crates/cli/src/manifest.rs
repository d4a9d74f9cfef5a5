use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Result;
use serde::Serialize;

/// Sidecar record written next to every output as `<out>.manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_path: Option<String>,
    pub seed: u64,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub config_digest: Option<String>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

/// Seconds since the epoch, or `SOURCE_DATE_EPOCH` when set so that
/// manifests are reproducible too.
fn now() -> u64 {
    if let Some(fixed) = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse().ok())
    {
        return fixed;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn start(subcommand: &str, config: Option<&Path>, seed: u64) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            config_path: config.map(|p| p.display().to_string()),
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            config_digest: None,
            started_unix: now(),
            finished_unix: 0,
        }
    }

    pub fn finish(mut self, path: &Path) -> Result<()> {
        self.finished_unix = now();
        std::fs::write(path, serde_json::to_string_pretty(&self)? + "\n")?;
        Ok(())
    }
}
