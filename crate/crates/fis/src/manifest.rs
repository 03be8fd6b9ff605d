use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::RunConfig;

/// Resolved description of one invocation, echoed into every output file.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub mode: Option<String>,
    pub out_dir: PathBuf,
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(
        command: &str,
        config: &RunConfig,
        seeds: &[u64],
        mode: Option<&str>,
        out_dir: &Path,
    ) -> Self {
        Self {
            command: command.to_string(),
            config: config.to_json(),
            seeds: seeds.to_vec(),
            mode: mode.map(str::to_string),
            out_dir: out_dir.to_path_buf(),
            timestamp: timestamp(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }

    /// `# manifest: {...}` line that opens every CSV.
    pub fn header_line(&self) -> String {
        format!("# manifest: {}\n", self.to_json())
    }
}

// SOURCE_DATE_EPOCH pins the stamp for reproducible artifacts.
fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse().ok())
    {
        return t;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
