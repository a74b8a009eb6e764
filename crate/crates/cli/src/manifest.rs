use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to re-run a command and check that it reproduced.
///
/// Nothing time- or host-dependent goes in here, so a replay that
/// reproduces the outputs also reproduces the manifest byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    /// Every config key with its resolved value.
    pub config: BTreeMap<String, String>,
    /// sha256 of files read, keyed by the path as configured.
    #[serde(default)]
    pub inputs: BTreeMap<String, String>,
    /// sha256 of every file written, keyed by file name.
    pub outputs: BTreeMap<String, String>,
    /// False when some run hit `max_rounds` before the steady-state test
    /// passed. Absent for commands without dynamics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    /// Headline numbers of the run.
    #[serde(default)]
    pub summary: BTreeMap<String, serde_json::Value>,
}

impl RunManifest {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("bad manifest {}: {e}", path.display())))
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| CliError::runtime(e.to_string()))?;
        text.push('\n');
        std::fs::write(dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }

    /// Output files whose checksum differs from `other`'s, plus files only
    /// one of the two lists.
    pub fn output_mismatches(&self, other: &RunManifest) -> Vec<String> {
        let mut names: Vec<&String> = self.outputs.keys().chain(other.outputs.keys()).collect();
        names.sort();
        names.dedup();
        names
            .into_iter()
            .filter(|n| self.outputs.get(*n) != other.outputs.get(*n))
            .cloned()
            .collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}
