//! Output directory handling: file collection, config hashing, manifest.

use std::fs;
use std::path::PathBuf;

use crate::CliError;

/// FNV-1a over the canonical JSON of the effective configuration.
pub fn config_hash(config_json: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in config_json.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Collects files for one command run and writes the manifest at the end.
///
/// The directory is only created once the configuration has validated, so a
/// rejected config leaves no outputs behind.
pub struct Outputs {
    dir: PathBuf,
    hash: String,
    files: Vec<String>,
}

impl Outputs {
    pub fn create(dir: &str, config_json: &str) -> Result<Self, CliError> {
        let dir = PathBuf::from(dir);
        fs::create_dir_all(&dir)?;
        Ok(Outputs {
            dir,
            hash: config_hash(config_json),
            files: Vec::new(),
        })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn write(&mut self, name: &str, content: &str) -> Result<(), CliError> {
        fs::write(self.dir.join(name), content)?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Write `manifest.json` listing the produced files and the config hash.
    pub fn finish(mut self, command: &str) -> Result<(), CliError> {
        let manifest = serde_json::json!({
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config_hash": self.hash,
            "files": self.files,
        });
        let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(self.dir.join("manifest.json"), body)?;
        self.files.push("manifest.json".into());
        Ok(())
    }
}
