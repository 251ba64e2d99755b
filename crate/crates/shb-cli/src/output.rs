//! Output directory plumbing: every experiment writes a manifest that
//! reproduces it bit-exactly (resolved config, command, crate version).

use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::CliError;

pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    pub fn create(dir: &str) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::io(format!("cannot create output dir {dir}: {e}")))?;
        Ok(OutDir { dir: PathBuf::from(dir) })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.path(name);
        std::fs::write(&path, contents)
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    }

    pub fn write_json<T: serde::Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::io(format!("cannot serialize {name}: {e}")))?;
        self.write(name, &(text + "\n"))
    }

    /// The manifest reproduces the experiment bit-exactly: the resolved
    /// config, the crate version, and the full problem document (so a
    /// later edit of a referenced problem file cannot change the meaning).
    pub fn write_manifest(
        &self,
        command: &str,
        resolved_config: &Value,
        problem: &shb_core::Problem64,
    ) -> Result<(), CliError> {
        let problem_doc: Value =
            serde_json::from_str(&shb_core::problem::problem_to_json(problem))
                .expect("problem document is valid JSON");
        let manifest = serde_json::json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": resolved_config,
            "problem_document": problem_doc,
        });
        self.write_json("manifest.json", &manifest)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

/// Linear-interpolation quantile of a sorted slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    }
}
