//! Deterministic result persistence: CSV/JSON files plus a run manifest
//! with per-output checksums, written atomically last.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::AppError;

/// Floats are printed with 17 significant digits in lowercase
/// scientific notation so reruns are byte-identical and values
/// round-trip exactly.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct OutputWriter {
    dir: PathBuf,
    checksums: BTreeMap<String, String>,
    diagnostics: serde_json::Map<String, Value>,
}

impl OutputWriter {
    pub fn create(dir: PathBuf) -> Result<Self, AppError> {
        fs::create_dir_all(&dir)
            .map_err(|e| AppError::Config(format!("cannot create output dir: {e}")))?;
        Ok(OutputWriter {
            dir,
            checksums: BTreeMap::new(),
            diagnostics: serde_json::Map::new(),
        })
    }

    pub fn write_text(&mut self, name: &str, content: &str) -> Result<(), AppError> {
        let path = self.dir.join(name);
        fs::write(&path, content)
            .map_err(|e| AppError::Config(format!("cannot write {name}: {e}")))?;
        let digest = Sha256::digest(content.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.checksums.insert(name.to_string(), hex);
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &Value) -> Result<(), AppError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| AppError::Config(format!("cannot serialize {name}: {e}")))?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn diagnostic(&mut self, key: &str, value: Value) {
        self.diagnostics.insert(key.to_string(), value);
    }

    /// Write `manifest.json` last, via a temp file and rename.
    pub fn finalize(self, config_echo: &str, started: &str) -> Result<(), AppError> {
        let manifest = json!({
            "tool": "blochlab",
            "version": env!("CARGO_PKG_VERSION"),
            "started": started,
            "finished": chrono::Utc::now().to_rfc3339(),
            "config": config_echo,
            "outputs": self.checksums,
            "diagnostics": Value::Object(self.diagnostics),
        });
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| AppError::Config(format!("manifest: {e}")))?;
        let tmp = self.dir.join("manifest.json.tmp");
        let final_path = self.dir.join("manifest.json");
        fs::write(&tmp, text).map_err(|e| AppError::Config(format!("manifest: {e}")))?;
        fs::rename(&tmp, &final_path).map_err(|e| AppError::Config(format!("manifest: {e}")))?;
        Ok(())
    }
}
