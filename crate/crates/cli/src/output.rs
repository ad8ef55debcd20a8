use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use inls_core::io::write_json;
use serde::Serialize;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const CONFIG_FILE: &str = "config.json";
pub const SCHEMA_FILE: &str = "schema_version";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    artifacts: Vec<&'a str>,
}

/// Output directory that remembers every file written into it.
pub struct RunDir {
    root: PathBuf,
    artifacts: BTreeSet<String>,
}

impl RunDir {
    /// Creates `root` and writes the config and schema-version files.
    pub fn create(root: &Path, config: &impl Serialize) -> Result<Self, CliError> {
        fs::create_dir_all(root)
            .map_err(|e| CliError::Internal(format!("{}: {e}", root.display())))?;
        let mut dir = Self {
            root: root.to_path_buf(),
            artifacts: BTreeSet::new(),
        };
        dir.json(CONFIG_FILE, config)?;
        dir.text(SCHEMA_FILE, &format!("{SCHEMA_VERSION}\n"))?;
        Ok(dir)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn json(&mut self, rel: &str, value: &(impl Serialize + ?Sized)) -> Result<(), CliError> {
        self.ensure_parent(rel)?;
        write_json(&self.path(rel), value).map_err(|e| CliError::Internal(e.to_string()))?;
        self.record(rel);
        Ok(())
    }

    pub fn text(&mut self, rel: &str, contents: &str) -> Result<(), CliError> {
        self.ensure_parent(rel)?;
        let path = self.path(rel);
        fs::write(&path, contents)
            .map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))?;
        self.record(rel);
        Ok(())
    }

    /// Registers a file written by other means.
    pub fn record(&mut self, rel: &str) {
        self.artifacts.insert(rel.to_string());
    }

    fn ensure_parent(&self, rel: &str) -> Result<(), CliError> {
        if let Some(parent) = self.path(rel).parent() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::Internal(format!("{}: {e}", parent.display())))?;
        }
        Ok(())
    }

    /// Writes the manifest listing every artifact, itself included.
    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.record(MANIFEST_FILE);
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            artifacts: self.artifacts.iter().map(String::as_str).collect(),
        };
        write_json(&self.path(MANIFEST_FILE), &manifest)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        Ok(self.root)
    }
}
