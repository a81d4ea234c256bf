//! Output directory with provenance stamped into every file.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub command: &'static str,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub version: &'static str,
}

impl Provenance {
    fn line(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        format!(
            "command={} config_hash={} seed={} version={}",
            self.command, self.config_hash, seed, self.version
        )
    }
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    provenance: &'a Provenance,
    report: &'a T,
}

pub struct OutputDir {
    root: PathBuf,
    provenance: Provenance,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path, provenance: Provenance) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|source| CliError::Output {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            provenance,
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.root.join(name);
        std::fs::write(&path, body).map_err(|source| CliError::Output { path, source })?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Delimited text, preceded by a `#` provenance line.
    pub fn csv(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let text = format!("# {}\n{body}", self.provenance.line());
        self.write(name, &text)
    }

    /// `{"provenance": ..., "report": ...}`, pretty-printed.
    pub fn json<T: Serialize>(&mut self, name: &str, report: &T) -> Result<(), CliError> {
        let stamped = Stamped {
            provenance: &self.provenance,
            report,
        };
        let text = serde_json::to_string_pretty(&stamped).map_err(|e| CliError::Run(gfe_core::Error::Schema(e.to_string())))?;
        self.write(name, &(text + "\n"))
    }

    pub fn svg(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let text = match body.split_once('\n') {
            Some((head, rest)) => format!("{head}\n<!-- {} -->\n{rest}", self.provenance.line()),
            None => body.to_string(),
        };
        self.write(name, &text)
    }

    /// Write `manifest.json` listing everything produced.
    pub fn finish(mut self) -> Result<Vec<String>, CliError> {
        let mut files = self.files.clone();
        files.sort();
        self.json("manifest.json", &files)?;
        Ok(files)
    }
}

/// Render rows as comma-separated text with a header.
pub fn table<I, R>(header: &[&str], rows: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let map = |e: csv::Error| CliError::Run(gfe_core::Error::Schema(e.to_string()));
    w.write_record(header).map_err(map)?;
    for r in rows {
        w.write_record(r).map_err(map)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Run(gfe_core::Error::Schema(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
