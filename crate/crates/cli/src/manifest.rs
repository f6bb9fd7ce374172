use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Everything needed to re-run a command: arguments, resolved configuration,
/// input digests and the artifacts it wrote.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub args: Vec<String>,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub artifacts: BTreeMap<String, PathBuf>,
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).map_err(|e| atransn::Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl Manifest {
    pub fn new(
        command: &str,
        seed: u64,
        config: impl Serialize,
        inputs: &[PathBuf],
    ) -> anyhow::Result<Self> {
        Ok(Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_owned(),
            args: std::env::args().skip(1).collect(),
            seed,
            config: serde_json::to_value(config)?,
            inputs: inputs
                .iter()
                .map(|p| {
                    Ok(InputDigest {
                        path: p.clone(),
                        sha256: sha256_file(p)?,
                    })
                })
                .collect::<anyhow::Result<_>>()?,
            artifacts: BTreeMap::new(),
        })
    }

    pub fn artifact(&mut self, name: &str, path: &Path) {
        self.artifacts.insert(name.to_owned(), path.to_owned());
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        write_json(path, self)
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| atransn::Error::io(path, e))?;
    Ok(())
}
