use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::output::{to_json, write_atomic};
use crate::error::{Error, Result};

pub const MANIFEST_FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

/// Record of one CLI run: what went in, with which parameters, and what
/// came out. Apart from `timestamp` it is a pure function of the inputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub toolkit_version: String,
    pub manifest_format: u32,
    pub timestamp: u64,
    pub inputs: Vec<FileDigest>,
    pub parameters: BTreeMap<String, Value>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        RunManifest {
            subcommand: subcommand.to_owned(),
            toolkit_version: env!("CARGO_PKG_VERSION").to_owned(),
            manifest_format: MANIFEST_FORMAT,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            inputs: Vec::new(),
            parameters: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        self.inputs.push(FileDigest {
            role: role.to_owned(),
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn param(&mut self, name: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("parameters serialize");
        self.parameters.insert(name.to_owned(), v);
    }

    pub fn output(&mut self, role: &str, path: &str, bytes: &[u8]) {
        self.outputs.push(FileDigest {
            role: role.to_owned(),
            path: path.to_owned(),
            sha256: sha256_hex(bytes),
        });
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let value = serde_json::to_value(self).expect("manifest serializes");
        write_atomic(path, &to_json(&value))
    }
}

/// `explicit`, else `<primary output>.manifest.json`, else
/// `charmt_<subcommand>.manifest.json` in the working directory.
pub fn manifest_path(explicit: Option<&Path>, primary: Option<&Path>, subcommand: &str) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_owned();
    }
    match primary {
        Some(p) => {
            let mut s = p.as_os_str().to_owned();
            s.push(".manifest.json");
            PathBuf::from(s)
        }
        None => PathBuf::from(format!("charmt_{subcommand}.manifest.json")),
    }
}
