//! Instance files, acceptance tables and output paths.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use cqoverlap::protocol::AcceptanceTable;
use cqoverlap::CQChannel;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{input, usage, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub seed: Option<u64>,
    pub params: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub schema_version: u32,
    pub channel: CQChannel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl InstanceFile {
    pub fn new(channel: CQChannel, provenance: Option<Provenance>) -> Self {
        Self { schema_version: SCHEMA_VERSION, channel, provenance }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
        let file: InstanceFile =
            serde_json::from_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(input(format!(
                "{}: schema_version {} is not supported (expected {SCHEMA_VERSION})",
                path.display(),
                file.schema_version
            )));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("instance serializes");
        text.push('\n');
        text
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TableRepr {
    Full { bits: usize, probs: BTreeMap<String, f64> },
    Bare(BTreeMap<String, f64>),
}

/// Reads `{"bits": m, "probs": {...}}` or a bare `{"0101": p, ...}` map whose
/// key length gives `m`.
pub fn load_table(path: &Path) -> CliResult<AcceptanceTable> {
    let text = fs::read_to_string(path).map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
    let repr: TableRepr = serde_json::from_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))?;
    let (bits, probs) = match repr {
        TableRepr::Full { bits, probs } => (bits, probs),
        TableRepr::Bare(probs) => {
            let bits = probs
                .keys()
                .next()
                .map(String::len)
                .ok_or_else(|| input(format!("{}: empty table needs an explicit \"bits\"", path.display())))?;
            (bits, probs)
        }
    };
    Ok(AcceptanceTable::new(bits, probs)?)
}

/// Rejects output paths whose parent directory does not exist or that name
/// a directory.
pub fn check_out_path(path: &Path) -> CliResult<()> {
    if path.as_os_str().is_empty() {
        return Err(usage("output path is empty"));
    }
    if path.is_dir() {
        return Err(usage(format!("output path {} is a directory", path.display())));
    }
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if !parent.is_dir() {
        return Err(usage(format!("output directory {} does not exist", parent.display())));
    }
    Ok(())
}

pub fn write_out(path: &Path, contents: &str) -> CliResult<()> {
    check_out_path(path)?;
    fs::write(path, contents).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}
