//! `item_id<TAB>path` listings handed to embedder tools.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub item_id: String,
    pub path: PathBuf,
}

/// Read a manifest. Relative paths resolve against the manifest's directory.
pub fn read_image_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut entries = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, file) = line.split_once('\t').ok_or_else(|| {
            Error::Format(format!(
                "{}:{}: expected item_id<TAB>path",
                path.display(),
                n + 1
            ))
        })?;
        if id.is_empty() || file.is_empty() || file.contains('\t') {
            return Err(Error::Format(format!(
                "{}:{}: expected item_id<TAB>path",
                path.display(),
                n + 1
            )));
        }
        if !seen.insert(id.to_owned()) {
            return Err(Error::Format(format!(
                "{}:{}: duplicate item id {id:?}",
                path.display(),
                n + 1
            )));
        }
        entries.push(ManifestEntry {
            item_id: id.to_owned(),
            path: base.join(file),
        });
    }
    Ok(entries)
}

pub fn write_image_manifest(entries: &[ManifestEntry], path: &Path) -> Result<()> {
    let mut out = String::new();
    for entry in entries {
        out.push_str(&entry.item_id);
        out.push('\t');
        out.push_str(&entry.path.to_string_lossy());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
