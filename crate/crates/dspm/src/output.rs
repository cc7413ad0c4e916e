//! Label maps with their class-name sidecar, and accuracy metrics.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dspm_core::label::Accuracy;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

/// `labels.png` -> `labels.json`.
pub fn sidecar_path(labels: &Path) -> PathBuf {
    labels.with_extension("json")
}

/// Writes the 8-bit class map and a JSON object mapping class index to name.
pub fn write_labels(path: &Path, width: usize, height: usize, classes: &[u16], names: &[String]) -> Result<()> {
    io::save_class_map(path, width, height, classes)?;
    let map: BTreeMap<usize, &str> = names.iter().enumerate().map(|(i, n)| (i, n.as_str())).collect();
    let side = sidecar_path(path);
    let text = serde_json::to_string_pretty(&map).expect("string map serializes");
    std::fs::write(&side, text + "\n").map_err(|e| Error::io(&side, e))
}

/// Class names from a sidecar, ordered by index.
pub fn read_class_names(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let map: BTreeMap<usize, String> = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    if map.keys().copied().ne(0..map.len()) {
        return Err(Error::format(path, "class indices must be 0..n without gaps"));
    }
    Ok(map.into_values().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub superpixel_accuracy: f64,
    pub pixel_accuracy: f64,
}

impl From<Accuracy> for Metrics {
    fn from(a: Accuracy) -> Self {
        Self { superpixel_accuracy: a.superpixel_accuracy, pixel_accuracy: a.pixel_accuracy }
    }
}

impl Metrics {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain struct serializes")
    }
}
