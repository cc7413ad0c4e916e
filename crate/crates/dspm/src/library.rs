//! Library manifests.
//!
//! A TOML file listing the images of a library. Paths are relative to the
//! manifest's directory.
//!
//! ```toml
//! classes = ["background", "hair", "skin"]
//!
//! [[image]]
//! image = "train_000.png"
//! labels = "train_000_sp.png"
//! classes = "train_000_gt.png"   # optional
//! ```

use std::path::{Path, PathBuf};

use dspm_core::decomp::Decomposition;
use dspm_core::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub classes: Vec<String>,
    #[serde(default, rename = "image")]
    pub images: Vec<Entry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub image: PathBuf,
    pub labels: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<PathBuf>,
}

/// One decoded library image.
#[derive(Debug, Clone)]
pub struct LibraryImage {
    pub image: RgbImage,
    pub decomp: Decomposition,
    pub classes: Option<Vec<u16>>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Manifest = toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        if m.images.is_empty() {
            return Err(Error::format(path, "manifest lists no images"));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::format(path, e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Decodes every image, resolving paths against `base`.
    pub fn read_images(&self, base: &Path) -> Result<Vec<LibraryImage>> {
        self.images
            .iter()
            .map(|e| {
                let image = io::load_rgb(&base.join(&e.image))?;
                let decomp = io::load_decomposition(&base.join(&e.labels), &image)?;
                let classes = match &e.classes {
                    Some(p) => Some(io::load_class_map(&base.join(p), image.width(), image.height())?),
                    None => None,
                };
                Ok(LibraryImage { image, decomp, classes })
            })
            .collect()
    }
}

/// Directory paths in a manifest are relative to.
pub fn base_dir(manifest: &Path) -> PathBuf {
    manifest.parent().map(Path::to_path_buf).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let text = r#"
classes = ["a", "b"]

[[image]]
image = "x.png"
labels = "x_sp.png"

[[image]]
image = "y.png"
labels = "y_sp.png"
classes = "y_gt.png"
"#;
        let m: Manifest = toml::from_str(text).unwrap();
        assert_eq!(m.images.len(), 2);
        assert_eq!(m.images[1].classes.as_deref(), Some(Path::new("y_gt.png")));
        let again: Manifest = toml::from_str(&toml::to_string(&m).unwrap()).unwrap();
        assert_eq!(again, m);
        assert!(toml::from_str::<Manifest>("[[image]]\nimage = \"x\"\n").is_err());
    }
}
