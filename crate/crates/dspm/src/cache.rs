//! Descriptor cache files.
//!
//! All integers are little-endian.
//!
//! ```text
//! magic            4 bytes  "DSPF"
//! version          u32      1
//! block count      u32
//! per block:
//!   key            32 bytes SHA-256 of (image, labels, feature config)
//!   region count   u32      K
//!   region len     u32      L
//!   interface count u32     N
//!   interface len  u32      M
//!   region features    K*L  f32
//!   region positions   K*2  f64  (x, y)
//!   region fallbacks   K    u8   (1 when erosion left the region empty)
//!   interface features N*M  f32
//!   interface positions N*2 f64  (x, y)
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use dspm_core::decomp::Decomposition;
use dspm_core::features::{DescriptorTable, FeatureConfig};
use dspm_core::{Point, RgbImage};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"DSPF";
pub const VERSION: u32 = 1;

pub type Key = [u8; 32];

/// Content hash of everything a descriptor table depends on.
pub fn content_key(image: &RgbImage, decomp: &Decomposition, cfg: &FeatureConfig) -> Key {
    let mut h = Sha256::new();
    h.update((image.width() as u64).to_le_bytes());
    h.update((image.height() as u64).to_le_bytes());
    h.update(image.as_raw());
    for l in decomp.labels() {
        h.update(l.to_le_bytes());
    }
    for v in [cfg.beta, cfg.interface_window, cfg.hog_bins, cfg.interface_min_spacing] {
        h.update((v as u64).to_le_bytes());
    }
    h.update(cfg.region_kind.name().as_bytes());
    h.finalize().into()
}

/// In-memory view of a cache file.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct FeatureCache {
    blocks: BTreeMap<Key, DescriptorTable>,
}

impl FeatureCache {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn get(&self, key: &Key) -> Option<&DescriptorTable> {
        self.blocks.get(key)
    }

    pub fn insert(&mut self, key: Key, table: DescriptorTable) {
        self.blocks.insert(key, table);
    }

    /// Cached table for the inputs, computing and storing it on a miss.
    pub fn get_or_compute(
        &mut self,
        image: &RgbImage,
        decomp: &Decomposition,
        cfg: &FeatureConfig,
    ) -> Result<DescriptorTable> {
        let key = content_key(image, decomp, cfg);
        if let Some(t) = self.blocks.get(&key) {
            log::debug!("feature cache hit");
            return Ok(t.clone());
        }
        let t = DescriptorTable::compute(image, decomp, cfg)?;
        self.blocks.insert(key, t.clone());
        Ok(t)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.blocks.len() as u32).to_le_bytes());
        for (key, t) in &self.blocks {
            out.extend_from_slice(key);
            for v in [t.region_count(), t.region_len(), t.interface_count(), t.interface_len()] {
                out.extend_from_slice(&(v as u32).to_le_bytes());
            }
            t.region_features_raw().iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
            push_points(&mut out, t.region_positions());
            out.extend(t.region_fallbacks().iter().map(|&f| f as u8));
            t.interface_features_raw().iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
            push_points(&mut out, t.interface_positions());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err("bad magic".into());
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(format!("unsupported version {version}"));
        }
        let n = r.u32()?;
        let mut blocks = BTreeMap::new();
        for _ in 0..n {
            let key: Key = r.take(32)?.try_into().expect("32 bytes");
            let (k, l, ni, m) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
            let rf = r.f32s(k.checked_mul(l).ok_or("overflow")?)?;
            let rp = r.points(k)?;
            let fb = r.take(k)?.iter().map(|&b| b != 0).collect();
            let inf = r.f32s(ni.checked_mul(m).ok_or("overflow")?)?;
            let ip = r.points(ni)?;
            let t = DescriptorTable::from_parts(l, rf, rp, fb, m, inf, ip).ok_or("inconsistent block")?;
            blocks.insert(key, t);
        }
        if r.pos != bytes.len() {
            return Err("trailing bytes".into());
        }
        Ok(Self { blocks })
    }

    /// Reads a cache file; a missing file yields an empty cache.
    pub fn load(path: &Path) -> Result<Self> {
        match std::fs::read(path) {
            Ok(bytes) => Self::from_bytes(&bytes).map_err(|m| Error::format(path, m)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}

fn push_points(out: &mut Vec<u8>, pts: &[Point]) {
    for p in pts {
        out.extend_from_slice(&p.x.to_le_bytes());
        out.extend_from_slice(&p.y.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or("truncated file")?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f32s(&mut self, n: usize) -> std::result::Result<Vec<f32>, String> {
        let raw = self.take(n.checked_mul(4).ok_or("overflow")?)?;
        Ok(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect())
    }

    fn points(&mut self, n: usize) -> std::result::Result<Vec<Point>, String> {
        let raw = self.take(n.checked_mul(16).ok_or("overflow")?)?;
        Ok(raw
            .chunks_exact(16)
            .map(|c| {
                let x = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let y = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                Point::new(x, y)
            })
            .collect())
    }
}
