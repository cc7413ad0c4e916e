//! Superpixel decompositions: a dense label map plus the per-superpixel
//! indexes every later stage needs (barycenters, 4-adjacency, member lists).

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::geom::Point;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecompError {
    #[error("label map is {label_width}x{label_height} but image is {image_width}x{image_height}")]
    DimensionMismatch { label_width: usize, label_height: usize, image_width: usize, image_height: usize },
    #[error("label buffer holds {got} values, expected {expected}")]
    BufferLength { expected: usize, got: usize },
    #[error("decomposition has no pixels")]
    EmptyImage,
    #[error("superpixel id {id} has no pixels (label set is not contiguous)")]
    EmptyLabel { id: u32 },
    #[error("superpixel {id} is not 4-connected")]
    Disconnected { id: u32 },
    #[error("{0} superpixels exceed the 16-bit label limit")]
    TooManyLabels(usize),
}

/// What to do with label sets that skip ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelPolicy {
    /// Compact the ids to `0..K` in increasing order of the original value.
    #[default]
    Remap,
    /// Reject with [`DecompError::EmptyLabel`].
    Strict,
}

pub const MAX_SUPERPIXELS: usize = 1 << 16;

/// An immutable, validated superpixel decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    barycenters: Vec<Point>,
    adjacency: Vec<Vec<u32>>,
    members: Vec<Vec<u32>>,
    remapped: bool,
}

impl Decomposition {
    /// Validates a row-major label map and builds the indexes.
    pub fn from_labels(
        width: usize,
        height: usize,
        mut labels: Vec<u32>,
        policy: LabelPolicy,
    ) -> Result<Self, DecompError> {
        let n = width * height;
        if labels.len() != n {
            return Err(DecompError::BufferLength { expected: n, got: labels.len() });
        }
        if n == 0 {
            return Err(DecompError::EmptyImage);
        }

        let max = *labels.iter().max().unwrap() as usize;
        let mut present = vec![false; max + 1];
        for &l in &labels {
            present[l as usize] = true;
        }
        let mut remapped = false;
        if let Some(missing) = present.iter().position(|p| !p) {
            match policy {
                LabelPolicy::Strict => return Err(DecompError::EmptyLabel { id: missing as u32 }),
                LabelPolicy::Remap => {
                    let mut map = vec![u32::MAX; max + 1];
                    for (next, (old, _)) in present.iter().enumerate().filter(|(_, p)| **p).enumerate() {
                        map[old] = next as u32;
                    }
                    for l in labels.iter_mut() {
                        *l = map[*l as usize];
                    }
                    remapped = true;
                }
            }
        }
        let k = present.iter().filter(|p| **p).count();
        if k > MAX_SUPERPIXELS {
            return Err(DecompError::TooManyLabels(k));
        }

        let mut members: Vec<Vec<u32>> = vec![Vec::new(); k];
        for (i, &l) in labels.iter().enumerate() {
            members[l as usize].push(i as u32);
        }

        check_connectivity(width, height, &labels, &members)?;

        let barycenters = members
            .iter()
            .map(|m| {
                let (mut sx, mut sy) = (0.0f64, 0.0f64);
                for &p in m {
                    sx += (p as usize % width) as f64;
                    sy += (p as usize / width) as f64;
                }
                let c = m.len() as f64;
                Point::new(sx / c, sy / c)
            })
            .collect();

        let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); k];
        for y in 0..height {
            for x in 0..width {
                let a = labels[y * width + x];
                if x + 1 < width {
                    let b = labels[y * width + x + 1];
                    if a != b {
                        adjacency[a as usize].push(b);
                        adjacency[b as usize].push(a);
                    }
                }
                if y + 1 < height {
                    let b = labels[(y + 1) * width + x];
                    if a != b {
                        adjacency[a as usize].push(b);
                        adjacency[b as usize].push(a);
                    }
                }
            }
        }
        for adj in adjacency.iter_mut() {
            adj.sort_unstable();
            adj.dedup();
        }

        Ok(Self { width, height, labels, barycenters, adjacency, members, remapped })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of superpixels `K`.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `|I|`.
    pub fn pixel_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, x: usize, y: usize) -> usize {
        self.labels[y * self.width + x] as usize
    }

    pub fn barycenter(&self, id: usize) -> Point {
        self.barycenters[id]
    }

    pub fn barycenters(&self) -> &[Point] {
        &self.barycenters
    }

    pub fn neighbors(&self, id: usize) -> &[u32] {
        &self.adjacency[id]
    }

    pub fn members(&self, id: usize) -> &[u32] {
        &self.members[id]
    }

    /// True when the input label set skipped ids and was compacted.
    pub fn was_remapped(&self) -> bool {
        self.remapped
    }

    /// Mean superpixel spacing `sqrt(|I| / K)`.
    pub fn mean_spacing(&self) -> f64 {
        libm::sqrt(self.pixel_count() as f64 / self.len() as f64)
    }

    pub fn diagonal(&self) -> f64 {
        libm::hypot(self.width as f64, self.height as f64)
    }

    /// Label of the pixel nearest to `(x, y)`; coordinates outside the image
    /// are clamped onto its border, so every finite input resolves.
    pub fn superpixel_at(&self, x: f64, y: f64) -> usize {
        let px = clamp_round(x, self.width);
        let py = clamp_round(y, self.height);
        self.label(px, py)
    }

    pub fn superpixel_at_point(&self, p: Point) -> usize {
        self.superpixel_at(p.x, p.y)
    }
}

fn clamp_round(v: f64, extent: usize) -> usize {
    let r = libm::round(v);
    if r.is_nan() || r <= 0.0 {
        0
    } else if r >= (extent - 1) as f64 {
        extent - 1
    } else {
        r as usize
    }
}

fn check_connectivity(width: usize, height: usize, labels: &[u32], members: &[Vec<u32>]) -> Result<(), DecompError> {
    let mut seen = vec![false; labels.len()];
    let mut queue = VecDeque::new();
    for (id, m) in members.iter().enumerate() {
        let start = m[0] as usize;
        seen[start] = true;
        queue.push_back(start);
        let mut reached = 0usize;
        while let Some(p) = queue.pop_front() {
            reached += 1;
            let (x, y) = (p % width, p / width);
            let mut visit = |q: usize| {
                if !seen[q] && labels[q] as usize == id {
                    seen[q] = true;
                    queue.push_back(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < width {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - width);
            }
            if y + 1 < height {
                visit(p + width);
            }
        }
        if reached != m.len() {
            return Err(DecompError::Disconnected { id: id as u32 });
        }
    }
    Ok(())
}

/// Splits every label into its 4-connected components and compacts ids.
/// Used by generators whose output may contain fragmented labels.
pub fn relabel_components(width: usize, height: usize, labels: &[u32]) -> Vec<u32> {
    let mut out = vec![u32::MAX; labels.len()];
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..labels.len() {
        if out[start] != u32::MAX {
            continue;
        }
        let l = labels[start];
        out[start] = next;
        stack.push(start);
        while let Some(p) = stack.pop() {
            let (x, y) = (p % width, p / width);
            let mut nb = [usize::MAX; 4];
            if x > 0 {
                nb[0] = p - 1;
            }
            if x + 1 < width {
                nb[1] = p + 1;
            }
            if y > 0 {
                nb[2] = p - width;
            }
            if y + 1 < height {
                nb[3] = p + width;
            }
            for q in nb.into_iter().filter(|&q| q != usize::MAX) {
                if out[q] == u32::MAX && labels[q] == l {
                    out[q] = next;
                    stack.push(q);
                }
            }
        }
        next += 1;
    }
    out
}
