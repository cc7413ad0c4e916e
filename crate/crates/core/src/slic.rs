//! SLIC over-segmentation: k-means in (L, a, b, x, y) from grid-initialized,
//! seed-jittered centers, followed by a connectivity pass that merges orphan
//! fragments into their largest adjacent region.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::decomp::{relabel_components, DecompError, Decomposition, LabelPolicy};
use crate::image::RgbImage;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SlicError {
    #[error("k_target {k} exceeds the pixel count {pixels}")]
    TooManySuperpixels { k: usize, pixels: usize },
    #[error("k_target and iterations must be at least 1")]
    InvalidParameter,
    #[error(transparent)]
    Decomp(#[from] DecompError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicParams {
    pub k_target: usize,
    pub compactness: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for SlicParams {
    fn default() -> Self {
        Self { k_target: 250, compactness: 10.0, iterations: 10, seed: 0 }
    }
}

pub fn generate_slic(image: &RgbImage, params: &SlicParams) -> Result<Decomposition, SlicError> {
    let (w, h) = (image.width(), image.height());
    let n = w * h;
    if params.k_target == 0 || params.iterations == 0 {
        return Err(SlicError::InvalidParameter);
    }
    if params.k_target > n {
        return Err(SlicError::TooManySuperpixels { k: params.k_target, pixels: n });
    }

    let lab: Vec<[f64; 3]> = image.as_raw().chunks_exact(3).map(|p| rgb_to_lab([p[0], p[1], p[2]])).collect();

    let step = libm::sqrt(n as f64 / params.k_target as f64);
    let nx = (libm::round(libm::sqrt(params.k_target as f64 * w as f64 / h as f64)) as usize).clamp(1, w);
    let ny = (libm::round(params.k_target as f64 / nx as f64) as usize).clamp(1, h);
    let (cell_w, cell_h) = (w as f64 / nx as f64, h as f64 / ny as f64);

    let mut rng = rng::seeded(params.seed, 0x51c);
    let jitter = 0.25 * cell_w.min(cell_h);
    let mut centers: Vec<[f64; 5]> = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let mut cx = (i as f64 + 0.5) * cell_w;
            let mut cy = (j as f64 + 0.5) * cell_h;
            if jitter > 0.5 {
                cx += rng.random_range(-jitter..=jitter);
                cy += rng.random_range(-jitter..=jitter);
            }
            let px = (cx as usize).min(w - 1);
            let py = (cy as usize).min(h - 1);
            let c = lab[py * w + px];
            centers.push([c[0], c[1], c[2], cx, cy]);
        }
    }

    let mut labels: Vec<u32> = (0..n)
        .map(|p| {
            let (x, y) = (p % w, p / w);
            let i = ((x as f64 / cell_w) as usize).min(nx - 1);
            let j = ((y as f64 / cell_h) as usize).min(ny - 1);
            (j * nx + i) as u32
        })
        .collect();

    let spatial = (params.compactness / step) * (params.compactness / step);
    let mut best = vec![f64::INFINITY; n];
    for _ in 0..params.iterations {
        best.iter_mut().for_each(|b| *b = f64::INFINITY);
        for (ci, c) in centers.iter().enumerate() {
            let x0 = libm::floor(c[3] - 2.0 * step).max(0.0) as usize;
            let y0 = libm::floor(c[4] - 2.0 * step).max(0.0) as usize;
            let x1 = (libm::ceil(c[3] + 2.0 * step).max(0.0) as usize).min(w - 1);
            let y1 = (libm::ceil(c[4] + 2.0 * step).max(0.0) as usize).min(h - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let p = y * w + x;
                    let l = &lab[p];
                    let dc =
                        (l[0] - c[0]) * (l[0] - c[0]) + (l[1] - c[1]) * (l[1] - c[1]) + (l[2] - c[2]) * (l[2] - c[2]);
                    let ds = (x as f64 - c[3]) * (x as f64 - c[3]) + (y as f64 - c[4]) * (y as f64 - c[4]);
                    let d = dc + ds * spatial;
                    if d < best[p] {
                        best[p] = d;
                        labels[p] = ci as u32;
                    }
                }
            }
        }
        let mut acc = vec![[0.0f64; 6]; centers.len()];
        for (p, &l) in labels.iter().enumerate() {
            let a = &mut acc[l as usize];
            let v = &lab[p];
            a[0] += v[0];
            a[1] += v[1];
            a[2] += v[2];
            a[3] += (p % w) as f64;
            a[4] += (p / w) as f64;
            a[5] += 1.0;
        }
        for (c, a) in centers.iter_mut().zip(&acc) {
            if a[5] > 0.0 {
                for d in 0..5 {
                    c[d] = a[d] / a[5];
                }
            }
        }
    }

    let labels = enforce_connectivity(w, h, &labels);
    Ok(Decomposition::from_labels(w, h, labels, LabelPolicy::Remap)?)
}

/// Keeps the largest component of each label and merges every other
/// component into the largest adjacent region.
fn enforce_connectivity(w: usize, h: usize, labels: &[u32]) -> Vec<u32> {
    let comp = relabel_components(w, h, labels);
    let ncomp = comp.iter().max().map_or(0, |&m| m as usize + 1);
    let nlabels = labels.iter().max().map_or(0, |&m| m as usize + 1);

    let mut size = vec![0usize; ncomp];
    let mut comp_label = vec![0u32; ncomp];
    for (p, &c) in comp.iter().enumerate() {
        size[c as usize] += 1;
        comp_label[c as usize] = labels[p];
    }
    let mut keeper = vec![usize::MAX; nlabels];
    for c in 0..ncomp {
        let l = comp_label[c] as usize;
        if keeper[l] == usize::MAX || size[c] > size[keeper[l]] {
            keeper[l] = c;
        }
    }

    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); ncomp];
    for y in 0..h {
        for x in 0..w {
            let a = comp[y * w + x];
            if x + 1 < w {
                let b = comp[y * w + x + 1];
                if a != b {
                    adj[a as usize].push(b);
                    adj[b as usize].push(a);
                }
            }
            if y + 1 < h {
                let b = comp[(y + 1) * w + x];
                if a != b {
                    adj[a as usize].push(b);
                    adj[b as usize].push(a);
                }
            }
        }
    }

    let mut parent: Vec<usize> = (0..ncomp).collect();
    fn find(parent: &mut [usize], mut c: usize) -> usize {
        while parent[c] != c {
            parent[c] = parent[parent[c]];
            c = parent[c];
        }
        c
    }
    let mut merged_size = size.clone();
    // components are numbered in raster order of their first pixel
    for c in 0..ncomp {
        if keeper[comp_label[c] as usize] == c {
            continue;
        }
        let root_c = find(&mut parent, c);
        let mut target = None;
        let mut target_size = 0usize;
        for &nb in &adj[c] {
            let r = find(&mut parent, nb as usize);
            if r == root_c {
                continue;
            }
            let s = merged_size[r];
            if s > target_size || (s == target_size && Some(r) < target) {
                target = Some(r);
                target_size = s;
            }
        }
        if let Some(t) = target {
            parent[root_c] = t;
            merged_size[t] += merged_size[root_c];
        }
    }

    let roots: Vec<u32> = comp.iter().map(|&c| find(&mut parent, c as usize) as u32).collect();
    relabel_components(w, h, &roots)
}

fn rgb_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    fn lin(c: u8) -> f64 {
        let c = c as f64 / 255.0;
        if c <= 0.04045 {
            c / 12.92
        } else {
            libm::pow((c + 0.055) / 1.055, 2.4)
        }
    }
    let (r, g, b) = (lin(rgb[0]), lin(rgb[1]), lin(rgb[2]));
    let x = (0.412_456_4 * r + 0.357_576_1 * g + 0.180_437_5 * b) / 0.950_47;
    let y = 0.212_672_9 * r + 0.715_152_2 * g + 0.072_175_0 * b;
    let z = (0.019_333_9 * r + 0.119_192_0 * g + 0.950_304_1 * b) / 1.088_83;
    fn f(t: f64) -> f64 {
        if t > 0.008_856 {
            libm::cbrt(t)
        } else {
            7.787 * t + 16.0 / 116.0
        }
    }
    let (fx, fy, fz) = (f(x), f(y), f(z));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(k: usize, seed: u64) -> SlicParams {
        SlicParams { k_target: k, compactness: 10.0, iterations: 10, seed }
    }

    #[test]
    fn uniform_gray_grid() {
        let img = RgbImage::filled(100, 100, [128, 128, 128]);
        let d = generate_slic(&img, &params(25, 3)).unwrap();
        assert_eq!(d.len(), 25);
        let sizes: Vec<usize> = (0..d.len()).map(|i| d.members(i).len()).collect();
        let mean = 10_000.0 / d.len() as f64;
        let spread = (*sizes.iter().max().unwrap() - *sizes.iter().min().unwrap()) as f64;
        assert!(spread < 0.5 * mean, "sizes {sizes:?}");
    }

    #[test]
    fn one_pixel() {
        let img = RgbImage::filled(1, 1, [9, 9, 9]);
        let d = generate_slic(&img, &params(1, 0)).unwrap();
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn too_many() {
        let img = RgbImage::filled(2, 2, [0, 0, 0]);
        assert_eq!(generate_slic(&img, &params(5, 0)), Err(SlicError::TooManySuperpixels { k: 5, pixels: 4 }));
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let img = RgbImage::from_fn(64, 48, |x, y| [(x * 4) as u8, (y * 5) as u8, ((x ^ y) * 3) as u8]);
        let a = generate_slic(&img, &params(30, 1)).unwrap();
        let b = generate_slic(&img, &params(30, 1)).unwrap();
        let c = generate_slic(&img, &params(30, 2)).unwrap();
        assert_eq!(a.labels(), b.labels());
        assert_ne!(a.labels(), c.labels());
    }

    #[test]
    fn lab_reference_points() {
        let w = rgb_to_lab([255, 255, 255]);
        assert!((w[0] - 100.0).abs() < 0.01 && w[1].abs() < 0.01 && w[2].abs() < 0.01);
        let k = rgb_to_lab([0, 0, 0]);
        assert!(k[0].abs() < 1e-9);
    }
}
