//! Synthetic benchmarks: oriented-texture mosaics with ground-truth
//! partitions, Gaussian corruption, nearest-neighbor rescaled copies, and
//! procedural scenes (plain and labeled) for matching and labeling suites.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::decomp::{relabel_components, DecompError, Decomposition, LabelPolicy};
use crate::image::RgbImage;
use crate::rng;

/// Number of distinct textures in the mosaic (a 4 x 4 grid).
pub const TEXTURE_COUNT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextureParams {
    /// Side of one texture tile in pixels.
    pub tile: usize,
    /// Each tile is split into `refine x refine` ground-truth regions.
    pub refine: usize,
    /// Stripe period in pixels.
    pub period: f64,
    pub amplitude: f64,
    pub seed: u64,
}

impl Default for TextureParams {
    fn default() -> Self {
        Self { tile: 64, refine: 2, period: 10.0, amplitude: 60.0, seed: 0 }
    }
}

/// Two mosaics of the same 16 textures in different layouts.
#[derive(Debug, Clone)]
pub struct TexturePair {
    pub images: [RgbImage; 2],
    pub decomps: [Decomposition; 2],
    /// Texture id of each superpixel, per image.
    pub texture_of: [Vec<usize>; 2],
}

/// Gradient direction (radians, unsigned) of texture `t`: angles evenly
/// spaced in `[0, pi)`.
pub fn texture_angle(t: usize) -> f64 {
    t as f64 * PI / TEXTURE_COUNT as f64
}

pub fn gen_textures(params: &TextureParams) -> TexturePair {
    let mut rng = rng::seeded(params.seed, 0x7e7);
    let side = 4 * params.tile;
    let refine = params.refine.clamp(1, params.tile);
    let build = |rng: &mut rng::Rng| {
        let mut layout: Vec<usize> = (0..TEXTURE_COUNT).collect();
        layout.shuffle(rng);
        let phases: Vec<f64> = (0..TEXTURE_COUNT).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        let image = RgbImage::from_fn(side, side, |x, y| {
            let tile = (y / params.tile) * 4 + x / params.tile;
            let t = layout[tile];
            let a = texture_angle(t);
            let u = x as f64 * libm::cos(a) + y as f64 * libm::sin(a);
            let v = 128.0 + params.amplitude * libm::sin(2.0 * PI * u / params.period + phases[tile]);
            let g = libm::round(v).clamp(0.0, 255.0) as u8;
            [g, g, g]
        });
        let sub = params.tile / refine;
        let per_row = 4 * refine;
        let labels: Vec<u32> = (0..side * side)
            .map(|p| {
                let (x, y) = (p % side, p / side);
                let (tx, ty) = (x / params.tile, y / params.tile);
                let (sx, sy) = (((x % params.tile) / sub).min(refine - 1), ((y % params.tile) / sub).min(refine - 1));
                ((ty * refine + sy) * per_row + tx * refine + sx) as u32
            })
            .collect();
        let decomp =
            Decomposition::from_labels(side, side, labels, LabelPolicy::Strict).expect("grid partition is valid");
        let texture_of = (0..decomp.len())
            .map(|id| {
                let p = decomp.members(id)[0] as usize;
                layout[(p / side / params.tile) * 4 + (p % side) / params.tile]
            })
            .collect();
        (image, decomp, texture_of)
    };
    let (i0, d0, t0) = build(&mut rng);
    let (i1, d1, t1) = build(&mut rng);
    TexturePair { images: [i0, i1], decomps: [d0, d1], texture_of: [t0, t1] }
}

/// I.i.d. Gaussian noise of the given variance on every channel, rounded and
/// clamped to `[0, 255]`.
pub fn add_noise(img: &RgbImage, variance: f64, seed: u64) -> RgbImage {
    if variance <= 0.0 {
        return img.clone();
    }
    let normal = Normal::new(0.0, libm::sqrt(variance)).expect("finite positive deviation");
    let mut rng = rng::seeded(seed, 0x2015e);
    let data =
        img.as_raw().iter().map(|&v| libm::round(v as f64 + normal.sample(&mut rng)).clamp(0.0, 255.0) as u8).collect();
    RgbImage::from_raw(img.width(), img.height(), data).expect("same dimensions")
}

/// Separable Gaussian blur with border replication, as an optical point
/// spread. `sigma <= 0` returns a copy.
pub fn blur(img: &RgbImage, sigma: f64) -> RgbImage {
    if sigma <= 0.0 {
        return img.clone();
    }
    let radius = libm::ceil(3.0 * sigma) as isize;
    let kernel: Vec<f64> = (-radius..=radius).map(|i| libm::exp(-((i * i) as f64) / (2.0 * sigma * sigma))).collect();
    let total: f64 = kernel.iter().sum();
    let (w, h) = (img.width(), img.height());
    let pass = |src: &[f64], horizontal: bool| -> Vec<f64> {
        let mut out = vec![0.0; src.len()];
        for y in 0..h {
            for x in 0..w {
                for c in 0..3 {
                    let mut acc = 0.0;
                    for (k, &wk) in kernel.iter().enumerate() {
                        let o = k as isize - radius;
                        let (sx, sy) = if horizontal {
                            ((x as isize + o).clamp(0, w as isize - 1) as usize, y)
                        } else {
                            (x, (y as isize + o).clamp(0, h as isize - 1) as usize)
                        };
                        acc += wk * src[(sy * w + sx) * 3 + c];
                    }
                    out[(y * w + x) * 3 + c] = acc / total;
                }
            }
        }
        out
    };
    let src: Vec<f64> = img.as_raw().iter().map(|&v| v as f64).collect();
    let out = pass(&pass(&src, true), false);
    RgbImage::from_raw(w, h, out.into_iter().map(to_u8).collect()).expect("same dimensions")
}

/// Nearest-neighbor resampling of an image, its decomposition and optional
/// per-pixel classes by `factor`.
#[derive(Debug, Clone)]
pub struct Resampled {
    pub image: RgbImage,
    pub decomp: Decomposition,
    pub classes: Option<Vec<u16>>,
    pub factor: f64,
}

pub fn resample(
    image: &RgbImage,
    decomp: &Decomposition,
    classes: Option<&[u16]>,
    factor: f64,
) -> Result<Resampled, DecompError> {
    let (w, h) = (image.width(), image.height());
    if factor == 1.0 {
        return Ok(Resampled {
            image: image.clone(),
            decomp: decomp.clone(),
            classes: classes.map(<[u16]>::to_vec),
            factor,
        });
    }
    let nw = (libm::round(w as f64 * factor) as usize).max(1);
    let nh = (libm::round(h as f64 * factor) as usize).max(1);
    let src = |x: usize, extent: usize| ((libm::floor((x as f64 + 0.5) / factor)) as usize).min(extent - 1);
    let xs: Vec<usize> = (0..nw).map(|x| src(x, w)).collect();
    let ys: Vec<usize> = (0..nh).map(|y| src(y, h)).collect();
    let out = RgbImage::from_fn(nw, nh, |x, y| image.pixel(xs[x], ys[y]));
    let mut labels = Vec::with_capacity(nw * nh);
    let mut cls = classes.map(|_| Vec::with_capacity(nw * nh));
    for &sy in &ys {
        for &sx in &xs {
            labels.push(decomp.labels()[sy * w + sx]);
            if let (Some(c), Some(src)) = (cls.as_mut(), classes) {
                c.push(src[sy * w + sx]);
            }
        }
    }
    // downsampling can split thin superpixels
    let labels = relabel_components(nw, nh, &labels);
    let decomp = Decomposition::from_labels(nw, nh, labels, LabelPolicy::Remap)?;
    Ok(Resampled { image: out, decomp, classes: cls, factor })
}

/// Factors used to build scaled-copy libraries.
pub const LIBRARY_FACTORS: [f64; 5] = [0.5, 2.0 / 3.0, 1.0, 1.5, 2.0];

/// Each entry is resampled by a factor drawn uniformly from `factors`.
pub fn gen_scaled_library(
    items: &[(RgbImage, Decomposition, Option<Vec<u16>>)],
    factors: &[f64],
    seed: u64,
) -> Result<Vec<Resampled>, DecompError> {
    let mut rng = rng::seeded(seed, 0x5ca1e);
    items
        .iter()
        .map(|(img, d, cls)| {
            let f = factors[rng.random_range(0..factors.len())];
            resample(img, d, cls.as_deref(), f)
        })
        .collect()
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

fn sq(v: f64) -> f64 {
    v * v
}

fn to_u8(v: f64) -> u8 {
    libm::round(v).clamp(0.0, 255.0) as u8
}

struct Shape {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    rot: f64,
    color: [f64; 3],
    stripe: Option<(f64, f64)>,
}

impl Shape {
    fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.cx, y - self.cy);
        let (c, s) = (libm::cos(self.rot), libm::sin(self.rot));
        let u = (dx * c + dy * s) / self.rx;
        let v = (-dx * s + dy * c) / self.ry;
        u * u + v * v <= 1.0
    }

    fn shade(&self, x: f64, y: f64) -> [f64; 3] {
        match self.stripe {
            None => self.color,
            Some((angle, period)) => {
                let u = x * libm::cos(angle) + y * libm::sin(angle);
                let m = 0.5 + 0.5 * libm::sin(2.0 * PI * u / period);
                [
                    self.color[0] * (0.55 + 0.45 * m),
                    self.color[1] * (0.55 + 0.45 * m),
                    self.color[2] * (0.55 + 0.45 * m),
                ]
            }
        }
    }
}

fn lattice(seed: u64, ix: i64, iy: i64) -> f64 {
    let mut z =
        seed ^ (ix as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (iy as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

/// Bilinear value noise in `[0, 1)` with the given lattice period.
fn value_noise(seed: u64, x: f64, y: f64, period: f64) -> f64 {
    let (u, v) = (x / period, y / period);
    let (ix, iy) = (libm::floor(u), libm::floor(v));
    let (fx, fy) = (u - ix, v - iy);
    let (sx, sy) = (fx * fx * (3.0 - 2.0 * fx), fy * fy * (3.0 - 2.0 * fy));
    let (ix, iy) = (ix as i64, iy as i64);
    let top = lerp(lattice(seed, ix, iy), lattice(seed, ix + 1, iy), sx);
    let bottom = lerp(lattice(seed, ix, iy + 1), lattice(seed, ix + 1, iy + 1), sx);
    lerp(top, bottom, sy)
}

/// Four octaves of value noise, periods 48 down to 6 pixels, in `[0, 1)`.
fn fractal_noise(seed: u64, x: f64, y: f64) -> f64 {
    let mut total = 0.0;
    let mut amp = 0.5;
    let mut norm = 0.0;
    for (octave, period) in [48.0, 24.0, 12.0, 6.0].into_iter().enumerate() {
        total += amp * value_noise(seed.wrapping_add(octave as u64), x, y, period);
        norm += amp;
        amp *= 0.5;
    }
    total / norm
}

/// A procedural scene of overlapping flat and striped ellipses over a smooth
/// background gradient, shaded by fractal noise so that no two areas are
/// exactly alike.
pub fn gen_scene(width: usize, height: usize, seed: u64) -> RgbImage {
    let mut rng = rng::seeded(seed, 0x5ce7e);
    let noise_seed: u64 = rng.random();
    let c0: [f64; 3] = core::array::from_fn(|_| rng.random_range(30.0..220.0));
    let c1: [f64; 3] = core::array::from_fn(|_| rng.random_range(30.0..220.0));
    let scale = width.min(height) as f64;
    let count = 10 + (width * height) / 4000;
    let shapes: Vec<Shape> = (0..count)
        .map(|_| Shape {
            cx: rng.random_range(0.0..width as f64),
            cy: rng.random_range(0.0..height as f64),
            rx: rng.random_range(0.04..0.22) * scale,
            ry: rng.random_range(0.04..0.22) * scale,
            rot: rng.random_range(0.0..PI),
            color: core::array::from_fn(|_| rng.random_range(20.0..240.0)),
            stripe: rng.random_bool(0.35).then(|| (rng.random_range(0.0..PI), rng.random_range(5.0..14.0))),
        })
        .collect();
    RgbImage::from_fn(width, height, |x, y| {
        let (fx, fy) = (x as f64, y as f64);
        let t = (fx / width as f64 + fy / height as f64) * 0.5;
        let mut c = [lerp(c0[0], c1[0], t), lerp(c0[1], c1[1], t), lerp(c0[2], c1[2], t)];
        for s in &shapes {
            if s.contains(fx, fy) {
                c = s.shade(fx, fy);
            }
        }
        let shade = 0.7 + 0.6 * fractal_noise(noise_seed, fx, fy);
        [to_u8(c[0] * shade), to_u8(c[1] * shade), to_u8(c[2] * shade)]
    })
}

/// Classes of [`gen_labeled_scene`].
pub const SCENE_CLASSES: [&str; 3] = ["background", "hair", "skin"];

/// A roughly registered portrait-like scene with per-pixel classes
/// (0 background, 1 hair, 2 skin).
pub fn gen_labeled_scene(width: usize, height: usize, seed: u64) -> (RgbImage, Vec<u16>) {
    let mut rng = rng::seeded(seed, 0xface);
    let (w, h) = (width as f64, height as f64);
    let cx = w * (0.5 + rng.random_range(-0.06..0.06));
    let cy = h * (0.55 + rng.random_range(-0.05..0.05));
    let rx = w * rng.random_range(0.22..0.3);
    let ry = h * rng.random_range(0.3..0.38);
    let hair_top = rng.random_range(0.25..0.5);
    let hair_side = rng.random_range(0.05..0.3);
    let skin: [f64; 3] = {
        let base = rng.random_range(0.0..1.0);
        [lerp(120.0, 235.0, base), lerp(80.0, 190.0, base), lerp(60.0, 160.0, base)]
    };
    let hair: [f64; 3] = {
        let tone = rng.random_range(0.0..1.0);
        [lerp(25.0, 190.0, tone), lerp(20.0, 150.0, tone), lerp(15.0, 90.0, tone)]
    };
    let bg0: [f64; 3] = core::array::from_fn(|_| rng.random_range(40.0..230.0));
    let bg1: [f64; 3] = core::array::from_fn(|_| rng.random_range(40.0..230.0));
    let bg_stripes = rng.random_bool(0.4).then(|| (rng.random_range(0.0..PI), rng.random_range(6.0..16.0)));
    let hair_angle = rng.random_range(1.2..1.9);
    let eye_dx = rx * 0.38;
    let eye_y = cy - ry * 0.1;
    let mouth_y = cy + ry * 0.45;

    let mut classes = vec![0u16; width * height];
    let img = RgbImage::from_fn(width, height, |x, y| {
        let (fx, fy) = (x as f64, y as f64);
        let (u, v) = ((fx - cx) / rx, (fy - cy) / ry);
        let r = u * u + v * v;
        let head = sq((fx - cx) / (rx * 1.18)) + sq((fy - cy + ry * 0.12) / (ry * 1.12));
        let class = if r <= 1.0 && v > -1.0 + hair_top && u.abs() < 1.0 - hair_side * (v < 0.0) as u8 as f64 {
            2
        } else if head <= 1.0 && fy < cy + ry * 0.4 {
            1
        } else {
            0
        };
        classes[y * width + x] = class;
        let c = match class {
            2 => {
                let shade = 1.0 - 0.25 * r;
                let mut c = [skin[0] * shade, skin[1] * shade, skin[2] * shade];
                let eye = |ex: f64| sq((fx - ex) / (rx * 0.14)) + sq((fy - eye_y) / (ry * 0.06)) <= 1.0;
                if eye(cx - eye_dx) || eye(cx + eye_dx) {
                    c = [40.0, 35.0, 35.0];
                }
                if sq((fx - cx) / (rx * 0.35)) + sq((fy - mouth_y) / (ry * 0.05)) <= 1.0 {
                    c = [skin[0] * 0.6, skin[1] * 0.35, skin[2] * 0.35];
                }
                c
            }
            1 => {
                let s = fx * libm::cos(hair_angle) + fy * libm::sin(hair_angle);
                let m = 0.8 + 0.2 * libm::sin(2.0 * PI * s / 4.0);
                [hair[0] * m, hair[1] * m, hair[2] * m]
            }
            _ => {
                let t = fy / h;
                let mut c = [lerp(bg0[0], bg1[0], t), lerp(bg0[1], bg1[1], t), lerp(bg0[2], bg1[2], t)];
                if let Some((a, p)) = bg_stripes {
                    let s = fx * libm::cos(a) + fy * libm::sin(a);
                    let m = 0.8 + 0.2 * libm::sin(2.0 * PI * s / p);
                    c = [c[0] * m, c[1] * m, c[2] * m];
                }
                c
            }
        };
        [to_u8(c[0]), to_u8(c[1]), to_u8(c[2])]
    });
    (img, classes)
}
