//! Brute-force reference implementations of the superpatch distances,
//! written directly from the formulas over plain tuples. They share no code
//! with the library beyond the input data.

#![allow(dead_code)]

pub type P = (f64, f64);

pub struct Region {
    pub anchor: P,
    pub position: P,
    pub feature: Vec<f32>,
}

pub struct Patch {
    pub center: P,
    /// Multiplier mapping a frame offset to source-image pixels.
    pub native_scale: f64,
    pub regions: Vec<Region>,
    pub interfaces: Vec<(P, Vec<f32>)>,
}

/// Label grid plus per-label region features of one image.
pub struct Grid {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
    pub features: Vec<Vec<f32>>,
}

fn l2(a: &[f32], b: &[f32]) -> f64 {
    let mut s = 0.0f64;
    for i in 0..a.len() {
        let d = a[i] as f64 - b[i] as f64;
        s += d * d;
    }
    s.sqrt()
}

fn gauss(dx: f64, dy: f64, denom: f64) -> f64 {
    (-(dx * dx + dy * dy) / denom).exp()
}

pub fn quadratic(a: &Patch, b: &Patch, sigma1: f64, r: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..a.regions.len() {
        for j in 0..b.regions.len() {
            let xi = a.regions[i].position;
            let xj = b.regions[j].position;
            // registered x_i: x_i - (c_a - c_b)
            let rx = xi.0 - (a.center.0 - b.center.0);
            let ry = xi.1 - (a.center.1 - b.center.1);
            let w = gauss(xj.0 - rx, xj.1 - ry, sigma1 * sigma1);
            let wi = gauss(xi.0 - a.center.0, xi.1 - a.center.1, 2.0 * r * r);
            let wj = gauss(xj.0 - b.center.0, xj.1 - b.center.1, 2.0 * r * r);
            num += w * wi * wj * l2(&a.regions[i].feature, &b.regions[j].feature);
            den += w * wi * wj;
        }
    }
    num / den
}

fn lookup(g: &Grid, x: f64, y: f64) -> usize {
    let mut px = x.round();
    let mut py = y.round();
    if px < 0.0 {
        px = 0.0;
    }
    if py < 0.0 {
        py = 0.0;
    }
    if px > (g.width - 1) as f64 {
        px = (g.width - 1) as f64;
    }
    if py > (g.height - 1) as f64 {
        py = (g.height - 1) as f64;
    }
    g.labels[py as usize * g.width + px as usize] as usize
}

pub fn projected(a: &Patch, b: &Patch, grid_b: &Grid, r: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for reg in &a.regions {
        let ox = (reg.anchor.0 - a.center.0) * b.native_scale;
        let oy = (reg.anchor.1 - a.center.1) * b.native_scale;
        let s = lookup(grid_b, b.center.0 + ox, b.center.1 + oy);
        let w = gauss(reg.position.0 - a.center.0, reg.position.1 - a.center.1, 2.0 * r * r);
        num += w * l2(&reg.feature, &grid_b.features[s]);
        den += w;
    }
    num / den
}

pub fn projected_symmetric(a: &Patch, grid_a: &Grid, b: &Patch, grid_b: &Grid, r: f64) -> f64 {
    (projected(a, b, grid_b, r) + projected(b, a, grid_a, r)) / 2.0
}

fn interfaces_one_way(a: &Patch, b: &Patch, r: f64) -> f64 {
    // full pairwise matrix of registered offsets
    let dist: Vec<Vec<f64>> = a
        .interfaces
        .iter()
        .map(|(pa, _)| {
            b.interfaces
                .iter()
                .map(|(pb, _)| {
                    let dx = (pa.0 - a.center.0) - (pb.0 - b.center.0);
                    let dy = (pa.1 - a.center.1) - (pb.1 - b.center.1);
                    (dx * dx + dy * dy).sqrt()
                })
                .collect()
        })
        .collect();
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, (pa, fa)) in a.interfaces.iter().enumerate() {
        let mut j_best = 0;
        for j in 1..b.interfaces.len() {
            if dist[i][j] < dist[i][j_best] {
                j_best = j;
            }
        }
        let w = gauss(pa.0 - a.center.0, pa.1 - a.center.1, 2.0 * r * r);
        num += w * l2(fa, &b.interfaces[j_best].1);
        den += w;
    }
    num / den
}

pub fn interfaces(a: &Patch, b: &Patch, r: f64) -> f64 {
    (interfaces_one_way(a, b, r) + interfaces_one_way(b, a, r)) / 2.0
}

/// SplitMix64, for instance generation independent of the library RNG.
pub struct Mix(pub u64);

impl Mix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn feature(&mut self, len: usize) -> Vec<f32> {
        (0..len).map(|_| self.range(0.0, 1.0) as f32).collect()
    }
}

/// Random partition of a `w x h` image into a grid of rectangles with random
/// cut positions. Rectangles contain their own barycenters.
pub fn random_grid_labels(rng: &mut Mix, w: usize, h: usize, cols: usize, rows: usize) -> Vec<u32> {
    let cuts = |rng: &mut Mix, extent: usize, parts: usize| {
        let mut c: Vec<usize> = Vec::new();
        while c.len() < parts - 1 {
            let v = 1 + rng.below(extent - 1);
            if !c.contains(&v) {
                c.push(v);
            }
        }
        c.sort();
        c
    };
    let xc = cuts(rng, w, cols);
    let yc = cuts(rng, h, rows);
    (0..w * h)
        .map(|p| {
            let (x, y) = (p % w, p / w);
            let cx = xc.iter().filter(|&&c| x >= c).count();
            let cy = yc.iter().filter(|&&c| y >= c).count();
            (cy * cols + cx) as u32
        })
        .collect()
}
