//! Match displacement maps in the usual optical-flow color coding, and
//! label overlays annotated with their accuracy.

use dspm_core::decomp::Decomposition;
use dspm_core::search::best_of_runs;
use dspm_core::{MatchRecord, Point, RgbImage};

const RY: usize = 15;
const YG: usize = 6;
const GC: usize = 4;
const CB: usize = 11;
const BM: usize = 13;
const MR: usize = 6;

/// The 55-entry hue wheel of the flow coding, channels in `[0, 1]`.
pub fn color_wheel() -> Vec<[f64; 3]> {
    let mut w = Vec::with_capacity(RY + YG + GC + CB + BM + MR);
    let ramp = |i: usize, n: usize| i as f64 / n as f64;
    w.extend((0..RY).map(|i| [1.0, ramp(i, RY), 0.0]));
    w.extend((0..YG).map(|i| [1.0 - ramp(i, YG), 1.0, 0.0]));
    w.extend((0..GC).map(|i| [0.0, 1.0, ramp(i, GC)]));
    w.extend((0..CB).map(|i| [0.0, 1.0 - ramp(i, CB), 1.0]));
    w.extend((0..BM).map(|i| [ramp(i, BM), 0.0, 1.0]));
    w.extend((0..MR).map(|i| [1.0, 0.0, 1.0 - ramp(i, MR)]));
    w
}

/// Color of a flow vector already divided by the maximum magnitude. Hue
/// encodes direction, saturation encodes magnitude; vectors longer than 1
/// are darkened.
pub fn flow_color(wheel: &[[f64; 3]], u: f64, v: f64) -> [u8; 3] {
    let n = wheel.len();
    let rad = (u * u + v * v).sqrt();
    let a = (-v).atan2(-u) / std::f64::consts::PI;
    let fk = (a + 1.0) / 2.0 * (n - 1) as f64;
    let k0 = (fk.floor() as usize).min(n - 1);
    let k1 = (k0 + 1) % n;
    let f = fk - k0 as f64;
    let mut out = [0u8; 3];
    for c in 0..3 {
        let mut col = (1.0 - f) * wheel[k0][c] + f * wheel[k1][c];
        col = if rad <= 1.0 { 1.0 - rad * (1.0 - col) } else { col * 0.75 };
        out[c] = (255.0 * col).round().clamp(0.0, 255.0) as u8;
    }
    out
}

/// Per-pixel color of the displacement from each query superpixel's
/// barycenter to its best match's barycenter.
pub fn displacement_map(query: &Decomposition, library: &[&Decomposition], records: &[MatchRecord]) -> RgbImage {
    let mut disp = vec![Point::new(0.0, 0.0); query.len()];
    for r in best_of_runs(records).iter().rev() {
        // lowest scale wins when several are present
        disp[r.src_superpixel] = library[r.lib_image].barycenter(r.lib_superpixel) - query.barycenter(r.src_superpixel);
    }
    let max = disp.iter().map(|d| d.norm()).fold(0.0, f64::max).max(1e-9);
    let wheel = color_wheel();
    let colors: Vec<[u8; 3]> = disp.iter().map(|d| flow_color(&wheel, d.x / max, d.y / max)).collect();
    RgbImage::from_fn(query.width(), query.height(), |x, y| colors[query.label(x, y)])
}

pub const PALETTE: [[u8; 3]; 8] = [
    [0, 0, 0],
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
];

/// Half-transparent class colors over `image`, with `caption` in the top
/// left corner.
pub fn label_overlay(image: &RgbImage, classes: &[u16], caption: &str) -> RgbImage {
    let w = image.width();
    let mut out = RgbImage::from_fn(w, image.height(), |x, y| {
        let base = image.pixel(x, y);
        let tint = PALETTE[classes[y * w + x] as usize % PALETTE.len()];
        [0, 1, 2].map(|c| ((base[c] as u16 + tint[c] as u16) / 2) as u8)
    });
    draw_text(&mut out, 2, 2, caption);
    out
}

/// Caption in the `SP 95.2% PX 94.1%` form.
pub fn accuracy_caption(superpixel: f64, pixel: f64) -> String {
    format!("SP {:.1}% PX {:.1}%", 100.0 * superpixel, 100.0 * pixel)
}

const GLYPH_W: usize = 5;
const GLYPH_H: usize = 7;

fn glyph(c: char) -> [u8; GLYPH_H] {
    match c {
        '0' => [0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e],
        '1' => [0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e],
        '2' => [0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f],
        '3' => [0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e],
        '4' => [0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02],
        '5' => [0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e],
        '6' => [0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e],
        '7' => [0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
        '8' => [0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e],
        '9' => [0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c],
        '.' => [0, 0, 0, 0, 0, 0x0c, 0x0c],
        '%' => [0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03],
        ':' => [0, 0x0c, 0x0c, 0, 0x0c, 0x0c, 0],
        'S' => [0x0f, 0x10, 0x10, 0x0e, 0x01, 0x01, 0x1e],
        'P' => [0x1e, 0x11, 0x11, 0x1e, 0x10, 0x10, 0x10],
        'X' => [0x11, 0x11, 0x0a, 0x04, 0x0a, 0x11, 0x11],
        _ => [0; GLYPH_H],
    }
}

/// White text on a black box; characters without a glyph print as blanks.
pub fn draw_text(img: &mut RgbImage, x0: usize, y0: usize, text: &str) {
    let n = text.chars().count();
    let (bw, bh) = (n * (GLYPH_W + 1) + 1, GLYPH_H + 2);
    for y in y0..(y0 + bh).min(img.height()) {
        for x in x0..(x0 + bw).min(img.width()) {
            img.set_pixel(x, y, [0, 0, 0]);
        }
    }
    for (i, c) in text.chars().enumerate() {
        let rows = glyph(c);
        for (dy, row) in rows.iter().enumerate() {
            for dx in 0..GLYPH_W {
                if row >> (GLYPH_W - 1 - dx) & 1 == 1 {
                    let (x, y) = (x0 + 1 + i * (GLYPH_W + 1) + dx, y0 + 1 + dy);
                    if x < img.width() && y < img.height() {
                        img.set_pixel(x, y, [255, 255, 255]);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wheel_directions() {
        let w = color_wheel();
        assert_eq!(w.len(), 55);
        assert_eq!(flow_color(&w, 0.0, 0.0), [255, 255, 255]);
        // rightward motion is red, downward motion is yellowish green
        let right = flow_color(&w, 1.0, 0.0);
        assert!(right[0] == 255 && right[1] < 20 && right[2] < 20, "{right:?}");
        let down = flow_color(&w, 0.0, 1.0);
        assert!(down[1] > down[2], "{down:?}");
        let far = flow_color(&w, 2.0, 0.0);
        assert_eq!(far[0], 191);
    }

    #[test]
    fn caption_renders_inside_image() {
        let mut img = RgbImage::filled(60, 12, [9, 9, 9]);
        draw_text(&mut img, 2, 2, &accuracy_caption(0.9524, 1.0));
        assert!(img.as_raw().contains(&255));
        assert_eq!(accuracy_caption(0.9524, 1.0), "SP 95.2% PX 100.0%");
    }
}
