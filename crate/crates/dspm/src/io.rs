//! PNG images, superpixel label maps and class maps.
//!
//! Label maps are 16-bit grayscale PNGs holding one superpixel id per pixel;
//! 8-bit maps are accepted on input. Class maps are 8-bit grayscale.

use std::path::Path;

use dspm_core::decomp::{Decomposition, LabelPolicy};
use dspm_core::RgbImage;
use image::{DynamicImage, GrayImage, ImageBuffer, Luma, RgbImage as PngRgb};

use crate::error::{Error, Result};

fn open(path: &Path) -> Result<DynamicImage> {
    if !path.exists() {
        return Err(Error::Missing(path.to_path_buf()));
    }
    image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::format(path, other.to_string()),
    })
}

fn save(path: &Path, img: DynamicImage) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::format(path, other.to_string()),
    })
}

pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    let img = open(path)?.into_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    RgbImage::from_raw(w, h, img.into_raw()).ok_or_else(|| Error::format(path, "inconsistent image buffer"))
}

pub fn save_rgb(path: &Path, img: &RgbImage) -> Result<()> {
    let buf = PngRgb::from_raw(img.width() as u32, img.height() as u32, img.as_raw().to_vec())
        .expect("buffer matches dimensions");
    save(path, DynamicImage::ImageRgb8(buf))
}

/// Single-channel integer map as `(width, height, values)`.
fn load_gray(path: &Path) -> Result<(usize, usize, Vec<u32>)> {
    let (w, h, values) = match open(path)? {
        DynamicImage::ImageLuma16(b) => (b.width(), b.height(), b.into_raw().into_iter().map(u32::from).collect()),
        DynamicImage::ImageLuma8(b) => (b.width(), b.height(), b.into_raw().into_iter().map(u32::from).collect()),
        other => {
            return Err(Error::format(path, format!("expected a grayscale PNG, found {:?}", other.color())));
        }
    };
    Ok((w as usize, h as usize, values))
}

pub fn load_label_map(path: &Path) -> Result<(usize, usize, Vec<u32>)> {
    load_gray(path)
}

pub fn save_label_map(path: &Path, width: usize, height: usize, labels: &[u32]) -> Result<()> {
    let data = labels
        .iter()
        .map(|&l| u16::try_from(l).map_err(|_| Error::Parameter(format!("superpixel id {l} does not fit 16 bits"))))
        .collect::<Result<Vec<u16>>>()?;
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(width as u32, height as u32, data).expect("buffer matches dimensions");
    save(path, DynamicImage::ImageLuma16(buf))
}

/// Loads a label map and checks it against the image it decomposes.
pub fn load_decomposition(path: &Path, image: &RgbImage) -> Result<Decomposition> {
    let (w, h, labels) = load_label_map(path)?;
    if (w, h) != (image.width(), image.height()) {
        return Err(Error::format(
            path,
            format!("label map is {w}x{h}, image is {}x{}", image.width(), image.height()),
        ));
    }
    Decomposition::from_labels(w, h, labels, LabelPolicy::Remap).map_err(|e| Error::format(path, e.to_string()))
}

pub fn load_class_map(path: &Path, width: usize, height: usize) -> Result<Vec<u16>> {
    let (w, h, values) = load_gray(path)?;
    if (w, h) != (width, height) {
        return Err(Error::format(path, format!("class map is {w}x{h}, expected {width}x{height}")));
    }
    Ok(values.into_iter().map(|v| v.min(u16::MAX as u32) as u16).collect())
}

pub fn save_class_map(path: &Path, width: usize, height: usize, classes: &[u16]) -> Result<()> {
    let data = classes
        .iter()
        .map(|&c| u8::try_from(c).map_err(|_| Error::Parameter(format!("class {c} does not fit 8 bits"))))
        .collect::<Result<Vec<u8>>>()?;
    let buf = GrayImage::from_raw(width as u32, height as u32, data).expect("buffer matches dimensions");
    save(path, DynamicImage::ImageLuma8(buf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_map_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sp.png");
        let labels: Vec<u32> = (0..12).map(|i| if i % 4 < 2 { 0 } else { 300 }).collect();
        save_label_map(&p, 4, 3, &labels).unwrap();
        assert_eq!(load_label_map(&p).unwrap(), (4, 3, labels));
        assert!(matches!(save_label_map(&p, 1, 1, &[70000]), Err(Error::Parameter(_))));
    }

    #[test]
    fn decomposition_checks_dimensions() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sp.png");
        save_label_map(&p, 4, 3, &[0; 12]).unwrap();
        let img = RgbImage::filled(5, 3, [0, 0, 0]);
        assert_eq!(load_decomposition(&p, &img).unwrap_err().exit_code(), 4);
        let img = RgbImage::filled(4, 3, [0, 0, 0]);
        assert_eq!(load_decomposition(&p, &img).unwrap().len(), 1);
    }

    #[test]
    fn missing_and_malformed_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.png");
        assert_eq!(load_rgb(&missing).unwrap_err().exit_code(), 3);
        let junk = dir.path().join("junk.png");
        std::fs::write(&junk, b"not a png").unwrap();
        assert_eq!(load_rgb(&junk).unwrap_err().exit_code(), 4);
        let rgb = dir.path().join("rgb.png");
        save_rgb(&rgb, &RgbImage::filled(2, 2, [1, 2, 3])).unwrap();
        assert_eq!(load_label_map(&rgb).unwrap_err().exit_code(), 4);
        assert_eq!(load_rgb(&rgb).unwrap().pixel(1, 1), [1, 2, 3]);
    }
}
