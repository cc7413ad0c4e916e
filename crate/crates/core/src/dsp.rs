//! Dual superpatches: the region and interface descriptors whose positions
//! fall within a radius of a central superpixel barycenter.

use alloc::vec::Vec;

use crate::decomp::Decomposition;
use crate::features::DescriptorTable;
use crate::geom::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionEntry<'a> {
    pub superpixel: usize,
    /// Superpixel barycenter `X_S`, used for inclusion and projection.
    pub anchor: Point,
    /// Barycenter of the eroded region `X_R`, used for spatial weights.
    pub position: Point,
    pub feature: &'a [f32],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceEntry<'a> {
    pub index: usize,
    pub position: Point,
    pub feature: &'a [f32],
}

/// A superpatch carrying both descriptor sets.
///
/// Positions are absolute. After [`rescale_dsp`] they are still absolute but
/// their offsets from `center` are expressed at `radius`; `native_radius`
/// keeps the extraction radius so offsets can be mapped back into the source
/// image.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSuperpatch<'a> {
    pub center_id: usize,
    pub center: Point,
    pub radius: f64,
    pub native_radius: f64,
    pub regions: Vec<RegionEntry<'a>>,
    pub interfaces: Vec<InterfaceEntry<'a>>,
}

impl<'a> DualSuperpatch<'a> {
    /// Factor mapping an offset in this structure's frame back to pixels of
    /// the image it was extracted from.
    pub fn native_scale(&self) -> f64 {
        if self.radius == self.native_radius {
            1.0
        } else {
            self.native_radius / self.radius
        }
    }

    /// Region entry of the central superpixel.
    pub fn central_region(&self) -> &RegionEntry<'a> {
        self.regions.iter().find(|r| r.superpixel == self.center_id).expect("central region is always present")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum DspError {
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
}

fn radius_error(r: f64) -> DspError {
    DspError::NonPositiveRadius(r)
}

/// Radii used on the query side (`source_radius`) and library side.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleSet {
    pub source_radius: f64,
    pub library_radii: Vec<f64>,
}

impl ScaleSet {
    pub fn single(radius: f64) -> Self {
        Self { source_radius: radius, library_radii: alloc::vec![radius] }
    }

    pub fn validate(&self) -> Result<(), DspError> {
        if !(self.source_radius > 0.0) {
            return Err(radius_error(self.source_radius));
        }
        if let Some(&r) = self.library_radii.iter().find(|&&r| !(r > 0.0)) {
            return Err(radius_error(r));
        }
        if self.library_radii.is_empty() {
            return Err(radius_error(0.0));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.library_radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.library_radii.is_empty()
    }
}

pub fn build_dsp<'a>(d: &Decomposition, table: &'a DescriptorTable, center: usize, radius: f64) -> DualSuperpatch<'a> {
    let c = d.barycenter(center);
    let r2 = radius * radius;
    let regions = d
        .barycenters()
        .iter()
        .enumerate()
        .filter(|&(i, b)| i == center || b.dist_sq(c) <= r2)
        .map(|(i, &b)| RegionEntry {
            superpixel: i,
            anchor: b,
            position: table.region_position(i),
            feature: table.region_feature(i),
        })
        .collect();
    let interfaces = table
        .interface_positions()
        .iter()
        .enumerate()
        .filter(|(_, p)| p.dist_sq(c) <= r2)
        .map(|(i, &p)| InterfaceEntry { index: i, position: p, feature: table.interface_feature(i) })
        .collect();
    DualSuperpatch { center_id: center, center: c, radius, native_radius: radius, regions, interfaces }
}

/// One superpatch per superpixel at a fixed radius.
pub fn build_all<'a>(d: &Decomposition, table: &'a DescriptorTable, radius: f64) -> Vec<DualSuperpatch<'a>> {
    (0..d.len()).map(|i| build_dsp(d, table, i, radius)).collect()
}

/// Scales every center-relative offset by `target_radius / p.radius`;
/// features are shared untouched.
pub fn rescale_dsp<'a>(p: &DualSuperpatch<'a>, target_radius: f64) -> Result<DualSuperpatch<'a>, DspError> {
    if !(p.radius > 0.0) {
        return Err(radius_error(p.radius));
    }
    if !(target_radius > 0.0) {
        return Err(radius_error(target_radius));
    }
    if target_radius == p.radius {
        return Ok(p.clone());
    }
    let ratio = target_radius / p.radius;
    let c = p.center;
    let scale = |q: Point| c + (q - c) * ratio;
    Ok(DualSuperpatch {
        center_id: p.center_id,
        center: c,
        radius: target_radius,
        native_radius: p.native_radius,
        regions: p
            .regions
            .iter()
            .map(|r| RegionEntry { anchor: scale(r.anchor), position: scale(r.position), ..*r })
            .collect(),
        interfaces: p.interfaces.iter().map(|i| InterfaceEntry { position: scale(i.position), ..*i }).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::LabelPolicy;
    use crate::features::FeatureConfig;
    use crate::image::RgbImage;

    fn grid(w: usize, h: usize, cell: usize) -> (RgbImage, Decomposition) {
        let cols = w.div_ceil(cell);
        let labels = (0..w * h).map(|p| ((p / w / cell) * cols + (p % w) / cell) as u32).collect();
        let d = Decomposition::from_labels(w, h, labels, LabelPolicy::Strict).unwrap();
        let img =
            RgbImage::from_fn(w, h, |x, y| [(x * 7 % 256) as u8, (y * 11 % 256) as u8, ((x + y) * 5 % 256) as u8]);
        (img, d)
    }

    #[test]
    fn radius_zero_keeps_center_only() {
        let (img, d) = grid(40, 40, 10);
        let t = DescriptorTable::compute(&img, &d, &FeatureConfig::default()).unwrap();
        let p = build_dsp(&d, &t, 5, 0.0);
        assert_eq!(p.regions.len(), 1);
        assert_eq!(p.regions[0].superpixel, 5);
        assert!(p.interfaces.iter().all(|i| i.position == p.center));
    }

    #[test]
    fn saturating_radius_takes_everything() {
        let (img, d) = grid(40, 30, 10);
        let t = DescriptorTable::compute(&img, &d, &FeatureConfig::default()).unwrap();
        let p = build_dsp(&d, &t, 0, d.diagonal());
        assert_eq!(p.regions.len(), d.len());
        assert_eq!(p.interfaces.len(), t.interface_count());
    }

    #[test]
    fn sizes_monotone_in_radius() {
        let (img, d) = grid(60, 60, 10);
        let t = DescriptorTable::compute(&img, &d, &FeatureConfig::default()).unwrap();
        let mut prev = (0, 0);
        for r in [0.0, 5.0, 10.0, 14.2, 20.0, 35.0, 100.0] {
            let p = build_dsp(&d, &t, 14, r);
            assert!(p.regions.len() >= prev.0 && p.interfaces.len() >= prev.1);
            for e in &p.regions {
                assert!(e.anchor.dist(p.center) <= r);
            }
            prev = (p.regions.len(), p.interfaces.len());
        }
    }

    #[test]
    fn rescale_identity_and_scaling() {
        let (img, d) = grid(60, 60, 10);
        let t = DescriptorTable::compute(&img, &d, &FeatureConfig::default()).unwrap();
        let p = build_dsp(&d, &t, 14, 25.0);
        assert_eq!(rescale_dsp(&p, 25.0).unwrap(), p);

        let q = rescale_dsp(&p, 50.0).unwrap();
        assert_eq!(q.radius, 50.0);
        assert_eq!(q.native_scale(), 0.5);
        for (a, b) in p.regions.iter().zip(&q.regions) {
            let (oa, ob) = (a.anchor - p.center, b.anchor - q.center);
            assert!((ob.x - 2.0 * oa.x).abs() < 1e-12 && (ob.y - 2.0 * oa.y).abs() < 1e-12);
            assert!(core::ptr::eq(a.feature, b.feature));
        }

        let back = rescale_dsp(&q, 25.0).unwrap();
        for (a, b) in p.regions.iter().zip(&back.regions) {
            assert!(a.position.dist(b.position) < 1e-9);
        }
        assert!(rescale_dsp(&p, 0.0).is_err());
    }

    #[test]
    fn scale_set_validation() {
        assert!(ScaleSet::single(50.0).validate().is_ok());
        let bad = ScaleSet { source_radius: 50.0, library_radii: alloc::vec![25.0, -1.0] };
        assert!(bad.validate().is_err());
    }
}
