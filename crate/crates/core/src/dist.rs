//! Superpatch distances.
//!
//! Every function expects both structures to share one frame: equal
//! `radius`, offsets measured from their own `center`. [`distance_dual`]
//! brings the second argument into the first one's frame with
//! [`rescale_dsp`] when the radii differ.

use crate::decomp::Decomposition;
use crate::dsp::{rescale_dsp, DualSuperpatch};
use crate::features::DescriptorTable;
use crate::geom::{feature_dist, Point};

/// How the region term of the dual distance is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RegionMetric {
    /// All-pairs weighted average with displacement weights (quadratic cost).
    Quadratic,
    /// One projected counterpart per region, from the first argument only.
    Projected,
    /// Mean of both projection directions.
    #[default]
    ProjectedSymmetric,
}

impl RegionMetric {
    pub fn name(self) -> &'static str {
        match self {
            RegionMetric::Quadratic => "quadratic",
            RegionMetric::Projected => "projected",
            RegionMetric::ProjectedSymmetric => "symmetric",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "quadratic" => Some(RegionMetric::Quadratic),
            "projected" => Some(RegionMetric::Projected),
            "symmetric" => Some(RegionMetric::ProjectedSymmetric),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceConfig {
    /// Weight of the region term, in `[0, 1]`.
    pub alpha: f64,
    /// Displacement bandwidth of the quadratic distance.
    pub sigma1: f64,
    /// Radius of the spatial weights. Zero makes them uniform, which only
    /// makes sense for intra-region matching where each structure holds a
    /// single region.
    pub radius: f64,
    pub region_metric: RegionMetric,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum DistanceConfigError {
    #[error("alpha must lie in [0, 1], got {0}")]
    Alpha(f64),
    #[error("sigma1 must be positive, got {0}")]
    Sigma(f64),
    #[error("radius must be non-negative, got {0}")]
    Radius(f64),
}

impl DistanceConfig {
    pub fn new(alpha: f64, sigma1: f64, radius: f64) -> Self {
        Self { alpha, sigma1, radius, region_metric: RegionMetric::ProjectedSymmetric }
    }

    /// `sigma1 = sqrt(|I| / K) / 2` of the processed image.
    pub fn sigma_for(d: &Decomposition) -> f64 {
        0.5 * d.mean_spacing()
    }

    pub fn validate(&self) -> Result<(), DistanceConfigError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(DistanceConfigError::Alpha(self.alpha));
        }
        if !(self.sigma1 > 0.0) {
            return Err(DistanceConfigError::Sigma(self.sigma1));
        }
        if !(self.radius >= 0.0) {
            return Err(DistanceConfigError::Radius(self.radius));
        }
        Ok(())
    }
}

/// Decomposition and descriptors of the image a superpatch comes from.
#[derive(Debug, Clone, Copy)]
pub struct ImageRef<'a> {
    pub decomp: &'a Decomposition,
    pub table: &'a DescriptorTable,
}

/// Displacement weight between `x1` (around `c1`) and `x2` (around `c2`)
/// once both structures are registered on their centers.
pub fn weight_w(x1: Point, x2: Point, c1: Point, c2: Point, sigma1: f64) -> f64 {
    let registered = x1 - (c1 - c2);
    libm::exp(-x2.dist_sq(registered) / (sigma1 * sigma1))
}

/// Spatial weight of `x` around `c` for radius `r`.
pub fn weight_ws(x: Point, c: Point, r: f64) -> f64 {
    if r == 0.0 {
        return 1.0;
    }
    libm::exp(-x.dist_sq(c) / (2.0 * r * r))
}

/// Quadratic superpatch distance: weighted mean of all region pair feature
/// distances. Falls back to the central feature distance when every weight
/// underflows.
pub fn distance_quadratic(a: &DualSuperpatch, b: &DualSuperpatch, cfg: &DistanceConfig) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ra in &a.regions {
        let wa = weight_ws(ra.position, a.center, cfg.radius);
        for rb in &b.regions {
            let w = weight_w(ra.position, rb.position, a.center, b.center, cfg.sigma1)
                * wa
                * weight_ws(rb.position, b.center, cfg.radius);
            num += w * feature_dist(ra.feature, rb.feature);
            den += w;
        }
    }
    if den > 0.0 {
        num / den
    } else {
        feature_dist(a.central_region().feature, b.central_region().feature)
    }
}

/// Directed projected distance from `a` to `b`: each region of `a` is
/// compared with the superpixel of `b`'s image that contains its registered
/// barycenter.
pub fn distance_projected(a: &DualSuperpatch, b: &DualSuperpatch, image_b: ImageRef, cfg: &DistanceConfig) -> f64 {
    let scale = b.native_scale();
    let mut num = 0.0;
    let mut den = 0.0;
    for ra in &a.regions {
        let target = b.center + (ra.anchor - a.center) * scale;
        let s = image_b.decomp.superpixel_at_point(target);
        let w = weight_ws(ra.position, a.center, cfg.radius);
        num += w * feature_dist(ra.feature, image_b.table.region_feature(s));
        den += w;
    }
    if den > 0.0 {
        num / den
    } else {
        let s = image_b.decomp.superpixel_at_point(b.center);
        feature_dist(a.central_region().feature, image_b.table.region_feature(s))
    }
}

pub fn distance_projected_symmetric(
    a: &DualSuperpatch,
    image_a: ImageRef,
    b: &DualSuperpatch,
    image_b: ImageRef,
    cfg: &DistanceConfig,
) -> f64 {
    0.5 * (distance_projected(a, b, image_b, cfg) + distance_projected(b, a, image_a, cfg))
}

fn interfaces_directed(a: &DualSuperpatch, b: &DualSuperpatch, cfg: &DistanceConfig) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ia in &a.interfaces {
        let offset = ia.position - a.center;
        let mut best = f64::INFINITY;
        let mut best_feature: &[f32] = &[];
        for ib in &b.interfaces {
            let d = offset.dist_sq(ib.position - b.center);
            if d < best {
                best = d;
                best_feature = ib.feature;
            }
        }
        let w = weight_ws(ia.position, a.center, cfg.radius);
        num += w * feature_dist(ia.feature, best_feature);
        den += w;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Symmetric nearest-interface distance, or `None` when either side has no
/// interface.
pub fn distance_interfaces(a: &DualSuperpatch, b: &DualSuperpatch, cfg: &DistanceConfig) -> Option<f64> {
    if a.interfaces.is_empty() || b.interfaces.is_empty() {
        return None;
    }
    Some(0.5 * (interfaces_directed(a, b, cfg) + interfaces_directed(b, a, cfg)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualDistance {
    pub value: f64,
    /// The interface term was missing and the region term took full weight.
    pub interfaces_absent: bool,
}

pub fn region_distance(
    a: &DualSuperpatch,
    image_a: ImageRef,
    b: &DualSuperpatch,
    image_b: ImageRef,
    cfg: &DistanceConfig,
) -> f64 {
    match cfg.region_metric {
        RegionMetric::Quadratic => distance_quadratic(a, b, cfg),
        RegionMetric::Projected => distance_projected(a, b, image_b, cfg),
        RegionMetric::ProjectedSymmetric => distance_projected_symmetric(a, image_a, b, image_b, cfg),
    }
}

/// `alpha * regions + (1 - alpha) * interfaces`, with `b` rescaled to the
/// radius of `a` first.
pub fn distance_dual(
    a: &DualSuperpatch,
    image_a: ImageRef,
    b: &DualSuperpatch,
    image_b: ImageRef,
    cfg: &DistanceConfig,
) -> DualDistance {
    if b.radius != a.radius && a.radius > 0.0 && b.radius > 0.0 {
        let b = rescale_dsp(b, a.radius).expect("radii checked positive");
        return dual_same_frame(a, image_a, &b, image_b, cfg);
    }
    dual_same_frame(a, image_a, b, image_b, cfg)
}

pub(crate) fn dual_same_frame(
    a: &DualSuperpatch,
    image_a: ImageRef,
    b: &DualSuperpatch,
    image_b: ImageRef,
    cfg: &DistanceConfig,
) -> DualDistance {
    let interfaces = if cfg.alpha < 1.0 { distance_interfaces(a, b, cfg) } else { None };
    match interfaces {
        None => {
            DualDistance { value: region_distance(a, image_a, b, image_b, cfg), interfaces_absent: cfg.alpha < 1.0 }
        }
        Some(di) if cfg.alpha == 0.0 => DualDistance { value: di, interfaces_absent: false },
        Some(di) => DualDistance {
            value: cfg.alpha * region_distance(a, image_a, b, image_b, cfg) + (1.0 - cfg.alpha) * di,
            interfaces_absent: false,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{InterfaceEntry, RegionEntry};
    use alloc::vec;

    fn region(sp: usize, x: f64, y: f64, f: &[f32]) -> RegionEntry<'_> {
        RegionEntry { superpixel: sp, anchor: Point::new(x, y), position: Point::new(x, y), feature: f }
    }

    #[test]
    fn weight_w_values() {
        let c1 = Point::new(10.0, 10.0);
        let c2 = Point::new(40.0, 5.0);
        let x1 = Point::new(13.0, 8.0);
        let x2 = x1 - c1 + c2;
        assert_eq!(weight_w(x1, x2, c1, c2, 3.0), 1.0);

        let sigma = 0.5 * libm::sqrt(62_500.0 / 250.0);
        assert!((sigma - 7.905_694_150_420_948).abs() < 1e-12);
        let x2 = x2 + Point::new(sigma, 0.0);
        assert!((weight_w(x1, x2, c1, c2, sigma) - libm::exp(-1.0)).abs() < 1e-12);
        assert!(weight_w(x1, Point::new(1e6, 0.0), c1, c2, sigma) < 1e-300);
    }

    #[test]
    fn weight_ws_values() {
        let c = Point::new(3.0, 4.0);
        assert_eq!(weight_ws(c, c, 10.0), 1.0);
        assert!((weight_ws(c + Point::new(10.0, 0.0), c, 10.0) - 0.606_530_659_712_633_4).abs() < 1e-12);
        let off = Point::new(10.0, 10.0);
        assert!((weight_ws(c + off, c, 10.0) - libm::exp(-1.0)).abs() < 1e-12);
    }

    #[test]
    fn single_region_quadratic_is_feature_distance() {
        let (f1, f2) = ([0.0f32, 3.0], [4.0f32, 0.0]);
        let a = DualSuperpatch {
            center_id: 0,
            center: Point::new(1.0, 1.0),
            radius: 10.0,
            native_radius: 10.0,
            regions: vec![region(0, 1.0, 1.0, &f1)],
            interfaces: vec![],
        };
        let b = DualSuperpatch { center: Point::new(30.0, 7.0), regions: vec![region(0, 30.0, 7.0, &f2)], ..a.clone() };
        let cfg = DistanceConfig::new(1.0, 2.0, 10.0);
        assert!((distance_quadratic(&a, &b, &cfg) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_degenerate_falls_back() {
        let (f1, f2, f3) = ([1.0f32], [4.0f32], [9.0f32]);
        let a = DualSuperpatch {
            center_id: 0,
            center: Point::new(0.0, 0.0),
            radius: 1.0,
            native_radius: 1.0,
            regions: vec![region(0, 1e5, 0.0, &f3), region(1, 0.0, 0.0, &f1)],
            interfaces: vec![],
        };
        let mut a = a;
        a.center_id = 1;
        let b = DualSuperpatch { center_id: 0, regions: vec![region(0, -1e5, 0.0, &f2)], ..a.clone() };
        // every pair weight underflows to zero
        let cfg = DistanceConfig::new(1.0, 1e-3, 1e-3);
        let v = distance_quadratic(&a, &b, &cfg);
        assert!(v.is_finite());
    }

    #[test]
    fn interface_single_each() {
        let (f1, f2) = ([1.0f32, 0.0], [0.0f32, 1.0]);
        let a = DualSuperpatch {
            center_id: 0,
            center: Point::new(0.0, 0.0),
            radius: 5.0,
            native_radius: 5.0,
            regions: vec![],
            interfaces: vec![InterfaceEntry { index: 0, position: Point::new(1.0, 2.0), feature: &f1 }],
        };
        let b = DualSuperpatch {
            interfaces: vec![InterfaceEntry { index: 0, position: Point::new(-3.0, 0.0), feature: &f2 }],
            ..a.clone()
        };
        let cfg = DistanceConfig::new(0.5, 1.0, 5.0);
        assert!((distance_interfaces(&a, &b, &cfg).unwrap() - libm::sqrt(2.0)).abs() < 1e-12);
        assert_eq!(distance_interfaces(&a, &a, &cfg), Some(0.0));
        let empty = DualSuperpatch { interfaces: vec![], ..a.clone() };
        assert_eq!(distance_interfaces(&a, &empty, &cfg), None);
    }

    #[test]
    fn config_validation() {
        assert!(DistanceConfig::new(0.5, 1.0, 50.0).validate().is_ok());
        assert!(DistanceConfig::new(1.5, 1.0, 50.0).validate().is_err());
        assert!(DistanceConfig::new(0.5, 0.0, 50.0).validate().is_err());
        assert!(DistanceConfig::new(0.5, 1.0, -1.0).validate().is_err());
    }
}
