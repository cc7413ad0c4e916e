//! Parameter sweeps emitted as CSV tables: matching displacement against
//! the radius for each model ingredient, against alpha, and labeling
//! accuracy over a grid of library radii with and without rescaling.

use std::io::Write;

use dspm_core::decomp::Decomposition;
use dspm_core::dist::{ImageRef, RegionMetric};
use dspm_core::dsp::ScaleSet;
use dspm_core::features::{DescriptorTable, FeatureConfig};
use dspm_core::search::{best_of_runs, match_exhaustive, ScaleMode};
use dspm_core::{RgbImage, SearchConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pipeline::{self, mean_displacement, Prepared};

/// One picture decomposed twice. Matching the first decomposition against
/// the second has a known answer: every barycenter should map to itself.
#[derive(Debug, Clone)]
pub struct DoubleDecomposition {
    pub image: RgbImage,
    pub query: Decomposition,
    pub reference: Decomposition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Matcher {
    /// Closest superpatch over the whole library.
    Exhaustive,
    /// Randomized search, best of its runs.
    Randomized,
}

/// Model variants compared by the radius sweep, from the plain projected
/// distance to the full dual model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variant {
    pub name: &'static str,
    pub metric: RegionMetric,
    pub beta: usize,
    pub alpha: f64,
}

pub const VARIANTS: [Variant; 4] = [
    Variant { name: "projected", metric: RegionMetric::Projected, beta: 0, alpha: 1.0 },
    Variant { name: "symmetric", metric: RegionMetric::ProjectedSymmetric, beta: 0, alpha: 1.0 },
    Variant { name: "symmetric+erosion", metric: RegionMetric::ProjectedSymmetric, beta: 1, alpha: 1.0 },
    Variant { name: "dual", metric: RegionMetric::ProjectedSymmetric, beta: 1, alpha: 0.5 },
];

/// Mean barycenter displacement over the suite (mean of per-image means).
pub fn suite_displacement(
    suite: &[DoubleDecomposition],
    features: &FeatureConfig,
    cfg: &SearchConfig,
    matcher: Matcher,
    pool: &rayon::ThreadPool,
) -> Result<f64> {
    features.validate()?;
    let per_image: Vec<f64> = pool.install(|| {
        suite
            .par_iter()
            .map(|item| -> Result<f64> {
                let ta = DescriptorTable::compute(&item.image, &item.query, features)?;
                let tb = DescriptorTable::compute(&item.image, &item.reference, features)?;
                let q = ImageRef { decomp: &item.query, table: &ta };
                let lib = [ImageRef { decomp: &item.reference, table: &tb }];
                let recs = match matcher {
                    Matcher::Exhaustive => match_exhaustive(q, &lib, cfg)?,
                    Matcher::Randomized => {
                        let ctx = dspm_core::search::SearchContext::new(q, &lib, cfg)?;
                        let all: Vec<_> = (0..cfg.runs).flat_map(|r| dspm_core::search::dspm_run(&ctx, r)).collect();
                        best_of_runs(&all)
                    }
                };
                Ok(mean_displacement(&item.query, &[&item.reference], &recs))
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok(per_image.iter().sum::<f64>() / per_image.len().max(1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusRow {
    pub radius: f64,
    pub variant: String,
    pub displacement: f64,
}

pub fn radius_sweep(
    suite: &[DoubleDecomposition],
    radii: &[f64],
    base: &SearchConfig,
    features: &FeatureConfig,
    matcher: Matcher,
    pool: &rayon::ThreadPool,
) -> Result<Vec<RadiusRow>> {
    let mut rows = Vec::new();
    for &radius in radii {
        for v in &VARIANTS {
            let cfg = SearchConfig {
                scales: ScaleSet::single(radius),
                alpha: v.alpha,
                region_metric: v.metric,
                ..base.clone()
            };
            let fc = FeatureConfig { beta: v.beta, ..*features };
            let displacement = suite_displacement(suite, &fc, &cfg, matcher, pool)?;
            log::info!("radius {radius} {}: {displacement:.3}", v.name);
            rows.push(RadiusRow { radius, variant: v.name.to_string(), displacement });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaRow {
    pub alpha: f64,
    pub displacement: f64,
}

pub fn alpha_sweep(
    suite: &[DoubleDecomposition],
    alphas: &[f64],
    base: &SearchConfig,
    features: &FeatureConfig,
    matcher: Matcher,
    pool: &rayon::ThreadPool,
) -> Result<Vec<AlphaRow>> {
    alphas
        .iter()
        .map(|&alpha| {
            let cfg = SearchConfig { alpha, ..base.clone() };
            let displacement = suite_displacement(suite, features, &cfg, matcher, pool)?;
            log::info!("alpha {alpha}: {displacement:.3}");
            Ok(AlphaRow { alpha, displacement })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleRow {
    /// Library radii, `+`-separated when several are fused.
    pub lib_radii: String,
    pub rescale: bool,
    pub superpixel_accuracy: f64,
    pub pixel_accuracy: f64,
}

/// Labeling accuracy for each library radius set, with and without
/// rescaling. Every set is searched one radius at a time and fused.
pub fn scale_grid(
    test: &[Prepared],
    library: &[Prepared],
    n_classes: usize,
    radius_sets: &[Vec<f64>],
    base: &SearchConfig,
    k: usize,
    pool: &rayon::ThreadPool,
) -> Result<Vec<ScaleRow>> {
    let mut rows = Vec::new();
    for set in radius_sets {
        if set.is_empty() {
            return Err(Error::Parameter("empty radius set".into()));
        }
        for rescale in [true, false] {
            let cfg = SearchConfig {
                scales: ScaleSet { source_radius: base.scales.source_radius, library_radii: set.clone() },
                scale_mode: ScaleMode::PerScale,
                rescale,
                ..base.clone()
            };
            let m = pipeline::evaluate_labeling(test, library, n_classes, &cfg, k, pool)?;
            let lib_radii = set.iter().map(f64::to_string).collect::<Vec<_>>().join("+");
            log::info!("radii {lib_radii} rescale {rescale}: {:.4}", m.superpixel_accuracy);
            rows.push(ScaleRow {
                lib_radii,
                rescale,
                superpixel_accuracy: m.superpixel_accuracy,
                pixel_accuracy: m.pixel_accuracy,
            });
        }
    }
    Ok(rows)
}

pub fn write_csv<W: Write, T: Serialize>(out: W, rows: &[T]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
