//! Descriptor preparation and parallel search over a worker pool.
//!
//! Runs are independent and seeded by their index, so the pool size only
//! changes wall time: results are merged and sorted after all runs finish.

use dspm_core::decomp::Decomposition;
use dspm_core::dist::ImageRef;
use dspm_core::features::{DescriptorTable, FeatureConfig};
use dspm_core::label::{decide_labels, fuse_labels, Bandwidth, GroundTruth, LabelScores};
use dspm_core::search::{dspm_run, knn_collect, sort_records, SearchContext};
use dspm_core::{MatchRecord, RgbImage, SearchConfig};
use rayon::prelude::*;

use crate::cache::FeatureCache;
use crate::error::{Error, Result};
use crate::output::Metrics;

/// An image with its decomposition, descriptors and optional ground truth.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub image: RgbImage,
    pub decomp: Decomposition,
    pub table: DescriptorTable,
    pub truth: Option<GroundTruth>,
}

impl Prepared {
    pub fn new(
        image: RgbImage,
        decomp: Decomposition,
        classes: Option<Vec<u16>>,
        n_classes: usize,
        features: &FeatureConfig,
    ) -> Result<Self> {
        let table = DescriptorTable::compute(&image, &decomp, features)?;
        Self::with_table(image, decomp, table, classes, n_classes)
    }

    pub fn with_table(
        image: RgbImage,
        decomp: Decomposition,
        table: DescriptorTable,
        classes: Option<Vec<u16>>,
        n_classes: usize,
    ) -> Result<Self> {
        let truth = classes.map(|c| GroundTruth::new(&decomp, c, n_classes)).transpose()?;
        Ok(Self { image, decomp, table, truth })
    }

    pub fn image_ref(&self) -> ImageRef<'_> {
        ImageRef { decomp: &self.decomp, table: &self.table }
    }
}

/// Prepares many images in parallel, reusing and filling `cache` if given.
pub fn prepare_all(
    items: Vec<(RgbImage, Decomposition, Option<Vec<u16>>)>,
    n_classes: usize,
    features: &FeatureConfig,
    cache: Option<&mut FeatureCache>,
    pool: &rayon::ThreadPool,
) -> Result<Vec<Prepared>> {
    features.validate()?;
    let cached: Vec<Option<DescriptorTable>> = match &cache {
        Some(c) => {
            items.iter().map(|(img, d, _)| c.get(&crate::cache::content_key(img, d, features)).cloned()).collect()
        }
        None => vec![None; items.len()],
    };
    let tables: Vec<DescriptorTable> = pool.install(|| {
        items
            .par_iter()
            .zip(cached)
            .map(|((img, d, _), hit)| match hit {
                Some(t) => Ok(t),
                None => DescriptorTable::compute(img, d, features),
            })
            .collect::<std::result::Result<Vec<_>, _>>()
    })?;
    if let Some(c) = cache {
        for ((img, d, _), t) in items.iter().zip(&tables) {
            c.insert(crate::cache::content_key(img, d, features), t.clone());
        }
    }
    items.into_iter().zip(tables).map(|((img, d, cls), t)| Prepared::with_table(img, d, t, cls, n_classes)).collect()
}

/// `threads == 0` uses one worker per core.
pub fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Parameter(format!("cannot start {threads} threads: {e}")))
}

pub fn library_refs(library: &[Prepared]) -> Vec<ImageRef<'_>> {
    library.iter().map(Prepared::image_ref).collect()
}

/// Randomized search of every query, with (query, run) pairs spread over
/// the pool. Records of each query are sorted by (source, run, scale).
pub fn search_many(
    queries: &[ImageRef],
    library: &[ImageRef],
    cfg: &SearchConfig,
    pool: &rayon::ThreadPool,
) -> Result<Vec<Vec<MatchRecord>>> {
    let contexts =
        queries.iter().map(|q| SearchContext::new(*q, library, cfg)).collect::<std::result::Result<Vec<_>, _>>()?;
    let jobs: Vec<(usize, usize)> = (0..queries.len()).flat_map(|q| (0..cfg.runs).map(move |r| (q, r))).collect();
    let results: Vec<Vec<MatchRecord>> =
        pool.install(|| jobs.par_iter().map(|&(q, run)| dspm_run(&contexts[q], run)).collect());
    let mut out = vec![Vec::new(); queries.len()];
    for ((q, _), recs) in jobs.into_iter().zip(results) {
        out[q].extend(recs);
    }
    for recs in &mut out {
        sort_records(recs);
    }
    Ok(out)
}

pub fn search(
    query: ImageRef,
    library: &[ImageRef],
    cfg: &SearchConfig,
    pool: &rayon::ThreadPool,
) -> Result<Vec<MatchRecord>> {
    Ok(search_many(&[query], library, cfg, pool)?.pop().expect("one query"))
}

/// Fused scores and decisions from the first `k` runs of `records`.
pub fn label_from_matches(
    records: &[MatchRecord],
    n_superpixels: usize,
    library: &[Prepared],
    n_classes: usize,
    scales: &[f64],
    k: usize,
) -> Result<(Vec<usize>, LabelScores)> {
    let mut grouped = knn_collect(records, k);
    grouped.resize(n_superpixels, Vec::new());
    let truths: Vec<GroundTruth> = library
        .iter()
        .enumerate()
        .map(|(i, p)| p.truth.clone().ok_or_else(|| Error::Parameter(format!("library image {i} has no class map"))))
        .collect::<Result<_>>()?;
    let scores = fuse_labels(&grouped, &truths, n_classes, scales, Bandwidth::Median)?;
    Ok((decide_labels(&scores), scores))
}

/// Mean distance between matched barycenters, for matches whose library
/// image shares the query's coordinate frame (for example a second
/// decomposition of the same picture).
pub fn mean_displacement(query: &Decomposition, library: &[&Decomposition], records: &[MatchRecord]) -> f64 {
    let total: f64 = records
        .iter()
        .map(|r| query.barycenter(r.src_superpixel).dist(library[r.lib_image].barycenter(r.lib_superpixel)))
        .sum();
    total / records.len() as f64
}

/// Labels every test image against `library` and averages the accuracies
/// over the test images. `k` limits the runs used in the fusion.
pub fn evaluate_labeling(
    test: &[Prepared],
    library: &[Prepared],
    n_classes: usize,
    cfg: &SearchConfig,
    k: usize,
    pool: &rayon::ThreadPool,
) -> Result<Metrics> {
    let records = search_many(&library_refs(test), &library_refs(library), cfg, pool)?;
    evaluate_records(test, library, n_classes, cfg, &records, k)
}

/// Accuracy from already computed per-test-image records.
pub fn evaluate_records(
    test: &[Prepared],
    library: &[Prepared],
    n_classes: usize,
    cfg: &SearchConfig,
    records: &[Vec<MatchRecord>],
    k: usize,
) -> Result<Metrics> {
    let mut sum = Metrics { superpixel_accuracy: 0.0, pixel_accuracy: 0.0 };
    for (q, recs) in test.iter().zip(records) {
        let truth = q.truth.as_ref().ok_or_else(|| Error::Parameter("test image has no class map".into()))?;
        let (pred, _) = label_from_matches(recs, q.decomp.len(), library, n_classes, &cfg.scales.library_radii, k)?;
        let acc = dspm_core::label::evaluate(&pred, truth, &q.decomp)?;
        sum.superpixel_accuracy += acc.superpixel_accuracy;
        sum.pixel_accuracy += acc.pixel_accuracy;
    }
    let n = test.len().max(1) as f64;
    Ok(Metrics { superpixel_accuracy: sum.superpixel_accuracy / n, pixel_accuracy: sum.pixel_accuracy / n })
}
