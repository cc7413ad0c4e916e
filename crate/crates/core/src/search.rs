//! Correspondence search between a query decomposition and a library.
//!
//! [`match_exhaustive`] is the exact oracle. [`dspm_search`] is the
//! randomized search: per run, random initialization followed by
//! alternating-direction sweeps where each superpixel tries its current
//! match, shifted matches of already visited neighbors, and random samples
//! in shrinking windows around its current match.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::dist::{dual_same_frame, DistanceConfig, DualDistance, ImageRef, RegionMetric};
use crate::dsp::{build_all, build_dsp, rescale_dsp, DualSuperpatch, ScaleSet};
use crate::rng;

/// One correspondence of a query superpixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchRecord {
    pub src_superpixel: usize,
    pub run: usize,
    pub lib_image: usize,
    pub lib_superpixel: usize,
    /// Library radius the match was found at.
    pub scale: f64,
    pub distance: f64,
    /// The interface term was missing on one side.
    pub interfaces_absent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScaleMode {
    /// Scale is a candidate attribute searched jointly with position.
    #[default]
    Joint,
    /// One independent search per library radius.
    PerScale,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub iterations: usize,
    pub runs: usize,
    pub seed: u64,
    pub scales: ScaleSet,
    pub alpha: f64,
    pub region_metric: RegionMetric,
    /// Overrides the bandwidth derived from the query decomposition.
    pub sigma1: Option<f64>,
    /// Bring library superpatches to the query radius before comparing.
    pub rescale: bool,
    pub scale_mode: ScaleMode,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            iterations: 5,
            runs: 50,
            seed: 0,
            scales: ScaleSet::single(50.0),
            alpha: 0.5,
            region_metric: RegionMetric::ProjectedSymmetric,
            sigma1: None,
            rescale: true,
            scale_mode: ScaleMode::Joint,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SearchError {
    #[error("library is empty")]
    EmptyLibrary,
    #[error("iterations and runs must be at least 1")]
    ZeroCount,
    #[error(transparent)]
    Scale(#[from] crate::dsp::DspError),
    #[error(transparent)]
    Distance(#[from] crate::dist::DistanceConfigError),
}

/// Query-side state shared by every run: the distance configuration and the
/// query superpatches at the source radius.
pub struct SearchContext<'a> {
    query: ImageRef<'a>,
    library: &'a [ImageRef<'a>],
    cfg: &'a SearchConfig,
    dist: DistanceConfig,
    query_patches: Vec<DualSuperpatch<'a>>,
    order: Vec<usize>,
}

impl<'a> SearchContext<'a> {
    pub fn new(query: ImageRef<'a>, library: &'a [ImageRef<'a>], cfg: &'a SearchConfig) -> Result<Self, SearchError> {
        if library.is_empty() {
            return Err(SearchError::EmptyLibrary);
        }
        if cfg.iterations == 0 || cfg.runs == 0 {
            return Err(SearchError::ZeroCount);
        }
        cfg.scales.validate()?;
        let dist = DistanceConfig {
            alpha: cfg.alpha,
            sigma1: cfg.sigma1.unwrap_or_else(|| DistanceConfig::sigma_for(query.decomp)),
            radius: cfg.scales.source_radius,
            region_metric: cfg.region_metric,
        };
        dist.validate()?;
        let query_patches = build_all(query.decomp, query.table, cfg.scales.source_radius);
        Ok(Self { query, library, cfg, dist, query_patches, order: raster_order(query) })
    }

    pub fn distance_config(&self) -> &DistanceConfig {
        &self.dist
    }

    /// Library superpatch expressed in the query frame.
    pub fn library_patch(&self, image: usize, sp: usize, scale: usize) -> DualSuperpatch<'a> {
        let lib = self.library[image];
        let r_lib = self.cfg.scales.library_radii[scale];
        let p = build_dsp(lib.decomp, lib.table, sp, r_lib);
        self.to_query_frame(p)
    }

    fn to_query_frame(&self, mut p: DualSuperpatch<'a>) -> DualSuperpatch<'a> {
        let r_src = self.cfg.scales.source_radius;
        if p.radius == r_src {
            p
        } else if self.cfg.rescale {
            rescale_dsp(&p, r_src).expect("radii validated")
        } else {
            // compared as-is: offsets keep their library pixel lengths
            p.radius = r_src;
            p.native_radius = r_src;
            p
        }
    }

    pub fn evaluate(&self, src: usize, image: usize, sp: usize, scale: usize) -> DualDistance {
        let b = self.library_patch(image, sp, scale);
        dual_same_frame(&self.query_patches[src], self.query, &b, self.library[image], &self.dist)
    }

    /// Spatial ratio between library and query offsets used by propagation.
    fn propagation_ratio(&self, scale: usize) -> f64 {
        if self.cfg.rescale {
            self.cfg.scales.library_radii[scale] / self.cfg.scales.source_radius
        } else {
            1.0
        }
    }
}

/// Superpixels sorted by barycenter raster position (row, then column).
fn raster_order(image: ImageRef) -> Vec<usize> {
    let b = image.decomp.barycenters();
    let mut order: Vec<usize> = (0..b.len()).collect();
    order.sort_by(|&i, &j| b[i].y.total_cmp(&b[j].y).then(b[i].x.total_cmp(&b[j].x)).then(i.cmp(&j)));
    order
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    image: usize,
    sp: usize,
    scale: usize,
    dist: DualDistance,
}

/// State of one randomized search run.
pub struct RunState<'c, 'a> {
    ctx: &'c SearchContext<'a>,
    scales: Vec<usize>,
    rng: rng::Rng,
    best: Vec<Candidate>,
    passes: usize,
}

impl<'c, 'a> RunState<'c, 'a> {
    /// Random initialization. `scales` restricts the searched library radii
    /// (indices into the scale set).
    pub fn new(ctx: &'c SearchContext<'a>, run: usize, stream: u64, scales: Vec<usize>) -> Self {
        let mut rng = rng::seeded(ctx.cfg.seed.wrapping_add(run as u64), stream);
        let best = (0..ctx.query.decomp.len())
            .map(|src| {
                let image = rng.random_range(0..ctx.library.len());
                let sp = rng.random_range(0..ctx.library[image].decomp.len());
                let scale = scales[rng.random_range(0..scales.len())];
                Candidate { image, sp, scale, dist: ctx.evaluate(src, image, sp, scale) }
            })
            .collect();
        Self { ctx, scales, rng, best, passes: 0 }
    }

    pub fn best_distances(&self) -> Vec<f64> {
        self.best.iter().map(|c| c.dist.value).collect()
    }

    fn try_candidate(&mut self, src: usize, image: usize, sp: usize, scale: usize) {
        let cur = self.best[src];
        if cur.image == image && cur.sp == sp && cur.scale == scale {
            return;
        }
        let dist = self.ctx.evaluate(src, image, sp, scale);
        if dist.value < cur.dist.value {
            self.best[src] = Candidate { image, sp, scale, dist };
        }
    }

    /// One sweep over all query superpixels; odd passes run in reverse.
    pub fn pass(&mut self) {
        let ctx = self.ctx;
        let n = ctx.order.len();
        let reverse = self.passes % 2 == 1;
        let mut rank = vec![0usize; n];
        for (pos, &sp) in ctx.order.iter().enumerate() {
            rank[sp] = if reverse { n - 1 - pos } else { pos };
        }
        for step in 0..n {
            let src = if reverse { ctx.order[n - 1 - step] } else { ctx.order[step] };
            let x_src = ctx.query.decomp.barycenter(src);

            for &nb in ctx.query.decomp.neighbors(src) {
                let nb = nb as usize;
                if rank[nb] >= rank[src] {
                    continue;
                }
                let m = self.best[nb];
                let lib = ctx.library[m.image].decomp;
                let shift = (x_src - ctx.query.decomp.barycenter(nb)) * ctx.propagation_ratio(m.scale);
                let sp = lib.superpixel_at_point(lib.barycenter(m.sp) + shift);
                self.try_candidate(src, m.image, sp, m.scale);
            }

            let cur = self.best[src];
            let lib = ctx.library[cur.image].decomp;
            let center = lib.barycenter(cur.sp);
            let floor = lib.mean_spacing();
            let mut window = lib.diagonal();
            while window >= floor {
                let x = center.x + self.rng.random_range(-window..=window);
                let y = center.y + self.rng.random_range(-window..=window);
                let sp = lib.superpixel_at(x, y);
                let scale = if self.scales.len() > 1 {
                    self.scales[self.rng.random_range(0..self.scales.len())]
                } else {
                    self.scales[0]
                };
                self.try_candidate(src, cur.image, sp, scale);
                window *= 0.5;
            }
        }
        self.passes += 1;
    }

    pub fn records(&self, run: usize) -> Vec<MatchRecord> {
        self.best
            .iter()
            .enumerate()
            .map(|(src, c)| MatchRecord {
                src_superpixel: src,
                run,
                lib_image: c.image,
                lib_superpixel: c.sp,
                scale: self.ctx.cfg.scales.library_radii[c.scale],
                distance: c.dist.value,
                interfaces_absent: c.dist.interfaces_absent,
            })
            .collect()
    }
}

/// All records of one run, ordered by (source superpixel, scale).
pub fn dspm_run(ctx: &SearchContext, run: usize) -> Vec<MatchRecord> {
    let nscales = ctx.cfg.scales.len();
    let groups: Vec<Vec<usize>> = match ctx.cfg.scale_mode {
        ScaleMode::Joint => vec![(0..nscales).collect()],
        ScaleMode::PerScale => (0..nscales).map(|s| vec![s]).collect(),
    };
    let mut out = Vec::new();
    for (stream, scales) in groups.into_iter().enumerate() {
        let mut state = RunState::new(ctx, run, stream as u64, scales);
        for _ in 0..ctx.cfg.iterations {
            state.pass();
        }
        out.extend(state.records(run));
    }
    sort_records(&mut out);
    out
}

/// Every run, sequentially. Records sorted by (source, run, scale).
pub fn dspm_search(query: ImageRef, library: &[ImageRef], cfg: &SearchConfig) -> Result<Vec<MatchRecord>, SearchError> {
    let ctx = SearchContext::new(query, library, cfg)?;
    let mut out: Vec<MatchRecord> = (0..cfg.runs).flat_map(|run| dspm_run(&ctx, run)).collect();
    sort_records(&mut out);
    Ok(out)
}

pub fn sort_records(records: &mut [MatchRecord]) {
    records.sort_by(|a, b| {
        a.src_superpixel.cmp(&b.src_superpixel).then(a.run.cmp(&b.run)).then(a.scale.total_cmp(&b.scale))
    });
}

/// Global minimum of the dual distance for each (query superpixel, library
/// radius). Ties resolve to the lowest (image, superpixel) pair.
pub fn match_exhaustive(
    query: ImageRef,
    library: &[ImageRef],
    cfg: &SearchConfig,
) -> Result<Vec<MatchRecord>, SearchError> {
    let ctx = SearchContext::new(query, library, cfg)?;
    let k = query.decomp.len();
    let nscales = cfg.scales.len();
    let mut best: Vec<Option<(usize, usize, DualDistance)>> = vec![None; k * nscales];
    for (image, lib) in library.iter().enumerate() {
        for scale in 0..nscales {
            let r_lib = cfg.scales.library_radii[scale];
            for sp in 0..lib.decomp.len() {
                let b = ctx.to_query_frame(build_dsp(lib.decomp, lib.table, sp, r_lib));
                for src in 0..k {
                    let d = dual_same_frame(&ctx.query_patches[src], query, &b, *lib, &ctx.dist);
                    let slot = &mut best[src * nscales + scale];
                    if slot.is_none_or(|(_, _, cur)| d.value < cur.value) {
                        *slot = Some((image, sp, d));
                    }
                }
            }
        }
    }
    Ok(best
        .into_iter()
        .enumerate()
        .map(|(i, b)| {
            let (image, sp, d) = b.expect("library is non-empty");
            MatchRecord {
                src_superpixel: i / nscales,
                run: 0,
                lib_image: image,
                lib_superpixel: sp,
                scale: cfg.scales.library_radii[i % nscales],
                distance: d.value,
                interfaces_absent: d.interfaces_absent,
            }
        })
        .collect())
}

/// Groups records by source superpixel, keeping runs `0..k`. Runs are
/// independent samples, so equal matches from different runs are kept.
pub fn knn_collect(records: &[MatchRecord], k: usize) -> Vec<Vec<MatchRecord>> {
    let n = records.iter().map(|r| r.src_superpixel + 1).max().unwrap_or(0);
    let mut out = vec![Vec::new(); n];
    for r in records.iter().filter(|r| r.run < k) {
        out[r.src_superpixel].push(*r);
    }
    for list in out.iter_mut() {
        list.sort_by(|a, b| a.run.cmp(&b.run).then(a.scale.total_cmp(&b.scale)));
    }
    out
}

/// Lowest-distance record per (source superpixel, scale) over all runs.
pub fn best_of_runs(records: &[MatchRecord]) -> Vec<MatchRecord> {
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| {
        a.src_superpixel
            .cmp(&b.src_superpixel)
            .then(a.scale.total_cmp(&b.scale))
            .then(a.distance.total_cmp(&b.distance))
            .then(a.run.cmp(&b.run))
    });
    sorted.dedup_by(|next, kept| next.src_superpixel == kept.src_superpixel && next.scale == kept.scale);
    sorted
}
