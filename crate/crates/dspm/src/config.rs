//! Matching parameters shared by the `match`, `label` and `sweep` commands.
//!
//! Values come from command-line flags, then an optional TOML file with the
//! same keys (underscores instead of dashes), then the built-in defaults.

use std::path::Path;

use clap::{ArgAction, Args};
use dspm_core::dist::RegionMetric;
use dspm_core::dsp::ScaleSet;
use dspm_core::features::{FeatureConfig, RegionFeatureKind};
use dspm_core::search::ScaleMode;
use dspm_core::SearchConfig;
use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchOptions {
    /// Superpatch radius of the query, in pixels [default: 50]
    #[arg(long)]
    pub radius: Option<f64>,
    /// Weight of the region term against the interface term [default: 0.5]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Erosion offset of region features, in pixels [default: 1]
    #[arg(long)]
    pub beta: Option<usize>,
    /// Randomized search passes per run [default: 5]
    #[arg(long)]
    pub iters: Option<usize>,
    /// Independent search runs [default: 50]
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Region feature: cumulative-rgb-hist-9, mean-rgb or hog
    #[arg(long)]
    pub feature: Option<String>,
    /// Region term: symmetric, projected or quadratic
    #[arg(long)]
    pub metric: Option<String>,
    /// Library radii, comma separated [default: the query radius]
    #[arg(long, value_delimiter = ',')]
    pub lib_radii: Option<Vec<f64>>,
    /// Rescale library superpatches to the query radius [default: true]
    #[arg(long, action = ArgAction::Set)]
    pub rescale: Option<bool>,
    /// joint or per-scale [default: joint]
    #[arg(long)]
    pub scale_mode: Option<String>,
    /// Displacement bandwidth; derived from the query when absent
    #[arg(long)]
    pub sigma1: Option<f64>,
}

impl MatchOptions {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }

    /// Fills unset fields from `lower`.
    pub fn or(self, lower: MatchOptions) -> MatchOptions {
        MatchOptions {
            radius: self.radius.or(lower.radius),
            alpha: self.alpha.or(lower.alpha),
            beta: self.beta.or(lower.beta),
            iters: self.iters.or(lower.iters),
            runs: self.runs.or(lower.runs),
            seed: self.seed.or(lower.seed),
            feature: self.feature.or(lower.feature),
            metric: self.metric.or(lower.metric),
            lib_radii: self.lib_radii.or(lower.lib_radii),
            rescale: self.rescale.or(lower.rescale),
            scale_mode: self.scale_mode.or(lower.scale_mode),
            sigma1: self.sigma1.or(lower.sigma1),
        }
    }

    pub fn resolve(&self) -> Result<Params> {
        let radius = self.radius.unwrap_or(50.0);
        let alpha = self.alpha.unwrap_or(0.5);
        let feature = match &self.feature {
            None => RegionFeatureKind::CumulativeRgbHist9,
            Some(n) => {
                RegionFeatureKind::from_name(n).ok_or_else(|| Error::Parameter(format!("unknown feature {n:?}")))?
            }
        };
        let metric = match &self.metric {
            None => RegionMetric::ProjectedSymmetric,
            Some(n) => RegionMetric::from_name(n).ok_or_else(|| Error::Parameter(format!("unknown metric {n:?}")))?,
        };
        let scale_mode = match self.scale_mode.as_deref() {
            None | Some("joint") => ScaleMode::Joint,
            Some("per-scale") => ScaleMode::PerScale,
            Some(n) => return Err(Error::Parameter(format!("unknown scale mode {n:?}"))),
        };
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Parameter(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        let scales = ScaleSet { source_radius: radius, library_radii: self.lib_radii.clone().unwrap_or(vec![radius]) };
        scales.validate().map_err(|e| Error::Parameter(e.to_string()))?;
        if let Some(s) = self.sigma1.filter(|s| !(*s > 0.0)) {
            return Err(Error::Parameter(format!("sigma1 must be positive, got {s}")));
        }
        let search = SearchConfig {
            iterations: self.iters.unwrap_or(5),
            runs: self.runs.unwrap_or(50),
            seed: self.seed.unwrap_or(0),
            scales,
            alpha,
            region_metric: metric,
            sigma1: self.sigma1,
            rescale: self.rescale.unwrap_or(true),
            scale_mode,
        };
        if search.iterations == 0 || search.runs == 0 {
            return Err(Error::Parameter("iters and runs must be at least 1".into()));
        }
        let features = FeatureConfig { beta: self.beta.unwrap_or(1), region_kind: feature, ..FeatureConfig::default() };
        Ok(Params { search, features })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub search: SearchConfig,
    pub features: FeatureConfig,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let p = MatchOptions::default().resolve().unwrap();
        assert_eq!(p.search.scales, ScaleSet::single(50.0));
        assert_eq!((p.search.alpha, p.search.iterations, p.search.runs), (0.5, 5, 50));
        assert_eq!(p.features.beta, 1);
        assert_eq!(p.features.region_kind, RegionFeatureKind::CumulativeRgbHist9);
    }

    #[test]
    fn flags_override_file() {
        let file: MatchOptions = toml::from_str("alpha = 0.25\nruns = 7\nlib_radii = [75.0, 100.0]\n").unwrap();
        let flags = MatchOptions { alpha: Some(1.0), ..MatchOptions::default() };
        let p = flags.or(file).resolve().unwrap();
        assert_eq!(p.search.alpha, 1.0);
        assert_eq!(p.search.runs, 7);
        assert_eq!(p.search.scales.library_radii, vec![75.0, 100.0]);
    }

    #[test]
    fn rejects_out_of_range() {
        for o in [
            MatchOptions { alpha: Some(1.5), ..MatchOptions::default() },
            MatchOptions { radius: Some(0.0), ..MatchOptions::default() },
            MatchOptions { runs: Some(0), ..MatchOptions::default() },
            MatchOptions { feature: Some("sift".into()), ..MatchOptions::default() },
        ] {
            assert!(matches!(o.resolve(), Err(Error::Parameter(_))));
        }
        assert!(toml::from_str::<MatchOptions>("alpah = 1.0").is_err());
    }
}
