//! Exemplar-based label transfer: weighted voting of matched library
//! superpixels per scale, a max-over-scales decision, and accuracy metrics.

use alloc::vec;
use alloc::vec::Vec;

use crate::decomp::Decomposition;
use crate::geom::median;
use crate::search::MatchRecord;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LabelError {
    #[error("class map has {got} pixels, decomposition has {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("class {class} is outside 0..{classes}")]
    ClassOutOfRange { class: usize, classes: usize },
    #[error("match references library image {image} superpixel {sp} without ground truth")]
    MissingGroundTruth { image: usize, sp: usize },
    #[error("prediction covers {got} superpixels, decomposition has {expected}")]
    PredictionLength { expected: usize, got: usize },
}

/// Per-pixel classes of one image and the majority class of each superpixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    classes: usize,
    pixels: Vec<u16>,
    majority: Vec<usize>,
}

impl GroundTruth {
    pub fn new(d: &Decomposition, pixels: Vec<u16>, classes: usize) -> Result<Self, LabelError> {
        if pixels.len() != d.pixel_count() {
            return Err(LabelError::SizeMismatch { expected: d.pixel_count(), got: pixels.len() });
        }
        if let Some(&c) = pixels.iter().find(|&&c| c as usize >= classes) {
            return Err(LabelError::ClassOutOfRange { class: c as usize, classes });
        }
        let mut counts = vec![0usize; classes];
        let majority = (0..d.len())
            .map(|id| {
                counts.iter_mut().for_each(|c| *c = 0);
                for &p in d.members(id) {
                    counts[pixels[p as usize] as usize] += 1;
                }
                argmax_lowest(counts.iter().map(|&c| c as f64))
            })
            .collect();
        Ok(Self { classes, pixels, majority })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    pub fn majority(&self, sp: usize) -> usize {
        self.majority[sp]
    }

    pub fn majorities(&self) -> &[usize] {
        &self.majority
    }
}

fn argmax_lowest(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Bandwidth of the similarity weight `exp(-D^2 / h^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Bandwidth {
    /// Median of the superpixel's match distances at that scale.
    #[default]
    Median,
    Fixed(f64),
}

pub const BANDWIDTH_FLOOR: f64 = 1e-12;

/// Fused class scores per (query superpixel, scale, class).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelScores {
    classes: usize,
    scales: Vec<f64>,
    scores: Vec<f64>,
    normalization: Vec<f64>,
    flagged: Vec<bool>,
}

impl LabelScores {
    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn superpixels(&self) -> usize {
        self.normalization.len() / self.scales.len().max(1)
    }

    pub fn score(&self, sp: usize, scale: usize, class: usize) -> f64 {
        self.scores[(sp * self.scales.len() + scale) * self.classes + class]
    }

    pub fn scores(&self, sp: usize, scale: usize) -> &[f64] {
        let o = (sp * self.scales.len() + scale) * self.classes;
        &self.scores[o..o + self.classes]
    }

    /// The normalization factor `W`.
    pub fn normalization(&self, sp: usize, scale: usize) -> f64 {
        self.normalization[sp * self.scales.len() + scale]
    }

    /// Set when the superpixel had no match at that scale (scores uniform).
    pub fn flagged(&self, sp: usize, scale: usize) -> bool {
        self.flagged[sp * self.scales.len() + scale]
    }
}

/// Weighted votes of the matches of each query superpixel, one score vector
/// per scale in `scales`. `matches[i]` lists the matches of superpixel `i`
/// (for instance from [`crate::search::knn_collect`]); `library_gt[j]` is the
/// ground truth of library image `j`.
pub fn fuse_labels(
    matches: &[Vec<MatchRecord>],
    library_gt: &[GroundTruth],
    classes: usize,
    scales: &[f64],
    bandwidth: Bandwidth,
) -> Result<LabelScores, LabelError> {
    let ns = scales.len();
    let mut scores = vec![0.0; matches.len() * ns * classes];
    let mut normalization = vec![0.0; matches.len() * ns];
    let mut flagged = vec![false; matches.len() * ns];
    let mut dists = Vec::new();
    for (sp, list) in matches.iter().enumerate() {
        for (si, &scale) in scales.iter().enumerate() {
            dists.clear();
            dists.extend(list.iter().filter(|m| m.scale == scale).map(|m| m.distance));
            let slot = sp * ns + si;
            let out = &mut scores[slot * classes..(slot + 1) * classes];
            if dists.is_empty() {
                out.iter_mut().for_each(|v| *v = 1.0 / classes as f64);
                flagged[slot] = true;
                continue;
            }
            let h = match bandwidth {
                Bandwidth::Median => median(&mut dists),
                Bandwidth::Fixed(h) => h,
            }
            .max(BANDWIDTH_FLOOR);
            let mut w_total = 0.0;
            for m in list.iter().filter(|m| m.scale == scale) {
                let gt = library_gt
                    .get(m.lib_image)
                    .filter(|g| m.lib_superpixel < g.majority.len())
                    .ok_or(LabelError::MissingGroundTruth { image: m.lib_image, sp: m.lib_superpixel })?;
                let class = gt.majority(m.lib_superpixel);
                if class >= classes {
                    return Err(LabelError::ClassOutOfRange { class, classes });
                }
                let w = libm::exp(-(m.distance * m.distance) / (h * h));
                out[class] += w;
                w_total += w;
            }
            normalization[slot] = w_total;
            if w_total > 0.0 {
                out.iter_mut().for_each(|v| *v /= w_total);
            } else {
                out.iter_mut().for_each(|v| *v = 1.0 / classes as f64);
                flagged[slot] = true;
            }
        }
    }
    Ok(LabelScores { classes, scales: scales.to_vec(), scores, normalization, flagged })
}

/// Class with the highest score over all scales; ties go to the lowest class.
pub fn decide_labels(scores: &LabelScores) -> Vec<usize> {
    (0..scores.superpixels())
        .map(|sp| {
            argmax_lowest(
                (0..scores.classes).map(|m| {
                    (0..scores.scales.len()).map(|s| scores.score(sp, s, m)).fold(f64::NEG_INFINITY, f64::max)
                }),
            )
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accuracy {
    pub superpixel_accuracy: f64,
    pub pixel_accuracy: f64,
}

pub fn evaluate(pred: &[usize], gt: &GroundTruth, d: &Decomposition) -> Result<Accuracy, LabelError> {
    if pred.len() != d.len() {
        return Err(LabelError::PredictionLength { expected: d.len(), got: pred.len() });
    }
    let sp_ok = pred.iter().zip(&gt.majority).filter(|(p, g)| p == g).count();
    let px_ok = d.labels().iter().zip(&gt.pixels).filter(|(&l, &c)| pred[l as usize] == c as usize).count();
    Ok(Accuracy {
        superpixel_accuracy: sp_ok as f64 / d.len() as f64,
        pixel_accuracy: px_ok as f64 / d.pixel_count() as f64,
    })
}

/// Paints each superpixel with its predicted class.
pub fn paint(pred: &[usize], d: &Decomposition) -> Vec<u16> {
    d.labels().iter().map(|&l| pred[l as usize] as u16).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::LabelPolicy;

    fn rec(src: usize, run: usize, sp: usize, scale: f64, distance: f64) -> MatchRecord {
        MatchRecord {
            src_superpixel: src,
            run,
            lib_image: 0,
            lib_superpixel: sp,
            scale,
            distance,
            interfaces_absent: false,
        }
    }

    /// Library of four one-pixel superpixels with classes 0, 0, 1, 2.
    fn library() -> Vec<GroundTruth> {
        let d = Decomposition::from_labels(4, 1, vec![0, 1, 2, 3], LabelPolicy::Strict).unwrap();
        vec![GroundTruth::new(&d, vec![0, 0, 1, 2], 3).unwrap()]
    }

    #[test]
    fn unanimity() {
        let m = vec![vec![rec(0, 0, 0, 50.0, 1.0), rec(0, 1, 1, 50.0, 3.0)]];
        let s = fuse_labels(&m, &library(), 3, &[50.0], Bandwidth::Median).unwrap();
        assert_eq!(s.scores(0, 0), &[1.0, 0.0, 0.0]);
        assert_eq!(decide_labels(&s), vec![0]);
    }

    #[test]
    fn balanced_split() {
        let m = vec![vec![rec(0, 0, 0, 50.0, 2.0), rec(0, 1, 2, 50.0, 2.0)]];
        let s = fuse_labels(&m, &library(), 3, &[50.0], Bandwidth::Median).unwrap();
        assert_eq!(s.scores(0, 0), &[0.5, 0.5, 0.0]);
        assert_eq!(decide_labels(&s), vec![0]);
    }

    #[test]
    fn hand_computed_weights() {
        let h = 0.7;
        let m = vec![vec![rec(0, 0, 0, 50.0, 0.0), rec(0, 1, 1, 50.0, h), rec(0, 2, 2, 50.0, 2.0 * h)]];
        let s = fuse_labels(&m, &library(), 3, &[50.0], Bandwidth::Median).unwrap();
        let (w0, w1, w2) = (1.0, libm::exp(-1.0), libm::exp(-4.0));
        let w = w0 + w1 + w2;
        assert!((s.normalization(0, 0) - w).abs() < 1e-12);
        assert!((s.score(0, 0, 0) - (w0 + w1) / w).abs() < 1e-12);
        assert!((s.score(0, 0, 1) - w2 / w).abs() < 1e-12);
        assert_eq!(s.score(0, 0, 2), 0.0);
    }

    #[test]
    fn all_zero_distances_use_floor() {
        let m = vec![vec![rec(0, 0, 0, 50.0, 0.0), rec(0, 1, 2, 50.0, 0.0)]];
        let s = fuse_labels(&m, &library(), 3, &[50.0], Bandwidth::Median).unwrap();
        assert_eq!(s.scores(0, 0), &[0.5, 0.5, 0.0]);
    }

    #[test]
    fn missing_scale_is_flagged_uniform() {
        let m = vec![vec![rec(0, 0, 0, 50.0, 1.0)]];
        let s = fuse_labels(&m, &library(), 3, &[50.0, 75.0], Bandwidth::Median).unwrap();
        assert!(!s.flagged(0, 0));
        assert!(s.flagged(0, 1));
        for c in 0..3 {
            assert!((s.score(0, 1, c) - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn max_over_scales_dominates() {
        // class 0 wins at scale 25 with 0.6; class 2 reaches 0.9 at 75
        let m = vec![vec![
            rec(0, 0, 0, 25.0, 1.0),
            rec(0, 1, 0, 25.0, 1.0),
            rec(0, 2, 0, 25.0, 1.0),
            rec(0, 3, 2, 25.0, 1.0),
            rec(0, 4, 3, 25.0, 1.0),
            rec(0, 0, 3, 75.0, 1.0),
            rec(0, 1, 3, 75.0, 1.0),
            rec(0, 2, 3, 75.0, 1.0),
            rec(0, 3, 3, 75.0, 1.0),
            rec(0, 4, 3, 75.0, 1.0),
            rec(0, 5, 3, 75.0, 1.0),
            rec(0, 6, 3, 75.0, 1.0),
            rec(0, 7, 3, 75.0, 1.0),
            rec(0, 8, 3, 75.0, 1.0),
            rec(0, 9, 0, 75.0, 1.0),
        ]];
        let s = fuse_labels(&m, &library(), 3, &[25.0, 75.0], Bandwidth::Median).unwrap();
        assert!((s.score(0, 0, 0) - 0.6).abs() < 1e-12);
        assert!((s.score(0, 1, 2) - 0.9).abs() < 1e-12);
        assert_eq!(decide_labels(&s), vec![2]);
    }

    #[test]
    fn missing_ground_truth() {
        let mut r = rec(0, 0, 9, 50.0, 1.0);
        assert!(fuse_labels(&[vec![r]], &library(), 3, &[50.0], Bandwidth::Median).is_err());
        r.lib_superpixel = 0;
        r.lib_image = 3;
        assert!(fuse_labels(&[vec![r]], &library(), 3, &[50.0], Bandwidth::Median).is_err());
    }

    #[test]
    fn accuracy_perfect_and_wrong() {
        let d = Decomposition::from_labels(4, 1, vec![0, 0, 1, 1], LabelPolicy::Strict).unwrap();
        let gt = GroundTruth::new(&d, vec![0, 0, 1, 1], 2).unwrap();
        let a = evaluate(&[0, 1], &gt, &d).unwrap();
        assert_eq!((a.superpixel_accuracy, a.pixel_accuracy), (1.0, 1.0));
        let a = evaluate(&[1, 0], &gt, &d).unwrap();
        assert_eq!((a.superpixel_accuracy, a.pixel_accuracy), (0.0, 0.0));

        // ground truth not constant on superpixels: pixel accuracy drops
        let gt = GroundTruth::new(&d, vec![0, 0, 1, 0], 2).unwrap();
        assert_eq!(gt.majorities(), &[0, 0]);
        let a = evaluate(&[0, 0], &gt, &d).unwrap();
        assert_eq!(a.superpixel_accuracy, 1.0);
        assert_eq!(a.pixel_accuracy, 0.75);
    }

    #[test]
    fn majority_ties_lowest() {
        let d = Decomposition::from_labels(2, 1, vec![0, 0], LabelPolicy::Strict).unwrap();
        let gt = GroundTruth::new(&d, vec![1, 0], 2).unwrap();
        assert_eq!(gt.majority(0), 0);
        assert!(GroundTruth::new(&d, vec![2, 0], 2).is_err());
    }
}
