//! Random decompositions and descriptor tables for oracle comparisons.

#![allow(dead_code)]

use dspm_core::decomp::{Decomposition, LabelPolicy};
use dspm_core::dsp::DualSuperpatch;
use dspm_core::features::DescriptorTable;
use dspm_core::Point;

use super::oracle::{random_grid_labels, Grid, Mix, Patch, Region};

pub const FEATURE_LEN: usize = 9;

pub struct Instance {
    pub decomp: Decomposition,
    pub table: DescriptorTable,
}

/// Rectangle-grid decomposition with random features, jittered region
/// positions and `0..=max_interfaces` random interfaces.
pub fn random_instance(rng: &mut Mix, max_interfaces: usize) -> Instance {
    let w = 20 + rng.below(50);
    let h = 20 + rng.below(50);
    let cols = 2 + rng.below(4);
    let rows = 2 + rng.below(4);
    let labels = random_grid_labels(rng, w, h, cols, rows);
    let decomp = Decomposition::from_labels(w, h, labels, LabelPolicy::Strict).unwrap();
    let k = decomp.len();
    let mut feats = Vec::new();
    let mut pos = Vec::new();
    for i in 0..k {
        feats.extend(rng.feature(FEATURE_LEN));
        let b = decomp.barycenter(i);
        pos.push(Point::new(b.x + rng.range(-1.0, 1.0), b.y + rng.range(-1.0, 1.0)));
    }
    let n_if = rng.below(max_interfaces + 1);
    let mut if_feats = Vec::new();
    let mut if_pos = Vec::new();
    for _ in 0..n_if {
        if_feats.extend(rng.feature(FEATURE_LEN));
        if_pos.push(Point::new(rng.range(0.0, w as f64), rng.range(0.0, h as f64)));
    }
    let table =
        DescriptorTable::from_parts(FEATURE_LEN, feats, pos, vec![false; k], FEATURE_LEN, if_feats, if_pos).unwrap();
    Instance { decomp, table }
}

pub fn to_patch(p: &DualSuperpatch) -> Patch {
    Patch {
        center: (p.center.x, p.center.y),
        native_scale: p.native_scale(),
        regions: p
            .regions
            .iter()
            .map(|r| Region {
                anchor: (r.anchor.x, r.anchor.y),
                position: (r.position.x, r.position.y),
                feature: r.feature.to_vec(),
            })
            .collect(),
        interfaces: p.interfaces.iter().map(|i| ((i.position.x, i.position.y), i.feature.to_vec())).collect(),
    }
}

pub fn to_grid(inst: &Instance) -> Grid {
    Grid {
        width: inst.decomp.width(),
        height: inst.decomp.height(),
        labels: inst.decomp.labels().to_vec(),
        features: (0..inst.decomp.len()).map(|i| inst.table.region_feature(i).to_vec()).collect(),
    }
}
