//! Dual superpatch descriptors and multi-scale superpixel matching.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every algorithm of the
//! pipeline; file formats, parallel execution and the command line live in
//! the `dspm` companion crate.
//!
//! Pipeline overview:
//! - [`decomp`]: validated superpixel decompositions (label map, barycenters,
//!   4-adjacency, member lists) and a deterministic SLIC generator in [`slic`].
//! - [`features`]: region descriptors computed on eroded superpixel interiors
//!   and HoG descriptors at superpixel interfaces.
//! - [`dsp`]: dual superpatches (radius neighborhoods of both descriptor kinds)
//!   and their rescaling across radii.
//! - [`dist`]: quadratic, projected, symmetric projected, nearest-interface and
//!   dual distances.
//! - [`search`]: exhaustive matching, the randomized propagation search and
//!   k-ANN collection.
//! - [`label`]: non-local label fusion, multi-scale decision and accuracy.
//! - [`synth`]: synthetic benchmarks (oriented textures, noise, scaled copies).
//!
//! All floating point math goes through `libm`, and every random draw comes
//! from ChaCha8 seeded by the caller, so outputs are reproducible across
//! platforms.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod decomp;
pub mod dist;
pub mod dsp;
pub mod features;
pub mod geom;
pub mod image;
pub mod label;
pub mod search;
pub mod slic;
pub mod synth;

mod rng;

pub use decomp::{DecompError, Decomposition, LabelPolicy};
pub use dist::DistanceConfig;
pub use dsp::{DualSuperpatch, ScaleSet};
pub use features::{DescriptorTable, FeatureConfig, RegionFeatureKind};
pub use geom::Point;
pub use image::RgbImage;
pub use label::{GroundTruth, LabelScores};
pub use search::{MatchRecord, SearchConfig};
