//! File formats, parallel search, visualizations and parameter sweeps on top
//! of `dspm-core`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod config;
pub mod error;
pub mod io;
pub mod library;
pub mod matches;
pub mod output;
pub mod pipeline;
pub mod sweep;
pub mod viz;

pub use error::{Error, Result};
