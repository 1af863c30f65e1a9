//! Classify 30 m cropland pixels as irrigated or rainfed from their
//! 12-month NDVI signatures.
//!
//! The pipeline masks cropland, clusters monthly NDVI signatures per
//! half-degree tile with k-means (k picked by silhouette), and labels each
//! cluster with a crop-season heuristic: a season is irrigated when its
//! NDVI peak indicates cultivation but the rain at and just before the peak
//! falls short of crop water need. Evaluation tools cover spatial-shift
//! consistency, point accuracy, and a synthetic-scene harness with known
//! ground truth.

pub mod clustering;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod pipeline;
pub mod raster;
pub mod season;

pub use error::{Error, Result};
