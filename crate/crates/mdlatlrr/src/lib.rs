//! Multi-level latent low-rank image decomposition and fusion.
//!
//! The crate is organized around a trained projection matrix that splits an
//! image into detail and base parts at several scales:
//!
//! * [`patches`] turns grayscale images into sliding-window patch matrices
//!   and back.
//! * [`latlrr`] learns the projection matrix from training patches with an
//!   inexact augmented Lagrange multiplier solver.
//! * [`decompose`] applies the projection recursively to produce multi-level
//!   detail layers and a final base layer.
//! * [`fusion`] merges decompositions of two registered source images.
//! * [`metrics`] scores a fused image against its sources.

pub mod decompose;
pub mod error;
pub mod fusion;
pub mod latlrr;
pub mod linalg;
pub mod metrics;
pub mod patches;

pub use decompose::{dlatlrr, mdlatlrr, Decomposition, MAX_LEVELS};
pub use error::{Error, Result};
pub use fusion::{detail_weights, fuse_base, fuse_details, fuse_images, DetailNorm, FusionConfig};
pub use latlrr::{
    build_training_set, classify_patch, patch_sd, solve_latlrr, train_projection, LatLrrParams,
    LatLrrSolution, PatchLabel, ProjectionMatrix, Provenance, TrainingSet,
};
pub use metrics::{evaluate, MetricReport};
pub use patches::{extract_patches, reconstruct_image, reshape_patch, PatchGeometry, PatchMatrix};
