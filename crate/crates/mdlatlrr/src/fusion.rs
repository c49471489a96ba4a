//! Fusion of two registered decompositions: weighted-average base fusion
//! and per-column norm-weighted detail fusion.
//!
//! Detail columns compete patch by patch: each column's weight is its
//! reshaped patch's nuclear norm (or plain l1 norm), normalized against the
//! other source. Columns where both patches vanish fall back to equal
//! weights, which keeps fusing an image with itself an exact no-op.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::decompose::mdlatlrr;
use crate::error::{Error, Result};
use crate::latlrr::ProjectionMatrix;
use crate::linalg::nuclear_norm;
use crate::patches::{reconstruct_image, reshape_patch, PatchMatrix};

/// Norm used to score competing detail patches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetailNorm {
    Nuclear,
    L1,
}

impl std::fmt::Display for DetailNorm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DetailNorm::Nuclear => write!(f, "nuclear"),
            DetailNorm::L1 => write!(f, "l1"),
        }
    }
}

/// Fusion parameters. Two sources are supported; the per-column weighting
/// generalizes to more, but nothing here needs it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionConfig {
    pub levels: usize,
    pub stride: usize,
    pub detail_norm: DetailNorm,
    /// Base blend weights (w_b1, w_b2); must be non-negative and sum to 1.
    pub base_weights: (f64, f64),
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            levels: 2,
            stride: 1,
            detail_norm: DetailNorm::Nuclear,
            base_weights: (0.5, 0.5),
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels < 1 {
            return Err(Error::InvalidArgument(format!(
                "levels must be at least 1, got {}",
                self.levels
            )));
        }
        let (w1, w2) = self.base_weights;
        if !(w1 >= 0.0 && w2 >= 0.0 && (w1 + w2 - 1.0).abs() <= 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "base weights must be non-negative and sum to 1, got ({w1}, {w2})"
            )));
        }
        Ok(())
    }
}

/// Per-column weight pairs for one decomposition level.
#[derive(Debug, Clone)]
pub struct DetailWeights {
    pub pairs: Vec<(f64, f64)>,
}

/// Pixelwise weighted blend of two base images.
pub fn fuse_base(
    b1: ArrayView2<f64>,
    b2: ArrayView2<f64>,
    w1: f64,
    w2: f64,
) -> Result<Array2<f64>> {
    if b1.dim() != b2.dim() {
        return Err(Error::ShapeMismatch(format!(
            "base images {:?} vs {:?}",
            b1.dim(),
            b2.dim()
        )));
    }
    Ok(&b1.mapv(|v| w1 * v) + &b2.mapv(|v| w2 * v))
}

fn check_same_geometry(v1: &PatchMatrix, v2: &PatchMatrix) -> Result<()> {
    v1.validate()?;
    v2.validate()?;
    if v1.geometry != v2.geometry {
        return Err(Error::ShapeMismatch(format!(
            "detail geometries differ: {:?} vs {:?}",
            v1.geometry, v2.geometry
        )));
    }
    Ok(())
}

/// Normalized per-column competition weights.
///
/// For each column the raw score is the chosen norm of the reshaped patch;
/// the pair is divided by its sum, or set to (0.5, 0.5) when both scores
/// are exactly zero.
pub fn detail_weights(
    v1: &PatchMatrix,
    v2: &PatchMatrix,
    norm: DetailNorm,
) -> Result<DetailWeights> {
    check_same_geometry(v1, v2)?;
    let n = v1.geometry.patch_size;
    let score = |col: ndarray::ArrayView1<f64>| -> Result<f64> {
        match norm {
            DetailNorm::Nuclear => nuclear_norm(&reshape_patch(col, n)?),
            DetailNorm::L1 => Ok(col.iter().map(|v| v.abs()).sum()),
        }
    };
    let cols = v1.geometry.patch_count();
    let pairs = (0..cols)
        .into_par_iter()
        .map(|j| {
            let s1 = score(v1.mat.column(j))?;
            let s2 = score(v2.mat.column(j))?;
            let total = s1 + s2;
            if total == 0.0 {
                Ok((0.5, 0.5))
            } else {
                Ok((s1 / total, s2 / total))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DetailWeights { pairs })
}

/// Column-wise convex combination of two detail matrices followed by
/// reconstruction of the fused detail image.
pub fn fuse_details(
    v1: &PatchMatrix,
    v2: &PatchMatrix,
    norm: DetailNorm,
) -> Result<(PatchMatrix, Array2<f64>)> {
    let weights = detail_weights(v1, v2, norm)?;
    let mut mat = Array2::zeros(v1.mat.dim());
    for (j, &(w1, w2)) in weights.pairs.iter().enumerate() {
        let blended = &v1.mat.column(j).mapv(|v| w1 * v) + &v2.mat.column(j).mapv(|v| w2 * v);
        mat.column_mut(j).assign(&blended);
    }
    let fused = PatchMatrix {
        geometry: v1.geometry,
        mat,
    };
    let image = reconstruct_image(&fused)?;
    Ok((fused, image))
}

/// Full pipeline: decompose both sources, fuse bases and every detail
/// level, and sum.
///
/// The result is a raw float image; values can stray slightly outside
/// [0,1] and are only clamped at export time.
pub fn fuse_images(
    img1: ArrayView2<f64>,
    img2: ArrayView2<f64>,
    proj: &ProjectionMatrix,
    cfg: &FusionConfig,
) -> Result<Array2<f64>> {
    cfg.validate()?;
    if img1.dim() != img2.dim() {
        return Err(Error::ShapeMismatch(format!(
            "source images {:?} vs {:?}",
            img1.dim(),
            img2.dim()
        )));
    }
    let d1 = mdlatlrr(img1, proj, cfg.levels, cfg.stride)?;
    let d2 = mdlatlrr(img2, proj, cfg.levels, cfg.stride)?;

    let (w1, w2) = cfg.base_weights;
    let mut fused = fuse_base(d1.base.view(), d2.base.view(), w1, w2)?;
    for (v1, v2) in d1.details.iter().zip(&d2.details) {
        let (_, detail_img) = fuse_details(v1, v2, cfg.detail_norm)?;
        fused += &detail_img;
    }
    Ok(fused)
}
