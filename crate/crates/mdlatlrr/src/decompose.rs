//! Single-level and multi-level decomposition built on a trained
//! projection matrix.
//!
//! One level splits an image into a detail part (projected patch columns,
//! reconstructed) and a base part (the remainder). Multi-level repeats the
//! split on each previous base, so the original image always equals the
//! final base plus all detail images; nothing is clamped here, which is
//! what keeps that telescoping identity exact.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::latlrr::ProjectionMatrix;
use crate::patches::{extract_patches, reconstruct_image, PatchMatrix};

/// Deepest level the pipeline supports.
pub const MAX_LEVELS: usize = 8;

/// Multi-level decomposition: detail patch matrices and images per level,
/// one final base.
#[derive(Debug, Clone)]
pub struct Decomposition {
    /// V_d per level, outermost first.
    pub details: Vec<PatchMatrix>,
    /// Reconstructed detail image per level.
    pub detail_images: Vec<Array2<f64>>,
    /// Base remaining after the last level.
    pub base: Array2<f64>,
    pub levels: usize,
    pub patch_size: usize,
    pub stride: usize,
}

/// One decomposition level: detail columns V_d = L * P(img), detail image
/// I_d = R(V_d), base I_b = img - I_d.
pub fn dlatlrr(
    img: ArrayView2<f64>,
    proj: &ProjectionMatrix,
    stride: usize,
) -> Result<(PatchMatrix, Array2<f64>, Array2<f64>)> {
    let pm = extract_patches(img, proj.n, stride)?;
    let v_d = PatchMatrix {
        geometry: pm.geometry,
        mat: proj.mat.dot(&pm.mat),
    };
    let i_d = reconstruct_image(&v_d)?;
    let i_b = &img - &i_d;
    Ok((v_d, i_d, i_b))
}

/// Recursive decomposition: level i applies [`dlatlrr`] to the base of
/// level i-1, starting from the image itself.
pub fn mdlatlrr(
    img: ArrayView2<f64>,
    proj: &ProjectionMatrix,
    levels: usize,
    stride: usize,
) -> Result<Decomposition> {
    if !(1..=MAX_LEVELS).contains(&levels) {
        return Err(Error::InvalidArgument(format!(
            "levels must be in 1..={MAX_LEVELS}, got {levels}"
        )));
    }
    let mut details = Vec::with_capacity(levels);
    let mut detail_images = Vec::with_capacity(levels);
    let mut base = img.to_owned();
    for _ in 0..levels {
        let (v_d, i_d, i_b) = dlatlrr(base.view(), proj, stride)?;
        details.push(v_d);
        detail_images.push(i_d);
        base = i_b;
    }
    Ok(Decomposition {
        details,
        detail_images,
        base,
        levels,
        patch_size: proj.n,
        stride,
    })
}

impl Decomposition {
    /// Re-sum base and detail images; equals the original input up to
    /// floating-point accumulation.
    pub fn reconstruct(&self) -> Array2<f64> {
        let mut out = self.base.clone();
        for d in &self.detail_images {
            out += d;
        }
        out
    }
}
