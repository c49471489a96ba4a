//! Sliding-window patch extraction P(.), overlap-averaging reconstruction
//! R(.), and the column-to-patch reshape re(.).
//!
//! Every module that touches patch matrices relies on one vectorization
//! convention: windows are scanned row-major over the (padded) image, and
//! each window is flattened row-major into its column. Changing either
//! order silently invalidates any trained projection matrix.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Placement of a sliding window grid over an image.
///
/// If `(height - n) mod s != 0` the image is padded by edge replication on
/// the bottom (likewise right) so the last window lands flush with the
/// padded border; `pad_bottom`/`pad_right` record how much was added so
/// reconstruction can crop it away.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchGeometry {
    pub image_height: usize,
    pub image_width: usize,
    pub patch_size: usize,
    pub stride: usize,
    pub pad_bottom: usize,
    pub pad_right: usize,
}

impl PatchGeometry {
    pub fn new(height: usize, width: usize, patch_size: usize, stride: usize) -> Result<Self> {
        if patch_size < 2 {
            return Err(Error::InvalidArgument(format!(
                "patch size must be at least 2, got {patch_size}"
            )));
        }
        if stride < 1 || stride > patch_size {
            return Err(Error::InvalidArgument(format!(
                "stride must satisfy 1 <= s <= patch size {patch_size}, got {stride}"
            )));
        }
        if height < patch_size || width < patch_size {
            return Err(Error::InvalidArgument(format!(
                "image {height}x{width} smaller than patch size {patch_size}"
            )));
        }
        let pad = |dim: usize| {
            let rem = (dim - patch_size) % stride;
            if rem == 0 {
                0
            } else {
                stride - rem
            }
        };
        Ok(Self {
            image_height: height,
            image_width: width,
            patch_size,
            stride,
            pad_bottom: pad(height),
            pad_right: pad(width),
        })
    }

    pub fn padded_height(&self) -> usize {
        self.image_height + self.pad_bottom
    }

    pub fn padded_width(&self) -> usize {
        self.image_width + self.pad_right
    }

    /// Number of window positions down the image.
    pub fn windows_down(&self) -> usize {
        (self.padded_height() - self.patch_size) / self.stride + 1
    }

    /// Number of window positions across the image.
    pub fn windows_across(&self) -> usize {
        (self.padded_width() - self.patch_size) / self.stride + 1
    }

    /// Total column count M.
    pub fn patch_count(&self) -> usize {
        self.windows_down() * self.windows_across()
    }

    /// Row count N = n^2 of the patch matrix.
    pub fn patch_dim(&self) -> usize {
        self.patch_size * self.patch_size
    }
}

/// An image unrolled into patch columns: shape N x M with N = n^2.
#[derive(Debug, Clone)]
pub struct PatchMatrix {
    pub geometry: PatchGeometry,
    pub mat: Array2<f64>,
}

impl PatchMatrix {
    /// Check that `mat` agrees with `geometry`.
    pub fn validate(&self) -> Result<()> {
        let want = (self.geometry.patch_dim(), self.geometry.patch_count());
        if self.mat.dim() != want {
            return Err(Error::ShapeMismatch(format!(
                "patch matrix is {:?}, geometry requires {:?}",
                self.mat.dim(),
                want
            )));
        }
        Ok(())
    }
}

/// P(.): unroll an image into overlapping n x n patches with step `stride`.
pub fn extract_patches(
    img: ArrayView2<f64>,
    patch_size: usize,
    stride: usize,
) -> Result<PatchMatrix> {
    let (h, w) = img.dim();
    let geometry = PatchGeometry::new(h, w, patch_size, stride)?;
    // Edge replication: reads past the bottom/right border clamp to the
    // last row/column.
    let sample = |r: usize, c: usize| img[[r.min(h - 1), c.min(w - 1)]];

    let n = patch_size;
    let mut mat = Array2::zeros((geometry.patch_dim(), geometry.patch_count()));
    let mut col = 0;
    for wr in 0..geometry.windows_down() {
        for wc in 0..geometry.windows_across() {
            let (top, left) = (wr * stride, wc * stride);
            for r in 0..n {
                for c in 0..n {
                    mat[[r * n + c, col]] = sample(top + r, left + c);
                }
            }
            col += 1;
        }
    }
    Ok(PatchMatrix { geometry, mat })
}

/// R(.): average overlapping patch contributions back into an image and
/// crop the padding.
pub fn reconstruct_image(pm: &PatchMatrix) -> Result<Array2<f64>> {
    pm.validate()?;
    let g = &pm.geometry;
    let n = g.patch_size;
    let mut sums = Array2::<f64>::zeros((g.padded_height(), g.padded_width()));
    let mut counts = Array2::<u32>::zeros((g.padded_height(), g.padded_width()));

    let mut col = 0;
    for wr in 0..g.windows_down() {
        for wc in 0..g.windows_across() {
            let (top, left) = (wr * g.stride, wc * g.stride);
            for r in 0..n {
                for c in 0..n {
                    sums[[top + r, left + c]] += pm.mat[[r * n + c, col]];
                    counts[[top + r, left + c]] += 1;
                }
            }
            col += 1;
        }
    }

    // s <= n guarantees every padded pixel is covered at least once.
    let mut out = Array2::zeros((g.image_height, g.image_width));
    for r in 0..g.image_height {
        for c in 0..g.image_width {
            out[[r, c]] = sums[[r, c]] / f64::from(counts[[r, c]]);
        }
    }
    Ok(out)
}

/// re(.): reshape one vectorized column back into its n x n patch.
pub fn reshape_patch(col: ArrayView1<f64>, patch_size: usize) -> Result<Array2<f64>> {
    let n = patch_size;
    if col.len() != n * n {
        return Err(Error::InvalidArgument(format!(
            "column length {} does not match patch size {n} (need {})",
            col.len(),
            n * n
        )));
    }
    Ok(Array2::from_shape_fn((n, n), |(r, c)| col[r * n + c]))
}
