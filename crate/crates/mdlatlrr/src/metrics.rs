//! Objective fusion-quality metrics: En, MI, SD, Qabf, SCD, SSIMa and
//! MS-SSIM.
//!
//! Inputs are float images in [0,1]. Histogram metrics quantize to 256
//! bins; SSIM-family metrics and SD work on the 0-255 scale with the
//! literature-standard constants. Qabf is scale-invariant and is computed
//! on the raw values.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Metric values for one (src1, src2, fused) triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub en: f64,
    pub mi: f64,
    pub sd: f64,
    pub qabf: f64,
    pub scd: f64,
    pub ssim_a: f64,
    pub ms_ssim: f64,
}

impl MetricReport {
    /// Stable (name, value) listing for report serialization.
    pub fn values(&self) -> [(&'static str, f64); 7] {
        [
            ("En", self.en),
            ("MI", self.mi),
            ("SD", self.sd),
            ("Qabf", self.qabf),
            ("SCD", self.scd),
            ("SSIMa", self.ssim_a),
            ("MS_SSIM", self.ms_ssim),
        ]
    }
}

/// Compute every metric for one triple. En and SD are evaluated on the
/// fused image.
pub fn evaluate(
    src1: ArrayView2<f64>,
    src2: ArrayView2<f64>,
    fused: ArrayView2<f64>,
) -> Result<MetricReport> {
    check_shapes(src1, src2, fused)?;
    Ok(MetricReport {
        en: entropy(fused),
        mi: mutual_information(src1, src2, fused)?,
        sd: sd_metric(fused),
        qabf: qabf(src1, src2, fused)?,
        scd: scd(src1, src2, fused)?,
        ssim_a: ssim_a(src1, src2, fused)?,
        ms_ssim: ms_ssim(src1, src2, fused)?,
    })
}

fn check_shapes(a: ArrayView2<f64>, b: ArrayView2<f64>, f: ArrayView2<f64>) -> Result<()> {
    if a.dim() != b.dim() || a.dim() != f.dim() {
        return Err(Error::ShapeMismatch(format!(
            "metric inputs {:?}, {:?}, {:?}",
            a.dim(),
            b.dim(),
            f.dim()
        )));
    }
    Ok(())
}

fn bin256(v: f64) -> usize {
    ((v * 255.0).round().clamp(0.0, 255.0)) as usize
}

fn histogram256(img: ArrayView2<f64>) -> [f64; 256] {
    let mut h = [0.0f64; 256];
    for &v in img.iter() {
        h[bin256(v)] += 1.0;
    }
    let total = img.len() as f64;
    for c in &mut h {
        *c /= total;
    }
    h
}

/// Shannon entropy in bits of the 256-bin intensity histogram.
pub fn entropy(img: ArrayView2<f64>) -> f64 {
    if img.is_empty() {
        return 0.0;
    }
    histogram256(img)
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

fn mi_pair(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    let mut joint = vec![[0.0f64; 256]; 256];
    for (&x, &y) in a.iter().zip(b.iter()) {
        joint[bin256(x)][bin256(y)] += 1.0;
    }
    let total = a.len() as f64;
    let pa = histogram256(a);
    let pb = histogram256(b);
    let mut mi = 0.0;
    for (i, row) in joint.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0.0 {
                let p = c / total;
                mi += p * (p / (pa[i] * pb[j])).log2();
            }
        }
    }
    mi
}

/// MI(src1, fused) + MI(src2, fused) over 256-bin joint histograms.
pub fn mutual_information(
    src1: ArrayView2<f64>,
    src2: ArrayView2<f64>,
    fused: ArrayView2<f64>,
) -> Result<f64> {
    check_shapes(src1, src2, fused)?;
    Ok(mi_pair(src1, fused) + mi_pair(src2, fused))
}

/// Population standard deviation of pixel intensities on the 0-255 scale.
pub fn sd_metric(img: ArrayView2<f64>) -> f64 {
    if img.is_empty() {
        return 0.0;
    }
    let n = img.len() as f64;
    let mean = img.iter().sum::<f64>() / n;
    let var = img.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n;
    var.sqrt() * 255.0
}

/// Sobel responses with zero padding ('same' size).
fn sobel(img: ArrayView2<f64>) -> (Array2<f64>, Array2<f64>) {
    const KX: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
    const KY: [[f64; 3]; 3] = [[1.0, 2.0, 1.0], [0.0, 0.0, 0.0], [-1.0, -2.0, -1.0]];
    let (h, w) = img.dim();
    let mut gx = Array2::zeros((h, w));
    let mut gy = Array2::zeros((h, w));
    for r in 0..h {
        for c in 0..w {
            let (mut sx, mut sy) = (0.0, 0.0);
            for i in 0..3 {
                for j in 0..3 {
                    let rr = r as isize + i as isize - 1;
                    let cc = c as isize + j as isize - 1;
                    if rr >= 0 && rr < h as isize && cc >= 0 && cc < w as isize {
                        let v = img[[rr as usize, cc as usize]];
                        sx += KX[i][j] * v;
                        sy += KY[i][j] * v;
                    }
                }
            }
            gx[[r, c]] = sx;
            gy[[r, c]] = sy;
        }
    }
    (gx, gy)
}

/// Per-pixel edge strength and orientation; flat pixels get orientation 0.
fn strength_orientation(img: ArrayView2<f64>) -> (Array2<f64>, Array2<f64>) {
    let (gx, gy) = sobel(img);
    let g = Array2::from_shape_fn(gx.dim(), |idx| gx[idx].hypot(gy[idx]));
    let a = Array2::from_shape_fn(gx.dim(), |idx| {
        if gx[idx] == 0.0 && gy[idx] == 0.0 {
            0.0
        } else {
            (gy[idx] / gx[idx]).atan()
        }
    });
    (g, a)
}

/// Edge-preservation factor between one source pixel and the fused pixel.
fn edge_preservation(gs: f64, als: f64, gf: f64, alf: f64) -> f64 {
    // Relative strength: 1 when equal (covering the flat 0/0 case),
    // otherwise the smaller over the larger.
    let g = if gs == gf {
        1.0
    } else {
        gs.min(gf) / gs.max(gf)
    };
    let a = 1.0 - (als - alf).abs() / (std::f64::consts::PI / 2.0);
    let qg = 0.9994 / (1.0 + (-15.0 * (g - 0.5)).exp());
    let qa = 0.9879 / (1.0 + (-22.0 * (a - 0.8)).exp());
    qg * qa
}

/// Gradient-based edge-information transfer measure. Each source pixel's
/// preservation factor is weighted by that source's edge strength.
pub fn qabf(src1: ArrayView2<f64>, src2: ArrayView2<f64>, fused: ArrayView2<f64>) -> Result<f64> {
    check_shapes(src1, src2, fused)?;
    let (g1, a1) = strength_orientation(src1);
    let (g2, a2) = strength_orientation(src2);
    let (gf, af) = strength_orientation(fused);
    let mut num = 0.0;
    let mut den = 0.0;
    for idx in ndarray::indices(g1.dim()) {
        let q1 = edge_preservation(g1[idx], a1[idx], gf[idx], af[idx]);
        let q2 = edge_preservation(g2[idx], a2[idx], gf[idx], af[idx]);
        num += q1 * g1[idx] + q2 * g2[idx];
        den += g1[idx] + g2[idx];
    }
    Ok(if den == 0.0 { 0.0 } else { num / den })
}

/// Pearson correlation; zero variance on either side maps to 0.
fn pearson(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b.iter()) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}

/// Sum of correlations of differences:
/// corr(fused - src2, src1) + corr(fused - src1, src2).
pub fn scd(src1: ArrayView2<f64>, src2: ArrayView2<f64>, fused: ArrayView2<f64>) -> Result<f64> {
    check_shapes(src1, src2, fused)?;
    let d1 = &fused - &src2;
    let d2 = &fused - &src1;
    Ok(pearson(&d1, &src1.to_owned()) + pearson(&d2, &src2.to_owned()))
}

const WINDOW: usize = 11;
const SSIM_C1: f64 = 6.5025; // (0.01 * 255)^2
const SSIM_C2: f64 = 58.5225; // (0.03 * 255)^2

fn gaussian_kernel() -> [f64; WINDOW] {
    let sigma = 1.5f64;
    let mut k = [0.0; WINDOW];
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - (WINDOW as f64 - 1.0) / 2.0;
        *v = (-d * d / (2.0 * sigma * sigma)).exp();
        sum += *v;
    }
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Separable Gaussian filtering, valid region only.
fn filter_valid(m: &Array2<f64>, k: &[f64; WINDOW]) -> Array2<f64> {
    let (h, w) = m.dim();
    let (hv, wv) = (h - WINDOW + 1, w - WINDOW + 1);
    let mut horiz = Array2::zeros((h, wv));
    for r in 0..h {
        for c in 0..wv {
            let mut acc = 0.0;
            for (t, &kv) in k.iter().enumerate() {
                acc += m[[r, c + t]] * kv;
            }
            horiz[[r, c]] = acc;
        }
    }
    let mut out = Array2::zeros((hv, wv));
    for r in 0..hv {
        for c in 0..wv {
            let mut acc = 0.0;
            for (t, &kv) in k.iter().enumerate() {
                acc += horiz[[r + t, c]] * kv;
            }
            out[[r, c]] = acc;
        }
    }
    out
}

/// Mean SSIM and mean contrast-structure term of two 0-255 images.
fn ssim_parts(x: &Array2<f64>, y: &Array2<f64>) -> Result<(f64, f64)> {
    let (h, w) = x.dim();
    if h < WINDOW || w < WINDOW {
        return Err(Error::InvalidArgument(format!(
            "image {h}x{w} smaller than the {WINDOW}x{WINDOW} analysis window"
        )));
    }
    let k = gaussian_kernel();
    let mu_x = filter_valid(x, &k);
    let mu_y = filter_valid(y, &k);
    let xx = filter_valid(&(x * x), &k);
    let yy = filter_valid(&(y * y), &k);
    let xy = filter_valid(&(x * y), &k);

    let (mut ssim_sum, mut cs_sum) = (0.0, 0.0);
    for idx in ndarray::indices(mu_x.dim()) {
        let (mx, my) = (mu_x[idx], mu_y[idx]);
        let vx = xx[idx] - mx * mx;
        let vy = yy[idx] - my * my;
        let cxy = xy[idx] - mx * my;
        let cs = (2.0 * cxy + SSIM_C2) / (vx + vy + SSIM_C2);
        let lum = (2.0 * mx * my + SSIM_C1) / (mx * mx + my * my + SSIM_C1);
        cs_sum += cs;
        ssim_sum += lum * cs;
    }
    let count = mu_x.len() as f64;
    Ok((ssim_sum / count, cs_sum / count))
}

fn ssim(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<f64> {
    let xs = x.mapv(|v| v * 255.0);
    let ys = y.mapv(|v| v * 255.0);
    Ok(ssim_parts(&xs, &ys)?.0)
}

/// Average single-scale SSIM of the fused image against both sources.
pub fn ssim_a(src1: ArrayView2<f64>, src2: ArrayView2<f64>, fused: ArrayView2<f64>) -> Result<f64> {
    check_shapes(src1, src2, fused)?;
    Ok(0.5 * (ssim(src1, fused)? + ssim(src2, fused)?))
}

const MS_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];

fn downsample2(m: &Array2<f64>) -> Array2<f64> {
    let (h, w) = (m.nrows() / 2, m.ncols() / 2);
    Array2::from_shape_fn((h, w), |(r, c)| {
        (m[[2 * r, 2 * c]]
            + m[[2 * r + 1, 2 * c]]
            + m[[2 * r, 2 * c + 1]]
            + m[[2 * r + 1, 2 * c + 1]])
            / 4.0
    })
}

/// Scales usable for a given min dimension: the window must fit after each
/// dyadic halving. 176 = 11 * 2^4 is the smallest size giving all 5 scales.
fn usable_scales(min_dim: usize) -> usize {
    let mut scales = 0;
    let mut d = min_dim;
    while scales < MS_WEIGHTS.len() && d >= WINDOW {
        scales += 1;
        d /= 2;
    }
    scales
}

fn ms_ssim_pair(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<f64> {
    let (h, w) = x.dim();
    let scales = usable_scales(h.min(w));
    if scales == 0 {
        return Err(Error::InvalidArgument(format!(
            "image {h}x{w} too small for multi-scale analysis"
        )));
    }
    let weight_sum: f64 = MS_WEIGHTS[..scales].iter().sum();

    let mut xs = x.mapv(|v| v * 255.0);
    let mut ys = y.mapv(|v| v * 255.0);
    let mut product = 1.0;
    for (level, &weight) in MS_WEIGHTS[..scales].iter().enumerate() {
        let (ssim_mean, cs_mean) = ssim_parts(&xs, &ys)?;
        // Clamp before the fractional power; rare negative means would
        // otherwise produce NaN.
        let term = if level == scales - 1 {
            ssim_mean
        } else {
            cs_mean
        }
        .max(0.0);
        product *= term.powf(weight / weight_sum);
        if level + 1 < scales {
            xs = downsample2(&xs);
            ys = downsample2(&ys);
        }
    }
    Ok(product)
}

/// Mean over both sources of multi-scale SSIM against the fused image.
pub fn ms_ssim(
    src1: ArrayView2<f64>,
    src2: ArrayView2<f64>,
    fused: ArrayView2<f64>,
) -> Result<f64> {
    check_shapes(src1, src2, fused)?;
    Ok(0.5 * (ms_ssim_pair(src1, fused)? + ms_ssim_pair(src2, fused)?))
}
