//! Latent low-rank learning of the projection matrix.
//!
//! Solves
//!
//! ```text
//! min ||Z||_* + ||L||_* + lambda*||E||_1   s.t.  X = XZ + LX + E
//! ```
//!
//! with an inexact augmented Lagrange multiplier scheme. Two auxiliary
//! variables J ~ Z and S ~ L absorb the nuclear-norm proximal steps so each
//! subproblem is a singular value thresholding or a linear solve. Only the
//! projection matrix L is persisted; Z and E are training byproducts.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use ndarray_linalg::Inverse;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, soft_threshold};
use crate::patches::extract_patches;

/// Inexact-ALM schedule. The defaults are the standard settings for this
/// problem family: slow penalty growth buys accuracy at the price of
/// iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatLrrParams {
    /// Balance coefficient on the sparse error term.
    pub lambda: f64,
    /// Initial penalty.
    pub mu0: f64,
    /// Penalty growth factor per iteration.
    pub rho: f64,
    /// Penalty ceiling.
    pub mu_max: f64,
    /// Max-abs constraint residual at which the solve stops.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for LatLrrParams {
    fn default() -> Self {
        Self {
            lambda: 0.4,
            mu0: 1e-6,
            rho: 1.1,
            mu_max: 1e6,
            tol: 1e-6,
            max_iters: 1000,
        }
    }
}

impl LatLrrParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.mu0 > 0.0 && self.mu0 < self.mu_max) {
            return bad(format!(
                "penalty schedule needs 0 < mu0 < mu_max, got {} and {}",
                self.mu0, self.mu_max
            ));
        }
        if !(self.rho > 1.0 && self.rho.is_finite()) {
            return bad(format!("rho must exceed 1, got {}", self.rho));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        Ok(())
    }
}

/// Result of one LatLRR solve.
#[derive(Debug, Clone)]
pub struct LatLrrSolution {
    /// Low-rank coefficients, M x M.
    pub z: Array2<f64>,
    /// Projection matrix, N x N.
    pub l: Array2<f64>,
    /// Sparse error, N x M.
    pub e: Array2<f64>,
    pub iterations: usize,
    /// Max-abs violation over the three constraints at the last iterate.
    pub final_residual: f64,
    pub converged: bool,
    /// Per-iteration value of ||Z||_* + ||L||_* + lambda*||E||_1.
    ///
    /// The trace settles as the residual vanishes but is not monotone: the
    /// final feasibility enforcement approaches the constrained optimum
    /// from below.
    pub objective_history: Vec<f64>,
}

/// Detail/smooth classification of a patch by its deviation score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchLabel {
    Detail,
    Smooth,
}

/// Training matrix assembled from classified patch pools.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    /// N x M_train, detail columns first.
    pub x: Array2<f64>,
    pub labels: Vec<PatchLabel>,
    /// Size of the detail pool before sampling.
    pub detail_pool: usize,
    /// Size of the smooth pool before sampling.
    pub smooth_pool: usize,
}

/// Deviation score of a patch: square root of the *sum* (not mean) of
/// squared deviations from the patch mean.
pub fn patch_sd(p: ArrayView2<f64>) -> f64 {
    sum_sq_dev(p.iter().copied(), p.len()).sqrt()
}

fn sum_sq_dev(values: impl Iterator<Item = f64> + Clone, len: usize) -> f64 {
    if len == 0 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / len as f64;
    values.map(|v| (v - mean).powi(2)).sum()
}

/// Detail iff the deviation score strictly exceeds the threshold; a score
/// equal to the threshold is smooth.
pub fn classify_patch(p: ArrayView2<f64>, th: f64) -> PatchLabel {
    if patch_sd(p) > th {
        PatchLabel::Detail
    } else {
        PatchLabel::Smooth
    }
}

/// Scan `images` with an n x n window of step `s`, classify every patch,
/// then sample `detail_count` + `smooth_count` columns without replacement.
///
/// Pool order is fixed by (image index, window scan order) and the sampler
/// is seeded, so the result is reproducible. Columns keep raw pixel values;
/// no per-patch normalization is applied.
pub fn build_training_set(
    images: &[Array2<f64>],
    n: usize,
    s: usize,
    detail_count: usize,
    smooth_count: usize,
    th: f64,
    seed: u64,
) -> Result<TrainingSet> {
    if th.is_nan() || th < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "classification threshold must be non-negative, got {th}"
        )));
    }
    let mut detail_pool: Vec<(usize, usize)> = Vec::new();
    let mut smooth_pool: Vec<(usize, usize)> = Vec::new();
    for (img_idx, img) in images.iter().enumerate() {
        let pm = extract_patches(img.view(), n, s)?;
        for (col_idx, col) in pm.mat.columns().into_iter().enumerate() {
            let sd = sum_sq_dev(col.iter().copied(), col.len()).sqrt();
            if sd > th {
                detail_pool.push((img_idx, col_idx));
            } else {
                smooth_pool.push((img_idx, col_idx));
            }
        }
    }
    if detail_pool.len() < detail_count {
        return Err(Error::InsufficientPool {
            label: "detail",
            available: detail_pool.len(),
            requested: detail_count,
        });
    }
    if smooth_pool.len() < smooth_count {
        return Err(Error::InsufficientPool {
            label: "smooth",
            available: smooth_pool.len(),
            requested: smooth_count,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked_d = index::sample(&mut rng, detail_pool.len(), detail_count);
    let picked_s = index::sample(&mut rng, smooth_pool.len(), smooth_count);

    // (image, column, destination) for every sampled patch, grouped by
    // image so each image is extracted once more rather than held whole.
    let mut picks: Vec<(usize, usize, usize)> = Vec::with_capacity(detail_count + smooth_count);
    for (dst, k) in picked_d.iter().enumerate() {
        let (i, j) = detail_pool[k];
        picks.push((i, j, dst));
    }
    for (dst, k) in picked_s.iter().enumerate() {
        let (i, j) = smooth_pool[k];
        picks.push((i, j, detail_count + dst));
    }
    picks.sort_unstable();

    let patch_dim = n * n;
    let mut x = Array2::zeros((patch_dim, detail_count + smooth_count));
    let mut cursor = 0;
    for (img_idx, img) in images.iter().enumerate() {
        if cursor >= picks.len() || picks[cursor].0 != img_idx {
            continue;
        }
        let pm = extract_patches(img.view(), n, s)?;
        while cursor < picks.len() && picks[cursor].0 == img_idx {
            let (_, col_idx, dst) = picks[cursor];
            x.column_mut(dst).assign(&pm.mat.column(col_idx));
            cursor += 1;
        }
    }

    let mut labels = vec![PatchLabel::Detail; detail_count];
    labels.extend(std::iter::repeat_n(PatchLabel::Smooth, smooth_count));
    Ok(TrainingSet {
        x,
        labels,
        detail_pool: detail_pool.len(),
        smooth_pool: smooth_pool.len(),
    })
}

fn max_abs(m: &Array2<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()))
}

fn all_finite(ms: &[&Array2<f64>]) -> bool {
    ms.iter().all(|m| m.iter().all(|v| v.is_finite()))
}

/// Inexact-ALM solve of the latent low-rank program on X (N x M).
///
/// Update order per iteration: J and S by singular value thresholding at
/// 1/mu, then Z and L by the closed-form linear solves against the cached
/// Gram inverses, then E by soft thresholding at lambda/mu, multiplier
/// ascent, and penalty growth mu <- min(rho*mu, mu_max).
pub fn solve_latlrr(x: ArrayView2<f64>, params: &LatLrrParams) -> Result<LatLrrSolution> {
    params.validate()?;
    let (nn, m) = x.dim();
    if nn < 2 || m < 2 {
        return Err(Error::InvalidArgument(format!(
            "training matrix must be at least 2x2, got {nn}x{m}"
        )));
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite {
            context: "solver input".into(),
        });
    }

    let xt = x.t();
    let xtx = xt.dot(&x);
    let xxt = x.dot(&xt);
    if !all_finite(&[&xtx, &xxt]) {
        return Err(Error::Divergence { iteration: 0 });
    }
    let inv_a = (&xtx + &Array2::<f64>::eye(m))
        .inv()
        .map_err(|e| Error::Factorization(format!("inverting I + X^T X: {e}")))?;
    let inv_b = (&xxt + &Array2::<f64>::eye(nn))
        .inv()
        .map_err(|e| Error::Factorization(format!("inverting I + X X^T: {e}")))?;

    let mut z = Array2::<f64>::zeros((m, m));
    let mut l = Array2::<f64>::zeros((nn, nn));
    let mut e = Array2::<f64>::zeros((nn, m));
    let mut y1 = Array2::<f64>::zeros((nn, m));
    let mut y2 = Array2::<f64>::zeros((m, m));
    let mut y3 = Array2::<f64>::zeros((nn, nn));
    let mut mu = params.mu0;

    let mut objective_history = Vec::new();
    let mut iterations = 0;
    let mut final_residual = f64::INFINITY;
    let mut converged = false;

    for iter in 1..=params.max_iters {
        iterations = iter;

        let j = linalg::svt(&(&z + &(&y2 / mu)), 1.0 / mu)?;
        let s = linalg::svt(&(&l + &(&y3 / mu)), 1.0 / mu)?;

        let lx = l.dot(&x);
        let rhs_z = &xtx - &xt.dot(&lx) - xt.dot(&e) + &j + (xt.dot(&y1) - &y2) / mu;
        z = inv_a.dot(&rhs_z);

        let rhs_l = (&x - &x.dot(&z) - &e).dot(&xt) + &s + (y1.dot(&xt) - &y3) / mu;
        l = rhs_l.dot(&inv_b);

        let xmaz = &x - &x.dot(&z) - &l.dot(&x);
        e = soft_threshold(&(&xmaz + &(&y1 / mu)), params.lambda / mu)?;

        let leq1 = &xmaz - &e;
        let leq2 = &z - &j;
        let leq3 = &l - &s;
        if !all_finite(&[&leq1, &leq2, &leq3]) {
            return Err(Error::Divergence { iteration: iter });
        }
        final_residual = max_abs(&leq1).max(max_abs(&leq2)).max(max_abs(&leq3));
        objective_history.push(
            linalg::nuclear_norm(&z)?
                + linalg::nuclear_norm(&l)?
                + params.lambda * e.mapv(f64::abs).sum(),
        );

        if final_residual <= params.tol {
            converged = true;
            break;
        }
        y1 += &(&leq1 * mu);
        y2 += &(&leq2 * mu);
        y3 += &(&leq3 * mu);
        mu = (mu * params.rho).min(params.mu_max);
    }

    Ok(LatLrrSolution {
        z,
        l,
        e,
        iterations,
        final_residual,
        converged,
        objective_history,
    })
}

/// Training metadata embedded in projection files.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub lambda: f64,
    pub seed: u64,
    pub detail_count: usize,
    pub smooth_count: usize,
    pub threshold: f64,
}

impl Provenance {
    fn to_kv(&self) -> String {
        format!(
            "lambda={};seed={};detail_count={};smooth_count={};threshold={}",
            self.lambda, self.seed, self.detail_count, self.smooth_count, self.threshold
        )
    }

    fn from_kv(s: &str) -> Result<Self> {
        let mut lambda = None;
        let mut seed = None;
        let mut detail_count = None;
        let mut smooth_count = None;
        let mut threshold = None;
        for pair in s.split(';') {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("bad provenance pair `{pair}`")))?;
            let parse_err = |e| Error::Format(format!("provenance {key}: {e}"));
            match key {
                "lambda" => lambda = Some(value.parse().map_err(|e| parse_err(format!("{e}")))?),
                "seed" => seed = Some(value.parse().map_err(|e| parse_err(format!("{e}")))?),
                "detail_count" => {
                    detail_count = Some(value.parse().map_err(|e| parse_err(format!("{e}")))?)
                }
                "smooth_count" => {
                    smooth_count = Some(value.parse().map_err(|e| parse_err(format!("{e}")))?)
                }
                "threshold" => {
                    threshold = Some(value.parse().map_err(|e| parse_err(format!("{e}")))?)
                }
                _ => return Err(Error::Format(format!("unknown provenance key `{key}`"))),
            }
        }
        let missing = |name| Error::Format(format!("provenance missing `{name}`"));
        Ok(Self {
            lambda: lambda.ok_or_else(|| missing("lambda"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
            detail_count: detail_count.ok_or_else(|| missing("detail_count"))?,
            smooth_count: smooth_count.ok_or_else(|| missing("smooth_count"))?,
            threshold: threshold.ok_or_else(|| missing("threshold"))?,
        })
    }
}

const MAGIC: &[u8; 4] = b"MDLL";
const FORMAT_VERSION: u32 = 1;

/// A trained projection matrix plus the parameters that produced it.
#[derive(Debug, Clone)]
pub struct ProjectionMatrix {
    /// Patch size n; the matrix is n^2 x n^2.
    pub n: usize,
    pub mat: Array2<f64>,
    pub provenance: Provenance,
}

impl ProjectionMatrix {
    pub fn new(n: usize, mat: Array2<f64>, provenance: Provenance) -> Result<Self> {
        let dim = n * n;
        if mat.dim() != (dim, dim) {
            return Err(Error::ShapeMismatch(format!(
                "projection for patch size {n} must be {dim}x{dim}, got {:?}",
                mat.dim()
            )));
        }
        if !mat.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "projection matrix".into(),
            });
        }
        Ok(Self { n, mat, provenance })
    }

    /// Serialize: magic, version, patch size, n^4 row-major f64 values,
    /// length-prefixed provenance string. All integers little-endian.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(
            &u32::try_from(self.n)
                .map_err(|_| Error::InvalidArgument(format!("patch size {} exceeds u32", self.n)))?
                .to_le_bytes(),
        )?;
        for &v in self.mat.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
        let kv = self.provenance.to_kv();
        w.write_all(&(kv.len() as u32).to_le_bytes())?;
        w.write_all(kv.as_bytes())?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format(format!("bad magic {magic:02x?}")));
        }
        let version = read_u32(r)?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported version {version}, expected {FORMAT_VERSION}"
            )));
        }
        let n = read_u32(r)? as usize;
        if n < 2 {
            return Err(Error::Format(format!("patch size {n} below minimum 2")));
        }
        let dim = n * n;
        let mut values = Vec::new();
        let mut buf = [0u8; 8];
        for _ in 0..dim * dim {
            r.read_exact(&mut buf)?;
            let v = f64::from_le_bytes(buf);
            if !v.is_finite() {
                return Err(Error::Format("non-finite matrix entry".into()));
            }
            values.push(v);
        }
        let mat =
            Array2::from_shape_vec((dim, dim), values).expect("matrix buffer sized to dim*dim");
        let kv_len = read_u32(r)? as usize;
        let mut kv = vec![0u8; kv_len];
        r.read_exact(&mut kv)?;
        let kv = String::from_utf8(kv)
            .map_err(|e| Error::Format(format!("provenance not UTF-8: {e}")))?;
        let provenance = Provenance::from_kv(&kv)?;
        if r.read(&mut buf)? != 0 {
            return Err(Error::Format("trailing data after provenance".into()));
        }
        Ok(Self { n, mat, provenance })
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        Self::read_from(&mut r)
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

/// End-to-end training: assemble the sampled patch matrix, run the solver,
/// keep L. Deterministic for a fixed seed.
#[allow(clippy::too_many_arguments)]
pub fn train_projection(
    images: &[Array2<f64>],
    n: usize,
    s: usize,
    detail_count: usize,
    smooth_count: usize,
    th: f64,
    seed: u64,
    params: &LatLrrParams,
) -> Result<ProjectionMatrix> {
    let ts = build_training_set(images, n, s, detail_count, smooth_count, th, seed)?;
    let solution = solve_latlrr(ts.x.view(), params)?;
    ProjectionMatrix::new(
        n,
        solution.l,
        Provenance {
            lambda: params.lambda,
            seed,
            detail_count,
            smooth_count,
            threshold: th,
        },
    )
}
