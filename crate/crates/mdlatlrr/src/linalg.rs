//! Dense linear-algebra kernels shared by the solver and the fusion
//! strategies: full SVD, nuclear norm, element-wise soft thresholding and
//! singular value thresholding.

use ndarray::{Array1, Array2};
use ndarray_linalg::{JobSvd, SVDDC};

use crate::error::{Error, Result};

/// Economy-size singular value decomposition `m = U * diag(s) * V^T`.
///
/// `u` is rows x k, `v` is cols x k with k = min(rows, cols); both have
/// orthonormal columns. Singular values are non-negative and sorted in
/// descending order.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: Array2<f64>,
    pub singular_values: Array1<f64>,
    pub v: Array2<f64>,
}

impl SvdFactors {
    /// Recompose `U * diag(s) * V^T`.
    pub fn recompose(&self) -> Array2<f64> {
        let scaled = &self.u * &self.singular_values;
        scaled.dot(&self.v.t())
    }
}

pub(crate) fn ensure_finite(m: &Array2<f64>, context: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            context: context.to_string(),
        })
    }
}

/// Full (economy) SVD of a dense matrix.
///
/// The factorization is delegated to LAPACK's divide-and-conquer driver;
/// a non-converged factorization surfaces as [`Error::Factorization`] rather
/// than silent garbage.
pub fn svd(m: &Array2<f64>) -> Result<SvdFactors> {
    ensure_finite(m, "svd input")?;
    let (u, s, vt) = m
        .svddc(JobSvd::Some)
        .map_err(|e| Error::Factorization(e.to_string()))?;
    let u = u.ok_or_else(|| Error::Factorization("missing U factor".into()))?;
    let vt = vt.ok_or_else(|| Error::Factorization("missing V^T factor".into()))?;
    Ok(SvdFactors {
        u,
        singular_values: s,
        v: vt.t().to_owned(),
    })
}

/// Singular values only (cheaper than [`svd`] when factors are not needed).
pub fn singular_values(m: &Array2<f64>) -> Result<Array1<f64>> {
    ensure_finite(m, "singular_values input")?;
    let (_, s, _) = m
        .svddc(JobSvd::None)
        .map_err(|e| Error::Factorization(e.to_string()))?;
    Ok(s)
}

/// Nuclear norm: sum of the singular values of the matrix.
pub fn nuclear_norm(m: &Array2<f64>) -> Result<f64> {
    Ok(singular_values(m)?.sum())
}

/// Entrywise shrinkage `sign(x) * max(|x| - tau, 0)`.
pub fn soft_threshold(m: &Array2<f64>, tau: f64) -> Result<Array2<f64>> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "soft_threshold requires tau >= 0, got {tau}"
        )));
    }
    Ok(m.mapv(|x| x.signum() * (x.abs() - tau).max(0.0)))
}

/// Singular value thresholding `U * diag(max(s - tau, 0)) * V^T`, the
/// proximal operator of the nuclear norm.
pub fn svt(m: &Array2<f64>, tau: f64) -> Result<Array2<f64>> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "svt requires tau >= 0, got {tau}"
        )));
    }
    let f = svd(m)?;
    // Keep only components whose singular value survives the shrinkage.
    let kept = f.singular_values.iter().take_while(|&&s| s > tau).count();
    if kept == 0 {
        return Ok(Array2::zeros(m.dim()));
    }
    let u = f.u.slice(ndarray::s![.., ..kept]);
    let v = f.v.slice(ndarray::s![.., ..kept]);
    let s = f
        .singular_values
        .slice(ndarray::s![..kept])
        .mapv(|x| x - tau);
    let scaled = &u * &s;
    Ok(scaled.dot(&v.t()))
}
