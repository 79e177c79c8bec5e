//! Plug-in baseline: Gaussian kernel density estimates substituted into the
//! divergence integral.
//!
//! The kernel covariance follows Scott's rule, `n^(−1/(d+4))² · Σ̂` with `Σ̂` the
//! unbiased sample covariance.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{check_dim, Error, Result};
use crate::fdiv::{f0_over_ratio, DivergenceSpec};
use crate::gaussian::DiagonalGaussian;
use crate::ram::FiniteMixture;

/// A fitted Gaussian KDE.
///
/// Evaluation whitens by the kernel Cholesky factor, after which the estimate
/// is an equal-weight mixture of unit-variance Gaussians.
#[derive(Debug, Clone)]
pub struct KdeModel {
    points: DMatrix<f64>,
    bandwidth_factor: f64,
    kernel_cov: DMatrix<f64>,
    kernel_chol: Cholesky<f64, Dyn>,
    whitened: FiniteMixture,
    half_log_det: f64,
}

impl KdeModel {
    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn bandwidth_factor(&self) -> f64 {
        self.bandwidth_factor
    }

    pub fn kernel_cov(&self) -> &DMatrix<f64> {
        &self.kernel_cov
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    fn whiten(&self, z: &[f64]) -> Vec<f64> {
        let v = self.kernel_chol.l().solve_lower_triangular(&DVector::from_column_slice(z)).expect("factor is nonsingular");
        v.as_slice().to_vec()
    }

    pub fn log_density(&self, z: &[f64]) -> Result<f64> {
        check_dim(self.dim(), z.len())?;
        Ok(self.whitened.log_density(&self.whiten(z))? - self.half_log_det)
    }
}

/// Scott's factor `n^(−1/(d+4))`.
pub fn scott_factor(n: usize, d: usize) -> f64 {
    (n as f64).powf(-1.0 / (d as f64 + 4.0))
}

pub fn kde_fit(samples: &DMatrix<f64>) -> Result<KdeModel> {
    let (n, d) = samples.shape();
    if d == 0 || n < d + 1 {
        return Err(Error::Domain(format!("KDE needs at least d + 1 = {} samples, got {n}", d + 1)));
    }
    let mean = samples.row_mean();
    let centered = DMatrix::from_fn(n, d, |i, j| samples[(i, j)] - mean[j]);
    let cov = centered.transpose() * &centered / (n - 1) as f64;
    let factor = scott_factor(n, d);
    let kernel_cov = &cov * (factor * factor);
    let singular = || Error::Numerical("sample covariance is singular".into());
    let kernel_chol = Cholesky::new(kernel_cov.clone()).ok_or_else(singular)?;
    let diag = kernel_chol.l_dirty().diagonal();
    let scale = diag.amax();
    if diag.iter().any(|v| !(*v > 1e-12 * scale) || !v.is_finite()) || scale == 0.0 {
        return Err(singular());
    }
    let half_log_det = diag.iter().map(|v| v.ln()).sum::<f64>();
    let l = kernel_chol.l();
    let comps = (0..n)
        .map(|i| {
            let x = DVector::from_iterator(d, samples.row(i).iter().copied());
            let w = l.solve_lower_triangular(&x).ok_or_else(singular)?;
            DiagonalGaussian::isotropic(w.as_slice().to_vec(), 1.0)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KdeModel {
        points: samples.clone(),
        bandwidth_factor: factor,
        kernel_cov,
        kernel_chol,
        whitened: FiniteMixture::new(comps)?,
        half_log_det,
    })
}

pub fn kde_log_density(k: &KdeModel, z: &[f64]) -> Result<f64> {
    k.log_density(z)
}

/// Plug-in estimate of `∫ f₀(q̂/p̂) p̂` using evaluation points drawn from `Q`.
///
/// With `r = q̂/p̂` the integrand is rewritten as `E_{z∼q̂}[f₀(r)/r]`; the
/// evaluation points stand in for draws from `q̂`, so the result can be negative.
pub fn plugin_estimate(
    spec: &DivergenceSpec,
    q_samples: &DMatrix<f64>,
    p_samples: &DMatrix<f64>,
    eval_samples_from_q: &DMatrix<f64>,
) -> Result<f64> {
    let m = eval_samples_from_q.nrows();
    if m == 0 {
        return Err(Error::Domain("need at least one evaluation point".into()));
    }
    let q_hat = kde_fit(q_samples)?;
    let p_hat = kde_fit(p_samples)?;
    check_dim(q_hat.dim(), p_hat.dim())?;
    check_dim(q_hat.dim(), eval_samples_from_q.ncols())?;
    let mut total = 0.0;
    for i in 0..m {
        let z: Vec<f64> = eval_samples_from_q.row(i).iter().copied().collect();
        let log_ratio = q_hat.log_density(&z)? - p_hat.log_density(&z)?;
        total += f0_over_ratio(spec, log_ratio);
    }
    let value = total / m as f64;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(format!("plug-in estimate is {value}")))
    }
}
