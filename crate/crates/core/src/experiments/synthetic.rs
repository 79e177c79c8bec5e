use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::gaussian::LinearGaussianModel;
use crate::rng;

/// Noise standard deviation of the encoder.
pub const DEFAULT_EPS: f64 = 0.5;

/// One latent dimension's worth of the synthetic family `A_λ = ½A₁ + λA₀`, `b_λ = λv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFamily {
    pub d: usize,
    /// i.i.d. standard normal entries scaled to unit Frobenius norm.
    pub a0: DMatrix<f64>,
    /// Ones on the main diagonal.
    pub a1: DMatrix<f64>,
    /// Uniform on the unit sphere.
    pub v: DVector<f64>,
    pub eps: f64,
    pub seed: u64,
}

pub fn make_family(d: usize, seed: u64) -> Result<SyntheticFamily> {
    if d == 0 {
        return Err(Error::Domain("latent dimension must be at least 1".into()));
    }
    let k = LinearGaussianModel::DEFAULT_INPUT_DIM;
    let mut r = rng::stream(seed, "family", d as u64);
    let a0 = DMatrix::from_fn(d, k, |_, _| r.sample::<f64, _>(StandardNormal));
    let a0 = &a0 / a0.norm();
    let v = DVector::from_fn(d, |_, _| r.sample::<f64, _>(StandardNormal));
    let v = &v / v.norm();
    let a1 = DMatrix::from_fn(d, k, |i, j| if i == j { 1.0 } else { 0.0 });
    Ok(SyntheticFamily { d, a0, a1, v, eps: DEFAULT_EPS, seed })
}

pub fn model_at(fam: &SyntheticFamily, lambda: f64) -> Result<LinearGaussianModel> {
    let a = &fam.a1 * 0.5 + &fam.a0 * lambda;
    let b = (&fam.v * lambda).as_slice().to_vec();
    LinearGaussianModel::new(a, b, fam.eps * fam.eps)
}
