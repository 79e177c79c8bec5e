//! Multivariate Gaussians and the linear-Gaussian encoder.
//!
//! Sample matrices are `count × d` with one draw per row.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Gaussian with independent coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalGaussian {
    mean: Vec<f64>,
    variances: Vec<f64>,
    inv_var: Vec<f64>,
    std_dev: Vec<f64>,
    log_norm: f64,
}

impl DiagonalGaussian {
    pub fn new(mean: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::Domain("Gaussian dimension must be at least 1".into()));
        }
        check_dim(mean.len(), variances.len())?;
        if let Some(v) = variances.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Domain(format!("variance must be positive and finite, got {v}")));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::Domain("mean must be finite".into()));
        }
        let log_norm = -0.5 * (mean.len() as f64 * LN_2PI + variances.iter().map(|v| v.ln()).sum::<f64>());
        Ok(Self {
            inv_var: variances.iter().map(|v| 1.0 / v).collect(),
            std_dev: variances.iter().map(|v| v.sqrt()).collect(),
            mean,
            variances,
            log_norm,
        })
    }

    /// `N(mean, variance · I)`.
    pub fn isotropic(mean: Vec<f64>, variance: f64) -> Result<Self> {
        let d = mean.len();
        Self::new(mean, vec![variance; d])
    }

    pub fn standard(d: usize) -> Result<Self> {
        Self::isotropic(vec![0.0; d], 1.0)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn log_density(&self, z: &[f64]) -> Result<f64> {
        check_dim(self.dim(), z.len())?;
        Ok(self.log_density_unchecked(z))
    }

    #[inline]
    pub(crate) fn log_density_unchecked(&self, z: &[f64]) -> f64 {
        let quad: f64 = z
            .iter()
            .zip(&self.mean)
            .zip(&self.inv_var)
            .map(|((z, m), iv)| {
                let r = z - m;
                r * r * iv
            })
            .sum();
        self.log_norm - 0.5 * quad
    }

    /// Writes one draw into `out` (length `d`).
    #[inline]
    pub(crate) fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for ((o, m), s) in out.iter_mut().zip(&self.mean).zip(&self.std_dev) {
            let u: f64 = rng.sample(StandardNormal);
            *o = m + s * u;
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Result<DMatrix<f64>> {
        sample_rows(self.dim(), count, |row| self.sample_into(rng, row))
    }

    /// The one-dimensional marginal along `axis`.
    pub fn marginal_axis(&self, axis: usize) -> Result<DiagonalGaussian> {
        if axis >= self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: axis + 1 });
        }
        DiagonalGaussian::new(vec![self.mean[axis]], vec![self.variances[axis]])
    }

    /// Differential entropy in nats.
    pub fn entropy(&self) -> f64 {
        0.5 * self.variances.iter().map(|v| (2.0 * PI * std::f64::consts::E * v).ln()).sum::<f64>()
    }

    pub fn to_full(&self) -> FullGaussian {
        FullGaussian::new(self.mean.clone(), DMatrix::from_diagonal(&DVector::from_column_slice(&self.variances)))
            .expect("a diagonal Gaussian is always SPD")
    }
}

/// Gaussian with a dense covariance and its Cholesky factor.
#[derive(Debug, Clone)]
pub struct FullGaussian {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    cholesky: Cholesky<f64, Dyn>,
    log_det: f64,
}

impl FullGaussian {
    /// Fails with [`Error::NotPositiveDefinite`] if the covariance cannot be factored.
    pub fn new(mean: Vec<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::Domain("Gaussian dimension must be at least 1".into()));
        }
        check_dim(d, covariance.nrows())?;
        check_dim(d, covariance.ncols())?;
        if covariance.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("covariance must be finite".into()));
        }
        let scale = covariance.amax();
        for i in 0..d {
            for j in 0..i {
                if (covariance[(i, j)] - covariance[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::Domain(format!("covariance is not symmetric at ({i}, {j})")));
                }
            }
        }
        let cholesky = Cholesky::new(covariance.clone()).ok_or(Error::NotPositiveDefinite)?;
        let l = cholesky.l();
        if l.diagonal().iter().any(|x| !(*x > 0.0)) {
            return Err(Error::NotPositiveDefinite);
        }
        let residual = (&l * l.transpose() - &covariance).amax();
        if residual > 1e-10 * scale {
            return Err(Error::NotPositiveDefinite);
        }
        let log_det = 2.0 * l.diagonal().iter().map(|x| x.ln()).sum::<f64>();
        Ok(Self { mean: DVector::from_vec(mean), covariance, cholesky, log_det })
    }

    pub fn standard(d: usize) -> Result<Self> {
        Self::new(vec![0.0; d], DMatrix::identity(d, d))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Lower-triangular `L` with `L Lᵀ = Σ`.
    pub fn cholesky_factor(&self) -> DMatrix<f64> {
        self.cholesky.l()
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn precision(&self) -> DMatrix<f64> {
        self.cholesky.inverse()
    }

    pub fn log_density(&self, z: &[f64]) -> Result<f64> {
        check_dim(self.dim(), z.len())?;
        Ok(self.log_density_unchecked(z))
    }

    pub(crate) fn log_density_unchecked(&self, z: &[f64]) -> f64 {
        // Forward substitution L y = z - mean, so the quadratic form is |y|^2.
        let l = self.cholesky.l_dirty();
        let d = self.dim();
        let mut y = vec![0.0; d];
        for i in 0..d {
            let mut acc = z[i] - self.mean[i];
            for j in 0..i {
                acc -= l[(i, j)] * y[j];
            }
            y[i] = acc / l[(i, i)];
        }
        let quad: f64 = y.iter().map(|v| v * v).sum();
        -0.5 * (d as f64 * LN_2PI + self.log_det + quad)
    }

    pub(crate) fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let l = self.cholesky.l_dirty();
        let d = self.dim();
        let u: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for i in 0..d {
            let mut acc = self.mean[i];
            for j in 0..=i {
                acc += l[(i, j)] * u[j];
            }
            out[i] = acc;
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Result<DMatrix<f64>> {
        sample_rows(self.dim(), count, |row| self.sample_into(rng, row))
    }

    pub fn entropy(&self) -> f64 {
        0.5 * (self.dim() as f64 * (LN_2PI + 1.0) + self.log_det)
    }
}

/// Either Gaussian representation, for APIs that accept both.
#[derive(Debug, Clone)]
pub enum Gaussian {
    Diagonal(DiagonalGaussian),
    Full(FullGaussian),
}

impl Gaussian {
    pub fn dim(&self) -> usize {
        match self {
            Gaussian::Diagonal(g) => g.dim(),
            Gaussian::Full(g) => g.dim(),
        }
    }

    pub fn mean_vector(&self) -> DVector<f64> {
        match self {
            Gaussian::Diagonal(g) => DVector::from_column_slice(g.mean()),
            Gaussian::Full(g) => g.mean().clone(),
        }
    }

    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        match self {
            Gaussian::Diagonal(g) => DMatrix::from_diagonal(&DVector::from_column_slice(g.variances())),
            Gaussian::Full(g) => g.covariance().clone(),
        }
    }

    pub fn log_det(&self) -> f64 {
        match self {
            Gaussian::Diagonal(g) => g.variances().iter().map(|v| v.ln()).sum(),
            Gaussian::Full(g) => g.log_det(),
        }
    }

    pub fn precision(&self) -> DMatrix<f64> {
        match self {
            Gaussian::Diagonal(g) => DMatrix::from_diagonal(&DVector::from_iterator(
                g.dim(),
                g.variances().iter().map(|v| 1.0 / v),
            )),
            Gaussian::Full(g) => g.precision(),
        }
    }

    pub fn log_density(&self, z: &[f64]) -> Result<f64> {
        match self {
            Gaussian::Diagonal(g) => g.log_density(z),
            Gaussian::Full(g) => g.log_density(z),
        }
    }

    #[inline]
    pub(crate) fn log_density_unchecked(&self, z: &[f64]) -> f64 {
        match self {
            Gaussian::Diagonal(g) => g.log_density_unchecked(z),
            Gaussian::Full(g) => g.log_density_unchecked(z),
        }
    }

    pub(crate) fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            Gaussian::Diagonal(g) => g.sample_into(rng, out),
            Gaussian::Full(g) => g.sample_into(rng, out),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Result<DMatrix<f64>> {
        match self {
            Gaussian::Diagonal(g) => g.sample(rng, count),
            Gaussian::Full(g) => g.sample(rng, count),
        }
    }

    pub fn entropy(&self) -> f64 {
        match self {
            Gaussian::Diagonal(g) => g.entropy(),
            Gaussian::Full(g) => g.entropy(),
        }
    }
}

impl From<DiagonalGaussian> for Gaussian {
    fn from(g: DiagonalGaussian) -> Self {
        Gaussian::Diagonal(g)
    }
}

impl From<FullGaussian> for Gaussian {
    fn from(g: FullGaussian) -> Self {
        Gaussian::Full(g)
    }
}

fn sample_rows(d: usize, count: usize, mut draw: impl FnMut(&mut [f64])) -> Result<DMatrix<f64>> {
    if count == 0 {
        return Err(Error::Domain("sample count must be at least 1".into()));
    }
    let mut out = DMatrix::zeros(count, d);
    let mut row = vec![0.0; d];
    for i in 0..count {
        draw(&mut row);
        for (j, v) in row.iter().enumerate() {
            out[(i, j)] = *v;
        }
    }
    Ok(out)
}

/// Copies row `i` of a sample matrix into a vector.
pub fn row_vec(m: &DMatrix<f64>, i: usize) -> Vec<f64> {
    m.row(i).iter().copied().collect()
}

/// The encoder `Q_{Z|X=x} = N(A x + b, σ² I)` with inputs `X ~ N(0, I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussianModel {
    a: DMatrix<f64>,
    b: DVector<f64>,
    noise_var: f64,
}

impl LinearGaussianModel {
    /// Input dimension used by the synthetic experiments.
    pub const DEFAULT_INPUT_DIM: usize = 20;

    pub fn new(a: DMatrix<f64>, b: Vec<f64>, noise_var: f64) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::Domain("A must be non-empty".into()));
        }
        check_dim(a.nrows(), b.len())?;
        if !(noise_var.is_finite() && noise_var > 0.0) {
            return Err(Error::Domain(format!("noise variance must be positive, got {noise_var}")));
        }
        Ok(Self { a, b: DVector::from_vec(b), noise_var })
    }

    pub fn latent_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn conditional(&self, x: &[f64]) -> Result<DiagonalGaussian> {
        check_dim(self.input_dim(), x.len())?;
        let mean = (0..self.latent_dim())
            .map(|r| self.b[r] + x.iter().enumerate().map(|(c, xc)| self.a[(r, c)] * xc).sum::<f64>())
            .collect();
        DiagonalGaussian::isotropic(mean, self.noise_var)
    }

    /// `N(b, A Aᵀ + σ² I)`, the exact marginal of `Z` when `X ~ N(0, I)`.
    pub fn marginal(&self) -> Result<FullGaussian> {
        let d = self.latent_dim();
        let mut cov = &self.a * self.a.transpose();
        for i in 0..d {
            cov[(i, i)] += self.noise_var;
        }
        // A Aᵀ is symmetric in exact arithmetic; symmetrize the rounding.
        let cov = (&cov + cov.transpose()) * 0.5;
        FullGaussian::new(self.b.iter().copied().collect(), cov)
    }

    /// Draws `n` inputs from `N(0, I)`.
    pub fn sample_inputs<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<DMatrix<f64>> {
        DiagonalGaussian::standard(self.input_dim())?.sample(rng, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

    #[test]
    fn standard_normal_at_zero() {
        let g = DiagonalGaussian::standard(1).unwrap();
        assert!((g.log_density(&[0.0]).unwrap() + HALF_LN_2PI).abs() < 1e-12);
        let g = DiagonalGaussian::new(vec![1.0], vec![1.0]).unwrap();
        assert!((g.log_density(&[1.0]).unwrap() + HALF_LN_2PI).abs() < 1e-12);
    }

    #[test]
    fn full_gaussian_at_mean_uses_determinant() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        // det by cofactor expansion
        let det = cov[(0, 0)] * cov[(1, 1)] - cov[(0, 1)] * cov[(1, 0)];
        assert_eq!(det, 3.0);
        let g = FullGaussian::new(vec![0.3, -0.7], cov).unwrap();
        let expected = -0.5 * ((2.0 * PI).powi(2) * det).ln();
        assert!((g.log_density(&[0.3, -0.7]).unwrap() - expected).abs() < 1e-12);
        assert!((g.log_det() - det.ln()).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let g = DiagonalGaussian::standard(2).unwrap();
        assert!(matches!(g.log_density(&[0.0]), Err(Error::Dimension { expected: 2, got: 1 })));
        let f = FullGaussian::standard(3).unwrap();
        assert!(matches!(f.log_density(&[0.0; 2]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(DiagonalGaussian::new(vec![0.0], vec![0.0]).is_err());
        assert!(DiagonalGaussian::new(vec![], vec![]).is_err());
        assert!(DiagonalGaussian::new(vec![0.0, 1.0], vec![1.0]).is_err());
        let not_spd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(FullGaussian::new(vec![0.0; 2], not_spd), Err(Error::NotPositiveDefinite)));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(FullGaussian::new(vec![0.0; 2], asym), Err(Error::Domain(_))));
    }

    #[test]
    fn cholesky_reproduces_covariance() {
        let cov = DMatrix::from_row_slice(3, 3, &[4.0, 1.2, 0.3, 1.2, 2.0, -0.4, 0.3, -0.4, 1.5]);
        let g = FullGaussian::new(vec![0.0; 3], cov.clone()).unwrap();
        let l = g.cholesky_factor();
        assert!((&l * l.transpose() - cov).amax() < 1e-12);
        assert!(l.upper_triangle().iter().enumerate().all(|(k, v)| k % 4 == 0 || *v == 0.0));
    }

    #[test]
    fn trapezoid_integrates_to_one() {
        for (mean, var) in [(0.0, 1.0), (2.5, 0.3), (-1.0, 4.0)] {
            let g = DiagonalGaussian::new(vec![mean], vec![var]).unwrap();
            let sd: f64 = var.sqrt();
            let (lo, hi, n) = (mean - 10.0 * sd, mean + 10.0 * sd, 10_000);
            let h = (hi - lo) / (n - 1) as f64;
            let total: f64 = (0..n)
                .map(|i| {
                    let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                    w * g.log_density(&[lo + i as f64 * h]).unwrap().exp()
                })
                .sum::<f64>()
                * h;
            assert!((total - 1.0).abs() < 1e-6, "{total}");
        }
    }

    #[test]
    fn full_with_diagonal_covariance_matches_diagonal() {
        use rand::Rng;
        let diag = DiagonalGaussian::new(vec![0.5, -1.0, 2.0], vec![0.7, 1.3, 2.2]).unwrap();
        let full = diag.to_full();
        let mut r = rng::stream(3, "pts", 0);
        for _ in 0..100 {
            let z: Vec<f64> = (0..3).map(|_| r.random_range(-5.0..5.0)).collect();
            let a = diag.log_density(&z).unwrap();
            let b = full.log_density(&z).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let g = FullGaussian::new(vec![1.0, 2.0], DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap();
        let a = g.sample(&mut rng::stream(11, "s", 0), 50).unwrap();
        let b = g.sample(&mut rng::stream(11, "s", 0), 50).unwrap();
        assert_eq!(a, b);
        assert_eq!(g.sample(&mut rng::stream(11, "s", 0), 1).unwrap().nrows(), 1);
        assert!(g.sample(&mut rng::stream(11, "s", 0), 0).is_err());
    }

    #[test]
    fn sample_mean_of_standard_normal() {
        let g = DiagonalGaussian::standard(1).unwrap();
        let s = g.sample(&mut rng::stream(5, "mean", 0), 100_000).unwrap();
        assert!(s.mean().abs() < 0.02);
    }

    #[test]
    fn full_sampling_matches_covariance() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.8, 0.8, 1.0]);
        let g = FullGaussian::new(vec![0.0, 0.0], cov.clone()).unwrap();
        let s = g.sample(&mut rng::stream(9, "cov", 0), 100_000).unwrap();
        let emp = s.transpose() * &s / s.nrows() as f64;
        assert!(((emp - cov).amax()) < 0.05);
    }

    fn naive_matvec(a: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.nrows()];
        for r in 0..a.nrows() {
            for c in 0..a.ncols() {
                out[r] += a[(r, c)] * x[c];
            }
        }
        out
    }

    #[test]
    fn conditional_cases() {
        let zero = LinearGaussianModel::new(DMatrix::zeros(3, 20), vec![0.0; 3], 0.25).unwrap();
        let c = zero.conditional(&[1.0; 20]).unwrap();
        assert_eq!(c.mean(), &[0.0; 3]);
        assert_eq!(c.variances(), &[0.25; 3]);

        let mut a = DMatrix::zeros(1, 20);
        a[(0, 0)] = 1.0;
        let unit = LinearGaussianModel::new(a, vec![0.0], 0.25).unwrap();
        let mut e1 = vec![0.0; 20];
        e1[0] = 1.0;
        assert_eq!(unit.conditional(&e1).unwrap().mean(), &[1.0]);
        assert!(matches!(unit.conditional(&[0.0; 3]), Err(Error::Dimension { .. })));

        let mut r = rng::stream(1, "A", 0);
        let a = DiagonalGaussian::standard(1).unwrap().sample(&mut r, 80).unwrap();
        let a = DMatrix::from_column_slice(4, 20, a.as_slice());
        let b = vec![0.1, -0.2, 0.3, 0.0];
        let model = LinearGaussianModel::new(a.clone(), b.clone(), 0.25).unwrap();
        let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
        let got = model.conditional(&x).unwrap();
        for (i, (g, n)) in got.mean().iter().zip(naive_matvec(&a, &x)).enumerate() {
            assert!((g - (n + b[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn marginal_cases() {
        let m = LinearGaussianModel::new(DMatrix::zeros(2, 20), vec![0.5, -0.5], 0.25).unwrap();
        let q = m.marginal().unwrap();
        assert_eq!(q.mean().as_slice(), &[0.5, -0.5]);
        assert!((q.covariance() - DMatrix::identity(2, 2) * 0.25).amax() < 1e-15);

        let mut a = DMatrix::zeros(1, 20);
        a[(0, 0)] = 1.0;
        let m = LinearGaussianModel::new(a, vec![0.0], 0.25).unwrap();
        assert!((m.marginal().unwrap().covariance()[(0, 0)] - 1.25).abs() < 1e-15);
    }

    #[test]
    fn marginal_matches_ancestral_sampling() {
        let mut r = rng::stream(2, "A", 0);
        let a = DiagonalGaussian::isotropic(vec![0.0; 60], 0.1).unwrap().sample(&mut r, 1).unwrap();
        let model = LinearGaussianModel::new(DMatrix::from_row_slice(3, 20, a.as_slice()), vec![0.2, 0.0, -0.3], 0.25)
            .unwrap();
        let n = 100_000;
        let xs = model.sample_inputs(&mut r, n).unwrap();
        let mut zs = DMatrix::zeros(n, 3);
        let mut buf = vec![0.0; 3];
        for i in 0..n {
            model.conditional(&row_vec(&xs, i)).unwrap().sample_into(&mut r, &mut buf);
            for j in 0..3 {
                zs[(i, j)] = buf[j];
            }
        }
        let mean = zs.row_mean();
        let centered = DMatrix::from_fn(n, 3, |i, j| zs[(i, j)] - mean[j]);
        let emp = centered.transpose() * &centered / (n - 1) as f64;
        let cov = model.marginal().unwrap().covariance().clone();
        for i in 0..3 {
            assert!(((emp[(i, i)] - cov[(i, i)]) / cov[(i, i)]).abs() < 0.05);
        }
        assert!((emp - &cov).amax() < 0.05 * cov.amax());
    }
}
