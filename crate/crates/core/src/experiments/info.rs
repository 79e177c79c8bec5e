use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fdiv::{closed_form, DivergenceSpec, DivergenceValue};
use crate::gaussian::{row_vec, Gaussian, LinearGaussianModel};
use crate::ram::{build_mixture, FiniteMixture};
use crate::rng;

/// A Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarEstimate {
    pub value: f64,
    pub se: f64,
}

#[derive(Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn variance(&self) -> f64 {
        if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        }
    }

    fn estimate(&self) -> ScalarEstimate {
        ScalarEstimate { value: self.mean, se: (self.variance() / self.n as f64).sqrt() }
    }
}

fn need_samples(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::Domain("M must be at least 1".into()));
    }
    Ok(())
}

/// `H(m) = −E_{z∼m} log m(z)` from `m_samples` draws.
pub fn entropy_estimate(m: &FiniteMixture, m_samples: usize, seed: u64) -> Result<ScalarEstimate> {
    need_samples(m_samples)?;
    let mut r = rng::stream(seed, "entropy", 0);
    let mut z = vec![0.0; m.dim()];
    let mut acc = Moments::default();
    for _ in 0..m_samples {
        m.sample_into(&mut r, &mut z);
        acc.push(-m.log_density_unchecked(&z));
    }
    Ok(acc.estimate())
}

/// `(1/N) Σᵢ KL(Q_{Z|xᵢ} ‖ Q̂ᴺ)`, each term from `m_inner` draws of `Q_{Z|xᵢ}`.
///
/// The standard error treats the N inner averages as independent.
pub fn mi_tcpc_estimate(
    model: &LinearGaussianModel,
    xs: &DMatrix<f64>,
    m_inner: usize,
    seed: u64,
) -> Result<ScalarEstimate> {
    need_samples(m_inner)?;
    let mixture = build_mixture(model, xs)?;
    let n = xs.nrows();
    let mut z = vec![0.0; mixture.dim()];
    let (mut total, mut var) = (0.0, 0.0);
    for i in 0..n {
        let cond = model.conditional(&row_vec(xs, i))?;
        let mut r = rng::stream(seed, "tcpc", i as u64);
        let mut acc = Moments::default();
        for _ in 0..m_inner {
            cond.sample_into(&mut r, &mut z);
            acc.push(cond.log_density_unchecked(&z) - mixture.log_density_unchecked(&z));
        }
        total += acc.mean;
        var += acc.variance() / m_inner as f64;
    }
    let nf = n as f64;
    Ok(ScalarEstimate { value: total / nf, se: var.sqrt() / nf })
}

/// `TC(m) = Σᵢ H(mᵢ) − H(m)`, with `mᵢ` the one-dimensional slice mixtures.
///
/// Both entropies are taken over the same joint draws, i.e. the estimate is
/// the mean of `log m(z) − Σᵢ log mᵢ(zᵢ)` for `z ∼ m`.
pub fn total_correlation_estimate(m: &FiniteMixture, m_samples: usize, seed: u64) -> Result<ScalarEstimate> {
    need_samples(m_samples)?;
    let marginals = (0..m.dim()).map(|i| m.marginal_axis(i)).collect::<Result<Vec<_>>>()?;
    let mut r = rng::stream(seed, "total-correlation", 0);
    let mut z = vec![0.0; m.dim()];
    let mut acc = Moments::default();
    for _ in 0..m_samples {
        m.sample_into(&mut r, &mut z);
        let product: f64 = marginals.iter().zip(&z).map(|(mi, zi)| mi.log_density_unchecked(&[*zi])).sum();
        acc.push(m.log_density_unchecked(&z) - product);
    }
    Ok(acc.estimate())
}

/// `(1/N) Σᵢ KL(Q_{Z|xᵢ} ‖ Q_Z)` in closed form over the rows of `xs`.
pub fn mi_direct(model: &LinearGaussianModel, xs: &DMatrix<f64>) -> Result<f64> {
    if xs.nrows() == 0 {
        return Err(Error::Domain("need at least one input row".into()));
    }
    let marginal = Gaussian::from(model.marginal()?);
    let mut total = 0.0;
    for i in 0..xs.nrows() {
        let cond = Gaussian::from(model.conditional(&row_vec(xs, i))?);
        match closed_form(&DivergenceSpec::KL, &cond, &marginal)? {
            DivergenceValue::Finite(v) => total += v,
            DivergenceValue::Infinite => return Err(Error::NonFinite("KL to the marginal is infinite".into())),
        }
    }
    Ok(total / xs.nrows() as f64)
}

/// `I(Z; X) = ½ (log det Σ_Z − d log σ²)` for `X ∼ N(0, I)`.
pub fn mutual_information_exact(model: &LinearGaussianModel) -> Result<f64> {
    let marginal = model.marginal()?;
    let d = model.latent_dim() as f64;
    Ok(0.5 * (marginal.log_det() - d * model.noise_var().ln()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::DiagonalGaussian;

    const HALF_LN_2PI_E: f64 = 1.418_938_533_204_672_7;

    fn mix(comps: &[(Vec<f64>, Vec<f64>)]) -> FiniteMixture {
        FiniteMixture::new(comps.iter().map(|(m, v)| DiagonalGaussian::new(m.clone(), v.clone()).unwrap()).collect())
            .unwrap()
    }

    #[test]
    fn entropy_of_single_gaussian() {
        let m = mix(&[(vec![0.0], vec![1.0])]);
        let mut means = Moments::default();
        for rep in 0..200 {
            means.push(entropy_estimate(&m, 4096, rep).unwrap().value);
        }
        let e = means.estimate();
        assert!((e.value - HALF_LN_2PI_E).abs() < 3.0 * e.se, "{} ± {}", e.value, e.se);
        let two = mix(&[(vec![0.0], vec![1.0]), (vec![0.0], vec![1.0])]);
        let a = entropy_estimate(&two, 4096, 3).unwrap();
        let b = entropy_estimate(&m, 4096, 3).unwrap();
        assert!((a.value - b.value).abs() < 3.0 * (a.se * a.se + b.se * b.se).sqrt());
        assert!(entropy_estimate(&m, 0, 0).is_err());
    }

    #[test]
    fn entropy_shift_law() {
        // Same stream, scaled draws: the estimate moves by exactly log σ.
        let sigma: f64 = 3.0;
        let unit = entropy_estimate(&mix(&[(vec![0.0], vec![1.0])]), 1000, 9).unwrap();
        let wide = entropy_estimate(&mix(&[(vec![0.0], vec![sigma * sigma])]), 1000, 9).unwrap();
        assert!((wide.value - unit.value - sigma.ln()).abs() < 1e-12);
    }

    #[test]
    fn tcpc_is_zero_for_identical_inputs() {
        let model = LinearGaussianModel::new(DMatrix::from_element(2, 20, 0.1), vec![0.0, 1.0], 0.25).unwrap();
        let one = DMatrix::from_fn(1, 20, |_, j| j as f64 / 10.0);
        let e = mi_tcpc_estimate(&model, &one, 1000, 1).unwrap();
        assert_eq!(e.value, 0.0);
        let same = DMatrix::from_fn(5, 20, |_, j| j as f64 / 10.0);
        assert!(mi_tcpc_estimate(&model, &same, 1000, 1).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn tcpc_is_below_direct_mi() {
        let model = LinearGaussianModel::new(DMatrix::from_fn(2, 20, |i, j| if i == j { 0.5 } else { 0.0 }), vec![0.0; 2], 0.25)
            .unwrap();
        let xs = model.sample_inputs(&mut rng::from_seed(2), 32).unwrap();
        let tcpc = mi_tcpc_estimate(&model, &xs, 2048, 3).unwrap();
        let direct = mi_direct(&model, &xs).unwrap();
        assert!(tcpc.value < direct);
        // log 32 caps the bound.
        assert!(tcpc.value < 32f64.ln() + 3.0 * tcpc.se);
    }

    #[test]
    fn exact_mi_matches_isotropic_formula() {
        // A = a·[I 0]: Σ_Z = (a² + σ²) I.
        let (a, s2) = (0.5f64, 0.25f64);
        let model = LinearGaussianModel::new(DMatrix::from_fn(3, 20, |i, j| if i == j { a } else { 0.0 }), vec![0.0; 3], s2)
            .unwrap();
        let expected = 1.5 * ((a * a + s2) / s2).ln();
        assert!((mutual_information_exact(&model).unwrap() - expected).abs() < 1e-12);
        let xs = model.sample_inputs(&mut rng::from_seed(4), 20_000).unwrap();
        let avg = mi_direct(&model, &xs).unwrap();
        assert!((avg - expected).abs() < 0.02, "{avg} vs {expected}");
    }

    #[test]
    fn total_correlation_cases() {
        let one_d = mix(&[(vec![-1.0], vec![0.5]), (vec![2.0], vec![1.0])]);
        assert_eq!(total_correlation_estimate(&one_d, 500, 0).unwrap().value, 0.0);
        let axis = mix(&[(vec![0.3, -1.0], vec![0.5, 2.0])]);
        assert!(total_correlation_estimate(&axis, 500, 0).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn total_correlation_matches_grid() {
        let (a, v) = (1.0f64, 0.1f64);
        let m = mix(&[(vec![a, a], vec![v, v]), (vec![-a, -a], vec![v, v])]);
        let mx = m.marginal_axis(0).unwrap();
        let (lo, hi, n) = (-4.0, 4.0, 801);
        let h = (hi - lo) / (n - 1) as f64;
        let mut tc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let z = [lo + i as f64 * h, lo + j as f64 * h];
                let lq = m.log_density(&z).unwrap();
                let lp = mx.log_density(&[z[0]]).unwrap() + mx.log_density(&[z[1]]).unwrap();
                tc += lq.exp() * (lq - lp);
            }
        }
        tc *= h * h;
        // Two well separated blobs on the diagonal: TC ≈ log 2.
        assert!((tc - 2f64.ln()).abs() < 0.01);
        let e = total_correlation_estimate(&m, 20_000, 6).unwrap();
        assert!(((e.value - tc) / tc).abs() < 0.05, "{} vs {tc}", e.value);
    }
}
