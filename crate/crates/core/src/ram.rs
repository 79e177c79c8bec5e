//! The random finite mixture and its Monte-Carlo divergence estimator.
//!
//! Given inputs `x₁..x_N`, the mixture `(1/N) Σ Q_{Z|xᵢ}` stands in for the
//! intractable marginal `Q_Z`. [`ram_mc`] estimates `D_f(mixture ‖ prior)` by
//! importance sampling from either the prior or the mixture itself.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::fdiv::{closed_form, f0_from_log_ratio, f0_over_ratio, DivergenceSpec, DivergenceValue};
use crate::gaussian::{row_vec, DiagonalGaussian, Gaussian, LinearGaussianModel};
use crate::rng;

/// Equal-weight mixture of diagonal Gaussians.
#[derive(Debug, Clone)]
pub struct FiniteMixture {
    components: Vec<DiagonalGaussian>,
    dim: usize,
    // Evaluation tables, in a canonical component order so that the density
    // does not depend on the order components were supplied in.
    means: Vec<f64>,
    inv_vars: Vec<f64>,
    log_norms: Vec<f64>,
    log_n: f64,
}

impl FiniteMixture {
    pub fn new(components: Vec<DiagonalGaussian>) -> Result<Self> {
        let first = components.first().ok_or_else(|| Error::Domain("a mixture needs at least one component".into()))?;
        let dim = first.dim();
        for c in &components {
            check_dim(dim, c.dim())?;
        }
        let mut order: Vec<usize> = (0..components.len()).collect();
        order.sort_by(|&i, &j| canonical_cmp(&components[i], &components[j]));

        let mut means = Vec::with_capacity(components.len() * dim);
        let mut inv_vars = Vec::with_capacity(components.len() * dim);
        let mut log_norms = Vec::with_capacity(components.len());
        for &i in &order {
            let c = &components[i];
            means.extend_from_slice(c.mean());
            inv_vars.extend(c.variances().iter().map(|v| 1.0 / v));
            // log density at the mean
            log_norms.push(c.log_density_unchecked(c.mean()));
        }
        let log_n = (components.len() as f64).ln();
        Ok(Self { components, dim, means, inv_vars, log_norms, log_n })
    }

    pub fn components(&self) -> &[DiagonalGaussian] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn log_density(&self, z: &[f64]) -> Result<f64> {
        check_dim(self.dim, z.len())?;
        Ok(self.log_density_unchecked(z))
    }

    /// `log((1/N) Σ exp(log qᵢ(z)))` with a streaming log-sum-exp.
    #[inline]
    pub(crate) fn log_density_unchecked(&self, z: &[f64]) -> f64 {
        let d = self.dim;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for (k, &ln) in self.log_norms.iter().enumerate() {
            let mu = &self.means[k * d..(k + 1) * d];
            let iv = &self.inv_vars[k * d..(k + 1) * d];
            let mut quad = 0.0;
            for j in 0..d {
                let r = z[j] - mu[j];
                quad += r * r * iv[j];
            }
            let lp = ln - 0.5 * quad;
            if lp > max {
                sum = sum * (max - lp).exp() + 1.0;
                max = lp;
            } else {
                sum += (lp - max).exp();
            }
        }
        max + sum.ln() - self.log_n
    }

    /// One draw: a uniform component, then a Gaussian draw from it.
    pub(crate) fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let k = if self.components.len() == 1 { 0 } else { rng.random_range(0..self.components.len()) };
        self.components[k].sample_into(rng, out);
    }

    /// The one-dimensional mixture of the `axis`-th coordinate slices.
    pub fn marginal_axis(&self, axis: usize) -> Result<FiniteMixture> {
        let comps = self.components.iter().map(|c| c.marginal_axis(axis)).collect::<Result<Vec<_>>>()?;
        FiniteMixture::new(comps)
    }
}

fn canonical_cmp(a: &DiagonalGaussian, b: &DiagonalGaussian) -> Ordering {
    a.mean()
        .iter()
        .chain(a.variances())
        .zip(b.mean().iter().chain(b.variances()))
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

/// Importance-sampling proposal for [`ram_mc`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProposalChoice {
    /// Draw from the prior; importance weights are identically one.
    Prior,
    /// Draw from the mixture; weight `p(z)/q̂(z)`.
    Mixture,
}

impl fmt::Display for ProposalChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProposalChoice::Prior => "prior",
            ProposalChoice::Mixture => "mixture",
        })
    }
}

impl FromStr for ProposalChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "prior" => Ok(ProposalChoice::Prior),
            "mixture" => Ok(ProposalChoice::Mixture),
            other => Err(Error::Usage(format!("unknown proposal `{other}` (expected prior or mixture)"))),
        }
    }
}

/// Result of one Monte-Carlo run.
///
/// `value` is never clamped: an overflowing term leaves it infinite or NaN,
/// which [`McEstimate::outcome`] reports as [`Error::NonFinite`].
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    /// Sample standard deviation of the per-draw terms.
    pub term_std: f64,
    pub m_samples: usize,
    pub n_components: usize,
    pub proposal: ProposalChoice,
    pub seed: u64,
}

impl McEstimate {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }

    pub fn outcome(&self) -> Result<f64> {
        if self.is_finite() {
            Ok(self.value)
        } else {
            Err(Error::NonFinite(format!("RAM-MC value {} (N={}, M={})", self.value, self.n_components, self.m_samples)))
        }
    }
}

/// Builds the mixture of `conditional(model, xsᵢ)` over the rows of `xs`, in row order.
pub fn build_mixture(model: &LinearGaussianModel, xs: &DMatrix<f64>) -> Result<FiniteMixture> {
    if xs.nrows() == 0 {
        return Err(Error::Domain("need at least one input row".into()));
    }
    check_dim(model.input_dim(), xs.ncols())?;
    let comps = (0..xs.nrows()).map(|i| model.conditional(&row_vec(xs, i))).collect::<Result<Vec<_>>>()?;
    FiniteMixture::new(comps)
}

pub fn mixture_log_density(m: &FiniteMixture, z: &[f64]) -> Result<f64> {
    m.log_density(z)
}

pub fn sample_mixture<R: Rng + ?Sized>(m: &FiniteMixture, rng: &mut R, count: usize) -> Result<DMatrix<f64>> {
    if count == 0 {
        return Err(Error::Domain("sample count must be at least 1".into()));
    }
    let mut out = DMatrix::zeros(count, m.dim());
    let mut row = vec![0.0; m.dim()];
    for i in 0..count {
        m.sample_into(rng, &mut row);
        for (j, v) in row.iter().enumerate() {
            out[(i, j)] = *v;
        }
    }
    Ok(out)
}

/// RAM-MC estimate of `D_f(m ‖ prior)` from `m_samples` draws of the proposal.
pub fn ram_mc(
    spec: &DivergenceSpec,
    m: &FiniteMixture,
    prior: &Gaussian,
    m_samples: usize,
    proposal: ProposalChoice,
    seed: u64,
) -> Result<McEstimate> {
    Ok(ram_mc_many(std::slice::from_ref(spec), m, prior, m_samples, proposal, seed)?.remove(0))
}

/// [`ram_mc`] for several divergences sharing the same draws.
pub fn ram_mc_many(
    specs: &[DivergenceSpec],
    m: &FiniteMixture,
    prior: &Gaussian,
    m_samples: usize,
    proposal: ProposalChoice,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    if m_samples == 0 {
        return Err(Error::Domain("M must be at least 1".into()));
    }
    check_dim(m.dim(), prior.dim())?;
    let mut rng = rng::from_seed(seed);
    let mut z = vec![0.0; m.dim()];
    let mut sums = vec![0.0; specs.len()];
    let mut sq_sums = vec![0.0; specs.len()];
    for _ in 0..m_samples {
        match proposal {
            ProposalChoice::Prior => prior.sample_into(&mut rng, &mut z),
            ProposalChoice::Mixture => m.sample_into(&mut rng, &mut z),
        }
        let log_ratio = m.log_density_unchecked(&z) - prior.log_density_unchecked(&z);
        for (k, spec) in specs.iter().enumerate() {
            let term = match proposal {
                ProposalChoice::Prior => f0_from_log_ratio(spec, log_ratio),
                ProposalChoice::Mixture => f0_over_ratio(spec, log_ratio),
            };
            sums[k] += term;
            sq_sums[k] += term * term;
        }
    }
    let mf = m_samples as f64;
    Ok(specs
        .iter()
        .enumerate()
        .map(|(k, _)| {
            let mean = sums[k] / mf;
            let var = if m_samples > 1 { ((sq_sums[k] - mf * mean * mean) / (mf - 1.0)).max(0.0) } else { 0.0 };
            McEstimate {
                value: mean,
                term_std: var.sqrt(),
                m_samples,
                n_components: m.len(),
                proposal,
                seed,
            }
        })
        .collect())
}

/// Keeps `m_sub` components chosen uniformly without replacement.
pub fn subsample_mixture<R: Rng + ?Sized>(m: &FiniteMixture, m_sub: usize, rng: &mut R) -> Result<FiniteMixture> {
    if m_sub == 0 || m_sub > m.len() {
        return Err(Error::Domain(format!("subsample size must be in 1..={}, got {m_sub}", m.len())));
    }
    let picked = index::sample(rng, m.len(), m_sub);
    FiniteMixture::new(picked.iter().map(|i| m.components[i].clone()).collect())
}

/// `maxᵢ χ²(Q_{Z|xᵢ} ‖ prior)`; infinite if any component is too wide for the prior.
pub fn assumption_chi2_bound(model: &LinearGaussianModel, xs: &DMatrix<f64>, prior: &Gaussian) -> Result<DivergenceValue> {
    let mixture = build_mixture(model, xs)?;
    let mut worst = 0.0f64;
    for c in mixture.components() {
        match closed_form(&DivergenceSpec::CHI_SQ, &Gaussian::from(c.clone()), prior)? {
            DivergenceValue::Finite(v) => worst = worst.max(v),
            DivergenceValue::Infinite => return Ok(DivergenceValue::Infinite),
        }
    }
    Ok(DivergenceValue::Finite(worst))
}

/// Monte-Carlo estimate of `E_{X, Z∼prior}[(q(Z|X)/p(Z))⁴]` with `X` uniform over the rows of `xs`.
pub fn assumption_fourth_moment(
    model: &LinearGaussianModel,
    xs: &DMatrix<f64>,
    prior: &Gaussian,
    m_samples: usize,
    seed: u64,
) -> Result<f64> {
    if m_samples == 0 {
        return Err(Error::Domain("M must be at least 1".into()));
    }
    let mixture = build_mixture(model, xs)?;
    check_dim(mixture.dim(), prior.dim())?;
    let mut rng = rng::from_seed(seed);
    let mut z = vec![0.0; prior.dim()];
    let comps = mixture.components();
    let mut sum = 0.0;
    for _ in 0..m_samples {
        let k = if comps.len() == 1 { 0 } else { rng.random_range(0..comps.len()) };
        prior.sample_into(&mut rng, &mut z);
        sum += (4.0 * (comps[k].log_density_unchecked(&z) - prior.log_density_unchecked(&z))).exp();
    }
    let value = sum / m_samples as f64;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite("fourth moment of the density ratio overflowed".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;

    fn g(mean: &[f64], var: &[f64]) -> DiagonalGaussian {
        DiagonalGaussian::new(mean.to_vec(), var.to_vec()).unwrap()
    }

    fn random_model(d: usize, seed: u64) -> LinearGaussianModel {
        let mut r = rng::stream(seed, "model", 0);
        let a = DiagonalGaussian::isotropic(vec![0.0; d * 20], 0.05).unwrap().sample(&mut r, 1).unwrap();
        let b = DiagonalGaussian::isotropic(vec![0.0; d], 0.1).unwrap().sample(&mut r, 1).unwrap();
        LinearGaussianModel::new(DMatrix::from_row_slice(d, 20, a.as_slice()), b.as_slice().to_vec(), 0.25).unwrap()
    }

    #[test]
    fn build_mixture_cases() {
        let model = random_model(2, 1);
        let xs = model.sample_inputs(&mut rng::stream(1, "x", 0), 5).unwrap();
        let m = build_mixture(&model, &xs).unwrap();
        assert_eq!(m.len(), 5);
        for i in 0..5 {
            let x = row_vec(&xs, i);
            let mut expected = model.b().clone();
            for r in 0..2 {
                for c in 0..20 {
                    expected[r] += model.a()[(r, c)] * x[c];
                }
            }
            for r in 0..2 {
                assert!((m.components()[i].mean()[r] - expected[r]).abs() < 1e-12);
            }
        }

        let one = build_mixture(&model, &xs.rows(0, 1).into_owned()).unwrap();
        assert_eq!(one.components()[0], model.conditional(&row_vec(&xs, 0)).unwrap());

        let same = DMatrix::from_fn(3, 20, |_, c| xs[(0, c)]);
        let m3 = build_mixture(&model, &same).unwrap();
        for z in [[0.0, 0.0], [1.0, -2.0], [0.3, 0.7]] {
            assert!((m3.log_density(&z).unwrap() - one.log_density(&z).unwrap()).abs() < 1e-14);
        }
        assert!(build_mixture(&model, &DMatrix::zeros(0, 20)).is_err());
        assert!(matches!(build_mixture(&model, &DMatrix::zeros(2, 19)), Err(Error::Dimension { .. })));
    }

    #[test]
    fn mixture_density_cases() {
        let c = g(&[0.5], &[2.0]);
        let m = FiniteMixture::new(vec![c.clone()]).unwrap();
        assert!((m.log_density(&[1.3]).unwrap() - c.log_density(&[1.3]).unwrap()).abs() < 1e-14);

        let a = 1.7;
        let m = FiniteMixture::new(vec![g(&[-a], &[1.0]), g(&[a], &[1.0])]).unwrap();
        let single = g(&[a], &[1.0]).log_density(&[0.0]).unwrap();
        assert!((m.log_density(&[0.0]).unwrap() - single).abs() < 1e-14);

        let mut r = rng::stream(4, "mix", 0);
        let comps: Vec<DiagonalGaussian> = (0..4)
            .map(|_| {
                g(&[r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)], &[r.random_range(0.2..2.0), r.random_range(0.2..2.0)])
            })
            .collect();
        let m = FiniteMixture::new(comps.clone()).unwrap();
        for _ in 0..50 {
            let z = [r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)];
            let naive: f64 = comps.iter().map(|c| c.log_density(&z).unwrap().exp()).sum::<f64>() / 4.0;
            let got = m.log_density(&z).unwrap().exp();
            assert!(((got - naive) / naive).abs() < 1e-12);
        }
        assert!(m.log_density(&[0.0]).is_err());
        assert!(FiniteMixture::new(vec![]).is_err());
        assert!(FiniteMixture::new(vec![g(&[0.0], &[1.0]), g(&[0.0, 0.0], &[1.0, 1.0])]).is_err());
    }

    #[test]
    fn far_tail_density_is_finite() {
        let m = FiniteMixture::new(vec![g(&[0.0; 16], &[0.25; 16]), g(&[1.0; 16], &[0.25; 16])]).unwrap();
        let v = m.log_density(&[60.0; 16]).unwrap();
        assert!(v.is_finite() && v < -1e4);
    }

    #[test]
    fn density_is_permutation_invariant() {
        let mut r = rng::stream(8, "perm", 0);
        let mut comps: Vec<DiagonalGaussian> =
            (0..9).map(|_| g(&[r.random_range(-2.0..2.0)], &[r.random_range(0.1..3.0)])).collect();
        let base = FiniteMixture::new(comps.clone()).unwrap();
        for _ in 0..10 {
            comps.shuffle(&mut r);
            let m = FiniteMixture::new(comps.clone()).unwrap();
            for z in [-3.0, -0.1, 0.0, 1.7] {
                assert_eq!(m.log_density(&[z]).unwrap(), base.log_density(&[z]).unwrap());
            }
        }
    }

    #[test]
    fn sample_mixture_cases() {
        let c = g(&[0.3, -0.2], &[0.5, 2.0]);
        let one = FiniteMixture::new(vec![c.clone()]).unwrap();
        let a = sample_mixture(&one, &mut rng::from_seed(42), 20).unwrap();
        let b = c.sample(&mut rng::from_seed(42), 20).unwrap();
        assert_eq!(a, b);
        assert_eq!(sample_mixture(&one, &mut rng::from_seed(1), 1).unwrap().nrows(), 1);

        let two = FiniteMixture::new(vec![g(&[-100.0], &[1.0]), g(&[100.0], &[1.0])]).unwrap();
        let n = 20_000;
        let s = sample_mixture(&two, &mut rng::from_seed(3), n).unwrap();
        let frac = s.iter().filter(|v| **v > 0.0).count() as f64 / n as f64;
        assert!((frac - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn ram_mc_is_zero_when_mixture_is_prior() {
        let prior_d = DiagonalGaussian::standard(3).unwrap();
        let m = FiniteMixture::new(vec![prior_d.clone()]).unwrap();
        let prior: Gaussian = prior_d.into();
        for spec in [DivergenceSpec::KL, DivergenceSpec::CHI_SQ, DivergenceSpec::JS, DivergenceSpec::TV] {
            for m_samples in [1, 7, 100] {
                let e = ram_mc(&spec, &m, &prior, m_samples, ProposalChoice::Prior, 5).unwrap();
                assert_eq!(e.value, 0.0);
            }
        }
    }

    #[test]
    fn ram_mc_kl_mean_shift() {
        let m = FiniteMixture::new(vec![g(&[1.0], &[1.0])]).unwrap();
        let prior: Gaussian = DiagonalGaussian::standard(1).unwrap().into();
        for proposal in [ProposalChoice::Prior, ProposalChoice::Mixture] {
            let vals: Vec<f64> = (0..200)
                .map(|t| ram_mc(&DivergenceSpec::KL, &m, &prior, 1024, proposal, rng::derive_seed(1, "t", t)).unwrap().value)
                .collect();
            let (mean, se) = mean_se(&vals);
            assert!((mean - 0.5).abs() < 3.0 * se, "{proposal}: {mean} ± {se}");
        }
    }

    #[test]
    fn proposals_agree_for_chi_sq() {
        let model = random_model(2, 2);
        let xs = model.sample_inputs(&mut rng::stream(2, "x", 0), 8).unwrap();
        let m = build_mixture(&model, &xs).unwrap();
        let prior: Gaussian = DiagonalGaussian::standard(2).unwrap().into();
        let run = |p| {
            let v: Vec<f64> = (0..200)
                .map(|t| ram_mc(&DivergenceSpec::CHI_SQ, &m, &prior, 512, p, rng::derive_seed(9, &p.to_string(), t)).unwrap().value)
                .collect();
            mean_se(&v)
        };
        let (a, sa) = run(ProposalChoice::Prior);
        let (b, sb) = run(ProposalChoice::Mixture);
        assert!((a - b).abs() < 3.0 * (sa * sa + sb * sb).sqrt(), "{a}±{sa} vs {b}±{sb}");
    }

    #[test]
    fn ram_mc_rejects_bad_input() {
        let m = FiniteMixture::new(vec![g(&[1.0], &[1.0])]).unwrap();
        let prior: Gaussian = DiagonalGaussian::standard(1).unwrap().into();
        assert!(ram_mc(&DivergenceSpec::KL, &m, &prior, 0, ProposalChoice::Prior, 0).is_err());
        let prior2: Gaussian = DiagonalGaussian::standard(2).unwrap().into();
        assert!(matches!(ram_mc(&DivergenceSpec::KL, &m, &prior2, 5, ProposalChoice::Prior, 0), Err(Error::Dimension { .. })));
    }

    #[test]
    fn ram_mc_flags_overflow() {
        // A component far out in the prior's tail with tiny variance makes q/p overflow.
        let m = FiniteMixture::new(vec![g(&[40.0], &[1e-4])]).unwrap();
        let prior: Gaussian = DiagonalGaussian::standard(1).unwrap().into();
        let e = ram_mc(&DivergenceSpec::CHI_SQ, &m, &prior, 64, ProposalChoice::Mixture, 0).unwrap();
        assert!(!e.is_finite());
        assert!(matches!(e.outcome(), Err(Error::NonFinite(_))));
    }

    #[test]
    fn subsample_cases() {
        let comps: Vec<DiagonalGaussian> = (0..5).map(|i| g(&[i as f64], &[1.0])).collect();
        let m = FiniteMixture::new(comps.clone()).unwrap();
        let full = subsample_mixture(&m, 5, &mut rng::from_seed(0)).unwrap();
        let mut got: Vec<f64> = full.components().iter().map(|c| c.mean()[0]).collect();
        got.sort_by(f64::total_cmp);
        assert_eq!(got, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert!(subsample_mixture(&m, 0, &mut rng::from_seed(0)).is_err());
        assert!(subsample_mixture(&m, 6, &mut rng::from_seed(0)).is_err());

        let two = FiniteMixture::new(vec![g(&[0.0], &[1.0]), g(&[1.0], &[1.0])]).unwrap();
        let hits = (0..10_000u64)
            .filter(|&s| subsample_mixture(&two, 1, &mut rng::from_seed(s)).unwrap().components()[0].mean()[0] == 0.0)
            .count();
        assert!((hits as f64 / 1e4 - 0.5).abs() < 0.02);
    }

    #[test]
    fn chi2_bound_cases() {
        let prior: Gaussian = DiagonalGaussian::standard(1).unwrap().into();
        let zero = LinearGaussianModel::new(DMatrix::zeros(1, 20), vec![0.0], 0.25).unwrap();
        let xs = DMatrix::zeros(4, 20);
        let v = assumption_chi2_bound(&zero, &xs, &prior).unwrap().finite().unwrap();
        // (1/(σ²√(2/σ²−1))) − 1 with σ² = 1/4
        let expected = 1.0 / (0.25 * 7.0f64.sqrt()) - 1.0;
        assert!((v - expected).abs() < 1e-12);
        let q = DiagonalGaussian::isotropic(vec![0.0], 0.25).unwrap();
        let quad = crate::fdiv::quadrature_divergence(
            &DivergenceSpec::CHI_SQ,
            |z| q.log_density(&[z]).unwrap(),
            |z| prior.log_density(&[z]).unwrap(),
            -12.0,
            12.0,
            20_000,
        )
        .unwrap();
        assert!((v - quad).abs() < 1e-6);

        let wide = LinearGaussianModel::new(DMatrix::zeros(1, 20), vec![0.0], 3.0).unwrap();
        assert!(assumption_chi2_bound(&wide, &xs, &prior).unwrap().is_infinite());

        let same = LinearGaussianModel::new(DMatrix::zeros(1, 20), vec![0.0], 1.0).unwrap();
        assert_eq!(assumption_chi2_bound(&same, &xs, &prior).unwrap(), DivergenceValue::Finite(0.0));
    }

    #[test]
    fn fourth_moment_cases() {
        let prior: Gaussian = DiagonalGaussian::standard(1).unwrap().into();
        let xs = DMatrix::zeros(3, 20);
        let same = LinearGaussianModel::new(DMatrix::zeros(1, 20), vec![0.0], 1.0).unwrap();
        assert_eq!(assumption_fourth_moment(&same, &xs, &prior, 100, 0).unwrap(), 1.0);

        // ∫ q⁴/p³ for q = N(0, 1/2), p = N(0, 1), by trapezoid
        let q = DiagonalGaussian::isotropic(vec![0.0], 0.5).unwrap();
        let n = 20_001;
        let h = 24.0 / (n - 1) as f64;
        let quad: f64 = (0..n)
            .map(|i| {
                let z = -12.0 + i as f64 * h;
                let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                w * (4.0 * q.log_density(&[z]).unwrap() - 3.0 * prior.log_density(&[z]).unwrap()).exp()
            })
            .sum::<f64>()
            * h;
        let half = LinearGaussianModel::new(DMatrix::zeros(1, 20), vec![0.0], 0.5).unwrap();
        let mc = assumption_fourth_moment(&half, &xs, &prior, 400_000, 3).unwrap();
        assert!(((mc - quad) / quad).abs() < 0.02, "{mc} vs {quad}");

    }

    fn mean_se(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }
}
