use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fdiv::{closed_form, quadrature_divergence, DivergenceSpec, DivergenceValue};
use crate::gaussian::{DiagonalGaussian, Gaussian, LinearGaussianModel};
use crate::ram::{build_mixture, ram_mc_many, ProposalChoice};
use crate::rng;

use super::synthetic::{make_family, model_at};

/// Grid for [`run_sweep`]. Every combination of the lists is one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub divergences: Vec<DivergenceSpec>,
    pub dims: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub ns: Vec<usize>,
    pub ms: Vec<usize>,
    pub proposals: Vec<ProposalChoice>,
    pub trials: usize,
    pub master_seed: u64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let empty = |name: &str| Error::Usage(format!("sweep grid `{name}` is empty"));
        if self.divergences.is_empty() {
            return Err(empty("divergences"));
        }
        if self.dims.is_empty() {
            return Err(empty("dims"));
        }
        if self.lambdas.is_empty() {
            return Err(empty("lambdas"));
        }
        if self.ns.is_empty() {
            return Err(empty("Ns"));
        }
        if self.ms.is_empty() {
            return Err(empty("Ms"));
        }
        if self.proposals.is_empty() {
            return Err(empty("proposals"));
        }
        if self.trials == 0 {
            return Err(Error::Usage("trials must be at least 1".into()));
        }
        if self.dims.contains(&0) || self.ns.contains(&0) || self.ms.contains(&0) {
            return Err(Error::Usage("d, N and M must all be at least 1".into()));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !l.is_finite()) {
            return Err(Error::Usage(format!("lambda must be finite, got {l}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimate {
    Finite(f64),
    NonFinite,
}

impl Estimate {
    pub fn value(self) -> Option<f64> {
        match self {
            Estimate::Finite(v) => Some(v),
            Estimate::NonFinite => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truth {
    Finite(f64),
    Infinite,
    Unavailable,
}

impl Truth {
    pub fn value(self) -> Option<f64> {
        match self {
            Truth::Finite(v) => Some(v),
            _ => None,
        }
    }
}

impl From<DivergenceValue> for Truth {
    fn from(v: DivergenceValue) -> Self {
        match v {
            DivergenceValue::Finite(x) => Truth::Finite(x),
            DivergenceValue::Infinite => Truth::Infinite,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRecord {
    pub divergence: DivergenceSpec,
    pub d: usize,
    pub lambda: f64,
    pub n: usize,
    pub m: usize,
    pub proposal: ProposalChoice,
    pub trial: usize,
    /// Seed of the Monte-Carlo stream that produced `estimate`.
    pub seed: u64,
    pub estimate: Estimate,
    pub truth: Truth,
}

const QUADRATURE_POINTS: usize = 400_001;

/// `D_f(Q_Z ‖ N(0, I))` for a model: closed form where one exists, otherwise
/// quadrature in one dimension, otherwise unavailable.
pub fn truth_for(spec: &DivergenceSpec, model: &LinearGaussianModel) -> Result<Truth> {
    let marginal = model.marginal()?;
    let d = marginal.dim();
    if spec.has_closed_form() {
        let prior = Gaussian::from(DiagonalGaussian::standard(d)?);
        return Ok(closed_form(spec, &Gaussian::from(marginal), &prior)?.into());
    }
    if d != 1 {
        return Ok(Truth::Unavailable);
    }
    let mu = marginal.mean()[0];
    let sd = marginal.covariance()[(0, 0)].sqrt();
    let q = DiagonalGaussian::new(vec![mu], vec![sd * sd])?;
    let p = DiagonalGaussian::standard(1)?;
    let lo = (mu - 40.0 * sd).min(-40.0);
    let hi = (mu + 40.0 * sd).max(40.0);
    let v = quadrature_divergence(
        spec,
        |z| q.log_density_unchecked(&[z]),
        |z| p.log_density_unchecked(&[z]),
        lo,
        hi,
        QUADRATURE_POINTS,
    )?;
    Ok(Truth::Finite(v))
}

fn proposal_index(p: ProposalChoice) -> u64 {
    match p {
        ProposalChoice::Prior => 0,
        ProposalChoice::Mixture => 1,
    }
}

pub(crate) fn inputs_seed(master: u64, d: usize, lambda: f64, n: usize, trial: usize) -> u64 {
    rng::mix(&[master, rng::label_hash("inputs"), d as u64, lambda.to_bits(), n as u64, trial as u64])
}

pub(crate) fn mc_seed(master: u64, d: usize, lambda: f64, n: usize, m: usize, p: ProposalChoice, trial: usize) -> u64 {
    rng::mix(&[
        master,
        rng::label_hash("ram-mc"),
        d as u64,
        lambda.to_bits(),
        n as u64,
        m as u64,
        proposal_index(p),
        trial as u64,
    ])
}

struct Group {
    d_idx: usize,
    lambda: f64,
    n: usize,
    m: usize,
    proposal: ProposalChoice,
    trial: usize,
}

/// Runs every cell of the grid.
///
/// Records come out ordered by divergence, then d, λ, N, M, proposal and
/// trial, following the order of the config lists. Within a trial all
/// divergences share one draw of `Xᴺ` and one Monte-Carlo stream; the
/// inputs are shared across M and proposal as well. Seeds depend only on the
/// cell contents, so growing the grid leaves existing records unchanged.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<EstimateRecord>> {
    cfg.validate()?;
    let families = cfg.dims.iter().map(|&d| make_family(d, cfg.master_seed)).collect::<Result<Vec<_>>>()?;

    // truths[d_idx][l_idx][k]
    let truths = families
        .iter()
        .map(|fam| {
            cfg.lambdas
                .iter()
                .map(|&l| {
                    let model = model_at(fam, l)?;
                    cfg.divergences.iter().map(|s| truth_for(s, &model)).collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut groups = Vec::new();
    for d_idx in 0..cfg.dims.len() {
        for &lambda in &cfg.lambdas {
            for &n in &cfg.ns {
                for &m in &cfg.ms {
                    for &proposal in &cfg.proposals {
                        for trial in 0..cfg.trials {
                            groups.push(Group { d_idx, lambda, n, m, proposal, trial });
                        }
                    }
                }
            }
        }
    }

    let estimates: Vec<Vec<(u64, Estimate)>> = groups
        .par_iter()
        .map(|g| {
            let d = cfg.dims[g.d_idx];
            let model = model_at(&families[g.d_idx], g.lambda)?;
            let mut xr = rng::from_seed(inputs_seed(cfg.master_seed, d, g.lambda, g.n, g.trial));
            let xs = model.sample_inputs(&mut xr, g.n)?;
            let mixture = build_mixture(&model, &xs)?;
            let prior = Gaussian::from(DiagonalGaussian::standard(d)?);
            let seed = mc_seed(cfg.master_seed, d, g.lambda, g.n, g.m, g.proposal, g.trial);
            let runs = ram_mc_many(&cfg.divergences, &mixture, &prior, g.m, g.proposal, seed)?;
            Ok(runs
                .into_iter()
                .map(|r| (seed, if r.is_finite() { Estimate::Finite(r.value) } else { Estimate::NonFinite }))
                .collect())
        })
        .collect::<Result<_>>()?;

    let per_lambda = cfg.ns.len() * cfg.ms.len() * cfg.proposals.len() * cfg.trials;
    let mut records = Vec::with_capacity(groups.len() * cfg.divergences.len());
    for (k, spec) in cfg.divergences.iter().enumerate() {
        for (gi, g) in groups.iter().enumerate() {
            let l_idx = (gi / per_lambda) % cfg.lambdas.len();
            let (seed, estimate) = estimates[gi][k];
            records.push(EstimateRecord {
                divergence: *spec,
                d: cfg.dims[g.d_idx],
                lambda: g.lambda,
                n: g.n,
                m: g.m,
                proposal: g.proposal,
                trial: g.trial,
                seed,
                estimate,
                truth: truths[g.d_idx][l_idx][k],
            });
        }
    }
    Ok(records)
}
