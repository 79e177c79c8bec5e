use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fdiv::{closed_form, DivergenceKind, DivergenceSpec, DivergenceValue};
use crate::gaussian::{Gaussian, LinearGaussianModel};
use crate::rng;

use super::sweep::EstimateRecord;

/// One point of a bias curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasPoint {
    pub n: usize,
    /// Mean over trials of `estimate − truth`.
    pub bias: f64,
    /// Standard error of that mean; zero for a single trial.
    pub se: f64,
    pub trials: usize,
}

/// Groups records by N and averages `estimate − truth`, in ascending N.
///
/// All records must share divergence, d, λ, M and proposal and carry a finite
/// truth.
pub fn bias_curve(records: &[EstimateRecord]) -> Result<Vec<BiasPoint>> {
    let first = records.first().ok_or_else(|| Error::Usage("bias curve needs at least one record".into()))?;
    let mut by_n: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in records {
        let same = r.divergence == first.divergence
            && r.d == first.d
            && r.lambda.to_bits() == first.lambda.to_bits()
            && r.m == first.m
            && r.proposal == first.proposal;
        if !same {
            return Err(Error::Usage("bias curve records must share divergence, d, lambda, M and proposal".into()));
        }
        let truth = r
            .truth
            .value()
            .ok_or_else(|| Error::Usage(format!("no finite truth for {} at d = {}", r.divergence, r.d)))?;
        let est = r
            .estimate
            .value()
            .ok_or_else(|| Error::NonFinite(format!("trial {} at N = {} did not produce a finite estimate", r.trial, r.n)))?;
        by_n.entry(r.n).or_default().push(est - truth);
    }
    Ok(by_n
        .into_iter()
        .map(|(n, diffs)| {
            let k = diffs.len() as f64;
            let mean = diffs.iter().sum::<f64>() / k;
            let se = if diffs.len() > 1 {
                (diffs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
            } else {
                0.0
            };
            BiasPoint { n, bias: mean, se, trials: diffs.len() }
        })
        .collect())
}

/// Least-squares slope of `ln value` against `ln N`.
pub fn fit_log_slope(ns: &[usize], values: &[f64]) -> Result<f64> {
    if ns.len() != values.len() {
        return Err(Error::Dimension { expected: ns.len(), got: values.len() });
    }
    if ns.len() < 3 {
        return Err(Error::Domain(format!("slope fit needs at least 3 points, got {}", ns.len())));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain(format!("slope fit needs positive finite values, got {v}")));
    }
    if ns.contains(&0) {
        return Err(Error::Domain("N must be at least 1".into()));
    }
    let xs: Vec<f64> = ns.iter().map(|n| (*n as f64).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("slope fit needs at least two distinct N".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// `E D(Q̂ᴺ ‖ P) − D(Q ‖ P) = c / N` for χ², with
/// `c = E_X χ²(Q_{Z|X} ‖ P) − χ²(Q_Z ‖ P)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chi2BiasPrediction {
    /// Sample mean of `χ²(Q_{Z|X} ‖ P)` over the drawn inputs.
    pub conditional_mean: DivergenceValue,
    /// Standard error of `conditional_mean`, zero if infinite.
    pub conditional_se: f64,
    pub marginal: DivergenceValue,
    pub n_x: usize,
}

impl Chi2BiasPrediction {
    pub fn c(&self) -> DivergenceValue {
        match (self.conditional_mean, self.marginal) {
            (DivergenceValue::Finite(a), DivergenceValue::Finite(b)) => DivergenceValue::Finite(a - b),
            _ => DivergenceValue::Infinite,
        }
    }

    pub fn predict(&self, n: usize) -> DivergenceValue {
        match self.c() {
            DivergenceValue::Finite(c) => DivergenceValue::Finite(c / n as f64),
            DivergenceValue::Infinite => DivergenceValue::Infinite,
        }
    }
}

pub fn chi2_bias_prediction(
    model: &LinearGaussianModel,
    prior: &Gaussian,
    n_x: usize,
    seed: u64,
) -> Result<Chi2BiasPrediction> {
    if n_x < 1000 {
        return Err(Error::Domain(format!("n_x must be at least 1000, got {n_x}")));
    }
    let marginal = closed_form(&DivergenceSpec::CHI_SQ, &Gaussian::from(model.marginal()?), prior)?;
    let mut r = rng::stream(seed, "chi2-prediction", 0);
    let mut x = vec![0.0; model.input_dim()];
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..n_x {
        x.iter_mut().for_each(|v| *v = r.sample(StandardNormal));
        let cond = Gaussian::from(model.conditional(&x)?);
        match closed_form(&DivergenceSpec::CHI_SQ, &cond, prior)? {
            DivergenceValue::Finite(v) => {
                sum += v;
                sq += v * v;
            }
            DivergenceValue::Infinite => {
                return Ok(Chi2BiasPrediction {
                    conditional_mean: DivergenceValue::Infinite,
                    conditional_se: 0.0,
                    marginal,
                    n_x,
                })
            }
        }
    }
    let k = n_x as f64;
    let mean = sum / k;
    let var = ((sq - k * mean * mean) / (k - 1.0)).max(0.0);
    Ok(Chi2BiasPrediction {
        conditional_mean: DivergenceValue::Finite(mean),
        conditional_se: (var / k).sqrt(),
        marginal,
        n_x,
    })
}

/// Column of the published rate tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RateColumn {
    Kl,
    Tv,
    ChiSq,
    SqHellinger,
    Js,
    /// `f_β` with `½ < β < 1`.
    FBetaLow,
    /// `f_β` with `β > 1`.
    FBetaHigh,
    FAlpha,
}

impl RateColumn {
    pub const ALL: [RateColumn; 8] = [
        RateColumn::Kl,
        RateColumn::Tv,
        RateColumn::ChiSq,
        RateColumn::SqHellinger,
        RateColumn::Js,
        RateColumn::FBetaLow,
        RateColumn::FBetaHigh,
        RateColumn::FAlpha,
    ];

    pub fn for_spec(spec: &DivergenceSpec) -> RateColumn {
        match spec.kind() {
            DivergenceKind::Kl => RateColumn::Kl,
            DivergenceKind::Tv => RateColumn::Tv,
            DivergenceKind::ChiSq => RateColumn::ChiSq,
            DivergenceKind::SqHellinger => RateColumn::SqHellinger,
            DivergenceKind::Js => RateColumn::Js,
            DivergenceKind::FBeta if spec.beta().unwrap_or(0.0) < 1.0 => RateColumn::FBetaLow,
            DivergenceKind::FBeta => RateColumn::FBetaHigh,
            DivergenceKind::FAlpha => RateColumn::FAlpha,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RateColumn::Kl => "kl",
            RateColumn::Tv => "tv",
            RateColumn::ChiSq => "chisq",
            RateColumn::SqHellinger => "sqhellinger",
            RateColumn::Js => "js",
            RateColumn::FBetaLow => "fbeta(1/2,1)",
            RateColumn::FBetaHigh => "fbeta(1,inf)",
            RateColumn::FAlpha => "falpha",
        }
    }
}

/// Shape of a rate in N. Exponents are kept as fractions for display.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateShape {
    /// No rate is given.
    Absent,
    /// `N^(num/den)`.
    Power { num: i32, den: i32 },
    /// `N^(num/den) · log N`.
    PowerLog { num: i32, den: i32 },
    /// `N^(−(α+1)/(α+5))`.
    AlphaBias,
    /// `N^((1−3α)/(α+5))`.
    AlphaPsi,
}

impl RateShape {
    /// The power of N, ignoring any log factor. `alpha` is needed for the α shapes.
    pub fn exponent(self, alpha: Option<f64>) -> Option<f64> {
        match self {
            RateShape::Absent => None,
            RateShape::Power { num, den } | RateShape::PowerLog { num, den } => Some(num as f64 / den as f64),
            RateShape::AlphaBias => alpha.map(|a| -(a + 1.0) / (a + 5.0)),
            RateShape::AlphaPsi => alpha.map(|a| (1.0 - 3.0 * a) / (a + 5.0)),
        }
    }

    pub fn has_log(self) -> bool {
        matches!(self, RateShape::PowerLog { .. })
    }
}

impl fmt::Display for RateShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let frac = |num: i32, den: i32| if den == 1 { format!("{num}") } else { format!("{num}/{den}") };
        match *self {
            RateShape::Absent => f.write_str("-"),
            RateShape::Power { num, den } => write!(f, "N^{}", frac(num, den)),
            RateShape::PowerLog { num, den } => write!(f, "N^{} log N", frac(num, den)),
            RateShape::AlphaBias => f.write_str("N^-(a+1)/(a+5)"),
            RateShape::AlphaPsi => f.write_str("N^(1-3a)/(a+5)"),
        }
    }
}

/// The published bias rates (two theorems) and concentration rates ψ(N).
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub bias_thm1: BTreeMap<RateColumn, RateShape>,
    pub bias_thm2: BTreeMap<RateColumn, RateShape>,
    pub psi: BTreeMap<RateColumn, RateShape>,
}

impl RateTable {
    pub fn published() -> Self {
        use RateShape::*;
        let p = |num, den| Power { num, den };
        let pl = |num, den| PowerLog { num, den };
        let row = |cells: [RateShape; 8]| RateColumn::ALL.into_iter().zip(cells).collect::<BTreeMap<_, _>>();
        RateTable {
            bias_thm1: row([p(-1, 1), p(-1, 2), Absent, p(-1, 2), p(-1, 4), p(-1, 4), p(-1, 4), Absent]),
            bias_thm2: row([pl(-1, 3), p(-1, 2), p(-1, 1), p(-1, 5), pl(-1, 3), p(-1, 3), p(-1, 2), AlphaBias]),
            psi: row([pl(-1, 6), p(-1, 2), p(-1, 2), Absent, pl(-1, 6), p(-1, 6), p(-1, 2), AlphaPsi]),
        }
    }

    /// Both bias rates for a column, e.g. `N^-1 (Thm 1) / N^-1/3 log N (Thm 2)`.
    pub fn bias_reference(&self, col: RateColumn) -> String {
        format!("{} (Thm 1) / {} (Thm 2)", self.bias_thm1[&col], self.bias_thm2[&col])
    }

    /// The fastest bias exponent either theorem guarantees for `spec`.
    pub fn best_bias_exponent(&self, spec: &DivergenceSpec) -> Option<f64> {
        let col = RateColumn::for_spec(spec);
        [self.bias_thm1[&col], self.bias_thm2[&col]]
            .into_iter()
            .filter_map(|s| s.exponent(spec.alpha()))
            .min_by(|a, b| a.total_cmp(b))
    }
}
