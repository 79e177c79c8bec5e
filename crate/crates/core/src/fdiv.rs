//! f-divergence generators, Gaussian closed forms and a 1-D quadrature oracle.
//!
//! Every generator is stored in its normalized form `f₀(x) = f(x) − f'(1)(x − 1)`,
//! so `f₀(1) = f₀'(1) = 0` and `f₀ ≥ 0`. Adding a multiple of `x − 1` does not
//! change the divergence.

use std::f64::consts::{E, LN_2};
use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::gaussian::Gaussian;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DivergenceKind {
    Kl,
    Tv,
    ChiSq,
    SqHellinger,
    Js,
    FBeta,
    FAlpha,
}

/// Which divergence, with its parameter for the parametric families.
///
/// `FBeta` takes `β ∈ (½, ∞) \ {1}` (β = 1 is [`DivergenceKind::Js`], β = ∞ is
/// [`DivergenceKind::Tv`]); `FAlpha` takes `α ∈ (−1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceSpec {
    kind: DivergenceKind,
    param: f64,
}

impl DivergenceSpec {
    pub const KL: Self = Self { kind: DivergenceKind::Kl, param: 0.0 };
    pub const TV: Self = Self { kind: DivergenceKind::Tv, param: 0.0 };
    pub const CHI_SQ: Self = Self { kind: DivergenceKind::ChiSq, param: 0.0 };
    pub const SQ_HELLINGER: Self = Self { kind: DivergenceKind::SqHellinger, param: 0.0 };
    pub const JS: Self = Self { kind: DivergenceKind::Js, param: 0.0 };

    pub fn f_beta(beta: f64) -> Result<Self> {
        if !(beta > 0.5 && beta.is_finite() && beta != 1.0) {
            return Err(Error::Domain(format!("f_beta requires beta in (1/2, inf) minus {{1}}, got {beta}")));
        }
        Ok(Self { kind: DivergenceKind::FBeta, param: beta })
    }

    pub fn f_alpha(alpha: f64) -> Result<Self> {
        if !(alpha > -1.0 && alpha < 1.0) {
            return Err(Error::Domain(format!("f_alpha requires alpha in (-1, 1), got {alpha}")));
        }
        Ok(Self { kind: DivergenceKind::FAlpha, param: alpha })
    }

    pub fn kind(&self) -> DivergenceKind {
        self.kind
    }

    pub fn beta(&self) -> Option<f64> {
        (self.kind == DivergenceKind::FBeta).then_some(self.param)
    }

    pub fn alpha(&self) -> Option<f64> {
        (self.kind == DivergenceKind::FAlpha).then_some(self.param)
    }

    /// True for the kinds with a Gaussian closed form.
    pub fn has_closed_form(&self) -> bool {
        matches!(self.kind, DivergenceKind::Kl | DivergenceKind::ChiSq | DivergenceKind::SqHellinger)
    }
}

impl fmt::Display for DivergenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            DivergenceKind::Kl => f.write_str("kl"),
            DivergenceKind::Tv => f.write_str("tv"),
            DivergenceKind::ChiSq => f.write_str("chisq"),
            DivergenceKind::SqHellinger => f.write_str("sqhellinger"),
            DivergenceKind::Js => f.write_str("js"),
            DivergenceKind::FBeta => write!(f, "fbeta:{}", self.param),
            DivergenceKind::FAlpha => write!(f, "falpha:{}", self.param),
        }
    }
}

impl FromStr for DivergenceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s.as_str(), None),
        };
        let param = |arg: Option<&str>| -> Result<f64> {
            arg.ok_or_else(|| Error::Usage(format!("divergence `{name}` needs a parameter, e.g. `{name}:0.75`")))?
                .parse::<f64>()
                .map_err(|e| Error::Usage(format!("bad divergence parameter: {e}")))
        };
        let spec = match name {
            "kl" => Self::KL,
            "tv" => Self::TV,
            "chisq" | "chi2" | "chi-squared" => Self::CHI_SQ,
            "sqhellinger" | "h2" | "hellinger" => Self::SQ_HELLINGER,
            "js" => Self::JS,
            "fbeta" => return Self::f_beta(param(arg)?),
            "falpha" | "alpha" => return Self::f_alpha(param(arg)?),
            other => return Err(Error::Usage(format!("unknown divergence `{other}`"))),
        };
        if arg.is_some() {
            return Err(Error::Usage(format!("divergence `{name}` takes no parameter")));
        }
        Ok(spec)
    }
}

/// A divergence value that may be infinite (χ² between badly mismatched scales).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DivergenceValue {
    Finite(f64),
    Infinite,
}

impl DivergenceValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            DivergenceValue::Finite(v) => Some(v),
            DivergenceValue::Infinite => None,
        }
    }

    /// The value as a float, `+∞` when infinite.
    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, DivergenceValue::Infinite)
    }
}

fn check_ratio(x: f64) -> Result<()> {
    if x >= 0.0 && x < f64::INFINITY {
        Ok(())
    } else {
        Err(Error::Domain(format!("density ratio must be finite and non-negative, got {x}")))
    }
}

/// The normalized generator `f₀(x)` for `x ≥ 0`.
pub fn f0(spec: &DivergenceSpec, x: f64) -> Result<f64> {
    check_ratio(x)?;
    Ok(f0_unchecked(spec, x))
}

#[inline]
pub(crate) fn f0_unchecked(spec: &DivergenceSpec, x: f64) -> f64 {
    if x == 1.0 {
        return 0.0;
    }
    match spec.kind {
        DivergenceKind::Kl => {
            if x == 0.0 {
                1.0
            } else {
                x * x.ln() - x + 1.0
            }
        }
        DivergenceKind::Tv => 0.5 * (1.0 - x).abs(),
        DivergenceKind::ChiSq => (x - 1.0) * (x - 1.0),
        DivergenceKind::SqHellinger => {
            let r = x.sqrt() - 1.0;
            r * r
        }
        DivergenceKind::Js => {
            if x == 0.0 {
                LN_2
            } else {
                (1.0 + x) * (2.0 / (1.0 + x)).ln() + x * x.ln()
            }
        }
        DivergenceKind::FBeta => {
            let b = spec.param;
            // (1 + x^β)^{1/β} without overflowing x^β for large x
            let root = if x <= 1.0 { (1.0 + x.powf(b)).powf(1.0 / b) } else { x * (1.0 + x.powf(-b)).powf(1.0 / b) };
            (root - 2f64.powf(1.0 / b - 1.0) * (1.0 + x)) / (1.0 - 1.0 / b)
        }
        DivergenceKind::FAlpha => {
            let a = spec.param;
            4.0 / (1.0 - a * a) * (1.0 - x.powf(0.5 * (1.0 + a))) - 2.0 * (x - 1.0) / (a - 1.0)
        }
    }
}

/// `f₀(exp(log_ratio))`, mapping an underflowed ratio to the `x → 0` limit.
#[inline]
pub(crate) fn f0_from_log_ratio(spec: &DivergenceSpec, log_ratio: f64) -> f64 {
    if spec.kind == DivergenceKind::Kl && log_ratio.is_finite() {
        let x = log_ratio.exp();
        return x * log_ratio - x + 1.0;
    }
    f0_unchecked(spec, log_ratio.exp())
}

/// The conjugate generator `u · f₀(1/u)`, so that `p f₀(q/p) = q f₀*(p/q)`.
#[inline]
pub(crate) fn f0_conjugate(spec: &DivergenceSpec, u: f64) -> f64 {
    if u == 1.0 {
        return 0.0;
    }
    match spec.kind {
        DivergenceKind::Kl => {
            if u == 0.0 {
                f64::INFINITY
            } else {
                u - u.ln() - 1.0
            }
        }
        DivergenceKind::Tv => 0.5 * (u - 1.0).abs(),
        DivergenceKind::ChiSq => (1.0 - u) * (1.0 - u) / u,
        DivergenceKind::SqHellinger => {
            let r = 1.0 - u.sqrt();
            r * r
        }
        // symmetric generators
        DivergenceKind::Js | DivergenceKind::FBeta => f0_unchecked(spec, u),
        DivergenceKind::FAlpha => {
            let a = spec.param;
            4.0 / (1.0 - a * a) * (u - u.powf(0.5 * (1.0 - a))) - 2.0 * (1.0 - u) / (a - 1.0)
        }
    }
}

/// `f₀(r) / r` for `r = exp(log_ratio)`, switching to the conjugate when `r > 1`.
#[inline]
pub(crate) fn f0_over_ratio(spec: &DivergenceSpec, log_ratio: f64) -> f64 {
    if log_ratio <= 0.0 {
        f0_unchecked(spec, log_ratio.exp()) * (-log_ratio).exp()
    } else {
        f0_conjugate(spec, (-log_ratio).exp())
    }
}

/// `p · f₀(q/p)` from log-densities, evaluated on whichever side keeps the
/// ratio at most one.
pub fn weighted_generator(spec: &DivergenceSpec, log_q: f64, log_p: f64) -> f64 {
    if log_q <= log_p {
        f0_unchecked(spec, (log_q - log_p).exp()) * log_p.exp()
    } else if spec.kind == DivergenceKind::Kl {
        // q (u − ln u − 1) with ln u kept exact when u underflows
        let lu = log_p - log_q;
        (lu.exp() - lu - 1.0) * log_q.exp()
    } else if spec.kind == DivergenceKind::ChiSq {
        // q (1 − u)² / u = (1 − u)² q² / p
        let u = (log_p - log_q).exp();
        (1.0 - u) * (1.0 - u) * (2.0 * log_q - log_p).exp()
    } else {
        f0_conjugate(spec, (log_p - log_q).exp()) * log_q.exp()
    }
}

/// Derivative `f₀'(x)` for `x > 0`. The total-variation kink uses the
/// sub-gradient 0 at `x = 1`.
pub fn f0_prime(spec: &DivergenceSpec, x: f64) -> Result<f64> {
    if !(x > 0.0 && x < f64::INFINITY) {
        return Err(Error::Domain(format!("f0' needs a positive finite argument, got {x}")));
    }
    Ok(match spec.kind {
        DivergenceKind::Kl => x.ln(),
        DivergenceKind::Tv => {
            if x < 1.0 {
                -0.5
            } else if x > 1.0 {
                0.5
            } else {
                0.0
            }
        }
        DivergenceKind::ChiSq => 2.0 * (x - 1.0),
        DivergenceKind::SqHellinger => 1.0 - 1.0 / x.sqrt(),
        DivergenceKind::Js => LN_2 + x.ln() - x.ln_1p(),
        DivergenceKind::FBeta => {
            let b = spec.param;
            b / (b - 1.0) * ((1.0 + x.powf(-b)).powf((1.0 - b) / b) - 2f64.powf(1.0 / b - 1.0))
        }
        DivergenceKind::FAlpha => {
            let a = spec.param;
            2.0 / (1.0 - a) * (1.0 - x.powf(0.5 * (a - 1.0)))
        }
    })
}

/// `D_f(q ‖ p)` between two Gaussians, for KL, χ² and squared Hellinger.
///
/// χ² is infinite unless `2Σ_q⁻¹ − Σ_p⁻¹` is positive definite.
pub fn closed_form(spec: &DivergenceSpec, q: &Gaussian, p: &Gaussian) -> Result<DivergenceValue> {
    check_dim(q.dim(), p.dim())?;
    match spec.kind {
        DivergenceKind::Kl => Ok(DivergenceValue::Finite(kl_gaussian(q, p))),
        DivergenceKind::SqHellinger => sq_hellinger_gaussian(q, p).map(DivergenceValue::Finite),
        DivergenceKind::ChiSq => chi_sq_gaussian(q, p),
        _ => Err(Error::Unsupported(format!("no Gaussian closed form for {spec}"))),
    }
}

fn kl_gaussian(q: &Gaussian, p: &Gaussian) -> f64 {
    let d = q.dim() as f64;
    let prec_p = p.precision();
    let diff = p.mean_vector() - q.mean_vector();
    let trace = (&prec_p * q.covariance_matrix()).trace();
    let maha = diff.dot(&(&prec_p * &diff));
    (0.5 * (trace + maha - d + p.log_det() - q.log_det())).max(0.0)
}

fn sq_hellinger_gaussian(q: &Gaussian, p: &Gaussian) -> Result<f64> {
    let avg = (q.covariance_matrix() + p.covariance_matrix()) * 0.5;
    let chol = Cholesky::new(avg).ok_or(Error::NotPositiveDefinite)?;
    let log_det_avg = 2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>();
    let diff = q.mean_vector() - p.mean_vector();
    let maha = diff.dot(&chol.solve(&diff));
    let log_bc = 0.25 * q.log_det() + 0.25 * p.log_det() - 0.5 * log_det_avg - 0.125 * maha;
    // generator 2(1 - sqrt x) integrates to 2(1 - BC)
    Ok((-2.0 * log_bc.exp_m1()).clamp(0.0, 2.0))
}

fn chi_sq_gaussian(q: &Gaussian, p: &Gaussian) -> Result<DivergenceValue> {
    let prec_q = q.precision();
    let prec_p = p.precision();
    let k: DMatrix<f64> = &prec_q * 2.0 - &prec_p;
    let k = (&k + k.transpose()) * 0.5;
    let Some(chol) = Cholesky::new(k) else {
        return Ok(DivergenceValue::Infinite);
    };
    let diag = chol.l_dirty().diagonal();
    if diag.iter().any(|x| !(*x > 0.0)) {
        return Ok(DivergenceValue::Infinite);
    }
    let log_det_k = 2.0 * diag.iter().map(|x| x.ln()).sum::<f64>();
    let mq = q.mean_vector();
    let mp = p.mean_vector();
    let v: DVector<f64> = &prec_q * &mq * 2.0 - &prec_p * &mp;
    // log ∫ q²/p
    let log_int = -q.log_det() - 0.5 * log_det_k + 0.5 * p.log_det() + 0.5 * mp.dot(&(&prec_p * &mp))
        - mq.dot(&(&prec_q * &mq))
        + 0.5 * v.dot(&chol.solve(&v));
    let value = log_int.exp_m1();
    if value.is_finite() {
        Ok(DivergenceValue::Finite(value.max(0.0)))
    } else {
        Ok(DivergenceValue::Infinite)
    }
}

/// Trapezoid approximation of `∫ f₀(q/p) p dz` over `[lo, hi]` with `n_points` nodes.
pub fn quadrature_divergence(
    spec: &DivergenceSpec,
    q_logpdf: impl Fn(f64) -> f64,
    p_logpdf: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    n_points: usize,
) -> Result<f64> {
    if n_points < 1000 {
        return Err(Error::Domain(format!("quadrature needs at least 1000 points, got {n_points}")));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain(format!("bad interval [{lo}, {hi}]")));
    }
    let h = (hi - lo) / (n_points - 1) as f64;
    let mut total = 0.0;
    for i in 0..n_points {
        let z = lo + i as f64 * h;
        let v = weighted_generator(spec, q_logpdf(z), p_logpdf(z));
        if !v.is_finite() {
            return Err(Error::Numerical(format!("integrand is {v} at z = {z}")));
        }
        let w = if i == 0 || i == n_points - 1 { 0.5 } else { 1.0 };
        total += w * v;
    }
    Ok(total * h)
}

/// Upper bound `h_δ(x)` on `f₀'(x)²` over `[δ, ∞)`.
///
/// Supported: KL, squared Hellinger, `f_α`, JS and `f_β`. For `β > 1` the
/// derivative is bounded on all of `[0, ∞)` and the bound is the larger of
/// its two end limits.
pub fn lemma_bound_h(spec: &DivergenceSpec, delta: f64, x: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("x must be non-negative, got {x}")));
    }
    let g = |t: f64| f0_prime(spec, t).map(|v| v * v);
    match spec.kind {
        DivergenceKind::Kl => {
            let g_delta = delta.ln().powi(2);
            // g(x) = ln² x, g'(e) = 2/e, g(e) = 1
            Ok(if x <= E { g_delta + 2.0 * x / E } else { g_delta + 2.0 + x.ln().powi(2) - 1.0 })
        }
        DivergenceKind::SqHellinger => Ok((x - 1.0).powi(2) / delta),
        DivergenceKind::FAlpha => {
            // 4(δ^((α−1)/2) − 1)² / ((α − 1)²(δ − 1)²) · (x − 1)², i.e. g(δ) · ((x − 1)/(δ − 1))²
            Ok(g(delta)? * ((x - 1.0) / (delta - 1.0)).powi(2))
        }
        DivergenceKind::Js => Ok(g(delta)? + 4.0 * LN_2 * LN_2),
        DivergenceKind::FBeta => {
            let b = spec.param;
            let scale = (b / (1.0 - b)).powi(2);
            let c = 2f64.powf(1.0 / b - 1.0);
            let at_infinity = scale * (1.0 - c).powi(2);
            if b < 1.0 {
                Ok(g(delta)? + at_infinity)
            } else {
                let at_zero = scale * c * c;
                Ok(at_zero.max(at_infinity))
            }
        }
        DivergenceKind::Tv | DivergenceKind::ChiSq => {
            Err(Error::Unsupported(format!("no derivative bound for {spec}")))
        }
    }
}

/// Smallest margin `scale · h_δ(x) − f₀'(x)²` over `n_points` log-spaced `x ∈ [δ, hi]`.
///
/// Returns `(margin, x_at_margin)`. `scale` exists so callers can run negative controls.
pub fn lemma_margin(spec: &DivergenceSpec, delta: f64, hi: f64, n_points: usize, scale: f64) -> Result<(f64, f64)> {
    if n_points < 2 || !(hi > delta) {
        return Err(Error::Domain("grid needs at least 2 points and hi > delta".into()));
    }
    let (l0, l1) = (delta.ln(), hi.ln());
    let mut worst = (f64::INFINITY, delta);
    for i in 0..n_points {
        let x = match i {
            0 => delta,
            i if i == n_points - 1 => hi,
            _ => (l0 + (l1 - l0) * i as f64 / (n_points - 1) as f64).exp(),
        };
        let gx = f0_prime(spec, x)?.powi(2);
        let margin = scale * lemma_bound_h(spec, delta, x)? - gx;
        if margin < worst.0 {
            worst = (margin, x);
        }
    }
    Ok(worst)
}
