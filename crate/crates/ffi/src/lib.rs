//! C ABI over `ramdiv`.
//!
//! Every function returns a [`RamdivStatus`]; on failure a message is kept
//! per thread and can be read with [`ramdiv_last_error_message`]. Models and
//! mixtures are opaque handles owned by the caller and released with the
//! matching `_free` function. Matrices are row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use nalgebra::DMatrix;
use ramdiv::experiments::{make_family, model_at};
use ramdiv::fdiv::{closed_form, f0};
use ramdiv::ram::{build_mixture, ram_mc};
use ramdiv::{DiagonalGaussian, DivergenceSpec, DivergenceValue, Error, FiniteMixture, Gaussian, LinearGaussianModel, ProposalChoice};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RamdivStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Domain = 4,
    Numerical = 5,
    NotPositiveDefinite = 6,
    Unsupported = 7,
    /// The computation finished but the value is not finite.
    NonFinite = 8,
    Panic = 9,
}

/// Values for [`RamdivDivergence::kind`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RamdivKind {
    Kl = 0,
    Tv = 1,
    ChiSq = 2,
    SqHellinger = 3,
    Js = 4,
    /// `param` is β, with β > ½ and β ≠ 1.
    FBeta = 5,
    /// `param` is α in (−1, 1).
    FAlpha = 6,
}

/// Values for the `proposal` argument of [`ramdiv_ram_mc`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RamdivProposal {
    Prior = 0,
    Mixture = 1,
}

/// A divergence. `kind` holds a [`RamdivKind`]; `param` is ignored for kinds without one.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RamdivDivergence {
    pub kind: u32,
    pub param: f64,
}

/// Opaque linear-Gaussian encoder `Z | X ~ N(A X + b, σ² I)`.
pub struct RamdivModel {
    inner: LinearGaussianModel,
}

/// Opaque equal-weight mixture of diagonal Gaussians.
pub struct RamdivMixture {
    inner: FiniteMixture,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(RamdivStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Dimension { .. } => RamdivStatus::DimensionMismatch,
            Error::Domain(_) => RamdivStatus::Domain,
            Error::Numerical(_) => RamdivStatus::Numerical,
            Error::NotPositiveDefinite => RamdivStatus::NotPositiveDefinite,
            Error::Unsupported(_) => RamdivStatus::Unsupported,
            Error::NonFinite(_) => RamdivStatus::NonFinite,
            _ => RamdivStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

type FfiResult = Result<(), Failure>;

fn guard(f: impl FnOnce() -> FfiResult) -> RamdivStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RamdivStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            RamdivStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(RamdivStatus::NullPointer, format!("`{what}` is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(RamdivStatus::InvalidArgument, msg.into())
}

/// # Safety
/// `p` must be null or point to `len` readable doubles.
unsafe fn read<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

/// # Safety
/// `p` must be null or valid for a write of `T`.
unsafe fn write<T>(p: *mut T, v: T, what: &str) -> FfiResult {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

fn spec_of(div: RamdivDivergence) -> Result<DivergenceSpec, Failure> {
    let spec = match div.kind {
        0 => DivergenceSpec::KL,
        1 => DivergenceSpec::TV,
        2 => DivergenceSpec::CHI_SQ,
        3 => DivergenceSpec::SQ_HELLINGER,
        4 => DivergenceSpec::JS,
        5 => DivergenceSpec::f_beta(div.param)?,
        6 => DivergenceSpec::f_alpha(div.param)?,
        k => return Err(invalid(format!("unknown divergence kind {k}"))),
    };
    Ok(spec)
}

/// Message for the most recent failure on this thread, or null.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ramdiv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ramdiv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Normalized generator `f₀(x)` for `x ≥ 0`.
///
/// # Safety
/// `out` must be valid for writing one double.
#[no_mangle]
pub unsafe extern "C" fn ramdiv_f0(div: RamdivDivergence, x: f64, out: *mut f64) -> RamdivStatus {
    guard(|| {
        let v = f0(&spec_of(div)?, x)?;
        write(out, v, "out")
    })
}

/// `D_f(Q ‖ P)` for diagonal Gaussians of dimension `dim`.
///
/// Supported kinds are KL, χ² and squared Hellinger. An infinite χ² sets
/// `*out_is_infinite` and writes `INFINITY` to `*out_value`.
///
/// # Safety
/// The four input arrays must hold `dim` doubles; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ramdiv_closed_form(
    div: RamdivDivergence,
    dim: usize,
    q_mean: *const f64,
    q_var: *const f64,
    p_mean: *const f64,
    p_var: *const f64,
    out_value: *mut f64,
    out_is_infinite: *mut bool,
) -> RamdivStatus {
    guard(|| {
        if dim == 0 {
            return Err(invalid("dim must be at least 1"));
        }
        let spec = spec_of(div)?;
        let q = DiagonalGaussian::new(read(q_mean, dim, "q_mean")?.to_vec(), read(q_var, dim, "q_var")?.to_vec())?;
        let p = DiagonalGaussian::new(read(p_mean, dim, "p_mean")?.to_vec(), read(p_var, dim, "p_var")?.to_vec())?;
        let v = closed_form(&spec, &q.into(), &p.into())?;
        write(out_value, v.as_f64(), "out_value")?;
        write(out_is_infinite, v == DivergenceValue::Infinite, "out_is_infinite")
    })
}

/// Creates a model from `a` (`latent_dim × input_dim`), `b` (`latent_dim`) and `noise_var`.
///
/// # Safety
/// `a` and `b` must hold the stated number of doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ramdiv_model_new(
    latent_dim: usize,
    input_dim: usize,
    a: *const f64,
    b: *const f64,
    noise_var: f64,
    out: *mut *mut RamdivModel,
) -> RamdivStatus {
    guard(|| {
        if latent_dim == 0 || input_dim == 0 {
            return Err(invalid("dimensions must be at least 1"));
        }
        let a = read(a, latent_dim * input_dim, "a")?;
        let b = read(b, latent_dim, "b")?;
        let inner = LinearGaussianModel::new(DMatrix::from_row_slice(latent_dim, input_dim, a), b.to_vec(), noise_var)?;
        write(out, Box::into_raw(Box::new(RamdivModel { inner })), "out")
    })
}

/// The synthetic family member with latent dimension `d` at `lambda`,
/// drawn from `seed`. Inputs have dimension 20.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ramdiv_model_synthetic(d: usize, lambda: f64, seed: u64, out: *mut *mut RamdivModel) -> RamdivStatus {
    guard(|| {
        let inner = model_at(&make_family(d, seed)?, lambda)?;
        write(out, Box::into_raw(Box::new(RamdivModel { inner })), "out")
    })
}

/// # Safety
/// `model` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ramdiv_model_free(model: *mut RamdivModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Input dimension of a model, or 0 for null.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ramdiv_model_input_dim(model: *const RamdivModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.input_dim())
}

/// Mixture of `n` diagonal Gaussians; `means` and `variances` are `n × dim`.
///
/// # Safety
/// Both arrays must hold `n * dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ramdiv_mixture_new(
    n: usize,
    dim: usize,
    means: *const f64,
    variances: *const f64,
    out: *mut *mut RamdivMixture,
) -> RamdivStatus {
    guard(|| {
        if n == 0 || dim == 0 {
            return Err(invalid("n and dim must be at least 1"));
        }
        let means = read(means, n * dim, "means")?;
        let vars = read(variances, n * dim, "variances")?;
        let comps = means
            .chunks_exact(dim)
            .zip(vars.chunks_exact(dim))
            .map(|(m, v)| DiagonalGaussian::new(m.to_vec(), v.to_vec()))
            .collect::<ramdiv::Result<Vec<_>>>()?;
        let inner = FiniteMixture::new(comps)?;
        write(out, Box::into_raw(Box::new(RamdivMixture { inner })), "out")
    })
}

/// Mixture of the model's conditionals at the `n` rows of `xs` (`n × input_dim`).
///
/// # Safety
/// `model` must be a live handle, `xs` must hold `n * input_dim` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ramdiv_mixture_from_model(
    model: *const RamdivModel,
    n: usize,
    xs: *const f64,
    out: *mut *mut RamdivMixture,
) -> RamdivStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        if n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        let k = model.inner.input_dim();
        let xs = DMatrix::from_row_slice(n, k, read(xs, n * k, "xs")?);
        let inner = build_mixture(&model.inner, &xs)?;
        write(out, Box::into_raw(Box::new(RamdivMixture { inner })), "out")
    })
}

/// # Safety
/// `mixture` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ramdiv_mixture_free(mixture: *mut RamdivMixture) {
    if !mixture.is_null() {
        drop(Box::from_raw(mixture));
    }
}

/// Dimension of a mixture, or 0 for null.
///
/// # Safety
/// `mixture` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ramdiv_mixture_dim(mixture: *const RamdivMixture) -> usize {
    mixture.as_ref().map_or(0, |m| m.inner.dim())
}

/// Number of components, or 0 for null.
///
/// # Safety
/// `mixture` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ramdiv_mixture_len(mixture: *const RamdivMixture) -> usize {
    mixture.as_ref().map_or(0, |m| m.inner.len())
}

/// `log q̂(z)` for a point of length `dim`.
///
/// # Safety
/// `mixture` must be a live handle, `z` must hold `dim` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ramdiv_mixture_log_density(
    mixture: *const RamdivMixture,
    z: *const f64,
    dim: usize,
    out: *mut f64,
) -> RamdivStatus {
    guard(|| {
        let m = mixture.as_ref().ok_or_else(|| null("mixture"))?;
        let v = m.inner.log_density(read(z, dim, "z")?)?;
        write(out, v, "out")
    })
}

/// RAM-MC estimate of `D_f(mixture ‖ N(0, I))` from `m_samples` draws.
///
/// `proposal` holds a [`RamdivProposal`]. If the estimate is not finite the
/// value is still written and the status is `RAMDIV_STATUS_NON_FINITE`.
///
/// # Safety
/// `mixture` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ramdiv_ram_mc(
    div: RamdivDivergence,
    mixture: *const RamdivMixture,
    m_samples: usize,
    proposal: u32,
    seed: u64,
    out_value: *mut f64,
    out_term_std: *mut f64,
) -> RamdivStatus {
    guard(|| {
        let spec = spec_of(div)?;
        let m = mixture.as_ref().ok_or_else(|| null("mixture"))?;
        let proposal = match proposal {
            0 => ProposalChoice::Prior,
            1 => ProposalChoice::Mixture,
            p => return Err(invalid(format!("unknown proposal {p}"))),
        };
        let prior = Gaussian::from(DiagonalGaussian::standard(m.inner.dim())?);
        let e = ram_mc(&spec, &m.inner, &prior, m_samples, proposal, seed)?;
        write(out_value, e.value, "out_value")?;
        write(out_term_std, e.term_std, "out_term_std")?;
        e.outcome()?;
        Ok(())
    })
}
