//! Random-mixture estimators of f-divergences.
//!
//! The target is `D_f(Q_Z ‖ P_Z)` where `Q_Z = ∫ Q_{Z|X} dQ_X` is only known
//! through samples of `X` and a Gaussian encoder `Q_{Z|X}`. The intractable
//! marginal is replaced by the equal-weight mixture of the conditionals at
//! the sampled points, and the divergence of that mixture is evaluated by
//! importance-sampled Monte Carlo.
//!
//! Layout:
//!
//! - [`gaussian`]: diagonal/full Gaussians and the linear-Gaussian encoder.
//! - [`fdiv`]: generator functions, closed forms, a 1-D quadrature oracle.
//! - [`ram`]: the finite mixture and the Monte-Carlo estimator.
//! - [`baseline`]: the KDE plug-in estimator.
//! - [`experiments`]: synthetic family, sweeps, bias/rate fitting, entropy and MI.
//! - [`cli`]: the `ramdiv` command line front end.

pub mod baseline;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod fdiv;
pub mod gaussian;
pub mod ram;
pub mod rng;

pub use error::{Error, Result};
pub use fdiv::{DivergenceKind, DivergenceSpec, DivergenceValue};
pub use gaussian::{DiagonalGaussian, FullGaussian, Gaussian, LinearGaussianModel};
pub use ram::{FiniteMixture, McEstimate, ProposalChoice};
