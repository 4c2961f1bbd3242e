//! Identification of first- and second-order Volterra kernels of a nonlinear
//! SISO dynamical system from a single input/output signal pair.
//!
//! The output model is a truncated Volterra series
//!
//! ```text
//! y(t) = ∫₀ᵗ K₁(s) x(t-s) ds + ∫₀ᵗ∫₀ᵗ K₂(s₁,s₂) x(t-s₁) x(t-s₂) ds₁ ds₂
//! ```
//!
//! whose kernels are expanded in Chebyshev polynomials mapped to the working
//! interval. Enforcing the model at grid nodes yields a linear system in the
//! expansion coefficients, solved either as a square collocation system or as
//! an overdetermined least-squares problem; both routes go through the same
//! rank-revealing minimum-norm solver because the collocation matrix is
//! structurally rank deficient (a zero row at `t = 0`, duplicated columns for
//! symmetric second-order coefficients).
//!
//! The numeric core is generic over the scalar type ([`scalar::Real`]);
//! `f64` aliases for the main types are exported at the crate root.

pub mod assembly;
pub mod basis;
pub mod error;
pub mod linalg;
pub mod quadrature;
pub mod scalar;
pub mod signals;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Real;

pub type BasisSetF64 = basis::BasisSet<f64>;
pub type QuadratureConfigF64 = quadrature::QuadratureConfig<f64>;
pub type SignalPairF64 = signals::SignalPair<f64>;
pub type GroundTruthKernelsF64 = signals::GroundTruthKernels<f64>;
pub type NoiseSpecF64 = signals::NoiseSpec<f64>;
pub type NodeGridF64 = assembly::NodeGrid<f64>;
pub type AssembledSystemF64 = assembly::AssembledSystem<f64>;
pub type MatrixF64 = linalg::Matrix<f64>;
pub type KernelExpansionF64 = solver::KernelExpansion<f64>;
pub type IdentificationReportF64 = solver::IdentificationReport<f64>;
