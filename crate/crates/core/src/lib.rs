//! Stinespring subproduct systems of finite quantum channels.
//!
//! Given a channel `Φ(A) = Σ K_k† A K_k` on `B(C^d)`, this crate builds the
//! Stinespring spaces `GH_m` of all powers `Φ^m`, their shifts and
//! inductive-limit maps, unitary and Stinespring dilations, complementary
//! channels, covariant symbols, correlation matrices of a reference state and
//! the time-`m` dequantization maps, together with convergence diagnostics.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`.

pub mod berezin;
pub mod catalog;
pub mod channel;
pub mod dilation;
pub mod error;
pub mod numeric;
pub mod scalar;
pub mod subproduct;
pub mod tolerance;

pub use catalog::{CatalogParams, CatalogSpec, Family};
pub use channel::{MultiIndex, ValidationReport, WordTable};
pub use error::{Error, Result};
pub use scalar::{Cx, Real};
pub use tolerance::ToleranceConfig;

/// Double-precision aliases.
pub type Complex = Cx<f64>;
pub type Matrix = numeric::CMatrix<f64>;
pub type Kraus = channel::KrausSet<f64>;
pub type Subproduct = subproduct::SubproductSystem<f64>;
pub type Fock = subproduct::TruncatedFock<f64>;
pub type Dilation = dilation::DilationBundle<f64>;
pub type State = berezin::StateSpec<f64>;
pub type Correlations = berezin::CorrelationData<f64>;
pub type Gt0 = berezin::Gt0Element<f64>;
pub type Convergence = berezin::ConvergenceReport;

/// Single-precision aliases.
pub type Matrix32 = numeric::CMatrix<f32>;
pub type Kraus32 = channel::KrausSet<f32>;
pub type Subproduct32 = subproduct::SubproductSystem<f32>;
