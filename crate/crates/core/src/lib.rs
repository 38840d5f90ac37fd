//! Floquet spectral analysis of Hill operators `H = -d²/dx² + V` with complex π-periodic `V`.
//!
//! The pipeline runs potential → transfer data → spectra → arcs → criterion → projections.
//! The ODE layer and the transfer/monodromy kernels are generic over the real scalar
//! ([`scalar::Real`]); the spectral layers work in `f64`, and the aliases below name the
//! double-precision instances.

pub mod error;
pub mod potential;
pub mod scalar;
pub mod ode;
pub mod quadrature;
pub mod config;
pub mod floquet;
pub mod rootfind;
pub mod spectra;
pub mod arcs;
pub mod criterion;
pub mod projection;

pub use config::Config;
pub use error::{HillError, Result};

pub type C64 = num_complex::Complex<f64>;
pub type Potential64 = potential::Potential<f64>;
pub type Transfer64 = floquet::Transfer<f64>;
pub type MonodromyData64 = floquet::MonodromyData<f64>;
pub type FundamentalData64 = floquet::FundamentalData<f64>;
pub type FloquetSolutions64 = floquet::FloquetSolutions<f64>;
