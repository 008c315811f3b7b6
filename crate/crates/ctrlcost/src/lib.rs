//! Numerical controllability costs for 1-D Schrödinger and Sturm–Liouville
//! systems.
//!
//! The cost C_{T,Ω} of steering e^{−itA}u₀ to rest in time T with controls
//! supported in Ω is computed as 1/√λ_min of a truncated observability
//! Gramian, and exact controls are synthesised three ways: by Gramian
//! inversion (HUM), from a biorthogonal family built out of entire
//! functions, and by transmuting a wave control through a fundamental
//! controlled solution.
//!
//! Conventions: free evolution is u_n(t) = e^{−iλ_n t} u_n(0), and a control
//! g enters as i∂_t u + ∂_x² u = 1_Ω g, i.e. u_n' = −iλ_n u_n − i g_n.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod lowerbound;
pub mod observability;
pub mod precision;
pub mod product;
pub mod spectral;
pub mod transmutation;
pub mod window;

pub use error::{Error, Result};

/// Library version, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
