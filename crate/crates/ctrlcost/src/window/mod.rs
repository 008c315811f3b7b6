//! Biorthogonal families for sequences λ_n = n² + O(n) and the resulting
//! bound on ‖c‖ in terms of ‖Σ c_n e^{iλ_n t}‖ on short intervals.

mod control;
mod family;
mod multiplier;
mod product;
mod sequence;

pub(crate) use control::control_with_weights;
pub use control::{boundary_control_from_family, FamilyControl};
pub use family::{
    build_family, cross_window_decay, fit_exponent, multiplier_rate, window_cost_bound, window_cost_curve,
    BiorthogonalFamily, DecayCheck, ExponentFit, FamilyManifest, WindowCostCurve, WindowCostSample, ALPHA_STAR,
    RESIDUAL_TOLERANCE,
};
pub use multiplier::{build_multiplier, Multiplier};
pub use product::{evaluate_f, fit_growth_constant, required_truncation, ProductF};
pub use sequence::{CountingCertificate, CountingFunction, SpectralSequence, TailModel};
