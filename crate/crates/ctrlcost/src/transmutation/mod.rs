//! Control transmutation: a wave control and a fundamental controlled
//! solution of the Schrödinger equation on a segment combine into a
//! Schrödinger control, u = ∫ v w̲ ds and g = −∫ v f̲ ds.

mod expsum;
mod kernel;
mod transmute;
mod wave;

pub use expsum::ExpRows;
pub use kernel::{build_fundamental_solution, FundamentalControlledSolution, KernelControl};
pub use transmute::{
    kernel_modes_for, transmute, two_stage_control, TransmutedControl, TwoStageControl, TwoStageOptions,
};
pub use wave::{wave_hum_control, Cutoff, WaveControlledTrajectory, WaveOptions};

use crate::precision::{GaussLegendre, PrecisionContext};

/// Gauss–Legendre nodes and weights on [−1, 1] in double precision.
pub(crate) fn gl_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let ctx = PrecisionContext::new(128).expect("valid precision");
    GaussLegendre::new(n, &ctx).expect("positive order").to_f64()
}
