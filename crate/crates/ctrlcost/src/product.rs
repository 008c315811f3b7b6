//! Costs of tensor products: a factor system observed through C, coupled to
//! an unobserved self-adjoint companion B, costs exactly what the factor
//! costs. Rectangles and cylinders controlled from one end are instances.

use std::sync::Arc;

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observability::{
    build_gramian, checked_min_eigenvalue, theta, ModeWindow, ObservabilityGramian, ObservationDescriptor,
};
use crate::precision::{HermitianMatrix, PrecisionContext};
use crate::spectral::{dirichlet_laplacian_basis, solve_sturm_liouville, Endpoint, SturmLiouvilleProblem};

/// Largest tensor Gramian order assembled.
pub const MAX_TENSOR_ORDER: usize = 600;

/// Factor system with an observation, plus the companion spectrum β_m.
#[derive(Clone, Debug)]
pub struct TensorSystem {
    pub observation: ObservationDescriptor,
    pub companion: Vec<f64>,
}

impl TensorSystem {
    pub fn new(observation: ObservationDescriptor, companion: Vec<f64>) -> Result<Self> {
        if companion.is_empty() {
            return Err(Error::validation("companion_spectrum", "empty"));
        }
        if companion.iter().any(|b| !b.is_finite()) {
            return Err(Error::validation(
                "companion_spectrum",
                "eigenvalues must be finite reals",
            ));
        }
        Ok(TensorSystem { observation, companion })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorComparison {
    pub horizon: f64,
    pub tensor_min: f64,
    pub factor_min: f64,
    /// Smallest eigenvalue of each companion block.
    pub block_mins: Vec<f64>,
    /// |tensor_min − factor_min| / factor_min.
    pub relative_gap: f64,
}

/// Gramian of e^{−it(A+B)} observed through C⊗I on window × {1..m}, index
/// (n, m) ↦ m·|window| + n, optionally in the norm Σ w_n²|c_{n,m}|².
///
/// C⊗I only pairs equal companion indices, so entries across companion
/// blocks vanish; within a block the phase carries (λ_n + β_m) − (λ_k + β_m).
pub(crate) fn tensor_gramian(
    factor: &ObservabilityGramian,
    companion: &[f64],
    weights: Option<&[Float]>,
    ctx: &PrecisionContext,
) -> Result<HermitianMatrix> {
    let n = factor.window.len();
    let order = n * companion.len();
    if order > MAX_TENSOR_ORDER {
        return Err(Error::Size {
            order,
            cap: MAX_TENSOR_ORDER,
        });
    }
    let p = ctx.bits();
    let t = ctx.float(factor.horizon);
    let shifted: Vec<Vec<Float>> = companion
        .iter()
        .map(|&b| factor.eigenvalues.iter().map(|l| Float::with_val(p, l + b)).collect())
        .collect();
    Ok(HermitianMatrix::from_fn(order, p, |r, c| {
        let (mr, jr) = (r / n, r % n);
        let (mc, jc) = (c / n, c % n);
        if mr != mc {
            return ctx.zero();
        }
        let delta = Float::with_val(p, &shifted[mr][jr] - &shifted[mc][jc]);
        let mut entry = theta(&delta, &t, ctx).scale(&factor.spatial[jr * n + jc]);
        if let Some(w) = weights {
            let s = Float::with_val(p, &w[jr] * &w[jc]);
            entry = entry.scale(&s.recip());
        }
        entry
    }))
}

fn rescaled(g: &HermitianMatrix, w: &[Float]) -> HermitianMatrix {
    HermitianMatrix::from_fn(g.order(), g.prec(), |j, k| {
        g.get(j, k).scale(&Float::with_val(g.prec(), &w[j] * &w[k]).recip())
    })
}

fn compare(
    factor: &ObservabilityGramian,
    companion: &[f64],
    weights: Option<&[Float]>,
    ctx: &PrecisionContext,
) -> Result<TensorComparison> {
    let tensor = tensor_gramian(factor, companion, weights, ctx)?;
    let tensor_min = checked_min_eigenvalue(&tensor, ctx)?.to_f64();
    let factor_matrix = match weights {
        Some(w) => rescaled(&factor.matrix, w),
        None => factor.matrix.clone(),
    };
    let factor_min = checked_min_eigenvalue(&factor_matrix, ctx)?.to_f64();
    let n = factor.window.len();
    let block_mins = (0..companion.len())
        .map(|m| {
            let idx: Vec<usize> = (m * n..(m + 1) * n).collect();
            checked_min_eigenvalue(&tensor.submatrix(&idx), ctx).map(|v| v.to_f64())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TensorComparison {
        horizon: factor.horizon,
        tensor_min,
        factor_min,
        block_mins,
        relative_gap: (tensor_min - factor_min).abs() / factor_min,
    })
}

/// Smallest eigenvalues of the tensor Gramian over window × {β_1..β_m} and of
/// the factor Gramian over the window.
pub fn tensor_gramian_mineig(
    sys: &TensorSystem,
    horizon: f64,
    window: &ModeWindow,
    companion_count: usize,
    ctx: &PrecisionContext,
) -> Result<TensorComparison> {
    if companion_count == 0 || companion_count > sys.companion.len() {
        return Err(Error::validation(
            "companion_count",
            format!("{companion_count} is not in 1..={}", sys.companion.len()),
        ));
    }
    let factor = build_gramian(&sys.observation, horizon, window, ctx)?;
    compare(&factor, &sys.companion[..companion_count], None, ctx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderCost {
    pub horizon: f64,
    /// Derivative order of the trace observed at x = X.
    pub order: u8,
    /// 1/√λ_min of the tensor Gramian in the H^k-weighted norm.
    pub tensor_cost: f64,
    /// The same for the segment alone.
    pub factor_cost: f64,
    pub relative_gap: f64,
}

/// Cost of observing ∂_x^k u at x = X on the cylinder [0, X] × companion,
/// with the factor weighted by (1 + λ_n)^{k/2}.
pub fn cylinder_boundary_cost(
    factor: &SturmLiouvilleProblem,
    companion: &[f64],
    horizon: f64,
    window: &ModeWindow,
    ctx: &PrecisionContext,
) -> Result<CylinderCost> {
    factor.validate()?;
    let modes = window.max();
    let basis = if *factor == SturmLiouvilleProblem::dirichlet(factor.length) {
        dirichlet_laplacian_basis(factor.length, modes, 401)?
    } else {
        solve_sturm_liouville(factor, modes, (16 * modes + 1).max(401))?
    };
    let order = factor.boundary_trace_order();
    let obs = ObservationDescriptor::boundary(Arc::new(basis), Endpoint::Right, order)?;
    let sys = TensorSystem::new(obs, companion.to_vec())?;
    let g = build_gramian(&sys.observation, horizon, window, ctx)?;
    let p = ctx.bits();
    let weights: Vec<Float> = g
        .eigenvalues
        .iter()
        .map(|l| {
            if order == 0 {
                Float::with_val(p, 1u32)
            } else {
                Float::with_val(p, l + 1u32).sqrt()
            }
        })
        .collect();
    let cmp = compare(&g, &sys.companion, Some(&weights), ctx)?;
    Ok(CylinderCost {
        horizon,
        order,
        tensor_cost: cmp.tensor_min.sqrt().recip(),
        factor_cost: cmp.factor_min.sqrt().recip(),
        relative_gap: cmp.relative_gap,
    })
}
