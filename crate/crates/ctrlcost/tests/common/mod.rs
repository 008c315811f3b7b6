// Shared by the property suite and the acceptance runner; each uses a subset.
#![allow(dead_code)]

use std::sync::Arc;

use ctrlcost::observability::{build_gramian, vector_norm, ModeWindow, ObservabilityGramian, ObservationDescriptor};
use ctrlcost::precision::{eig_hermitian, gauss_legendre, Complex, HermitianMatrix, PrecisionContext};
use ctrlcost::spectral::dirichlet_laplacian_basis;
use proptest::prelude::*;
use rug::ops::Pow;
use rug::Float;

pub const PI: f64 = std::f64::consts::PI;

pub fn ctx(bits: u32) -> PrecisionContext {
    PrecisionContext::new(bits).unwrap()
}

pub fn hermitian(order: usize, raw: &[f64], bits: u32) -> HermitianMatrix {
    HermitianMatrix::from_fn(order, bits, |j, k| {
        let (a, b) = (raw[2 * (j * order + k)], raw[2 * (j * order + k) + 1]);
        let (c, d) = (raw[2 * (k * order + j)], raw[2 * (k * order + j) + 1]);
        if j == k {
            Complex::from_f64(bits, a, 0.0)
        } else {
            Complex::from_f64(bits, a + c, b - d)
        }
    })
}

pub fn eig_residuals(m: &HermitianMatrix, bits: u32) -> (f64, f64) {
    let eig = eig_hermitian(m, &ctx(bits)).unwrap();
    let norm = m.frobenius_norm().to_f64();
    let mut sum = Float::new(bits);
    for e in &eig {
        sum += &e.value;
    }
    let trace = Float::with_val(bits, &sum - &m.trace()).abs().to_f64() / norm;
    let mut pair: f64 = 0.0;
    for e in &eig {
        let mv = m.mul_vec(&e.vector);
        let diff: Vec<Complex> = mv.iter().zip(&e.vector).map(|(a, v)| a - &v.scale(&e.value)).collect();
        pair = pair.max(vector_norm(&diff).to_f64() / norm);
    }
    (trace, pair)
}

pub fn interior(length: f64, modes: usize, omega: (f64, f64)) -> ObservationDescriptor {
    let basis = Arc::new(dirichlet_laplacian_basis(length, modes, 201).unwrap());
    ObservationDescriptor::interior(basis, vec![omega]).unwrap()
}

pub fn min_eig(g: &ObservabilityGramian, bits: u32) -> Float {
    eig_hermitian(&g.matrix, &ctx(bits)).unwrap()[0].value.clone()
}

pub fn omega_pair() -> impl Strategy<Value = ((f64, f64), (f64, f64))> {
    // Ω₁ ⊂ Ω₂ ⊂ (0, π)
    (0.1f64..1.0, 0.3f64..1.2, 0.0f64..0.5, 0.0f64..0.5)
        .prop_map(|(a, w, da, db)| ((a + da, a + da + w), (a, (a + da + w + db).min(PI))))
}

pub fn eigen_round_trip(order: usize, raw: &[f64]) -> Result<(), TestCaseError> {
    let m = hermitian(order, raw, 256);
    let (trace, pair) = eig_residuals(&m, 256);
    prop_assert!(trace <= 2f64.powi(-128), "trace residual {trace:e}");
    prop_assert!(pair <= 2f64.powi(-200), "eigenpair residual {pair:e}");
    Ok(())
}

pub fn polynomial_exactness(n: usize, coeffs: &[f64]) -> Result<(), TestCaseError> {
    let c = ctx(256);
    let deg = 2 * n - 1;
    let (a, b) = (c.float(-0.3), c.float(1.7));
    let q = gauss_legendre(
        |x: &Float| {
            let mut acc = Float::new(256);
            for k in (0..=deg).rev() {
                acc = Float::with_val(256, &acc * x) + coeffs[k];
            }
            acc
        },
        &a,
        &b,
        n,
        &c,
    )
    .unwrap();
    // antiderivative Σ c_k x^{k+1}/(k+1) at working precision
    let prim = |x: f64| -> Float {
        let xf = Float::with_val(256, x);
        let mut acc = Float::new(256);
        for k in 0..=deg {
            acc += Float::with_val(256, xf.clone().pow((k + 1) as u32)) * coeffs[k] / (k + 1) as u32;
        }
        acc
    };
    let exact = Float::with_val(256, prim(1.7) - prim(-0.3));
    let err = Float::with_val(256, &q - &exact).abs().to_f64();
    let scale = exact.abs().to_f64().max(1.0);
    prop_assert!(err <= 2f64.powi(-200) * scale, "error {err:e}");
    Ok(())
}

pub fn monotone_in_horizon(t1: f64, dt: f64, om: (f64, f64)) -> Result<(), TestCaseError> {
    let obs = interior(PI, 6, om);
    let c = ctx(256);
    let win = ModeWindow::range(1, 6).unwrap();
    let g1 = build_gramian(&obs, t1, &win, &c).unwrap();
    let g2 = build_gramian(&obs, t1 + dt, &win, &c).unwrap();
    prop_assert!(min_eig(&g1, 256) <= min_eig(&g2, 256));
    Ok(())
}

pub fn monotone_in_omega(t: f64, small: (f64, f64), large: (f64, f64)) -> Result<(), TestCaseError> {
    let c = ctx(256);
    let win = ModeWindow::range(1, 6).unwrap();
    let g1 = build_gramian(&interior(PI, 6, small), t, &win, &c).unwrap();
    let g2 = build_gramian(&interior(PI, 6, large), t, &win, &c).unwrap();
    prop_assert!(min_eig(&g1, 256) <= min_eig(&g2, 256));
    Ok(())
}
