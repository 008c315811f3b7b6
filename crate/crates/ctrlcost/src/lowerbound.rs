//! The small-time lower bound: heat-smoothed point sources far from Ω are
//! almost invisible to the Schrödinger observation.
//!
//! A witness for horizon T is u₀ = Σ_{ω_j ≤ d/T} e^{−Tω_j²/2} e_j(y) e_j,
//! observed on (−T/2, T/2) × Ω. Its ratio R(T) = ‖u₀‖/‖u‖_{L²((−T/2,T/2)×Ω)}
//! bounds the cost from below, and T ln R(T) tends to at least d²/4.

use num_complex::Complex64 as C64;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observability::{
    build_gramian, cost_estimate, CostCurve, CostSample, ModeWindow, ObservabilityGramian, ObservationDescriptor,
    ObservationKind,
};
use crate::precision::{Complex, PrecisionContext};
use crate::spectral::SpectralBasis;

/// Heat exponents 2·Re z·λ beyond which a mode is dropped by [`heat_window`].
const HEAT_EXPONENT_CUT: f64 = 90.0;

/// Tails above this fraction of the computed norm are reported as unconverged.
const TAIL_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatNorm {
    /// ‖e^{zΔ}δ_y‖_{L²(Ω)} over the window.
    pub value: f64,
    /// Parseval bound on the part carried by modes outside the window.
    pub tail: f64,
}

fn intervals(obs: &ObservationDescriptor) -> Result<&[(f64, f64)]> {
    match obs.kind() {
        ObservationKind::Interior { intervals } => Ok(intervals),
        _ => Err(Error::validation("observation", "needs interior observation")),
    }
}

/// dist(y, Ω̄).
pub fn distance_to_omega(obs: &ObservationDescriptor, y: f64) -> Result<f64> {
    Ok(intervals(obs)?
        .iter()
        .map(|&(a, b)| (a - y).max(y - b).max(0.0))
        .fold(f64::INFINITY, f64::min))
}

/// (Σ_{j ∉ window} e^{−2aλ_j} e_j(y)²)^{1/2}.
///
/// Modes past the stored ones are modelled with the last stored gap and the
/// largest stored sample of e_j².
fn heat_tail(basis: &SpectralBasis, window: &ModeWindow, a: f64, y: f64) -> f64 {
    let k = basis.len();
    let mut sum = 0.0;
    for n in 1..=k {
        if window.modes().binary_search(&n).is_err() {
            sum += (-2.0 * a * basis.eigenvalue(n)).exp() * basis.value(n, y).powi(2);
        }
    }
    if k >= 2 {
        let gap = basis.eigenvalue(k) - basis.eigenvalue(k - 1);
        let sup = (1..=k)
            .map(|n| basis.eigenfunction(n).iter().fold(0.0f64, |m, v| m.max(v * v)))
            .fold(0.0, f64::max);
        let q = (-2.0 * a * gap).exp();
        sum += sup * (-2.0 * a * basis.eigenvalue(k)).exp() * q / (1.0 - q);
    }
    sum.sqrt()
}

/// Modes with 2·Re z·λ_j ≤ 90, enough for [`complex_heat_norm`] at that Re z.
pub fn heat_window(basis: &SpectralBasis, re_z: f64) -> Result<ModeWindow> {
    if !(re_z > 0.0) {
        return Err(Error::validation("z", format!("Re z = {re_z} is not positive")));
    }
    ModeWindow::by_frequency(basis, f64::NEG_INFINITY, (HEAT_EXPONENT_CUT / (2.0 * re_z)).sqrt())
}

/// ‖Σ_j a_j e_j‖_{L²(Ω)} = (aᴴ S a)^{1/2} at working precision.
fn observed_norm(spatial: &[Float], a: &[Complex], prec: u32) -> f64 {
    let m = a.len();
    let mut acc = Float::new(prec);
    for j in 0..m {
        for k in 0..m {
            let mut z = Complex::zero(prec);
            z.add_conj_mul(&a[j], &a[k]);
            acc += Float::with_val(prec, &z.re * &spatial[j * m + k]);
        }
    }
    acc.max(&Float::new(prec)).sqrt().to_f64()
}

/// e^{−zλ}·c at working precision.
fn damped(lambda: &Float, z: C64, c: &Float, prec: u32) -> Complex {
    let mag = Float::with_val(prec, -Float::with_val(prec, lambda * z.re)).exp() * c;
    let arg = Float::with_val(prec, -Float::with_val(prec, lambda * z.im));
    Complex::cis(&arg).scale(&mag)
}

/// ‖e^{zΔ}δ_y‖_{L²(Ω)}, with e^{zΔ}δ_y = Σ_j e^{−zλ_j} e_j(y) e_j.
pub fn complex_heat_norm(
    obs: &ObservationDescriptor,
    y: f64,
    z: C64,
    window: &ModeWindow,
    ctx: &PrecisionContext,
) -> Result<HeatNorm> {
    intervals(obs)?;
    if !(z.re > 0.0) || !z.im.is_finite() {
        return Err(Error::validation("z", format!("{z} does not have Re z > 0")));
    }
    let basis = obs.basis();
    if !(y > 0.0 && y < basis.length()) {
        return Err(Error::validation("y", format!("{y} is not inside the segment")));
    }
    let p = ctx.bits();
    let spatial = obs.spatial_matrix(window, p)?;
    let yf = ctx.float(y);
    let a: Vec<Complex> = window
        .modes()
        .iter()
        .map(|&n| damped(&basis.eigenvalue_mp(n, p), z, &basis.value_mp(n, &yf), p))
        .collect();
    let value = observed_norm(&spatial, &a, p);
    let tail = heat_tail(basis, window, z.re, y);
    if tail > TAIL_TOLERANCE * value {
        return Err(Error::Truncation(format!(
            "heat tail {tail:e} against a norm of {value:e}; widen the window"
        )));
    }
    Ok(HeatNorm { value, tail })
}

/// Source point y and distance d < dist(y, Ω̄) for the witness family.
#[derive(Clone, Debug)]
pub struct WitnessConfig {
    pub y: f64,
    pub d: f64,
    pub observation: ObservationDescriptor,
}

impl WitnessConfig {
    pub fn new(observation: ObservationDescriptor, y: f64, d: f64) -> Result<Self> {
        let basis = observation.basis();
        if !(y > 0.0 && y < basis.length()) {
            return Err(Error::validation(
                "y",
                format!("{y} is not inside (0, {})", basis.length()),
            ));
        }
        let dist = distance_to_omega(&observation, y)?;
        if !(d > 0.0 && d < dist) {
            return Err(Error::validation(
                "d",
                format!("need 0 < d < dist(y, Ω) = {dist}, got {d}"),
            ));
        }
        if basis.value(1, y).abs() < 1e-12 {
            return Err(Error::validation("y", "e_1 vanishes at y"));
        }
        Ok(WitnessConfig { y, d, observation })
    }

    pub fn distance(&self) -> f64 {
        distance_to_omega(&self.observation, self.y).expect("validated at construction")
    }
}

/// One witness u₀ᵀ and its observation on (−T/2, T/2) × Ω.
#[derive(Clone, Debug)]
pub struct Witness {
    pub horizon: f64,
    /// Modes with ω_j ≤ d/T.
    pub window: ModeWindow,
    /// c_j = e^{−Tλ_j/2} e_j(y).
    pub coefficients: Vec<f64>,
    pub data_norm: f64,
    pub observed_norm: f64,
    /// ‖u₀‖ / ‖u‖_{L²((−T/2,T/2)×Ω)}.
    pub ratio: f64,
    y: f64,
    gramian: ObservabilityGramian,
}

pub fn witness(cfg: &WitnessConfig, horizon: f64, ctx: &PrecisionContext) -> Result<Witness> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::validation("T", format!("{horizon} is not positive")));
    }
    let obs = &cfg.observation;
    let basis = obs.basis();
    let window = ModeWindow::by_frequency(basis, f64::NEG_INFINITY, cfg.d / horizon)
        .map_err(|_| Error::validation("T", format!("no mode with 2Tω ≤ d at T = {horizon}")))?;
    let p = ctx.bits();
    let gramian = build_gramian(obs, horizon, &window, ctx)?;
    let yf = ctx.float(cfg.y);
    let half = ctx.float(horizon / 2.0);
    let mut data = Float::new(p);
    let mut shifted = Vec::with_capacity(window.len());
    let mut coefficients = Vec::with_capacity(window.len());
    for &n in window.modes() {
        let lambda = basis.eigenvalue_mp(n, p);
        let c = Float::with_val(p, -Float::with_val(p, &lambda * &half)).exp() * basis.value_mp(n, &yf);
        data += Float::with_val(p, c.square_ref());
        coefficients.push(c.to_f64());
        // data sit at t = −T/2; on the Gramian's [0, T] they read c·e^{iλT/2}
        shifted.push(Complex::cis(&Float::with_val(p, &lambda * &half)).scale(&c));
    }
    let observed = gramian.matrix.quadratic_form(&shifted).max(&Float::new(p)).sqrt();
    let data_norm = data.sqrt().to_f64();
    let observed_norm = observed.to_f64();
    Ok(Witness {
        horizon,
        window,
        coefficients,
        data_norm,
        observed_norm,
        ratio: data_norm / observed_norm,
        y: cfg.y,
        gramian,
    })
}

impl Witness {
    /// 1/√λ_min of the Gramian on the witness window; never below `ratio`.
    pub fn window_cost(&self, ctx: &PrecisionContext) -> Result<f64> {
        cost_estimate(&self.gramian, ctx)
    }

    /// ‖u(t)‖_{L²(Ω)} for t ∈ [−T/2, T/2].
    pub fn observed_norm_at(&self, t: f64, ctx: &PrecisionContext) -> f64 {
        let p = ctx.bits();
        let basis = self.gramian.observation.basis();
        let a: Vec<Complex> = self
            .window
            .modes()
            .iter()
            .zip(&self.coefficients)
            .map(|(&n, &c)| damped(&basis.eigenvalue_mp(n, p), C64::new(0.0, t), &ctx.float(c), p))
            .collect();
        observed_norm(&self.gramian.spatial, &a, p)
    }

    /// ‖e^{(T/2)Δ}δ_y − u₀‖, the frequency truncation of the witness.
    pub fn truncation_tail(&self) -> f64 {
        heat_tail(
            self.gramian.observation.basis(),
            &self.window,
            self.horizon / 2.0,
            self.y,
        )
    }
}

/// R(T) along a decreasing T grid, reported as a cost curve.
pub fn witness_ratio_curve(cfg: &WitnessConfig, t_grid: &[f64], ctx: &PrecisionContext) -> Result<CostCurve> {
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::validation("T_grid", "need a nonempty, strictly decreasing grid"));
    }
    let mut samples = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let w = witness(cfg, t, ctx)?;
        samples.push(CostSample {
            horizon: t,
            cost: w.ratio,
            t_ln_cost: t * w.ratio.ln(),
            n_modes: w.window.len(),
            mantissa_bits: ctx.bits(),
        });
    }
    Ok(CostCurve::from_samples(samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::dirichlet_laplacian_basis;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn segment(omega: (f64, f64)) -> ObservationDescriptor {
        let basis = Arc::new(dirichlet_laplacian_basis(1.0, 60, 401).unwrap());
        ObservationDescriptor::interior(basis, vec![omega]).unwrap()
    }

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(128).unwrap()
    }

    #[test]
    fn full_segment_real_time_is_the_heat_kernel_norm() {
        let obs = segment((0.0, 1.0));
        let t = 0.01;
        let win = heat_window(obs.basis(), t).unwrap();
        let got = complex_heat_norm(&obs, 0.3, C64::new(t, 0.0), &win, &ctx()).unwrap();
        let direct: f64 = (1..=60)
            .map(|j| {
                let w = j as f64 * PI;
                (-2.0 * t * w * w).exp() * 2.0 * (w * 0.3).sin().powi(2)
            })
            .sum::<f64>()
            .sqrt();
        assert!((got.value - direct).abs() < 1e-13 * direct, "{} vs {direct}", got.value);
    }

    #[test]
    fn heat_norm_matches_a_gaussian_image_sum() {
        // on [0,1] Dirichlet the heat kernel is a sum of Gaussian images
        let obs = segment((0.7, 1.0));
        let (y, t) = (0.1, 0.004);
        let z = C64::new(t, t);
        let win = heat_window(obs.basis(), t).unwrap();
        let got = complex_heat_norm(&obs, y, z, &win, &ctx()).unwrap().value;
        let kernel = |x: f64| -> C64 {
            let mut acc = C64::new(0.0, 0.0);
            for m in -3i32..=3 {
                let s = 2.0 * m as f64;
                for (src, sign) in [(y + s, 1.0), (-y + s, -1.0)] {
                    acc += sign * (-(x - src).powi(2) / (4.0 * z)).exp() / (4.0 * PI * z).sqrt();
                }
            }
            acc
        };
        let n = 4000;
        let h = 0.3 / n as f64;
        let simpson: f64 = (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * kernel(0.7 + i as f64 * h).norm_sqr()
            })
            .sum::<f64>()
            * h
            / 3.0;
        assert!((got - simpson.sqrt()).abs() < 1e-9 * got, "{got} vs {}", simpson.sqrt());
    }

    #[test]
    fn farther_omega_sees_less() {
        let (near, far) = (segment((0.6, 1.0)), segment((0.8, 1.0)));
        let z = C64::new(0.01, 0.01);
        let win = heat_window(near.basis(), 0.01).unwrap();
        let a = complex_heat_norm(&near, 0.1, z, &win, &ctx()).unwrap().value;
        let b = complex_heat_norm(&far, 0.1, z, &win, &ctx()).unwrap().value;
        assert!(b < a);
    }

    #[test]
    fn heat_norm_rejects_bad_input() {
        let obs = segment((0.7, 1.0));
        let win = ModeWindow::range(1, 3).unwrap();
        assert!(complex_heat_norm(&obs, 0.1, C64::new(0.0, 1.0), &win, &ctx())
            .unwrap_err()
            .is_validation());
        assert!(matches!(
            complex_heat_norm(&obs, 0.1, C64::new(1e-3, 0.0), &win, &ctx()),
            Err(Error::Truncation(_))
        ));
    }

    #[test]
    fn full_observation_gives_inverse_root_t() {
        // y inside Ω is refused by the validated constructor, so build it by hand
        let cfg = WitnessConfig {
            y: 0.1,
            d: 0.55,
            observation: segment((0.0, 1.0)),
        };
        for &t in &[0.15, 0.05, 0.02] {
            let w = witness(&cfg, t, &ctx()).unwrap();
            assert!((w.ratio * t.sqrt() - 1.0).abs() < 1e-12, "{}", w.ratio * t.sqrt());
        }
    }

    #[test]
    fn witness_is_below_the_window_cost_and_in_its_span() {
        let cfg = WitnessConfig::new(segment((0.7, 1.0)), 0.1, 0.55).unwrap();
        let c = ctx();
        for &t in &[0.05, 0.025] {
            let w = witness(&cfg, t, &c).unwrap();
            let basis = cfg.observation.basis();
            assert!(w
                .window
                .modes()
                .iter()
                .all(|&n| 2.0 * (t / 2.0) * basis.frequency(n) <= cfg.d));
            let cost = w.window_cost(&c).unwrap();
            assert!(w.ratio <= cost * (1.0 + 1e-12), "R = {} > cost {cost}", w.ratio);

            // time-sampled oracle for ‖u‖_{L²((−T/2,T/2)×Ω)}
            let n = 2000;
            let h = t / n as f64;
            let simpson: f64 = (0..=n)
                .map(|i| {
                    let wgt = if i == 0 || i == n {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    wgt * w.observed_norm_at(-t / 2.0 + i as f64 * h, &c).powi(2)
                })
                .sum::<f64>()
                * h
                / 3.0;
            assert!(
                (simpson.sqrt() - w.observed_norm).abs() < 1e-9 * w.observed_norm,
                "{} vs {}",
                simpson.sqrt(),
                w.observed_norm
            );
        }
    }

    #[test]
    fn witness_tracks_the_complex_heat_flow() {
        let cfg = WitnessConfig::new(segment((0.7, 1.0)), 0.1, 0.55).unwrap();
        let c = ctx();
        let t = 0.05;
        let w = witness(&cfg, t, &c).unwrap();
        let win = heat_window(cfg.observation.basis(), t / 2.0).unwrap();
        for &s in &[-0.02, 0.0, 0.013, 0.025] {
            let heat = complex_heat_norm(&cfg.observation, 0.1, C64::new(t / 2.0, s), &win, &c).unwrap();
            let gap = (heat.value - w.observed_norm_at(s, &c)).abs();
            assert!(
                gap <= w.truncation_tail() + heat.tail + 1e-15,
                "{gap} > {}",
                w.truncation_tail()
            );
        }
    }

    #[test]
    fn witness_config_is_validated() {
        let obs = segment((0.7, 1.0));
        assert!(WitnessConfig::new(obs.clone(), 0.1, 0.6).is_err());
        assert!(WitnessConfig::new(obs.clone(), 0.8, 0.1).is_err());
        assert!(WitnessConfig::new(obs.clone(), 1.2, 0.1).is_err());
        let cfg = WitnessConfig::new(obs, 0.1, 0.55).unwrap();
        assert!((cfg.distance() - 0.6).abs() < 1e-15);
        assert!(witness(&cfg, 1e3, &ctx()).is_err());
        assert!(witness_ratio_curve(&cfg, &[0.02, 0.03], &ctx()).is_err());
    }
}
