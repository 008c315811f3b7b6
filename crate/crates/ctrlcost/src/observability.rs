//! Truncated observability Gramians, window costs and HUM controls.
//!
//! On a window of modes the Gramian is G_jk = S_jk·Θ_jk(T) with
//! Θ_jk(T) = ∫₀^T e^{i(λ_j−λ_k)t} dt and S_jk the spatial part of the
//! observation. The window cost 1/√λ_min(G) bounds C_{T,Ω} from below.

use std::sync::Arc;

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precision::{eig_hermitian, Complex, GaussLegendre, HermitianMatrix, PrecisionContext};
use crate::spectral::{Endpoint, SpectralBasis};

/// An ordered set of 1-based mode indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeWindow {
    modes: Vec<usize>,
}

impl ModeWindow {
    pub fn new(mut modes: Vec<usize>) -> Result<Self> {
        modes.sort_unstable();
        modes.dedup();
        if modes.is_empty() {
            return Err(Error::validation("mode_window", "empty"));
        }
        if modes[0] == 0 {
            return Err(Error::validation("mode_window", "modes are 1-based"));
        }
        Ok(ModeWindow { modes })
    }

    /// lo..=hi.
    pub fn range(lo: usize, hi: usize) -> Result<Self> {
        if lo > hi {
            return Err(Error::validation("mode_window", format!("{lo} > {hi}")));
        }
        ModeWindow::new((lo..=hi).collect())
    }

    /// Modes with lo ≤ ω_n ≤ hi, searched among the basis' stored modes.
    pub fn by_frequency(basis: &SpectralBasis, lo: f64, hi: f64) -> Result<Self> {
        let modes: Vec<usize> = (1..=basis.len())
            .filter(|&n| (lo..=hi).contains(&basis.frequency(n)))
            .collect();
        if modes.is_empty() {
            return Err(Error::validation(
                "mode_window",
                format!("no mode with frequency in [{lo}, {hi}] among {} stored", basis.len()),
            ));
        }
        let last = basis.len();
        if last >= 2 && modes.last() == Some(&last) {
            // extrapolate the next frequency; if it would fall inside, the basis is too small
            let next = 2.0 * basis.frequency(last) - basis.frequency(last - 1);
            if next <= hi {
                return Err(Error::validation(
                    "mode_window",
                    format!("basis holds {last} modes but frequencies up to {hi} are requested"),
                ));
            }
        }
        ModeWindow::new(modes)
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn max(&self) -> usize {
        *self.modes.last().expect("non-empty")
    }
}

/// Where the solution is observed (equivalently, where the control acts).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservationKind {
    /// Ω as a union of disjoint open subintervals of [0, X].
    Interior { intervals: Vec<(f64, f64)> },
    /// ∂_x^k u at one endpoint.
    Boundary { endpoint: Endpoint, order: u8 },
    /// ∂_x^k u at both endpoints, as two independent channels.
    BothEnds { order: u8 },
}

#[derive(Clone, Debug)]
pub struct ObservationDescriptor {
    kind: ObservationKind,
    basis: Arc<SpectralBasis>,
}

impl ObservationDescriptor {
    pub fn new(kind: ObservationKind, basis: Arc<SpectralBasis>) -> Result<Self> {
        match &kind {
            ObservationKind::Interior { intervals } => {
                if intervals.is_empty() {
                    return Err(Error::validation("omega", "empty observation set"));
                }
                let mut sorted = intervals.clone();
                sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
                for &(a, b) in &sorted {
                    if !(a < b) {
                        return Err(Error::validation("omega", format!("interval ({a}, {b}) is empty")));
                    }
                    if a < 0.0 || b > basis.length() {
                        return Err(Error::validation(
                            "omega",
                            format!("interval ({a}, {b}) leaves [0, {}]", basis.length()),
                        ));
                    }
                }
                for w in sorted.windows(2) {
                    if w[1].0 < w[0].1 {
                        return Err(Error::validation(
                            "omega",
                            format!("intervals {:?} and {:?} overlap", w[0], w[1]),
                        ));
                    }
                }
                Ok(ObservationDescriptor {
                    kind: ObservationKind::Interior { intervals: sorted },
                    basis,
                })
            }
            ObservationKind::Boundary { order, .. } | ObservationKind::BothEnds { order } => {
                if *order > 1 {
                    return Err(Error::validation("order", "derivative order must be 0 or 1"));
                }
                Ok(ObservationDescriptor { kind, basis })
            }
        }
    }

    pub fn interior(basis: Arc<SpectralBasis>, intervals: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(ObservationKind::Interior { intervals }, basis)
    }

    pub fn boundary(basis: Arc<SpectralBasis>, endpoint: Endpoint, order: u8) -> Result<Self> {
        Self::new(ObservationKind::Boundary { endpoint, order }, basis)
    }

    pub fn kind(&self) -> &ObservationKind {
        &self.kind
    }

    pub fn basis(&self) -> &Arc<SpectralBasis> {
        &self.basis
    }

    /// Longest stretch a wave can spend outside Ω: an interior gap counts
    /// once, a gap touching a wall twice (the ray reflects).
    pub fn unobserved_length(&self) -> Option<f64> {
        let ObservationKind::Interior { intervals } = &self.kind else {
            return None;
        };
        let x = self.basis.length();
        let mut worst = 2.0 * intervals[0].0;
        worst = worst.max(2.0 * (x - intervals[intervals.len() - 1].1));
        for w in intervals.windows(2) {
            worst = worst.max(w[1].0 - w[0].1);
        }
        Some(worst)
    }

    /// 1_Ω(x).
    pub fn contains(&self, x: f64) -> bool {
        match &self.kind {
            ObservationKind::Interior { intervals } => intervals.iter().any(|&(a, b)| a < x && x < b),
            _ => false,
        }
    }

    /// Trace channels: one weight vector per observed endpoint.
    fn channels(&self, window: &ModeWindow, prec: u32) -> Vec<Vec<Float>> {
        let weights = |end: Endpoint, k: u8| -> Vec<Float> {
            window
                .modes()
                .iter()
                .map(|&n| self.basis.trace_weight_mp(n, end, k, prec))
                .collect()
        };
        match &self.kind {
            ObservationKind::Interior { .. } => Vec::new(),
            ObservationKind::Boundary { endpoint, order } => vec![weights(*endpoint, *order)],
            ObservationKind::BothEnds { order } => {
                vec![weights(Endpoint::Left, *order), weights(Endpoint::Right, *order)]
            }
        }
    }

    /// Spatial part S of the Gramian on a window (row-major, real symmetric).
    pub fn spatial_matrix(&self, window: &ModeWindow, prec: u32) -> Result<Vec<Float>> {
        for &n in window.modes() {
            self.basis.check_mode(n)?;
        }
        let m = window.len();
        let mut s = vec![Float::new(prec); m * m];
        match &self.kind {
            ObservationKind::Interior { intervals } => {
                for j in 0..m {
                    for k in j..m {
                        let mut acc = Float::new(prec);
                        for &(a, b) in intervals {
                            acc += self.basis.overlap_mp(window.modes()[j], window.modes()[k], a, b, prec);
                        }
                        s[k * m + j] = acc.clone();
                        s[j * m + k] = acc;
                    }
                }
            }
            _ => {
                for w in self.channels(window, prec) {
                    for j in 0..m {
                        for k in 0..m {
                            s[j * m + k] += Float::with_val(prec, &w[j] * &w[k]);
                        }
                    }
                }
            }
        }
        Ok(s)
    }
}

/// Θ(T) = ∫₀^T e^{iΔt} dt, with the Taylor form T + iΔT²/2 when |Δ| < 2^{−bits/2}.
pub fn theta(delta: &Float, horizon: &Float, ctx: &PrecisionContext) -> Complex {
    let p = ctx.bits();
    if delta.clone().abs() < ctx.half_epsilon() {
        let mut im = Float::with_val(p, horizon * horizon);
        im *= delta;
        im /= 2;
        return Complex::new(horizon.clone(), im);
    }
    // (e^{iΔT} − 1)/(iΔ) = (sin ΔT + i(1 − cos ΔT))/Δ
    let arg = Float::with_val(p, delta * horizon);
    let e = Complex::cis(&arg);
    let re = Float::with_val(p, &e.im / delta);
    let im = Float::with_val(p, 1 - &e.re) / delta;
    Complex::new(re, im)
}

/// A Gramian on a mode window, with the data needed to synthesise controls.
#[derive(Clone, Debug)]
pub struct ObservabilityGramian {
    pub matrix: HermitianMatrix,
    pub horizon: f64,
    pub window: ModeWindow,
    pub(crate) spatial: Vec<Float>,
    pub(crate) eigenvalues: Vec<Float>,
    pub(crate) channels: Vec<Vec<Float>>,
    pub(crate) observation: ObservationDescriptor,
}

pub fn build_gramian(
    obs: &ObservationDescriptor,
    horizon: f64,
    window: &ModeWindow,
    ctx: &PrecisionContext,
) -> Result<ObservabilityGramian> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::validation("T", "must be positive"));
    }
    let p = ctx.bits();
    let spatial = obs.spatial_matrix(window, p)?;
    let m = window.len();
    let eigenvalues: Vec<Float> = window.modes().iter().map(|&n| obs.basis.eigenvalue_mp(n, p)).collect();
    let t = ctx.float(horizon);
    let matrix = HermitianMatrix::from_fn(m, p, |j, k| {
        let delta = Float::with_val(p, &eigenvalues[j] - &eigenvalues[k]);
        theta(&delta, &t, ctx).scale(&spatial[j * m + k])
    });
    Ok(ObservabilityGramian {
        matrix,
        horizon,
        window: window.clone(),
        spatial,
        eigenvalues,
        channels: obs.channels(window, p),
        observation: obs.clone(),
    })
}

/// Smallest eigenvalue, rejected when it does not rise above rounding noise.
pub fn checked_min_eigenvalue(m: &HermitianMatrix, ctx: &PrecisionContext) -> Result<Float> {
    let eig = eig_hermitian(m, ctx)?;
    let min = eig[0].value.clone();
    let noise = Float::with_val(ctx.bits(), m.frobenius_norm() * ctx.epsilon()) * (64 * m.order() as u32);
    if min <= noise {
        return Err(Error::DegenerateGramian { min_eig: min.to_f64() });
    }
    Ok(min)
}

/// 1/√λ_min(G): the window cost, a lower bound for C_{T,Ω}.
pub fn cost_estimate(g: &ObservabilityGramian, ctx: &PrecisionContext) -> Result<f64> {
    let min = checked_min_eigenvalue(&g.matrix, ctx)?;
    Ok(min.sqrt().recip().to_f64())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostSample {
    pub horizon: f64,
    pub cost: f64,
    pub t_ln_cost: f64,
    pub n_modes: usize,
    pub mantissa_bits: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostCurve {
    pub samples: Vec<CostSample>,
    /// Mean of T·ln C over the smallest-T half of the samples.
    pub fitted_rate: f64,
}

impl CostCurve {
    pub fn from_samples(samples: Vec<CostSample>) -> Self {
        let n = samples.len();
        let tail = &samples[n / 2..];
        let fitted_rate = tail.iter().map(|s| s.t_ln_cost).sum::<f64>() / tail.len() as f64;
        CostCurve { samples, fitted_rate }
    }

    /// cost·√T per sample.
    pub fn scaled_costs(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.cost * s.horizon.sqrt()).collect()
    }
}

fn validate_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::validation("T_grid", "empty"));
    }
    if t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::validation("T_grid", "times must be positive"));
    }
    if t_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::validation("T_grid", "times must decrease strictly"));
    }
    Ok(())
}

/// Cost over windows {n : ω_n ≤ c/T} along a decreasing T grid.
pub fn cost_curve(obs: &ObservationDescriptor, t_grid: &[f64], c: f64, ctx: &PrecisionContext) -> Result<CostCurve> {
    validate_grid(t_grid)?;
    if !(c > 0.0) {
        return Err(Error::validation("c", "cutoff constant must be positive"));
    }
    let mut samples = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let window = ModeWindow::by_frequency(obs.basis(), f64::NEG_INFINITY, c / t)?;
        if window.len() < 5 {
            return Err(Error::validation(
                "c",
                format!("window at T = {t} holds {} < 5 modes", window.len()),
            ));
        }
        let g = build_gramian(obs, t, &window, ctx)?;
        let cost = cost_estimate(&g, ctx)?;
        samples.push(CostSample {
            horizon: t,
            cost,
            t_ln_cost: t * cost.ln(),
            n_modes: window.len(),
            mantissa_bits: ctx.bits(),
        });
    }
    Ok(CostCurve::from_samples(samples))
}

/// Cost over the high-frequency windows {n : d/T ≤ ω_n ≤ 4d/T}.
pub fn highfreq_cost_curve(
    obs: &ObservationDescriptor,
    d: f64,
    t_grid: &[f64],
    ctx: &PrecisionContext,
) -> Result<CostCurve> {
    validate_grid(t_grid)?;
    let Some(gap) = obs.unobserved_length() else {
        return Err(Error::validation(
            "observation",
            "high-frequency probe needs interior observation",
        ));
    };
    if !(d > gap) {
        return Err(Error::validation(
            "d",
            format!("d = {d} must exceed the unobserved length {gap}"),
        ));
    }
    let mut samples = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let window = ModeWindow::by_frequency(obs.basis(), d / t, 4.0 * d / t)?;
        let g = build_gramian(obs, t, &window, ctx)?;
        let cost = cost_estimate(&g, ctx)?;
        samples.push(CostSample {
            horizon: t,
            cost,
            t_ln_cost: t * cost.ln(),
            n_modes: window.len(),
            mantissa_bits: ctx.bits(),
        });
    }
    Ok(CostCurve::from_samples(samples))
}

/// Minimum-norm control from Gramian inversion.
///
/// The control is g(t,x) = 1_Ω(x) Σ_k φ_k e^{−iλ_k t} e_k(x) for interior
/// observation, or h_c(t) = Σ_k φ_k w^c_k e^{−iλ_k t} on each boundary
/// channel c, with φ = −i G⁻¹ u₀.
#[derive(Clone, Debug)]
pub struct HumControl {
    pub coefficients: Vec<Complex>,
    pub horizon: f64,
    pub window: ModeWindow,
    eigenvalues: Vec<Float>,
    spatial: Vec<Float>,
    channels: Vec<Vec<Float>>,
    observation: ObservationDescriptor,
    norm: Float,
}

pub fn hum_control(g: &ObservabilityGramian, u0: &[Complex], ctx: &PrecisionContext) -> Result<HumControl> {
    if u0.len() != g.window.len() {
        return Err(Error::validation(
            "u0",
            format!("{} coefficients for a window of {}", u0.len(), g.window.len()),
        ));
    }
    let p = ctx.bits();
    let rhs: Vec<Complex> = u0.iter().map(|z| z.with_prec(p)).collect();
    let x = g.matrix.cholesky_solve(&rhs).map_err(|e| match e {
        Error::NotPositiveDefinite { value, .. } => Error::DegenerateGramian { min_eig: value },
        other => other,
    })?;
    let mut norm2 = Float::new(p);
    for (a, b) in rhs.iter().zip(&x) {
        let mut acc = Complex::zero(p);
        acc.add_conj_mul(a, b);
        norm2 += acc.re;
    }
    let coefficients = x.iter().map(|z| -z.mul_i()).collect();
    Ok(HumControl {
        coefficients,
        horizon: g.horizon,
        window: g.window.clone(),
        eigenvalues: g.eigenvalues.clone(),
        spatial: g.spatial.clone(),
        channels: g.channels.clone(),
        observation: g.observation.clone(),
        norm: norm2.sqrt(),
    })
}

impl HumControl {
    /// ‖control‖_{L²} = √(u₀ᴴ G⁻¹ u₀).
    pub fn norm(&self) -> f64 {
        self.norm.to_f64()
    }

    pub fn norm_mp(&self) -> &Float {
        &self.norm
    }

    fn phases(&self, t: &Float) -> Vec<Complex> {
        let p = t.prec();
        self.eigenvalues
            .iter()
            .zip(&self.coefficients)
            .map(|(l, c)| {
                let arg = -Float::with_val(p, l * t);
                &Complex::cis(&arg) * &c.with_prec(p)
            })
            .collect()
    }

    /// Projection of the control onto each window mode: g_n(t) = Σ_k S_nk φ_k e^{−iλ_k t}.
    pub fn modal_forcing(&self, t: &Float) -> Vec<Complex> {
        let p = t.prec();
        let ph = self.phases(t);
        let m = self.window.len();
        (0..m)
            .map(|n| {
                let mut acc = Complex::zero(p);
                for k in 0..m {
                    acc += &ph[k].scale(&Float::with_val(p, &self.spatial[n * m + k]));
                }
                acc
            })
            .collect()
    }

    /// Boundary signals, one per channel.
    pub fn boundary_signals(&self, t: &Float) -> Vec<Complex> {
        let p = t.prec();
        let ph = self.phases(t);
        self.channels
            .iter()
            .map(|w| {
                let mut acc = Complex::zero(p);
                for (z, wk) in ph.iter().zip(w) {
                    acc += &z.scale(&Float::with_val(p, wk));
                }
                acc
            })
            .collect()
    }

    /// Interior control value g(t, x) (zero outside Ω).
    pub fn interior_value(&self, t: &Float, x: f64) -> Complex {
        let p = t.prec();
        if !self.observation.contains(x) {
            return Complex::zero(p);
        }
        let ph = self.phases(t);
        let xf = Float::with_val(p, x);
        let mut acc = Complex::zero(p);
        for (z, &n) in ph.iter().zip(self.window.modes()) {
            acc += &z.scale(&self.observation.basis().value_mp(n, &xf));
        }
        acc
    }

    /// Window state at T after forward simulation from u₀.
    pub fn simulate(&self, u0: &[Complex], ctx: &PrecisionContext) -> Result<Vec<Complex>> {
        simulate_modal(&self.eigenvalues, u0, self.horizon, |t| self.modal_forcing(t), ctx)
    }
}

/// Solves u_n′ = −iλ_n u_n − i f_n(t) on [0, T] from u₀ by Duhamel's formula,
/// integrating e^{iλ_n t} f_n(t) with composite Gauss–Legendre panels.
pub fn simulate_modal(
    eigenvalues: &[Float],
    u0: &[Complex],
    horizon: f64,
    forcing: impl Fn(&Float) -> Vec<Complex>,
    ctx: &PrecisionContext,
) -> Result<Vec<Complex>> {
    simulate_modal_resolved(eigenvalues, u0, horizon, 0.0, forcing, ctx)
}

/// As [`simulate_modal`], with panels also fine enough for a forcing that
/// oscillates at angular frequencies up to `bandwidth`.
pub fn simulate_modal_resolved(
    eigenvalues: &[Float],
    u0: &[Complex],
    horizon: f64,
    bandwidth: f64,
    forcing: impl Fn(&Float) -> Vec<Complex>,
    ctx: &PrecisionContext,
) -> Result<Vec<Complex>> {
    let p = ctx.bits();
    let spread = eigenvalues.iter().map(|l| l.to_f64().abs()).fold(0.0, f64::max);
    let panels = 1 + (2.0 * (spread + bandwidth) * horizon / 16.0).ceil() as usize;
    let rule = GaussLegendre::new(48, ctx)?;
    let mut acc = vec![Complex::zero(p); eigenvalues.len()];
    let width = ctx.float(horizon) / panels as u32;
    for i in 0..panels {
        let a = Float::with_val(p, &width * i as u32);
        let b = Float::with_val(p, &width * (i + 1) as u32);
        let (xs, ws) = rule.mapped(&a, &b);
        for (t, w) in xs.iter().zip(&ws) {
            let f = forcing(t);
            for (n, l) in eigenvalues.iter().enumerate() {
                let arg = Float::with_val(p, l * t);
                let term = &Complex::cis(&arg) * &f[n];
                acc[n] += &term.scale(w);
            }
        }
    }
    let t = ctx.float(horizon);
    Ok(eigenvalues
        .iter()
        .zip(u0)
        .zip(&acc)
        .map(|((l, u), a)| {
            let inner = &u.with_prec(p) - &a.mul_i();
            let arg = -Float::with_val(p, l * &t);
            &Complex::cis(&arg) * &inner
        })
        .collect())
}

/// ‖v‖₂ of a complex vector.
pub fn vector_norm(v: &[Complex]) -> Float {
    let p = v.first().map(|z| z.prec()).unwrap_or(64);
    let mut s = Float::new(p);
    for z in v {
        s += z.norm_sqr();
    }
    s.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::dirichlet_laplacian_basis;
    use std::f64::consts::PI;

    fn basis(n: usize) -> Arc<SpectralBasis> {
        Arc::new(dirichlet_laplacian_basis(PI, n, 257).unwrap())
    }

    fn rel(a: &Complex, b: &Complex) -> f64 {
        (a - b).abs().to_f64() / b.abs().to_f64().max(1e-300)
    }

    #[test]
    fn full_observation_gives_scaled_identity() {
        let ctx = PrecisionContext::default();
        let obs = ObservationDescriptor::interior(basis(6), vec![(0.0, PI)]).unwrap();
        let g = build_gramian(&obs, 0.7, &ModeWindow::range(1, 6).unwrap(), &ctx).unwrap();
        for j in 0..6 {
            for k in 0..6 {
                let v = g.matrix.get(j, k).abs().to_f64();
                if j == k {
                    assert!((v - 0.7).abs() < 1e-60);
                } else {
                    assert!(v < 1e-60);
                }
            }
        }
        assert!((cost_estimate(&g, &ctx).unwrap() - 1.0 / 0.7f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn half_interval_single_mode() {
        let ctx = PrecisionContext::default();
        let obs = ObservationDescriptor::interior(basis(1), vec![(0.0, PI / 2.0)]).unwrap();
        let g = build_gramian(&obs, 0.4, &ModeWindow::range(1, 1).unwrap(), &ctx).unwrap();
        assert!((g.matrix.get(0, 0).re.to_f64() - 0.2).abs() < 1e-15);
        assert!((cost_estimate(&g, &ctx).unwrap() - (2.0f64 / 0.4).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn boundary_two_mode_closed_form() {
        let ctx = PrecisionContext::default();
        let obs = ObservationDescriptor::boundary(basis(2), Endpoint::Right, 1).unwrap();
        let g = build_gramian(&obs, 1.0, &ModeWindow::range(1, 2).unwrap(), &ctx).unwrap();
        let p = 256;
        let c = 2.0 / PI;
        assert!((g.matrix.get(0, 0).re.to_f64() - c).abs() < 1e-15);
        assert!((g.matrix.get(1, 1).re.to_f64() - 4.0 * c).abs() < 1e-15);
        // (2/π)·1·2·(−1)³·(e^{i(1−4)} − 1)/(−3i)
        let e = Complex::cis(&Float::with_val(p, -3));
        let num = &e - &Complex::one(p);
        let den = Complex::from_f64(p, 0.0, -3.0);
        let expect = (&num / &den).scale_f64(-2.0 * c);
        assert!(rel(g.matrix.get(0, 1), &expect) < 1e-14);
    }

    #[test]
    fn theta_taylor_branch_is_continuous() {
        let ctx = PrecisionContext::default();
        let t = ctx.float(0.9);
        let tiny = Float::with_val(256, Float::u_exp(1, -130));
        let above = Float::with_val(256, Float::u_exp(1, -127));
        let a = theta(&tiny, &t, &ctx);
        let b = theta(&above, &t, &ctx);
        assert!((&a - &b).abs().to_f64() < 1e-37);
        assert_eq!(theta(&Float::new(256), &t, &ctx).re, t);
    }

    #[test]
    fn empty_omega_and_oversized_window_rejected() {
        let b = basis(4);
        assert!(ObservationDescriptor::interior(b.clone(), vec![])
            .unwrap_err()
            .is_validation());
        assert!(ObservationDescriptor::interior(b.clone(), vec![(0.1, 0.5), (0.4, 0.9)])
            .unwrap_err()
            .is_validation());
        let obs = ObservationDescriptor::interior(b, vec![(0.1, 0.5)]).unwrap();
        let ctx = PrecisionContext::default();
        assert!(build_gramian(&obs, 1.0, &ModeWindow::range(1, 5).unwrap(), &ctx)
            .unwrap_err()
            .is_validation());
    }

    #[test]
    fn zero_data_zero_control() {
        let ctx = PrecisionContext::default();
        let obs = ObservationDescriptor::interior(basis(3), vec![(0.3, PI)]).unwrap();
        let g = build_gramian(&obs, 0.5, &ModeWindow::range(1, 3).unwrap(), &ctx).unwrap();
        let h = hum_control(&g, &vec![ctx.zero(); 3], &ctx).unwrap();
        assert!(h.coefficients.iter().all(|c| c.is_zero()));
        assert_eq!(h.norm(), 0.0);
    }

    #[test]
    fn scalar_hum_full_observation() {
        // G = T, φ = −i u₀/T, control g(t,x) = φ e^{−iλt} e_1(x)
        let ctx = PrecisionContext::default();
        let obs = ObservationDescriptor::interior(basis(1), vec![(0.0, PI)]).unwrap();
        let g = build_gramian(&obs, 0.8, &ModeWindow::range(1, 1).unwrap(), &ctx).unwrap();
        let u0 = vec![Complex::from_f64(256, 1.0, -0.5)];
        let h = hum_control(&g, &u0, &ctx).unwrap();
        let expect = u0[0].mul_i().scale(&(-ctx.float(1.0) / ctx.float(0.8)));
        assert!(rel(&h.coefficients[0], &expect) < 1e-70);
        let end = h.simulate(&u0, &ctx).unwrap();
        assert!(end[0].abs().to_f64() < 1e-60);
    }

    #[test]
    fn hum_steers_ten_modes() {
        let ctx = PrecisionContext::default();
        let obs = ObservationDescriptor::interior(basis(10), vec![(0.3, PI)]).unwrap();
        let g = build_gramian(&obs, 0.5, &ModeWindow::range(1, 10).unwrap(), &ctx).unwrap();
        let u0: Vec<Complex> = (0..10)
            .map(|j| Complex::from_f64(256, 1.0 / (1.0 + j as f64), (j as f64).sin()))
            .collect();
        let h = hum_control(&g, &u0, &ctx).unwrap();
        let end = h.simulate(&u0, &ctx).unwrap();
        let ratio = vector_norm(&end).to_f64() / vector_norm(&u0).to_f64();
        assert!(ratio < 1e-20, "residual {ratio:e}");
        let cost = cost_estimate(&g, &ctx).unwrap();
        assert!(h.norm() <= cost * vector_norm(&u0).to_f64() * (1.0 + 1e-12));
        // norm equals √(φᴴ G φ)
        let direct = g.matrix.quadratic_form(&h.coefficients).sqrt().to_f64();
        assert!((direct - h.norm()).abs() < 1e-12 * h.norm());
    }

    #[test]
    fn unobserved_length_counts_walls_twice() {
        let obs = ObservationDescriptor::interior(basis(1), vec![(0.3, PI)]).unwrap();
        assert!((obs.unobserved_length().unwrap() - 0.6).abs() < 1e-15);
        let obs = ObservationDescriptor::interior(basis(1), vec![(0.0, 1.0), (2.5, PI)]).unwrap();
        assert!((obs.unobserved_length().unwrap() - 1.5).abs() < 1e-15);
    }
}
