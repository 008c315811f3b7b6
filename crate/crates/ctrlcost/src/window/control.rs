use rug::Float;

use super::family::{window_cost_bound, BiorthogonalFamily};
use crate::error::{Error, Result};
use crate::observability::{simulate_modal_resolved, vector_norm};
use crate::precision::{Complex, PrecisionContext};
use crate::spectral::{Endpoint, SpectralBasis};

/// Boundary control h = Σ_n m_n ψ_n on (0, T) built from a biorthogonal
/// family, with m_n = −i u_n(0)/w_n and w_n = ∂^k e_n(X).
///
/// For a family in normalised variables λ̃ = μ/σ + s₀ with horizon σT,
/// ψ_n(t) = σ e^{is₀σt} conj(g_n(σt − σT/2)) e^{−iλ̃_n σT/2}, which gives
/// ∫₀^T e^{iμ_k t} ψ_n(t) dt = δ_nk.
#[derive(Clone, Debug)]
pub struct FamilyControl {
    pub horizon: f64,
    pub endpoint: Endpoint,
    pub order: u8,
    /// m_n.
    pub moments: Vec<Complex>,
    /// ‖h‖_{L²(0,T)}.
    pub norm: f64,
    /// √σ·C·‖m‖ with C the window cost bound of the family.
    pub bound: f64,
    family: BiorthogonalFamily,
    eigenvalues: Vec<Float>,
    weights: Vec<Float>,
    /// m_n e^{−iλ̃_n σT/2}, the coefficients of conj(g_n).
    shifted: Vec<Complex>,
}

pub fn boundary_control_from_family(
    fam: &BiorthogonalFamily,
    basis: &SpectralBasis,
    u0: &[Complex],
    endpoint: Endpoint,
    order: u8,
) -> Result<FamilyControl> {
    let modes = fam.window.modes();
    if u0.len() != modes.len() {
        return Err(Error::validation(
            "u0",
            format!("{} coefficients for a window of {}", u0.len(), modes.len()),
        ));
    }
    if order > 1 {
        return Err(Error::validation("order", format!("trace order {order} is not 0 or 1")));
    }
    for &n in modes {
        basis.check_mode(n)?;
    }
    let seq = fam.sequence();
    let (sigma, shift) = (seq.scale(), seq.shift());
    for (i, &n) in modes.iter().enumerate() {
        let mu = sigma * (fam.lambda(i) - shift);
        let actual = basis.eigenvalue(n);
        if (mu - actual).abs() > 1e-9 * actual.abs().max(1.0) {
            return Err(Error::validation(
                "family",
                format!("family eigenvalue {mu} for mode {n} does not match the basis value {actual}"),
            ));
        }
    }
    let p = fam.working_bits;
    let weights = modes
        .iter()
        .map(|&n| basis.trace_weight_mp(n, endpoint, order, p))
        .collect();
    let eigenvalues = modes.iter().map(|&n| basis.eigenvalue_mp(n, p)).collect();
    control_with_weights(fam, eigenvalues, weights, u0, endpoint, order)
}

/// As [`boundary_control_from_family`] for given eigenvalues μ_n and forcing
/// weights w_n, u_n′ = −iμ_n u_n − i w_n h.
pub(crate) fn control_with_weights(
    fam: &BiorthogonalFamily,
    eigenvalues: Vec<Float>,
    weights: Vec<Float>,
    u0: &[Complex],
    endpoint: Endpoint,
    order: u8,
) -> Result<FamilyControl> {
    let modes = fam.window.modes();
    let p = fam.working_bits;
    let sigma = fam.sequence().scale();
    let w_max = weights.iter().map(|w| w.to_f64().abs()).fold(0.0, f64::max);
    for (w, &n) in weights.iter().zip(modes) {
        if w.is_zero() || w.to_f64().abs() <= 1e-9 * w_max {
            return Err(Error::NonControllableMode { mode: n });
        }
    }
    let moments: Vec<Complex> = u0
        .iter()
        .zip(&weights)
        .map(|(u, w)| u.with_prec(p).mul_i().scale(&-w.clone().recip()))
        .collect();
    let half = Float::with_val(p, fam.horizon) / 2u32;
    let shifted: Vec<Complex> = moments
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let arg = -Float::with_val(p, &half * fam.lambda(i));
            m * &Complex::cis(&arg)
        })
        .collect();
    let horizon = fam.horizon / sigma;
    let bound = sigma.sqrt() * window_cost_bound(fam) * vector_norm(&moments).to_f64();
    let mut ctrl = FamilyControl {
        horizon,
        endpoint,
        order,
        moments,
        norm: 0.0,
        bound,
        family: fam.clone(),
        eigenvalues,
        weights,
        shifted,
    };
    ctrl.norm = ctrl.sampled_norm();
    Ok(ctrl)
}

impl FamilyControl {
    /// h(t) = Σ_l a_l e^{−iν_l t} as (ν_l, a_l), read off the Paley–Wiener
    /// sums of the family.
    pub fn exponential_sum(&self) -> Vec<(f64, Complex)> {
        let p = self.family.working_bits;
        let seq = self.family.sequence();
        let sigma = Float::with_val(p, seq.scale());
        let half = Float::with_val(p, self.family.horizon) / 2u32;
        let mut out = Vec::new();
        for (i, a) in self.shifted.iter().enumerate() {
            for (x, c) in self.family.spectrum_terms(i) {
                // σ·a·conj(c)·e^{i x T̃/2}, at ν = σ(x − s₀)
                let phase = Complex::cis(&Float::with_val(p, &x * &half));
                let amp = (&(a * &c.conj()) * &phase).scale(&sigma);
                let nu = Float::with_val(p, &x - seq.shift()) * &sigma;
                out.push((nu.to_f64(), amp));
            }
        }
        out
    }

    fn sigma(&self) -> f64 {
        self.family.sequence().scale()
    }

    /// Physical times of the stored samples.
    pub fn times(&self) -> Vec<f64> {
        let s = self.sigma();
        self.family
            .times()
            .iter()
            .map(|t| (t + self.family.horizon / 2.0) / s)
            .collect()
    }

    /// h at the stored sample times.
    pub fn samples(&self) -> Vec<Complex> {
        let p = self.family.working_bits;
        let times = self.times();
        (0..times.len())
            .map(|j| {
                let mut acc = Complex::zero(p);
                for (i, a) in self.shifted.iter().enumerate() {
                    acc.add_conj_mul(&self.family.samples(i)[j], a);
                }
                self.physical_factor(&Float::with_val(p, times[j]), acc)
            })
            .collect()
    }

    /// σ e^{is₀σt}·inner.
    fn physical_factor(&self, t: &Float, inner: Complex) -> Complex {
        let p = t.prec();
        let seq = self.family.sequence();
        let sigma = Float::with_val(p, seq.scale());
        let mut out = inner.scale(&sigma);
        if seq.shift() != 0.0 {
            let arg = Float::with_val(p, t * &sigma) * seq.shift();
            out = &out * &Complex::cis(&arg);
        }
        out
    }

    /// h(t) for any t in [0, T], from the Paley–Wiener sums of the family.
    pub fn signal(&self, t: &Float) -> Complex {
        let p = t.prec().max(self.family.working_bits);
        let sigma = Float::with_val(p, self.sigma());
        let s = Float::with_val(p, t * &sigma) - Float::with_val(p, self.family.horizon) / 2u32;
        let mut acc = Complex::zero(p);
        for (i, a) in self.shifted.iter().enumerate() {
            acc.add_conj_mul(&self.family.eval(i, &s), a);
        }
        self.physical_factor(&Float::with_val(p, t), acc)
    }

    fn sampled_norm(&self) -> f64 {
        let h = self.samples();
        let last = h.len() - 1;
        let dt = self.family.step / self.sigma();
        let mut acc = 0.0;
        for (j, v) in h.iter().enumerate() {
            let w = if j == 0 || j == last { 0.5 } else { 1.0 };
            acc += w * v.norm_sqr().to_f64();
        }
        (acc * dt).sqrt()
    }

    /// ∫₀^T e^{iμ_n t} h(t) dt by the trapezoid rule on the stored samples.
    pub fn moments_by_trapezoid(&self) -> Vec<Complex> {
        let p = self.family.working_bits;
        let h = self.samples();
        let times = self.times();
        let last = h.len() - 1;
        let dt = Float::with_val(p, self.family.step / self.sigma());
        self.eigenvalues
            .iter()
            .map(|mu| {
                let mut acc = Complex::zero(p);
                for (j, v) in h.iter().enumerate() {
                    let e = Complex::cis(&Float::with_val(p, mu * times[j]));
                    let mut term = &e * v;
                    if j == 0 || j == last {
                        term = term.scale_f64(0.5);
                    }
                    acc += &term;
                }
                acc.scale(&dt)
            })
            .collect()
    }

    /// Window state at T from u₀ with forcing w_n h(t), integrated by
    /// Gauss–Legendre panels on h evaluated pointwise.
    pub fn simulate(&self, u0: &[Complex], ctx: &PrecisionContext) -> Result<Vec<Complex>> {
        let c = ctx.at_least(self.family.working_bits);
        let weights = &self.weights;
        let sigma = self.sigma();
        let bandwidth = (0..self.family.len())
            .map(|i| {
                let (lo, hi) = self.family.spectral_support(i);
                lo.abs().max(hi.abs())
            })
            .fold(0.0, f64::max)
            * sigma
            + sigma * self.family.sequence().shift().abs();
        simulate_modal_resolved(
            &self.eigenvalues,
            u0,
            self.horizon,
            bandwidth,
            |t| {
                let h = self.signal(t);
                weights.iter().map(|w| h.scale(w)).collect()
            },
            &c,
        )
    }

    /// Window state at T using the trapezoid moments.
    pub fn final_state(&self, u0: &[Complex]) -> Vec<Complex> {
        let p = self.family.working_bits;
        let t = Float::with_val(p, self.horizon);
        self.moments_by_trapezoid()
            .iter()
            .zip(u0)
            .zip(&self.eigenvalues)
            .zip(&self.weights)
            .map(|(((m, u), mu), w)| {
                let inner = &u.with_prec(p) - &m.scale(w).mul_i();
                &Complex::cis(&-Float::with_val(p, mu * &t)) * &inner
            })
            .collect()
    }
}
