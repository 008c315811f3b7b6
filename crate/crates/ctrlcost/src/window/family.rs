use rug::{Assign, Float};
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

use super::multiplier::{build_multiplier, Multiplier};
use super::product::ProductF;
use super::sequence::SpectralSequence;
use crate::error::{Error, Result};
use crate::observability::ModeWindow;
use crate::precision::{Complex, HermitianMatrix, PrecisionContext};

/// Largest accepted |∫ g_n e^{−iλ_k t} dt − δ_nk|.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// The technical rate 4(36/37)².
pub const ALPHA_STAR: f64 = 4.0 * (36.0 / 37.0) * (36.0 / 37.0);

/// |G_n| is cut where its envelope drops below this (natural log).
const LN_CUTOFF: f64 = -56.0;
const CUTOFF: f64 = 1e-20;
const QUIET_RUN: usize = 16;
const MAX_NODES: i64 = 400_000;

/// Decay rate d = √2π + 2ε of the multiplier.
pub fn multiplier_rate(eps: f64) -> f64 {
    2f64.sqrt() * PI + 2.0 * eps
}

/// Samples G_n(λ_n + mΔx), m_lo ≤ m.
#[derive(Clone, Debug)]
struct Spectrum {
    lambda: f64,
    m_lo: i64,
    values: Vec<Complex>,
}

/// g_n for n in a window, each supported in [−T/2, T/2] with Fourier
/// transform G_n = F_n·M(· − λ_n), so that ∫ g_n e^{−iλ_k t} dt = δ_nk.
///
/// Fourier convention: G(x) = ∫ g(t) e^{−ixt} dt, so ‖g‖ = ‖G‖/√(2π).
#[derive(Clone, Debug)]
pub struct BiorthogonalFamily {
    pub horizon: f64,
    pub epsilon: f64,
    pub d: f64,
    pub window: ModeWindow,
    pub multiplier: Multiplier,
    pub working_bits: u32,
    /// Spacing of the x-samples, π/T.
    pub dx: f64,
    /// Spacing of the t-samples.
    pub step: f64,
    /// |∫ g_n e^{−iλ_k t} dt − δ_nk|, rows n, columns k over the window.
    pub residuals: Vec<Vec<f64>>,
    pub max_residual: f64,
    /// sup_n Σ_k |(g_n, g_k)|.
    pub gram_bound: f64,
    /// Largest relative gap between ‖g_n‖² in t and ‖G_n‖²/2π in x.
    pub plancherel_defect: f64,
    sequence: SpectralSequence,
    spectra: Vec<Spectrum>,
    samples: Vec<Vec<Complex>>,
    gram: Vec<Complex>,
}

/// Parameters and diagnostics of a family, for export.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyManifest {
    pub horizon: f64,
    pub window: Vec<usize>,
    pub epsilon: f64,
    pub d: f64,
    pub working_bits: u32,
    pub samples: usize,
    pub max_residual: f64,
    pub residuals: Vec<Vec<f64>>,
    pub gram_bound: f64,
    pub plancherel_defect: f64,
    pub multiplier_decay_constant: f64,
}

struct Scratch {
    a: Float,
}

impl Scratch {
    fn new(p: u32) -> Self {
        Scratch { a: Float::new(p) }
    }

    /// acc += x·y
    fn add_mul(&mut self, acc: &mut Complex, x: &Complex, y: &Complex) {
        self.a.assign(&x.re * &y.re);
        acc.re += &self.a;
        self.a.assign(&x.im * &y.im);
        acc.re -= &self.a;
        self.a.assign(&x.re * &y.im);
        acc.im += &self.a;
        self.a.assign(&x.im * &y.re);
        acc.im += &self.a;
    }

    /// z ← z·w
    fn mul_assign(&mut self, z: &mut Complex, w: &Complex) {
        self.a.assign(&z.im * &w.im);
        let mut re = Float::with_val(self.a.prec(), &z.re * &w.re);
        re -= &self.a;
        self.a.assign(&z.re * &w.im);
        z.im *= &w.re;
        z.im += &self.a;
        z.re = re;
    }
}

/// Outward scan of ln|G_n(λ_n + mΔx)| bounds until QUIET_RUN consecutive
/// samples fall below the cutoff; returns (m_lo, m_hi, max ln|F_n|).
fn scan(f: &ProductF, m: &Multiplier, dx: f64) -> Result<(i64, i64, f64)> {
    let ln = f.lambda_n();
    let extent = 2.0 * f.explicit_extent();
    let mut max_f: f64 = 0.0;
    let mut ends = [0i64; 2];
    for (side, dir) in [-1i64, 1].into_iter().enumerate() {
        let mut quiet = 0;
        let mut k = 0i64;
        loop {
            k += dir;
            if k.abs() > MAX_NODES {
                return Err(Error::Construction(format!(
                    "spectrum of g_{} does not decay",
                    f.center()
                )));
            }
            let y = k as f64 * dx;
            let x = ln + y;
            let lf = f.ln_envelope(x);
            if lf.is_finite() {
                max_f = max_f.max(lf);
            }
            let env = lf + m.bound(y).min(0.0);
            let past = dir < 0 || x > extent;
            quiet = if env < LN_CUTOFF && past { quiet + 1 } else { 0 };
            if quiet == QUIET_RUN {
                break;
            }
        }
        ends[side] = k;
    }
    Ok((ends[0], ends[1], max_f))
}

pub fn build_family(
    seq: &SpectralSequence,
    horizon: f64,
    window: &ModeWindow,
    eps: f64,
    ctx: &PrecisionContext,
) -> Result<BiorthogonalFamily> {
    if !(horizon > 0.0 && horizon <= PI) {
        return Err(Error::validation("horizon", format!("T = {horizon} outside (0, π]")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::validation("epsilon", format!("{eps} is not positive")));
    }
    if window.max() > seq.len() {
        return Err(Error::validation(
            "window",
            format!("mode {} beyond the {} stored values", window.max(), seq.len()),
        ));
    }
    let tau = horizon / 2.0;
    let d = multiplier_rate(eps);
    let multiplier = build_multiplier(tau, d, ctx)?;
    let dx = PI / horizon;

    let products: Vec<ProductF> = window
        .modes()
        .iter()
        .map(|&n| ProductF::new(seq, n))
        .collect::<Result<_>>()?;
    let mut ranges = Vec::with_capacity(products.len());
    let mut max_f: f64 = 0.0;
    for f in &products {
        let (lo, hi, mf) = scan(f, &multiplier, dx)?;
        max_f = max_f.max(mf);
        ranges.push((lo, hi));
    }
    // M carries absolute error 2^{-p}, multiplied by |F_n| up to e^{max_f}
    let need = (max_f / LN_2 + 96.0).ceil() as u32;
    let p = ctx.bits().max(need.div_ceil(32) * 32);
    let m_abs = ranges.iter().map(|&(lo, hi)| lo.abs().max(hi)).max().unwrap_or(0) as usize;
    let mvals = multiplier.eval_grid(dx, m_abs, p);
    let dxf = Float::with_val(p, dx);

    let mut spectra = Vec::with_capacity(products.len());
    for (f, &(lo, hi)) in products.iter().zip(&ranges) {
        let lambda = f.lambda_n();
        let lf = Float::with_val(p, lambda);
        let values: Vec<Complex> = (lo..=hi)
            .map(|m| {
                let x = Float::with_val(p, &dxf * m as i32) + &lf;
                let fv = f.eval(&Complex::from_real(x));
                fv.scale(&mvals[m.unsigned_abs() as usize])
            })
            .collect();
        let edge = values[..QUIET_RUN]
            .iter()
            .chain(&values[values.len() - QUIET_RUN..])
            .map(|v| v.abs().to_f64())
            .fold(0.0, f64::max);
        if edge > CUTOFF {
            return Err(Error::Construction(format!(
                "G_{} is still {edge:e} at the edge of its sampled spectrum",
                f.center()
            )));
        }
        spectra.push(Spectrum {
            lambda,
            m_lo: lo,
            values,
        });
    }

    // t-grid: aliases of G_n under the trapezoid rule sit 2π/h apart
    let x_lo = spectra
        .iter()
        .map(|s| s.lambda + s.m_lo as f64 * dx)
        .fold(f64::INFINITY, f64::min);
    let x_hi = spectra
        .iter()
        .map(|s| s.lambda + (s.m_lo + s.values.len() as i64 - 1) as f64 * dx)
        .fold(f64::NEG_INFINITY, f64::max);
    let band = 1.25 * (x_hi - x_lo) + 20.0;
    let nt = (horizon * band / (2.0 * PI)).ceil() as usize;
    let step = horizon / nt as f64;
    let times = time_grid(horizon, nt, p);

    let scale = Float::with_val(p, &dxf / (2u32 * crate::precision::pi(p)));
    let samples: Vec<Vec<Complex>> = spectra.iter().map(|s| synthesize(s, &dxf, &times, &scale)).collect();

    let hf = Float::with_val(p, horizon) / nt as u32;
    let lambdas: Vec<f64> = spectra.iter().map(|s| s.lambda).collect();
    let residuals = biorthogonality_residuals(&samples, &lambdas, &times, &hf);
    let max_residual = residuals.iter().flatten().copied().fold(0.0, f64::max);
    let gram = gram_entries(&samples, &hf);
    let w = samples.len();
    let gram_bound = (0..w)
        .map(|i| (0..w).map(|k| gram[i * w + k].abs().to_f64()).sum::<f64>())
        .fold(0.0, f64::max);
    let plancherel_defect = spectra
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut g2 = Float::new(p);
            for v in &s.values {
                g2 += v.norm_sqr();
            }
            let g2 = g2 * &scale;
            let t2 = gram[i * w + i].re.clone();
            (Float::with_val(p, &t2 - &g2) / &g2).abs().to_f64()
        })
        .fold(0.0, f64::max);

    let fam = BiorthogonalFamily {
        horizon,
        epsilon: eps,
        d,
        window: window.clone(),
        multiplier,
        working_bits: p,
        dx,
        step,
        residuals,
        max_residual,
        gram_bound,
        plancherel_defect,
        sequence: seq.clone(),
        spectra,
        samples,
        gram,
    };
    if fam.max_residual > RESIDUAL_TOLERANCE {
        return Err(Error::Construction(format!(
            "biorthogonality residual {:e} exceeds {RESIDUAL_TOLERANCE:e} (T = {horizon}, {} bits)",
            fam.max_residual, p
        )));
    }
    Ok(fam)
}

/// t_j = −T/2 + jT/N, j = 0..=N.
fn time_grid(horizon: f64, nt: usize, p: u32) -> Vec<Float> {
    let half = Float::with_val(p, horizon) / 2u32;
    let h = Float::with_val(p, horizon) / nt as u32;
    (0..=nt).map(|j| Float::with_val(p, &h * j as u32) - &half).collect()
}

/// g(t_j) = (Δx/2π) Σ_m G(x_m) e^{i t_j x_m}.
fn synthesize(s: &Spectrum, dx: &Float, times: &[Float], scale: &Float) -> Vec<Complex> {
    let p = dx.prec();
    let x0 = Float::with_val(p, dx * s.m_lo as i32) + s.lambda;
    let mut sc = Scratch::new(p);
    times
        .iter()
        .map(|t| {
            let mut rot = Complex::cis(&Float::with_val(p, t * &x0));
            let inc = Complex::cis(&Float::with_val(p, t * dx));
            let mut acc = Complex::zero(p);
            for g in &s.values {
                sc.add_mul(&mut acc, g, &rot);
                sc.mul_assign(&mut rot, &inc);
            }
            acc.scale(scale)
        })
        .collect()
}

/// Trapezoid weights on the closed t-grid.
fn weight(j: usize, last: usize, h: &Float) -> Float {
    if j == 0 || j == last {
        Float::with_val(h.prec(), h / 2u32)
    } else {
        h.clone()
    }
}

fn biorthogonality_residuals(samples: &[Vec<Complex>], lambdas: &[f64], times: &[Float], h: &Float) -> Vec<Vec<f64>> {
    let p = h.prec();
    let last = times.len() - 1;
    let mut sc = Scratch::new(p);
    // e^{−iλ_k t_j} by rotation from t_0
    let phases: Vec<Vec<Complex>> = lambdas
        .iter()
        .map(|&l| {
            let lf = Float::with_val(p, -l);
            let mut rot = Complex::cis(&Float::with_val(p, &lf * &times[0]));
            let inc = Complex::cis(&Float::with_val(p, &lf * h));
            let mut out = Vec::with_capacity(times.len());
            for j in 0..times.len() {
                out.push(rot.scale(&weight(j, last, h)));
                sc.mul_assign(&mut rot, &inc);
            }
            out
        })
        .collect();
    samples
        .iter()
        .enumerate()
        .map(|(i, g)| {
            phases
                .iter()
                .enumerate()
                .map(|(k, ph)| {
                    let mut acc = Complex::zero(p);
                    for (a, b) in g.iter().zip(ph) {
                        sc.add_mul(&mut acc, a, b);
                    }
                    if i == k {
                        acc.re -= 1u32;
                    }
                    acc.abs().to_f64()
                })
                .collect()
        })
        .collect()
}

/// (g_i, g_k) = ∫ g_i conj(g_k) dt, row-major.
fn gram_entries(samples: &[Vec<Complex>], h: &Float) -> Vec<Complex> {
    let p = h.prec();
    let w = samples.len();
    let last = samples[0].len() - 1;
    let mut out = vec![Complex::zero(p); w * w];
    for i in 0..w {
        for k in i..w {
            let mut acc = Complex::zero(p);
            for j in 0..=last {
                let mut term = Complex::zero(p);
                term.add_conj_mul(&samples[k][j], &samples[i][j]);
                acc += &term.scale(&weight(j, last, h));
            }
            out[k * w + i] = acc.conj();
            out[i * w + k] = acc;
        }
    }
    out
}

impl BiorthogonalFamily {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sequence(&self) -> &SpectralSequence {
        &self.sequence
    }

    /// λ for the i-th window member.
    pub fn lambda(&self, i: usize) -> f64 {
        self.spectra[i].lambda
    }

    pub fn times(&self) -> Vec<f64> {
        let n = self.samples[0].len() - 1;
        (0..=n).map(|j| -self.horizon / 2.0 + self.step * j as f64).collect()
    }

    /// g_n(t_j) for the i-th window member.
    pub fn samples(&self, i: usize) -> &[Complex] {
        &self.samples[i]
    }

    /// (g_i, g_k).
    pub fn gram(&self, i: usize, k: usize) -> &Complex {
        &self.gram[i * self.len() + k]
    }

    pub fn gram_matrix(&self) -> Result<HermitianMatrix> {
        HermitianMatrix::new(self.len(), self.gram.clone())
    }

    /// ‖g_n‖_{L²}.
    pub fn norm(&self, i: usize) -> f64 {
        self.gram(i, i).re.to_f64().sqrt()
    }

    /// Sampled spectrum extent [x_lo, x_hi] of G_n.
    pub fn spectral_support(&self, i: usize) -> (f64, f64) {
        let s = &self.spectra[i];
        let lo = s.lambda + s.m_lo as f64 * self.dx;
        (lo, lo + (s.values.len() - 1) as f64 * self.dx)
    }

    /// g_n(t) at any t by the Paley–Wiener sum over the stored spectrum;
    /// the sum has period 2T and vanishes on T/2 < |t| < 3T/2.
    pub fn eval(&self, i: usize, t: &Float) -> Complex {
        let p = t.prec().max(self.working_bits);
        let tp = Float::with_val(p, t);
        let dxf = Float::with_val(p, self.dx);
        let scale = Float::with_val(p, &dxf / (2u32 * crate::precision::pi(p)));
        synthesize(&self.spectra[i], &dxf, std::slice::from_ref(&tp), &scale)
            .pop()
            .expect("one time")
    }

    /// (x_m, Δx·G_i(x_m)/2π), so that g_i(t) = Σ_m c_m e^{ix_m t} exactly.
    pub fn spectrum_terms(&self, i: usize) -> Vec<(Float, Complex)> {
        let p = self.working_bits;
        let s = &self.spectra[i];
        let dxf = Float::with_val(p, self.dx);
        let scale = Float::with_val(p, &dxf / (2u32 * crate::precision::pi(p)));
        s.values
            .iter()
            .enumerate()
            .map(|(k, g)| {
                let x = Float::with_val(p, &dxf * (s.m_lo + k as i64) as i32) + s.lambda;
                (x, g.scale(&scale))
            })
            .collect()
    }

    pub fn manifest(&self) -> FamilyManifest {
        FamilyManifest {
            horizon: self.horizon,
            window: self.window.modes().to_vec(),
            epsilon: self.epsilon,
            d: self.d,
            working_bits: self.working_bits,
            samples: self.samples[0].len(),
            max_residual: self.max_residual,
            residuals: self.residuals.clone(),
            gram_bound: self.gram_bound,
            plancherel_defect: self.plancherel_defect,
            multiplier_decay_constant: self.multiplier.decay_constant,
        }
    }
}

/// C = √(sup_n Σ_k |(g_n, g_k)|), so ‖c‖ ≤ C‖Σ c_n e^{iλ_n t}‖_{L²(−T/2,T/2)}.
pub fn window_cost_bound(fam: &BiorthogonalFamily) -> f64 {
    fam.gram_bound.sqrt()
}

/// Least-squares fit ln C(T) = a + b/T; b is the exponent of T·ln C.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub intercept: f64,
    pub exponent: f64,
}

pub fn fit_exponent(samples: &[(f64, f64)]) -> Result<ExponentFit> {
    if samples.len() < 2 {
        return Err(Error::validation("samples", "need two horizons to fit an exponent"));
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|(t, _)| 1.0 / t).collect();
    let ys: Vec<f64> = samples.iter().map(|(_, c)| c.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::validation("samples", "horizons coincide"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    Ok(ExponentFit {
        intercept: my - exponent * mx,
        exponent,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WindowCostSample {
    pub horizon: f64,
    pub cost: f64,
    pub t_ln_cost: f64,
    pub max_residual: f64,
    pub working_bits: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WindowCostCurve {
    pub samples: Vec<WindowCostSample>,
    pub fit: ExponentFit,
}

/// Families over a T-grid and the fitted exponent of T·ln C(T).
pub fn window_cost_curve(
    seq: &SpectralSequence,
    t_grid: &[f64],
    window: &ModeWindow,
    eps: f64,
    ctx: &PrecisionContext,
) -> Result<WindowCostCurve> {
    let mut samples = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let fam = build_family(seq, t, window, eps, ctx)?;
        let cost = window_cost_bound(&fam);
        samples.push(WindowCostSample {
            horizon: t,
            cost,
            t_ln_cost: t * cost.ln(),
            max_residual: fam.max_residual,
            working_bits: fam.working_bits,
        });
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.horizon, s.cost)).collect();
    let fit = fit_exponent(&pts)?;
    Ok(WindowCostCurve { samples, fit })
}

/// |(g_n, g_k)| against C_ε e^{−ε√(|λ_n−λ_k|/2)} e^{α*(π+√2ε)²/τ}, with C_ε
/// fitted on pairs |n − k| ≤ 2 and checked on the rest.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayCheck {
    pub c_eps: f64,
    /// max over the remaining pairs of |(g_n,g_k)|/(C_ε·shape); ≤ 1 when the decay holds.
    pub worst_ratio: f64,
    pub checked_pairs: usize,
}

pub fn cross_window_decay(fam: &BiorthogonalFamily) -> DecayCheck {
    let eps = fam.epsilon;
    let tau = fam.horizon / 2.0;
    let ln_base = ALPHA_STAR * (PI + 2f64.sqrt() * eps).powi(2) / tau;
    let modes = fam.window.modes();
    let ln_ratio = |i: usize, k: usize| {
        let g = fam.gram(i, k).abs().to_f64();
        let gap = (fam.lambda(i) - fam.lambda(k)).abs();
        g.ln() + eps * (gap / 2.0).sqrt() - ln_base
    };
    let w = fam.len();
    let mut ln_c = f64::NEG_INFINITY;
    let mut far = Vec::new();
    for i in 0..w {
        for k in 0..w {
            if modes[i].abs_diff(modes[k]) <= 2 {
                ln_c = ln_c.max(ln_ratio(i, k));
            } else {
                far.push(ln_ratio(i, k));
            }
        }
    }
    let worst = far.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    DecayCheck {
        c_eps: ln_c.exp(),
        worst_ratio: if far.is_empty() { 0.0 } else { (worst - ln_c).exp() },
        checked_pairs: far.len(),
    }
}
