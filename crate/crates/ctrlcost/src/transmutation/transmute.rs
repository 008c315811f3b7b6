use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::expsum::ExpRows;
use super::kernel::{build_fundamental_solution, FundamentalControlledSolution, KernelControl};
use super::wave::{wave_hum_control, WaveControlledTrajectory, WaveOptions};
use crate::error::{Error, Result};
use crate::observability::{build_gramian, hum_control, ModeWindow, ObservationDescriptor};
use crate::precision::{Complex, PrecisionContext};

/// Schrödinger trajectory and control obtained by transmutation on [0, T]:
/// u_n(t) = Σ_j v_j(t) β_jn and g(t,·) = 1_Ω Σ_k G_k(t) e_k with
/// G_k(t) = −Σ_j v_j(t) ζ_jk, where β_jn = ∫ φ_j w̲_n ds and ζ_jk = ∫ φ_j χ q̲_k ds.
#[derive(Clone, Debug)]
pub struct TransmutedControl {
    pub horizon: f64,
    pub window: ModeWindow,
    /// μ_n = ω_n².
    pub eigenvalues: Vec<f64>,
    pub initial: Vec<C64>,
    /// u_n(t).
    pub state: ExpRows,
    /// G_k(t).
    pub control: ExpRows,
    /// ∫_Ω e_n e_k, row-major.
    pub spatial: Vec<f64>,
    /// ‖g‖_{L²((0,T)×Ω)}.
    pub control_norm: f64,
    /// ‖v‖_{L²(0,T; H⁻¹)}.
    pub kernel_norm: f64,
    /// ‖f̲‖_{H¹(ℝ; L²)}.
    pub wave_norm: f64,
    /// ‖Σ_j φ_j(0) β_j − u₀‖ / ‖u₀‖.
    pub initial_defect: f64,
    /// Forward solution at T driven by g from u₀.
    pub final_state: Vec<C64>,
    /// ‖u(T)‖ / ‖u₀‖.
    pub steering_residual: f64,
    /// sup_t ‖i u′ − μu − g_n‖ / sup_t ‖μu‖ on the sample grid.
    pub pde_residual: f64,
    observation: ObservationDescriptor,
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Kernel modes needed to resolve the s-spectrum of w̲ and f̲: the smallest
/// count whose top frequency (2c − 1)π/2S passes ω_max plus the cutoff band.
pub fn kernel_modes_for(wave: &WaveControlledTrajectory) -> usize {
    let band = wave.frequencies.iter().cloned().fold(0.0, f64::max) + wave.cutoff.bandwidth();
    ((2.0 * wave.control_time * band / PI + 1.0) / 2.0).ceil() as usize
}

/// Free evolution plus Duhamel forcing: e^{−iμT}[u₀ − i ∫₀^T e^{iμt} g_n dt].
fn evolve(eigenvalues: &[f64], u0: &[C64], forcing: &ExpRows, horizon: f64) -> Vec<C64> {
    eigenvalues
        .iter()
        .enumerate()
        .map(|(n, &mu)| {
            let m = forcing.moment(mu);
            C64::from_polar(1.0, -mu * horizon) * (u0[n] - C64::new(0.0, 1.0) * m[n])
        })
        .collect()
}

fn modal_rows(control: &ExpRows, spatial: &[f64]) -> ExpRows {
    let n = control.len();
    let weights: Vec<Vec<C64>> = (0..n)
        .map(|i| (0..n).map(|k| C64::new(spatial[i * n + k], 0.0)).collect())
        .collect();
    control.combine(&weights)
}

pub fn transmute(kernel: &FundamentalControlledSolution, wave: &WaveControlledTrajectory) -> Result<TransmutedControl> {
    let big_s = wave.control_time;
    if (kernel.half_length - big_s).abs() > 1e-12 * big_s {
        return Err(Error::validation(
            "half_length",
            format!(
                "kernel half-length {} differs from the wave control time {big_s}",
                kernel.half_length
            ),
        ));
    }
    let data = norm(&wave.initial.0);
    let rest = norm(&wave.initial.1) + norm(&wave.target.0) + norm(&wave.target.1);
    if rest > 1e-14 * data.max(f64::MIN_POSITIVE) {
        return Err(Error::validation("wave", "transmutation needs w₁ = 0 and zero targets"));
    }
    let h = wave.step;
    let kernel_top = kernel.eigenvalues.iter().cloned().fold(0.0, f64::max).sqrt();
    let band = wave.frequencies.iter().cloned().fold(0.0, f64::max) + wave.cutoff.bandwidth();
    if kernel_top + band >= 2.0 * PI / h {
        return Err(Error::validation(
            "grid",
            format!("s-step {h} aliases kernel frequency {kernel_top} against the wave band {band}"),
        ));
    }
    let n = wave.len();
    let j_count = kernel.len();
    let grid = wave.grid();
    let last = grid.len() - 1;
    // β_jn = 2∫₀^S φ_j w_n ds and ζ_jk = 2∫₀^S φ_j F_k ds by the trapezoid rule
    let zero = C64::new(0.0, 0.0);
    let mut beta = vec![vec![zero; j_count]; n];
    let mut zeta = vec![vec![zero; j_count]; n];
    for (i, &s) in grid.iter().enumerate() {
        let w = if i == 0 || i == last { h } else { 2.0 * h };
        let phi = kernel.eigenfunctions(s);
        let f = wave.coefficients(s);
        for k in 0..n {
            let (wd, fd) = (wave.displacement[i][k] * w, f[k] * w);
            for (j, p) in phi.iter().enumerate() {
                beta[k][j] += wd * p;
                zeta[k][j] += fd * p;
            }
        }
    }
    let state = kernel.trajectory.combine(&beta);
    let neg: Vec<Vec<C64>> = zeta.iter().map(|r| r.iter().map(|z| -z).collect()).collect();
    let control = kernel.trajectory.combine(&neg);
    let modal = modal_rows(&control, &wave.spatial);
    let eigenvalues: Vec<f64> = wave.frequencies.iter().map(|o| o * o).collect();
    let u0 = wave.initial.0.clone();
    let start = state.eval(0.0);
    let defect: Vec<C64> = start.iter().zip(&u0).map(|(a, b)| a - b).collect();
    let scale = if data > 0.0 { data } else { 1.0 };
    let final_state = evolve(&eigenvalues, &u0, &modal, kernel.horizon);
    let control_norm = control.quadratic(&wave.spatial).max(0.0).sqrt();

    let samples = 400;
    let mut worst: f64 = 0.0;
    let mut size: f64 = 0.0;
    for i in 1..samples {
        let t = kernel.horizon * i as f64 / samples as f64;
        let (u, du, g) = (state.eval(t), state.derivative(t), modal.eval(t));
        let r: Vec<C64> = (0..n)
            .map(|k| C64::new(0.0, 1.0) * du[k] - u[k] * eigenvalues[k] - g[k])
            .collect();
        worst = worst.max(norm(&r));
        size = size.max(norm(
            &u.iter().zip(&eigenvalues).map(|(a, m)| a * m).collect::<Vec<_>>(),
        ));
    }
    Ok(TransmutedControl {
        horizon: kernel.horizon,
        window: wave.window.clone(),
        eigenvalues,
        initial: u0,
        state,
        control,
        spatial: wave.spatial.clone(),
        control_norm,
        kernel_norm: kernel.h_minus_one_norm,
        wave_norm: wave.reflected_h1_norm(),
        initial_defect: norm(&defect) / scale,
        steering_residual: norm(&final_state) / scale,
        final_state,
        pde_residual: if size > 0.0 { worst / size } else { worst },
        observation: wave.observation().clone(),
    })
}

impl TransmutedControl {
    /// ‖v‖_{L²(H⁻¹)}·‖f̲‖_{H¹(L²)}, which bounds ‖g‖.
    pub fn chain_bound(&self) -> f64 {
        self.kernel_norm * self.wave_norm
    }

    /// g_n(t) = (1_Ω g(t,·), e_n).
    pub fn modal_control(&self, t: f64) -> Vec<C64> {
        let g = self.control.eval(t);
        let n = g.len();
        (0..n)
            .map(|i| (0..n).map(|k| g[k] * self.spatial[i * n + k]).sum())
            .collect()
    }

    pub fn state_at(&self, t: f64) -> Vec<C64> {
        self.state.eval(t)
    }

    /// g(t, x), zero outside Ω.
    pub fn control_value(&self, t: f64, x: f64) -> C64 {
        if !self.observation.contains(x) {
            return C64::new(0.0, 0.0);
        }
        let basis = self.observation.basis();
        self.control
            .eval(t)
            .iter()
            .zip(self.window.modes())
            .map(|(c, &m)| c * basis.value(m, x))
            .sum()
    }

    /// u(t, x).
    pub fn state_value(&self, t: f64, x: f64) -> C64 {
        let basis = self.observation.basis();
        self.state
            .eval(t)
            .iter()
            .zip(self.window.modes())
            .map(|(c, &m)| c * basis.value(m, x))
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoStageOptions {
    /// T′ = ε_split·T.
    pub eps_split: f64,
    /// Stage 1 steers the modes with ω ≥ d/T′; None picks d = 2·L_Ω.
    pub smoothing_d: Option<f64>,
    /// Wave control time S; None picks 1.1·L_Ω/(1 − 2·cutoff fraction).
    pub wave_time: Option<f64>,
    pub wave: WaveOptions,
    /// Kernel modes; None sizes them from the wave band.
    pub kernel_modes: Option<usize>,
    pub kernel: KernelControl,
    /// Window parameter of the biorthogonal kernel.
    pub window_eps: f64,
}

impl Default for TwoStageOptions {
    fn default() -> Self {
        TwoStageOptions {
            eps_split: 0.3,
            smoothing_d: None,
            wave_time: None,
            wave: WaveOptions::default(),
            kernel_modes: None,
            kernel: KernelControl::Hum,
            window_eps: 0.3,
        }
    }
}

/// Smoothing control on [0, T′] followed by a transmuted control on [T′, T].
#[derive(Clone, Debug)]
pub struct TwoStageControl {
    pub horizon: f64,
    pub split_time: f64,
    /// Modes steered to rest by the first stage.
    pub high_modes: Vec<usize>,
    /// G¹_k(t) on [0, T′], over the whole window.
    pub stage1: ExpRows,
    pub stage1_norm: f64,
    /// u(T′).
    pub intermediate: Vec<C64>,
    pub stage2: TransmutedControl,
    pub kernel: FundamentalControlledSolution,
    pub wave: WaveControlledTrajectory,
    /// (‖g₁‖² + ‖g₂‖²)^{1/2}.
    pub total_norm: f64,
    /// ‖g‖/‖u₀‖.
    pub cost: f64,
    pub final_state: Vec<C64>,
    pub steering_residual: f64,
}

pub fn two_stage_control(
    obs: &ObservationDescriptor,
    u0: &[C64],
    window: &ModeWindow,
    horizon: f64,
    options: &TwoStageOptions,
    ctx: &PrecisionContext,
) -> Result<TwoStageControl> {
    let gap = obs
        .unobserved_length()
        .ok_or_else(|| Error::validation("omega", "two-stage control needs an interior set"))?;
    let eps = options.eps_split;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::validation("eps_split", format!("{eps} is not in (0, 1)")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::validation("horizon", format!("{horizon} is not positive")));
    }
    if u0.len() != window.len() {
        return Err(Error::validation(
            "u0",
            format!("{} coefficients for a window of {}", u0.len(), window.len()),
        ));
    }
    let d = options.smoothing_d.unwrap_or(2.0 * gap);
    if d <= gap {
        return Err(Error::validation(
            "smoothing_d",
            format!("d = {d} does not exceed L_Ω = {gap}"),
        ));
    }
    let split = eps * horizon;
    let basis = obs.basis();
    let n = window.len();
    let eigenvalues: Vec<f64> = window.modes().iter().map(|&m| basis.eigenvalue(m)).collect();
    let high: Vec<usize> = (0..n).filter(|&i| eigenvalues[i].sqrt() >= d / split).collect();
    let zero = C64::new(0.0, 0.0);
    let spatial: Vec<f64> = obs
        .spatial_matrix(window, ctx.bits())?
        .iter()
        .map(|v| v.to_f64())
        .collect();

    let mut stage1 = ExpRows {
        horizon: split,
        freqs: eigenvalues.clone(),
        constant: vec![vec![zero; n]; n],
        linear: vec![vec![zero; n]; n],
    };
    let mut stage1_norm = 0.0;
    if !high.is_empty() {
        let hw = ModeWindow::new(high.iter().map(|&i| window.modes()[i]).collect())?;
        let gram = build_gramian(obs, split, &hw, ctx)?;
        let data: Vec<Complex> = high
            .iter()
            .map(|&i| Complex::from_f64(ctx.bits(), u0[i].re, u0[i].im))
            .collect();
        let hum = hum_control(&gram, &data, ctx)?;
        for (c, &i) in hum.coefficients.iter().zip(&high) {
            let (re, im) = c.to_f64();
            stage1.constant[i][i] = C64::new(re, im);
        }
        stage1_norm = hum.norm();
    }
    let intermediate = evolve(&eigenvalues, u0, &modal_rows(&stage1, &spatial), split);

    let frac = options.wave.cutoff_fraction;
    let big_s = options.wave_time.unwrap_or(1.1 * gap / (1.0 - 2.0 * frac));
    let z = vec![zero; n];
    let wave = wave_hum_control(obs, big_s, (&intermediate, &z), (&z, &z), window, &options.wave, ctx)?;
    let count = options.kernel_modes.unwrap_or_else(|| kernel_modes_for(&wave));
    let kernel = build_fundamental_solution(big_s, horizon - split, count, options.window_eps, options.kernel, ctx)?;
    let stage2 = transmute(&kernel, &wave)?;
    let total_norm = stage1_norm.hypot(stage2.control_norm);
    let data = norm(u0);
    let scale = if data > 0.0 { data } else { 1.0 };
    let final_state = stage2.final_state.clone();
    Ok(TwoStageControl {
        horizon,
        split_time: split,
        high_modes: high.iter().map(|&i| window.modes()[i]).collect(),
        stage1,
        stage1_norm,
        intermediate,
        total_norm,
        cost: total_norm / scale,
        steering_residual: norm(&final_state) / scale,
        final_state,
        stage2,
        kernel,
        wave,
    })
}
