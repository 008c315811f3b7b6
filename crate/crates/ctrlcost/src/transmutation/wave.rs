use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::gl_nodes;
use crate::error::{Error, Result};
use crate::observability::{ModeWindow, ObservationDescriptor};
use crate::precision::PrecisionContext;

/// Smooth time cutoff χ(s) = ½[erf((s − c₁)/σ) − erf((s − c₂)/σ)].
///
/// χ is 0 to rounding at both ends of [0, S], so f vanishes near s = 0 and
/// near s = S; the reflected w̲ is then smooth at 0 and identically zero near
/// ±S, and its s-spectrum is Gaussian-limited.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub rise: f64,
    pub fall: f64,
    pub width: f64,
}

impl Cutoff {
    /// Ramps of length `fraction·S` at each end, each centred 6σ from the wall.
    pub fn new(control_time: f64, fraction: f64) -> Self {
        let ramp = fraction * control_time;
        Cutoff {
            rise: 0.5 * ramp,
            fall: control_time - 0.5 * ramp,
            width: ramp / 12.0,
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        0.5 * (libm::erf((s - self.rise) / self.width) - libm::erf((s - self.fall) / self.width))
    }

    pub fn derivative(&self, s: f64) -> f64 {
        let a = (s - self.rise) / self.width;
        let b = (s - self.fall) / self.width;
        ((-a * a).exp() - (-b * b).exp()) / (self.width * std::f64::consts::PI.sqrt())
    }

    /// Angular frequency past which the spectrum of χ′ is 10⁻¹² below its peak.
    pub fn bandwidth(&self) -> f64 {
        10.5 / self.width
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveOptions {
    /// Length of each cutoff ramp as a fraction of S.
    pub cutoff_fraction: f64,
    /// Steps of the s-grid; chosen from the bandwidth when absent.
    pub steps: Option<usize>,
}

impl Default for WaveOptions {
    fn default() -> Self {
        WaveOptions {
            cutoff_fraction: 0.25,
            steps: None,
        }
    }
}

/// Wave trajectory ∂_s²w − ∂_x²w = 1_Ω f on (0, S) in a mode window,
/// with f(s,x) = χ(s)·1_Ω(x)·Σ_k q_k(s) e_k(x) and
/// q_k(s) = θ_{k,0} sin(ω_k(S−s))/ω_k + θ_{k,1} cos(ω_k(S−s)).
#[derive(Clone, Debug)]
pub struct WaveControlledTrajectory {
    pub control_time: f64,
    pub cutoff: Cutoff,
    pub window: ModeWindow,
    pub frequencies: Vec<f64>,
    pub initial: (Vec<C64>, Vec<C64>),
    pub target: (Vec<C64>, Vec<C64>),
    /// S_nk = ∫_Ω e_n e_k, row-major.
    pub spatial: Vec<f64>,
    /// (θ_{k,0}, θ_{k,1}).
    pub multipliers: Vec<[C64; 2]>,
    /// Spacing of the s-grid.
    pub step: f64,
    /// w_n at the grid points, one row per point.
    pub displacement: Vec<Vec<C64>>,
    /// ∂_s w_n at the grid points.
    pub velocity: Vec<Vec<C64>>,
    /// ‖f‖_{L²((0,S)×Ω)}.
    pub control_norm: f64,
    /// ‖f‖ / ‖(w₀, w₁)‖_{H¹₀×L²}.
    pub operator_proxy: f64,
    /// ‖(w, ∂_s w)(S) − targets‖ / ‖(w₀, w₁)‖ in the energy norm.
    pub target_residual: f64,
    observation: ObservationDescriptor,
}

fn energy(freqs: &[f64], w: &[C64], dw: &[C64]) -> f64 {
    freqs
        .iter()
        .zip(w)
        .zip(dw)
        .map(|((o, a), b)| o * o * a.norm_sqr() + b.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

pub fn wave_hum_control(
    obs: &ObservationDescriptor,
    control_time: f64,
    initial: (&[C64], &[C64]),
    target: (&[C64], &[C64]),
    window: &ModeWindow,
    options: &WaveOptions,
    ctx: &PrecisionContext,
) -> Result<WaveControlledTrajectory> {
    let gap = obs
        .unobserved_length()
        .ok_or_else(|| Error::validation("omega", "the wave control acts on an interior set"))?;
    if !(control_time > 0.0 && control_time.is_finite()) {
        return Err(Error::validation(
            "control_time",
            format!("{control_time} is not positive"),
        ));
    }
    if control_time <= gap {
        return Err(Error::validation(
            "control_time",
            format!("S = {control_time} does not exceed L_Ω = {gap}"),
        ));
    }
    let frac = options.cutoff_fraction;
    if !(frac > 0.0 && frac < 0.5) {
        return Err(Error::validation(
            "cutoff_fraction",
            format!("{frac} is not in (0, 1/2)"),
        ));
    }
    if control_time * (1.0 - 2.0 * frac) <= gap {
        return Err(Error::validation(
            "cutoff_fraction",
            format!(
                "the cutoff leaves {} of S = {control_time}, not more than L_Ω = {gap}",
                control_time * (1.0 - 2.0 * frac)
            ),
        ));
    }
    let n = window.len();
    for (name, v) in [("w0", initial.0), ("w1", initial.1), ("w2", target.0), ("w3", target.1)] {
        if v.len() != n {
            return Err(Error::validation(
                name,
                format!("{} coefficients for a window of {n}", v.len()),
            ));
        }
    }
    let basis = obs.basis();
    let frequencies: Vec<f64> = window.modes().iter().map(|&m| basis.eigenvalue(m).sqrt()).collect();
    let spatial: Vec<f64> = obs
        .spatial_matrix(window, ctx.bits())?
        .iter()
        .map(|v| v.to_f64())
        .collect();
    let cutoff = Cutoff::new(control_time, frac);
    let big_s = control_time;
    let omega_max = frequencies.iter().cloned().fold(0.0, f64::max);

    // Γ_{(n,a),(k,b)} = S_nk ∫ χ ψ_{n,a} ψ_{k,b}
    let psi = |k: usize, s: f64| -> [f64; 2] {
        let o = frequencies[k];
        let (sn, cs) = (o * (big_s - s)).sin_cos();
        [sn / o, cs]
    };
    let (gx, gw) = gl_nodes(24);
    let panels = 1 + (big_s * (2.0 * omega_max + cutoff.bandwidth()) / 12.0).ceil() as usize;
    let mut overlap = vec![0.0; 4 * n * n];
    let width = big_s / panels as f64;
    for p in 0..panels {
        let mid = width * (p as f64 + 0.5);
        for (x, w) in gx.iter().zip(&gw) {
            let s = mid + 0.5 * width * x;
            let cw = cutoff.value(s) * w * 0.5 * width;
            let vals: Vec<[f64; 2]> = (0..n).map(|k| psi(k, s)).collect();
            for i in 0..2 * n {
                let a = vals[i / 2][i % 2] * cw;
                for j in 0..2 * n {
                    overlap[i * 2 * n + j] += a * vals[j / 2][j % 2];
                }
            }
        }
    }
    let gamma = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        spatial[(i / 2) * n + j / 2] * overlap[i * 2 * n + j]
    });
    let rhs: Vec<C64> = (0..2 * n)
        .map(|i| {
            let k = i / 2;
            let o = frequencies[k];
            let (sn, cs) = (o * big_s).sin_cos();
            let (w0, w1) = (initial.0[k], initial.1[k]);
            if i % 2 == 0 {
                target.0[k] - w0 * cs - w1 * (sn / o)
            } else {
                target.1[k] + w0 * (o * sn) - w1 * cs
            }
        })
        .collect();
    let chol = gamma.clone().cholesky().ok_or_else(|| {
        let min = gamma.symmetric_eigenvalues().min();
        Error::DegenerateGramian { min_eig: min }
    })?;
    let re = chol.solve(&DVector::from_iterator(2 * n, rhs.iter().map(|z| z.re)));
    let im = chol.solve(&DVector::from_iterator(2 * n, rhs.iter().map(|z| z.im)));
    let multipliers: Vec<[C64; 2]> = (0..n)
        .map(|k| [C64::new(re[2 * k], im[2 * k]), C64::new(re[2 * k + 1], im[2 * k + 1])])
        .collect();

    let band = omega_max + cutoff.bandwidth();
    let steps = options
        .steps
        .unwrap_or_else(|| ((big_s * 1.5 * band / std::f64::consts::PI).ceil() as usize).max(800));
    let mut traj = WaveControlledTrajectory {
        control_time,
        cutoff,
        window: window.clone(),
        frequencies,
        initial: (initial.0.to_vec(), initial.1.to_vec()),
        target: (target.0.to_vec(), target.1.to_vec()),
        spatial,
        multipliers,
        step: big_s / steps as f64,
        displacement: Vec::new(),
        velocity: Vec::new(),
        control_norm: 0.0,
        operator_proxy: 0.0,
        target_residual: 0.0,
        observation: obs.clone(),
    };
    traj.integrate(steps);
    traj.control_norm = traj.norm_squares(false).sqrt();
    let data = energy(&traj.frequencies, &traj.initial.0, &traj.initial.1);
    traj.operator_proxy = if data > 0.0 { traj.control_norm / data } else { 0.0 };
    let miss: (Vec<C64>, Vec<C64>) = (
        traj.displacement[steps]
            .iter()
            .zip(&traj.target.0)
            .map(|(a, b)| a - b)
            .collect(),
        traj.velocity[steps]
            .iter()
            .zip(&traj.target.1)
            .map(|(a, b)| a - b)
            .collect(),
    );
    let miss = energy(&traj.frequencies, &miss.0, &miss.1);
    traj.target_residual = if data > 0.0 { miss / data } else { miss };
    Ok(traj)
}

impl WaveControlledTrajectory {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn observation(&self) -> &ObservationDescriptor {
        &self.observation
    }

    /// Grid points s_i = i·h, i = 0..=steps.
    pub fn grid(&self) -> Vec<f64> {
        (0..self.displacement.len()).map(|i| self.step * i as f64).collect()
    }

    fn q(&self, s: f64) -> (Vec<C64>, Vec<C64>) {
        let big_s = self.control_time;
        self.frequencies
            .iter()
            .zip(&self.multipliers)
            .map(|(&o, th)| {
                let (sn, cs) = (o * (big_s - s)).sin_cos();
                (th[0] * (sn / o) + th[1] * cs, th[0] * (-cs) + th[1] * (o * sn))
            })
            .unzip()
    }

    /// F_k(s) = χ(s) q_k(s), so that f(s,·) = 1_Ω Σ_k F_k(s) e_k.
    pub fn coefficients(&self, s: f64) -> Vec<C64> {
        let c = self.cutoff.value(s);
        self.q(s).0.into_iter().map(|v| v * c).collect()
    }

    /// ∂_s F_k(s).
    pub fn coefficient_derivatives(&self, s: f64) -> Vec<C64> {
        let (c, dc) = (self.cutoff.value(s), self.cutoff.derivative(s));
        let (q, dq) = self.q(s);
        q.iter().zip(&dq).map(|(a, b)| a * dc + b * c).collect()
    }

    /// f_n(s) = (1_Ω f(s,·), e_n) over the window.
    pub fn modal_forcing(&self, s: f64) -> Vec<C64> {
        self.apply_spatial(&self.coefficients(s))
    }

    pub(crate) fn apply_spatial(&self, v: &[C64]) -> Vec<C64> {
        let n = self.len();
        (0..n)
            .map(|i| (0..n).map(|k| v[k] * self.spatial[i * n + k]).sum())
            .collect()
    }

    /// f(s, x).
    pub fn value(&self, s: f64, x: f64) -> C64 {
        if !self.observation.contains(x) {
            return C64::new(0.0, 0.0);
        }
        let basis = self.observation.basis();
        self.coefficients(s)
            .iter()
            .zip(self.window.modes())
            .map(|(c, &m)| c * basis.value(m, x))
            .sum()
    }

    /// w(s, x) at a grid point.
    pub fn displacement_at(&self, i: usize, x: f64) -> C64 {
        let basis = self.observation.basis();
        self.displacement[i]
            .iter()
            .zip(self.window.modes())
            .map(|(c, &m)| c * basis.value(m, x))
            .sum()
    }

    /// Exact homogeneous step plus Gauss–Legendre Duhamel forcing per step.
    fn integrate(&mut self, steps: usize) {
        let h = self.step;
        let (gx, gw) = gl_nodes(16);
        let mut w = self.initial.0.clone();
        let mut dw = self.initial.1.clone();
        self.displacement = Vec::with_capacity(steps + 1);
        self.velocity = Vec::with_capacity(steps + 1);
        self.displacement.push(w.clone());
        self.velocity.push(dw.clone());
        let rot: Vec<(f64, f64)> = self.frequencies.iter().map(|o| (o * h).sin_cos()).collect();
        for i in 0..steps {
            let s0 = h * i as f64;
            let s1 = s0 + h;
            let mut push = vec![(C64::new(0.0, 0.0), C64::new(0.0, 0.0)); self.len()];
            for (x, wt) in gx.iter().zip(&gw) {
                let r = s0 + 0.5 * h * (1.0 + x);
                let f = self.modal_forcing(r);
                for (k, fk) in f.iter().enumerate() {
                    let o = self.frequencies[k];
                    let (sn, cs) = (o * (s1 - r)).sin_cos();
                    push[k].0 += fk * (sn / o * wt * 0.5 * h);
                    push[k].1 += fk * (cs * wt * 0.5 * h);
                }
            }
            for k in 0..self.len() {
                let o = self.frequencies[k];
                let (sn, cs) = rot[k];
                let nw = w[k] * cs + dw[k] * (sn / o) + push[k].0;
                let ndw = -w[k] * (o * sn) + dw[k] * cs + push[k].1;
                w[k] = nw;
                dw[k] = ndw;
            }
            self.displacement.push(w.clone());
            self.velocity.push(dw.clone());
        }
    }

    /// ∫₀^S ‖f‖²_{L²} ds, or ∫₀^S (‖f‖² + ‖∂_s f‖²) ds when `with_derivative`.
    fn norm_squares(&self, with_derivative: bool) -> f64 {
        let n = self.len();
        let omega_max = self.frequencies.iter().cloned().fold(0.0, f64::max);
        let panels = 1 + (self.control_time * (2.0 * omega_max + 2.0 * self.cutoff.bandwidth()) / 12.0).ceil() as usize;
        let (gx, gw) = gl_nodes(24);
        let width = self.control_time / panels as f64;
        let form = |v: &[C64]| -> f64 {
            let mut acc = 0.0;
            for i in 0..n {
                for k in 0..n {
                    acc += self.spatial[i * n + k] * (v[i].conj() * v[k]).re;
                }
            }
            acc
        };
        let mut total = 0.0;
        for p in 0..panels {
            let mid = width * (p as f64 + 0.5);
            for (x, w) in gx.iter().zip(&gw) {
                let s = mid + 0.5 * width * x;
                let mut val = form(&self.coefficients(s));
                if with_derivative {
                    val += form(&self.coefficient_derivatives(s));
                }
                total += val * w * 0.5 * width;
            }
        }
        total
    }

    /// ‖f̲‖_{H¹(ℝ; L²(M))} of the even extension to (−S, S).
    pub fn reflected_h1_norm(&self) -> f64 {
        (2.0 * self.norm_squares(true)).sqrt()
    }

    /// Largest relative residual of the wave equation on the interior grid,
    /// with ∂_s² taken by the five-point difference and measured against
    /// max(ω²|w|, |f|).
    pub fn pde_residual(&self) -> f64 {
        let h = self.step;
        let last = self.displacement.len() - 1;
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 2..last - 1 {
            let f = self.modal_forcing(h * i as f64);
            for k in 0..self.len() {
                let o2 = self.frequencies[k].powi(2);
                let w = &self.displacement;
                let lap =
                    ((w[i + 1][k] + w[i - 1][k]) * 16.0 - w[i][k] * 30.0 - w[i + 2][k] - w[i - 2][k]) / (12.0 * h * h);
                worst = worst.max((lap + w[i][k] * o2 - f[k]).norm());
                scale = scale.max((w[i][k] * o2).norm()).max(f[k].norm());
            }
        }
        if scale > 0.0 {
            worst / scale
        } else {
            worst
        }
    }
}
