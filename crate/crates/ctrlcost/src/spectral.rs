//! Sturm–Liouville eigen-systems on a segment [0, X].
//!
//! The operator is (Af)(x) = (p f′)′ + q f with separated boundary
//! conditions (a₀f + b₀f′)(0) = 0 = (a₁f + b₁f′)(X); stored eigenvalues are
//! those of −A, so the Dirichlet Laplacian gives λ_n = (nπ/X)².

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precision::{integrate_adaptive, pi, PrecisionContext};

/// A coefficient function on [0, X].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coefficient {
    Constant {
        value: f64,
    },
    /// c₀ + c₁x + c₂x² + …
    Polynomial {
        coefficients: Vec<f64>,
    },
    /// Piecewise-linear interpolation of samples at increasing abscissae.
    Tabulated {
        x: Vec<f64>,
        y: Vec<f64>,
    },
}

impl Coefficient {
    pub fn constant(value: f64) -> Self {
        Coefficient::Constant { value }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Coefficient::Constant { value } => *value,
            Coefficient::Polynomial { coefficients } => coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c),
            Coefficient::Tabulated { x: xs, y: ys } => {
                if x <= xs[0] {
                    return ys[0];
                }
                let last = xs.len() - 1;
                if x >= xs[last] {
                    return ys[last];
                }
                let i = xs.partition_point(|&v| v <= x) - 1;
                let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
                ys[i] * (1.0 - w) + ys[i + 1] * w
            }
        }
    }

    fn validate(&self, field: &str) -> Result<()> {
        match self {
            Coefficient::Constant { value } if !value.is_finite() => Err(Error::validation(field, "not finite")),
            Coefficient::Polynomial { coefficients } if coefficients.is_empty() => {
                Err(Error::validation(field, "empty polynomial"))
            }
            Coefficient::Tabulated { x, y } => {
                if x.len() < 2 || x.len() != y.len() {
                    return Err(Error::validation(
                        field,
                        "need at least two (x, y) samples of equal length",
                    ));
                }
                if x.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::validation(field, "abscissae must increase strictly"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Points where the coefficient may fail to be smooth.
    fn kinks(&self) -> Vec<f64> {
        match self {
            Coefficient::Tabulated { x, .. } => x.clone(),
            _ => Vec::new(),
        }
    }
}

/// −(p f′)′ − q f = λ f on [0, X] with separated boundary conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SturmLiouvilleProblem {
    pub length: f64,
    pub p: Coefficient,
    pub q: Coefficient,
    pub a0: f64,
    pub b0: f64,
    pub a1: f64,
    pub b1: f64,
}

const P_CHECK_POINTS: usize = 257;

impl SturmLiouvilleProblem {
    pub fn new(
        length: f64,
        p: Coefficient,
        q: Coefficient,
        (a0, b0): (f64, f64),
        (a1, b1): (f64, f64),
    ) -> Result<Self> {
        let prob = SturmLiouvilleProblem {
            length,
            p,
            q,
            a0,
            b0,
            a1,
            b1,
        };
        prob.validate()?;
        Ok(prob)
    }

    pub fn dirichlet(length: f64) -> Self {
        SturmLiouvilleProblem {
            length,
            p: Coefficient::constant(1.0),
            q: Coefficient::constant(0.0),
            a0: 1.0,
            b0: 0.0,
            a1: 1.0,
            b1: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::validation("length", "must be positive and finite"));
        }
        self.p.validate("p")?;
        self.q.validate("q")?;
        for (name, a, b) in [("a0,b0", self.a0, self.b0), ("a1,b1", self.a1, self.b1)] {
            if ((a * a + b * b) - 1.0).abs() > 4.0 * f64::EPSILON {
                return Err(Error::validation(name, format!("a² + b² = {} ≠ 1", a * a + b * b)));
            }
        }
        for i in 0..P_CHECK_POINTS {
            let x = self.length * i as f64 / (P_CHECK_POINTS - 1) as f64;
            let p = self.p.eval(x);
            if !(p > 0.0) {
                return Err(Error::validation("p", format!("p({x}) = {p} is not positive")));
            }
            if !self.q.eval(x).is_finite() {
                return Err(Error::validation("q", format!("q({x}) is not finite")));
            }
        }
        Ok(())
    }

    /// Derivative order observed at x = X: 1 for a Dirichlet end, 0 otherwise.
    pub fn boundary_trace_order(&self) -> u8 {
        if self.b1 == 0.0 {
            1
        } else {
            0
        }
    }

    fn sample_bounds(&self) -> (f64, f64, f64) {
        let mut pmin = f64::INFINITY;
        let mut qmin = f64::INFINITY;
        let mut qmax = f64::NEG_INFINITY;
        for i in 0..P_CHECK_POINTS {
            let x = self.length * i as f64 / (P_CHECK_POINTS - 1) as f64;
            pmin = pmin.min(self.p.eval(x));
            let q = self.q.eval(x);
            qmin = qmin.min(q);
            qmax = qmax.max(q);
        }
        (pmin, qmin, qmax)
    }
}

/// L = ∫₀^X √p dx.
pub fn weighted_length(prob: &SturmLiouvilleProblem) -> Result<f64> {
    prob.validate()?;
    let ctx = PrecisionContext::new(64)?;
    let mut cuts: Vec<f64> = prob
        .p
        .kinks()
        .into_iter()
        .filter(|&x| x > 0.0 && x < prob.length)
        .collect();
    cuts.insert(0, 0.0);
    cuts.push(prob.length);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let piece: Float = integrate_adaptive(
            |x: &Float| Float::with_val(64, prob.p.eval(x.to_f64()).sqrt()),
            &ctx.float(w[0]),
            &ctx.float(w[1]),
            1e-15,
            &ctx,
        )?;
        total += piece.to_f64();
    }
    Ok(total)
}

/// Which end of the segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
enum BasisKind {
    /// Closed forms available at any precision.
    Dirichlet,
    Numerical,
}

/// Eigenvalues and grid-sampled orthonormal eigenfunctions.
///
/// Mode indices are 1-based throughout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralBasis {
    length: f64,
    kind: BasisKind,
    eigenvalues: Vec<f64>,
    grid: Vec<f64>,
    eigenfunctions: Vec<Vec<f64>>,
    /// (e_n(0), e_n′(0), e_n(X), e_n′(X))
    end_data: Vec<[f64; 4]>,
    weighted_length: f64,
    shift_index: f64,
}

fn uniform_grid(length: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| length * i as f64 / (points - 1) as f64).collect()
}

/// Closed-form Dirichlet basis: λ_n = (nπ/ℓ)², e_n = √(2/ℓ) sin(nπx/ℓ).
pub fn dirichlet_laplacian_basis(length: f64, n_modes: usize, grid_points: usize) -> Result<SpectralBasis> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::validation("length", "must be positive and finite"));
    }
    if n_modes == 0 {
        return Err(Error::validation("n_modes", "need at least one mode"));
    }
    if grid_points < 2 {
        return Err(Error::validation("grid_points", "need at least two grid points"));
    }
    let grid = uniform_grid(length, grid_points);
    let amp = (2.0 / length).sqrt();
    let mut eigenvalues = Vec::with_capacity(n_modes);
    let mut eigenfunctions = Vec::with_capacity(n_modes);
    let mut end_data = Vec::with_capacity(n_modes);
    for n in 1..=n_modes {
        let w = n as f64 * std::f64::consts::PI / length;
        eigenvalues.push(w * w);
        eigenfunctions.push(grid.iter().map(|&x| amp * (w * x).sin()).collect());
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        end_data.push([0.0, amp * w, 0.0, sign * amp * w]);
    }
    Ok(SpectralBasis {
        length,
        kind: BasisKind::Dirichlet,
        eigenvalues,
        grid,
        eigenfunctions,
        end_data,
        weighted_length: length,
        shift_index: 0.0,
    })
}

/// Scaled Prüfer angle θ with f = r sin θ, p f′ = s r cos θ.
///
/// The scale s = √(p̄·max(λ + q̄, 1)) makes θ′ constant for constant
/// coefficients, so RK4 on θ is exact there and accurate nearby.
struct Shooter<'a> {
    prob: &'a SturmLiouvilleProblem,
    steps: usize,
    p_mean: f64,
    q_mean: f64,
}

impl Shooter<'_> {
    fn scale(&self, lambda: f64) -> f64 {
        (self.p_mean * (lambda + self.q_mean).max(1.0)).sqrt()
    }

    fn theta0(&self, s: f64) -> f64 {
        let pr = self.prob;
        let t = pr.b0.atan2(-pr.a0 * pr.p.eval(0.0) / s);
        if t < 0.0 {
            t + std::f64::consts::PI
        } else if t >= std::f64::consts::PI {
            t - std::f64::consts::PI
        } else {
            t
        }
    }

    fn theta_target(&self, s: f64) -> f64 {
        let pr = self.prob;
        let t = pr.b1.atan2(-pr.a1 * pr.p.eval(pr.length) / s);
        if t <= 0.0 {
            t + std::f64::consts::PI
        } else {
            t
        }
    }

    fn rhs(&self, x: f64, theta: f64, lambda: f64, s: f64) -> f64 {
        let (sn, cs) = theta.sin_cos();
        s * cs * cs / self.prob.p.eval(x) + (lambda + self.prob.q.eval(x)) / s * sn * sn
    }

    /// θ(X; λ) − θ_target, whose zeros at multiples of π locate eigenvalues.
    fn mismatch(&self, lambda: f64, n: usize) -> f64 {
        let s = self.scale(lambda);
        let h = self.prob.length / self.steps as f64;
        let mut th = self.theta0(s);
        for i in 0..self.steps {
            let x = i as f64 * h;
            let k1 = self.rhs(x, th, lambda, s);
            let k2 = self.rhs(x + h / 2.0, th + h / 2.0 * k1, lambda, s);
            let k3 = self.rhs(x + h / 2.0, th + h / 2.0 * k2, lambda, s);
            let k4 = self.rhs(x + h, th + h * k3, lambda, s);
            th += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        th - self.theta_target(s) - (n - 1) as f64 * std::f64::consts::PI
    }

    /// λ with θ(X; λ) = θ_X + (n−1)π.
    fn eigenvalue(&self, n: usize, lo_hint: f64, hi_hint: f64) -> f64 {
        let mut lo = lo_hint;
        while self.mismatch(lo, n) >= 0.0 {
            lo = lo - (1.0 + lo.abs());
        }
        let mut hi = hi_hint.max(lo + 1.0);
        while self.mismatch(hi, n) <= 0.0 {
            hi = hi + (1.0 + hi.abs());
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.mismatch(mid, n) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// (f, p f′) on the grid for a given λ, by RK4 with `sub` steps per cell.
    fn profile(&self, lambda: f64, grid: &[f64], sub: usize) -> (Vec<f64>, Vec<f64>) {
        let pr = self.prob;
        let mut f = pr.b0;
        let mut g = -pr.a0 * pr.p.eval(0.0);
        let deriv = |x: f64, f: f64, g: f64| (g / pr.p.eval(x), -(lambda + pr.q.eval(x)) * f);
        let mut fs = vec![f];
        let mut gs = vec![g];
        for w in grid.windows(2) {
            let h = (w[1] - w[0]) / sub as f64;
            for s in 0..sub {
                let x = w[0] + s as f64 * h;
                let (a1, b1) = deriv(x, f, g);
                let (a2, b2) = deriv(x + h / 2.0, f + h / 2.0 * a1, g + h / 2.0 * b1);
                let (a3, b3) = deriv(x + h / 2.0, f + h / 2.0 * a2, g + h / 2.0 * b2);
                let (a4, b4) = deriv(x + h, f + h * a3, g + h * b3);
                f += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
                g += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
            }
            fs.push(f);
            gs.push(g);
        }
        (fs, gs)
    }
}

/// Composite Simpson weights on a uniform grid (trapezoid on a trailing odd cell).
fn simpson_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let h = grid[1] - grid[0];
    let mut w = vec![0.0; n];
    let cells = n - 1;
    let even = cells - cells % 2;
    for i in (0..even).step_by(2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    if cells % 2 == 1 {
        w[n - 2] += h / 2.0;
        w[n - 1] += h / 2.0;
    }
    w
}

/// Eigen-system of a general Sturm–Liouville problem by Prüfer shooting.
///
/// Eigenvalues are located by bisection on the Prüfer angle (the angle
/// count brackets each eigenvalue), eigenfunctions by RK4 integration on
/// the grid, normalised in L² by Simpson's rule with e_n′(0) > 0 (or
/// e_n(0) > 0 when the derivative vanishes).
pub fn solve_sturm_liouville(
    prob: &SturmLiouvilleProblem,
    n_modes: usize,
    grid_points: usize,
) -> Result<SpectralBasis> {
    prob.validate()?;
    if n_modes == 0 {
        return Err(Error::validation("n_modes", "need at least one mode"));
    }
    if grid_points < 3 {
        return Err(Error::validation("grid_points", "need at least three grid points"));
    }
    let grid = uniform_grid(prob.length, grid_points);
    let h = grid[1] - grid[0];
    let (pmin, qmin, qmax) = prob.sample_bounds();
    let (p_mean, q_mean) = {
        let m = P_CHECK_POINTS as f64;
        let xs = (0..P_CHECK_POINTS).map(|i| prob.length * i as f64 / (m - 1.0));
        xs.fold((0.0, 0.0), |(a, b), x| (a + prob.p.eval(x) / m, b + prob.q.eval(x) / m))
    };
    let shooter = Shooter {
        prob,
        steps: 8 * (grid_points - 1),
        p_mean,
        q_mean,
    };
    let big_l = weighted_length(prob)?;

    let mut eigenvalues: Vec<f64> = Vec::with_capacity(n_modes);
    for n in 1..=n_modes {
        let lo = eigenvalues.last().copied().unwrap_or(-qmax - 1.0);
        let guess = (n as f64 * std::f64::consts::PI / big_l).powi(2) - qmin + 1.0;
        let lam = shooter.eigenvalue(n, lo, guess);
        let omega = ((lam + qmax).max(0.0) / pmin).sqrt();
        let ppw = if omega > 0.0 {
            2.0 * std::f64::consts::PI / (omega * h)
        } else {
            f64::INFINITY
        };
        if ppw < 16.0 {
            return Err(Error::Resolution {
                mode: n,
                points_per_wavelength: ppw,
            });
        }
        if let Some(&prev) = eigenvalues.last() {
            let gap = lam - prev;
            if gap <= 1e-9 * (1.0 + lam.abs()) {
                return Err(Error::Degeneracy {
                    index: n - 1,
                    next: n,
                    gap,
                });
            }
        }
        eigenvalues.push(lam);
    }

    let weights = simpson_weights(&grid);
    let mut eigenfunctions = Vec::with_capacity(n_modes);
    let mut end_data = Vec::with_capacity(n_modes);
    for &lam in &eigenvalues {
        let (mut f, mut g) = shooter.profile(lam, &grid, 8);
        let norm = f.iter().zip(&weights).map(|(v, w)| v * v * w).sum::<f64>().sqrt();
        let d0 = g[0] / prob.p.eval(0.0);
        let sign = if d0.abs() > 1e-12 * norm {
            d0.signum()
        } else {
            f[0].signum()
        };
        let s = sign / norm;
        f.iter_mut().for_each(|v| *v *= s);
        g.iter_mut().for_each(|v| *v *= s);
        let last = grid_points - 1;
        end_data.push([
            f[0],
            g[0] / prob.p.eval(0.0),
            f[last],
            g[last] / prob.p.eval(prob.length),
        ]);
        eigenfunctions.push(f);
    }

    let shift_index = estimate_shift(&eigenvalues, big_l);
    Ok(SpectralBasis {
        length: prob.length,
        kind: BasisKind::Numerical,
        eigenvalues,
        grid,
        eigenfunctions,
        end_data,
        weighted_length: big_l,
        shift_index,
    })
}

/// ν from the mean of √λ_n·L/π − n over the top half of the modes.
fn estimate_shift(eigenvalues: &[f64], big_l: f64) -> f64 {
    let n = eigenvalues.len();
    let start = n / 2;
    let tail: Vec<f64> = (start..n)
        .filter(|&i| eigenvalues[i] > 0.0)
        .map(|i| eigenvalues[i].sqrt() * big_l / std::f64::consts::PI - (i + 1) as f64)
        .collect();
    if tail.is_empty() {
        0.0
    } else {
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}

impl SpectralBasis {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// λ_n for 1-based n.
    pub fn eigenvalue(&self, n: usize) -> f64 {
        self.eigenvalues[n - 1]
    }

    /// ω_n = √λ_n (zero for non-positive λ_n).
    pub fn frequency(&self, n: usize) -> f64 {
        self.eigenvalue(n).max(0.0).sqrt()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn eigenfunction(&self, n: usize) -> &[f64] {
        &self.eigenfunctions[n - 1]
    }

    /// e_n′(X) per mode.
    pub fn end_derivatives(&self) -> Vec<f64> {
        self.end_data.iter().map(|d| d[3]).collect()
    }

    pub fn weighted_length(&self) -> f64 {
        self.weighted_length
    }

    pub fn shift_index(&self) -> f64 {
        self.shift_index
    }

    pub fn is_closed_form(&self) -> bool {
        self.kind == BasisKind::Dirichlet
    }

    pub(crate) fn check_mode(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.len() {
            return Err(Error::validation(
                "mode_window",
                format!("mode {n} outside 1..={}", self.len()),
            ));
        }
        Ok(())
    }

    /// max |λ_n − (π/L)²(n+ν)²| over the stored modes.
    pub fn asymptotic_residual(&self) -> f64 {
        let c = std::f64::consts::PI / self.weighted_length;
        self.eigenvalues
            .iter()
            .enumerate()
            .map(|(i, &l)| (l - (c * (i as f64 + 1.0 + self.shift_index)).powi(2)).abs())
            .fold(0.0, f64::max)
    }

    /// max_{j≠k} |⟨e_j, e_k⟩| and max_j |⟨e_j, e_j⟩ − 1| by Simpson's rule.
    pub fn orthonormality_defect(&self) -> f64 {
        let w = simpson_weights(&self.grid);
        let mut worst: f64 = 0.0;
        for j in 0..self.len() {
            for k in j..self.len() {
                let ip: f64 = self.eigenfunctions[j]
                    .iter()
                    .zip(&self.eigenfunctions[k])
                    .zip(&w)
                    .map(|((a, b), w)| a * b * w)
                    .sum();
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((ip - target).abs());
            }
        }
        worst
    }

    /// λ_n at working precision.
    pub fn eigenvalue_mp(&self, n: usize, prec: u32) -> Float {
        match self.kind {
            BasisKind::Dirichlet => {
                let mut w = pi(prec) * n as u32;
                w /= Float::with_val(prec, self.length);
                Float::with_val(prec, &w * &w)
            }
            BasisKind::Numerical => Float::with_val(prec, self.eigenvalue(n)),
        }
    }

    /// ∂_x^k e_n at an endpoint, at working precision.
    pub fn trace_weight_mp(&self, n: usize, end: Endpoint, k: u8, prec: u32) -> Float {
        match self.kind {
            BasisKind::Dirichlet => {
                if k == 0 {
                    return Float::new(prec);
                }
                let ell = Float::with_val(prec, self.length);
                let mut w = pi(prec) * n as u32;
                w /= &ell;
                let amp = (Float::with_val(prec, 2) / &ell).sqrt();
                let v = amp * w;
                if end == Endpoint::Right && n % 2 == 1 {
                    -v
                } else {
                    v
                }
            }
            BasisKind::Numerical => {
                let d = &self.end_data[n - 1];
                let idx = match (end, k) {
                    (Endpoint::Left, 0) => 0,
                    (Endpoint::Left, _) => 1,
                    (Endpoint::Right, 0) => 2,
                    (Endpoint::Right, _) => 3,
                };
                Float::with_val(prec, d[idx])
            }
        }
    }

    /// e_n(x) at working precision (linear interpolation for numerical bases).
    pub fn value_mp(&self, n: usize, x: &Float) -> Float {
        let prec = x.prec();
        match self.kind {
            BasisKind::Dirichlet => {
                let ell = Float::with_val(prec, self.length);
                let mut arg = pi(prec) * n as u32;
                arg *= x;
                arg /= &ell;
                let amp = (Float::with_val(prec, 2) / &ell).sqrt();
                amp * arg.sin()
            }
            BasisKind::Numerical => Float::with_val(prec, self.value(n, x.to_f64())),
        }
    }

    /// e_n(x) in double precision.
    pub fn value(&self, n: usize, x: f64) -> f64 {
        match self.kind {
            BasisKind::Dirichlet => {
                let w = n as f64 * std::f64::consts::PI / self.length;
                (2.0 / self.length).sqrt() * (w * x).sin()
            }
            BasisKind::Numerical => {
                let h = self.grid[1] - self.grid[0];
                let pos = (x / h).clamp(0.0, (self.grid.len() - 1) as f64);
                let i = (pos.floor() as usize).min(self.grid.len() - 2);
                let t = pos - i as f64;
                let f = &self.eigenfunctions[n - 1];
                f[i] * (1.0 - t) + f[i + 1] * t
            }
        }
    }

    /// ∫_a^b e_j e_k dx at working precision.
    ///
    /// Closed form for the Dirichlet basis; otherwise Gauss–Legendre on each
    /// grid cell of the interpolated samples.
    pub fn overlap_mp(&self, j: usize, k: usize, a: f64, b: f64, prec: u32) -> Float {
        match self.kind {
            BasisKind::Dirichlet => {
                let ell = Float::with_val(prec, self.length);
                let fa = Float::with_val(prec, a);
                let fb = Float::with_val(prec, b);
                let s = |m: usize| -> Float {
                    if m == 0 {
                        return Float::with_val(prec, &fb - &fa) / &ell;
                    }
                    let mut w = pi(prec) * m as u32;
                    w /= &ell;
                    let sb = Float::with_val(prec, &w * &fb).sin();
                    let sa = Float::with_val(prec, &w * &fa).sin();
                    let mpi = pi(prec) * m as u32;
                    (sb - sa) / mpi
                };
                s(j.abs_diff(k)) - s(j + k)
            }
            BasisKind::Numerical => Float::with_val(prec, self.overlap_numeric(j, k, a, b)),
        }
    }

    fn overlap_numeric(&self, j: usize, k: usize, a: f64, b: f64) -> f64 {
        // piecewise-linear samples: exact integration of the product of two
        // linear pieces on each cell (clipped to [a, b])
        const NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
        const WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        let mut total = 0.0;
        for w in self.grid.windows(2) {
            let lo = w[0].max(a);
            let hi = w[1].min(b);
            if hi <= lo {
                continue;
            }
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (x, wt) in NODES.iter().zip(WEIGHTS) {
                let t = mid + half * x;
                total += wt * half * self.value(j, t) * self.value(k, t);
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirichlet_on_pi_has_square_spectrum() {
        let b = dirichlet_laplacian_basis(std::f64::consts::PI, 3, 101).unwrap();
        assert!((b.eigenvalue(1) - 1.0).abs() < 1e-14);
        assert!((b.eigenvalue(3) - 9.0).abs() < 1e-13);
        let x = 0.7;
        assert!((b.value(1, x) - (2.0 / std::f64::consts::PI).sqrt() * x.sin()).abs() < 1e-15);
    }

    #[test]
    fn dirichlet_end_derivative_on_length_two() {
        let b = dirichlet_laplacian_basis(2.0, 2, 11).unwrap();
        let pi = std::f64::consts::PI;
        assert!((b.eigenvalue(2) - pi * pi).abs() < 1e-12);
        let d = b.end_derivatives()[1];
        assert!((d * d - 2.0 * pi * pi / 2.0).abs() < 1e-12);
        assert!(d > 0.0);
    }

    #[test]
    fn closed_form_overlap_matches_quadrature() {
        let b = dirichlet_laplacian_basis(std::f64::consts::PI, 6, 2001).unwrap();
        for (j, k) in [(1, 1), (2, 5), (4, 4), (3, 6)] {
            let exact = b.overlap_mp(j, k, 0.3, 2.0, 128).to_f64();
            let ctx = PrecisionContext::new(128).unwrap();
            let q: Float = integrate_adaptive(
                |x: &Float| b.value_mp(j, x) * b.value_mp(k, x),
                &ctx.float(0.3),
                &ctx.float(2.0),
                1e-30,
                &ctx,
            )
            .unwrap();
            assert!((exact - q.to_f64()).abs() < 1e-14, "{j},{k}");
        }
    }

    #[test]
    fn shooting_reproduces_dirichlet() {
        let prob = SturmLiouvilleProblem::dirichlet(std::f64::consts::PI);
        let num = solve_sturm_liouville(&prob, 10, 2001).unwrap();
        for n in 1..=10 {
            assert!(
                (num.eigenvalue(n) - (n * n) as f64).abs() < 1e-8,
                "mode {n}: {}",
                num.eigenvalue(n)
            );
        }
        assert!(num.orthonormality_defect() < 1e-8);
        assert!(num.shift_index().abs() < 1e-6);
        // sign convention e_n′(0) > 0 agrees with the closed form
        let exact = dirichlet_laplacian_basis(std::f64::consts::PI, 10, 2001).unwrap();
        for n in 1..=10 {
            assert!((num.end_derivatives()[n - 1] - exact.end_derivatives()[n - 1]).abs() < 1e-6);
        }
    }

    #[test]
    fn neumann_dirichlet_half_integer_spectrum() {
        let prob = SturmLiouvilleProblem::new(
            std::f64::consts::PI,
            Coefficient::constant(1.0),
            Coefficient::constant(0.0),
            (0.0, 1.0),
            (1.0, 0.0),
        )
        .unwrap();
        let b = solve_sturm_liouville(&prob, 8, 2001).unwrap();
        for n in 1..=8 {
            let expect = (n as f64 - 0.5).powi(2);
            assert!((b.eigenvalue(n) - expect).abs() < 1e-8);
        }
        assert!((b.shift_index() + 0.5).abs() < 1e-6);
        assert_eq!(prob.boundary_trace_order(), 1);
    }

    #[test]
    fn coarse_grid_is_a_resolution_error() {
        let prob = SturmLiouvilleProblem::dirichlet(std::f64::consts::PI);
        let r = solve_sturm_liouville(&prob, 40, 101);
        assert!(matches!(r, Err(Error::Resolution { .. })));
    }

    #[test]
    fn weighted_length_cases() {
        let unit = SturmLiouvilleProblem::dirichlet(std::f64::consts::PI);
        assert!((weighted_length(&unit).unwrap() - std::f64::consts::PI).abs() < 1e-14);
        let mut four = SturmLiouvilleProblem::dirichlet(1.0);
        four.p = Coefficient::constant(4.0);
        assert!((weighted_length(&four).unwrap() - 2.0).abs() < 1e-14);
        let mut sq = SturmLiouvilleProblem::dirichlet(1.0);
        sq.p = Coefficient::Polynomial {
            coefficients: vec![1.0, 2.0, 1.0],
        };
        assert!((weighted_length(&sq).unwrap() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn boundary_normalisation_enforced() {
        let r = SturmLiouvilleProblem::new(
            1.0,
            Coefficient::constant(1.0),
            Coefficient::constant(0.0),
            (1.0, 1.0),
            (1.0, 0.0),
        );
        assert!(r.unwrap_err().is_validation());
    }

    #[test]
    fn tabulated_interpolates_linearly() {
        let c = Coefficient::Tabulated {
            x: vec![0.0, 1.0, 2.0],
            y: vec![1.0, 3.0, 2.0],
        };
        assert_eq!(c.eval(0.5), 2.0);
        assert_eq!(c.eval(1.5), 2.5);
        assert_eq!(c.eval(5.0), 2.0);
    }
}
