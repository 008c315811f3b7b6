use rug::{Assign, Float};
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::precision::{Complex, PrecisionContext};

/// Even entire function of exponential type τ with M(0) = 1 and
/// ln|M(x)| ≤ β + D − d√|x| on the real line, β = d²/τ.
///
/// M = Ĥ/Ĥ(0) for the bump H(t) = exp(−β/(1 − t²/τ²)) on (−τ, τ). The bump
/// is positive, so |M| ≤ 1 on the real axis; the saddle point of its Fourier
/// integral gives the e^{β − d√x} decay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Multiplier {
    pub tau: f64,
    pub d: f64,
    pub beta: f64,
    /// Fitted D.
    pub decay_constant: f64,
    /// Upper end of the grid on which the bound was checked.
    pub checked_up_to: f64,
}

/// Trapezoid rule for Ĥ(x) = ∫ H(t) cos(xt) dt on nodes t_j = jh.
struct BumpRule {
    step: Float,
    weights: Vec<Float>,
    norm: Float,
}

impl Multiplier {
    /// α with β = α d²/(4τ).
    pub const ALPHA: f64 = 4.0;

    /// Right-hand side β + D − d√|x| of the decay bound.
    pub fn bound(&self, x: f64) -> f64 {
        self.beta + self.decay_constant - self.d * x.abs().sqrt()
    }

    /// Trapezoid aliasing brings in Ĥ(x ± 2π/h), so the rule resolves |x| ≤ x_max
    /// to relative accuracy 2^{-p} once 2π/h − x_max is past the point where
    /// e^{β − d√x} drops below 2^{-p}.
    fn rule(&self, x_max: f64, prec: u32) -> BumpRule {
        let tail = ((self.beta + prec as f64 * LN_2 + 20.0) / self.d).powi(2);
        let h = 2.0 * PI / (x_max + tail);
        let nodes = (self.tau / h).floor() as usize;
        let step = Float::with_val(prec, h);
        let tau2 = Float::with_val(prec, self.tau * self.tau);
        let beta = Float::with_val(prec, self.beta);
        let mut weights = Vec::with_capacity(nodes + 1);
        let mut norm = Float::new(prec);
        for j in 0..=nodes {
            let t = Float::with_val(prec, &step * j as u32);
            let r = Float::with_val(prec, t.square_ref()) / &tau2;
            if r >= 1 {
                break;
            }
            let e = -Float::with_val(prec, &beta / (1 - r));
            let mut w = e.exp() * &step;
            if j > 0 {
                w *= 2u32;
            }
            norm += &w;
            weights.push(w);
        }
        BumpRule { step, weights, norm }
    }

    fn hat(rule: &BumpRule, x: &Float) -> Float {
        let p = x.prec();
        let theta = Float::with_val(p, x * &rule.step);
        let c1 = theta.cos();
        let two_c1 = Float::with_val(p, &c1 * 2u32);
        let mut prev = Float::with_val(p, 1);
        let mut cur = c1;
        let mut acc = Float::with_val(p, &rule.weights[0]);
        let mut tmp = Float::new(p);
        for w in &rule.weights[1..] {
            tmp.assign(w * &cur);
            acc += &tmp;
            tmp.assign(&two_c1 * &cur);
            tmp -= &prev;
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut tmp);
        }
        acc
    }

    pub fn eval(&self, x: &Float) -> Float {
        let p = x.prec();
        let rule = self.rule(x.to_f64().abs(), p);
        Self::hat(&rule, x) / &rule.norm
    }

    /// M(m·dx) for m = 0..=m_max, sharing one quadrature rule.
    pub fn eval_grid(&self, dx: f64, m_max: usize, prec: u32) -> Vec<Float> {
        let rule = self.rule(dx * m_max as f64, prec);
        let dxf = Float::with_val(prec, dx);
        (0..=m_max)
            .map(|m| {
                let x = Float::with_val(prec, &dxf * m as u32);
                Self::hat(&rule, &x) / &rule.norm
            })
            .collect()
    }

    pub fn eval_complex(&self, z: &Complex) -> Complex {
        let p = z.prec();
        let (re, im) = z.to_f64();
        let rule = self.rule(re.hypot(im), p);
        let theta = z.scale(&rule.step);
        let c1 = theta.cos();
        let two_c1 = c1.scale_f64(2.0);
        let mut prev = Complex::one(p);
        let mut cur = c1;
        let mut acc = Complex::from_real(rule.weights[0].clone());
        for w in &rule.weights[1..] {
            acc += &cur.scale(w);
            let next = &two_c1 * &cur - &prev;
            prev = std::mem::replace(&mut cur, next);
        }
        acc.scale(&rule.norm.clone().recip())
    }

    /// ln|M(x)| at the given precision; −∞ at a zero.
    pub fn ln_abs(&self, x: f64, prec: u32) -> f64 {
        let v = self.eval(&Float::with_val(prec, x));
        if v.is_zero() {
            f64::NEG_INFINITY
        } else {
            v.abs().ln().to_f64()
        }
    }
}

/// Builds M with d = `d` and type τ, fitting D on a log-spaced grid and
/// re-checking the fitted bound on a grid twice as fine.
pub fn build_multiplier(tau: f64, d: f64, ctx: &PrecisionContext) -> Result<Multiplier> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::validation("tau", format!("{tau} is not positive")));
    }
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::validation("d", format!("{d} is not positive")));
    }
    let beta = d * d / tau;
    let prec = ctx.bits();
    // resolve M to about half the working digits at the top of the grid
    let x_hi = ((beta + 0.5 * prec as f64 * LN_2) / d).powi(2);
    let x_lo: f64 = 0.25;
    let points = 600usize;
    let mut m = Multiplier {
        tau,
        d,
        beta,
        decay_constant: 0.0,
        checked_up_to: x_hi,
    };
    let rule = m.rule(x_hi, prec);
    let excess = |x: f64| {
        let v = Multiplier::hat(&rule, &Float::with_val(prec, x));
        if v.is_zero() {
            return f64::NEG_INFINITY;
        }
        let ln = (v.abs() / &rule.norm).ln().to_f64();
        ln - beta + d * x.sqrt()
    };
    let ratio = (x_hi / x_lo).ln();
    let coarse = (0..points).map(|i| x_lo * (ratio * i as f64 / (points - 1) as f64).exp());
    let fitted = coarse.map(excess).fold(f64::NEG_INFINITY, f64::max);
    let (worst_x, worst) = (0..2 * points - 1)
        .map(|i| {
            let x = x_lo * (ratio * i as f64 / (2 * points - 2) as f64).exp();
            (x, excess(x))
        })
        .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    // peaks of the oscillation fall between coarse nodes; allow that much
    let slack = 0.25;
    if worst > fitted + slack {
        return Err(Error::Construction(format!(
            "multiplier bound violated at x = {worst_x}: excess {worst} > fitted D {fitted} + {slack}"
        )));
    }
    m.decay_constant = fitted.max(worst);
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(256).unwrap()
    }

    #[test]
    fn normalised_and_even() {
        let m = build_multiplier(0.5, 5.0, &ctx()).unwrap();
        assert_eq!(m.eval(&Float::with_val(256, 0)), 1);
        for x in [0.3, 7.0, 123.4, 900.0] {
            let a = m.eval(&Float::with_val(256, x));
            let b = m.eval(&Float::with_val(256, -x));
            assert_eq!(a, b);
            assert!(a.to_f64().abs() <= 1.0);
        }
    }

    #[test]
    fn decays_like_exp_minus_d_sqrt_x() {
        let m = build_multiplier(0.5, 5.0, &ctx()).unwrap();
        assert!(
            m.decay_constant.is_finite() && m.decay_constant < 10.0,
            "D = {}",
            m.decay_constant
        );
        for x in [50.0, 400.0, 1500.0] {
            assert!(m.ln_abs(x, 256) <= m.bound(x) + 0.3);
        }
        // the rate is d: the envelope gap between x and 4x is about d√x
        let peak = |a: f64| {
            (0..200)
                .map(|i| m.ln_abs(a + 0.5 * i as f64, 256))
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let slope = (peak(400.0) - peak(1600.0)) / (40.0 - 20.0);
        assert!((slope - 5.0).abs() < 0.5, "slope {slope}");
    }

    #[test]
    fn grid_evaluation_matches_pointwise() {
        let m = build_multiplier(0.4, 4.0, &ctx()).unwrap();
        let g = m.eval_grid(0.7, 300, 256);
        for k in [0usize, 17, 300] {
            let p = m.eval(&(Float::with_val(256, 0.7) * k as u32));
            let diff = Float::with_val(256, &g[k] - &p).abs().to_f64();
            assert!(diff < 1e-60, "m = {k}: {diff}");
        }
        let c = m.eval_complex(&Complex::from_real(Float::with_val(256, 0.7) * 17u32));
        assert!((c.re.to_f64() - g[17].to_f64()).abs() < 1e-40);
    }

    /// Samples of M on [−X, X] with spacing Δ; their discrete inverse Fourier
    /// transform should vanish outside [−τ, τ] up to the truncation at X, and
    /// match H/Ĥ(0) inside.
    fn leakage(m: &Multiplier, dx: f64, count: usize) -> (f64, f64) {
        let vals: Vec<f64> = m.eval_grid(dx, count, 256).iter().map(|v| v.to_f64()).collect();
        let inv = |t: f64| {
            let mut s = vals[0];
            for (j, v) in vals.iter().enumerate().skip(1) {
                s += 2.0 * v * (t * dx * j as f64).cos();
            }
            s * dx / (2.0 * PI)
        };
        let h0 = 1.0 / {
            // Ĥ(0) by the composite midpoint rule on the bump
            let n = 20000;
            (0..n)
                .map(|i| {
                    let t = m.tau * (2.0 * (i as f64 + 0.5) / n as f64 - 1.0);
                    (-m.beta / (1.0 - (t / m.tau).powi(2))).exp() * 2.0 * m.tau / n as f64
                })
                .sum::<f64>()
        };
        let period = PI / dx;
        let outside = (1..40)
            .map(|i| m.tau + (period - m.tau) * i as f64 / 40.0)
            .map(|t| inv(t).abs())
            .fold(0.0, f64::max);
        let inside = [0.0, 0.3, 0.7]
            .iter()
            .map(|&f| {
                let t = f * m.tau;
                (inv(t) - h0 * (-m.beta / (1.0 - f * f)).exp()).abs()
            })
            .fold(0.0, f64::max);
        (outside / (h0 * (-m.beta).exp()), inside / (h0 * (-m.beta).exp()))
    }

    #[test]
    fn fourier_samples_are_supported_in_type_interval() {
        let m = build_multiplier(0.5, 3.0, &ctx()).unwrap();
        let dx = 2.0;
        let (coarse, _) = leakage(&m, dx, 80);
        let (fine, inside) = leakage(&m, dx, 400);
        assert!(fine <= 1e-10, "leakage {fine}");
        assert!(fine < coarse, "{fine} vs {coarse}");
        assert!(inside < 1e-6, "inside mismatch {inside}");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_multiplier(0.0, 1.0, &ctx()).unwrap_err().is_validation());
        assert!(build_multiplier(1.0, -1.0, &ctx()).unwrap_err().is_validation());
    }
}
