use rug::Float;

use super::complex::Complex;
use super::PrecisionContext;
use crate::error::{Error, Result};

/// Values that can be accumulated by a quadrature rule.
pub trait Quadrable: Clone {
    fn zero_like(prec: u32) -> Self;
    fn add_weighted(&mut self, w: &Float, v: &Self);
    fn scale_by(&mut self, s: &Float);
    /// Magnitude used for convergence tests.
    fn magnitude(&self) -> Float;
    fn minus(&self, other: &Self) -> Self;
}

impl Quadrable for Float {
    fn zero_like(prec: u32) -> Self {
        Float::new(prec)
    }
    fn add_weighted(&mut self, w: &Float, v: &Self) {
        *self += Float::with_val(self.prec(), w * v);
    }
    fn scale_by(&mut self, s: &Float) {
        *self *= s;
    }
    fn magnitude(&self) -> Float {
        self.clone().abs()
    }
    fn minus(&self, other: &Self) -> Self {
        Float::with_val(self.prec(), self - other)
    }
}

impl Quadrable for Complex {
    fn zero_like(prec: u32) -> Self {
        Complex::zero(prec)
    }
    fn add_weighted(&mut self, w: &Float, v: &Self) {
        *self += &v.scale(w);
    }
    fn scale_by(&mut self, s: &Float) {
        *self *= s;
    }
    fn magnitude(&self) -> Float {
        self.abs()
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
}

/// Gauss–Legendre rule on [−1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<Float>,
    weights: Vec<Float>,
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: &Float) -> (Float, Float) {
    let p = x.prec();
    let mut p0 = Float::with_val(p, 1);
    let mut p1 = x.clone();
    for k in 2..=n {
        let kf = k as u32;
        let mut next = Float::with_val(p, x * &p1);
        next *= 2 * kf - 1;
        next -= Float::with_val(p, &p0 * (kf - 1));
        next /= kf;
        p0 = std::mem::replace(&mut p1, next);
    }
    if n == 0 {
        return (Float::with_val(p, 1), Float::new(p));
    }
    // P_n' = n (x P_n − P_{n−1}) / (x² − 1)
    let mut num = Float::with_val(p, x * &p1);
    num -= &p0;
    num *= n as u32;
    let mut den = Float::with_val(p, x * x);
    den -= 1;
    (p1, num / den)
}

impl GaussLegendre {
    pub fn new(n: usize, ctx: &PrecisionContext) -> Result<Self> {
        if n == 0 {
            return Err(Error::validation("nodes", "need at least one node"));
        }
        let p = ctx.bits() + 32;
        let mut nodes = vec![Float::new(p); n];
        let mut weights = vec![Float::new(p); n];
        let tol = Float::with_val(p, Float::u_exp(1, -(ctx.bits() as i32) - 8));
        for i in 0..n.div_ceil(2) {
            let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut x = Float::with_val(p, guess);
            let mut dp;
            let mut iters = 0;
            loop {
                let (pn, d) = legendre(n, &x);
                dp = d;
                let dx = Float::with_val(p, &pn / &dp);
                x -= &dx;
                iters += 1;
                if dx.abs() <= tol || iters > 100 {
                    break;
                }
            }
            let (_, d) = legendre(n, &x);
            dp = d;
            // w = 2 / ((1 − x²) P_n'(x)²)
            let mut one_minus = Float::with_val(p, &x * &x);
            one_minus = Float::with_val(p, 1 - &one_minus);
            let w = Float::with_val(p, 2) / (one_minus * Float::with_val(p, &dp * &dp));
            nodes[i] = x.clone();
            weights[i] = w.clone();
            nodes[n - 1 - i] = -x;
            weights[n - 1 - i] = w;
        }
        let bits = ctx.bits();
        Ok(GaussLegendre {
            nodes: nodes.into_iter().map(|v| Float::with_val(bits, v)).collect(),
            weights: weights.into_iter().map(|v| Float::with_val(bits, v)).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights on [−1, 1] rounded to double precision.
    pub fn to_f64(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.nodes.iter().map(Float::to_f64).collect(),
            self.weights.iter().map(Float::to_f64).collect(),
        )
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: &Float, b: &Float) -> (Vec<Float>, Vec<Float>) {
        let p = self.nodes[0].prec();
        let mut half = Float::with_val(p, b - a);
        half /= 2;
        let mut mid = Float::with_val(p, a + b);
        mid /= 2;
        let xs = self
            .nodes
            .iter()
            .map(|x| Float::with_val(p, x * &half) + &mid)
            .collect();
        let ws = self.weights.iter().map(|w| Float::with_val(p, w * &half)).collect();
        (xs, ws)
    }

    pub fn integrate<V: Quadrable>(&self, a: &Float, b: &Float, mut f: impl FnMut(&Float) -> V) -> V {
        let (xs, ws) = self.mapped(a, b);
        let mut acc = V::zero_like(self.nodes[0].prec());
        for (x, w) in xs.iter().zip(&ws) {
            acc.add_weighted(w, &f(x));
        }
        acc
    }
}

/// Fixed-order Gauss–Legendre integral of `f` over [a, b].
pub fn gauss_legendre<V: Quadrable>(
    f: impl FnMut(&Float) -> V,
    a: &Float,
    b: &Float,
    nodes: usize,
    ctx: &PrecisionContext,
) -> Result<V> {
    if a >= b {
        return Err(Error::validation("interval", "need a < b"));
    }
    Ok(GaussLegendre::new(nodes, ctx)?.integrate(a, b, f))
}

/// Doubles the node count from 16 until two estimates agree to `tol`
/// (relative to the estimate, or absolute when it is tiny); caps at 4096.
pub fn integrate_adaptive<V: Quadrable>(
    mut f: impl FnMut(&Float) -> V,
    a: &Float,
    b: &Float,
    tol: f64,
    ctx: &PrecisionContext,
) -> Result<V> {
    if a >= b {
        return Err(Error::validation("interval", "need a < b"));
    }
    let mut n = 16;
    let mut prev = GaussLegendre::new(n, ctx)?.integrate(a, b, &mut f);
    while n < 4096 {
        n *= 2;
        let next = GaussLegendre::new(n, ctx)?.integrate(a, b, &mut f);
        let diff = next.minus(&prev).magnitude().to_f64();
        let scale = next.magnitude().to_f64().max(1.0);
        if diff <= tol * scale {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Truncation(format!(
        "adaptive quadrature did not reach {tol:e} with 4096 nodes"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::complex::pi;

    #[test]
    fn two_nodes_integrate_cubics_exactly() {
        let ctx = PrecisionContext::new(128).unwrap();
        let zero = ctx.float(0.0);
        let one = ctx.float(1.0);
        let v: Float = gauss_legendre(|x| Float::with_val(128, x * x), &zero, &one, 2, &ctx).unwrap();
        let third = Float::with_val(128, 1) / 3u32;
        assert!((v - third).abs() < 1e-37);
    }

    #[test]
    fn constant_over_symmetric_interval() {
        let ctx = PrecisionContext::default();
        let v: Float = gauss_legendre(|_| ctx.float(1.0), &ctx.float(-1.0), &ctx.float(1.0), 5, &ctx).unwrap();
        assert!((v - 2u32).abs() < 1e-70);
    }

    #[test]
    fn sine_squared_to_sixty_digits() {
        let ctx = PrecisionContext::default();
        let b = pi(ctx.bits());
        let v: Float = gauss_legendre(
            |x| {
                let s = x.clone().sin();
                Float::with_val(256, &s * &s)
            },
            &ctx.float(0.0),
            &b,
            64,
            &ctx,
        )
        .unwrap();
        let exact = b / 2u32;
        assert!((v - exact).abs() < 1e-60);
    }

    #[test]
    fn zero_nodes_rejected() {
        let ctx = PrecisionContext::default();
        let r = gauss_legendre(|_| ctx.float(1.0), &ctx.float(0.0), &ctx.float(1.0), 0, &ctx);
        assert!(matches!(r, Err(Error::Validation { .. })));
    }

    #[test]
    fn complex_integrand() {
        let ctx = PrecisionContext::default();
        // ∫₀^π e^{ix} dx = 2i
        let v: Complex = integrate_adaptive(Complex::cis, &ctx.float(0.0), &pi(256), 1e-60, &ctx).unwrap();
        assert!(v.re.clone().abs() < 1e-60);
        assert!((v.im - 2u32).abs() < 1e-60);
    }
}
