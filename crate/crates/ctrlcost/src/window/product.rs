use rug::Float;
use std::f64::consts::PI;

use super::sequence::{SpectralSequence, TailModel};
use crate::error::{Error, Result};
use crate::precision::{Complex, PrecisionContext};

/// F_n(z) = ∏_{k≠n} (λ_k − z)/(λ_k − λ_n), with the stored λ_k used up to the
/// sequence length and the tail model beyond.
///
/// Factors where the stored value equals the model are absorbed into the
/// closed form S(z) of the model product, so only perturbed indices appear
/// explicitly:
///
/// F_n(z) = S_n(z)/S_n(λ_n) · ∏_{k perturbed, k≠n} (λ_k − z)(κ_k − λ_n) / ((λ_k − λ_n)(κ_k − z)),
///
/// where κ_k is the model value and S_n(z) = S(z)/(1 − z/κ_n).
#[derive(Clone, Debug)]
pub struct ProductF {
    seq: SpectralSequence,
    n: usize,
    perturbed: Vec<usize>,
}

impl ProductF {
    pub fn new(seq: &SpectralSequence, n: usize) -> Result<Self> {
        if n == 0 || n > seq.len() {
            return Err(Error::validation("n", format!("index {n} outside 1..={}", seq.len())));
        }
        let tail = seq.tail();
        let perturbed = (1..=seq.len()).filter(|&k| seq.value(k) != tail.value(k)).collect();
        Ok(ProductF {
            seq: seq.clone(),
            n,
            perturbed,
        })
    }

    pub fn center(&self) -> usize {
        self.n
    }

    pub fn lambda_n(&self) -> f64 {
        self.seq.value(self.n)
    }

    pub fn sequence(&self) -> &SpectralSequence {
        &self.seq
    }

    /// Largest explicit pole κ_k or zero λ_k; beyond it only the model remains.
    pub fn explicit_extent(&self) -> f64 {
        let tail = self.seq.tail();
        let mut e = tail.value(self.n).max(self.lambda_n());
        for &k in &self.perturbed {
            e = e.max(self.seq.value(k)).max(tail.value(k));
        }
        e
    }

    /// Model values κ that the closed form divides out: κ_n and the perturbed κ_k.
    fn removed_poles(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let tail = self.seq.tail();
        std::iter::once(self.n)
            .chain(self.perturbed.iter().copied().filter(move |&k| k != self.n))
            .map(move |k| (k, tail.value(k)))
    }

    /// Index j ≠ n with z = κ_j an implicit zero, when z is exactly one.
    fn implicit_zero(&self, z: &Complex) -> bool {
        if !z.im.is_zero() || z.re.is_sign_negative() {
            return false;
        }
        let x = z.re.to_f64();
        let tail = self.seq.tail();
        let j = (x.sqrt() + tail.offset()).round() as usize;
        j >= 1
            && j != self.n
            && Float::with_val(z.prec(), tail.value(j)) == z.re
            && self.perturbed.binary_search(&j).is_err()
    }

    pub fn eval(&self, z: &Complex) -> Complex {
        let p = z.prec();
        let ln = self.lambda_n();
        if z.im.is_zero() && z.re == ln {
            return Complex::one(p);
        }
        if self.implicit_zero(z) {
            return Complex::zero(p);
        }
        // guard bits against the cancellation in S(z)/(κ − z) near a removed pole
        let zf = z.to_f64();
        let mut closest = f64::INFINITY;
        let mut exact = None;
        for (k, kappa) in self.removed_poles() {
            let rel = ((zf.0 - kappa).hypot(zf.1)) / kappa;
            if z.im.is_zero() && z.re == kappa {
                exact = Some(k);
            }
            closest = closest.min(rel);
        }
        let guard = if closest > 0.0 && closest < 1.0 {
            (-closest.log2()).ceil() as u32 + 16
        } else {
            16
        };
        let q = p + guard;
        let zq = z.with_prec(q);
        let s = self.reduced_model(&zq, exact);
        let mut acc = &s * &self.normalizer(q);
        for &k in self.perturbed.iter().filter(|&&k| k != self.n) {
            let lk = Float::with_val(q, self.seq.value(k));
            let num = &Complex::from_real(lk) - &zq;
            acc = &acc * &num.scale_f64(1.0 / (self.seq.value(k) - ln));
        }
        acc.with_prec(p)
    }

    /// S(z)/[(1 − z/κ_n)·∏_{perturbed k≠n}(κ_k − z)], with the removable
    /// limit used at z = κ_exact.
    fn reduced_model(&self, z: &Complex, exact: Option<usize>) -> Complex {
        let q = z.prec();
        let tail = self.seq.tail();
        let mut s = match exact {
            Some(j) => {
                let lim = model_limit(tail, j, q);
                if j == self.n {
                    Complex::from_real(lim)
                } else {
                    // S(z)/(κ_j − z) = [S(z)/(1 − z/κ_j)]/κ_j
                    Complex::from_real(lim / tail.value(j))
                }
            }
            None => model_product(tail, z),
        };
        for (k, kappa) in self.removed_poles() {
            if Some(k) == exact {
                continue;
            }
            let d = &Complex::from_real(Float::with_val(q, kappa)) - z;
            s = if k == self.n {
                &s.scale(&Float::with_val(q, kappa)) / &d
            } else {
                &s / &d
            };
        }
        s
    }

    /// Reciprocal of the reduced model at λ_n, the value making F_n(λ_n) = 1.
    fn normalizer(&self, q: u32) -> Complex {
        let z = Complex::from_f64(q, self.lambda_n(), 0.0);
        let exact = self
            .removed_poles()
            .find(|&(_, kappa)| kappa == self.lambda_n())
            .map(|(k, _)| k);
        self.reduced_model(&z, exact).recip()
    }

    pub fn eval_real(&self, x: &Float) -> Float {
        self.eval(&Complex::from_real(x.clone())).re
    }

    /// Upper estimate of ln|F_n(x)| for real x, in double precision.
    ///
    /// Exact for x ≤ 0; for x > 0 the oscillating model factor is replaced by
    /// its modulus bound, so the result is an envelope. Returns +∞ close to
    /// a removed pole, where the estimate is meaningless.
    pub fn ln_envelope(&self, x: f64) -> f64 {
        let ln = self.lambda_n();
        let tail = self.seq.tail();
        let mut v = ln_model_envelope(tail, x) - self.ln_norm_f64();
        for (k, kappa) in self.removed_poles() {
            let rel = (x - kappa).abs() / kappa;
            if rel < 0.25 {
                return f64::INFINITY;
            }
            if k == self.n {
                v -= (1.0 - x / kappa).abs().ln();
            } else {
                let lk = self.seq.value(k);
                v += ((lk - x) / ((lk - ln) * (kappa - x))).abs().ln();
            }
        }
        v
    }

    fn ln_norm_f64(&self) -> f64 {
        // ln of the reduced model at λ_n
        let q = 128;
        let r = self.normalizer(q);
        -r.abs().ln().to_f64()
    }
}

/// S(z) = ∏_k (1 − z/κ_k) of the tail model.
pub(crate) fn model_product(tail: TailModel, z: &Complex) -> Complex {
    let q = z.prec();
    let pi = crate::precision::pi(q);
    match tail {
        TailModel::Squares => {
            if z.is_zero() {
                return Complex::one(q);
            }
            let w = z.sqrt().scale(&pi);
            &w.sin() / &w
        }
        TailModel::HalfSquares => z.sqrt().scale(&pi).cos(),
    }
}

/// lim_{z→κ_j} S(z)/(1 − z/κ_j).
fn model_limit(tail: TailModel, j: usize, q: u32) -> Float {
    let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
    match tail {
        TailModel::Squares => Float::with_val(q, sign * 0.5),
        TailModel::HalfSquares => {
            let h = Float::with_val(q, j as f64 - 0.5);
            crate::precision::pi(q) * h * sign / 2u32
        }
    }
}

/// ln|S(x)| for x ≤ 0, and a bound on it for x > 0.
fn ln_model_envelope(tail: TailModel, x: f64) -> f64 {
    let r = PI * x.abs().sqrt();
    if x <= 0.0 {
        // ln sinh(r) and ln cosh(r) without overflow
        let ln_half_exp = r - std::f64::consts::LN_2;
        match tail {
            TailModel::Squares => {
                if r < 1e-8 {
                    0.0
                } else {
                    ln_half_exp + (-(-2.0 * r).exp()).ln_1p() - r.ln()
                }
            }
            TailModel::HalfSquares => ln_half_exp + (-2.0 * r).exp().ln_1p(),
        }
    } else {
        match tail {
            TailModel::Squares => (1.0f64).min(1.0 / r).ln(),
            TailModel::HalfSquares => 0.0,
        }
    }
}

/// Truncated product ∏_{k≤K, k≠n} (λ_k − z)/(λ_k − λ_n) with a bound on the
/// relative size of the omitted tail, |F_n/F_n^K − 1| ≤ tail_bound.
pub fn evaluate_f(
    seq: &SpectralSequence,
    n: usize,
    z: &Complex,
    truncation: usize,
    ctx: &PrecisionContext,
) -> Result<(Complex, f64)> {
    if n == 0 || n > seq.len() {
        return Err(Error::validation("n", format!("index {n} outside 1..={}", seq.len())));
    }
    if truncation < 2 * n {
        return Err(Error::Truncation(format!("K = {truncation} < 2n = {}", 2 * n)));
    }
    let ln = seq.value(n);
    let (zr, zi) = z.to_f64();
    let w = (zr - ln).hypot(zi);
    let lk = seq.extended(truncation);
    if w >= lk - ln {
        return Err(Error::Truncation(format!(
            "|z − λ_n| = {w} is not below λ_K − λ_n = {}",
            lk - ln
        )));
    }
    let tail_bound = tail_bound(seq.tail(), ln, w, truncation)?;
    let p = ctx.bits();
    let zp = z.with_prec(p);
    let lnf = Float::with_val(p, ln);
    let mut num = Complex::one(p);
    let mut den = Float::with_val(p, 1);
    for k in (1..=truncation).filter(|&k| k != n) {
        let l = Float::with_val(p, seq.extended(k));
        num = &num * &(&Complex::from_real(l.clone()) - &zp);
        den *= Float::with_val(p, &l - &lnf);
    }
    Ok((num.scale(&den.recip()), tail_bound))
}

/// e^{|w|Σ_{k>K} 1/((k−o)² − λ_n − |w|)} − 1, using the integral bound
/// Σ_{j>J} 1/(j² − b) ≤ ln((J + √b)/(J − √b))/(2√b).
fn tail_bound(tail: TailModel, ln: f64, w: f64, k: usize) -> Result<f64> {
    let j = k as f64 - tail.offset();
    let b = ln + w;
    let rb = b.sqrt();
    if j <= rb {
        return Err(Error::Truncation(format!("K = {k} is too small for |z − λ_n| = {w}")));
    }
    let sum = ((j + rb) / (j - rb)).ln() / (2.0 * rb);
    Ok((w * sum).exp_m1())
}

/// Smallest K ≥ max(2n, 4·floor) whose tail bound is ≤ tol at distance w.
pub fn required_truncation(seq: &SpectralSequence, n: usize, w: f64, tol: f64, floor: usize) -> usize {
    let ln = seq.value(n);
    let mut k = (2 * n).max(4 * floor).max(1);
    loop {
        let ok = seq.extended(k) - ln > w && tail_bound(seq.tail(), ln, w, k).map(|b| b <= tol).unwrap_or(false);
        if ok {
            return k;
        }
        k += 1 + k / 8;
    }
}

/// A_ε = max ln|F_n(λ_n + z)| − (√2π + ε)√|z| over rays in the upper half
/// plane and radii up to `radius`.
pub fn fit_growth_constant(f: &ProductF, eps: f64, radius: f64, ctx: &PrecisionContext) -> f64 {
    let rate = 2f64.sqrt() * PI + eps;
    let rays = 8;
    let radii = 64;
    let ln = f.lambda_n();
    let mut a = f64::NEG_INFINITY;
    for i in 0..=rays {
        let phi = PI * i as f64 / rays as f64;
        for j in 0..radii {
            let r = radius.powf(j as f64 / (radii - 1) as f64);
            let z = Complex::from_f64(ctx.bits(), ln + r * phi.cos(), r * phi.sin());
            let v = f.eval(&z).abs();
            if v.is_zero() {
                continue;
            }
            a = a.max(v.ln().to_f64() - rate * r.sqrt());
        }
    }
    a
}
