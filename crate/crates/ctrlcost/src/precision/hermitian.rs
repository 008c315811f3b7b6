use rug::{Assign, Float};

use super::complex::Complex;
use super::PrecisionContext;
use crate::error::{Error, Result};

/// Dense Hermitian matrix, stored row-major with exact conjugate symmetry.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    order: usize,
    entries: Vec<Complex>,
}

/// One eigenpair; eigenvectors are unit-norm.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: Float,
    pub vector: Vec<Complex>,
}

impl HermitianMatrix {
    /// Accepts a row-major matrix whose mirror entries agree to one ulp and
    /// re-symmetrizes it exactly from the upper triangle.
    pub fn new(order: usize, entries: Vec<Complex>) -> Result<Self> {
        if order == 0 {
            return Err(Error::validation("order", "must be at least 1"));
        }
        if entries.len() != order * order {
            return Err(Error::validation(
                "entries",
                format!("expected {} entries, got {}", order * order, entries.len()),
            ));
        }
        let prec = entries[0].prec();
        let ulp = Float::with_val(prec, Float::u_exp(1, 1 - prec as i32));
        for j in 0..order {
            for k in j..order {
                let a = &entries[j * order + k];
                let b = &entries[k * order + j];
                let gap = (a - &b.conj()).abs();
                let scale = a.abs().max(&b.abs());
                let allowed = Float::with_val(prec, &scale * &ulp);
                if gap > allowed {
                    return Err(Error::NonHermitian {
                        row: j,
                        col: k,
                        gap: gap.to_f64(),
                    });
                }
            }
        }
        Ok(Self::from_fn(order, prec, |j, k| entries[j * order + k].clone()))
    }

    /// Builds the matrix from its upper triangle; `f` is only called with j ≤ k.
    /// Diagonal imaginary parts are dropped.
    pub fn from_fn(order: usize, prec: u32, mut f: impl FnMut(usize, usize) -> Complex) -> Self {
        let mut entries = vec![Complex::zero(prec); order * order];
        for j in 0..order {
            for k in j..order {
                let v = f(j, k).with_prec(prec);
                if j == k {
                    entries[j * order + j] = Complex::from_real(v.re);
                } else {
                    entries[k * order + j] = v.conj();
                    entries[j * order + k] = v;
                }
            }
        }
        HermitianMatrix { order, entries }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn prec(&self) -> u32 {
        self.entries[0].prec()
    }

    pub fn get(&self, j: usize, k: usize) -> &Complex {
        &self.entries[j * self.order + k]
    }

    pub fn entries(&self) -> &[Complex] {
        &self.entries
    }

    pub fn frobenius_norm(&self) -> Float {
        let mut s = Float::new(self.prec());
        for e in &self.entries {
            s += e.norm_sqr();
        }
        s.sqrt()
    }

    pub fn trace(&self) -> Float {
        let mut s = Float::new(self.prec());
        for j in 0..self.order {
            s += &self.get(j, j).re;
        }
        s
    }

    pub fn mul_vec(&self, x: &[Complex]) -> Vec<Complex> {
        let n = self.order;
        (0..n)
            .map(|j| {
                let mut acc = Complex::zero(self.prec());
                for k in 0..n {
                    acc.add_mul(self.get(j, k), &x[k]);
                }
                acc
            })
            .collect()
    }

    /// xᴴ·M·x (real for Hermitian M).
    pub fn quadratic_form(&self, x: &[Complex]) -> Float {
        let y = self.mul_vec(x);
        let mut acc = Complex::zero(self.prec());
        for (a, b) in x.iter().zip(&y) {
            acc.add_conj_mul(a, b);
        }
        acc.re
    }

    /// Principal submatrix on the given (increasing) indices.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        HermitianMatrix::from_fn(idx.len(), self.prec(), |j, k| self.get(idx[j], idx[k]).clone())
    }

    /// Solves M·x = b by Cholesky factorisation; fails unless M is positive definite.
    pub fn cholesky_solve(&self, b: &[Complex]) -> Result<Vec<Complex>> {
        let n = self.order;
        let p = self.prec();
        let mut l = vec![Complex::zero(p); n * n];
        let mut diag = vec![Float::new(p); n];
        for j in 0..n {
            let mut d = self.get(j, j).re.clone();
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            if d <= 0 {
                return Err(Error::NotPositiveDefinite {
                    pivot: j,
                    value: d.to_f64(),
                });
            }
            let d = d.sqrt();
            for i in (j + 1)..n {
                let mut s = self.get(i, j).clone();
                for k in 0..j {
                    let prod = &l[i * n + k] * &l[j * n + k].conj();
                    s -= &prod;
                }
                s.re /= &d;
                s.im /= &d;
                l[i * n + j] = s;
            }
            l[j * n + j] = Complex::from_real(d.clone());
            diag[j] = d;
        }
        // forward: L y = b
        let mut y: Vec<Complex> = Vec::with_capacity(n);
        for i in 0..n {
            let mut s = b[i].with_prec(p);
            for k in 0..i {
                let prod = &l[i * n + k] * &y[k];
                s -= &prod;
            }
            s.re /= &diag[i];
            s.im /= &diag[i];
            y.push(s);
        }
        // backward: Lᴴ x = y
        let mut x = vec![Complex::zero(p); n];
        for i in (0..n).rev() {
            let mut s = y[i].clone();
            for k in (i + 1)..n {
                let prod = &l[k * n + i].conj() * &x[k];
                s -= &prod;
            }
            s.re /= &diag[i];
            s.im /= &diag[i];
            x[i] = s;
        }
        Ok(x)
    }
}

/// Full eigen-decomposition by cyclic complex Jacobi rotations.
///
/// Each rotation first removes the phase of the pivot, then applies the
/// real symmetric rotation in its stable form, so small eigenvalues of
/// positive definite matrices keep their relative accuracy.
pub fn eig_hermitian(m: &HermitianMatrix, ctx: &PrecisionContext) -> Result<Vec<EigenPair>> {
    let n = m.order();
    let p = ctx.bits();
    let mut a: Vec<Complex> = m.entries().iter().map(|z| z.with_prec(p)).collect();
    let mut v = vec![Complex::zero(p); n * n];
    for j in 0..n {
        v[j * n + j] = Complex::one(p);
    }
    let eps = Float::with_val(p, Float::u_exp(1, -(p as i32)));
    let eps2 = Float::with_val(p, &eps * &eps);
    let fro = Float::with_val(p, m.frobenius_norm());
    let abs_floor = Float::with_val(p, &eps2 * &fro);

    const MAX_SWEEPS: usize = 80;
    let mut t = Float::new(p);
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for pi in 0..n {
            for qi in (pi + 1)..n {
                let x = a[pi * n + qi].clone();
                let r = x.abs();
                if r.is_zero() || r <= abs_floor {
                    continue;
                }
                let app = a[pi * n + pi].re.clone();
                let aqq = a[qi * n + qi].re.clone();
                let r2 = Float::with_val(p, &r * &r);
                let mut rel = Float::with_val(p, &app * &aqq);
                rel.abs_mut();
                rel *= &eps2;
                if r2 <= rel {
                    continue;
                }
                rotated = true;
                // w = e^{−iφ} with x = r e^{iφ}
                let w = Complex::new(Float::with_val(p, &x.re / &r), -Float::with_val(p, &x.im / &r));
                let mut theta = Float::with_val(p, &aqq - &app);
                theta /= &r;
                theta /= 2;
                if theta.is_zero() {
                    t.assign(1);
                } else {
                    let mut h = Float::with_val(p, &theta * &theta);
                    h += 1;
                    let h = h.sqrt();
                    let mut den = theta.clone().abs();
                    den += &h;
                    t.assign(1);
                    t /= &den;
                    if theta.is_sign_negative() {
                        t = -t.clone();
                    }
                }
                let mut c = Float::with_val(p, &t * &t);
                c += 1;
                let c = c.sqrt().recip();
                let s = Float::with_val(p, &t * &c);
                let tr = Float::with_val(p, &t * &r);
                for row in 0..n {
                    if row == pi || row == qi {
                        continue;
                    }
                    let ap = a[row * n + pi].clone();
                    let wq = &w * &a[row * n + qi];
                    let new_p = &ap.scale(&c) - &wq.scale(&s);
                    let new_q = &ap.scale(&s) + &wq.scale(&c);
                    a[pi * n + row] = new_p.conj();
                    a[qi * n + row] = new_q.conj();
                    a[row * n + pi] = new_p;
                    a[row * n + qi] = new_q;
                }
                a[pi * n + pi] = Complex::from_real(Float::with_val(p, &app - &tr));
                a[qi * n + qi] = Complex::from_real(Float::with_val(p, &aqq + &tr));
                a[pi * n + qi] = Complex::zero(p);
                a[qi * n + pi] = Complex::zero(p);
                for row in 0..n {
                    let vp = v[row * n + pi].clone();
                    let wq = &w * &v[row * n + qi];
                    v[row * n + pi] = &vp.scale(&c) - &wq.scale(&s);
                    v[row * n + qi] = &vp.scale(&s) + &wq.scale(&c);
                }
            }
        }
        if !rotated {
            let mut pairs: Vec<EigenPair> = (0..n)
                .map(|j| EigenPair {
                    value: a[j * n + j].re.clone(),
                    vector: (0..n).map(|row| v[row * n + j].clone()).collect(),
                })
                .collect();
            pairs.sort_by(|x, y| x.value.partial_cmp(&y.value).expect("eigenvalues are finite"));
            return Ok(pairs);
        }
    }
    let mut off = Float::new(p);
    for j in 0..n {
        for k in 0..n {
            if j != k {
                off += a[j * n + k].norm_sqr();
            }
        }
    }
    Err(Error::NoConvergence {
        sweeps: MAX_SWEEPS,
        residual: off.sqrt().to_f64(),
    })
}

/// Smallest eigenvalue of `m`.
pub fn min_eigenvalue(m: &HermitianMatrix, ctx: &PrecisionContext) -> Result<Float> {
    Ok(eig_hermitian(m, ctx)?.swap_remove(0).value)
}
