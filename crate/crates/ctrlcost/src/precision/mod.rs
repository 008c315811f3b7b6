//! Multiprecision arithmetic: a complex type over MPFR floats, dense
//! Hermitian matrices with a Jacobi eigen-solver, and Gauss–Legendre rules.

mod complex;
mod hermitian;
mod quadrature;

pub use complex::{pi, Complex};
pub use hermitian::{eig_hermitian, min_eigenvalue, EigenPair, HermitianMatrix};
pub use quadrature::{gauss_legendre, integrate_adaptive, GaussLegendre, Quadrable};

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Working precision shared by a computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrecisionContext {
    mantissa_bits: u32,
}

impl Default for PrecisionContext {
    fn default() -> Self {
        PrecisionContext { mantissa_bits: 256 }
    }
}

impl PrecisionContext {
    pub fn new(mantissa_bits: u32) -> Result<Self> {
        if mantissa_bits < 64 {
            return Err(Error::validation("mantissa_bits", format!("{mantissa_bits} < 64")));
        }
        Ok(PrecisionContext { mantissa_bits })
    }

    pub fn bits(&self) -> u32 {
        self.mantissa_bits
    }

    /// Same context with at least `bits` of mantissa.
    pub fn at_least(&self, bits: u32) -> Self {
        PrecisionContext {
            mantissa_bits: self.mantissa_bits.max(bits),
        }
    }

    pub fn float(&self, v: f64) -> Float {
        Float::with_val(self.mantissa_bits, v)
    }

    pub fn zero(&self) -> Complex {
        Complex::zero(self.mantissa_bits)
    }

    pub fn pi(&self) -> Float {
        pi(self.mantissa_bits)
    }

    /// 2^{−bits}.
    pub fn epsilon(&self) -> Float {
        Float::with_val(self.mantissa_bits, Float::u_exp(1, -(self.mantissa_bits as i32)))
    }

    /// Tolerance used by the eigen-solver contract, 2^{−bits/2}.
    pub fn half_epsilon(&self) -> Float {
        Float::with_val(self.mantissa_bits, Float::u_exp(1, -((self.mantissa_bits / 2) as i32)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::default()
    }

    #[test]
    fn rejects_short_mantissa() {
        assert!(PrecisionContext::new(53).is_err());
        assert!(PrecisionContext::new(64).is_ok());
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let c = ctx();
        let m = HermitianMatrix::from_fn(3, c.bits(), |j, k| if j == k { Complex::one(256) } else { c.zero() });
        let e = eig_hermitian(&m, &c).unwrap();
        for pair in &e {
            assert_eq!(pair.value, 1);
        }
    }

    #[test]
    fn diagonal_sorted_ascending() {
        let c = ctx();
        let d = [2.0, -1.0];
        let m = HermitianMatrix::from_fn(2, 256, |j, k| {
            if j == k {
                Complex::from_f64(256, d[j], 0.0)
            } else {
                c.zero()
            }
        });
        let e = eig_hermitian(&m, &c).unwrap();
        assert_eq!(e[0].value, -1);
        assert_eq!(e[1].value, 2);
    }

    #[test]
    fn two_by_two_with_phase() {
        // [[1, i],[−i, 1]] has eigenvalues 0 and 2
        let c = ctx();
        let m = HermitianMatrix::from_fn(2, 256, |j, k| if j == k { Complex::one(256) } else { Complex::i(256) });
        let e = eig_hermitian(&m, &c).unwrap();
        assert!(e[0].value.clone().abs() < 1e-70);
        assert!((e[1].value.clone() - 2u32).abs() < 1e-70);
        let r: Vec<Complex> = m.mul_vec(&e[1].vector);
        for (a, b) in r.iter().zip(&e[1].vector) {
            assert!((a - &b.scale_f64(2.0)).abs() < 1e-70);
        }
    }

    #[test]
    fn asymmetric_input_rejected() {
        let mut entries = vec![Complex::one(128); 4];
        entries[1] = Complex::from_f64(128, 0.5, 0.0);
        entries[2] = Complex::from_f64(128, 0.5, 1e-20);
        assert!(matches!(
            HermitianMatrix::new(2, entries),
            Err(Error::NonHermitian { .. })
        ));
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let c = ctx();
        let m = HermitianMatrix::from_fn(3, 256, |j, k| {
            if j == k {
                Complex::from_f64(256, 4.0 + j as f64, 0.0)
            } else {
                Complex::from_f64(256, 0.5, 0.25 * (k as f64 - j as f64))
            }
        });
        let b: Vec<Complex> = (0..3).map(|j| Complex::from_f64(256, j as f64, 1.0)).collect();
        let x = m.cholesky_solve(&b).unwrap();
        let r = m.mul_vec(&x);
        for (u, v) in r.iter().zip(&b) {
            assert!((u - v).abs() < 1e-70);
        }
        let _ = c;
    }
}
