use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use rug::float::Constant;
use rug::{Assign, Float};

/// Complex number over two MPFR floats of equal precision.
///
/// Binary operations produce results at the precision of the left operand.
#[derive(Clone, PartialEq)]
pub struct Complex {
    pub re: Float,
    pub im: Float,
}

impl fmt::Debug for Complex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:e} {:+e}i)", self.re.to_f64(), self.im.to_f64())
    }
}

impl Complex {
    pub fn new(re: Float, im: Float) -> Self {
        Complex { re, im }
    }

    pub fn zero(prec: u32) -> Self {
        Complex {
            re: Float::new(prec),
            im: Float::new(prec),
        }
    }

    pub fn one(prec: u32) -> Self {
        Complex {
            re: Float::with_val(prec, 1),
            im: Float::new(prec),
        }
    }

    pub fn i(prec: u32) -> Self {
        Complex {
            re: Float::new(prec),
            im: Float::with_val(prec, 1),
        }
    }

    pub fn from_f64(prec: u32, re: f64, im: f64) -> Self {
        Complex {
            re: Float::with_val(prec, re),
            im: Float::with_val(prec, im),
        }
    }

    pub fn from_real(re: Float) -> Self {
        let im = Float::new(re.prec());
        Complex { re, im }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    /// Round both parts to a new precision.
    pub fn with_prec(&self, prec: u32) -> Self {
        Complex {
            re: Float::with_val(prec, &self.re),
            im: Float::with_val(prec, &self.im),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Complex {
            re: self.re.clone(),
            im: Float::with_val(self.prec(), -&self.im),
        }
    }

    pub fn norm_sqr(&self) -> Float {
        let p = self.prec();
        let mut out = Float::with_val(p, &self.re * &self.re);
        out += Float::with_val(p, &self.im * &self.im);
        out
    }

    pub fn abs(&self) -> Float {
        self.re.clone().hypot(&self.im)
    }

    /// Argument in (−π, π].
    pub fn arg(&self) -> Float {
        self.im.clone().atan2(&self.re)
    }

    pub fn scale(&self, r: &Float) -> Self {
        let p = self.prec();
        Complex {
            re: Float::with_val(p, &self.re * r),
            im: Float::with_val(p, &self.im * r),
        }
    }

    pub fn scale_f64(&self, r: f64) -> Self {
        let p = self.prec();
        Complex {
            re: Float::with_val(p, &self.re * r),
            im: Float::with_val(p, &self.im * r),
        }
    }

    /// Multiplication by the imaginary unit.
    pub fn mul_i(&self) -> Self {
        Complex {
            re: Float::with_val(self.prec(), -&self.im),
            im: self.re.clone(),
        }
    }

    /// e^{iθ}.
    pub fn cis(theta: &Float) -> Self {
        let mut s = theta.clone();
        let mut c = Float::new(theta.prec());
        s.sin_cos_mut(&mut c);
        Complex { re: c, im: s }
    }

    pub fn exp(&self) -> Self {
        let m = self.re.clone().exp();
        Complex::cis(&self.im).scale(&m)
    }

    /// Principal logarithm.
    pub fn ln(&self) -> Self {
        Complex {
            re: self.abs().ln(),
            im: self.arg(),
        }
    }

    /// Principal square root (branch cut on the negative axis).
    pub fn sqrt(&self) -> Self {
        let p = self.prec();
        if self.is_zero() {
            return Complex::zero(p);
        }
        let r = self.abs();
        let mut re = Float::with_val(p, &r + &self.re);
        re /= 2;
        let re = re.sqrt();
        let mut im = Float::with_val(p, &r - &self.re);
        im /= 2;
        let mut im = im.sqrt();
        if self.im.is_sign_negative() {
            im = -im;
        }
        Complex { re, im }
    }

    pub fn sin(&self) -> Self {
        let mut s = self.re.clone();
        let mut c = Float::new(self.prec());
        s.sin_cos_mut(&mut c);
        let mut sh = self.im.clone();
        let mut ch = Float::new(self.prec());
        sh.sinh_cosh_mut(&mut ch);
        Complex { re: s * ch, im: c * sh }
    }

    pub fn cos(&self) -> Self {
        let mut s = self.re.clone();
        let mut c = Float::new(self.prec());
        s.sin_cos_mut(&mut c);
        let mut sh = self.im.clone();
        let mut ch = Float::new(self.prec());
        sh.sinh_cosh_mut(&mut ch);
        Complex {
            re: c * ch,
            im: -(s * sh),
        }
    }

    pub fn recip(&self) -> Self {
        let n = self.norm_sqr();
        let p = self.prec();
        Complex {
            re: Float::with_val(p, &self.re / &n),
            im: -Float::with_val(p, &self.im / &n),
        }
    }

    /// self += a·b without intermediate allocation of the product.
    pub fn add_mul(&mut self, a: &Complex, b: &Complex) {
        let p = self.prec();
        let mut t = Float::with_val(p, &a.re * &b.re);
        self.re += &t;
        t.assign(&a.im * &b.im);
        self.re -= &t;
        t.assign(&a.re * &b.im);
        self.im += &t;
        t.assign(&a.im * &b.re);
        self.im += &t;
    }

    /// self += conj(a)·b.
    pub fn add_conj_mul(&mut self, a: &Complex, b: &Complex) {
        let p = self.prec();
        let mut t = Float::with_val(p, &a.re * &b.re);
        self.re += &t;
        t.assign(&a.im * &b.im);
        self.re += &t;
        t.assign(&a.re * &b.im);
        self.im += &t;
        t.assign(&a.im * &b.re);
        self.im -= &t;
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

/// π at the given precision.
pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

impl<'a> Add<&'a Complex> for &'a Complex {
    type Output = Complex;
    fn add(self, rhs: &'a Complex) -> Complex {
        let p = self.prec();
        Complex {
            re: Float::with_val(p, &self.re + &rhs.re),
            im: Float::with_val(p, &self.im + &rhs.im),
        }
    }
}

impl<'a> Sub<&'a Complex> for &'a Complex {
    type Output = Complex;
    fn sub(self, rhs: &'a Complex) -> Complex {
        let p = self.prec();
        Complex {
            re: Float::with_val(p, &self.re - &rhs.re),
            im: Float::with_val(p, &self.im - &rhs.im),
        }
    }
}

impl<'a> Mul<&'a Complex> for &'a Complex {
    type Output = Complex;
    fn mul(self, rhs: &'a Complex) -> Complex {
        let mut out = Complex::zero(self.prec());
        out.add_mul(self, rhs);
        out
    }
}

impl<'a> Div<&'a Complex> for &'a Complex {
    type Output = Complex;
    fn div(self, rhs: &'a Complex) -> Complex {
        let n = rhs.norm_sqr();
        let mut out = Complex::zero(self.prec());
        out.add_conj_mul(rhs, self);
        out.re /= &n;
        out.im /= &n;
        out
    }
}

impl<'a> Mul<&'a Float> for &'a Complex {
    type Output = Complex;
    fn mul(self, rhs: &'a Float) -> Complex {
        self.scale(rhs)
    }
}

impl Neg for Complex {
    type Output = Complex;
    fn neg(self) -> Complex {
        Complex {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl Neg for &Complex {
    type Output = Complex;
    fn neg(self) -> Complex {
        self.clone().neg()
    }
}

impl Add<&Complex> for Complex {
    type Output = Complex;
    fn add(mut self, rhs: &Complex) -> Complex {
        self += rhs;
        self
    }
}

impl Sub<&Complex> for Complex {
    type Output = Complex;
    fn sub(mut self, rhs: &Complex) -> Complex {
        self -= rhs;
        self
    }
}

impl Mul<&Complex> for Complex {
    type Output = Complex;
    fn mul(self, rhs: &Complex) -> Complex {
        &self * rhs
    }
}

impl AddAssign<&Complex> for Complex {
    fn add_assign(&mut self, rhs: &Complex) {
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}

impl SubAssign<&Complex> for Complex {
    fn sub_assign(&mut self, rhs: &Complex) {
        self.re -= &rhs.re;
        self.im -= &rhs.im;
    }
}

impl MulAssign<&Complex> for Complex {
    fn mul_assign(&mut self, rhs: &Complex) {
        *self = &*self * rhs;
    }
}

impl MulAssign<&Float> for Complex {
    fn mul_assign(&mut self, rhs: &Float) {
        self.re *= rhs;
        self.im *= rhs;
    }
}
