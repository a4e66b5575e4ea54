//! Double-double real and complex scalars.
//!
//! Every table in the crate is stored in [`Cdd`]. Pairings against
//! non-leading eigenvalues multiply rounding errors by `(rho/|lambda|)^n`,
//! which exhausts `f64` long before the word sums become expensive; the
//! ~106-bit significand here keeps those sums meaningful to 1e-20 and beyond.
//!
//! The arithmetic follows the classical Dekker/Knuth error-free
//! transformations (Hida, Li & Bailey's QD formulation), using a fused
//! multiply-add for the exact product.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

const LN_2: Dd = Dd { hi: std::f64::consts::LN_2, lo: 2.319_046_813_846_299_6e-17 };
const FRAC_PI_2: Dd = Dd { hi: std::f64::consts::FRAC_PI_2, lo: 6.123_233_995_736_766e-17 };

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub const fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn hi(self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    /// Multiplies by `2^k` exactly.
    #[inline]
    fn ldexp(self, k: i32) -> Self {
        let s = 2f64.powi(k);
        Dd { hi: self.hi * s, lo: self.lo * s }
    }

    pub fn recip(self) -> Self {
        Dd::ONE / self
    }

    pub fn sqr(self) -> Self {
        self * self
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let y = self.hi.sqrt();
        let y2 = Dd::from_f64(y).sqr();
        let corr = (self - y2).hi / (2.0 * y);
        let (hi, lo) = quick_two_sum(y, corr);
        Dd { hi, lo }
    }

    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Dd::ONE;
        }
        let mut base = self;
        let mut e = n.unsigned_abs();
        let mut acc = Dd::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base = base.sqr();
            e >>= 1;
        }
        if n < 0 {
            acc.recip()
        } else {
            acc
        }
    }

    /// Natural exponential, accurate to a few units in the last place.
    pub fn exp(self) -> Self {
        if self.hi > 709.7 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::ONE;
        }
        // x = k ln2 + r, |r| <= ln2/2, then r is scaled by 2^-10 so the
        // Taylor series converges after a dozen terms.
        let k = (self.hi / LN_2.hi).round();
        let r = (self - LN_2 * Dd::from_f64(k)).ldexp(-10);
        // s = exp(r) - 1
        let mut term = r;
        let mut s = r;
        for i in 2..=14 {
            term = term * r / Dd::from_f64(i as f64);
            s += term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        // exp(2x) - 1 = (exp(x) - 1)(exp(x) - 1 + 2)
        for _ in 0..10 {
            s = s * (s + Dd::from_f64(2.0));
        }
        (s + Dd::ONE).ldexp(k as i32)
    }

    /// Natural logarithm by Newton refinement of the `f64` estimate.
    pub fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::from_f64(f64::NAN);
        }
        let mut y = Dd::from_f64(self.hi.ln());
        for _ in 0..2 {
            y = y + self * (-y).exp() - Dd::ONE;
        }
        y
    }

    /// Simultaneous sine and cosine.
    pub fn sin_cos(self) -> (Self, Self) {
        if self.hi == 0.0 && self.lo == 0.0 {
            return (Dd::ZERO, Dd::ONE);
        }
        let q = (self.hi / FRAC_PI_2.hi).round();
        let r = self - FRAC_PI_2 * Dd::from_f64(q);
        let r2 = r.sqr();
        // sin r
        let mut term = r;
        let mut sin = r;
        let mut i = 1.0;
        loop {
            term = -(term * r2) / Dd::from_f64((i + 1.0) * (i + 2.0));
            sin += term;
            i += 2.0;
            if term.hi.abs() < 1e-36 || i > 60.0 {
                break;
            }
        }
        // cos r
        let mut term = Dd::ONE;
        let mut cos = Dd::ONE;
        let mut i = 0.0;
        loop {
            term = -(term * r2) / Dd::from_f64((i + 1.0) * (i + 2.0));
            cos += term;
            i += 2.0;
            if term.hi.abs() < 1e-36 || i > 60.0 {
                break;
            }
        }
        match (q as i64).rem_euclid(4) {
            0 => (sin, cos),
            1 => (cos, -sin),
            2 => (-sin, -cos),
            _ => (-cos, sin),
        }
    }
}

impl fmt::Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dd({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::from_f64(x)
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * Dd::from_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * Dd::from_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

impl AddAssign for Dd {
    #[inline]
    fn add_assign(&mut self, b: Dd) {
        *self = *self + b;
    }
}

impl SubAssign for Dd {
    #[inline]
    fn sub_assign(&mut self, b: Dd) {
        *self = *self - b;
    }
}

impl MulAssign for Dd {
    #[inline]
    fn mul_assign(&mut self, b: Dd) {
        *self = *self * b;
    }
}

impl Sum for Dd {
    fn sum<I: Iterator<Item = Dd>>(iter: I) -> Dd {
        iter.fold(Dd::ZERO, |a, b| a + b)
    }
}

/// Complex number with double-double parts.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub const ZERO: Cdd = Cdd { re: Dd::ZERO, im: Dd::ZERO };
    pub const ONE: Cdd = Cdd { re: Dd::ONE, im: Dd::ZERO };

    #[inline]
    pub const fn new(re: Dd, im: Dd) -> Self {
        Cdd { re, im }
    }

    #[inline]
    pub const fn from_f64(re: f64) -> Self {
        Cdd { re: Dd::from_f64(re), im: Dd::ZERO }
    }

    #[inline]
    pub const fn from_parts(re: f64, im: f64) -> Self {
        Cdd { re: Dd::from_f64(re), im: Dd::from_f64(im) }
    }

    #[inline]
    pub fn from_real(re: Dd) -> Self {
        Cdd { re, im: Dd::ZERO }
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    /// Modulus, rounded to `f64`.
    pub fn norm(self) -> f64 {
        let c = self.to_c64();
        if c.re == 0.0 && c.im == 0.0 {
            // keep tiny residuals (|x| ~ 1e-30) visible
            return self.re.lo().hypot(self.im.lo());
        }
        c.norm()
    }

    pub fn is_real(self) -> bool {
        self.im.hi() == 0.0 && self.im.lo() == 0.0
    }

    pub fn conj(self) -> Self {
        Cdd { re: self.re, im: -self.im }
    }

    pub fn scale(self, s: Dd) -> Self {
        Cdd { re: self.re * s, im: self.im * s }
    }

    pub fn norm_sqr_dd(self) -> Dd {
        self.re.sqr() + self.im.sqr()
    }

    pub fn recip(self) -> Self {
        let den = self.norm_sqr_dd();
        Cdd { re: self.re / den, im: -self.im / den }
    }

    pub fn exp(self) -> Self {
        let r = self.re.exp();
        if self.is_real() {
            return Cdd::from_real(r);
        }
        let (s, c) = self.im.sin_cos();
        Cdd { re: r * c, im: r * s }
    }

    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Cdd::ONE;
        }
        let mut base = self;
        let mut e = n.unsigned_abs();
        let mut acc = Cdd::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base = base * base;
            e >>= 1;
        }
        if n < 0 {
            acc.recip()
        } else {
            acc
        }
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl fmt::Debug for Cdd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.to_c64();
        write!(f, "Cdd({:e}{:+e}i)", c.re, c.im)
    }
}

impl From<f64> for Cdd {
    fn from(x: f64) -> Self {
        Cdd::from_f64(x)
    }
}

impl From<Complex64> for Cdd {
    fn from(c: Complex64) -> Self {
        Cdd::from_parts(c.re, c.im)
    }
}

impl From<Dd> for Cdd {
    fn from(x: Dd) -> Self {
        Cdd::from_real(x)
    }
}

impl Neg for Cdd {
    type Output = Cdd;
    #[inline]
    fn neg(self) -> Cdd {
        Cdd { re: -self.re, im: -self.im }
    }
}

impl Add for Cdd {
    type Output = Cdd;
    #[inline]
    fn add(self, b: Cdd) -> Cdd {
        Cdd { re: self.re + b.re, im: self.im + b.im }
    }
}

impl Sub for Cdd {
    type Output = Cdd;
    #[inline]
    fn sub(self, b: Cdd) -> Cdd {
        Cdd { re: self.re - b.re, im: self.im - b.im }
    }
}

impl Mul for Cdd {
    type Output = Cdd;
    #[inline]
    fn mul(self, b: Cdd) -> Cdd {
        if self.im.hi() == 0.0 && b.im.hi() == 0.0 && self.im.lo() == 0.0 && b.im.lo() == 0.0 {
            return Cdd::from_real(self.re * b.re);
        }
        Cdd { re: self.re * b.re - self.im * b.im, im: self.re * b.im + self.im * b.re }
    }
}

impl Div for Cdd {
    type Output = Cdd;
    fn div(self, b: Cdd) -> Cdd {
        if b.is_real() {
            return Cdd { re: self.re / b.re, im: self.im / b.re };
        }
        self * b.recip()
    }
}

impl AddAssign for Cdd {
    #[inline]
    fn add_assign(&mut self, b: Cdd) {
        *self = *self + b;
    }
}

impl SubAssign for Cdd {
    #[inline]
    fn sub_assign(&mut self, b: Cdd) {
        *self = *self - b;
    }
}

impl MulAssign for Cdd {
    #[inline]
    fn mul_assign(&mut self, b: Cdd) {
        *self = *self * b;
    }
}

impl Sum for Cdd {
    fn sum<I: Iterator<Item = Cdd>>(iter: I) -> Cdd {
        iter.fold(Cdd::ZERO, |a, b| a + b)
    }
}
