//! Number types an [`Expr`](super::Expr) can be evaluated over.
//!
//! Plain `f64` is the default. [`Wide`] carries a separate 64-bit binary
//! exponent so that quantities like `exp(-1/x^2) / x^3` near `x = 0` keep
//! their relative precision instead of underflowing to zero. Ratios of two
//! such quantities (the Lyapunov ratio, `φ'/X` in one dimension) are then
//! computed correctly all the way down to the seam.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic needed by the expression evaluator.
pub trait Scalar:
    Copy
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    /// -1, 0 or 1.
    fn sign(self) -> i8;
    fn is_finite(self) -> bool;
    fn powi(self, n: i32) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;

    fn is_zero(self) -> bool {
        self.sign() == 0
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn sign(self) -> i8 {
        if self > 0.0 {
            1
        } else if self < 0.0 {
            -1
        } else {
            0
        }
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
}

/// Floating point value `mant * 2^exp` with `|mant|` in `[0.5, 1)` (or zero).
#[derive(Clone, Copy, Debug)]
pub struct Wide {
    mant: f64,
    exp: i64,
}

const LN2_HI: f64 = 6.931_471_803_691_238_164_90e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;

/// Largest exponent we keep before declaring overflow. Far beyond anything a
/// desk-scale expression produces; it only guards the `i64` arithmetic.
const EXP_LIMIT: i64 = 1 << 40;

fn frexp(v: f64) -> (f64, i64) {
    if v == 0.0 || !v.is_finite() {
        return (v, 0);
    }
    let (v, bias) = if v.abs() < f64::MIN_POSITIVE {
        (v * 2f64.powi(64), -64)
    } else {
        (v, 0)
    };
    let bits = v.to_bits();
    let raw = ((bits >> 52) & 0x7ff) as i64;
    let mant = f64::from_bits((bits & !(0x7ff << 52)) | (1022 << 52));
    (mant, raw - 1022 + bias)
}

fn ldexp(m: f64, e: i64) -> f64 {
    if m == 0.0 {
        return m;
    }
    if e > 2100 {
        return m.signum() * f64::INFINITY;
    }
    if e < -2200 {
        return m.signum() * 0.0;
    }
    let half = (e / 2) as i32;
    let rest = (e - e / 2) as i32;
    m * 2f64.powi(half) * 2f64.powi(rest)
}

impl Wide {
    pub const ZERO: Wide = Wide { mant: 0.0, exp: 0 };

    fn new(mant: f64, exp: i64) -> Wide {
        if mant == 0.0 {
            return Wide::ZERO;
        }
        if !mant.is_finite() {
            return Wide { mant, exp: 0 };
        }
        let (m, e) = frexp(mant);
        let exp = exp.saturating_add(e);
        if exp > EXP_LIMIT {
            return Wide {
                mant: m.signum() * f64::INFINITY,
                exp: 0,
            };
        }
        if exp < -EXP_LIMIT {
            return Wide::ZERO;
        }
        Wide { mant: m, exp }
    }

    pub fn abs(self) -> Wide {
        Wide {
            mant: self.mant.abs(),
            exp: self.exp,
        }
    }

    /// Base-2 logarithm of the magnitude; `-inf` for zero.
    pub fn log2_abs(self) -> f64 {
        if self.mant == 0.0 {
            return f64::NEG_INFINITY;
        }
        self.mant.abs().log2() + self.exp as f64
    }
}

impl PartialEq for Wide {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Wide {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        (*self - *other).mant.partial_cmp(&0.0)
    }
}

impl From<f64> for Wide {
    fn from(v: f64) -> Self {
        Wide::new(v, 0)
    }
}

impl Add for Wide {
    type Output = Wide;
    fn add(self, rhs: Wide) -> Wide {
        if self.mant == 0.0 {
            return rhs;
        }
        if rhs.mant == 0.0 {
            return self;
        }
        if !self.mant.is_finite() || !rhs.mant.is_finite() {
            return Wide::new(self.mant + rhs.mant, 0);
        }
        let (big, small) = if self.exp >= rhs.exp {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let shift = big.exp - small.exp;
        if shift > 110 {
            return big;
        }
        Wide::new(big.mant + ldexp(small.mant, -shift), big.exp)
    }
}

impl Sub for Wide {
    type Output = Wide;
    fn sub(self, rhs: Wide) -> Wide {
        self + (-rhs)
    }
}

impl Mul for Wide {
    type Output = Wide;
    fn mul(self, rhs: Wide) -> Wide {
        if self.mant == 0.0 || rhs.mant == 0.0 {
            return Wide::ZERO;
        }
        Wide::new(self.mant * rhs.mant, self.exp.saturating_add(rhs.exp))
    }
}

impl Div for Wide {
    type Output = Wide;
    fn div(self, rhs: Wide) -> Wide {
        if rhs.mant == 0.0 {
            return Wide::new(self.mant / rhs.mant, 0);
        }
        if self.mant == 0.0 {
            return Wide::ZERO;
        }
        Wide::new(self.mant / rhs.mant, self.exp.saturating_sub(rhs.exp))
    }
}

impl Neg for Wide {
    type Output = Wide;
    fn neg(self) -> Wide {
        Wide {
            mant: -self.mant,
            exp: self.exp,
        }
    }
}

impl Scalar for Wide {
    fn from_f64(v: f64) -> Self {
        Wide::from(v)
    }

    fn to_f64(self) -> f64 {
        ldexp(self.mant, self.exp)
    }

    fn sign(self) -> i8 {
        self.mant.sign()
    }

    fn is_finite(self) -> bool {
        self.mant.is_finite()
    }

    fn powi(self, n: i32) -> Self {
        if n < 0 {
            return Wide::from(1.0) / self.powi(n.checked_neg().unwrap_or(i32::MAX));
        }
        let mut base = self;
        let mut k = n as u32;
        let mut acc = Wide::from(1.0);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    }

    fn exp(self) -> Self {
        let y = self.to_f64();
        if y.is_nan() {
            return Wide::new(f64::NAN, 0);
        }
        if y > 1e15 {
            return Wide::new(f64::INFINITY, 0);
        }
        if y < -1e15 {
            return Wide::ZERO;
        }
        let k = (y / std::f64::consts::LN_2).floor();
        let r = (y - k * LN2_HI) - k * LN2_LO;
        Wide::new(r.exp(), k as i64)
    }

    fn ln(self) -> Self {
        if self.mant <= 0.0 {
            return Wide::new(f64::NAN, 0);
        }
        Wide::from(self.mant.ln() + self.exp as f64 * std::f64::consts::LN_2)
    }

    fn sqrt(self) -> Self {
        if self.mant < 0.0 {
            return Wide::new(f64::NAN, 0);
        }
        if self.mant == 0.0 {
            return Wide::ZERO;
        }
        let (m, e) = if self.exp % 2 != 0 {
            (self.mant * 2.0, self.exp - 1)
        } else {
            (self.mant, self.exp)
        };
        Wide::new(m.sqrt(), e / 2)
    }

    fn sin(self) -> Self {
        Wide::from(self.to_f64().sin())
    }

    fn cos(self) -> Self {
        Wide::from(self.to_f64().cos())
    }
}
