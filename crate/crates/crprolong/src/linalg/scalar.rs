//! Gaussian rationals: complex numbers whose real and imaginary parts are
//! arbitrary-precision rationals.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer};
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// "p/q" with q > 0 and gcd 1. `BigRational` keeps that normalization already.
pub fn rat_to_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        Some(BigRational::new(p, q))
    } else {
        let p: BigInt = s.parse().ok()?;
        Some(BigRational::from_integer(p))
    }
}

/// Exact square root of a nonnegative rational, if it is a perfect square.
pub fn rat_sqrt(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    if &(&n * &n) == r.numer() && &(&d * &d) == r.denom() {
        Some(BigRational::new(n, d))
    } else {
        None
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct GaussianRational {
    pub re: Rational,
    pub im: Rational,
}

pub type GR = GaussianRational;

impl GaussianRational {
    pub fn new(re: Rational, im: Rational) -> Self {
        GaussianRational { re, im }
    }

    pub fn from_int(n: i64) -> Self {
        Self::new(rat_int(n), Rational::zero())
    }

    pub fn from_ints(re: i64, im: i64) -> Self {
        Self::new(rat_int(re), rat_int(im))
    }

    pub fn from_rational(r: Rational) -> Self {
        Self::new(r, Rational::zero())
    }

    pub fn i() -> Self {
        Self::from_ints(0, 1)
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re.clone(), -self.im.clone())
    }

    /// |z|^2
    pub fn norm_sq(&self) -> Rational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.im.is_zero() && self.re.is_one()
    }

    pub fn inv(&self) -> Self {
        let n = self.norm_sq();
        assert!(!n.is_zero(), "division by zero in Gaussian rationals");
        Self::new(&self.re / &n, -&self.im / &n)
    }

    pub fn scale(&self, r: &Rational) -> Self {
        Self::new(&self.re * r, &self.im * r)
    }

    /// An exact square root in Q(i), when one exists.
    pub fn sqrt(&self) -> Option<Self> {
        if self.im.is_zero() {
            if let Some(s) = rat_sqrt(&self.re) {
                return Some(Self::from_rational(s));
            }
            return rat_sqrt(&(-self.re.clone())).map(|s| Self::new(Rational::zero(), s));
        }
        // (x+iy)^2 = a+ib  =>  x^2 = (a+|z|)/2
        let modulus = rat_sqrt(&self.norm_sq())?;
        let two = rat_int(2);
        let x2 = (&self.re + &modulus) / &two;
        let x = rat_sqrt(&x2)?;
        if x.is_zero() {
            return None;
        }
        let y = &self.im / (&two * &x);
        Some(Self::new(x, y))
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    /// Height of the entry, used to pick small pivots and candidates.
    pub fn bits(&self) -> u64 {
        self.re.numer().bits()
            + self.re.denom().bits()
            + self.im.numer().bits()
            + self.im.denom().bits()
    }
}

impl Zero for GaussianRational {
    fn zero() -> Self {
        Self::new(Rational::zero(), Rational::zero())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl One for GaussianRational {
    fn one() -> Self {
        Self::from_int(1)
    }
}

impl fmt::Debug for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", self.re),
            (true, false) => write!(f, "{}i", self.im),
            (false, false) => {
                if self.im.is_negative() {
                    write!(f, "{}-{}i", self.re, -self.im.clone())
                } else {
                    write!(f, "{}+{}i", self.re, self.im)
                }
            }
        }
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl<'a, 'b> $tr<&'b GaussianRational> for &'a GaussianRational {
            type Output = GaussianRational;
            fn $m(self, o: &'b GaussianRational) -> GaussianRational {
                let f: fn(&GaussianRational, &GaussianRational) -> GaussianRational = $body;
                f(self, o)
            }
        }
        impl $tr<GaussianRational> for GaussianRational {
            type Output = GaussianRational;
            fn $m(self, o: GaussianRational) -> GaussianRational {
                (&self).$m(&o)
            }
        }
        impl<'b> $tr<&'b GaussianRational> for GaussianRational {
            type Output = GaussianRational;
            fn $m(self, o: &'b GaussianRational) -> GaussianRational {
                (&self).$m(o)
            }
        }
        impl<'a> $tr<GaussianRational> for &'a GaussianRational {
            type Output = GaussianRational;
            fn $m(self, o: GaussianRational) -> GaussianRational {
                self.$m(&o)
            }
        }
    };
}

binop!(Add, add, |a, b| GaussianRational::new(&a.re + &b.re, &a.im + &b.im));
binop!(Sub, sub, |a, b| GaussianRational::new(&a.re - &b.re, &a.im - &b.im));
binop!(Mul, mul, |a, b| {
    if a.im.is_zero() && b.im.is_zero() {
        return GaussianRational::from_rational(&a.re * &b.re);
    }
    GaussianRational::new(
        &a.re * &b.re - &a.im * &b.im,
        &a.re * &b.im + &a.im * &b.re,
    )
});
binop!(Div, div, |a, b| {
    if b.im.is_zero() {
        assert!(!b.re.is_zero(), "division by zero in Gaussian rationals");
        return GaussianRational::new(&a.re / &b.re, &a.im / &b.re);
    }
    a * &b.inv()
});

impl AddAssign<&GaussianRational> for GaussianRational {
    fn add_assign(&mut self, o: &GaussianRational) {
        self.re += &o.re;
        self.im += &o.im;
    }
}

impl SubAssign<&GaussianRational> for GaussianRational {
    fn sub_assign(&mut self, o: &GaussianRational) {
        self.re -= &o.re;
        self.im -= &o.im;
    }
}

impl MulAssign<&GaussianRational> for GaussianRational {
    fn mul_assign(&mut self, o: &GaussianRational) {
        *self = &*self * o;
    }
}

impl Neg for GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational::new(-self.re, -self.im)
    }
}

impl Neg for &GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational::new(-self.re.clone(), -self.im.clone())
    }
}

impl From<i64> for GaussianRational {
    fn from(n: i64) -> Self {
        Self::from_int(n)
    }
}

impl Serialize for GaussianRational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("GaussianRational", 2)?;
        st.serialize_field("re", &rat_to_string(&self.re))?;
        st.serialize_field("im", &rat_to_string(&self.im))?;
        st.end()
    }
}

/// Accepts `{"re": .., "im": ..}`, a bare number, or a rational string.
pub fn scalar_from_json(v: &serde_json::Value) -> Result<GaussianRational, String> {
    use serde_json::Value;
    match v {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(GaussianRational::from_int(i))
            } else {
                Err(format!("non-integer JSON number {n}; use a \"p/q\" string"))
            }
        }
        Value::String(s) => parse_rational(s)
            .map(GaussianRational::from_rational)
            .ok_or_else(|| format!("bad rational {s:?}")),
        Value::Object(m) => {
            let part = |k: &str| -> Result<Rational, String> {
                match m.get(k) {
                    None => Ok(Rational::zero()),
                    Some(x) => Ok(scalar_from_json(x)?.re),
                }
            };
            Ok(GaussianRational::new(part("re")?, part("im")?))
        }
        other => Err(format!("cannot read scalar from {other}")),
    }
}

impl<'de> Deserialize<'de> for GaussianRational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        scalar_from_json(&v).map_err(de::Error::custom)
    }
}

/// Smallest integer N >= 0 with N*N <= x, for u128.
pub fn isqrt_u128(x: u128) -> u128 {
    if x < 2 {
        return x;
    }
    let mut r = (x as f64).sqrt() as u128;
    while r * r > x {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= x {
        r += 1;
    }
    r
}

/// Find lambda in Q(i) with |lambda|^2 = a, by searching integer
/// representations of a*den^2 as a sum of two squares.
pub fn two_squares(a: &Rational, search_limit: u128) -> Option<GaussianRational> {
    if !a.is_positive() {
        return None;
    }
    let d = a.denom().clone();
    let n = a.numer() * &d;
    let n: u128 = n.to_u128()?;
    let top = isqrt_u128(n);
    if top > search_limit {
        return None;
    }
    for x in (0..=top).rev() {
        let rest = n - x * x;
        let y = isqrt_u128(rest);
        if y * y == rest {
            let den = BigRational::from_integer(d.clone());
            let re = BigRational::from_integer(BigInt::from(x)) / &den;
            let im = BigRational::from_integer(BigInt::from(y)) / &den;
            return Some(GaussianRational::new(re, im));
        }
    }
    None
}

pub fn gcd_int(a: &BigInt, b: &BigInt) -> BigInt {
    a.gcd(b)
}
