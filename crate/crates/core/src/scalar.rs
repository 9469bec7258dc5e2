//! Coefficient arithmetic in two modes: exact complex rationals and complex
//! doubles.
//!
//! The exact mode keeps numerator/denominator in `i64` while they fit and
//! promotes to arbitrary precision on overflow, so the hot paths of the
//! sparse kernels stay allocation-free without giving up exactness.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::ToPrimitive;

use crate::error::CoreError;

/// Default modulus threshold below which float coefficients are pruned.
pub const DEFAULT_EPS: f64 = 1e-10;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ScalarMode {
    Exact,
    Float,
}

impl fmt::Display for ScalarMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarMode::Exact => write!(f, "exact"),
            ScalarMode::Float => write!(f, "float"),
        }
    }
}

/// Exact rational with a small fast path.
///
/// Invariants: denominator > 0, fraction fully reduced; `Small` is used
/// whenever both parts fit `i64`, so equal values have equal representations.
#[derive(Clone, Debug)]
pub enum Rat {
    Small(i64, i64),
    Big(Box<BigRational>),
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

// Binary gcd: i128 division lowers to a library call, so stay on
// shifts and subtraction, in 64 bits whenever the values fit.
fn gcd_i128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    if a <= u64::MAX as u128 && b <= u64::MAX as u128 {
        return gcd_u64(a as u64, b as u64) as i128;
    }
    if a == 0 {
        return b as i128;
    }
    if b == 0 {
        return a as i128;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return (a << shift) as i128;
        }
    }
}

impl Rat {
    pub const ZERO: Rat = Rat::Small(0, 1);
    pub const ONE: Rat = Rat::Small(1, 1);

    pub fn from_int(v: i64) -> Rat {
        Rat::Small(v, 1)
    }

    /// Reduced rational p/q; panics if q == 0.
    pub fn new(p: i64, q: i64) -> Rat {
        assert!(q != 0, "zero denominator");
        Self::norm_small(p as i128, q as i128)
    }

    // Reduce with denominator already positive, everything in 64 bits.
    fn norm_small64(mut p: i64, mut q: i64) -> Rat {
        debug_assert!(q > 0);
        if p == 0 {
            return Rat::Small(0, 1);
        }
        if q != 1 && p != 1 && p != -1 {
            let g = gcd_u64(p.unsigned_abs(), q as u64);
            if g > 1 {
                p /= g as i64;
                q /= g as i64;
            }
        }
        Rat::Small(p, q)
    }

    fn norm_small(mut p: i128, mut q: i128) -> Rat {
        if q < 0 {
            p = -p;
            q = -q;
        }
        if p == 0 {
            return Rat::Small(0, 1);
        }
        if q != 1 && p != 1 && p != -1 {
            let g = gcd_i128(p, q);
            p /= g;
            q /= g;
        }
        match (i64::try_from(p), i64::try_from(q)) {
            (Ok(sp), Ok(sq)) => Rat::Small(sp, sq),
            _ => Rat::Big(Box::new(BigRational::new(BigInt::from(p), BigInt::from(q)))),
        }
    }

    fn from_big(b: BigRational) -> Rat {
        if let (Some(p), Some(q)) = (b.numer().to_i64(), b.denom().to_i64()) {
            Rat::Small(p, q)
        } else {
            Rat::Big(Box::new(b))
        }
    }

    pub fn to_big(&self) -> BigRational {
        match self {
            Rat::Small(p, q) => BigRational::new(BigInt::from(*p), BigInt::from(*q)),
            Rat::Big(b) => (**b).clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Rat::Small(0, _))
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Rat::Small(p, _) => *p < 0,
            Rat::Big(b) => b.numer().sign() == num::bigint::Sign::Minus,
        }
    }

    pub fn add(&self, o: &Rat) -> Rat {
        if let (Rat::Small(a, b), Rat::Small(c, d)) = (self, o) {
            // 64-bit lane first: i128 multiplies lower to library calls.
            if let (Some(x), Some(y), Some(den)) =
                (a.checked_mul(*d), c.checked_mul(*b), b.checked_mul(*d))
            {
                if let Some(num) = x.checked_add(y) {
                    return Self::norm_small64(num, den);
                }
            }
            let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
            if let (Some(x), Some(y)) = (a.checked_mul(d), c.checked_mul(b)) {
                if let (Some(num), Some(den)) = (x.checked_add(y), b.checked_mul(d)) {
                    return Self::norm_small(num, den);
                }
            }
        }
        Self::from_big(self.to_big() + o.to_big())
    }

    pub fn sub(&self, o: &Rat) -> Rat {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Rat) -> Rat {
        if let (Rat::Small(a, b), Rat::Small(c, d)) = (self, o) {
            if let (Some(num), Some(den)) = (a.checked_mul(*c), b.checked_mul(*d)) {
                return Self::norm_small64(num, den);
            }
            let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
            if let (Some(num), Some(den)) = (a.checked_mul(c), b.checked_mul(d)) {
                return Self::norm_small(num, den);
            }
        }
        Self::from_big(self.to_big() * o.to_big())
    }

    pub fn neg(&self) -> Rat {
        match self {
            Rat::Small(p, q) => Rat::Small(-p, *q),
            Rat::Big(b) => Rat::Big(Box::new(-(**b).clone())),
        }
    }

    /// Exact reciprocal; panics on zero.
    pub fn recip(&self) -> Rat {
        match self {
            Rat::Small(p, q) => {
                assert!(*p != 0, "reciprocal of zero");
                Self::norm_small(*q as i128, *p as i128)
            }
            Rat::Big(b) => Self::from_big(b.recip()),
        }
    }

    pub fn div(&self, o: &Rat) -> Rat {
        self.mul(&o.recip())
    }

    pub fn mul_int(&self, m: i64) -> Rat {
        self.mul(&Rat::from_int(m))
    }

    pub fn div_int(&self, m: i64) -> Rat {
        self.mul(&Rat::new(1, m))
    }

    pub fn pow_u32(&self, e: u32) -> Rat {
        let mut acc = Rat::ONE;
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn abs(&self) -> Rat {
        if self.is_negative() {
            self.neg()
        } else {
            self.clone()
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Rat::Small(p, q) => *p as f64 / *q as f64,
            Rat::Big(b) => b.to_f64().unwrap_or(f64::NAN),
        }
    }
}

impl PartialEq for Rat {
    fn eq(&self, o: &Rat) -> bool {
        match (self, o) {
            (Rat::Small(a, b), Rat::Small(c, d)) => a == c && b == d,
            (Rat::Big(a), Rat::Big(b)) => a == b,
            // Canonical representation: a value fits Small iff it is stored Small.
            _ => false,
        }
    }
}

impl Eq for Rat {}

impl PartialOrd for Rat {
    fn partial_cmp(&self, o: &Rat) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Rat {
    fn cmp(&self, o: &Rat) -> Ordering {
        if let (Rat::Small(a, b), Rat::Small(c, d)) = (self, o) {
            return (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128));
        }
        self.to_big().cmp(&o.to_big())
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rat::Small(p, 1) => write!(f, "{p}"),
            Rat::Small(p, q) => write!(f, "{p}/{q}"),
            Rat::Big(b) => {
                if b.denom() == &BigInt::from(1) {
                    write!(f, "{}", b.numer())
                } else {
                    write!(f, "{}/{}", b.numer(), b.denom())
                }
            }
        }
    }
}

impl FromStr for Rat {
    type Err = CoreError;

    /// Parses "p", "p/q"; tolerates a U+2212 minus sign.
    fn from_str(s: &str) -> Result<Rat, CoreError> {
        let s = s.trim().replace('\u{2212}', "-");
        let bad = || CoreError::ScalarParse(format!("bad rational: {s:?}"));
        let (ns, ds) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.as_str(), "1"),
        };
        let n = BigInt::from_str(ns).map_err(|_| bad())?;
        let d = BigInt::from_str(ds).map_err(|_| bad())?;
        if d == BigInt::from(0) {
            return Err(bad());
        }
        Ok(Rat::from_big(BigRational::new(n, d)))
    }
}

/// Shared coefficient interface for the sparse kernels.
///
/// All operations are pure; `is_negligible` is the pruning predicate
/// (structural zero in exact mode, modulus threshold in float mode).
pub trait Scalar: Clone + PartialEq + fmt::Debug + Send + Sync + 'static {
    const MODE: ScalarMode;

    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn is_negligible(&self, eps: f64) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn from_int(v: i64) -> Self;
    fn from_ratio(p: i64, q: i64) -> Self;
    fn from_rat(r: &Rat) -> Self;
    fn mul_int(&self, m: i64) -> Self;
    fn div_int(&self, m: i64) -> Self;
    /// |z|^2 as a double, for norm computations and residual reports.
    fn abs_sq(&self) -> f64;
    /// Parse the re/im parts of a JSON term in this mode.
    fn parse_parts(re: &str, im: &str) -> Result<Self, CoreError>;
    /// Render the re/im parts for serialization in this mode.
    fn fmt_parts(&self) -> (String, String);

    fn add_assign(&mut self, o: &Self) {
        *self = self.add(o);
    }

    fn abs(&self) -> f64 {
        self.abs_sq().sqrt()
    }
}

/// Exact complex rational coefficient.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ExactScalar {
    pub re: Rat,
    pub im: Rat,
}

impl ExactScalar {
    pub fn real(r: Rat) -> Self {
        ExactScalar { re: r, im: Rat::ZERO }
    }
}

impl Scalar for ExactScalar {
    const MODE: ScalarMode = ScalarMode::Exact;

    fn zero() -> Self {
        ExactScalar { re: Rat::ZERO, im: Rat::ZERO }
    }

    fn one() -> Self {
        ExactScalar { re: Rat::ONE, im: Rat::ZERO }
    }

    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn is_negligible(&self, _eps: f64) -> bool {
        self.is_zero()
    }

    fn add(&self, o: &Self) -> Self {
        ExactScalar { re: self.re.add(&o.re), im: self.im.add(&o.im) }
    }

    fn sub(&self, o: &Self) -> Self {
        ExactScalar { re: self.re.sub(&o.re), im: self.im.sub(&o.im) }
    }

    fn mul(&self, o: &Self) -> Self {
        ExactScalar {
            re: self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            im: self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        }
    }

    fn neg(&self) -> Self {
        ExactScalar { re: self.re.neg(), im: self.im.neg() }
    }

    fn from_int(v: i64) -> Self {
        ExactScalar::real(Rat::from_int(v))
    }

    fn from_ratio(p: i64, q: i64) -> Self {
        ExactScalar::real(Rat::new(p, q))
    }

    fn from_rat(r: &Rat) -> Self {
        ExactScalar::real(r.clone())
    }

    fn mul_int(&self, m: i64) -> Self {
        ExactScalar { re: self.re.mul_int(m), im: self.im.mul_int(m) }
    }

    fn div_int(&self, m: i64) -> Self {
        ExactScalar { re: self.re.div_int(m), im: self.im.div_int(m) }
    }

    fn abs_sq(&self) -> f64 {
        let a = self.re.to_f64();
        let b = self.im.to_f64();
        a * a + b * b
    }

    fn parse_parts(re: &str, im: &str) -> Result<Self, CoreError> {
        Ok(ExactScalar { re: re.parse()?, im: im.parse()? })
    }

    fn fmt_parts(&self) -> (String, String) {
        (self.re.to_string(), self.im.to_string())
    }
}

/// Complex double coefficient.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct FloatScalar {
    pub re: f64,
    pub im: f64,
}

impl FloatScalar {
    pub fn new(re: f64, im: f64) -> Self {
        FloatScalar { re, im }
    }
}

impl Scalar for FloatScalar {
    const MODE: ScalarMode = ScalarMode::Float;

    fn zero() -> Self {
        FloatScalar { re: 0.0, im: 0.0 }
    }

    fn one() -> Self {
        FloatScalar { re: 1.0, im: 0.0 }
    }

    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }

    fn is_negligible(&self, eps: f64) -> bool {
        self.abs_sq() <= eps * eps
    }

    fn add(&self, o: &Self) -> Self {
        FloatScalar { re: self.re + o.re, im: self.im + o.im }
    }

    fn sub(&self, o: &Self) -> Self {
        FloatScalar { re: self.re - o.re, im: self.im - o.im }
    }

    fn mul(&self, o: &Self) -> Self {
        FloatScalar {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }

    fn neg(&self) -> Self {
        FloatScalar { re: -self.re, im: -self.im }
    }

    fn from_int(v: i64) -> Self {
        FloatScalar { re: v as f64, im: 0.0 }
    }

    fn from_ratio(p: i64, q: i64) -> Self {
        FloatScalar { re: p as f64 / q as f64, im: 0.0 }
    }

    fn from_rat(r: &Rat) -> Self {
        FloatScalar { re: r.to_f64(), im: 0.0 }
    }

    fn mul_int(&self, m: i64) -> Self {
        FloatScalar { re: self.re * m as f64, im: self.im * m as f64 }
    }

    fn div_int(&self, m: i64) -> Self {
        FloatScalar { re: self.re / m as f64, im: self.im / m as f64 }
    }

    fn abs_sq(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    fn parse_parts(re: &str, im: &str) -> Result<Self, CoreError> {
        let p = |s: &str| -> Result<f64, CoreError> {
            let s = s.trim().replace('\u{2212}', "-");
            if let Some((n, d)) = s.split_once('/') {
                let n: f64 = n.trim().parse().map_err(|_| CoreError::ScalarParse(s.clone()))?;
                let d: f64 = d.trim().parse().map_err(|_| CoreError::ScalarParse(s.clone()))?;
                return Ok(n / d);
            }
            s.parse().map_err(|_| CoreError::ScalarParse(s.clone()))
        };
        Ok(FloatScalar { re: p(re)?, im: p(im)? })
    }

    fn fmt_parts(&self) -> (String, String) {
        (format!("{}", self.re), format!("{}", self.im))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_arithmetic_reduces() {
        let a = Rat::new(2, 4);
        assert_eq!(a, Rat::new(1, 2));
        assert_eq!(a.add(&Rat::new(1, 2)), Rat::ONE);
        assert_eq!(Rat::new(1, 3).mul(&Rat::new(3, 5)), Rat::new(1, 5));
        assert_eq!(Rat::new(-3, -6), Rat::new(1, 2));
        assert_eq!(Rat::new(3, -6), Rat::new(-1, 2));
    }

    #[test]
    fn overflow_promotes_and_stays_exact() {
        let big = Rat::from_int(i64::MAX);
        let sq = big.mul(&big);
        assert!(matches!(sq, Rat::Big(_)));
        let back = sq.div(&big);
        assert_eq!(back, big);
    }

    #[test]
    fn big_small_equality_is_canonical() {
        let r = Rat::from_int(7).mul(&Rat::from_int(1));
        assert!(matches!(r, Rat::Small(7, 1)));
        let promoted = Rat::from_int(i64::MAX).mul(&Rat::from_int(2)).div_int(2);
        assert!(matches!(promoted, Rat::Small(_, _)));
        assert_eq!(promoted, Rat::from_int(i64::MAX));
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["0", "5", "-5", "1/2", "-7/3", "12345678901234567890/7"] {
            let r: Rat = s.parse().unwrap();
            let again: Rat = r.to_string().parse().unwrap();
            assert_eq!(r, again);
        }
        let unicode: Rat = "\u{2212}1/2".parse().unwrap();
        assert_eq!(unicode, Rat::new(-1, 2));
        assert!("1/0".parse::<Rat>().is_err());
        assert!("x".parse::<Rat>().is_err());
    }

    #[test]
    fn complex_exact_multiplication() {
        let i = ExactScalar { re: Rat::ZERO, im: Rat::ONE };
        assert_eq!(i.mul(&i), ExactScalar::from_int(-1));
        let z = ExactScalar { re: Rat::new(1, 2), im: Rat::new(-1, 3) };
        let w = z.mul(&z.neg());
        assert_eq!(w.neg(), z.mul(&z));
    }

    #[test]
    fn float_negligibility() {
        let tiny = FloatScalar::new(1e-12, -1e-12);
        assert!(tiny.is_negligible(DEFAULT_EPS));
        assert!(!FloatScalar::new(1e-9, 0.0).is_negligible(DEFAULT_EPS));
    }

    #[test]
    fn ordering_matches_value() {
        let mut v = vec![Rat::new(1, 2), Rat::new(-3, 2), Rat::from_int(2), Rat::new(1, 3)];
        v.sort();
        assert_eq!(v, vec![Rat::new(-3, 2), Rat::new(1, 3), Rat::new(1, 2), Rat::from_int(2)]);
    }
}
