//! Truncated p-adic numbers with an explicit digit window.
//!
//! A [`PAdic`] knows its digits at every index below `precision`. Digits at
//! or above `precision` are unknown, and any operation whose result depends on
//! them fails with [`Error::TruncationOverflow`].

use std::fmt;
use std::ops::{Add, Mul};

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::shells::{fine_index, LogRadius};

/// Digits kept by constructors that are not given an explicit precision.
pub const DEFAULT_PRECISION: i64 = 64;

pub fn is_prime(p: u32) -> bool {
    p >= 2
        && (2..)
            .take_while(|d| d * d <= p)
            .all(|d| !p.is_multiple_of(d))
}

/// Primes are limited to `u8` digits.
pub fn check_prime(p: u32) -> Result<()> {
    if !is_prime(p) || p > 251 {
        return Err(Error::NotPrime(p));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PAdic {
    prime: u32,
    valuation: i64,
    digits: Vec<u8>,
    precision: i64,
}

impl PAdic {
    /// `digits[i]` is the coefficient of `p^(low + i)`.
    pub fn new(prime: u32, low: i64, digits: &[u32], precision: i64) -> Result<Self> {
        check_prime(prime)?;
        if let Some(&d) = digits.iter().find(|&&d| d >= prime) {
            return Err(Error::DigitOutOfRange { digit: d, prime });
        }
        let d: Vec<u8> = digits.iter().map(|&d| d as u8).collect();
        Ok(Self::canonical(prime, low, d, precision))
    }

    /// Finite digit expansion known to `DEFAULT_PRECISION` digits beyond its top.
    pub fn from_digits(prime: u32, low: i64, digits: &[u32]) -> Result<Self> {
        let top = low + digits.len() as i64;
        Self::new(prime, low, digits, top.max(0) + DEFAULT_PRECISION)
    }

    pub fn zero(prime: u32, precision: i64) -> Self {
        Self {
            prime,
            valuation: precision,
            digits: Vec::new(),
            precision,
        }
    }

    pub fn from_int(prime: u32, n: i128) -> Result<Self> {
        Self::from_ratio(prime, n, 1, DEFAULT_PRECISION)
    }

    /// The expansion of `num / den`, known below index `precision`.
    pub fn from_ratio(prime: u32, num: i128, den: i128, precision: i64) -> Result<Self> {
        check_prime(prime)?;
        if den == 0 {
            return Err(invalid("den", "zero denominator"));
        }
        if num == 0 {
            return Ok(Self::zero(prime, precision));
        }
        let p = prime as i128;
        let (mut num, mut den) = (num, den);
        let mut v = 0i64;
        while num % p == 0 {
            num /= p;
            v += 1;
        }
        while den % p == 0 {
            den /= p;
            v -= 1;
        }
        let width = precision - v;
        if width <= 0 {
            return Ok(Self::zero(prime, precision));
        }
        let modulus = BigInt::from(prime).pow(width as u32);
        let inv = BigInt::from(den)
            .modinv(&modulus)
            .expect("unit denominator is invertible");
        let mut a = (BigInt::from(num) * inv) % &modulus;
        if a.sign() == Sign::Minus {
            a += &modulus;
        }
        let (_, mag) = a.into_parts();
        Ok(Self::from_big(prime, v, &mag, precision))
    }

    fn canonical(prime: u32, low: i64, mut digits: Vec<u8>, precision: i64) -> Self {
        let keep = (precision - low).clamp(0, digits.len() as i64) as usize;
        digits.truncate(keep);
        while digits.last() == Some(&0) {
            digits.pop();
        }
        let lead = digits.iter().take_while(|&&d| d == 0).count();
        if lead == digits.len() {
            return Self::zero(prime, precision);
        }
        digits.drain(..lead);
        Self {
            prime,
            valuation: low + lead as i64,
            digits,
            precision,
        }
    }

    /// Reduces `value * p^base` modulo `p^precision`.
    fn from_big(prime: u32, base: i64, value: &BigUint, precision: i64) -> Self {
        if value.is_zero() || base >= precision {
            return Self::zero(prime, precision);
        }
        let digits = value.to_radix_le(prime);
        Self::canonical(prime, base, digits, precision)
    }

    /// `self = value * p^base`; requires `base <= valuation`.
    fn to_big(&self, base: i64) -> BigUint {
        debug_assert!(self.is_zero() || base <= self.valuation);
        if self.is_zero() {
            return BigUint::zero();
        }
        let mut buf = vec![0u8; (self.valuation - base) as usize];
        buf.extend_from_slice(&self.digits);
        BigUint::from_radix_le(&buf, self.prime).expect("digits below prime")
    }

    pub fn prime(&self) -> u32 {
        self.prime
    }

    pub fn precision(&self) -> i64 {
        self.precision
    }

    pub fn is_zero(&self) -> bool {
        self.digits.is_empty()
    }

    /// Digits starting at the valuation, leading digit nonzero.
    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn valuation(&self) -> Valuation {
        if self.is_zero() {
            Valuation::Infinite
        } else {
            Valuation::Finite(self.valuation)
        }
    }

    pub fn abs(&self) -> f64 {
        match self.valuation() {
            Valuation::Infinite => 0.0,
            Valuation::Finite(v) => (self.prime as f64).powi(-v as i32),
        }
    }

    /// `log_p |x|_p`, or `None` for zero.
    pub fn log_abs(&self) -> Option<i64> {
        self.valuation().finite().map(|v| -v)
    }

    pub fn digit(&self, i: i64) -> Result<u32> {
        if i >= self.precision {
            return Err(Error::TruncationOverflow {
                needed: i,
                precision: self.precision,
            });
        }
        if self.is_zero() || i < self.valuation {
            return Ok(0);
        }
        Ok(self
            .digits
            .get((i - self.valuation) as usize)
            .map_or(0, |&d| d as u32))
    }

    /// Same value with the window cut at `precision` (never widened).
    pub fn truncate(&self, precision: i64) -> Self {
        Self::canonical(
            self.prime,
            self.valuation,
            self.digits.clone(),
            precision.min(self.precision),
        )
    }

    /// Same digits with the window declared wider; the new digits are zero.
    pub(crate) fn with_precision(&self, precision: i64) -> Self {
        let mut out = self.clone();
        if out.is_zero() {
            out.valuation = precision;
        }
        out.precision = precision;
        out
    }

    /// Multiplication by `p^k`.
    pub fn shift(&self, k: i64) -> Self {
        let mut out = self.clone();
        out.valuation += k;
        out.precision += k;
        out
    }

    fn low(&self) -> i64 {
        if self.is_zero() {
            self.precision
        } else {
            self.valuation
        }
    }

    fn same_prime(&self, other: &Self) -> Result<()> {
        if self.prime != other.prime {
            return Err(Error::PrimeMismatch(self.prime, other.prime));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.same_prime(other)?;
        let precision = self.precision.min(other.precision);
        let base = self.low().min(other.low());
        if base >= precision {
            return Ok(Self::zero(self.prime, precision));
        }
        let sum = self.to_big(base) + other.to_big(base);
        Ok(Self::from_big(self.prime, base, &sum, precision))
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let width = (self.precision - self.valuation) as u32;
        let modulus = BigUint::from(self.prime).pow(width);
        let val = &modulus - self.to_big(self.valuation);
        Self::from_big(self.prime, self.valuation, &val, self.precision)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.neg())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.same_prime(other)?;
        let (vx, vy) = (self.low(), other.low());
        let precision = (self.precision + vy).min(other.precision + vx);
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero(self.prime, precision));
        }
        let prod = self.to_big(vx) * other.to_big(vy);
        Ok(Self::from_big(self.prime, vx + vy, &prod, precision))
    }

    pub fn fractional_part(&self) -> Result<FractionalPart> {
        if self.precision < 0 {
            return Err(Error::TruncationOverflow {
                needed: self.precision,
                precision: self.precision,
            });
        }
        if self.is_zero() || self.valuation >= 0 {
            return Ok(FractionalPart {
                prime: self.prime,
                numerator: BigUint::zero(),
                denom_exp: 0,
            });
        }
        let n = (-self.valuation) as usize;
        let take = n.min(self.digits.len());
        let numerator =
            BigUint::from_radix_le(&self.digits[..take], self.prime).expect("digits below prime");
        Ok(FractionalPart {
            prime: self.prime,
            numerator,
            denom_exp: n as u32,
        })
    }

    pub fn character(&self) -> Result<ComplexUnit> {
        Ok(ComplexUnit::from_turns(self.fractional_part()?.to_f64()))
    }
}

impl fmt::Display for PAdic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0 + O({}^{})", self.prime, self.precision);
        }
        for (i, d) in self.digits.iter().enumerate().rev() {
            if *d != 0 {
                write!(f, "{}*{}^{} + ", d, self.prime, self.valuation + i as i64)?;
            }
        }
        write!(f, "O({}^{})", self.prime, self.precision)
    }
}

/// `numerator / p^denom_exp`, always in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractionalPart {
    pub prime: u32,
    pub numerator: BigUint,
    pub denom_exp: u32,
}

impl FractionalPart {
    pub fn to_f64(&self) -> f64 {
        let p = self.prime as f64;
        let mut digits = self.numerator.to_radix_le(self.prime);
        digits.resize(self.denom_exp as usize, 0);
        digits.iter().fold(0.0, |acc, &d| (acc + d as f64) / p)
    }

    /// Compares against the rational `num / den` exactly.
    pub fn equals_ratio(&self, num: u64, den: u64) -> bool {
        let lhs = &self.numerator * BigUint::from(den);
        let rhs = BigUint::from(num) * BigUint::from(self.prime).pow(self.denom_exp);
        lhs == rhs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn abs(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.re * s, self.im * s)
    }
}

impl Add for Complex {
    type Output = Complex;
    fn add(self, o: Complex) -> Complex {
        Complex::new(self.re + o.re, self.im + o.im)
    }
}

impl Mul for Complex {
    type Output = Complex;
    fn mul(self, o: Complex) -> Complex {
        Complex::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

/// A point on the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexUnit(Complex);

impl ComplexUnit {
    pub const ONE: ComplexUnit = ComplexUnit(Complex::new(1.0, 0.0));

    /// `exp(2 pi i f)`.
    pub fn from_turns(f: f64) -> Self {
        let mut f = f - f.floor();
        if f > 0.5 {
            f -= 1.0;
        }
        let (s, c) = (std::f64::consts::TAU * f).sin_cos();
        ComplexUnit(Complex::new(c, s))
    }

    pub fn re(&self) -> f64 {
        self.0.re
    }

    pub fn im(&self) -> f64 {
        self.0.im
    }

    pub fn conj(&self) -> Self {
        ComplexUnit(Complex::new(self.0.re, -self.0.im))
    }

    pub fn as_complex(&self) -> Complex {
        self.0
    }
}

impl Mul for ComplexUnit {
    type Output = ComplexUnit;
    fn mul(self, o: ComplexUnit) -> ComplexUnit {
        ComplexUnit(self.0 * o.0)
    }
}

pub fn character(x: &PAdic) -> Result<ComplexUnit> {
    x.character()
}

/// `chi(x1 y1 + x2 y2)`.
pub fn pairing_2d(x: &[PAdic; 2], y: &[PAdic; 2]) -> Result<ComplexUnit> {
    let s = x[0].try_mul(&y[0])?.try_add(&x[1].try_mul(&y[1])?)?;
    s.character()
}

pub fn check_h(h: f64) -> Result<()> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(invalid("h", format!("{h} is outside (0, 1]")));
    }
    Ok(())
}

pub fn norm_max(x: &[PAdic; 2]) -> f64 {
    x[0].abs().max(x[1].abs())
}

/// `log_p max(|x1|, p^(h-1) |x2|)`, exact; `None` at the origin.
///
/// With `weighted = false` this is the max-norm.
pub fn log_norm(x: &[PAdic; 2], weighted: bool) -> Option<LogRadius> {
    let (e1, e2) = (x[0].log_abs(), x[1].log_abs());
    if !weighted {
        return e1.max(e2).map(LogRadius::integer);
    }
    fine_index(e1, e2).map(|j| LogRadius {
        int: j.div_euclid(2),
        plus_h: j.rem_euclid(2) == 1,
    })
}

pub fn norm_h(x: &[PAdic; 2], h: f64) -> Result<f64> {
    check_h(h)?;
    if h == 1.0 {
        return Ok(norm_max(x));
    }
    let p = x[0].prime();
    Ok(log_norm(x, true).map_or(0.0, |r| r.value(p, h)))
}

/// `Vol(B(k)) * mean of chi(x y)` over every representative `x` of the level-`m`
/// ball `B^(m)(k)`. Equals the volume when `|y| <= p^-k` and vanishes otherwise.
///
/// Enumerates `p^(k+m)` points.
pub fn character_sum_over_ball(k: i64, y: &PAdic, m: u32) -> Result<Complex> {
    let p = y.prime();
    let m = m as i64;
    if k < -m {
        return Err(Error::IndexBelowMinimum {
            index: k,
            min: -m,
            level: m as u32,
        });
    }
    let width = (k + m) as u32;
    let count = (p as u64)
        .checked_pow(width)
        .filter(|&c| c <= 1 << 24)
        .ok_or_else(|| invalid("k", "ball has too many representatives to enumerate"))?;
    let mut sum = Complex::default();
    let mut digits = vec![0u32; width as usize];
    for _ in 0..count {
        let x = PAdic::new(p, -k, &digits, m)?;
        sum = sum + x.try_mul(y)?.character()?.as_complex();
        for d in digits.iter_mut() {
            *d += 1;
            if *d < p {
                break;
            }
            *d = 0;
        }
    }
    let vol = (p as f64).powi(k as i32);
    Ok(sum.scale(vol / count as f64))
}
