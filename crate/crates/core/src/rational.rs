//! Exact rational and complex-rational arithmetic.
//!
//! Everything certified in this crate is computed on [`Rational`], a thin
//! canonical-form wrapper over an arbitrary-precision fraction. There is no
//! floating-point fast path; conversion to `f64` only happens at the edges
//! (reporting, network inputs).
//!
//! Norms are kept squared wherever possible so that results stay rational.
//! When a square root is unavoidable, [`Rational::sqrt_floor`] and
//! [`Rational::sqrt_ceil`] give certified dyadic bounds.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("entry {index} has a nonzero imaginary part")]
    NotReal { index: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("cannot parse rational from {0:?}")]
    Parse(String),
}

/// Exact rational number in lowest terms with a positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

/// The four field operations, for callers that select one at runtime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl Rational {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Result<Self, ArithError> {
        let denom = denom.into();
        if denom.is_zero() {
            return Err(ArithError::DivisionByZero);
        }
        Ok(Rational(BigRational::new(numer.into(), denom)))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    /// `n / d` for small literals. Panics if `d == 0`.
    pub fn frac(n: i64, d: i64) -> Self {
        Self::new(n, d).expect("literal fraction with zero denominator")
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    /// `2^e`, exact for any sign of `e`.
    pub fn pow2(e: i64) -> Self {
        let p = BigInt::one() << e.unsigned_abs();
        if e >= 0 {
            Rational::from_integer(p)
        } else {
            Rational(BigRational::new_raw(BigInt::one(), p))
        }
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn square(&self) -> Self {
        Rational(&self.0 * &self.0)
    }

    pub fn recip(&self) -> Result<Self, ArithError> {
        if self.is_zero() {
            return Err(ArithError::DivisionByZero);
        }
        Ok(Rational(self.0.recip()))
    }

    pub fn checked_div(&self, rhs: &Rational) -> Result<Self, ArithError> {
        if rhs.is_zero() {
            return Err(ArithError::DivisionByZero);
        }
        Ok(Rational(&self.0 / &rhs.0))
    }

    pub fn apply(&self, op: FieldOp, rhs: &Rational) -> Result<Self, ArithError> {
        Ok(match op {
            FieldOp::Add => self + rhs,
            FieldOp::Sub => self - rhs,
            FieldOp::Mul => self * rhs,
            FieldOp::Div => self.checked_div(rhs)?,
        })
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    /// Nearest `f64` (ties to even). Values beyond the `f64` range saturate to ±inf.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or_else(|| {
            if self.is_negative() {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        })
    }

    /// The exact value of a finite `f64`; `None` for NaN or infinities.
    pub fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x).map(Rational)
    }

    /// Largest multiple of `2^-bits` that is `<= self`.
    pub fn floor_to_grid(&self, bits: u32) -> Self {
        let scaled = &self.0 * BigRational::from_integer(BigInt::one() << bits);
        Rational(BigRational::new(scaled.floor().to_integer(), BigInt::one() << bits))
    }

    /// Smallest multiple of `2^-bits` that is `>= self`.
    pub fn ceil_to_grid(&self, bits: u32) -> Self {
        let scaled = &self.0 * BigRational::from_integer(BigInt::one() << bits);
        Rational(BigRational::new(scaled.ceil().to_integer(), BigInt::one() << bits))
    }

    /// Nearest multiple of `2^-bits` (error at most `2^-(bits+1)`).
    pub fn round_to_grid(&self, bits: u32) -> Self {
        let scaled = &self.0 * BigRational::from_integer(BigInt::one() << bits);
        Rational(BigRational::new(scaled.round().to_integer(), BigInt::one() << bits))
    }

    /// Largest multiple of `2^-bits` whose square is `<= self`. Negative inputs give 0.
    pub fn sqrt_floor(&self, bits: u32) -> Self {
        if !self.is_positive() {
            return Rational::zero();
        }
        // floor(sqrt(floor(z))) == floor(sqrt(z)) for z >= 0
        let scaled = &self.0 * BigRational::from_integer(BigInt::one() << (2 * bits));
        let root = scaled.floor().to_integer().sqrt();
        Rational(BigRational::new(root, BigInt::one() << bits))
    }

    /// Smallest multiple of `2^-bits` whose square is `>= self`. Negative inputs give 0.
    pub fn sqrt_ceil(&self, bits: u32) -> Self {
        let lo = self.sqrt_floor(bits);
        if &lo.square() >= self {
            lo
        } else {
            lo + Rational::pow2(-(bits as i64))
        }
    }

    /// Smallest `e` with `|self| <= 2^e`. Panics on zero.
    pub fn ceil_log2(&self) -> i64 {
        assert!(!self.is_zero(), "ceil_log2 of zero");
        let a = self.abs();
        let n = a.numer().bits() as i64;
        let d = a.denom().bits() as i64;
        // 2^(n-1) <= num < 2^n, 2^(d-1) <= den < 2^d, so |x| < 2^(n-d+1)
        let mut e = n - d + 1;
        while e > i64::MIN / 2 && a <= Rational::pow2(e - 1) {
            e -= 1;
        }
        e
    }

    pub fn pow(&self, exp: u32) -> Self {
        Rational(num_traits::pow(self.0.clone(), exp as usize))
    }

    /// Fixed-point decimal rendering truncated toward zero, for reports.
    pub fn to_decimal(&self, digits: usize) -> String {
        let scale = num_traits::pow(BigInt::from(10), digits);
        let scaled = (&self.0 * BigRational::from_integer(scale.clone())).trunc().to_integer();
        let (int_part, frac_part) = scaled.abs().div_rem(&scale);
        let sign = if self.is_negative() && !scaled.is_zero() { "-" } else { "" };
        if digits == 0 {
            return format!("{sign}{int_part}");
        }
        format!("{sign}{int_part}.{:0>width$}", frac_part.to_string(), width = digits)
    }
}

impl Default for Rational {
    fn default() -> Self {
        Rational::zero()
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Rational::from_integer(n)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom().is_one() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = ArithError;

    /// Accepts `"p/q"`, plain integers, and plain decimals like `"0.125"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ArithError::Parse(s.to_string());
        let t = s.trim();
        if let Some((n, d)) = t.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| err())?;
            let d: BigInt = d.trim().parse().map_err(|_| err())?;
            return Rational::new(n, d);
        }
        if let Some((int_part, frac_part)) = t.split_once('.') {
            if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
                return Err(err());
            }
            let negative = int_part.starts_with('-');
            let int_digits = int_part.trim_start_matches(['-', '+']);
            if !int_digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(err());
            }
            let digits: BigInt = format!("{int_digits}{frac_part}").parse().map_err(|_| err())?;
            let denom = num_traits::pow(BigInt::from(10), frac_part.len());
            let r = Rational::new(digits, denom)?;
            return Ok(if negative { -r } else { r });
        }
        let n: BigInt = t.parse().map_err(|_| err())?;
        Ok(Rational::from_integer(n))
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(self.0.$method(&rhs.0))
            }
        }
        impl $trait<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((&self.0).$method(rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl std::iter::Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

/// Three-way comparison; always terminates since both sides are exact.
pub fn rat_cmp(a: &Rational, b: &Rational) -> Ordering {
    a.cmp(b)
}

/// Complex number with exact rational parts.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct ComplexRational {
    pub re: Rational,
    pub im: Rational,
}

impl ComplexRational {
    pub fn new(re: Rational, im: Rational) -> Self {
        ComplexRational { re, im }
    }

    pub fn real(re: Rational) -> Self {
        ComplexRational { re, im: Rational::zero() }
    }

    pub fn zero() -> Self {
        ComplexRational::default()
    }

    pub fn one() -> Self {
        ComplexRational::real(Rational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        ComplexRational { re: self.re.clone(), im: -&self.im }
    }

    /// `re² + im²`.
    pub fn norm_sq(&self) -> Rational {
        self.re.square() + self.im.square()
    }
}

impl From<Rational> for ComplexRational {
    fn from(re: Rational) -> Self {
        ComplexRational::real(re)
    }
}

impl fmt::Debug for ComplexRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else {
            write!(f, "({} + {}i)", self.re, self.im)
        }
    }
}

impl Add<&ComplexRational> for &ComplexRational {
    type Output = ComplexRational;
    fn add(self, rhs: &ComplexRational) -> ComplexRational {
        ComplexRational { re: &self.re + &rhs.re, im: &self.im + &rhs.im }
    }
}

impl Sub<&ComplexRational> for &ComplexRational {
    type Output = ComplexRational;
    fn sub(self, rhs: &ComplexRational) -> ComplexRational {
        ComplexRational { re: &self.re - &rhs.re, im: &self.im - &rhs.im }
    }
}

impl Mul<&ComplexRational> for &ComplexRational {
    type Output = ComplexRational;
    fn mul(self, rhs: &ComplexRational) -> ComplexRational {
        ComplexRational {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
}

impl Neg for &ComplexRational {
    type Output = ComplexRational;
    fn neg(self) -> ComplexRational {
        ComplexRational { re: -&self.re, im: -&self.im }
    }
}

/// Column vector of complex rationals.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct RationalVector(Vec<ComplexRational>);

impl RationalVector {
    pub fn new(entries: Vec<ComplexRational>) -> Self {
        RationalVector(entries)
    }

    pub fn from_real(entries: Vec<Rational>) -> Self {
        RationalVector(entries.into_iter().map(ComplexRational::real).collect())
    }

    pub fn zeros(len: usize) -> Self {
        RationalVector(vec![ComplexRational::zero(); len])
    }

    /// `scale * e_index` in `len` dimensions.
    pub fn basis(len: usize, index: usize, scale: Rational) -> Self {
        let mut v = Self::zeros(len);
        v.0[index] = ComplexRational::real(scale);
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[ComplexRational] {
        &self.0
    }

    pub fn get(&self, i: usize) -> &ComplexRational {
        &self.0[i]
    }

    pub fn is_real(&self) -> bool {
        self.0.iter().all(ComplexRational::is_real)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(ComplexRational::is_zero)
    }

    pub fn checked_sub(&self, rhs: &RationalVector) -> Result<RationalVector, ArithError> {
        self.check_len(rhs.len())?;
        Ok(RationalVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect()))
    }

    pub fn checked_add(&self, rhs: &RationalVector) -> Result<RationalVector, ArithError> {
        self.check_len(rhs.len())?;
        Ok(RationalVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect()))
    }

    pub fn scale(&self, s: &Rational) -> RationalVector {
        let s = ComplexRational::real(s.clone());
        RationalVector(self.0.iter().map(|x| x * &s).collect())
    }

    /// First `len` entries.
    pub fn truncate(&self, len: usize) -> RationalVector {
        RationalVector(self.0[..len.min(self.len())].to_vec())
    }

    /// Append zeros up to `len`.
    pub fn zero_pad(&self, len: usize) -> RationalVector {
        let mut v = self.0.clone();
        v.resize(len.max(self.len()), ComplexRational::zero());
        RationalVector(v)
    }

    pub fn to_f64_parts(&self) -> (Vec<f64>, Vec<f64>) {
        self.0.iter().map(|z| (z.re.to_f64(), z.im.to_f64())).unzip()
    }

    fn check_len(&self, len: usize) -> Result<(), ArithError> {
        if self.len() != len {
            return Err(ArithError::DimensionMismatch { expected: self.len(), found: len });
        }
        Ok(())
    }
}

impl fmt::Debug for RationalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

impl FromIterator<ComplexRational> for RationalVector {
    fn from_iter<I: IntoIterator<Item = ComplexRational>>(iter: I) -> Self {
        RationalVector(iter.into_iter().collect())
    }
}

/// Dense row-major complex-rational matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<ComplexRational>,
}

impl RationalMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<ComplexRational>) -> Result<Self, ArithError> {
        if entries.len() != rows * cols {
            return Err(ArithError::DimensionMismatch { expected: rows * cols, found: entries.len() });
        }
        Ok(RationalMatrix { rows, cols, entries })
    }

    pub fn from_real_rows(rows: &[Vec<Rational>]) -> Result<Self, ArithError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(ArithError::DimensionMismatch { expected: cols, found: row.len() });
            }
            entries.extend(row.iter().cloned().map(ComplexRational::real));
        }
        Ok(RationalMatrix { rows: rows.len(), cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix { rows, cols, entries: vec![ComplexRational::zero(); rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &ComplexRational {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: ComplexRational) {
        self.entries[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[ComplexRational] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[ComplexRational] {
        &self.entries
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(ComplexRational::is_real)
    }

    pub fn mul_vec(&self, x: &RationalVector) -> Result<RationalVector, ArithError> {
        if x.len() != self.cols {
            return Err(ArithError::DimensionMismatch { expected: self.cols, found: x.len() });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x.entries())
                    .fold(ComplexRational::zero(), |acc, (a, b)| &acc + &(a * b))
            })
            .collect())
    }

    /// Sum of squared moduli of all entries.
    pub fn frobenius_sq(&self) -> Rational {
        self.entries.iter().map(ComplexRational::norm_sq).sum()
    }
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<_> = (0..self.rows).map(|i| self.row(i).to_vec()).collect();
        f.debug_list().entries(rows).finish()
    }
}

/// `Σ (re_i² + im_i²)`.
pub fn l2_norm_sq(v: &RationalVector) -> Rational {
    v.entries().iter().map(ComplexRational::norm_sq).sum()
}

/// `Σ |re_i|` for vectors with no imaginary part.
pub fn l1_norm_real(v: &RationalVector) -> Result<Rational, ArithError> {
    v.entries()
        .iter()
        .enumerate()
        .map(|(index, z)| if z.is_real() { Ok(z.re.abs()) } else { Err(ArithError::NotReal { index }) })
        .sum()
}
