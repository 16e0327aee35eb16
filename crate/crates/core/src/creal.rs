//! Computable reals as approximation programs.
//!
//! A [`CReal`] wraps a pure function `k ↦ r_k` with `|r_k − x| ≤ 2^-k` for the
//! represented real `x`. Every combinator below derives, from the output
//! precision it is asked for, the input precisions it must request so that
//! the `2^-k` contract still holds. No step is heuristic: each bound is
//! written out next to the code that relies on it.
//!
//! Partial operations (division, `sqrt`, `ln`) take an explicit rational
//! witness for their domain condition instead of searching for one, because
//! such a search would only be semi-decidable.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use thiserror::Error;

use crate::rational::{ComplexRational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CRealError {
    #[error("{op}: a positive rational lower bound is required")]
    MissingWitness { op: &'static str },
    #[error("{op}: witness {witness} is contradicted by an approximation of the argument")]
    WitnessRefuted { op: &'static str, witness: String },
}

type Approximator = dyn Fn(u32) -> Rational + Send + Sync;

struct Node {
    label: Option<String>,
    approx: Arc<Approximator>,
    memo: Mutex<HashMap<u32, Rational>>,
}

/// A computable real number.
#[derive(Clone)]
pub struct CReal(Arc<Node>);

/// Outcome of a bounded comparison. There is deliberately no `Equal`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Less,
    Greater,
    Undecided,
}

impl CReal {
    /// Wrap an approximation program. The caller guarantees `|f(k) − x| ≤ 2^-k`.
    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(u32) -> Rational + Send + Sync + 'static,
    {
        CReal(Arc::new(Node { label: None, approx: Arc::new(f), memo: Mutex::new(HashMap::new()) }))
    }

    pub fn from_rational(r: Rational) -> Self {
        CReal::from_fn(move |_| r.clone()).with_label(String::new())
    }

    pub fn from_i64(n: i64) -> Self {
        CReal::from_rational(Rational::from(n))
    }

    /// Same approximator under a new label; memoized values are carried over.
    pub fn with_label(self, label: impl Into<String>) -> Self {
        let label = label.into();
        let memo = self.0.memo.lock().expect("memo poisoned").clone();
        CReal(Arc::new(Node {
            label: if label.is_empty() { None } else { Some(label) },
            approx: Arc::clone(&self.0.approx),
            memo: Mutex::new(memo),
        }))
    }

    pub fn label(&self) -> Option<&str> {
        self.0.label.as_deref()
    }

    /// A rational within `2^-k` of the value.
    pub fn approx(&self, k: u32) -> Rational {
        if let Some(r) = self.0.memo.lock().expect("memo poisoned").get(&k) {
            return r.clone();
        }
        let r = (self.0.approx)(k);
        self.0.memo.lock().expect("memo poisoned").entry(k).or_insert(r).clone()
    }

    /// `label,k,num/den`
    pub fn dump(&self, k: u32) -> String {
        format!("{},{},{}", self.label().unwrap_or("-"), k, self.approx(k))
    }

    /// A rational upper bound on `|x|`.
    pub fn magnitude_bound(&self) -> Rational {
        self.approx(0).abs() + Rational::one()
    }

    pub fn neg(&self) -> CReal {
        let x = self.clone();
        CReal::from_fn(move |k| -x.approx(k))
    }

    pub fn add(&self, other: &CReal) -> CReal {
        let (x, y) = (self.clone(), other.clone());
        // 2·2^-(k+2) from the inputs plus 2^-(k+3) from rounding < 2^-k
        CReal::from_fn(move |k| (x.approx(k + 2) + y.approx(k + 2)).round_to_grid(k + 2))
    }

    pub fn sub(&self, other: &CReal) -> CReal {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &CReal) -> CReal {
        let (x, y) = (self.clone(), other.clone());
        let bx = x.magnitude_bound();
        let by = y.magnitude_bound() + Rational::one();
        let shift = nonneg_log2(&bx).max(nonneg_log2(&by));
        // |xy − x'y'| ≤ |x||y − y'| + |y'||x − x'| ≤ (bx + by)·2^-p ≤ 2^-(k+1)
        CReal::from_fn(move |k| {
            let p = k + 2 + shift;
            (x.approx(p) * y.approx(p)).round_to_grid(k + 2)
        })
    }

    /// `1/x` given `0 < lower ≤ |x|`.
    pub fn recip(&self, lower: &Rational) -> Result<CReal, CRealError> {
        if !lower.is_positive() {
            return Err(CRealError::MissingWitness { op: "div" });
        }
        let inv_log = lower.recip().expect("positive").ceil_log2();
        let p0 = u32::try_from((inv_log + 1).max(0)).expect("precision overflow");
        let probe = self.approx(p0);
        if probe.abs() + Rational::pow2(-(p0 as i64)) < *lower {
            return Err(CRealError::WitnessRefuted { op: "div", witness: lower.to_string() });
        }
        let x = self.clone();
        // With 2^-p ≤ lower/2 we get |x'| ≥ lower/2, hence
        // |1/x − 1/x'| ≤ 2^-p / (lower · lower/2) = 2^(1-p) / lower² ≤ 2^-(k+1).
        Ok(CReal::from_fn(move |k| {
            let p = (k as i64 + 2 + 2 * inv_log).max(inv_log + 1).max(0) as u32;
            let xp = x.approx(p);
            xp.recip().expect("separated from zero").round_to_grid(k + 1)
        }))
    }

    /// `x / y` given `0 < lower ≤ |y|`.
    pub fn div(&self, other: &CReal, lower: &Rational) -> Result<CReal, CRealError> {
        Ok(self.mul(&other.recip(lower)?))
    }

    pub fn max(&self, other: &CReal) -> CReal {
        let (x, y) = (self.clone(), other.clone());
        // max is 1-Lipschitz in the sup norm
        CReal::from_fn(move |k| x.approx(k).max(y.approx(k)))
    }

    pub fn min(&self, other: &CReal) -> CReal {
        let (x, y) = (self.clone(), other.clone());
        CReal::from_fn(move |k| x.approx(k).min(y.approx(k)))
    }

    pub fn abs(&self) -> CReal {
        let x = self.clone();
        CReal::from_fn(move |k| x.approx(k).abs())
    }

    /// `√x` given a rational `0 ≤ lower ≤ x`.
    pub fn sqrt(&self, lower: &Rational) -> Result<CReal, CRealError> {
        if lower.is_negative() {
            return Err(CRealError::MissingWitness { op: "sqrt" });
        }
        let probe = self.approx(16);
        if probe + Rational::pow2(-16) < *lower {
            return Err(CRealError::WitnessRefuted { op: "sqrt", witness: lower.to_string() });
        }
        // With lower > 0: |√x − √z| ≤ |x − z| / √lower, so p = k + 1 + log2(1/√lower).
        // Otherwise fall back to |√x − √z| ≤ √|x − z| with p = 2k + 2.
        let root_lower = lower.sqrt_floor(32);
        let shift = if root_lower.is_positive() {
            let a = root_lower.recip().expect("positive").ceil_log2().max(0);
            let b = lower.recip().expect("positive").ceil_log2().max(0) + 1;
            Some((a as u32, b as u32))
        } else {
            None
        };
        let x = self.clone();
        Ok(CReal::from_fn(move |k| {
            let p = match shift {
                Some((a, b)) => (k + 1 + a).max(b),
                None => 2 * k + 2,
            };
            let z = x.approx(p).max(Rational::zero());
            newton_sqrt(&z, k + 1)
        }))
    }

    pub fn exp(&self) -> CReal {
        let x = self.clone();
        // |x'| ≤ |x| + 1 ≤ B + 1 so e^max(x, x') ≤ 3^(⌈B⌉+1)
        let ceil_b = ceil_to_u32(&x.magnitude_bound());
        let growth = BigInt::from(3).pow(ceil_b + 1).bits() as u32;
        CReal::from_fn(move |k| {
            let p = k + 2 + growth;
            exp_rational(&x.approx(p), k + 1)
        })
    }

    /// Natural logarithm given `0 < lower ≤ x`.
    pub fn ln(&self, lower: &Rational) -> Result<CReal, CRealError> {
        if !lower.is_positive() {
            return Err(CRealError::MissingWitness { op: "ln" });
        }
        let inv_log = lower.recip().expect("positive").ceil_log2();
        let p0 = u32::try_from((inv_log + 1).max(0)).expect("precision overflow");
        if self.approx(p0) + Rational::pow2(-(p0 as i64)) < *lower {
            return Err(CRealError::WitnessRefuted { op: "ln", witness: lower.to_string() });
        }
        let x = self.clone();
        // 2^-p ≤ lower/2 keeps x' ≥ lower/2, then |ln x − ln x'| ≤ 2^(1-p)/lower ≤ 2^-(k+1)
        Ok(CReal::from_fn(move |k| {
            let p = (k as i64 + 2 + inv_log).max(inv_log + 1).max(0) as u32;
            ln_rational(&x.approx(p), k + 1)
        }))
    }
}

impl fmt::Debug for CReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CReal({} ≈ {})", self.label().unwrap_or("-"), self.approx(16).to_decimal(5))
    }
}

/// Certified comparison up to precision `budget`.
///
/// Returns `Less` (x < y) or `Greater` once the `2^-k` intervals around the
/// two approximations are disjoint for some `k ≤ budget`, and `Undecided`
/// otherwise. Equality is never asserted.
pub fn compare(x: &CReal, y: &CReal, budget: u32) -> Comparison {
    for k in 0..=budget {
        let d = y.approx(k) - x.approx(k);
        let tol = Rational::pow2(1 - k as i64);
        if d > tol {
            return Comparison::Less;
        }
        if d < -&tol {
            return Comparison::Greater;
        }
    }
    Comparison::Undecided
}

/// Square root of a nonnegative rational within `2^-bits`, from above.
///
/// Newton steps on the bracket `[z/hi, hi]`, with `hi` rounded outward to a
/// dyadic grid so denominators stay bounded. `hi ≥ √z` holds throughout by
/// the AM-GM inequality.
pub fn newton_sqrt(z: &Rational, bits: u32) -> Rational {
    if !z.is_positive() {
        return Rational::zero();
    }
    let grid = bits + 2;
    let target = Rational::pow2(-(bits as i64));
    let mut hi = z.clone().max(Rational::one()).ceil_to_grid(grid);
    loop {
        let lo = z.checked_div(&hi).expect("hi > 0");
        if &hi - &lo <= target {
            return hi;
        }
        let next = ((&hi + &lo) * Rational::frac(1, 2)).ceil_to_grid(grid);
        if next >= hi {
            // fixed point on the grid implies hi − lo < 2^(1-grid) < target
            return hi;
        }
        hi = next;
    }
}

/// `e^r` within `2^-bits`.
///
/// Range reduction `e^r = (e^(r/2^s))^(2^s)` with `|r/2^s| ≤ 1/2`, a truncated
/// Taylor series, then `s` squarings. Each squaring multiplies the absolute
/// error by at most `2V + 1` where `V ≥ e^|r|` bounds every intermediate value.
pub fn exp_rational(r: &Rational, bits: u32) -> Rational {
    if r.is_zero() {
        return Rational::one();
    }
    let s = u32::try_from((r.ceil_log2() + 1).max(0)).expect("argument too large");
    let t = r * Rational::pow2(-(s as i64));
    let v_bound = BigInt::from(3).pow(ceil_to_u32(&r.abs()));
    let c_log = (v_bound * 2u32 + 2u32).bits() as u32;
    let work = bits + 1 + s * c_log;

    // Series for |t| ≤ 1/2: remainder after the t^n term ≤ 2 |t|^(n+1) / (n+1)!
    let rem_target = Rational::pow2(-(work as i64 + 2));
    let half = Rational::frac(1, 2);
    let mut n = 0u32;
    let mut rem = Rational::from(2) * half.clone();
    while rem > rem_target {
        n += 1;
        rem = rem * &half * Rational::frac(1, n as i64 + 1);
    }
    let term_grid = work + 3 + nonneg_log2(&Rational::from(n as i64 + 2));
    let mut term = Rational::one();
    let mut sum = Rational::one();
    for i in 1..=n {
        term = (term * &t * Rational::frac(1, i as i64)).round_to_grid(term_grid);
        sum = sum + &term;
    }
    let mut v = sum.round_to_grid(work);
    for _ in 0..s {
        v = v.square().round_to_grid(work);
    }
    v
}

/// `ln z` for rational `z > 0`, within `2^-bits`.
///
/// Writes `z = 2^e·u` with `u ∈ [1, 2)`, then `ln z = e·ln 2 + 2·atanh((u−1)/(u+1))`
/// with the atanh argument in `[0, 1/3)`.
pub fn ln_rational(z: &Rational, bits: u32) -> Rational {
    assert!(z.is_positive(), "ln of a non-positive rational");
    let mut e = z.ceil_log2();
    let mut u = z * Rational::pow2(-e);
    if u < Rational::one() {
        e -= 1;
        u = u * Rational::from(2);
    }
    let v = (&u - Rational::one()).checked_div(&(&u + Rational::one())).expect("u + 1 > 0");
    let ln_u = two_atanh(&v, bits + 1);
    if e == 0 {
        return ln_u;
    }
    let e_bits = nonneg_log2(&Rational::from(e.unsigned_abs() as i64));
    let ln2 = two_atanh(&Rational::frac(1, 3), bits + 1 + e_bits);
    ln_u + Rational::from(e) * ln2
}

/// `2·atanh(v)` for `0 ≤ v ≤ 1/3`, within `2^-bits`.
fn two_atanh(v: &Rational, bits: u32) -> Rational {
    if v.is_zero() {
        return Rational::zero();
    }
    // remainder after the v^(2n+1) term ≤ v^(2n+3) / ((2n+3)(1 − v²)) ≤ (9/8)·9^-(n+1)·(1/3)
    let rem_target = Rational::pow2(-(bits as i64 + 3));
    let mut n = 0u32;
    let mut rem = Rational::frac(9, 8) * Rational::frac(1, 27);
    while rem > rem_target {
        n += 1;
        rem = rem * Rational::frac(1, 9);
    }
    let grid = bits + 4 + nonneg_log2(&Rational::from(n as i64 + 1));
    let v_sq = v.square();
    let mut power = v.round_to_grid(grid);
    let mut sum = power.clone();
    for i in 1..=n {
        power = (power * &v_sq).round_to_grid(grid);
        sum = sum + (&power * Rational::frac(1, 2 * i as i64 + 1)).round_to_grid(grid);
    }
    (sum * Rational::from(2)).round_to_grid(bits + 1)
}

/// `max(0, ⌈log2 x⌉)` for positive `x`.
fn nonneg_log2(x: &Rational) -> u32 {
    if x.is_zero() {
        return 0;
    }
    x.ceil_log2().max(0) as u32
}

fn ceil_to_u32(x: &Rational) -> u32 {
    let c = x.ceil_to_grid(0);
    u32::try_from(c.numer().clone()).expect("magnitude bound too large")
}

/// A complex number with computable real and imaginary parts.
#[derive(Clone, Debug)]
pub struct CComplex {
    pub re: CReal,
    pub im: CReal,
}

impl CComplex {
    pub fn new(re: CReal, im: CReal) -> Self {
        CComplex { re, im }
    }

    pub fn from_complex_rational(z: &ComplexRational) -> Self {
        CComplex { re: CReal::from_rational(z.re.clone()), im: CReal::from_rational(z.im.clone()) }
    }

    pub fn add(&self, other: &CComplex) -> CComplex {
        CComplex { re: self.re.add(&other.re), im: self.im.add(&other.im) }
    }

    pub fn sub(&self, other: &CComplex) -> CComplex {
        CComplex { re: self.re.sub(&other.re), im: self.im.sub(&other.im) }
    }

    pub fn mul(&self, other: &CComplex) -> CComplex {
        CComplex {
            re: self.re.mul(&other.re).sub(&self.im.mul(&other.im)),
            im: self.re.mul(&other.im).add(&self.im.mul(&other.re)),
        }
    }

    /// `re² + im²`.
    pub fn norm_sq(&self) -> CReal {
        self.re.mul(&self.re).add(&self.im.mul(&self.im))
    }

    pub fn abs(&self) -> CReal {
        self.norm_sq().sqrt(&Rational::zero()).expect("norm_sq is nonnegative")
    }
}

/// Modulus of convergence `e(n, N)`, normalized to be nondecreasing in both
/// arguments by taking running maxima.
pub struct Modulus {
    raw: Box<dyn Fn(u64, u32) -> u64 + Send + Sync>,
    table: Mutex<HashMap<(u64, u32), u64>>,
}

impl Modulus {
    /// Modulus depending only on the target precision `N`.
    pub fn uniform<F>(f: F) -> Self
    where
        F: Fn(u32) -> u64 + Send + Sync + 'static,
    {
        Modulus::indexed(move |_, big_n| f(big_n))
    }

    /// Modulus depending on the sequence index `n` and the precision `N`.
    pub fn indexed<F>(f: F) -> Self
    where
        F: Fn(u64, u32) -> u64 + Send + Sync + 'static,
    {
        Modulus { raw: Box::new(f), table: Mutex::new(HashMap::new()) }
    }

    /// `e(n, N) = N`.
    pub fn identity() -> Self {
        Modulus::uniform(|big_n| u64::from(big_n))
    }

    /// `max { e(n', N') : n' ≤ n, N' ≤ N }`.
    pub fn eval(&self, n: u64, big_n: u32) -> u64 {
        let mut table = self.table.lock().expect("modulus table poisoned");
        if let Some(&v) = table.get(&(n, big_n)) {
            return v;
        }
        for i in 0..=n {
            for j in 0..=big_n {
                if table.contains_key(&(i, j)) {
                    continue;
                }
                let mut v = (self.raw)(i, j);
                if i > 0 {
                    v = v.max(table[&(i - 1, j)]);
                }
                if j > 0 {
                    v = v.max(table[&(i, j - 1)]);
                }
                table.insert((i, j), v);
            }
        }
        table[&(n, big_n)]
    }
}

/// A double sequence `(n, k) ↦ r_{n,k}` converging effectively to `(x_n)`.
///
/// The caller asserts `|xs(n, k) − x_n| ≤ 2^-N` whenever `k ≥ e(n, N)`. Under
/// that hypothesis [`EffectiveLimit::term`] returns `x_n` as a [`CReal`].
#[derive(Clone)]
pub struct EffectiveLimit {
    xs: Arc<dyn Fn(u64, u64) -> Rational + Send + Sync>,
    modulus: Arc<Modulus>,
}

impl EffectiveLimit {
    pub fn term(&self, n: u64) -> CReal {
        let xs = Arc::clone(&self.xs);
        let modulus = Arc::clone(&self.modulus);
        CReal::from_fn(move |big_m| xs(n, modulus.eval(n, big_m))).with_label(format!("limit[{n}]"))
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }
}

pub fn effective_limit<F>(xs: F, modulus: Modulus) -> EffectiveLimit
where
    F: Fn(u64, u64) -> Rational + Send + Sync + 'static,
{
    EffectiveLimit { xs: Arc::new(xs), modulus: Arc::new(modulus) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn within(x: &Rational, target: &Rational, k: u32) -> bool {
        (x - target).abs() <= Rational::pow2(-(k as i64))
    }

    #[test]
    fn from_rational_is_exact() {
        assert_eq!(CReal::from_rational(q("1/2")).approx(50), q("1/2"));
        assert_eq!(CReal::from_rational(q("0")).approx(7), q("0"));
        assert_eq!(CReal::from_rational(q("9/8")).approx(3), q("9/8"));
    }

    #[test]
    fn arithmetic_examples() {
        let s = CReal::from_rational(q("1/3")).add(&CReal::from_rational(q("1/6")));
        assert!(within(&s.approx(20), &q("1/2"), 20));
        let r2 = CReal::from_i64(2).sqrt(&Rational::zero()).unwrap();
        assert!(within(&r2.mul(&r2).approx(20), &q("2"), 20));
        let x = CReal::from_rational(q("5/7"));
        for k in [0, 3, 17, 40] {
            assert!(within(&x.sub(&x).abs().approx(k), &Rational::zero(), k));
        }
    }

    #[test]
    fn division_needs_witness() {
        let x = CReal::from_i64(1);
        let y = CReal::from_i64(3);
        assert_eq!(x.div(&y, &Rational::zero()).unwrap_err(), CRealError::MissingWitness { op: "div" });
        assert!(matches!(x.div(&y, &q("5")), Err(CRealError::WitnessRefuted { .. })));
        let d = x.div(&y, &q("1")).unwrap();
        assert!(within(&d.approx(30), &q("1/3"), 30));
        let neg = x.div(&y.neg(), &q("2")).unwrap();
        assert!(within(&neg.approx(30), &q("-1/3"), 30));
    }

    #[test]
    fn sqrt_examples() {
        let four = CReal::from_i64(4).sqrt(&Rational::zero()).unwrap();
        assert!(within(&four.approx(30), &q("2"), 30));
        let two = CReal::from_i64(2).sqrt(&q("1")).unwrap().approx(10);
        // oracle: integer square root at a much finer scale
        let fine = q("2").sqrt_floor(40);
        assert!((&two - &fine).abs() <= Rational::pow2(-10) + Rational::pow2(-40));
        assert!(CReal::from_i64(2).sqrt(&q("-1")).is_err());
        assert!(CReal::from_i64(2).sqrt(&q("3")).is_err());
        assert_eq!(CReal::from_i64(0).sqrt(&Rational::zero()).unwrap().approx(12), Rational::zero());
    }

    #[test]
    fn exp_and_ln_examples() {
        let one = CReal::from_i64(0).exp();
        for k in [0, 5, 40] {
            assert!(within(&one.approx(k), &Rational::one(), k));
        }
        // e ≈ 2.718281828459045, bracketed by decimal bounds
        let e = CReal::from_i64(1).exp().approx(30);
        assert!(e > q("2.71828182") && e < q("2.71828183"));
        let l = CReal::from_i64(2).ln(&q("1")).unwrap().approx(30);
        assert!(l > q("0.69314718") && l < q("0.69314719"));
        assert!(CReal::from_i64(2).ln(&Rational::zero()).is_err());
        let back = CReal::from_rational(q("3/7")).exp().ln(&q("1")).unwrap().approx(40);
        assert!(within(&back, &q("3/7"), 40));
    }

    #[test]
    fn compare_examples() {
        let zero = CReal::from_i64(0);
        let one = CReal::from_i64(1);
        assert_eq!(compare(&zero, &one, 4), Comparison::Less);
        assert_eq!(compare(&one, &zero, 4), Comparison::Greater);
        let x = CReal::from_rational(q("1/3"));
        for budget in [0, 5, 30] {
            assert_eq!(compare(&x, &x, budget), Comparison::Undecided);
        }
        let r2 = CReal::from_i64(2).sqrt(&q("1")).unwrap();
        assert_eq!(compare(&r2, &CReal::from_rational(q("3/2")), 8), Comparison::Less);
    }

    #[test]
    fn modulus_normalization() {
        let m = Modulus::indexed(|n, big_n| if n % 2 == 0 { u64::from(big_n) * 3 } else { 1 });
        for n in 0..5 {
            for big_n in 0..6 {
                let v = m.eval(n, big_n);
                assert!(v >= m.eval(n.saturating_sub(1), big_n));
                assert!(v >= m.eval(n, big_n.saturating_sub(1)));
            }
        }
        assert_eq!(m.eval(1, 4), 12);
    }

    #[test]
    fn effective_limit_examples() {
        // xs(n, k) = 1/n + 2^-k with e(n, N) = N
        let lim = effective_limit(
            |n, k| Rational::frac(1, n as i64) + Rational::pow2(-(k as i64)),
            Modulus::identity(),
        );
        for n in 1..6u64 {
            assert!(within(&lim.term(n).approx(20), &Rational::frac(1, n as i64), 20));
        }
        let constant = effective_limit(|_, _| q("7/3"), Modulus::uniform(|_| 0));
        assert_eq!(constant.term(4).approx(12), q("7/3"));
    }

    #[test]
    fn dump_format() {
        let x = CReal::from_rational(q("9/8")).with_label("a");
        assert_eq!(x.dump(3), "a,3,9/8");
    }

    #[test]
    fn complex_modulus() {
        let z = CComplex::from_complex_rational(&ComplexRational::new(q("3"), q("4")));
        assert!(within(&z.abs().approx(20), &q("5"), 20));
        let w = z.mul(&z);
        assert!(within(&w.re.approx(20), &q("-7"), 20));
        assert!(within(&w.im.approx(20), &q("24"), 20));
    }
}
