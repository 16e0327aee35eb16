//! The two adversarial input families `ω¹ₙ`, `ω²ₙ` and their common limit `ω*`.
//!
//! `ω^j_n` is the single row `(a, …, a + 2⁻ⁿ, …, a)` with the bump at
//! position `j`, and `y = 1`. Both families converge to the constant row
//! `ω*` at rate `2⁻ⁿ`, yet their unique minimizers
//! `(1−ε)/(a + 2⁻ⁿ) · e_j` stay a fixed distance apart.

use num_bigint::BigInt;
use thiserror::Error;

use crate::qcbp::{embed, oracle_solution_set, select, solve_numeric, Instance, QcbpError, SolveOptions};
use crate::rational::{l2_norm_sq, Rational, RationalVector};

/// Bits of the dyadic grid `kappa` lives on.
pub const KAPPA_BITS: u32 = 20;
const ROOT_BITS: u32 = 40;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FamilyError {
    #[error("a must be positive")]
    NonPositiveA,
    #[error("eps must lie in (0,1)")]
    EpsOutOfRange,
    #[error("need 1 <= m < N and N + 1 - m >= 2, got m={m}, N={n}")]
    Dimensions { m: usize, n: usize },
    #[error(transparent)]
    Qcbp(#[from] QcbpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    First,
    Second,
}

impl Family {
    pub fn index(self) -> usize {
        match self {
            Family::First => 0,
            Family::Second => 1,
        }
    }

    pub fn other(self) -> Family {
        match self {
            Family::First => Family::Second,
            Family::Second => Family::First,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyParams {
    a: Rational,
    eps: Rational,
    n: usize,
    m: usize,
}

impl Default for FamilyParams {
    fn default() -> Self {
        FamilyParams { a: Rational::one(), eps: Rational::frac(1, 2), n: 2, m: 1 }
    }
}

impl FamilyParams {
    pub fn new(a: Rational, eps: Rational, n: usize, m: usize) -> Result<Self, FamilyError> {
        if !a.is_positive() {
            return Err(FamilyError::NonPositiveA);
        }
        if !eps.is_positive() || eps >= Rational::one() {
            return Err(FamilyError::EpsOutOfRange);
        }
        if m == 0 || m >= n || n + 1 - m < 2 {
            return Err(FamilyError::Dimensions { m, n });
        }
        Ok(FamilyParams { a, eps, n, m })
    }

    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn eps(&self) -> &Rational {
        &self.eps
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    /// Length of the single-row core, `N + 1 − m`.
    pub fn core_len(&self) -> usize {
        self.n + 1 - self.m
    }

    fn bumped(&self, n: u32) -> Rational {
        &self.a + Rational::pow2(-(n as i64))
    }

    fn build(&self, row: Vec<Rational>) -> Instance {
        let core = Instance::single_row(row, self.eps.clone()).expect("valid family row");
        embed(&core, self.m, self.n).expect("dimensions checked in FamilyParams::new")
    }
}

/// `ω^j_n`: `a + 2⁻ⁿ` at position `j`, `a` elsewhere, `y = 1`, embedded when `m > 1`.
pub fn omega(j: Family, n: u32, p: &FamilyParams) -> Instance {
    let mut row = vec![p.a.clone(); p.core_len()];
    row[j.index()] = p.bumped(n);
    p.build(row)
}

pub fn omega_star(p: &FamilyParams) -> Instance {
    p.build(vec![p.a.clone(); p.core_len()])
}

/// `(1−ε)/(a + 2⁻ⁿ) · e_j`, padded to length `N`.
pub fn exact_solution(j: Family, n: u32, p: &FamilyParams) -> RationalVector {
    let scale = (Rational::one() - &p.eps).checked_div(&p.bumped(n)).expect("a > 0");
    RationalVector::basis(p.n, j.index(), scale)
}

/// The selected minimizer at the limit: `((1−ε)/a) e₁`.
pub fn limit_solution(p: &FamilyParams) -> RationalVector {
    let core = omega_star(&p.clone().core_only());
    select(&oracle_solution_set(&core).expect("valid limit")).zero_pad(p.n)
}

impl FamilyParams {
    fn core_only(self) -> FamilyParams {
        let len = self.core_len();
        FamilyParams { n: len, m: 1, ..self }
    }
}

/// Entrywise difference `ω^j_n − ω*` as `(row, col, value)` triples; the
/// measurement never changes, so only matrix entries appear.
pub fn input_difference(j: Family, n: u32, p: &FamilyParams) -> Vec<(usize, usize, Rational)> {
    let (x, s) = (omega(j, n, p), omega_star(p));
    let mut out = Vec::new();
    for r in 0..x.rows() {
        for c in 0..x.cols() {
            let d = &x.a().get(r, c).re - &s.a().get(r, c).re;
            if !d.is_zero() {
                out.push((r, c, d));
            }
        }
    }
    out
}

/// `‖ω^j_n − ω*‖ = ‖ΔA‖_F + ‖Δy‖₂`, exact.
pub fn input_distance(j: Family, n: u32, p: &FamilyParams) -> Rational {
    let (x, s) = (omega(j, n, p), omega_star(p));
    let da: Rational = x
        .a()
        .entries()
        .iter()
        .zip(s.a().entries())
        .map(|(u, v)| (u - v).norm_sq())
        .sum();
    let dy = l2_norm_sq(&x.y().checked_sub(s.y()).expect("same shape"));
    exact_sqrt(&da).expect("single-entry difference") + exact_sqrt(&dy).expect("zero")
}

fn exact_sqrt(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let (n, d) = (r.numer().sqrt(), r.denom().sqrt());
    let ok = |s: &BigInt, t: &BigInt| s * s == *t;
    (ok(&n, r.numer()) && ok(&d, r.denom())).then(|| Rational::new(n, d).expect("nonzero denominator"))
}

/// `‖x¹ₙ − x²ₙ‖²`, exact.
pub fn output_pair_dist_sq(n: u32, p: &FamilyParams) -> Rational {
    let d = exact_solution(Family::First, n, p)
        .checked_sub(&exact_solution(Family::Second, n, p))
        .expect("same length");
    l2_norm_sq(&d)
}

/// Whether `x` lies in `S^j = {(1−ε) z e_j : z ∈ [2/(2a+1), 1/a)}`.
pub fn in_separated_set(j: Family, x: &RationalVector, p: &FamilyParams) -> bool {
    if x.len() != p.n || !x.is_real() {
        return false;
    }
    let one_minus = Rational::one() - &p.eps;
    for (i, v) in x.entries().iter().enumerate() {
        if i != j.index() && !v.is_zero() {
            return false;
        }
    }
    let z = x.get(j.index()).re.checked_div(&one_minus).expect("eps < 1");
    let lo = Rational::from(2).checked_div(&(Rational::from(2) * &p.a + Rational::one())).expect("positive");
    let hi = p.a.recip().expect("positive");
    z >= lo && z < hi
}

#[derive(Debug, Clone)]
pub struct SeparationCertificate {
    /// Dyadic `p/2^20` with `kappa² < ‖x¹ₙ − x²ₙ‖²` for every `n ≤ n_max`.
    pub kappa: Rational,
    /// The `n` attaining the minimum pair distance.
    pub witness_n: u32,
    pub x1: RationalVector,
    pub x2: RationalVector,
    pub min_dist_sq: Rational,
    /// `‖ω¹ₙ − ω²ₙ‖ ≤ 2⁻ⁿ⁺¹` at the witness.
    pub input_gap_bound: Rational,
}

pub fn separation_certificate(p: &FamilyParams, n_max: u32) -> SeparationCertificate {
    assert!(n_max >= 1, "n_max must be at least 1");
    for n in 1..=n_max {
        for j in [Family::First, Family::Second] {
            assert_eq!(input_distance(j, n, p), Rational::pow2(-(n as i64)), "input convergence");
        }
    }
    let (witness_n, min_dist_sq) = (1..=n_max)
        .map(|n| (n, output_pair_dist_sq(n, p)))
        .min_by(|a, b| a.1.cmp(&b.1))
        .expect("n_max >= 1");
    let scale = Rational::pow2(KAPPA_BITS as i64);
    let mut kappa = min_dist_sq.sqrt_floor(KAPPA_BITS);
    if kappa.square() >= min_dist_sq {
        kappa = kappa - scale.recip().expect("nonzero");
    }
    for n in 1..=n_max {
        assert!(kappa.square() < output_pair_dist_sq(n, p), "kappa certificate");
    }
    SeparationCertificate {
        kappa,
        witness_n,
        x1: exact_solution(Family::First, witness_n, p),
        x2: exact_solution(Family::Second, witness_n, p),
        min_dist_sq,
        input_gap_bound: Rational::pow2(1 - witness_n as i64),
    }
}

#[derive(Debug, Clone)]
pub struct ReportRow {
    pub n: u32,
    pub input_dist: Rational,
    pub output_dist_sq: Rational,
    pub output_dist_lower: Rational,
    pub output_dist_upper: Rational,
    pub solver_dist: Option<f64>,
    pub kappa: Rational,
}

/// One row per `n ≤ n_max`. With `solve`, both family instances are also run
/// through [`solve_numeric`] and the distance of its outputs is reported.
pub fn discontinuity_report(
    p: &FamilyParams,
    n_max: u32,
    solve: Option<&SolveOptions>,
) -> Result<Vec<ReportRow>, FamilyError> {
    let cert = separation_certificate(p, n_max);
    let mut rows = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let sq = output_pair_dist_sq(n, p);
        let solver_dist = match solve {
            Some(opts) => {
                let x1 = solve_numeric(&omega(Family::First, n, p), opts)?.x_hat.to_f64_parts();
                let x2 = solve_numeric(&omega(Family::Second, n, p), opts)?.x_hat.to_f64_parts();
                let d: f64 = x1.0.iter().zip(&x2.0).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
                    + x1.1.iter().zip(&x2.1).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
                Some(d.sqrt())
            }
            None => None,
        };
        rows.push(ReportRow {
            n,
            input_dist: input_distance(Family::First, n, p),
            output_dist_lower: sq.sqrt_floor(ROOT_BITS),
            output_dist_upper: sq.sqrt_ceil(ROOT_BITS),
            output_dist_sq: sq,
            solver_dist,
            kappa: cert.kappa.clone(),
        });
    }
    Ok(rows)
}

pub const REPORT_HEADER: &str = "n,input_dist,output_dist_sq,output_dist_lower,solver_dist,kappa";

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in rows {
        let solver = r.solver_dist.map(|d| format!("{d:.12}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n,
            r.input_dist,
            r.output_dist_sq,
            r.output_dist_lower.to_decimal(12),
            solver,
            r.kappa.to_decimal(12)
        ));
    }
    out
}
