//! Quadratically constrained basis pursuit.
//!
//! `min ‖x‖₁  subject to  ‖Ax − y‖₂ ≤ ε`
//!
//! For a single positive row with `y = 1` the full solution set is known in
//! closed form: the minimizers are the convex combinations of
//! `(1−ε)/a_j · e_j` over the indices where `a_j` is maximal. That set is
//! [`SolutionSimplex`], produced exactly by [`oracle_solution_set`]. Everything
//! else (general instances) goes through [`solve_numeric`] or the grid search
//! in [`brute_force_l1_min`].
//!
//! Indices are zero-based in the API. Reports and the CLI print them one-based.

mod brute;
mod json;
mod solver;

pub use brute::{brute_force_l1_min, BruteForceResult};
pub use json::InstanceJson;
pub use solver::{
    certified_operator_norm, full_row_rank, realify_matrix, solve_numeric, SolveOptions, SolveReport,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{l2_norm_sq, ArithError, ComplexRational, Rational, RationalMatrix, RationalVector};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QcbpError {
    #[error("invalid dimensions: {0}")]
    Dimensions(String),
    #[error("eps must be nonnegative")]
    NegativeEps,
    #[error("eps out of [0,1)")]
    EpsOutOfRange,
    #[error("oracle needs a single row, got {rows}")]
    NotSingleRow { rows: usize },
    #[error("oracle needs y = 1")]
    MeasurementNotOne,
    #[error("oracle needs a_{} to be a positive real", .index + 1)]
    NotPositiveReal { index: usize },
    #[error("matrix does not have full row rank")]
    RankDeficient,
    #[error("complex instances are not supported here")]
    ComplexUnsupported,
    #[error("brute force limits exceeded: {0}")]
    TooLarge(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// A QCBP problem `(A, y, ε)` with exact entries.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(try_from = "InstanceJson", into = "InstanceJson")]
pub struct Instance {
    a: RationalMatrix,
    y: RationalVector,
    eps: Rational,
}

impl Instance {
    /// Checks `1 ≤ m < N`, `N ≥ 2`, `len(y) = m` and `ε ≥ 0`.
    pub fn new(a: RationalMatrix, y: RationalVector, eps: Rational) -> Result<Self, QcbpError> {
        let (m, n) = (a.rows(), a.cols());
        if m < 1 || n < 2 || m >= n {
            return Err(QcbpError::Dimensions(format!("need 1 <= m < N and N >= 2, got m={m}, N={n}")));
        }
        if y.len() != m {
            return Err(QcbpError::Dimensions(format!("y has length {}, expected {m}", y.len())));
        }
        if eps.is_negative() {
            return Err(QcbpError::NegativeEps);
        }
        Ok(Instance { a, y, eps })
    }

    /// The `1 × N` instance `(row, 1, ε)`.
    pub fn single_row(row: Vec<Rational>, eps: Rational) -> Result<Self, QcbpError> {
        let a = RationalMatrix::from_real_rows(&[row])?;
        Instance::new(a, RationalVector::from_real(vec![Rational::one()]), eps)
    }

    pub fn a(&self) -> &RationalMatrix {
        &self.a
    }

    pub fn y(&self) -> &RationalVector {
        &self.y
    }

    pub fn eps(&self) -> &Rational {
        &self.eps
    }

    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    pub fn cols(&self) -> usize {
        self.a.cols()
    }

    pub fn is_real(&self) -> bool {
        self.a.is_real() && self.y.is_real()
    }

    pub fn with_eps(&self, eps: Rational) -> Result<Self, QcbpError> {
        Instance::new(self.a.clone(), self.y.clone(), eps)
    }

    pub fn with_y(&self, y: RationalVector) -> Result<Self, QcbpError> {
        Instance::new(self.a.clone(), y, self.eps.clone())
    }

    /// `‖Ax − y‖²`, exact.
    pub fn residual_sq(&self, x: &RationalVector) -> Result<Rational, QcbpError> {
        let ax = self.a.mul_vec(x)?;
        Ok(l2_norm_sq(&ax.checked_sub(&self.y)?))
    }
}

/// Exact feasibility test `‖Ax − y‖² ≤ ε²`.
pub fn feasible(inst: &Instance, x: &RationalVector) -> Result<bool, QcbpError> {
    Ok(inst.residual_sq(x)? <= inst.eps.square())
}

/// Closed-form solution set of a single-row positive instance with `y = 1`.
///
/// Points are `Σ_{j ∈ active} t_j · scale · coeff_j · e_j` with `t` in the
/// probability simplex, where `scale = 1 − ε` and `coeff_j = 1/a_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionSimplex {
    dim: usize,
    scale: Rational,
    active: Vec<usize>,
    coeff: Vec<Rational>,
}

impl SolutionSimplex {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> &Rational {
        &self.scale
    }

    /// Active indices in increasing order.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    /// `1/a_j` for each active index, aligned with [`SolutionSimplex::active`].
    pub fn coeff(&self) -> &[Rational] {
        &self.coeff
    }

    /// The common ℓ¹ norm of every point, `(1 − ε) / max_j a_j`.
    pub fn l1_value(&self) -> Rational {
        &self.scale * &self.coeff[0]
    }

    /// The point with barycentric weights `t` (one per active index).
    pub fn point(&self, t: &[Rational]) -> RationalVector {
        assert_eq!(t.len(), self.active.len(), "one weight per active index");
        let mut x = RationalVector::zeros(self.dim).entries().to_vec();
        for ((&j, c), tj) in self.active.iter().zip(&self.coeff).zip(t) {
            x[j] = ComplexRational::real(tj * &self.scale * c);
        }
        RationalVector::new(x)
    }

    /// Vertex for the `i`-th active index.
    pub fn vertex(&self, i: usize) -> RationalVector {
        let j = self.active[i];
        RationalVector::basis(self.dim, j, &self.scale * &self.coeff[i])
    }
}

/// The exact solution set for `A = (a_1 … a_N)`, `y = 1`, `0 ≤ ε < 1`, `a_j > 0`.
pub fn oracle_solution_set(inst: &Instance) -> Result<SolutionSimplex, QcbpError> {
    if inst.rows() != 1 {
        return Err(QcbpError::NotSingleRow { rows: inst.rows() });
    }
    if inst.y.get(0) != &ComplexRational::one() {
        return Err(QcbpError::MeasurementNotOne);
    }
    if inst.eps >= Rational::one() {
        return Err(QcbpError::EpsOutOfRange);
    }
    let row = inst.a.row(0);
    for (index, a) in row.iter().enumerate() {
        if !a.is_real() || !a.re.is_positive() {
            return Err(QcbpError::NotPositiveReal { index });
        }
    }
    let max = row.iter().map(|a| a.re.clone()).max().expect("N >= 2");
    let active: Vec<usize> = (0..row.len()).filter(|&j| row[j].re == max).collect();
    let coeff = active.iter().map(|&j| row[j].re.recip().expect("positive")).collect();
    Ok(SolutionSimplex { dim: row.len(), scale: Rational::one() - &inst.eps, active, coeff })
}

/// Single-valued selection: all weight on the smallest active index.
pub fn select(s: &SolutionSimplex) -> RationalVector {
    s.vertex(0)
}

/// `count` points of the simplex with seeded rational barycentric weights.
///
/// The first point is always [`select`]; the rest use weights `w_j / Σ w`
/// with `w_j` drawn from `1..=16`.
pub fn enumerate_solutions(s: &SolutionSimplex, count: usize, seed: u64) -> Vec<RationalVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push(select(s));
    let k = s.active.len();
    while out.len() < count {
        if k == 1 {
            out.push(s.vertex(0));
            continue;
        }
        let w: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=16)).collect();
        let total: i64 = w.iter().sum();
        let t: Vec<Rational> = w.iter().map(|&wi| Rational::frac(wi, total)).collect();
        out.push(s.point(&t));
    }
    out
}

/// Embed a single-row instance into `m × N` as `Â = (A 0; 0 I)`, `ŷ = (y, 0, …, 0)`.
///
/// The input row must have length `N + 1 − m`.
pub fn embed(inst1: &Instance, target_m: usize, target_n: usize) -> Result<Instance, QcbpError> {
    if inst1.rows() != 1 {
        return Err(QcbpError::NotSingleRow { rows: inst1.rows() });
    }
    if target_m == 0 || target_m >= target_n {
        return Err(QcbpError::Dimensions(format!("need 1 <= m < N, got m={target_m}, N={target_n}")));
    }
    let reduced = target_n + 1 - target_m;
    if reduced < 2 || inst1.cols() != reduced {
        return Err(QcbpError::Dimensions(format!(
            "row length {} does not match N + 1 - m = {reduced}",
            inst1.cols()
        )));
    }
    if target_m == 1 {
        return Ok(inst1.clone());
    }
    let mut a = RationalMatrix::zeros(target_m, target_n);
    for (j, v) in inst1.a.row(0).iter().enumerate() {
        a.set(0, j, v.clone());
    }
    for i in 1..target_m {
        a.set(i, reduced + i - 1, ComplexRational::one());
    }
    let y = inst1.y.zero_pad(target_m);
    Instance::new(a, y, inst1.eps.clone())
}

/// Inverse of the zero padding in [`embed`]: keep the first `N + 1 − m` entries.
pub fn restrict(x: &RationalVector, target_m: usize, target_n: usize) -> RationalVector {
    x.truncate(target_n + 1 - target_m)
}

/// Solution set of an embedded instance, computed through its single-row core.
///
/// Solutions of the embedded problem are those of the core, zero-padded.
pub fn embedded_select(inst: &Instance) -> Result<RationalVector, QcbpError> {
    let (m, n) = (inst.rows(), inst.cols());
    if m == 1 {
        return Ok(select(&oracle_solution_set(inst)?));
    }
    let reduced = n + 1 - m;
    for i in 1..m {
        for j in 0..n {
            let want = if j == reduced + i - 1 { ComplexRational::one() } else { ComplexRational::zero() };
            if inst.a.get(i, j) != &want {
                return Err(QcbpError::Dimensions("matrix is not of the embedded block form".into()));
            }
        }
        if !inst.y.get(i).is_zero() {
            return Err(QcbpError::Dimensions("measurement is not of the embedded block form".into()));
        }
    }
    if inst.a.row(0)[reduced..].iter().any(|v| !v.is_zero()) {
        return Err(QcbpError::Dimensions("first row has entries in the identity block".into()));
    }
    let core_row: Vec<ComplexRational> = inst.a.row(0)[..reduced].to_vec();
    let core = Instance::new(
        RationalMatrix::new(1, reduced, core_row)?,
        RationalVector::new(vec![inst.y.get(0).clone()]),
        inst.eps.clone(),
    )?;
    Ok(select(&oracle_solution_set(&core)?).zero_pad(n))
}

/// Seeded random single-row positive instance with entries `p/q ∈ [lo, hi]`.
pub fn random_single_row<R: Rng>(rng: &mut R, n: usize, lo: &Rational, hi: &Rational, eps: Rational) -> Instance {
    // entries on the grid 1/60 inside [lo, hi], so ties between maxima do occur
    let lo60 = (lo * Rational::from(60)).ceil_to_grid(0);
    let hi60 = (hi * Rational::from(60)).floor_to_grid(0);
    let lo_i: i64 = lo60.numer().try_into().expect("small bound");
    let hi_i: i64 = hi60.numer().try_into().expect("small bound");
    let row = (0..n).map(|_| Rational::frac(rng.gen_range(lo_i..=hi_i), 60)).collect();
    Instance::single_row(row, eps).expect("valid by construction")
}
