//! Generic first-order solver with exact a posteriori certification.
//!
//! The iteration is the Chambolle–Pock primal-dual scheme for
//! `min ‖x‖₁ + ι_{‖z − y‖ ≤ ε}(Ax)`, run in `f64` on the real `2m × 2N`
//! form of a complex instance. The ℓ¹ proximal step acts on (re, im) pairs, so
//! the complex modulus is respected. Nothing the solver reports is taken on
//! trust from the floats: the iterate is converted to exact dyadics and its
//! residual, objective and a dual lower bound are recomputed in rationals.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::{Instance, QcbpError};
use crate::rational::{l2_norm_sq, ComplexRational, Rational, RationalMatrix, RationalVector};

/// Bits of the dyadic grid used for certified square-root bounds.
const SQRT_BITS: u32 = 48;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub tol: Rational,
    pub max_iter: usize,
    /// Iterations between convergence checks.
    pub check_every: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: Rational::frac(1, 1_000_000), max_iter: 200_000, check_every: 50 }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// The final iterate, exactly as the floats represent it.
    pub x_hat: RationalVector,
    /// Certified `≥ ‖x̂‖₁`.
    pub objective_upper: Rational,
    /// Certified `≤` optimal value (weak duality).
    pub lower_bound: Rational,
    /// Certified `≥ ‖Ax̂ − y‖₂`.
    pub residual_bound: Rational,
    pub iterations: usize,
    pub converged: bool,
}

impl SolveReport {
    pub fn objective(&self) -> f64 {
        self.objective_upper.to_f64()
    }

    pub fn x_re(&self) -> Vec<f64> {
        self.x_hat.to_f64_parts().0
    }
}

/// Real form `[[Re A, −Im A], [Im A, Re A]]` acting on `(Re x, Im x)`.
pub fn realify_matrix(a: &RationalMatrix) -> RationalMatrix {
    let (m, n) = (a.rows(), a.cols());
    let mut r = RationalMatrix::zeros(2 * m, 2 * n);
    for i in 0..m {
        for j in 0..n {
            let z = a.get(i, j);
            r.set(i, j, ComplexRational::real(z.re.clone()));
            r.set(i, n + j, ComplexRational::real(-&z.im));
            r.set(m + i, j, ComplexRational::real(z.im.clone()));
            r.set(m + i, n + j, ComplexRational::real(z.re.clone()));
        }
    }
    r
}

fn realify_vector(v: &RationalVector) -> Vec<Rational> {
    let mut out: Vec<Rational> = v.entries().iter().map(|z| z.re.clone()).collect();
    out.extend(v.entries().iter().map(|z| z.im.clone()));
    out
}

/// Exact rank test by fraction-free (Bareiss) elimination on the real form.
pub fn full_row_rank(a: &RationalMatrix) -> bool {
    let r = realify_matrix(a);
    let mut rows: Vec<Vec<BigInt>> = (0..r.rows())
        .map(|i| {
            let row = r.row(i);
            let lcm = row.iter().fold(BigInt::one(), |acc, z| acc.lcm(z.re.denom()));
            row.iter().map(|z| z.re.numer() * (&lcm / z.re.denom())).collect()
        })
        .collect();
    bareiss_rank(&mut rows) == r.rows()
}

fn bareiss_rank(m: &mut [Vec<BigInt>]) -> usize {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut prev = BigInt::one();
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        for i in rank + 1..rows {
            for j in c + 1..cols {
                let num = &m[rank][c] * &m[i][j] - &m[i][c] * &m[rank][j];
                debug_assert!((&num % &prev).is_zero(), "Bareiss division must be exact");
                m[i][j] = num / &prev;
            }
            m[i][c] = BigInt::zero();
        }
        prev = m[rank][c].clone();
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// Dyadic upper bound on the spectral norm `‖A‖₂`.
///
/// A float power iteration proposes a candidate `U`; it is accepted only once
/// `U^32 ≥ ‖(AᵀA)^8‖_F²` holds exactly, which implies `U ≥ σ_max(A)` because
/// `σ_max^32 = λ_max(AᵀA)^16 ≤ ‖(AᵀA)^8‖_F² / 2`. The halving is valid
/// because every eigenvalue of the real form appears twice.
pub fn certified_operator_norm(a: &RationalMatrix) -> Rational {
    let r = realify_matrix(a);
    let n = r.cols();
    let gram: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..r.rows()).map(|k| &r.get(k, i).re * &r.get(k, j).re).sum())
                .collect()
        })
        .collect();
    let mut power = gram.clone();
    for _ in 0..3 {
        power = mat_mul(&power, &power);
    }
    let frob_sq: Rational = power.iter().flatten().map(Rational::square).sum::<Rational>() * Rational::frac(1, 2);
    if frob_sq.is_zero() {
        return Rational::zero();
    }

    let gram_f: Vec<Vec<f64>> = gram.iter().map(|row| row.iter().map(Rational::to_f64).collect()).collect();
    let mut v = vec![1.0; n];
    let mut lambda = 0.0;
    for _ in 0..200 {
        let w: Vec<f64> = gram_f.iter().map(|row| row.iter().zip(&v).map(|(g, x)| g * x).sum()).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        lambda = norm;
        v = w.into_iter().map(|x| x / norm).collect();
    }
    let sigma = lambda.sqrt() * 1.001;
    let mut u = Rational::from_f64(sigma.max(f64::MIN_POSITIVE)).expect("finite").ceil_to_grid(24);
    let grow = Rational::frac(65, 64);
    while u.pow(32) < frob_sq {
        u = (&u * &grow).ceil_to_grid(24);
    }
    u
}

fn mat_mul(a: &[Vec<Rational>], b: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let n = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| (0..n).map(|j| row.iter().zip(b).map(|(x, brow)| x * &brow[j]).sum()).collect())
        .collect()
}

struct RealProblem {
    rows: usize,
    cols: usize,
    a: Vec<f64>,
    y: Vec<f64>,
    eps: f64,
}

impl RealProblem {
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.a[i * self.cols..(i + 1) * self.cols].iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn apply_t(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, ui) in u.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(&self.a[i * self.cols..(i + 1) * self.cols]) {
                *o += a * ui;
            }
        }
    }
}

/// Modulus of each complex coordinate of a real-form vector of length `2N`.
fn pair_norms(x: &[f64]) -> impl Iterator<Item = f64> + '_ {
    let n = x.len() / 2;
    (0..n).map(move |j| x[j].hypot(x[n + j]))
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Solve `min ‖x‖₁ s.t. ‖Ax − y‖ ≤ ε` to certified accuracy `tol`.
///
/// Converged means: `objective_upper − lower_bound ≤ tol` and
/// `residual_bound ≤ ε + tol`, all checked in exact arithmetic.
pub fn solve_numeric(inst: &Instance, opts: &SolveOptions) -> Result<SolveReport, QcbpError> {
    if !full_row_rank(inst.a()) {
        return Err(QcbpError::RankDeficient);
    }
    let n = inst.cols();
    let eps_sq = inst.eps().square();
    if l2_norm_sq(inst.y()) <= eps_sq {
        // x = 0 is feasible and the objective cannot go below 0
        return Ok(SolveReport {
            x_hat: RationalVector::zeros(n),
            objective_upper: Rational::zero(),
            lower_bound: Rational::zero(),
            residual_bound: inst.eps().clone(),
            iterations: 0,
            converged: true,
        });
    }

    let ar = realify_matrix(inst.a());
    let exact = ExactForm { a: ar.clone(), y: realify_vector(inst.y()), eps: inst.eps().clone() };
    let prob = RealProblem {
        rows: ar.rows(),
        cols: ar.cols(),
        a: ar.entries().iter().map(|z| z.re.to_f64()).collect(),
        y: exact.y.iter().map(Rational::to_f64).collect(),
        eps: inst.eps().to_f64(),
    };
    let norm_bound = certified_operator_norm(inst.a()).to_f64() * (1.0 + 1e-12);
    let step = 0.99 / norm_bound;
    let tol = opts.tol.to_f64();

    let mut x = vec![0.0; prob.cols];
    let mut x_bar = x.clone();
    let mut u = vec![0.0; prob.rows];
    let mut ax = vec![0.0; prob.rows];
    let mut atu = vec![0.0; prob.cols];
    let mut best_lb = Rational::zero();
    let check_every = opts.check_every.max(1);

    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        // dual step: prox of σ g* via Moreau, g the indicator of the ε-ball around y
        prob.apply(&x_bar, &mut ax);
        let v: Vec<f64> = u.iter().zip(&ax).map(|(ui, a)| ui + step * a).collect();
        let diff: Vec<f64> = v.iter().zip(&prob.y).map(|(vi, yi)| vi / step - yi).collect();
        let d = norm2(&diff);
        let shrink = if d > prob.eps { prob.eps / d } else { 1.0 };
        for i in 0..prob.rows {
            let proj = prob.y[i] + diff[i] * shrink;
            u[i] = v[i] - step * proj;
        }
        // primal step: group soft-thresholding on (re, im) pairs
        prob.apply_t(&u, &mut atu);
        let z: Vec<f64> = x.iter().zip(&atu).map(|(xi, g)| xi - step * g).collect();
        let mut x_new = vec![0.0; prob.cols];
        for (j, r) in pair_norms(&z).enumerate() {
            let s = if r > step { 1.0 - step / r } else { 0.0 };
            x_new[j] = z[j] * s;
            x_new[n + j] = z[n + j] * s;
        }
        for i in 0..prob.cols {
            x_bar[i] = 2.0 * x_new[i] - x[i];
        }
        x = x_new;

        if iterations % check_every == 0 && float_gap_ok(&prob, &x, &u, tol) {
            let cert = exact.certify(&x, &u);
            if cert.lower_bound > best_lb {
                best_lb = cert.lower_bound.clone();
            }
            if cert.meets(&best_lb, &opts.tol, inst.eps()) {
                return Ok(cert.into_report(best_lb, iterations, true, n));
            }
        }
    }
    let cert = exact.certify(&x, &u);
    if cert.lower_bound > best_lb {
        best_lb = cert.lower_bound.clone();
    }
    let converged = cert.meets(&best_lb, &opts.tol, inst.eps());
    Ok(cert.into_report(best_lb, iterations, converged, n))
}

fn float_gap_ok(prob: &RealProblem, x: &[f64], u: &[f64], tol: f64) -> bool {
    let mut ax = vec![0.0; prob.rows];
    prob.apply(x, &mut ax);
    let res = norm2(&ax.iter().zip(&prob.y).map(|(a, y)| a - y).collect::<Vec<_>>());
    let obj: f64 = pair_norms(x).sum();
    let lb = [-1.0, 1.0]
        .iter()
        .map(|sign| {
            let v: Vec<f64> = u.iter().map(|ui| sign * ui).collect();
            let mut w = vec![0.0; prob.cols];
            prob.apply_t(&v, &mut w);
            let c = pair_norms(&w).fold(1.0, f64::max);
            let dot: f64 = v.iter().zip(&prob.y).map(|(a, b)| a * b).sum();
            (dot - prob.eps * norm2(&v)) / c
        })
        .fold(f64::NEG_INFINITY, f64::max);
    obj - lb <= 0.5 * tol && res <= prob.eps + 0.5 * tol
}

struct ExactForm {
    a: RationalMatrix,
    y: Vec<Rational>,
    eps: Rational,
}

struct Certificate {
    x: Vec<Rational>,
    objective_upper: Rational,
    lower_bound: Rational,
    residual_bound: Rational,
}

impl ExactForm {
    fn certify(&self, x: &[f64], u: &[f64]) -> Certificate {
        let xq: Vec<Rational> = x.iter().map(|v| Rational::from_f64(*v).expect("finite iterate")).collect();
        let n = xq.len() / 2;

        let residual_sq: Rational = (0..self.a.rows())
            .map(|i| {
                let ax: Rational = self.a.row(i).iter().zip(&xq).map(|(a, b)| &a.re * b).sum();
                (ax - &self.y[i]).square()
            })
            .sum();
        let residual_bound = residual_sq.sqrt_ceil(SQRT_BITS);

        let objective_upper: Rational = (0..n)
            .map(|j| {
                if xq[n + j].is_zero() {
                    xq[j].abs()
                } else {
                    (xq[j].square() + xq[n + j].square()).sqrt_ceil(SQRT_BITS)
                }
            })
            .sum();

        let lower_bound = [-1i64, 1]
            .iter()
            .map(|&sign| self.dual_bound(u, sign))
            .max()
            .expect("two candidates");

        Certificate { x: xq, objective_upper, lower_bound, residual_bound }
    }

    /// Weak-duality bound `⟨v', y⟩ − ε‖v'‖` for `v' = v / max(1, ‖Aᴴv‖_∞)`.
    fn dual_bound(&self, u: &[f64], sign: i64) -> Rational {
        let s = Rational::from(sign);
        let v: Vec<Rational> = u.iter().map(|x| &s * Rational::from_f64(*x).expect("finite dual")).collect();
        let cols = self.a.cols();
        let n = cols / 2;
        let atv: Vec<Rational> = (0..cols)
            .map(|j| (0..self.a.rows()).map(|i| &self.a.get(i, j).re * &v[i]).sum())
            .collect();
        let max_sq = (0..n)
            .map(|j| atv[j].square() + atv[n + j].square())
            .max()
            .unwrap_or_else(Rational::zero);
        let c = max_sq.sqrt_ceil(SQRT_BITS).max(Rational::one());
        let dot: Rational = v.iter().zip(&self.y).map(|(a, b)| a * b).sum();
        let v_norm = v.iter().map(Rational::square).sum::<Rational>().sqrt_ceil(SQRT_BITS);
        (dot - &self.eps * v_norm).checked_div(&c).expect("c >= 1")
    }
}

impl Certificate {
    fn meets(&self, best_lb: &Rational, tol: &Rational, eps: &Rational) -> bool {
        &self.objective_upper - best_lb <= *tol && self.residual_bound <= eps + tol
    }

    fn into_report(self, lower_bound: Rational, iterations: usize, converged: bool, n: usize) -> SolveReport {
        let x_hat = (0..n).map(|j| ComplexRational::new(self.x[j].clone(), self.x[n + j].clone())).collect();
        SolveReport {
            x_hat,
            objective_upper: self.objective_upper,
            lower_bound,
            residual_bound: self.residual_bound,
            iterations,
            converged,
        }
    }
}
