//! Exhaustive dyadic-grid search, used as an independent oracle in tests.

use super::{Instance, QcbpError};
use crate::rational::{l1_norm_real, l2_norm_sq, Rational, RationalVector};

const MAX_N: usize = 4;
const MAX_GRID_EXP: u32 = 8;

#[derive(Debug, Clone)]
pub struct BruteForceResult {
    /// Exact ℓ¹ norm of the best feasible grid point.
    pub value: Rational,
    pub argmin: RationalVector,
    /// Certified bound on `value − optimum`, when one can be derived.
    ///
    /// `None` for `ε = 0` (feasible grid points need not exist near the
    /// optimum) or when the grid is too coarse for the argument below.
    pub tolerance: Option<Rational>,
}

/// Best exactly-feasible point of the grid `2^-grid_exp · ℤ^N` inside an ℓ¹
/// ball that provably contains a near-optimal grid point.
///
/// The ball radius comes from the cheapest basic solution `x₀` of `Ax = y`.
/// The first `N − 1` coordinates are enumerated; for each prefix the feasible
/// values of the last coordinate form an interval, and the grid points
/// closest to zero inside it are checked exactly.
///
/// Tolerance: with `h = 2^-grid_exp`, `L ≥ ‖A‖₂`, `R = ‖x₀‖₁` and
/// `λ = L·√N·h / (2ε) ≤ 1`, rounding `(1−λ)x* + λx₀` to the grid gives a
/// feasible point, so `value ≤ opt + λR + N·h/2`.
pub fn brute_force_l1_min(inst: &Instance, grid_exp: u32) -> Result<BruteForceResult, QcbpError> {
    let (m, n) = (inst.rows(), inst.cols());
    if n > MAX_N {
        return Err(QcbpError::TooLarge(format!("N = {n} exceeds {MAX_N}")));
    }
    if grid_exp > MAX_GRID_EXP {
        return Err(QcbpError::TooLarge(format!("grid_exp = {grid_exp} exceeds {MAX_GRID_EXP}")));
    }
    if !inst.is_real() {
        return Err(QcbpError::ComplexUnsupported);
    }
    let eps_sq = inst.eps().square();
    if l2_norm_sq(inst.y()) <= eps_sq {
        return Ok(BruteForceResult {
            value: Rational::zero(),
            argmin: RationalVector::zeros(n),
            tolerance: Some(Rational::zero()),
        });
    }

    let x0 = cheapest_basic_solution(inst).ok_or(QcbpError::RankDeficient)?;
    let r0 = l1_norm_real(&x0)?;
    let h = Rational::pow2(-(grid_exp as i64));
    let radius = &r0 + Rational::from(n as i64) * &h;
    let k_max: i64 = (radius.clone() * Rational::pow2(grid_exp as i64))
        .ceil_to_grid(0)
        .numer()
        .try_into()
        .expect("small radius");

    let a: Vec<Vec<f64>> = (0..m).map(|i| inst.a().row(i).iter().map(|z| z.re.to_f64()).collect()).collect();
    let y: Vec<f64> = inst.y().entries().iter().map(|z| z.re.to_f64()).collect();
    let search = Search {
        inst,
        a,
        y,
        eps: inst.eps().to_f64(),
        eps_sq,
        h: h.to_f64(),
        grid_exp,
        k_max,
        n,
    };
    let mut best = Best { value: None, value_f: (k_max + 1) as f64 * search.h, point: Vec::new() };
    let mut prefix = Vec::with_capacity(n);
    search.enumerate(&mut prefix, 0, &mut best);

    let (value, ks) = match best.value {
        Some(v) => (v, best.point),
        None => return Err(QcbpError::TooLarge("no feasible grid point at this resolution".into())),
    };
    let argmin = search.point(&ks);
    Ok(BruteForceResult { value, argmin, tolerance: tolerance(inst, &h, &r0) })
}

fn tolerance(inst: &Instance, h: &Rational, r0: &Rational) -> Option<Rational> {
    if inst.eps().is_zero() {
        return None;
    }
    let n = inst.cols() as i64;
    let lip = inst.a().frobenius_sq().sqrt_ceil(20);
    let sqrt_n = Rational::from(n).sqrt_ceil(20);
    let lambda = (lip * sqrt_n * h).checked_div(&(Rational::from(2) * inst.eps())).ok()?;
    if lambda > Rational::one() {
        return None;
    }
    Some(lambda * r0 + Rational::from(n) * h * Rational::frac(1, 2))
}

struct Best {
    value: Option<Rational>,
    value_f: f64,
    point: Vec<i64>,
}

struct Search<'a> {
    inst: &'a Instance,
    a: Vec<Vec<f64>>,
    y: Vec<f64>,
    eps: f64,
    eps_sq: Rational,
    h: f64,
    grid_exp: u32,
    k_max: i64,
    n: usize,
}

impl Search<'_> {
    fn point(&self, ks: &[i64]) -> RationalVector {
        let h = Rational::pow2(-(self.grid_exp as i64));
        RationalVector::from_real(ks.iter().map(|&k| Rational::from(k) * &h).collect())
    }

    fn enumerate(&self, prefix: &mut Vec<i64>, used: i64, best: &mut Best) {
        if prefix.len() == self.n - 1 {
            self.finish(prefix, used, best);
            return;
        }
        let room = self.k_max - used;
        for k in -room..=room {
            // grid sums are exact in f64, so this prune never discards a better point
            if (used + k.abs()) as f64 * self.h > best.value_f {
                continue;
            }
            prefix.push(k);
            self.enumerate(prefix, used + k.abs(), best);
            prefix.pop();
        }
    }

    fn finish(&self, prefix: &mut Vec<i64>, used: i64, best: &mut Best) {
        let last = self.n - 1;
        let c: Vec<f64> = (0..self.a.len())
            .map(|i| self.y[i] - prefix.iter().enumerate().map(|(j, &k)| self.a[i][j] * k as f64 * self.h).sum::<f64>())
            .collect();
        let alpha: f64 = self.a.iter().map(|row| row[last] * row[last]).sum();
        let beta: f64 = self.a.iter().zip(&c).map(|(row, ci)| row[last] * ci).sum();
        let gamma: f64 = c.iter().map(|ci| ci * ci).sum::<f64>() - self.eps * self.eps;

        let center = if alpha == 0.0 {
            if gamma > 1e-9 {
                return;
            }
            0.0
        } else {
            let disc = beta * beta - alpha * gamma;
            if disc < -1e-9 {
                return;
            }
            let root = disc.max(0.0).sqrt();
            let (lo, hi) = ((beta - root) / alpha, (beta + root) / alpha);
            0.0f64.clamp(lo, hi)
        };
        let base = (center / self.h).floor() as i64;
        let room = self.k_max - used;
        for kt in [0, base - 1, base, base + 1, base + 2] {
            if kt.abs() > room || (kt == 0 && center != 0.0 && base != 0 && base != -1) {
                continue;
            }
            let value_f = (used + kt.abs()) as f64 * self.h;
            if value_f > best.value_f {
                continue;
            }
            let t = kt as f64 * self.h;
            let res_f: f64 = c.iter().zip(&self.a).map(|(ci, row)| (ci - row[last] * t).powi(2)).sum();
            if res_f > self.eps * self.eps + 1e-9 {
                continue;
            }
            let mut ks = prefix.clone();
            ks.push(kt);
            let x = self.point(&ks);
            if self.inst.residual_sq(&x).expect("dimensions match") > self.eps_sq {
                continue;
            }
            let value = l1_norm_real(&x).expect("real point");
            if best.value.as_ref().map_or(true, |b| value < *b) {
                best.value_f = value.to_f64();
                best.value = Some(value);
                best.point = ks;
            }
        }
    }
}

/// Exact solution of `Ax = y` supported on `m` columns, minimizing `‖x‖₁`
/// over all nonsingular column choices.
fn cheapest_basic_solution(inst: &Instance) -> Option<RationalVector> {
    let (m, n) = (inst.rows(), inst.cols());
    let mut best: Option<(Rational, RationalVector)> = None;
    for cols in combinations(n, m) {
        let sys: Vec<Vec<Rational>> = (0..m)
            .map(|i| {
                let mut row: Vec<Rational> = cols.iter().map(|&j| inst.a().get(i, j).re.clone()).collect();
                row.push(inst.y().get(i).re.clone());
                row
            })
            .collect();
        let Some(sol) = solve_square(sys) else { continue };
        let mut x = vec![Rational::zero(); n];
        for (&j, v) in cols.iter().zip(sol) {
            x[j] = v;
        }
        let x = RationalVector::from_real(x);
        let l1 = l1_norm_real(&x).expect("real");
        if best.as_ref().map_or(true, |(b, _)| l1 < *b) {
            best = Some((l1, x));
        }
    }
    best.map(|(_, x)| x)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..n {
            cur.push(j);
            go(j + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Gauss-Jordan on an augmented `k × (k+1)` system; `None` if singular.
fn solve_square(mut sys: Vec<Vec<Rational>>) -> Option<Vec<Rational>> {
    let k = sys.len();
    for c in 0..k {
        let p = (c..k).find(|&i| !sys[i][c].is_zero())?;
        sys.swap(c, p);
        let pivot = sys[c][c].clone();
        for v in sys[c].iter_mut() {
            *v = v.checked_div(&pivot).expect("nonzero pivot");
        }
        for i in 0..k {
            if i != c && !sys[i][c].is_zero() {
                let f = sys[i][c].clone();
                for j in c..=k {
                    let d = &f * &sys[c][j];
                    sys[i][j] = &sys[i][j] - d;
                }
            }
        }
    }
    Some(sys.into_iter().map(|row| row[k].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn row(entries: &[&str], eps: &str) -> Instance {
        Instance::single_row(entries.iter().map(|s| q(s)).collect(), q(eps)).unwrap()
    }

    #[test]
    fn unique_solution_on_grid() {
        let r = brute_force_l1_min(&row(&["2", "1"], "0"), 8).unwrap();
        assert!((&r.value - q("1/2")).abs() <= Rational::pow2(-5));
        assert_eq!(r.value, q("1/2"));
        assert!(r.tolerance.is_none());
    }

    #[test]
    fn tie_instance() {
        let r = brute_force_l1_min(&row(&["1", "1"], "1/2"), 8).unwrap();
        assert!((&r.value - q("1/2")).abs() <= Rational::pow2(-5));
        assert!(r.tolerance.is_some());
    }

    #[test]
    fn large_eps_gives_zero() {
        let r = brute_force_l1_min(&row(&["1", "1"], "1"), 4).unwrap();
        assert_eq!(r.value, Rational::zero());
        assert!(r.argmin.is_zero());
    }

    #[test]
    fn value_within_stated_tolerance() {
        // oracle value (1 - 1/4) / (5/2) = 3/10, not on any dyadic grid
        let inst = row(&["5/2", "7/3", "1/2"], "1/4");
        let r = brute_force_l1_min(&inst, 6).unwrap();
        let opt = q("3/10");
        assert!(r.value >= opt);
        assert!(&r.value - &opt <= r.tolerance.unwrap());
    }

    #[test]
    fn limits_enforced() {
        let inst = Instance::single_row(vec![q("1"); 5], q("0")).unwrap();
        assert!(matches!(brute_force_l1_min(&inst, 4), Err(QcbpError::TooLarge(_))));
        assert!(matches!(brute_force_l1_min(&row(&["1", "2"], "0"), 9), Err(QcbpError::TooLarge(_))));
    }

    #[test]
    fn basic_solution_choice() {
        let inst = row(&["1/2", "3"], "0");
        let x0 = cheapest_basic_solution(&inst).unwrap();
        assert_eq!(x0, RationalVector::from_real(vec![q("0"), q("1/3")]));
        assert_eq!(combinations(4, 2).len(), 6);
    }
}
