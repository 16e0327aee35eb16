//! Acceptance suite: one PASS/FAIL line per criterion, each with its runtime limit.
//!
//! Runs without the libtest harness so the lines always reach stdout. Every
//! expected value is recomputed here from first principles rather than read
//! back from the library.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qcbp_core::adversarial::{
    input_distance, omega, omega_star, output_pair_dist_sq, separation_certificate, Family,
    FamilyParams,
};
use qcbp_core::creal::CReal;
use qcbp_core::halting::{
    decide_membership, distance_to_limit_sq, omega_hat_approx, omega_hat_limit, r_seq, BoundedMachine, Verdict,
};
use qcbp_core::nn::{default_dims, gen_training_set, instability_eval, train, Mlp, TrainConfig};
use qcbp_core::qcbp::{
    brute_force_l1_min, embed, embedded_select, oracle_solution_set, restrict, select, solve_numeric, Instance,
    SolveOptions,
};
use qcbp_core::{Rational, RationalVector};

type Outcome = Result<String, String>;

fn q(s: &str) -> Rational {
    s.parse().unwrap()
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// `p/q ∈ [1/2, 3]` with `q ≤ 12`.
fn random_entry(rng: &mut ChaCha8Rng) -> Rational {
    let den = rng.gen_range(1..=12i64);
    let num = rng.gen_range((den + 1) / 2..=3 * den);
    Rational::frac(num, den)
}

fn random_row(rng: &mut ChaCha8Rng, n: usize, eps: Rational) -> Instance {
    Instance::single_row((0..n).map(|_| random_entry(rng)).collect(), eps).unwrap()
}

/// `(1 − ε) / max_j a_j`, recomputed directly.
fn expected_value(inst: &Instance) -> Rational {
    let row = inst.a().row(0);
    let mut max = row[0].re.clone();
    for z in &row[1..] {
        if z.re > max {
            max = z.re.clone();
        }
    }
    (Rational::one() - inst.eps()).checked_div(&max).unwrap()
}

fn real_l1(x: &RationalVector) -> Rational {
    x.entries().iter().map(|z| z.re.abs()).sum()
}

fn real_residual_sq(inst: &Instance, x: &RationalVector) -> Rational {
    (0..inst.rows())
        .map(|i| {
            let ax: Rational = inst.a().row(i).iter().zip(x.entries()).map(|(a, v)| &a.re * &v.re).sum();
            (ax - &inst.y().get(i).re).square()
        })
        .sum()
}

fn oracle_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let eps_choices = ["0", "1/4", "1/2", "3/4"];
    for i in 0..200 {
        let n = rng.gen_range(2..=4);
        let eps = q(eps_choices[rng.gen_range(0..4)]);
        let inst = random_row(&mut rng, n, eps);
        let x = select(&oracle_solution_set(&inst).map_err(|e| e.to_string())?);
        check(real_residual_sq(&inst, &x) <= inst.eps().square(), || format!("instance {i} infeasible"))?;
        check(real_l1(&x) == expected_value(&inst), || format!("instance {i}: l1 {} != {}", real_l1(&x), expected_value(&inst)))?;
    }
    Ok("200 instances exactly feasible with l1 = (1-eps)/max a_j".into())
}

fn oracle_vs_brute_force() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let eps_choices = ["1/4", "1/2", "3/4"];
    let mut worst = Rational::zero();
    for i in 0..50 {
        let n = rng.gen_range(2..=3);
        let eps = q(eps_choices[rng.gen_range(0..3)]);
        let inst = random_row(&mut rng, n, eps);
        let r = brute_force_l1_min(&inst, 7).map_err(|e| e.to_string())?;
        let tol = r.tolerance.clone().ok_or_else(|| format!("instance {i}: no tolerance stated"))?;
        let gap = (&r.value - &expected_value(&inst)).abs();
        check(gap <= tol, || format!("instance {i}: |{} - {}| > {}", r.value, expected_value(&inst), tol))?;
        check(real_residual_sq(&inst, &r.argmin) <= inst.eps().square(), || format!("instance {i}: argmin infeasible"))?;
        worst = worst.max(gap);
    }
    Ok(format!("50 instances within stated tolerance, largest gap {}", worst.to_decimal(6)))
}

fn discontinuity() -> Outcome {
    let p = FamilyParams::default();
    let floor = q("0.47").square();
    for n in 1..=30u32 {
        let bump = Rational::pow2(-(n as i64));
        for j in [Family::First, Family::Second] {
            check(input_distance(j, n, &p) == bump, || format!("n={n}: input distance"))?;
            let diff: Vec<Rational> = omega(j, n, &p)
                .a()
                .entries()
                .iter()
                .zip(omega_star(&p).a().entries())
                .map(|(u, v)| &u.re - &v.re)
                .collect();
            let mut expect = vec![Rational::zero(); 2];
            expect[j.index()] = bump.clone();
            check(diff == expect, || format!("n={n}: entry difference {diff:?}"))?;
        }
        // ‖x¹ − x²‖² = 2·((1/2)/(1 + 2⁻ⁿ))²
        let one_side = Rational::frac(1, 2).checked_div(&(Rational::one() + &bump)).unwrap();
        let expected = Rational::from(2) * one_side.square();
        let got = output_pair_dist_sq(n, &p);
        check(got == expected, || format!("n={n}: pair distance {got} != {expected}"))?;
        check(got >= floor, || format!("n={n}: pair distance below 0.47"))?;
    }
    check(output_pair_dist_sq(1, &p) == q("2/9"), || "minimum at n=1 is not 2/9".into())?;
    let kappa = separation_certificate(&p, 30).kappa;
    check(kappa >= q("0.47") && kappa.square() < q("2/9"), || format!("kappa {kappa}"))?;
    Ok(format!("n=1..30 exact, min pair distance sqrt(2/9), kappa = {}", kappa.to_decimal(8)))
}

fn embedding() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let eps_choices = ["0", "1/4", "1/2", "3/4"];
    for (m, n) in [(2usize, 3usize), (3, 5)] {
        for i in 0..50 {
            let eps = q(eps_choices[rng.gen_range(0..4)]);
            let core = random_row(&mut rng, n + 1 - m, eps);
            let big = embed(&core, m, n).map_err(|e| e.to_string())?;
            check(big.rows() == m && big.cols() == n, || "embedded shape".into())?;
            let xb = embedded_select(&big).map_err(|e| e.to_string())?;
            let x = select(&oracle_solution_set(&core).map_err(|e| e.to_string())?);
            check(restrict(&xb, m, n) == x, || format!("({m},{n}) instance {i}: restriction differs"))?;
            check(xb.entries()[n + 1 - m..].iter().all(|z| z.is_zero()), || "padding not zero".into())?;
            check(real_residual_sq(&big, &xb) <= big.eps().square(), || "embedded solution infeasible".into())?;
            check(real_l1(&xb) == expected_value(&core), || "embedded objective differs".into())?;
        }
    }
    Ok("100 embeddings into (2,3) and (3,5) restrict exactly".into())
}

fn solver_consistency() -> Outcome {
    let p = FamilyParams::default();
    let opts = SolveOptions { tol: q("1/1000000"), ..SolveOptions::default() };
    let slack = p.eps() + &q("1/1000000");
    let mut worst: f64 = 0.0;
    for n in 1..=30u32 {
        for j in [Family::First, Family::Second] {
            let inst = omega(j, n, &p);
            let r = solve_numeric(&inst, &opts).map_err(|e| e.to_string())?;
            let err = (r.objective() - expected_value(&inst).to_f64()).abs();
            check(err <= 1e-5, || format!("n={n} {j:?}: objective error {err:e}"))?;
            check(r.residual_bound <= slack, || format!("n={n} {j:?}: residual bound {}", r.residual_bound))?;
            worst = worst.max(err);
        }
    }
    Ok(format!("60 solves, largest objective error {worst:.2e}"))
}

enum Expr {
    Leaf(Rational),
    Neg(Box<Expr>),
    Abs(Box<Expr>),
    Bin(u8, Box<Expr>, Box<Expr>),
}

fn random_expr(rng: &mut ChaCha8Rng, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        let den = rng.gen_range(1..=20i64);
        return Expr::Leaf(Rational::frac(rng.gen_range(-40..=40), den));
    }
    match rng.gen_range(0..8) {
        0 => Expr::Neg(Box::new(random_expr(rng, depth - 1))),
        1 => Expr::Abs(Box::new(random_expr(rng, depth - 1))),
        op => Expr::Bin(op, Box::new(random_expr(rng, depth - 1)), Box::new(random_expr(rng, depth - 1))),
    }
}

/// Exact value and the CReal built for it; divisions by values below 1/8 in
/// magnitude become multiplications.
fn build(e: &Expr) -> (Rational, CReal) {
    match e {
        Expr::Leaf(r) => (r.clone(), CReal::from_rational(r.clone())),
        Expr::Neg(a) => {
            let (v, c) = build(a);
            (-v, c.neg())
        }
        Expr::Abs(a) => {
            let (v, c) = build(a);
            (v.abs(), c.abs())
        }
        Expr::Bin(op, a, b) => {
            let ((va, ca), (vb, cb)) = (build(a), build(b));
            match op {
                2 => (&va + &vb, ca.add(&cb)),
                3 => (&va - &vb, ca.sub(&cb)),
                4 => (&va * &vb, ca.mul(&cb)),
                5 => (va.clone().max(vb.clone()), ca.max(&cb)),
                6 => (va.clone().min(vb.clone()), ca.min(&cb)),
                _ if vb.abs() >= Rational::frac(1, 8) => {
                    let lower = vb.abs() * Rational::frac(1, 2);
                    (va.checked_div(&vb).unwrap(), ca.div(&cb, &lower).unwrap())
                }
                _ => (&va * &vb, ca.mul(&cb)),
            }
        }
    }
}

fn computable_reals() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let tol = Rational::pow2(-40);
    for i in 0..1000 {
        let (exact, c) = build(&random_expr(&mut rng, 4));
        let got = c.approx(40);
        check((&got - &exact).abs() <= tol, || format!("expression {i}: {got} vs {exact}"))?;
    }
    for i in 0..60 {
        let x = Rational::frac(rng.gen_range(1..=400), rng.gen_range(1..=100));
        let cx = CReal::from_rational(x.clone());

        let s = cx.sqrt(&Rational::zero()).unwrap();
        let (s40, s80) = (s.approx(40), s.approx(80));
        check((&s40 - &s80).abs() <= tol, || format!("sqrt {i}: self-evaluation"))?;
        // |s40 − √x| ≤ 2⁻⁴⁰ iff (s40 − 2⁻⁴⁰)² ≤ x ≤ (s40 + 2⁻⁴⁰)²
        let lo = (&s40 - &tol).max(Rational::zero());
        check(lo.square() <= x && x <= (&s40 + &tol).square(), || format!("sqrt {i}: bracket"))?;

        let small = Rational::frac(rng.gen_range(-200..=200), 50);
        let e = CReal::from_rational(small.clone()).exp();
        let (e40, e80) = (e.approx(40), e.approx(80));
        check((&e40 - &e80).abs() <= tol, || format!("exp {i}: self-evaluation"))?;
        check((e40.to_f64() - small.to_f64().exp()).abs() <= 1e-9 * small.to_f64().exp().max(1.0), || format!("exp {i}: float sanity"))?;

        let l = cx.ln(&(&x * &Rational::frac(1, 2))).unwrap();
        let (l40, l80) = (l.approx(40), l.approx(80));
        check((&l40 - &l80).abs() <= tol, || format!("ln {i}: self-evaluation"))?;
        check((l40.to_f64() - x.to_f64().ln()).abs() <= 1e-9, || format!("ln {i}: float sanity"))?;
    }
    Ok("1000 expressions within 2^-40; sqrt/exp/ln agree with k=80".into())
}

fn halting_gadget() -> Outcome {
    let m = BoundedMachine::even();
    let p = FamilyParams::default();
    let budget = 10_000u64;
    let half = Rational::frac(1, 2);
    for n in 0..=50u64 {
        let even = n % 2 == 0;
        // the parity scan reads n ones and one blank
        let truth = even.then_some(n + 1);
        let d = decide_membership(&m, n, budget, 64, &p);
        let want = if even { Verdict::In } else { Verdict::NotHaltedAtBudget };
        check(d.verdict == want, || format!("n={n}: {}", d.verdict))?;
        check(d.q_n == truth, || format!("n={n}: q_n {:?}", d.q_n))?;

        let limit = omega_hat_limit(truth, &p);
        for j in (0..=60).chain([100, 1000, budget]) {
            let r = r_seq(&m, n, j);
            let want_r = match truth {
                Some(q) if j >= q => q,
                _ => j,
            };
            check(r == want_r, || format!("n={n}, j={j}: r_seq {r}"))?;
            // ‖ω̂ approx − ω̂‖² ≤ (2^-min(j, q) / 2)²
            let approx = omega_hat_approx(&m, n, j, &p);
            let dist_sq: Rational = approx
                .a()
                .entries()
                .iter()
                .zip(limit.a().entries())
                .map(|(u, v)| (&u.re - &v.re).square())
                .sum();
            let k = truth.map_or(j, |q| q.min(j));
            let bound = (Rational::pow2(-(k as i64)) * &half).square();
            check(dist_sq <= bound, || format!("n={n}, j={j}: approximation too far"))?;
        }
        if d.verdict == Verdict::In {
            check(d.dist_sq > d.threshold_sq, || format!("n={n}: IN below threshold"))?;
        }
        check(distance_to_limit_sq(&limit, &p) > d.threshold_sq || !even, || format!("n={n}: accepted limit not separated"))?;
        if !even {
            check(distance_to_limit_sq(&limit, &p) < d.threshold_sq, || format!("n={n}: limit not below threshold"))?;
        }
    }
    Ok("n=0..50 match parity; r_seq and approximation invariants exact".into())
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    while checked < 1000 {
        let depth = rng.gen_range(1..=4);
        let dims: Vec<usize> = (0..=depth).map(|_| rng.gen_range(1..=16)).collect();
        let mut net = Mlp::new(&dims, rng.gen()).unwrap();
        for i in 0..net.param_count() {
            // nonzero biases so kinks are not all at the origin
            let v = net.param(i) + rng.gen_range(-0.1..0.1);
            net.set_param(i, v);
        }
        let samples: Vec<(Vec<f64>, Vec<f64>)> = (0..3)
            .map(|_| {
                let x = (0..dims[0]).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let t = (0..dims[depth]).map(|_| rng.gen_range(-1.0..1.0)).collect();
                (x, t)
            })
            .collect();
        let pairs: Vec<(&[f64], &[f64])> = samples.iter().map(|(x, t)| (x.as_slice(), t.as_slice())).collect();
        let (_, grad) = net.loss_and_grad(&pairs).unwrap();
        let patterns = |net: &Mlp| -> Vec<Vec<bool>> { samples.iter().map(|(x, _)| net.activation_pattern(x).unwrap()).collect() };
        let base = patterns(&net);
        for _ in 0..50 {
            let idx = rng.gen_range(0..net.param_count());
            let theta = net.param(idx);
            // the loss is piecewise quadratic in one parameter, so central
            // differences are exact inside a linear region
            let mut h = 1e-3;
            let fd = loop {
                let mut plus = net.clone();
                plus.set_param(idx, theta + h);
                let mut minus = net.clone();
                minus.set_param(idx, theta - h);
                if patterns(&plus) == base && patterns(&minus) == base {
                    let lp = plus.loss_and_grad(&pairs).unwrap().0;
                    let lm = minus.loss_and_grad(&pairs).unwrap().0;
                    break Some((lp - lm) / (2.0 * h));
                }
                h /= 8.0;
                if h < 1e-12 {
                    break None;
                }
            };
            let Some(fd) = fd else { continue };
            let g = grad[idx];
            let rel = (g - fd).abs() / g.abs().max(fd.abs()).max(1e-8);
            check(rel < 1e-4, || format!("dims {dims:?} param {idx}: backprop {g:e} vs fd {fd:e}"))?;
            worst = worst.max(rel);
            checked += 1;
        }
    }
    Ok(format!("{checked} coordinates, largest relative error {worst:.2e}"))
}

fn conflict_bound() -> Outcome {
    let p = FamilyParams::default();
    let data = gen_training_set(&p, 1..=30, &Rational::zero(), 0).map_err(|e| e.to_string())?;
    let net = Mlp::new(&default_dims(&p), 0).map_err(|e| e.to_string())?;
    let (net, trace) = train(&net, &data, &TrainConfig::default()).map_err(|e| e.to_string())?;
    let report = instability_eval(&net, &p, 30).map_err(|e| e.to_string())?;
    let kappa = separation_certificate(&p, 30).kappa.to_f64();
    check(report.kappa == kappa, || "kappa mismatch".into())?;
    for r in &report.rows {
        let lhs = r.e1 + r.e2 + report.lipschitz * r.gap;
        check(lhs >= kappa - 1e-6, || format!("n={}: {lhs} < kappa", r.n))?;
    }
    let last = report.rows.last().unwrap();
    let half = (kappa - last.lip_slack) / 2.0;
    check(last.e1.max(last.e2) >= half, || format!("n=30: max error {} < {half}", last.max_error()))?;
    Ok(format!(
        "bound holds for n<=30; at n=30 max error {:.4} >= {:.4}; L = {:.2}, final loss {:.4}",
        last.max_error(),
        half,
        report.lipschitz,
        trace.last().unwrap()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, fn() -> Outcome); 9] = [
        ("oracle exactness", 5, oracle_exactness),
        ("oracle vs brute force", 60, oracle_vs_brute_force),
        ("discontinuity demonstration", 1, discontinuity),
        ("embedding equivalence", 5, embedding),
        ("numerical solver consistency", 30, solver_consistency),
        ("computable-real layer", 30, computable_reals),
        ("halting gadget", 10, halting_gadget),
        ("gradient correctness", 30, gradient_check),
        ("nn continuity-conflict bound", 300, conflict_bound),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > Duration::from_secs(*limit) => Err(format!("{msg}, but exceeded {limit} s")),
            other => other,
        };
        let (tag, msg) = match &outcome {
            Ok(m) => ("PASS", m),
            Err(m) => ("FAIL", m),
        };
        println!("[{tag}] {}. {name} ({:.2} s / {limit} s): {msg}", i + 1, elapsed.as_secs_f64());
        failed += outcome.is_err() as usize;
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
