use std::cmp::Ordering;

use proptest::prelude::*;

use qcbp_core::adversarial::{
    exact_solution, input_difference, omega, omega_star, output_pair_dist_sq, separation_certificate, Family,
    FamilyParams,
};
use qcbp_core::creal::{compare, effective_limit, CReal, Comparison, Modulus};
use qcbp_core::halting::{decide_membership, r_seq, run_bounded, BoundedMachine, Verdict};
use qcbp_core::nn::{gen_training_set, realify, train, Mlp, TrainConfig};
use qcbp_core::qcbp::{
    embed, embedded_select, enumerate_solutions, feasible, oracle_solution_set, restrict, select, Instance,
};
use qcbp_core::{l1_norm_real, l2_norm_sq, rat_cmp, ComplexRational, Rational, RationalVector};

fn rational() -> impl Strategy<Value = Rational> {
    (-2000i64..2000, 1i64..500).prop_map(|(p, q)| Rational::frac(p, q))
}

fn positive() -> impl Strategy<Value = Rational> {
    (1i64..300, 1i64..100).prop_map(|(p, q)| Rational::frac(p, q))
}

/// `a ∈ [1/2, 3]` with small denominators, so maxima tie fairly often.
fn entry() -> impl Strategy<Value = Rational> {
    (1i64..=12).prop_flat_map(|q| ((q + 1) / 2..=3 * q).prop_map(move |p| Rational::frac(p, q)))
}

fn eps() -> impl Strategy<Value = Rational> {
    (0i64..4).prop_map(|k| Rational::frac(k, 4))
}

fn single_row() -> impl Strategy<Value = Instance> {
    (prop::collection::vec(entry(), 2..=5), eps()).prop_map(|(row, e)| Instance::single_row(row, e).unwrap())
}

fn family() -> impl Strategy<Value = FamilyParams> {
    (entry(), 1i64..8).prop_map(|(a, k)| FamilyParams::new(a, Rational::frac(k, 8), 2, 1).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_axioms(a in rational(), b in rational(), c in rational()) {
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&a + &b, &b + &a);
        if !b.is_zero() {
            prop_assert_eq!(a.checked_div(&b).unwrap() * &b, a.clone());
        }
    }

    #[test]
    fn canonical_form(a in rational()) {
        let again: Rational = a.to_string().parse().unwrap();
        prop_assert_eq!(&again, &a);
        let d = a.denom().clone();
        prop_assert!(d > 0.into());
        prop_assert_eq!(num_integer::Integer::gcd(a.numer(), &d), if a.is_zero() { d.clone() } else { 1.into() });
    }

    #[test]
    fn rat_cmp_total_order(a in rational(), b in rational(), c in rational()) {
        let ab = rat_cmp(&a, &b);
        prop_assert_eq!(ab, rat_cmp(&b, &a).reverse());
        prop_assert_eq!(ab == Ordering::Equal, a == b);
        if ab != Ordering::Greater && rat_cmp(&b, &c) != Ordering::Greater {
            prop_assert!(rat_cmp(&a, &c) != Ordering::Greater);
        }
        prop_assert_eq!(ab == Ordering::Less, (&b - &a).is_positive());
    }

    #[test]
    fn norm_sq_zero_iff_zero(v in prop::collection::vec((rational(), rational()), 1..6)) {
        let v: RationalVector = v.into_iter().map(|(re, im)| ComplexRational::new(re, im)).collect();
        prop_assert_eq!(l2_norm_sq(&v).is_zero(), v.is_zero());
        prop_assert!(!l2_norm_sq(&v).is_negative());
    }

    #[test]
    fn sqrt_bounds_bracket(x in positive(), bits in 0u32..60) {
        let lo = x.sqrt_floor(bits);
        let hi = x.sqrt_ceil(bits);
        prop_assert!(lo.square() <= x && x <= hi.square());
        prop_assert!(&hi - &lo <= Rational::pow2(-(bits as i64)));
    }

    #[test]
    fn creal_consistency(x in rational(), y in rational(), k1 in 0u32..40, dk in 1u32..40) {
        let k2 = k1 + dk;
        let e = CReal::from_rational(x.clone()).mul(&CReal::from_rational(y.clone())).add(&CReal::from_rational(x.clone()));
        let d = (e.approx(k1) - e.approx(k2)).abs();
        prop_assert!(d <= Rational::pow2(-(k1 as i64)) + Rational::pow2(-(k2 as i64)));
        let exact = &x * &y + &x;
        prop_assert!((e.approx(k2) - exact).abs() <= Rational::pow2(-(k2 as i64)));
        prop_assert_eq!(e.approx(k1), e.approx(k1));
    }

    #[test]
    fn creal_sqrt_contract(p in 0i64..=400, k in 0u32..50) {
        let x = Rational::frac(p, 100);
        let s = CReal::from_rational(x.clone()).sqrt(&Rational::zero()).unwrap();
        let err = (s.approx(k).square() - x).abs();
        prop_assert!(err <= Rational::pow2(2 - k as i64) + Rational::pow2(-2 * k as i64));
    }

    #[test]
    fn compare_sound(x in rational(), y in rational(), budget in 0u32..40) {
        let (cx, cy) = (CReal::from_rational(x.clone()), CReal::from_rational(y.clone()));
        match compare(&cx, &cy, budget) {
            Comparison::Less => prop_assert!(x < y),
            Comparison::Greater => prop_assert!(x > y),
            Comparison::Undecided => {}
        }
        prop_assert_eq!(compare(&cx, &cx, budget), Comparison::Undecided);
    }

    #[test]
    fn modulus_monotone(n1 in 0u64..50, n2 in 0u64..50, b1 in 0u32..30, b2 in 0u32..30) {
        let m = Modulus::indexed(|n, big| (big as u64 * 3 + 7) / (n + 1));
        let (lo_n, hi_n) = (n1.min(n2), n1.max(n2));
        let (lo_b, hi_b) = (b1.min(b2), b1.max(b2));
        prop_assert!(m.eval(lo_n, lo_b) <= m.eval(hi_n, hi_b));
    }

    #[test]
    fn effective_limit_terms(n in 0u64..20, k in 0u32..30) {
        // x_{n,i} = 1/(n+1) + 2^-i converges at modulus e(N) = N
        let lim = effective_limit(
            |n, i| Rational::frac(1, n as i64 + 1) + Rational::pow2(-(i as i64)),
            Modulus::identity(),
        );
        let exact = Rational::frac(1, n as i64 + 1);
        prop_assert!((lim.term(n).approx(k) - exact).abs() <= Rational::pow2(-(k as i64)));
    }

    #[test]
    fn oracle_solutions_optimal_and_saturating(inst in single_row(), seed in any::<u64>()) {
        let s = oracle_solution_set(&inst).unwrap();
        let max = inst.a().row(0).iter().map(|z| z.re.clone()).max().unwrap();
        let value = (Rational::one() - inst.eps()).checked_div(&max).unwrap();
        for x in enumerate_solutions(&s, 6, seed) {
            prop_assert_eq!(l1_norm_real(&x).unwrap(), value.clone());
            prop_assert_eq!(inst.residual_sq(&x).unwrap(), inst.eps().square());
            prop_assert!(feasible(&inst, &x).unwrap());
        }
        prop_assert_eq!(select(&s), select(&oracle_solution_set(&inst).unwrap()));
    }

    #[test]
    fn embedding_equivalence(row in prop::collection::vec(entry(), 2..=4), e in eps(), extra in 1usize..3) {
        let n = row.len() + extra;
        let m = 1 + extra;
        let inst = Instance::single_row(row, e).unwrap();
        let big = embed(&inst, m, n).unwrap();
        let xb = embedded_select(&big).unwrap();
        let x = select(&oracle_solution_set(&inst).unwrap());
        prop_assert_eq!(restrict(&xb, m, n), x.clone());
        prop_assert_eq!(l1_norm_real(&xb).unwrap(), l1_norm_real(&x).unwrap());
        prop_assert!(feasible(&big, &xb).unwrap());
    }

    #[test]
    fn instance_json_round_trip(inst in single_row()) {
        let text = serde_json::to_string(&inst).unwrap();
        let back: Instance = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, inst);
    }

    #[test]
    fn families_converge_and_separate(p in family(), n in 1u32..40) {
        for j in [Family::First, Family::Second] {
            let diff = input_difference(j, n, &p);
            prop_assert_eq!(diff, vec![(0, j.index(), Rational::pow2(-(n as i64)))]);
            let oracle = select(&oracle_solution_set(&omega(j, n, &p)).unwrap());
            prop_assert_eq!(exact_solution(j, n, &p), oracle);
        }
        prop_assert_eq!(omega_star(&p).a().row(0)[0].re.clone(), p.a().clone());
        let kappa = separation_certificate(&p, n).kappa;
        prop_assert!(kappa.square() < output_pair_dist_sq(n, &p));
        prop_assert!(output_pair_dist_sq(n, &p) <= output_pair_dist_sq(n + 1, &p));
        let text = serde_json::to_string(&omega(Family::First, n, &p)).unwrap();
        prop_assert_eq!(serde_json::from_str::<Instance>(&text).unwrap(), omega(Family::First, n, &p));
    }

    #[test]
    fn machines_deterministic_and_stabilizing(k in 1usize..5, n in 0u64..30, j in 0u64..80) {
        let m = BoundedMachine::divisible_by(k);
        prop_assert_eq!(run_bounded(&m, n, j), run_bounded(&m, n, j));
        let truth = n % k as u64 == 0;
        let r = r_seq(&m, n, j);
        if truth && j >= n + 1 {
            prop_assert_eq!(r, n + 1);
        } else {
            prop_assert_eq!(r, j);
        }
        let d = decide_membership(&m, n, j, 64, &FamilyParams::default());
        if d.verdict == Verdict::In {
            prop_assert!(run_bounded(&m, n, j).accepted_at().is_some());
            prop_assert!(d.dist_sq > d.threshold_sq);
        }
    }

    #[test]
    fn dyadic_realify_exact(k in 1i64..16, n in 1u32..40) {
        let p = FamilyParams::new(Rational::frac(k, 4), Rational::frac(1, 2), 2, 1).unwrap();
        let inst = omega(Family::Second, n, &p);
        let v = realify(&inst);
        for (z, f) in inst.a().entries().iter().zip(&v) {
            prop_assert_eq!(Rational::from_f64(*f).unwrap(), z.re.clone());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn training_is_deterministic(seed in any::<u64>()) {
        let p = FamilyParams::default();
        let data = gen_training_set(&p, 1..=4, &Rational::zero(), seed).unwrap();
        let net = Mlp::new(&[6, 8, 4], seed).unwrap();
        let cfg = TrainConfig { steps: 20, lr: 0.01, batch: Some(3), seed };
        let (a, ta) = train(&net, &data, &cfg).unwrap();
        let (b, tb) = train(&net, &data, &cfg).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(ta.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), tb.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn training_targets_feasible(noise in 0i64..20, seed in any::<u64>()) {
        let data = gen_training_set(&FamilyParams::default(), 1..=6, &Rational::frac(noise, 100), seed).unwrap();
        for (inst, x) in &data.originals {
            prop_assert!(feasible(inst, x).unwrap());
        }
        for (t, (_, x)) in data.targets.iter().zip(&data.originals) {
            for (tf, z) in t.iter().zip(x.entries()) {
                if let Some(r) = Rational::from_f64(*tf) {
                    if r == z.re {
                        continue;
                    }
                }
                prop_assert!((tf - z.re.to_f64()).abs() <= f64::EPSILON * tf.abs());
            }
        }
    }
}
