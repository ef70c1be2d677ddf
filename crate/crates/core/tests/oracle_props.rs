mod common;

use common::feasible_instance;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use physarum_core::oracle::{check_optimality_criterion, round_to_kernel_free};
use physarum_core::{decompose, dist_to_opt, enumerate_bfs, LpInstance, Mode};
use proptest::prelude::*;

fn bounds(inst: &LpInstance) -> (BigRational, BigRational) {
    let dg = BigRational::from_integer(inst.d().unwrap() * inst.gamma());
    let b_gamma: BigInt = inst.b().iter().map(|&v| BigInt::from(v).abs()).sum();
    let upper = BigRational::from_integer(inst.d().unwrap().clone()) * BigRational::new(b_gamma, inst.gamma().clone());
    (BigRational::one() / dg, upper)
}

fn weights(k: usize) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(1u32..=5, k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn basic_solution_bounds_are_exact(inst in feasible_instance(3, 7, Mode::Directed), undirected in any::<bool>()) {
        let inst = if undirected { inst.with_mode(Mode::Undirected) } else { inst };
        let report = enumerate_bfs(&inst).unwrap();
        let (lower, upper) = bounds(&inst);
        let a = inst.a_rational();
        for s in &report.all_bfs {
            prop_assert_eq!(a.mul_vec(&s.values), inst.b_rational());
            for v in s.values.iter().filter(|v| !v.is_zero()) {
                prop_assert!(v.abs() >= lower && v.abs() <= upper, "{} outside [{}, {}]", v, lower, upper);
            }
        }
    }

    #[test]
    fn phi_lower_bound(inst in feasible_instance(3, 7, Mode::Directed)) {
        let report = enumerate_bfs(&inst).unwrap();
        let dg = BigRational::from_integer(inst.d().unwrap() * inst.gamma());
        if let Some(phi) = &report.phi {
            prop_assert!(*phi >= BigRational::one() / (&dg * &dg));
            let best_other = report.non_optimal.iter().map(|s| s.cost.clone()).min().unwrap();
            prop_assert_eq!(phi.clone(), best_other - &report.opt);
        }
        for s in &report.optimal_set {
            prop_assert_eq!(&s.cost, &report.opt);
            prop_assert!(dist_to_opt(&report, &s.values_f64()) == 0.0);
        }
    }

    #[test]
    fn decompose_round_trip(inst in feasible_instance(3, 6, Mode::Directed), w in weights(8)) {
        let report = enumerate_bfs(&inst).unwrap();
        let total: u32 = report.all_bfs.iter().zip(&w).map(|(_, w)| *w).sum();
        let mut f = vec![BigRational::zero(); inst.m()];
        for (s, &wi) in report.all_bfs.iter().zip(&w) {
            for (fe, v) in f.iter_mut().zip(&s.values) {
                *fe += v * BigRational::new(wi.into(), total.into());
            }
        }
        let dec = decompose(&inst, &f).unwrap();
        prop_assert_eq!(dec.reconstruct(), f.clone());
        prop_assert!(dec.terms.len() <= inst.m());
        let sum = dec.terms.iter().fold(BigRational::zero(), |acc, (l, _)| acc + l);
        prop_assert!(sum.is_one());
        let a = inst.a_rational();
        prop_assert!(a.mul_vec(&dec.kernel).iter().all(|v| v.is_zero()));
        for (lambda, v) in &dec.terms {
            prop_assert!(lambda.is_positive());
            for (ve, fe) in v.iter().zip(&f) {
                prop_assert!(ve.is_zero() || (ve * fe).is_positive());
            }
        }
        // Any feasible point costs at least opt.
        let cost = f.iter().zip(inst.c()).fold(BigRational::zero(), |acc, (f, &c)| acc + f * BigRational::from_integer(c.into()));
        prop_assert!(cost >= report.opt);
    }

    #[test]
    fn optimality_criterion_holds(inst in feasible_instance(2, 5, Mode::Directed), tiny in 1u32..1000) {
        let report = enumerate_bfs(&inst).unwrap();
        // Mostly optimal mixture with a small non-optimal share.
        let mut f = vec![BigRational::zero(); inst.m()];
        let star = &report.optimal_set[0];
        let share = BigRational::new(1.into(), (BigInt::from(tiny) * BigInt::from(1_000_000u32)).into());
        for (fe, v) in f.iter_mut().zip(&star.values) {
            *fe += v * (BigRational::one() - &share);
        }
        let g = report.non_optimal.first().unwrap_or(star);
        for (fe, v) in f.iter_mut().zip(&g.values) {
            *fe += v * &share;
        }
        let check = check_optimality_criterion(&inst, &report, &f, 0.5).unwrap();
        prop_assert!(check.holds);
    }
}

#[test]
fn rounding_on_the_triangle() {
    let inst = LpInstance::new(vec![vec![1, 0, 1], vec![-1, 1, 0]], vec![1, 0], vec![1, 1, 3], Mode::Directed).unwrap();
    let g: Vec<BigRational> =
        [(99, 100), (99, 100), (1, 100)].iter().map(|&(n, d)| BigRational::new(n.into(), d.into())).collect();
    let r = round_to_kernel_free(&inst, &g, &[2], None).unwrap();
    let one = BigRational::one();
    assert_eq!(r.f, vec![one.clone(), one, BigRational::zero()]);
    assert_eq!(r.distance, BigRational::new(1.into(), 100.into()));
    assert!(r.distance < r.bound);
}
