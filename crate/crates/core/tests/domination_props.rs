mod common;

use common::{capacities, feasible_instance, instance};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use physarum_core::domination::weakly_dominated_at;
use physarum_core::linalg::f64_to_rational;
use physarum_core::oracle::max_scaled_flow;
use physarum_core::{alpha_of, enumerate_bfs, enumerate_dual_vertices, precondition, LpInstance, Mode};
use proptest::prelude::*;

fn with_x(inst: impl Strategy<Value = LpInstance>) -> impl Strategy<Value = (LpInstance, Vec<f64>)> {
    inst.prop_flat_map(|i| {
        let m = i.m();
        (Just(i), capacities(m))
    })
}

/// Minimum of the dual functional over source-side cuts of the triangle.
fn triangle_min_cut(x: &[f64]) -> f64 {
    // Nodes s, a, t with edges s->a, a->t, s->t.
    let edges = [(0, 1), (1, 2), (0, 2)];
    let mut best = f64::INFINITY;
    for side_a in [false, true] {
        let side = [true, side_a, false];
        let cap: f64 = edges.iter().zip(x).filter(|((u, v), _)| side[*u] != side[*v]).map(|(_, x)| x).sum();
        best = best.min(cap);
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn duality_with_primal_enumeration((inst, x) in with_x(instance(3, 5, Mode::Directed)), undirected in any::<bool>()) {
        let mode = if undirected { Mode::Undirected } else { Mode::Directed };
        let set = enumerate_dual_vertices(&inst, mode).unwrap();
        let xr: Vec<BigRational> = x.iter().map(|&v| f64_to_rational(v)).collect();
        let (alpha, _) = set.alpha_exact(&xr);
        let (t, f) = max_scaled_flow(&inst, &xr, mode).unwrap();
        let cut = set
            .d
            .iter()
            .map(|d| d.iter().zip(&xr).map(|(d, x)| d * x).sum::<BigRational>())
            .min()
            .unwrap();
        prop_assert_eq!(&cut, &t);
        prop_assert!(alpha <= t);
        let a = inst.a_rational();
        let target: Vec<BigRational> = inst.b_rational().iter().map(|b| b * &t).collect();
        prop_assert_eq!(a.mul_vec(&f), target);
        for (fe, xe) in f.iter().zip(&xr) {
            match mode {
                Mode::Directed => prop_assert!(!fe.is_negative() && fe <= xe),
                Mode::Undirected => prop_assert!(fe.abs() <= *xe),
            }
        }
    }

    #[test]
    fn vertices_are_tight_and_bounded(inst in instance(3, 6, Mode::Directed), undirected in any::<bool>()) {
        let mode = if undirected { Mode::Undirected } else { Mode::Directed };
        let set = enumerate_dual_vertices(&inst, mode).unwrap();
        let b1: BigInt = inst.b().iter().map(|&v| BigInt::from(v).abs()).sum();
        let bound = BigRational::from_integer(b1 * inst.d_s().unwrap());
        let sign = if undirected { -BigRational::one() } else { BigRational::one() };
        let n = inst.n();
        for (y, aty) in set.vertices.iter().zip(&set.aty) {
            let by: BigRational = inst.b_rational().iter().zip(y).map(|(b, y)| b * y).sum();
            prop_assert_eq!(&by, &sign);
            prop_assert!(y.iter().all(|v| v.abs() <= bound));
            // n - 1 independent tight columns plus the normalisation.
            let tight: Vec<usize> = (0..inst.m()).filter(|&e| aty[e] == BigRational::from_integer(0.into())).collect();
            let rank = physarum_core::linalg::rank(&inst.a_rational().select_columns(&tight).transpose());
            prop_assert!(rank >= n - 1);
        }
    }

    #[test]
    fn nesting((inst, x) in with_x(feasible_instance(2, 5, Mode::Directed)), a in 1u32..20, b in 1u32..20) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let lo = BigRational::new(lo.into(), 4.into());
        let hi = BigRational::new(hi.into(), 4.into());
        if weakly_dominated_at(&inst, &x, &lo).unwrap() {
            prop_assert!(weakly_dominated_at(&inst, &x, &hi).unwrap());
        }
    }

    #[test]
    fn feasible_points_have_unit_alpha(inst in feasible_instance(3, 6, Mode::Directed)) {
        let report = enumerate_bfs(&inst).unwrap();
        let set = enumerate_dual_vertices(&inst, Mode::Directed).unwrap();
        for s in &report.all_bfs {
            prop_assert!(set.alpha_exact(&s.values).0.is_one());
        }
    }

    #[test]
    fn preconditioned_start_dominates((inst, x) in with_x(feasible_instance(2, 4, Mode::Directed))) {
        let pre = precondition(&inst, &x).unwrap();
        let set = enumerate_dual_vertices(&pre.instance, Mode::Directed).unwrap();
        let xr: Vec<BigRational> = pre.x0.iter().map(|&v| f64_to_rational(v)).collect();
        for aty in &set.aty {
            let v: BigRational = aty.iter().zip(&xr).map(|(a, x)| a * x).sum();
            prop_assert!(v >= BigRational::one());
        }
        let report = enumerate_bfs(&pre.instance).unwrap();
        let last = pre.instance.m() - 1;
        prop_assert!(report.optimal_set.iter().all(|s| s.values[last] == BigRational::from_integer(0.into())));
    }

    #[test]
    fn triangle_alpha_is_the_min_cut(x in capacities(3)) {
        let inst = LpInstance::new(vec![vec![1, 0, 1], vec![-1, 1, 0]], vec![1, 0], vec![1, 1, 3], Mode::Undirected).unwrap();
        let set = enumerate_dual_vertices(&inst, Mode::Undirected).unwrap();
        let cert = alpha_of(&inst, &set, &x).unwrap();
        prop_assert!((cert.alpha_f64() - triangle_min_cut(&x)).abs() <= 1e-12 * triangle_min_cut(&x));
    }
}
