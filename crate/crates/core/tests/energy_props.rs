mod common;

use common::{capacities, inf_dist, instance};
use num_traits::Zero;
use physarum_core::energy::solve_positive_exact;
use physarum_core::linalg::{
    f64_to_rational, nullspace, rational_to_f64, solve_linear, solve_linear_exact, Combinations, Matrix,
};
use physarum_core::{compute_constants, decompose, solve_general, solve_positive, EnergySolver, LpInstance, Mode};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn with_capacities(inst: impl Strategy<Value = LpInstance>) -> impl Strategy<Value = (LpInstance, Vec<f64>)> {
    inst.prop_flat_map(|i| {
        let m = i.m();
        (Just(i), capacities(m))
    })
}

/// Minimizes the energy over `q0 + ker(A)` through the normal equations of
/// the kernel parametrisation.
fn kernel_minimizer(inst: &LpInstance, x: &[f64]) -> Vec<f64> {
    let (n, m) = (inst.n(), inst.m());
    let a = inst.a_rational();
    let q0 = Combinations::new(m, n)
        .find_map(|basis| {
            let fb = solve_linear_exact(&a.select_columns(&basis), &inst.b_rational()).ok()?;
            let mut v = vec![0.0; m];
            for (&e, f) in basis.iter().zip(&fb) {
                v[e] = rational_to_f64(f);
            }
            Some(v)
        })
        .expect("full row rank");
    let basis: Vec<Vec<f64>> = nullspace(&a).iter().map(|v| v.iter().map(rational_to_f64).collect()).collect();
    let k = basis.len();
    if k == 0 {
        return q0;
    }
    let r: Vec<f64> = inst.c().iter().zip(x).map(|(&c, x)| c as f64 / x).collect();
    let mut g = vec![0.0; k * k];
    let mut rhs = vec![0.0; k];
    for i in 0..k {
        for j in 0..k {
            g[i * k + j] = (0..m).map(|e| basis[i][e] * r[e] * basis[j][e]).sum();
        }
        rhs[i] = -(0..m).map(|e| basis[i][e] * r[e] * q0[e]).sum::<f64>();
    }
    let z = solve_linear(&Matrix::new(k, k, g).unwrap(), &rhs).unwrap();
    let mut q = q0;
    for (zi, v) in z.iter().zip(&basis) {
        for (qe, ve) in q.iter_mut().zip(v) {
            *qe += zi * ve;
        }
    }
    q
}

fn weighted(inst: &LpInstance, x: &[f64], f: &[f64]) -> f64 {
    inst.c().iter().zip(x).zip(f).map(|((&c, x), f)| c as f64 / x * f * f).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn certificates((inst, x) in with_capacities(instance(3, 6, Mode::Directed)), seed in any::<u64>()) {
        let sol = solve_positive(&inst, &x).unwrap();
        let b = inst.b_f64();
        let scale = b.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let aq = inst.a_f64().mul_vec(&sol.q);
        prop_assert!(inf_dist(&aq, &b) <= 1e-8 * scale);
        let btp: f64 = b.iter().zip(&sol.p).map(|(b, p)| b * p).sum();
        prop_assert!((sol.energy - btp).abs() <= 1e-8 * sol.energy.abs().max(1e-12), "{} vs {}", sol.energy, btp);
        let k = compute_constants(&inst, &x).unwrap();
        let d = rational_to_f64(&k.d);
        let gamma = rational_to_f64(&num_rational::BigRational::from_integer(k.gamma_a.clone()));
        let bound = inst.m() as f64 * d * d * b.iter().map(|v| v.abs()).sum::<f64>() / gamma;
        prop_assert!(sol.q.iter().all(|v| v.abs() <= bound * (1.0 + 1e-12)));
        let kernel: Vec<Vec<f64>> = nullspace(&inst.a_rational())
            .iter()
            .map(|v| v.iter().map(rational_to_f64).collect())
            .collect();
        let e0 = weighted(&inst, &x, &sol.q);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..if kernel.is_empty() { 0 } else { 200 } {
            let t = 10f64.powf(rng.gen_range(-4.0..0.0));
            let mut f = sol.q.clone();
            for v in &kernel {
                let s = rng.gen_range(-1.0..1.0) * t;
                for (fe, ve) in f.iter_mut().zip(v) {
                    *fe += s * ve;
                }
            }
            prop_assert!(weighted(&inst, &x, &f) >= e0 * (1.0 - 1e-9));
        }
    }

    #[test]
    fn matches_kernel_parametrisation((inst, x) in with_capacities(instance(3, 6, Mode::Directed))) {
        let sol = solve_positive(&inst, &x).unwrap();
        let q = kernel_minimizer(&inst, &x);
        let scale = q.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        prop_assert!(inf_dist(&sol.q, &q) <= 1e-7 * scale, "{:?} vs {:?}", sol.q, q);
    }

    #[test]
    fn matches_exact_solve_and_is_kernel_free((inst, x) in with_capacities(instance(2, 5, Mode::Directed))) {
        let xr: Vec<_> = x.iter().map(|&v| f64_to_rational(v)).collect();
        let (q, p) = solve_positive_exact(&inst, &xr).unwrap();
        let sol = solve_positive(&inst, &x).unwrap();
        let qf: Vec<f64> = q.iter().map(rational_to_f64).collect();
        let pf: Vec<f64> = p.iter().map(rational_to_f64).collect();
        let scale = qf.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        prop_assert!(inf_dist(&sol.q, &qf) <= 1e-8 * scale);
        let pscale = pf.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        prop_assert!(inf_dist(&sol.p, &pf) <= 1e-7 * pscale);
        let dec = decompose(&inst, &q).unwrap();
        prop_assert!(dec.kernel.iter().all(|v| v.is_zero()));
        prop_assert_eq!(dec.reconstruct(), q);
    }

    #[test]
    fn general_path_equals_positive_path((inst, x) in with_capacities(instance(3, 6, Mode::Directed))) {
        prop_assert_eq!(solve_general(&inst, &x).unwrap(), solve_positive(&inst, &x).unwrap());
    }

    #[test]
    fn zero_costs_are_the_regularised_limit(
        (inst, x) in with_capacities(instance(3, 6, Mode::Directed)),
        zeros in prop::collection::vec(any::<prop::sample::Index>(), 1..=2),
    ) {
        let m = inst.m();
        let mut c = inst.c().to_vec();
        for z in &zeros {
            c[z.index(m)] = 0;
        }
        let zc = LpInstance::new(inst.a().to_rows(), inst.b().to_vec(), c.clone(), Mode::Directed);
        prop_assume!(zc.is_ok());
        let zc = zc.unwrap();
        let reg_c: Vec<i64> = c.iter().map(|&v| if v == 0 { 1 } else { v * 1_000_000_000_000 }).collect();
        let reg = LpInstance::new(inst.a().to_rows(), inst.b().to_vec(), reg_c, Mode::Directed).unwrap();
        let q = solve_general(&zc, &x).unwrap().q;
        let xr: Vec<_> = x.iter().map(|&v| f64_to_rational(v)).collect();
        let q_reg: Vec<f64> = solve_positive_exact(&reg, &xr).unwrap().0.iter().map(rational_to_f64).collect();
        prop_assert!(inf_dist(&q, &q_reg) <= 1e-4, "{:?} vs {:?}", q, q_reg);
        let aq = zc.a_f64().mul_vec(&q);
        prop_assert!(inf_dist(&aq, &zc.b_f64()) <= 1e-8 * zc.b_f64().iter().fold(1.0f64, |a, v| a.max(v.abs())));
    }

    #[test]
    fn solver_is_deterministic((inst, x) in with_capacities(instance(3, 6, Mode::Directed))) {
        let s = EnergySolver::new(&inst).unwrap();
        let a = s.solve(&x).unwrap();
        let b = s.solve(&x).unwrap();
        prop_assert_eq!(a.q.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.q.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}

#[test]
fn zero_cost_demo_is_exact() {
    let inst = LpInstance::new(vec![vec![1, 0, 1], vec![-1, 1, 0]], vec![1, 0], vec![1, 1, 0], Mode::Directed).unwrap();
    let sol = solve_general(&inst, &[1.0, 1.0, 1.0]).unwrap();
    assert_eq!(sol.q, vec![0.0, 0.0, 1.0]);
    assert_eq!(sol.p, vec![0.0, 0.0]);
}
