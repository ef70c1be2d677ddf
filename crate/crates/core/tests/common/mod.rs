#![allow(dead_code)]

use physarum_core::{enumerate_bfs, LpInstance, Mode};
use proptest::prelude::*;

/// Raw integer data `(A, b, c)` with `n <= max_n`, `n <= m <= max_m`.
pub fn raw(
    max_n: usize,
    max_m: usize,
    entries: i64,
    costs: (i64, i64),
) -> impl Strategy<Value = (Vec<Vec<i64>>, Vec<i64>, Vec<i64>)> {
    (1..=max_n)
        .prop_flat_map(move |n| (Just(n), n..=max_m))
        .prop_flat_map(move |(n, m)| {
            (
                prop::collection::vec(prop::collection::vec(-entries..=entries, m), n),
                prop::collection::vec(-entries..=entries, n),
                prop::collection::vec(costs.0..=costs.1, m),
            )
        })
}

/// Valid full-row-rank instances.
pub fn instance(max_n: usize, max_m: usize, mode: Mode) -> impl Strategy<Value = LpInstance> {
    raw(max_n, max_m, 3, (1, 5)).prop_filter_map("invalid instance", move |(a, b, c)| {
        let n = a.len();
        LpInstance::new(a, b, c, mode).ok().filter(|i| i.n() == n)
    })
}

/// Valid instances with a feasible basic solution in their own mode.
pub fn feasible_instance(max_n: usize, max_m: usize, mode: Mode) -> impl Strategy<Value = LpInstance> {
    instance(max_n, max_m, mode).prop_filter("no feasible basic solution", |i| enumerate_bfs(i).is_ok())
}

/// Positive capacity vectors spanning a few orders of magnitude.
pub fn capacities(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-2.0f64..2.0).prop_map(|e| 10f64.powf(e)), m)
}

pub fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
