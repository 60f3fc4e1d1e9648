// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

use lsalloc::complete::{solve_complete_approx, split_blocks, RoundingMode};
use lsalloc::config_lp::solve_configuration_lp;
use lsalloc::extension::extend_allocation;
use lsalloc::fpt::solve_fpt_with;
use lsalloc::fpt::FptOptions;
use lsalloc::matching::{edge_color, is_proper_coloring, max_weight_matching, BipartiteMultigraph, WeightedBipartiteGraph};
use lsalloc::oracle::exact_umax_emax;
use lsalloc::rounding::{round_derandomized, round_randomized};
use lsalloc::{Allocation, Instance, Mode, Objective};
use proptest::prelude::*;

fn instance(max_n: usize, hi: u64) -> impl Strategy<Value = Instance> {
    (1..=max_n).prop_flat_map(move |n| {
        prop::collection::vec(0..=hi, n * n * n)
            .prop_map(move |v| Instance::from_fn(n, |i, j, k| v[(i * n + j) * n + k]).unwrap())
    })
}

/// A random sub-allocation of a Latin square of order `n`.
fn partial_square(max_n: usize) -> impl Strategy<Value = Allocation> {
    (1..=max_n).prop_flat_map(|n| {
        (
            Just(n),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            prop::collection::vec(any::<bool>(), n * n),
        )
            .prop_map(|(n, rows, syms, keep)| {
                let mut a = Allocation::empty(n);
                for j in 0..n {
                    for k in 0..n {
                        if keep[j * n + k] {
                            a.assign(rows[j], k, syms[(j + k) % n]);
                        }
                    }
                }
                a
            })
    })
}

/// Best matching weight over all injective maps of the smaller side.
fn brute_matching(w: &[Vec<i64>]) -> i64 {
    fn go(w: &[Vec<i64>], l: usize, used: &mut Vec<bool>) -> i64 {
        if l == w.len() {
            return 0;
        }
        let mut best = go(w, l + 1, used);
        for r in 0..used.len() {
            if !used[r] {
                used[r] = true;
                best = best.max(w[l][r].max(0) + go(w, l + 1, used));
                used[r] = false;
            }
        }
        best
    }
    go(w, 0, &mut vec![false; w.first().map_or(0, Vec::len)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn json_round_trip(inst in instance(4, 20), a in partial_square(4)) {
        prop_assert_eq!(Instance::from_json(&inst.to_json()).unwrap(), inst);
        prop_assert_eq!(Allocation::from_json(&a.to_json()).unwrap(), a);
    }

    #[test]
    fn matching_is_optimal(rows in 1..5usize, cols in 1..5usize, seed in prop::collection::vec(-5i64..10, 16)) {
        let w: Vec<Vec<i64>> = (0..rows).map(|l| (0..cols).map(|r| seed[l * 4 + r]).collect()).collect();
        let m = max_weight_matching(&WeightedBipartiteGraph::new(w.clone()).unwrap());
        prop_assert_eq!(m.weight, brute_matching(&w));
        prop_assert_eq!(m.pairs.iter().map(|&(l, r)| w[l][r]).sum::<i64>(), m.weight);
    }

    #[test]
    fn edge_colouring_uses_max_degree(edges in prop::collection::vec((0..5usize, 0..5usize), 0..30)) {
        let g = BipartiteMultigraph::new(5, 5, edges).unwrap();
        let colours = edge_color(&g, g.max_degree()).unwrap();
        prop_assert!(is_proper_coloring(&g, &colours));
        prop_assert!(colours.iter().all(|&c| c < g.max_degree()));
    }

    #[test]
    fn extension_completes_partial_rectangles(a in partial_square(9), cut in (0.0..1.0f64, 0.0..1.0f64)) {
        // keep an m x r corner with m + r <= n
        let n = a.n();
        let m = (cut.0 * (n + 1) as f64) as usize;
        let r = (cut.1 * (n - m + 1) as f64) as usize;
        let a = Allocation::from_triples(n, a.triples().filter(|&(_, j, k)| j < m && k < r)).unwrap();
        let b = extend_allocation(&a).unwrap();
        prop_assert!(b.is_complete() && b.is_feasible() && b.is_superset_of(&a));
    }

    #[test]
    fn lp_bounds_exact_and_rounding(inst in instance(3, 9), seed in any::<u64>()) {
        let (sol, _) = solve_configuration_lp(&inst).unwrap();
        let opt = exact_umax_emax(&inst, Objective::Umax, Mode::Partial).unwrap().1 as f64;
        prop_assert!(sol.objective + 1e-6 >= opt);
        let r = round_randomized(&inst, &sol, seed).unwrap();
        prop_assert!(r.allocation.is_feasible());
        prop_assert!(r.welfare as f64 <= opt + 1e-9);
        let d = round_derandomized(&inst, &sol).unwrap();
        let bound = (1.0 - 1.0 / std::f64::consts::E) * sol.objective;
        prop_assert!(d.welfare as f64 >= bound - 1e-6 * (1.0 + sol.objective));
    }

    #[test]
    fn complete_approx_is_a_latin_square(inst in instance(5, 9)) {
        let out = solve_complete_approx(&inst, RoundingMode::Derandomized).unwrap();
        prop_assert!(out.allocation.is_complete() && out.allocation.is_feasible());
        prop_assert!(4 * out.welfare >= out.partial_welfare);
    }

    #[test]
    fn blocks_cover_the_allocation(a in partial_square(7)) {
        prop_assume!(a.n() % 2 == 0 || !a.is_complete());
        let blocks = split_blocks(&a).unwrap();
        for b in &blocks {
            prop_assert!(b.is_feasible());
            prop_assert!(a.is_superset_of(b));
        }
        for (i, j, k) in a.triples() {
            prop_assert!(blocks.iter().any(|b| b.get(j, k) == Some(i)));
        }
    }

    #[test]
    fn fpt_never_exceeds_exact(inst in instance(4, 1), seed in any::<u64>()) {
        let opts = FptOptions { seed, ..FptOptions::default() };
        for mode in [Mode::Partial, Mode::Complete] {
            let out = solve_fpt_with(&inst, mode, &opts).unwrap();
            let opt = exact_umax_emax(&inst, Objective::Umax, mode).unwrap().1;
            prop_assert!(out.value <= opt);
            prop_assert!(out.allocation.is_feasible());
            prop_assert!(mode == Mode::Partial || out.allocation.is_complete());
        }
    }
}
