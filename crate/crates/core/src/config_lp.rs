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

//! Configuration LP over per-agent bundles, solved by column generation.
//!
//! The restricted master keeps one equality row per agent (`sum_S y_iS = 1`)
//! and one packing row per cell (`sum_{i,S ∋ cell} y_iS <= 1`, with a slack).
//! New columns come from pricing: for agent `i` the bundle maximizing
//! `sum_{(j,k) in S} (v_ijk - q_jk)` is a maximum-weight matching between
//! items and rounds. The loop stops once no bundle has reduced cost above
//! `epsilon`, at which point the master optimum is the LP optimum.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::{Bundle, Instance};
use crate::matching::{max_weight_matching, WeightedBipartiteGraph};
use crate::simplex::RevisedSimplex;

pub const DEFAULT_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LpOptions {
    pub epsilon: f64,
    /// Pricing rounds before giving up; `None` means `10 n^3`.
    pub max_rounds: Option<usize>,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            epsilon: DEFAULT_EPSILON,
            max_rounds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub agent: usize,
    pub bundle: Bundle,
    pub weight: f64,
}

/// Positive-weight columns of an optimal master solution.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalSolution {
    pub n: usize,
    pub columns: Vec<Column>,
    pub objective: f64,
}

impl FractionalSolution {
    /// Columns of one agent, in solution order.
    pub fn agent_columns(&self, agent: usize) -> impl Iterator<Item = &Column> + '_ {
        self.columns.iter().filter(move |c| c.agent == agent)
    }

    pub fn agent_weight(&self, agent: usize) -> f64 {
        self.agent_columns(agent).map(|c| c.weight).sum()
    }

    /// `sum_{i,S} v_i(S) y_iS`.
    pub fn value(&self, inst: &Instance) -> f64 {
        self.columns
            .iter()
            .map(|c| c.bundle.value(inst, c.agent) as f64 * c.weight)
            .sum()
    }

    /// Solution putting weight one on a single bundle per agent.
    pub fn integral(inst: &Instance, bundles: Vec<Bundle>) -> Result<Self> {
        if bundles.len() != inst.n() {
            return Err(Error::DimensionMismatch {
                expected: inst.n(),
                found: bundles.len(),
            });
        }
        let columns: Vec<Column> = bundles
            .into_iter()
            .enumerate()
            .map(|(agent, bundle)| Column {
                agent,
                bundle,
                weight: 1.0,
            })
            .collect();
        let mut sol = FractionalSolution {
            n: inst.n(),
            columns,
            objective: 0.0,
        };
        sol.objective = sol.value(inst);
        Ok(sol)
    }
}

/// Agent prices `p_i` and cell prices `q_jk` of the dual.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPrices {
    pub agent: Vec<f64>,
    /// Row-major over `(item, round)`.
    pub cell: Vec<f64>,
}

impl DualPrices {
    pub fn zeros(n: usize) -> Self {
        DualPrices {
            agent: vec![0.0; n],
            cell: vec![0.0; n * n],
        }
    }

    pub fn cell_price(&self, n: usize, item: usize, round: usize) -> f64 {
        self.cell[item * n + round]
    }

    /// `sum_i p_i + sum_jk q_jk`.
    pub fn objective(&self) -> f64 {
        self.agent.iter().sum::<f64>() + self.cell.iter().sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpReport {
    pub solution: FractionalSolution,
    pub duals: DualPrices,
    /// Columns in the final master, including the initial empty bundles.
    pub columns: usize,
    /// Pricing rounds performed.
    pub iterations: usize,
}

/// Best bundle for `agent` under `duals` and its reduced cost
/// `max_S sum (v - q) - p_i`.
pub fn price(inst: &Instance, agent: usize, duals: &DualPrices) -> (Bundle, f64) {
    let n = inst.n();
    let g = WeightedBipartiteGraph::from_fn(n, n, |j, k| {
        inst.value(agent, j, k) as f64 - duals.cell_price(n, j, k)
    });
    let m = max_weight_matching(&g);
    let bundle = Bundle::new(m.pairs).expect("a matching is a bundle");
    (bundle, m.weight - duals.agent[agent])
}

pub fn solve_configuration_lp(inst: &Instance) -> Result<(FractionalSolution, DualPrices)> {
    let r = solve_configuration_lp_with(inst, &LpOptions::default())?;
    Ok((r.solution, r.duals))
}

pub fn solve_configuration_lp_with(inst: &Instance, opts: &LpOptions) -> Result<LpReport> {
    let n = inst.n();
    let rows = n + n * n;
    let eps = opts.epsilon;
    let max_rounds = opts.max_rounds.unwrap_or(10 * n * n * n).max(1);
    let mut master = RevisedSimplex::new(vec![1.0; rows], eps);

    // column bookkeeping: master column -> (agent, bundle); slacks are None
    let mut meta: Vec<Option<(usize, Bundle)>> = Vec::new();
    let mut known: HashSet<(usize, Bundle)> = HashSet::new();
    let mut basis = Vec::with_capacity(rows);
    for i in 0..n {
        basis.push(master.add_column(vec![(i, 1.0)], 0.0));
        meta.push(Some((i, Bundle::empty())));
        known.insert((i, Bundle::empty()));
    }
    for c in 0..n * n {
        basis.push(master.add_column(vec![(n + c, 1.0)], 0.0));
        meta.push(None);
    }
    master.set_basis(basis)?;

    let max_pivots = 200_000 + 100 * rows;
    let mut iterations = 0;
    loop {
        master.optimize(max_pivots)?;
        let y = master.duals();
        let duals = DualPrices {
            agent: y[..n].to_vec(),
            cell: y[n..].to_vec(),
        };
        iterations += 1;
        let priced: Vec<(Bundle, f64)> = (0..n)
            .into_par_iter()
            .map(|i| price(inst, i, &duals))
            .collect();
        let mut added = false;
        for (i, (bundle, rc)) in priced.iter().enumerate() {
            if *rc > eps && known.insert((i, bundle.clone())) {
                let mut entries = vec![(i, 1.0)];
                entries.extend(bundle.cells().iter().map(|&(j, k)| (n + j * n + k, 1.0)));
                master.add_column(entries, bundle.value(inst, i) as f64);
                meta.push(Some((i, bundle.clone())));
                added = true;
            }
        }
        if !added {
            return Ok(LpReport {
                solution: collect_solution(inst, &master, &meta),
                duals,
                columns: master.num_columns() - n * n,
                iterations,
            });
        }
        if iterations >= max_rounds {
            // (p + rc+, q) is dual feasible, so this bounds the LP from above
            let bound = master.objective() + priced.iter().map(|(_, rc)| rc.max(0.0)).sum::<f64>();
            return Err(Error::IterationLimit { iterations, bound });
        }
    }
}

fn collect_solution(
    inst: &Instance,
    master: &RevisedSimplex,
    meta: &[Option<(usize, Bundle)>],
) -> FractionalSolution {
    let x = master.primal();
    let columns = meta
        .iter()
        .zip(x)
        .filter_map(|(m, w)| match m {
            Some((agent, bundle)) if w > 1e-12 => Some(Column {
                agent: *agent,
                bundle: bundle.clone(),
                weight: w.min(1.0),
            }),
            _ => None,
        })
        .collect();
    FractionalSolution {
        n: inst.n(),
        columns,
        objective: master.objective(),
    }
}

/// Cell marginals `x*_ijk = sum_{S ∋ (j,k)} y_iS`.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    n: usize,
    x: Vec<f64>,
}

impl Marginals {
    #[inline]
    pub fn get(&self, agent: usize, item: usize, round: usize) -> f64 {
        self.x[(agent * self.n + item) * self.n + round]
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

pub fn marginals(sol: &FractionalSolution) -> Marginals {
    let n = sol.n;
    let mut x = vec![0.0; n * n * n];
    for c in &sol.columns {
        for &(j, k) in c.bundle.cells() {
            x[(c.agent * n + j) * n + k] += c.weight;
        }
    }
    Marginals { n, x }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::examples;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// All matchings between items and rounds of an `n x n` grid.
    fn all_bundles(n: usize) -> Vec<Vec<(usize, usize)>> {
        fn go(n: usize, j: usize, used: &mut Vec<bool>, cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
            if j == n {
                out.push(cur.clone());
                return;
            }
            go(n, j + 1, used, cur, out);
            for k in 0..n {
                if !used[k] {
                    used[k] = true;
                    cur.push((j, k));
                    go(n, j + 1, used, cur, out);
                    cur.pop();
                    used[k] = false;
                }
            }
        }
        let mut out = Vec::new();
        go(n, 0, &mut vec![false; n], &mut Vec::new(), &mut out);
        out
    }

    fn random_instance(rng: &mut ChaCha8Rng, n: usize, hi: u64) -> Instance {
        Instance::from_fn(n, |_, _, _| rng.gen_range(0..=hi)).unwrap()
    }

    #[test]
    fn bundle_count_for_order_four() {
        assert_eq!(all_bundles(4).len(), 209);
        assert_eq!(all_bundles(2).len(), 7);
    }

    #[test]
    fn zero_prices_give_best_matching() {
        let inst = examples::partial_beats_complete();
        let (b, rc) = price(&inst, 0, &DualPrices::zeros(2));
        assert_eq!(b.cells(), &[(0, 0)]);
        assert_eq!(rc, 1.0);
    }

    #[test]
    fn high_prices_give_empty_bundle() {
        let inst = Instance::from_fn(3, |i, j, k| (i + j + k) as u64).unwrap();
        let duals = DualPrices {
            agent: vec![0.0; 3],
            cell: (0..9).map(|_| 10.0).collect(),
        };
        let (b, rc) = price(&inst, 1, &duals);
        assert!(b.is_empty());
        assert_eq!(rc, 0.0);
    }

    #[test]
    fn pricing_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let bundles = all_bundles(4);
        for _ in 0..20 {
            let inst = random_instance(&mut rng, 4, 9);
            let duals = DualPrices {
                agent: (0..4).map(|_| rng.gen_range(0.0..5.0)).collect(),
                cell: (0..16).map(|_| rng.gen_range(0.0..6.0)).collect(),
            };
            for i in 0..4 {
                let (_, rc) = price(&inst, i, &duals);
                let brute = bundles
                    .iter()
                    .map(|s| {
                        s.iter()
                            .map(|&(j, k)| inst.value(i, j, k) as f64 - duals.cell_price(4, j, k))
                            .sum::<f64>()
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
                    - duals.agent[i];
                assert!((rc - brute).abs() < 1e-9, "{rc} vs {brute}");
            }
        }
    }

    #[test]
    fn worked_instance_bound_is_two() {
        let (sol, _) = solve_configuration_lp(&examples::partial_beats_complete()).unwrap();
        assert!((sol.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn zero_instance_bound_is_zero() {
        let (sol, duals) = solve_configuration_lp(&Instance::zeros(3).unwrap()).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert!(duals.objective().abs() < 1e-9);
    }

    #[test]
    fn iteration_cap_is_surfaced() {
        let inst = Instance::from_fn(3, |i, j, k| ((i * 7 + j * 3 + k * 5) % 10) as u64).unwrap();
        let err = solve_configuration_lp_with(
            &inst,
            &LpOptions {
                max_rounds: Some(1),
                ..LpOptions::default()
            },
        )
        .unwrap_err();
        match err {
            Error::IterationLimit { iterations, bound } => {
                assert_eq!(iterations, 1);
                let (sol, _) = solve_configuration_lp(&inst).unwrap();
                assert!(bound >= sol.objective - 1e-9);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn solution_invariants_and_certificate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=5 {
            for _ in 0..6 {
                let inst = random_instance(&mut rng, n, 9);
                let (sol, duals) = solve_configuration_lp(&inst).unwrap();
                for i in 0..n {
                    assert!((sol.agent_weight(i) - 1.0).abs() < 1e-9);
                }
                let x = marginals(&sol);
                for j in 0..n {
                    for k in 0..n {
                        let s: f64 = (0..n).map(|i| x.get(i, j, k)).sum();
                        assert!(s <= 1.0 + 1e-9);
                        assert!(duals.cell_price(n, j, k) >= -1e-9);
                    }
                }
                assert!((sol.value(&inst) - sol.objective).abs() < 1e-7);
                // strong duality and a clean pricing sweep
                assert!((duals.objective() - sol.objective).abs() < 1e-7);
                for i in 0..n {
                    assert!(price(&inst, i, &duals).1 <= 1e-7);
                }
                // dropping the packing rows only relaxes
                let relaxed: f64 = (0..n).map(|i| price(&inst, i, &DualPrices::zeros(n)).1).sum();
                assert!(sol.objective <= relaxed + 1e-7);
            }
        }
    }

    #[test]
    fn single_valued_item_per_agent() {
        // agent i only values item i, identically in every round
        let inst = Instance::from_fn(4, |i, j, _| if i == j { 2 + i as u64 } else { 0 }).unwrap();
        let (sol, _) = solve_configuration_lp(&inst).unwrap();
        assert!((sol.objective - (2 + 3 + 4 + 5) as f64).abs() < 1e-9);
    }

    #[test]
    fn marginal_examples() {
        let inst = Instance::zeros(3).unwrap();
        let s = Bundle::new(vec![(0, 1), (2, 0)]).unwrap();
        let sol = FractionalSolution::integral(&inst, vec![s.clone(), Bundle::empty(), Bundle::empty()]).unwrap();
        let x = marginals(&sol);
        for j in 0..3 {
            for k in 0..3 {
                assert_eq!(x.get(0, j, k), if s.contains(j, k) { 1.0 } else { 0.0 });
                assert_eq!(x.get(1, j, k), 0.0);
            }
        }
        let half = FractionalSolution {
            n: 3,
            columns: vec![
                Column { agent: 0, bundle: Bundle::new(vec![(0, 0), (1, 1)]).unwrap(), weight: 0.5 },
                Column { agent: 0, bundle: Bundle::new(vec![(0, 0), (2, 2)]).unwrap(), weight: 0.5 },
            ],
            objective: 0.0,
        };
        let x = marginals(&half);
        assert_eq!(x.get(0, 0, 0), 1.0);
        assert_eq!(x.get(0, 1, 1), 0.5);
        let total: f64 = (0..3).flat_map(|j| (0..3).map(move |k| (j, k))).map(|(j, k)| x.get(0, j, k)).sum();
        let counted: f64 = half.columns.iter().map(|c| c.weight * c.bundle.len() as f64).sum();
        assert!((total - counted).abs() < 1e-12);
    }
}
