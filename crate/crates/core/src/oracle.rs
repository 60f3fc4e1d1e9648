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

//! Exhaustive engines for small orders: fair complete allocations, Pareto
//! domination, exact welfare optima and the binary egalitarian check.

use crate::error::{Error, Result};
use crate::fpt::solve_exact_enumeration;
use crate::instance::{fairness_check, Allocation, Fairness, Instance, Mode, Objective};
use crate::matching::{max_weight_matching, WeightedBipartiteGraph};

/// Default order limit of the exhaustive searches here.
pub const ORACLE_LIMIT: usize = 5;

/// Cell-by-cell depth-first walk over allocations of one class.
///
/// Complete mode places an agent on every cell; partial mode may leave a
/// cell empty and only places agents that value the cell positively.
struct Walker<'a> {
    inst: &'a Instance,
    n: usize,
    mode: Mode,
    grid: Allocation,
    row: Vec<u64>,
    col: Vec<u64>,
    util: Vec<u64>,
}

impl<'a> Walker<'a> {
    fn new(inst: &'a Instance, mode: Mode) -> Self {
        let n = inst.n();
        Walker {
            inst,
            n,
            mode,
            grid: Allocation::empty(n),
            row: vec![0; n],
            col: vec![0; n],
            util: vec![0; n],
        }
    }

    fn place(&mut self, j: usize, k: usize, i: usize) {
        self.grid.assign(j, k, i);
        self.row[j] |= 1 << i;
        self.col[k] |= 1 << i;
        self.util[i] += self.inst.value(i, j, k);
    }

    fn unplace(&mut self, j: usize, k: usize, i: usize) {
        self.grid.clear(j, k);
        self.row[j] &= !(1 << i);
        self.col[k] &= !(1 << i);
        self.util[i] -= self.inst.value(i, j, k);
    }

    /// Upper bound on agent `i`'s final utility when cells `pos..` are open:
    /// at most one more cell per row (and per column) that lacks `i`.
    fn potential(&self, i: usize, pos: usize) -> u64 {
        let n = self.n;
        let open = |j: usize, k: usize| j * n + k >= pos && (self.row[j] | self.col[k]) >> i & 1 == 0;
        let by_rows: u64 = (0..n)
            .map(|j| (0..n).filter(|&k| open(j, k)).map(|k| self.inst.value(i, j, k)).max().unwrap_or(0))
            .sum();
        let by_cols: u64 = (0..n)
            .map(|k| (0..n).filter(|&j| open(j, k)).map(|j| self.inst.value(i, j, k)).max().unwrap_or(0))
            .sum();
        self.util[i] + by_rows.min(by_cols)
    }

    /// Visits every allocation of the class; `prune` may cut a subtree,
    /// `leaf` returns true to stop the walk.
    fn walk(
        &mut self,
        pos: usize,
        prune: &mut dyn FnMut(&Walker, usize) -> bool,
        leaf: &mut dyn FnMut(&Walker) -> bool,
    ) -> bool {
        let n = self.n;
        if pos == n * n {
            return leaf(self);
        }
        if prune(self, pos) {
            return false;
        }
        let (j, k) = (pos / n, pos % n);
        if self.grid.get(j, k).is_some() {
            // preplaced by symmetry breaking
            return self.walk(pos + 1, prune, leaf);
        }
        let used = self.row[j] | self.col[k];
        for i in 0..n {
            if used >> i & 1 == 1 || (self.mode == Mode::Partial && self.inst.value(i, j, k) == 0) {
                continue;
            }
            self.place(j, k, i);
            let stop = self.walk(pos + 1, prune, leaf);
            self.unplace(j, k, i);
            if stop {
                return true;
            }
        }
        if self.mode == Mode::Partial {
            return self.walk(pos + 1, prune, leaf);
        }
        false
    }
}

/// Options of [`exists_fair_complete_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct FairSearchOptions {
    /// Use the weak (positively valued goods) variants of EFX, EQX, PROPX.
    pub weak: bool,
    /// Prune with proportionality and equitability bounds.
    pub pruning: bool,
    pub limit: usize,
}

impl Default for FairSearchOptions {
    fn default() -> Self {
        FairSearchOptions {
            weak: false,
            pruning: true,
            limit: ORACLE_LIMIT,
        }
    }
}

/// A complete allocation satisfying `notion`, if any.
pub fn exists_fair_complete(inst: &Instance, notion: Fairness) -> Result<Option<Allocation>> {
    exists_fair_complete_with(inst, notion, &FairSearchOptions::default())
}

pub fn exists_fair_complete_with(
    inst: &Instance,
    notion: Fairness,
    opts: &FairSearchOptions,
) -> Result<Option<Allocation>> {
    let n = inst.n();
    if n > opts.limit {
        return Err(Error::OracleLimit { n, limit: opts.limit });
    }
    let mut w = Walker::new(inst, Mode::Complete);
    if inst.is_identical() {
        // agents are interchangeable, so name them by their round in item 1
        for k in 0..n {
            w.place(0, k, k);
        }
    }
    let totals: Vec<u128> = (0..n).map(|i| inst.agent_total(i) as u128).collect();
    let pruning = opts.pruning;
    let mut prune = |w: &Walker, pos: usize| -> bool {
        if !pruning {
            return false;
        }
        match notion {
            Fairness::Prop => (0..n).any(|i| (n as u128) * (w.potential(i, pos) as u128) < totals[i]),
            Fairness::Eq => {
                let hi = w.util.iter().copied().max().unwrap_or(0);
                (0..n).any(|i| w.potential(i, pos) < hi)
            }
            _ => false,
        }
    };
    let mut found = None;
    let mut err = None;
    let mut leaf = |w: &Walker| -> bool {
        match fairness_check(inst, &w.grid, notion, opts.weak) {
            Ok(true) => {
                found = Some(w.grid.clone());
                true
            }
            Ok(false) => false,
            Err(e) => {
                err = Some(e);
                true
            }
        }
    };
    w.walk(0, &mut prune, &mut leaf);
    match err {
        Some(e) => Err(e),
        None => Ok(found),
    }
}

/// An allocation of class `class` giving every agent at least `u` and some
/// agent strictly more, if one exists.
pub fn find_dominating(inst: &Instance, u: &[u64], class: Mode) -> Result<Option<Allocation>> {
    let n = inst.n();
    if u.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: u.len() });
    }
    if n > 6 {
        return Err(Error::OracleLimit { n, limit: 6 });
    }
    let mut w = Walker::new(inst, class);
    let mut prune = |w: &Walker, pos: usize| (0..n).any(|i| w.potential(i, pos) < u[i]);
    let mut found = None;
    let mut leaf = |w: &Walker| {
        let dominates = w.util.iter().zip(u).all(|(a, b)| a >= b) && w.util.iter().zip(u).any(|(a, b)| a > b);
        if dominates {
            found = Some(w.grid.clone());
        }
        dominates
    };
    w.walk(0, &mut prune, &mut leaf);
    Ok(found)
}

/// Whether every agent can get a positively valued cell in a partial
/// allocation, i.e. partial Emax >= 1, on a binary instance: an agent-side
/// perfect matching between agents and cells they value.
pub fn binary_partial_emax_positive(inst: &Instance) -> Result<bool> {
    if !inst.is_binary() {
        return Err(Error::InvalidInstance("valuations must be binary".into()));
    }
    let n = inst.n();
    let g = WeightedBipartiteGraph::from_fn(n, n * n, |i, c| inst.value(i, c / n, c % n) as i64);
    Ok(max_weight_matching(&g).weight == n as i64)
}

/// Exact welfare optimum; see [`solve_exact_enumeration`].
pub fn exact_umax_emax(inst: &Instance, objective: Objective, mode: Mode) -> Result<(Allocation, u64)> {
    solve_exact_enumeration(inst, objective, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{agent_utilities, examples};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// All Latin squares of order `n` by plain enumeration.
    fn latin_squares(n: usize) -> Vec<Allocation> {
        fn go(n: usize, pos: usize, a: &mut Allocation, out: &mut Vec<Allocation>) {
            if pos == n * n {
                out.push(a.clone());
                return;
            }
            for i in 0..n {
                a.assign(pos / n, pos % n, i);
                if a.is_feasible() {
                    go(n, pos + 1, a, out);
                }
                a.clear(pos / n, pos % n);
            }
        }
        let mut out = Vec::new();
        go(n, 0, &mut Allocation::empty(n), &mut out);
        out
    }

    #[test]
    fn latin_square_counts() {
        assert_eq!(latin_squares(2).len(), 2);
        assert_eq!(latin_squares(3).len(), 12);
    }

    #[test]
    fn worked_identical_instance_has_no_ef_eq_prop() {
        let inst = examples::identical_diagonal();
        for f in [Fairness::Ef, Fairness::Ef1, Fairness::Efx, Fairness::Prop, Fairness::Eq, Fairness::Eq1, Fairness::Eqx] {
            assert_eq!(exists_fair_complete(&inst, f).unwrap(), None, "{f}");
        }
    }

    #[test]
    fn zero_instance_is_fair_for_every_notion() {
        let inst = Instance::zeros(3).unwrap();
        for f in Fairness::ALL {
            let w = exists_fair_complete(&inst, f).unwrap().expect("witness");
            assert!(w.is_complete());
            assert!(fairness_check(&inst, &w, f, false).unwrap());
        }
    }

    #[test]
    fn agrees_with_naive_enumeration_and_pruning_is_sound() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for round in 0..40 {
            let n = 2 + round % 2;
            let inst = if round % 4 < 2 {
                let base: Vec<u64> = (0..n * n).map(|_| rng.gen_range(0..4)).collect();
                Instance::from_fn(n, |_, j, k| base[j * n + k]).unwrap()
            } else {
                Instance::from_fn(n, |_, _, _| rng.gen_range(0..4)).unwrap()
            };
            let squares = latin_squares(n);
            for f in Fairness::ALL {
                for weak in [false, true] {
                    let naive = squares.iter().any(|a| fairness_check(&inst, a, f, weak).unwrap());
                    let pruned = exists_fair_complete_with(&inst, f, &FairSearchOptions { weak, ..Default::default() }).unwrap();
                    let plain = exists_fair_complete_with(
                        &inst,
                        f,
                        &FairSearchOptions { weak, pruning: false, ..Default::default() },
                    )
                    .unwrap();
                    assert_eq!(pruned.is_some(), naive, "{f} weak={weak} {inst:?}");
                    assert_eq!(plain.is_some(), naive);
                    if let Some(w) = pruned {
                        assert!(fairness_check(&inst, &w, f, weak).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn domination_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let inst = Instance::from_fn(2, |_, _, _| rng.gen_range(0..3)).unwrap();
            let squares = latin_squares(2);
            for a in &squares {
                let u = agent_utilities(&inst, a).unwrap();
                let naive = squares.iter().any(|b| {
                    let ub = agent_utilities(&inst, b).unwrap();
                    ub.iter().zip(&u).all(|(x, y)| x >= y) && ub.iter().zip(&u).any(|(x, y)| x > y)
                });
                assert_eq!(find_dominating(&inst, &u, Mode::Complete).unwrap().is_some(), naive);
            }
        }
    }

    #[test]
    fn partial_domination_on_worked_instance() {
        let inst = examples::partial_beats_complete();
        let best = Allocation::from_triples(2, [(0, 0, 0), (1, 1, 1)]).unwrap();
        let u = agent_utilities(&inst, &best).unwrap();
        assert_eq!(find_dominating(&inst, &u, Mode::Partial).unwrap(), None);
        let half = Allocation::from_triples(2, [(0, 0, 0)]).unwrap();
        let u = agent_utilities(&inst, &half).unwrap();
        assert!(find_dominating(&inst, &u, Mode::Partial).unwrap().is_some());
    }

    #[test]
    fn binary_emax_examples() {
        assert!(binary_partial_emax_positive(&examples::partial_beats_complete()).unwrap());
        let inst = Instance::from_fn(3, |i, _, _| u64::from(i != 1)).unwrap();
        assert!(!binary_partial_emax_positive(&inst).unwrap());
        let inst = Instance::from_fn(2, |_, _, _| 2).unwrap();
        assert!(binary_partial_emax_positive(&inst).is_err());
    }

    #[test]
    fn limit_is_enforced() {
        let inst = Instance::zeros(6).unwrap();
        assert_eq!(
            exists_fair_complete(&inst, Fairness::Ef),
            Err(Error::OracleLimit { n: 6, limit: 5 })
        );
    }
}
