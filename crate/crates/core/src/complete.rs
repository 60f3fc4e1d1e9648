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

//! Approximation for the partial and complete utilitarian problems: solve
//! the configuration LP, round it, and for complete allocations keep the
//! best of four blocks of the rounded grid before extending it.

use rayon::prelude::*;

use crate::config_lp::{solve_configuration_lp_with, LpOptions};
use crate::error::{Error, Result};
use crate::extension::extend_allocation;
use crate::instance::{utilitarian_welfare, Allocation, Instance};
use crate::rounding::{round_derandomized, round_randomized, RoundingOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundingMode {
    Randomized(u64),
    Derandomized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialOutcome {
    pub allocation: Allocation,
    pub welfare: u64,
    pub lp_bound: f64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompleteOutcome {
    pub allocation: Allocation,
    pub welfare: u64,
    pub lp_bound: f64,
    /// The rounded partial allocation the blocks were cut from.
    pub partial: Allocation,
    pub partial_welfare: u64,
    /// Winning block, 1..=4; `None` when the rounded allocation was complete.
    pub block_chosen: Option<usize>,
    /// Welfare of the winning block before extension.
    pub block_welfare: u64,
}

pub fn solve_partial_approx(inst: &Instance, mode: RoundingMode) -> Result<PartialOutcome> {
    solve_partial_approx_with(inst, mode, &LpOptions::default())
}

pub fn solve_partial_approx_with(inst: &Instance, mode: RoundingMode, opts: &LpOptions) -> Result<PartialOutcome> {
    let report = solve_configuration_lp_with(inst, opts)?;
    let RoundingOutcome { allocation, welfare, seed } = match mode {
        RoundingMode::Randomized(seed) => round_randomized(inst, &report.solution, seed)?,
        RoundingMode::Derandomized => round_derandomized(inst, &report.solution)?,
    };
    Ok(PartialOutcome {
        allocation,
        welfare,
        lp_bound: report.solution.objective,
        seed,
    })
}

pub fn solve_complete_approx(inst: &Instance, mode: RoundingMode) -> Result<CompleteOutcome> {
    solve_complete_approx_with(inst, mode, &LpOptions::default())
}

pub fn solve_complete_approx_with(inst: &Instance, mode: RoundingMode, opts: &LpOptions) -> Result<CompleteOutcome> {
    let p = solve_partial_approx_with(inst, mode, opts)?;
    complete_from_partial(inst, p.allocation, p.lp_bound)
}

/// Blocking and extension applied to an already rounded allocation.
pub fn complete_from_partial(inst: &Instance, partial: Allocation, lp_bound: f64) -> Result<CompleteOutcome> {
    inst.check_order(&partial)?;
    let partial_welfare = utilitarian_welfare(inst, &partial)?;
    if partial.is_complete() {
        return Ok(CompleteOutcome {
            allocation: partial.clone(),
            welfare: partial_welfare,
            lp_bound,
            partial,
            partial_welfare,
            block_chosen: None,
            block_welfare: partial_welfare,
        });
    }
    let blocks = split_blocks(&partial)?;
    let welfares: Vec<u64> = blocks
        .par_iter()
        .map(|b| utilitarian_welfare(inst, b))
        .collect::<Result<_>>()?;
    // first block wins ties
    let best = (0..4).fold(0, |b, l| if welfares[l] > welfares[b] { l } else { b });
    let allocation = extend_allocation(&blocks[best])?;
    Ok(CompleteOutcome {
        welfare: utilitarian_welfare(inst, &allocation)?,
        allocation,
        lp_bound,
        partial,
        partial_welfare,
        block_chosen: Some(best + 1),
        block_welfare: welfares[best],
    })
}

/// The four blocks of a non-complete allocation, in original coordinates.
///
/// For even `n` these are the quadrants. For odd `n` the lexicographically
/// smallest empty cell is swapped to the centre, the grid is cut into four
/// `(n±1)/2` blocks around it, and the swap is undone on each block.
pub fn split_blocks(a: &Allocation) -> Result<[Allocation; 4]> {
    let n = a.n();
    let (perm_items, perm_rounds, c) = if n.is_multiple_of(2) {
        ((0..n).collect::<Vec<_>>(), (0..n).collect::<Vec<_>>(), n / 2)
    } else {
        let c = (n - 1) / 2;
        let (j0, k0) = (0..n)
            .flat_map(|j| (0..n).map(move |k| (j, k)))
            .find(|&(j, k)| a.get(j, k).is_none())
            .ok_or_else(|| Error::InvalidAllocation("cannot split a complete allocation of odd order".into()))?;
        let mut pi: Vec<usize> = (0..n).collect();
        let mut pr: Vec<usize> = (0..n).collect();
        pi.swap(c, j0);
        pr.swap(c, k0);
        (pi, pr, c)
    };
    let odd = n % 2 == 1;
    let inside = |l: usize, j: usize, k: usize| -> bool {
        if !odd {
            return match l {
                0 => j < c && k < c,
                1 => j < c && k >= c,
                2 => j >= c && k < c,
                _ => j >= c && k >= c,
            };
        }
        match l {
            0 => j < c && k <= c,
            1 => j <= c && k > c,
            2 => j >= c && k < c,
            _ => j > c && k >= c,
        }
    };
    let relabelled = a.relabel(&perm_items, &perm_rounds);
    Ok(std::array::from_fn(|l| {
        let mut b = Allocation::empty(n);
        for (i, j, k) in relabelled.triples() {
            if inside(l, j, k) {
                // the swaps are involutions, so the same permutation maps back
                b.assign(perm_items[j], perm_rounds[k], i);
            }
        }
        debug_assert!(b.occupied_items().len() + b.occupied_rounds().len() <= n);
        b
    }))
}

/// Guards against a block that could not be extended.
pub fn check_block_shape(b: &Allocation) -> Result<()> {
    let (items, rounds) = (b.occupied_items(), b.occupied_rounds());
    if items.len() + rounds.len() > b.n() {
        return Err(Error::ExtensionPrecondition { n: b.n(), items, rounds });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::examples;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn worked_instance_gives_complete_welfare_one() {
        let out = solve_complete_approx(&examples::partial_beats_complete(), RoundingMode::Derandomized).unwrap();
        assert!(out.allocation.is_complete());
        assert_eq!(out.welfare, 1);
        assert_eq!(out.partial_welfare, 2);
    }

    #[test]
    fn complete_rounding_is_returned_unchanged() {
        let inst = Instance::from_fn(3, |i, j, k| if (j + k) % 3 == i { 5 } else { 0 }).unwrap();
        let out = solve_complete_approx(&inst, RoundingMode::Derandomized).unwrap();
        assert_eq!(out.block_chosen, None);
        assert_eq!(out.allocation, out.partial);
        assert_eq!(out.welfare, 45);
    }

    #[test]
    fn blocks_partition_all_but_the_pivot() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 2..=7 {
            for _ in 0..20 {
                // random partial square from a cyclic one with holes
                let mut a = Allocation::empty(n);
                for j in 0..n {
                    for k in 0..n {
                        if rng.gen_bool(0.7) {
                            a.assign(j, k, (j + 2 * k) % n);
                        }
                    }
                }
                if a.is_complete() || !a.is_feasible() {
                    continue;
                }
                let blocks = split_blocks(&a).unwrap();
                let mut count = 0;
                for b in &blocks {
                    assert!(a.is_superset_of(b));
                    check_block_shape(b).unwrap();
                    count += b.len();
                }
                assert_eq!(count, a.len());
            }
        }
    }

    #[test]
    fn odd_pivot_uses_first_empty_cell() {
        let mut a = Allocation::empty(3);
        a.assign(0, 0, 0);
        a.assign(0, 2, 1);
        a.assign(1, 1, 2);
        // first empty cell is (0,1); it becomes the leftover
        let blocks = split_blocks(&a).unwrap();
        assert_eq!(blocks.iter().map(|b| b.len()).sum::<usize>(), 3);
    }

    #[test]
    fn quarter_guarantee_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..30 {
            let n = rng.gen_range(3..=5);
            let inst = Instance::from_fn(n, |_, _, _| rng.gen_range(0..10)).unwrap();
            let out = solve_complete_approx(&inst, RoundingMode::Derandomized).unwrap();
            assert!(out.allocation.is_complete() && out.allocation.is_feasible());
            assert!(4 * out.block_welfare >= out.partial_welfare);
            assert!(out.welfare >= out.block_welfare);
        }
    }
}
