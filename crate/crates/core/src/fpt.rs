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

//! Exact solvers: branch-and-bound over all allocations (parameter `n`) and
//! colour coding in the optimum value (parameter `alpha`).

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::extension::extend_allocation;
use crate::instance::{utilitarian_welfare, Allocation, Instance, Mode, Objective};
use crate::matching::{max_weight_matching, WeightedBipartiteGraph};

/// Order limits for exhaustive search, plus an optional wall-clock deadline.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactLimits {
    pub partial: usize,
    pub complete: usize,
    pub deadline: Option<Instant>,
}

impl Default for ExactLimits {
    fn default() -> Self {
        ExactLimits {
            partial: 4,
            complete: 5,
            deadline: None,
        }
    }
}

impl ExactLimits {
    pub fn limit(&self, mode: Mode) -> usize {
        match mode {
            Mode::Partial => self.partial,
            Mode::Complete => self.complete,
        }
    }
}

pub fn solve_exact_enumeration(inst: &Instance, objective: Objective, mode: Mode) -> Result<(Allocation, u64)> {
    solve_exact_with(inst, objective, mode, &ExactLimits::default())
}

/// Optimum allocation by depth-first search over cells in row-major order.
///
/// Partial mode only branches on positively valued assignments; leaving a
/// zero-valued cell empty never lowers either welfare.
pub fn solve_exact_with(
    inst: &Instance,
    objective: Objective,
    mode: Mode,
    limits: &ExactLimits,
) -> Result<(Allocation, u64)> {
    let n = inst.n();
    let limit = limits.limit(mode);
    if n > limit {
        return Err(Error::OracleLimit { n, limit });
    }
    let mut s = Search::new(inst, objective, mode, limits.deadline);
    // incumbent: the empty allocation, or the cyclic square
    let init = match mode {
        Mode::Partial => Allocation::empty(n),
        Mode::Complete => {
            Allocation::from_triples(n, (0..n).flat_map(|j| (0..n).map(move |k| ((j + k) % n, j, k))))?
        }
    };
    s.best_value = objective_value(inst, &init, objective)?;
    s.best = init;
    s.go(0)?;
    Ok((s.best, s.best_value))
}

fn objective_value(inst: &Instance, a: &Allocation, objective: Objective) -> Result<u64> {
    crate::instance::welfare(inst, a, objective)
}

struct Search<'a> {
    inst: &'a Instance,
    n: usize,
    objective: Objective,
    mode: Mode,
    deadline: Option<Instant>,
    grid: Allocation,
    row: Vec<u64>,
    col: Vec<u64>,
    util: Vec<u64>,
    best: Allocation,
    best_value: u64,
    nodes: u64,
}

impl<'a> Search<'a> {
    fn new(inst: &'a Instance, objective: Objective, mode: Mode, deadline: Option<Instant>) -> Self {
        let n = inst.n();
        Search {
            inst,
            n,
            objective,
            mode,
            deadline,
            grid: Allocation::empty(n),
            row: vec![0; n],
            col: vec![0; n],
            util: vec![0; n],
            best: Allocation::empty(n),
            best_value: 0,
            nodes: 0,
        }
    }

    fn current(&self) -> u64 {
        match self.objective {
            Objective::Umax => self.util.iter().sum(),
            Objective::Emax => self.util.iter().copied().min().unwrap_or(0),
        }
    }

    /// Upper bound on any completion of the cells from `pos` onwards.
    fn bound(&self, pos: usize) -> u64 {
        let n = self.n;
        let inst = self.inst;
        let free = |j: usize, k: usize| j * n + k >= pos;
        let avail = |i: usize, j: usize, k: usize| (self.row[j] | self.col[k]) >> i & 1 == 0;
        // best value agent i can still get from row j (resp. column k)
        let row_best = |i: usize, j: usize| {
            (0..n)
                .filter(|&k| free(j, k) && avail(i, j, k))
                .map(|k| inst.value(i, j, k))
                .max()
                .unwrap_or(0)
        };
        let col_best = |i: usize, k: usize| {
            (0..n)
                .filter(|&j| free(j, k) && avail(i, j, k))
                .map(|j| inst.value(i, j, k))
                .max()
                .unwrap_or(0)
        };
        match self.objective {
            Objective::Umax => {
                let cell = |j: usize, k: usize| {
                    (0..n)
                        .filter(|&i| avail(i, j, k))
                        .map(|i| inst.value(i, j, k))
                        .max()
                        .unwrap_or(0)
                };
                let mut by_rows = 0;
                let mut by_cols = 0;
                for l in 0..n {
                    let cells_r: u64 = (0..n).filter(|&k| free(l, k)).map(|k| cell(l, k)).sum();
                    let agents_r: u64 = (0..n).filter(|&i| self.row[l] >> i & 1 == 0).map(|i| row_best(i, l)).sum();
                    by_rows += cells_r.min(agents_r);
                    let cells_c: u64 = (0..n).filter(|&j| free(j, l)).map(|j| cell(j, l)).sum();
                    let agents_c: u64 = (0..n).filter(|&i| self.col[l] >> i & 1 == 0).map(|i| col_best(i, l)).sum();
                    by_cols += cells_c.min(agents_c);
                }
                self.current() + by_rows.min(by_cols)
            }
            Objective::Emax => (0..n)
                .map(|i| {
                    let r: u64 = (0..n).filter(|&j| self.row[j] >> i & 1 == 0).map(|j| row_best(i, j)).sum();
                    let c: u64 = (0..n).filter(|&k| self.col[k] >> i & 1 == 0).map(|k| col_best(i, k)).sum();
                    self.util[i] + r.min(c)
                })
                .min()
                .unwrap_or(0),
        }
    }

    fn go(&mut self, pos: usize) -> Result<()> {
        self.nodes += 1;
        if self.nodes.is_multiple_of(4096) {
            if let Some(d) = self.deadline {
                if Instant::now() > d {
                    return Err(Error::TimeLimit);
                }
            }
        }
        let n = self.n;
        if pos == n * n {
            let v = self.current();
            if v > self.best_value {
                self.best_value = v;
                self.best = self.grid.clone();
            }
            return Ok(());
        }
        if self.bound(pos) <= self.best_value {
            return Ok(());
        }
        let (j, k) = (pos / n, pos % n);
        let used = self.row[j] | self.col[k];
        let mut cand: Vec<usize> = (0..n)
            .filter(|&i| used >> i & 1 == 0)
            .filter(|&i| self.mode == Mode::Complete || self.inst.value(i, j, k) > 0)
            .collect();
        cand.sort_by_key(|&i| (std::cmp::Reverse(self.inst.value(i, j, k)), i));
        for i in cand {
            let v = self.inst.value(i, j, k);
            self.grid.assign(j, k, i);
            self.row[j] |= 1 << i;
            self.col[k] |= 1 << i;
            self.util[i] += v;
            let r = self.go(pos + 1);
            self.util[i] -= v;
            self.row[j] &= !(1 << i);
            self.col[k] &= !(1 << i);
            self.grid.clear(j, k);
            r?;
        }
        if self.mode == Mode::Partial {
            self.go(pos + 1)?;
        }
        Ok(())
    }
}

/// Parameters of the colour-coding solver.
#[derive(Debug, Clone, PartialEq)]
pub struct FptOptions {
    /// Overall failure probability of the random colourings.
    pub delta: f64,
    pub seed: u64,
    /// Largest `s^p` for which all colourings of the `p` positive cells are
    /// enumerated instead of sampled (only for `s <= 4`).
    pub budget: u64,
    pub limits: ExactLimits,
}

impl Default for FptOptions {
    fn default() -> Self {
        FptOptions {
            delta: 0.05,
            seed: 0,
            budget: 1 << 16,
            limits: ExactLimits::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FptOutcome {
    pub allocation: Allocation,
    pub value: u64,
    /// Best value found by colour coding before returning or falling back.
    pub colour_coding_value: u64,
    /// Whether the search switched to exhaustive enumeration.
    pub enumerated: bool,
    /// Last value of `s` examined.
    pub s: usize,
    /// Whether every colouring examined was enumerated (no sampling).
    pub deterministic: bool,
}

pub fn solve_fpt_value(inst: &Instance, mode: Mode, delta: f64) -> Result<(Allocation, u64)> {
    let out = solve_fpt_with(
        inst,
        mode,
        &FptOptions {
            delta,
            ..FptOptions::default()
        },
    )?;
    Ok((out.allocation, out.value))
}

/// Colour coding over `s = 1, 2, ...` and `t = 1..=s`: cells get colours
/// `chi` in `[s]`, colours are merged into `t` classes by every `psi`, each
/// agent takes its best matching inside a class, and agents are matched to
/// classes. Stops once `s` exceeds the best value, or enumerates exhaustively
/// once the best value reaches `n / 2`.
pub fn solve_fpt_with(inst: &Instance, mode: Mode, opts: &FptOptions) -> Result<FptOutcome> {
    if !(opts.delta > 0.0 && opts.delta < 1.0) {
        return Err(Error::InvalidInstance(format!("delta must lie in (0, 1), got {}", opts.delta)));
    }
    let n = inst.n();
    let positive: Vec<(usize, usize)> = (0..n)
        .flat_map(|j| (0..n).map(move |k| (j, k)))
        .filter(|&(j, k)| inst.cell_max(j, k) > 0)
        .collect();
    let s_max = n.div_ceil(2) + 1;
    let delta_pair = opts.delta / (s_max * (s_max + 1) / 2) as f64;

    let mut best = Allocation::empty(n);
    let mut u = 0u64;
    let mut deterministic = true;
    let mut s = 1;
    loop {
        for t in 1..=s {
            let exhaustive = s <= 4 && (s as f64).powi(positive.len() as i32) <= opts.budget as f64;
            let trials = if exhaustive {
                (s as u64).pow(positive.len() as u32)
            } else {
                deterministic = false;
                ((s as f64).exp() * (1.0 / delta_pair).ln()).ceil() as u64
            };
            let stream = ((s as u64) << 32) | t as u64;
            let found = (0..trials)
                .into_par_iter()
                .map(|trial| {
                    let chi = if exhaustive {
                        digits(trial, s, positive.len())
                    } else {
                        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                        rng.set_stream(stream);
                        rng.set_word_pos(trial as u128 * 16 * positive.len().max(1) as u128);
                        (0..positive.len()).map(|_| rng.gen_range(0..s)).collect()
                    };
                    best_for_colouring(inst, &positive, &chi, s, t).map(|(v, a)| (v, trial, a))
                })
                .reduce_with(|x, y| match (x, y) {
                    (Some(x), Some(y)) => Some(if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x }),
                    (x, None) => x,
                    (None, y) => y,
                })
                .flatten();
            if let Some((v, _, a)) = found {
                if v > u {
                    u = v;
                    best = a;
                }
            }
        }
        if 2 * u >= n as u64 {
            let (allocation, value) = solve_exact_with(inst, Objective::Umax, mode, &opts.limits)?;
            return Ok(FptOutcome {
                allocation,
                value,
                colour_coding_value: u,
                enumerated: true,
                s,
                deterministic,
            });
        }
        if s as u64 > u {
            let allocation = match mode {
                Mode::Partial => best,
                Mode::Complete => extend_allocation(&best)?,
            };
            return Ok(FptOutcome {
                value: utilitarian_welfare(inst, &allocation)?,
                allocation,
                colour_coding_value: u,
                enumerated: false,
                s,
                deterministic,
            });
        }
        s += 1;
    }
}

/// `x` written in base `s` with `len` digits, least significant first.
fn digits(mut x: u64, s: usize, len: usize) -> Vec<usize> {
    (0..len)
        .map(|_| {
            let d = (x % s as u64) as usize;
            x /= s as u64;
            d
        })
        .collect()
}

/// Best allocation over all `psi: [s] -> [t]` for one colouring `chi` of
/// the positive cells.
fn best_for_colouring(
    inst: &Instance,
    positive: &[(usize, usize)],
    chi: &[usize],
    s: usize,
    t: usize,
) -> Option<(u64, Allocation)> {
    let n = inst.n();
    let mut best: Option<(u64, Allocation)> = None;
    let mut class = vec![usize::MAX; n * n];
    for code in 0..(t as u64).pow(s as u32) {
        let psi = digits(code, t, s);
        for (c, &(j, k)) in positive.iter().enumerate() {
            class[j * n + k] = psi[chi[c]];
        }
        // q[i][l]: agent i's best matching inside class l
        let q: Vec<Vec<(i64, Vec<(usize, usize)>)>> = (0..n)
            .map(|i| {
                (0..t)
                    .map(|l| {
                        let g = WeightedBipartiteGraph::from_fn(n, n, |j, k| {
                            if class[j * n + k] == l {
                                inst.value(i, j, k) as i64
                            } else {
                                0
                            }
                        });
                        let m = max_weight_matching(&g);
                        (m.weight, m.pairs)
                    })
                    .collect()
            })
            .collect();
        let mu = max_weight_matching(&WeightedBipartiteGraph::from_fn(n, t, |i, l| q[i][l].0));
        let v = mu.weight as u64;
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            let mut a = Allocation::empty(n);
            for &(i, l) in &mu.pairs {
                for &(j, k) in &q[i][l].1 {
                    if inst.value(i, j, k) > 0 {
                        a.assign(j, k, i);
                    }
                }
            }
            debug_assert!(a.is_feasible());
            best = Some((v, a));
        }
    }
    best
}
