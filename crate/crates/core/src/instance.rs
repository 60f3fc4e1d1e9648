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

//! Instances, allocations, welfare and the fairness/efficiency predicates.
//!
//! Indices are 0-based in memory. The JSON formats use 1-based agents and
//! encode an empty cell as `0`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Valuation tensor `v[agent][item][round]` of an order-`n` problem.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instance {
    n: usize,
    values: Vec<u64>,
}

impl Instance {
    pub fn new(values: Vec<Vec<Vec<u64>>>) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::InvalidInstance("order must be at least 1".into()));
        }
        let mut flat = Vec::with_capacity(n * n * n);
        for (i, agent) in values.iter().enumerate() {
            if agent.len() != n {
                return Err(Error::InvalidInstance(format!(
                    "agent {} has {} items, expected {n}",
                    i + 1,
                    agent.len()
                )));
            }
            for (j, item) in agent.iter().enumerate() {
                if item.len() != n {
                    return Err(Error::InvalidInstance(format!(
                        "agent {} item {} has {} rounds, expected {n}",
                        i + 1,
                        j + 1,
                        item.len()
                    )));
                }
                flat.extend_from_slice(item);
            }
        }
        Ok(Instance { n, values: flat })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInstance("order must be at least 1".into()));
        }
        let mut values = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    values.push(f(i, j, k));
                }
            }
        }
        Ok(Instance { n, values })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::from_fn(n, |_, _, _| 0)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn value(&self, agent: usize, item: usize, round: usize) -> u64 {
        self.values[(agent * self.n + item) * self.n + round]
    }

    pub fn bundle_value<I>(&self, agent: usize, cells: I) -> u64
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        cells.into_iter().map(|(j, k)| self.value(agent, j, k)).sum()
    }

    /// `v_i(M x R)`.
    pub fn agent_total(&self, agent: usize) -> u64 {
        let n = self.n;
        self.values[agent * n * n..(agent + 1) * n * n].iter().sum()
    }

    /// Largest value any agent assigns to cell `(item, round)`.
    pub fn cell_max(&self, item: usize, round: usize) -> u64 {
        (0..self.n).map(|i| self.value(i, item, round)).max().unwrap_or(0)
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v <= 1)
    }

    pub fn is_identical(&self) -> bool {
        let block = self.n * self.n;
        let first = &self.values[..block];
        self.values.chunks(block).all(|c| c == first)
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<u64>>> {
        let n = self.n;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| self.value(i, j, k)).collect())
                    .collect()
            })
            .collect()
    }

    /// Instance seen through relabelled items and rounds: the new item `p` is
    /// the old item `item_perm[p]` (likewise for rounds).
    pub fn relabel(&self, item_perm: &[usize], round_perm: &[usize]) -> Instance {
        Instance::from_fn(self.n, |i, j, k| {
            self.value(i, item_perm[j], round_perm[k])
        })
        .expect("order is positive")
    }

    pub fn check_order(&self, a: &Allocation) -> Result<()> {
        if a.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: a.n(),
            });
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: InstanceJson = serde_json::from_str(s)?;
        let inst = Instance::new(raw.values)?;
        if inst.n != raw.n {
            return Err(Error::DimensionMismatch {
                expected: raw.n,
                found: inst.n,
            });
        }
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&InstanceJson {
            n: self.n,
            values: self.to_nested(),
        })
        .expect("instance serializes")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceJson {
    n: usize,
    values: Vec<Vec<Vec<u64>>>,
}

/// A set of `(item, round)` cells held by one agent. Cells are kept sorted and
/// form a matching between items and rounds.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Bundle(Vec<(usize, usize)>);

impl Bundle {
    pub fn empty() -> Self {
        Bundle(Vec::new())
    }

    pub fn new(mut cells: Vec<(usize, usize)>) -> Result<Self> {
        cells.sort_unstable();
        cells.dedup();
        for (a, &(j, k)) in cells.iter().enumerate() {
            if cells[a + 1..].iter().any(|&(j2, k2)| j2 == j || k2 == k) {
                return Err(Error::InvalidAllocation(format!(
                    "bundle repeats item {} or round {}",
                    j + 1,
                    k + 1
                )));
            }
        }
        Ok(Bundle(cells))
    }

    pub fn cells(&self) -> &[(usize, usize)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, item: usize, round: usize) -> bool {
        self.0.binary_search(&(item, round)).is_ok()
    }

    pub fn value(&self, inst: &Instance, agent: usize) -> u64 {
        inst.bundle_value(agent, self.0.iter().copied())
    }
}

/// A grid over `(item, round)` whose entries are agents or empty.
///
/// The type can hold infeasible grids so that [`Allocation::is_feasible`] is a
/// total predicate; solvers only ever emit feasible ones.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Allocation {
    n: usize,
    grid: Vec<Option<usize>>,
}

impl Allocation {
    pub fn empty(n: usize) -> Self {
        Allocation {
            n,
            grid: vec![None; n * n],
        }
    }

    pub fn from_grid(grid: Vec<Vec<Option<usize>>>) -> Result<Self> {
        let n = grid.len();
        if n == 0 {
            return Err(Error::InvalidAllocation("order must be at least 1".into()));
        }
        let mut flat = Vec::with_capacity(n * n);
        for (j, row) in grid.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidAllocation(format!(
                    "item row {} has {} rounds, expected {n}",
                    j + 1,
                    row.len()
                )));
            }
            for cell in row {
                if let Some(a) = cell {
                    if a >= n {
                        return Err(Error::InvalidAllocation(format!(
                            "agent {} out of range 1..={n}",
                            a + 1
                        )));
                    }
                }
                flat.push(cell);
            }
        }
        Ok(Allocation { n, grid: flat })
    }

    /// Builds an allocation from `(agent, item, round)` triples. Two triples on
    /// the same cell are rejected.
    pub fn from_triples<I>(n: usize, triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, usize)>,
    {
        let mut a = Allocation::empty(n);
        for (i, j, k) in triples {
            if i >= n || j >= n || k >= n {
                return Err(Error::InvalidAllocation(format!(
                    "triple ({}, {}, {}) out of range",
                    i + 1,
                    j + 1,
                    k + 1
                )));
            }
            if let Some(prev) = a.get(j, k) {
                return Err(Error::InvalidAllocation(format!(
                    "cell ({}, {}) given to agents {} and {}",
                    j + 1,
                    k + 1,
                    prev + 1,
                    i + 1
                )));
            }
            a.assign(j, k, i);
        }
        Ok(a)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, item: usize, round: usize) -> Option<usize> {
        self.grid[item * self.n + round]
    }

    #[inline]
    pub fn assign(&mut self, item: usize, round: usize, agent: usize) {
        self.grid[item * self.n + round] = Some(agent);
    }

    #[inline]
    pub fn clear(&mut self, item: usize, round: usize) {
        self.grid[item * self.n + round] = None;
    }

    /// Number of assigned cells.
    pub fn len(&self) -> usize {
        self.grid.iter().filter(|c| c.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.iter().all(|c| c.is_none())
    }

    pub fn is_complete(&self) -> bool {
        self.grid.iter().all(|c| c.is_some())
    }

    /// Conditions (i) and (ii): no agent twice in an item row or in a round
    /// column. Condition (iii) holds by representation.
    pub fn is_feasible(&self) -> bool {
        let n = self.n;
        let mut seen = vec![false; n];
        for j in 0..n {
            seen.iter_mut().for_each(|s| *s = false);
            for k in 0..n {
                if let Some(a) = self.get(j, k) {
                    if a >= n || std::mem::replace(&mut seen[a], true) {
                        return false;
                    }
                }
            }
        }
        for k in 0..n {
            seen.iter_mut().for_each(|s| *s = false);
            for j in 0..n {
                if let Some(a) = self.get(j, k) {
                    if std::mem::replace(&mut seen[a], true) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Iterates `(agent, item, round)` over assigned cells, row-major.
    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let n = self.n;
        self.grid
            .iter()
            .enumerate()
            .filter_map(move |(c, a)| a.map(|a| (a, c / n, c % n)))
    }

    pub fn bundle_cells(&self, agent: usize) -> Vec<(usize, usize)> {
        self.triples()
            .filter(|&(a, _, _)| a == agent)
            .map(|(_, j, k)| (j, k))
            .collect()
    }

    pub fn bundles(&self) -> Vec<Vec<(usize, usize)>> {
        let mut out = vec![Vec::new(); self.n];
        for (a, j, k) in self.triples() {
            out[a].push((j, k));
        }
        out
    }

    /// Items assigned in at least one round, ascending.
    pub fn occupied_items(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&j| (0..self.n).any(|k| self.get(j, k).is_some()))
            .collect()
    }

    /// Rounds with at least one assignment, ascending.
    pub fn occupied_rounds(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&k| (0..self.n).any(|j| self.get(j, k).is_some()))
            .collect()
    }

    pub fn is_superset_of(&self, other: &Allocation) -> bool {
        self.n == other.n
            && other
                .grid
                .iter()
                .zip(&self.grid)
                .all(|(o, s)| o.is_none() || o == s)
    }

    /// Allocation seen through relabelled items and rounds; see
    /// [`Instance::relabel`].
    pub fn relabel(&self, item_perm: &[usize], round_perm: &[usize]) -> Allocation {
        let n = self.n;
        let mut out = Allocation::empty(n);
        for j in 0..n {
            for k in 0..n {
                out.grid[j * n + k] = self.get(item_perm[j], round_perm[k]);
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_json_value()).expect("allocation serializes")
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let n = self.n;
        let grid: Vec<Vec<usize>> = (0..n)
            .map(|j| (0..n).map(|k| self.get(j, k).map_or(0, |a| a + 1)).collect())
            .collect();
        serde_json::json!({ "n": n, "grid": grid })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: AllocationJson = serde_json::from_str(s)?;
        let grid = raw
            .grid
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|a| a.checked_sub(1))
                    .collect::<Vec<_>>()
            })
            .collect();
        let a = Allocation::from_grid(grid)?;
        if a.n != raw.n {
            return Err(Error::DimensionMismatch {
                expected: raw.n,
                found: a.n,
            });
        }
        Ok(a)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AllocationJson {
    n: usize,
    grid: Vec<Vec<usize>>,
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.n {
            for k in 0..self.n {
                if k > 0 {
                    write!(f, " ")?;
                }
                match self.get(j, k) {
                    Some(a) => write!(f, "{}", a + 1)?,
                    None => write!(f, ".")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    Umax,
    Emax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Partial,
    Complete,
}

/// Comparison class for Pareto domination.
pub type AllocationClass = Mode;

impl FromStr for Objective {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "umax" => Ok(Objective::Umax),
            "emax" => Ok(Objective::Emax),
            _ => Err(Error::UnknownNotion(s.to_string())),
        }
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "partial" => Ok(Mode::Partial),
            "complete" => Ok(Mode::Complete),
            _ => Err(Error::UnknownNotion(s.to_string())),
        }
    }
}

/// `v_i(A_i)` for every agent.
pub fn agent_utilities(inst: &Instance, a: &Allocation) -> Result<Vec<u64>> {
    inst.check_order(a)?;
    let mut u = vec![0u64; inst.n()];
    for (i, j, k) in a.triples() {
        u[i] += inst.value(i, j, k);
    }
    Ok(u)
}

pub fn utilitarian_welfare(inst: &Instance, a: &Allocation) -> Result<u64> {
    Ok(agent_utilities(inst, a)?.into_iter().sum())
}

/// Minimum utility over agents; an agent with an empty bundle contributes 0.
pub fn egalitarian_welfare(inst: &Instance, a: &Allocation) -> Result<u64> {
    Ok(agent_utilities(inst, a)?.into_iter().min().unwrap_or(0))
}

pub fn welfare(inst: &Instance, a: &Allocation, objective: Objective) -> Result<u64> {
    match objective {
        Objective::Umax => utilitarian_welfare(inst, a),
        Objective::Emax => egalitarian_welfare(inst, a),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fairness {
    Ef,
    Ef1,
    Efx,
    Prop,
    Prop1,
    Propx,
    Eq,
    Eq1,
    Eqx,
}

impl Fairness {
    pub const ALL: [Fairness; 9] = [
        Fairness::Ef,
        Fairness::Ef1,
        Fairness::Efx,
        Fairness::Prop,
        Fairness::Prop1,
        Fairness::Propx,
        Fairness::Eq,
        Fairness::Eq1,
        Fairness::Eqx,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Fairness::Ef => "EF",
            Fairness::Ef1 => "EF1",
            Fairness::Efx => "EFX",
            Fairness::Prop => "PROP",
            Fairness::Prop1 => "PROP1",
            Fairness::Propx => "PROPX",
            Fairness::Eq => "EQ",
            Fairness::Eq1 => "EQ1",
            Fairness::Eqx => "EQX",
        }
    }
}

impl fmt::Display for Fairness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Fairness {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let up = s.to_ascii_uppercase();
        Fairness::ALL
            .into_iter()
            .find(|f| f.name() == up)
            .ok_or_else(|| Error::UnknownNotion(s.to_string()))
    }
}

/// Per-allocation quantities shared by all fairness predicates.
struct FairnessView<'a> {
    inst: &'a Instance,
    bundles: Vec<Vec<(usize, usize)>>,
    /// `cross[i][h] = v_i(A_h)`.
    cross: Vec<Vec<u64>>,
    owner: &'a Allocation,
}

impl<'a> FairnessView<'a> {
    fn new(inst: &'a Instance, a: &'a Allocation) -> Self {
        let n = inst.n();
        let bundles = a.bundles();
        let cross = (0..n)
            .map(|i| {
                bundles
                    .iter()
                    .map(|b| inst.bundle_value(i, b.iter().copied()))
                    .collect()
            })
            .collect();
        FairnessView {
            inst,
            bundles,
            cross,
            owner: a,
        }
    }

    fn own(&self, i: usize) -> i128 {
        self.cross[i][i] as i128
    }

    /// Extremum of `valuer`'s values over `h`'s bundle, optionally only over
    /// cells that `h` values positively.
    fn over_bundle(&self, valuer: usize, h: usize, positive_only: bool, max: bool) -> Option<u64> {
        let it = self.bundles[h]
            .iter()
            .filter(|&&(j, k)| !positive_only || self.inst.value(h, j, k) > 0)
            .map(|&(j, k)| self.inst.value(valuer, j, k));
        if max {
            it.max()
        } else {
            it.min()
        }
    }

    /// Extremum of `i`'s values over cells outside `A_i`.
    fn over_complement(&self, i: usize, positive_only: bool, max: bool) -> Option<u64> {
        let n = self.inst.n();
        let it = (0..n)
            .flat_map(|j| (0..n).map(move |k| (j, k)))
            .filter(|&(j, k)| self.owner.get(j, k) != Some(i))
            .map(|(j, k)| self.inst.value(i, j, k))
            .filter(|&v| !positive_only || v > 0);
        if max {
            it.max()
        } else {
            it.min()
        }
    }

    fn check(&self, notion: Fairness, weak: bool) -> bool {
        let n = self.inst.n();
        let pairs = || (0..n).flat_map(move |i| (0..n).map(move |h| (i, h)));
        let nn = n as i128;
        match notion {
            Fairness::Ef => pairs().all(|(i, h)| self.cross[i][i] >= self.cross[i][h]),
            Fairness::Ef1 => pairs().all(|(i, h)| match self.over_bundle(i, h, false, true) {
                None => true,
                Some(m) => self.own(i) >= self.cross[i][h] as i128 - m as i128,
            }),
            Fairness::Efx => pairs().all(|(i, h)| match self.over_bundle(i, h, weak, false) {
                None => true,
                Some(m) => self.own(i) >= self.cross[i][h] as i128 - m as i128,
            }),
            Fairness::Prop => {
                (0..n).all(|i| nn * self.own(i) >= self.inst.agent_total(i) as i128)
            }
            Fairness::Prop1 => (0..n).all(|i| match self.over_complement(i, false, true) {
                None => true,
                Some(m) => nn * self.own(i) >= self.inst.agent_total(i) as i128 - nn * m as i128,
            }),
            Fairness::Propx => (0..n).all(|i| match self.over_complement(i, weak, false) {
                None => true,
                Some(m) => nn * self.own(i) >= self.inst.agent_total(i) as i128 - nn * m as i128,
            }),
            Fairness::Eq => pairs().all(|(i, h)| self.cross[i][i] == self.cross[h][h]),
            Fairness::Eq1 => pairs().all(|(i, h)| match self.over_bundle(h, h, false, true) {
                None => true,
                Some(m) => self.own(i) >= self.own(h) - m as i128,
            }),
            Fairness::Eqx => pairs().all(|(i, h)| match self.over_bundle(h, h, weak, false) {
                None => true,
                Some(m) => self.own(i) >= self.own(h) - m as i128,
            }),
        }
    }
}

/// Evaluates a fairness notion on an allocation.
///
/// EFX, EQX and PROPX use the "any good" variant; with `weak` set they only
/// range over positively valued goods. An empty candidate set makes the
/// pairwise condition hold vacuously.
pub fn fairness_check(inst: &Instance, a: &Allocation, notion: Fairness, weak: bool) -> Result<bool> {
    inst.check_order(a)?;
    if !a.is_feasible() {
        return Err(Error::Infeasible);
    }
    Ok(FairnessView::new(inst, a).check(notion, weak))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Efficiency {
    NonWasteful,
    ParetoOptimal,
}

impl FromStr for Efficiency {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "non_wasteful" | "nonwasteful" => Ok(Efficiency::NonWasteful),
            "pareto_optimal" | "pareto" | "po" => Ok(Efficiency::ParetoOptimal),
            _ => Err(Error::UnknownNotion(s.to_string())),
        }
    }
}

/// Every cell valued positively by someone is held by an agent who values it
/// positively.
pub fn is_non_wasteful(inst: &Instance, a: &Allocation) -> Result<bool> {
    inst.check_order(a)?;
    let n = inst.n();
    for j in 0..n {
        for k in 0..n {
            if inst.cell_max(j, k) > 0 {
                match a.get(j, k) {
                    Some(i) if inst.value(i, j, k) > 0 => {}
                    _ => return Ok(false),
                }
            }
        }
    }
    Ok(true)
}

/// Default order limits for the Pareto domination search.
pub const PARETO_LIMIT_PARTIAL: usize = 3;
pub const PARETO_LIMIT_COMPLETE: usize = 5;

/// No allocation of class `class` weakly improves every agent and strictly
/// improves one. Exhaustive, so `n` is capped by `limit`.
pub fn is_pareto_optimal(inst: &Instance, a: &Allocation, class: AllocationClass, limit: usize) -> Result<bool> {
    inst.check_order(a)?;
    if !a.is_feasible() {
        return Err(Error::Infeasible);
    }
    if inst.n() > limit {
        return Err(Error::OracleLimit { n: inst.n(), limit });
    }
    let u = agent_utilities(inst, a)?;
    Ok(crate::oracle::find_dominating(inst, &u, class)?.is_none())
}

/// Efficiency predicate; Pareto optimality compares within the allocation's
/// own class (complete against complete, otherwise partial against partial).
pub fn efficiency_check(inst: &Instance, a: &Allocation, notion: Efficiency) -> Result<bool> {
    inst.check_order(a)?;
    if !a.is_feasible() {
        return Err(Error::Infeasible);
    }
    match notion {
        Efficiency::NonWasteful => is_non_wasteful(inst, a),
        Efficiency::ParetoOptimal => {
            let (class, limit) = if a.is_complete() {
                (Mode::Complete, PARETO_LIMIT_COMPLETE)
            } else {
                (Mode::Partial, PARETO_LIMIT_PARTIAL)
            };
            is_pareto_optimal(inst, a, class, limit)
        }
    }
}

/// Small worked instances.
pub mod examples {
    use super::Instance;

    /// Order 2; partial optimum beats every complete allocation.
    /// `v[1][1][1] = v[2][2][2] = 1`, all else 0 (1-based).
    pub fn partial_beats_complete() -> Instance {
        Instance::from_fn(2, |i, j, k| u64::from(i == j && j == k)).unwrap()
    }

    /// Order 2, identical valuations with ones on the diagonal cells.
    pub fn identical_diagonal() -> Instance {
        Instance::from_fn(2, |_, j, k| u64::from(j == k)).unwrap()
    }
}
