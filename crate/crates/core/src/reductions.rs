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

//! Instance generators for the hardness constructions, with the witness
//! maps that carry certificates of the source problems to allocations.
//!
//! Literals, variables, clauses, items and agents are 1-based in the public
//! parameter types (as in their JSON forms) and 0-based in allocations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::extend_allocation;
use crate::instance::{Allocation, Instance, Mode};

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidReduction(msg.into())
}

/// Binary instance whose all-ones complete allocations are exactly the
/// completions of `p`: agent `i` values a cell unless `p` gives it to
/// another agent.
pub fn from_partial_latin_square(p: &Allocation) -> Result<Instance> {
    if !p.is_feasible() {
        return Err(Error::Infeasible);
    }
    Instance::from_fn(p.n(), |i, j, k| match p.get(j, k) {
        Some(h) if h != i => 0,
        _ => 1,
    })
}

/// 3-CNF formula in which every literal occurs exactly twice, in two
/// different clauses. Literal `+k` is `x_k`, `-k` its negation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Formula3SAT {
    pub num_vars: usize,
    pub clauses: Vec<[i64; 3]>,
}

/// Where the two occurrences of a literal sit: `(l, p)` clause indices,
/// 0-based, `l < p`.
#[derive(Debug, Clone, Copy)]
struct Occurrences {
    pos: (usize, usize),
    neg: (usize, usize),
}

impl Formula3SAT {
    pub fn new(num_vars: usize, clauses: Vec<[i64; 3]>) -> Result<Self> {
        let f = Formula3SAT { num_vars, clauses };
        f.occurrences()?;
        Ok(f)
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    /// Order of the partial instance, `mu + 5 lambda`.
    pub fn order(&self) -> usize {
        self.clauses.len() + 5 * self.num_vars
    }

    fn occurrences(&self) -> Result<Vec<Occurrences>> {
        let lam = self.num_vars;
        if lam == 0 {
            return Err(invalid("formula has no variables"));
        }
        let mut seen: Vec<[Vec<usize>; 2]> = vec![[Vec::new(), Vec::new()]; lam];
        for (p, clause) in self.clauses.iter().enumerate() {
            for &lit in clause {
                let k = lit.unsigned_abs() as usize;
                if lit == 0 || k > lam {
                    return Err(invalid(format!("literal {lit} out of range")));
                }
                seen[k - 1][usize::from(lit < 0)].push(p);
            }
        }
        seen.iter()
            .enumerate()
            .map(|(k, [pos, neg])| {
                let pair = |v: &Vec<usize>, sign: &str| match v.as_slice() {
                    &[l, p] if l < p => Ok((l, p)),
                    _ => Err(invalid(format!(
                        "literal {sign}x{} must occur in exactly two different clauses",
                        k + 1
                    ))),
                };
                Ok(Occurrences {
                    pos: pair(pos, "")?,
                    neg: pair(neg, "~")?,
                })
            })
            .collect()
    }

    pub fn is_satisfied_by(&self, truth: &[bool]) -> bool {
        truth.len() == self.num_vars
            && self.clauses.iter().all(|c| c.iter().any(|&l| literal_true(l, truth)))
    }
}

fn literal_true(lit: i64, truth: &[bool]) -> bool {
    truth[lit.unsigned_abs() as usize - 1] == (lit > 0)
}

/// Agent numbering of the 3SAT construction (0-based): variable agents,
/// then four transfer agents per variable, then clause agents, then (in the
/// complete variant) dummies.
pub mod sat_agents {
    /// `x_k`, `k` 1-based.
    pub fn variable(k: usize) -> usize {
        k - 1
    }

    /// `t_k^v`, `k` and `v` 1-based.
    pub fn transfer(num_vars: usize, k: usize, v: usize) -> usize {
        num_vars + 4 * (k - 1) + (v - 1)
    }

    /// `C_p`, `p` 1-based.
    pub fn clause(num_vars: usize, p: usize) -> usize {
        5 * num_vars + (p - 1)
    }
}

/// Positive cells of every agent of the partial construction, 0-based.
fn sat_cells(f: &Formula3SAT) -> Result<Vec<Vec<(usize, usize)>>> {
    use sat_agents::*;
    let occ = f.occurrences()?;
    let lam = f.num_vars;
    let mut cells = vec![Vec::new(); f.order()];
    // 1-based cell helper
    let mut add = |a: usize, j: usize, k: usize| cells[a].push((j - 1, k - 1));
    for k in 1..=lam {
        let (r1, r2) = (2 * k - 1, 2 * k);
        for (j, c) in [(r1, r1), (r1, r2), (r2, r1), (r2, r2)] {
            add(variable(k), j, c);
        }
        add(transfer(lam, k, 1), r1, r1);
        add(transfer(lam, k, 2), r1, r2);
        add(transfer(lam, k, 3), r2, r2);
        add(transfer(lam, k, 4), r2, r1);
        let o = occ[k - 1];
        add(transfer(lam, k, 1), 2 * lam + o.pos.0 + 1, r1);
        add(transfer(lam, k, 3), 2 * lam + o.pos.1 + 1, r2);
        add(transfer(lam, k, 2), 2 * lam + o.neg.0 + 1, r2);
        add(transfer(lam, k, 4), 2 * lam + o.neg.1 + 1, r1);
        if k > 1 {
            for v in 1..=4 {
                add(transfer(lam, k, v), 1, 4 * k - 4 + v);
            }
        } else {
            add(transfer(lam, 1, 1), 2, 3);
            add(transfer(lam, 1, 2), 2, 4);
            add(transfer(lam, 1, 3), 1, 3);
            add(transfer(lam, 1, 4), 1, 4);
        }
    }
    for p in 1..=f.num_clauses() {
        for &lit in &f.clauses[p - 1] {
            let (j, c) = bottom_cell(f, &occ, p - 1, lit);
            add(clause(lam, p), j + 1, c + 1);
        }
        add(clause(lam, p), 1, 4 * lam + p);
    }
    for c in &mut cells {
        c.sort_unstable();
        c.dedup();
    }
    Ok(cells)
}

/// The bottom cell (0-based) of literal `lit`'s transfer agent in clause
/// `p` (0-based), together with that agent.
fn bottom(f: &Formula3SAT, occ: &[Occurrences], p: usize, lit: i64) -> (usize, (usize, usize)) {
    let lam = f.num_vars;
    let k = lit.unsigned_abs() as usize;
    let o = occ[k - 1];
    let row = 2 * lam + p;
    let (odd, even) = (2 * k - 2, 2 * k - 1);
    let (v, col) = if lit > 0 {
        if p == o.pos.0 { (1, odd) } else { (3, even) }
    } else if p == o.neg.0 {
        (2, even)
    } else {
        (4, odd)
    };
    (sat_agents::transfer(lam, k, v), (row, col))
}

fn bottom_cell(f: &Formula3SAT, occ: &[Occurrences], p: usize, lit: i64) -> (usize, usize) {
    bottom(f, occ, p, lit).1
}

/// Binary instance of the 3SAT construction. The complete variant doubles
/// the order with dummy agents valuing the first two items in every round.
pub fn from_3sat(f: &Formula3SAT, variant: Mode) -> Result<Instance> {
    let cells = sat_cells(f)?;
    let n = f.order();
    let size = match variant {
        Mode::Partial => n,
        Mode::Complete => 2 * n,
    };
    let mut values = vec![vec![vec![0u64; size]; size]; size];
    for (a, cs) in cells.iter().enumerate() {
        for &(j, k) in cs {
            values[a][j][k] = 1;
        }
    }
    for dummy in values.iter_mut().skip(n) {
        for row in dummy.iter_mut().take(2) {
            row.fill(1);
        }
    }
    Instance::new(values)
}

/// Allocation built from a satisfying assignment; each clause agent takes
/// the free bottom cell of its lowest-indexed true literal.
pub fn assignment_to_allocation(f: &Formula3SAT, truth: &[bool], variant: Mode) -> Result<Allocation> {
    if !f.is_satisfied_by(truth) {
        return Err(invalid("assignment does not satisfy the formula"));
    }
    let picks: Vec<usize> = f
        .clauses
        .iter()
        .map(|c| c.iter().position(|&l| literal_true(l, truth)).expect("satisfied"))
        .collect();
    assignment_to_allocation_with_picks(f, truth, variant, &picks)
}

/// As [`assignment_to_allocation`], with `picks[p]` the position (0..3) of
/// the true literal whose bottom cell clause `p` receives.
pub fn assignment_to_allocation_with_picks(
    f: &Formula3SAT,
    truth: &[bool],
    variant: Mode,
    picks: &[usize],
) -> Result<Allocation> {
    use sat_agents::*;
    let occ = f.occurrences()?;
    if !f.is_satisfied_by(truth) {
        return Err(invalid("assignment does not satisfy the formula"));
    }
    if picks.len() != f.num_clauses() {
        return Err(invalid("one pick per clause is required"));
    }
    let lam = f.num_vars;
    let n = f.order();
    let mut a = Allocation::empty(n);
    let cells = sat_cells(f)?;
    // top cells sit in the first two items; for k = 1 they are the cells
    // outside the variable block
    let is_top = |agent: usize, (j, k): (usize, usize)| {
        agent >= lam && (j == 0 || (j == 1 && k >= 2)) && !(j < 2 && k < 2)
    };
    for (agent, cs) in cells.iter().enumerate() {
        for &c in cs {
            if is_top(agent, c) {
                a.assign(c.0, c.1, agent);
            }
        }
    }
    for k in 1..=lam {
        let (r1, r2) = (2 * k - 2, 2 * k - 1);
        let o = occ[k - 1];
        let t = |v| transfer(lam, k, v);
        if truth[k - 1] {
            a.assign(r1, r2, variable(k));
            a.assign(r2, r1, variable(k));
            a.assign(r1, r1, t(1));
            a.assign(r2, r2, t(3));
            a.assign(2 * lam + o.neg.0, r2, t(2));
            a.assign(2 * lam + o.neg.1, r1, t(4));
        } else {
            a.assign(r1, r1, variable(k));
            a.assign(r2, r2, variable(k));
            a.assign(r1, r2, t(2));
            a.assign(r2, r1, t(4));
            a.assign(2 * lam + o.pos.0, r1, t(1));
            a.assign(2 * lam + o.pos.1, r2, t(3));
        }
    }
    for (p, &pick) in picks.iter().enumerate() {
        let lit = *f.clauses[p]
            .get(pick)
            .ok_or_else(|| invalid(format!("pick {pick} out of range")))?;
        if !literal_true(lit, truth) {
            return Err(invalid(format!("clause {} pick is a false literal", p + 1)));
        }
        let (_, (j, c)) = bottom(f, &occ, p, lit);
        if a.get(j, c).is_some() {
            return Err(Error::Internal("bottom cell of a true literal is taken".into()));
        }
        a.assign(j, c, clause(lam, p + 1));
    }
    if !a.is_feasible() {
        return Err(Error::Internal("3SAT witness is not feasible".into()));
    }
    match variant {
        Mode::Partial => Ok(a),
        Mode::Complete => {
            let mut big = Allocation::empty(2 * n);
            for (i, j, k) in a.triples() {
                big.assign(j, k, i);
            }
            extend_allocation(&big)
        }
    }
}

/// Max-min fair allocation input: `utilities[i][e]` is agent `i`'s value
/// for item `e`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxMinInstance {
    pub utilities: Vec<Vec<u64>>,
}

impl MaxMinInstance {
    pub fn new(utilities: Vec<Vec<u64>>) -> Result<Self> {
        let mm = MaxMinInstance { utilities };
        mm.validate()?;
        Ok(mm)
    }

    pub fn num_agents(&self) -> usize {
        self.utilities.len()
    }

    pub fn num_items(&self) -> usize {
        self.utilities.first().map_or(0, Vec::len)
    }

    fn validate(&self) -> Result<()> {
        let (n, m) = (self.num_agents(), self.num_items());
        if n == 0 {
            return Err(invalid("max-min instance has no agents"));
        }
        if self.utilities.iter().any(|u| u.len() != m) {
            return Err(invalid("utility rows differ in length"));
        }
        if m < n {
            return Err(invalid(format!("{m} items for {n} agents; need at least as many items")));
        }
        Ok(())
    }

    /// `h = min_i u_i(E)`.
    pub fn h(&self) -> u64 {
        self.utilities.iter().map(|u| u.iter().sum()).min().unwrap_or(0)
    }

    /// `min_i u_i(X_i)` for `owner[e]` the agent receiving item `e`.
    pub fn egalitarian(&self, owner: &[usize]) -> u64 {
        (0..self.num_agents())
            .map(|i| (0..owner.len()).filter(|&e| owner[e] == i).map(|e| self.utilities[i][e]).sum())
            .min()
            .unwrap_or(0)
    }
}

/// Order-`2m` instance whose Emax equals the max-min optimum: original
/// agents value their items on the diagonal, the added agents value every
/// cell at `h`.
pub fn from_maxmin(mm: &MaxMinInstance) -> Result<Instance> {
    mm.validate()?;
    let (na, m) = (mm.num_agents(), mm.num_items());
    let h = mm.h();
    Instance::from_fn(2 * m, |i, j, k| {
        if i < na {
            if j == k && j < m {
                mm.utilities[i][j]
            } else {
                0
            }
        } else {
            h
        }
    })
}

/// Complete allocation with item `e` on the diagonal cell `(e, e)` of its
/// owner, extended to a Latin square.
pub fn partition_to_allocation(mm: &MaxMinInstance, owner: &[usize]) -> Result<Allocation> {
    mm.validate()?;
    if owner.len() != mm.num_items() || owner.iter().any(|&i| i >= mm.num_agents()) {
        return Err(invalid("owner must name an agent for every item"));
    }
    let mut a = Allocation::empty(2 * mm.num_items());
    for (e, &i) in owner.iter().enumerate() {
        a.assign(e, e, i);
    }
    extend_allocation(&a)
}

/// Partition read off the diagonal; items whose diagonal cell is empty or
/// held by an added agent go to the first agent.
pub fn allocation_to_partition(mm: &MaxMinInstance, a: &Allocation) -> Result<Vec<usize>> {
    mm.validate()?;
    if a.n() != 2 * mm.num_items() {
        return Err(Error::DimensionMismatch { expected: 2 * mm.num_items(), found: a.n() });
    }
    if !a.is_feasible() {
        return Err(Error::Infeasible);
    }
    Ok((0..mm.num_items())
        .map(|e| match a.get(e, e) {
            Some(i) if i < mm.num_agents() => i,
            _ => 0,
        })
        .collect())
}

/// 3-Partition input: `3m` numbers strictly between `T/4` and `T/2`
/// summing to `mT`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThreePartitionInstance {
    pub a: Vec<u64>,
    pub t: u64,
}

impl ThreePartitionInstance {
    pub fn new(a: Vec<u64>, t: u64) -> Result<Self> {
        let tp = ThreePartitionInstance { a, t };
        tp.validate()?;
        Ok(tp)
    }

    pub fn m(&self) -> usize {
        self.a.len() / 3
    }

    fn validate(&self) -> Result<()> {
        if self.a.is_empty() || !self.a.len().is_multiple_of(3) {
            return Err(invalid("need 3m numbers with m >= 1"));
        }
        if let Some(&x) = self.a.iter().find(|&&x| !(4 * x > self.t && 2 * x < self.t)) {
            return Err(invalid(format!("{x} is not strictly between T/4 and T/2 for T = {}", self.t)));
        }
        let sum: u64 = self.a.iter().sum();
        if sum != self.m() as u64 * self.t {
            return Err(invalid(format!("numbers sum to {sum}, expected {}", self.m() as u64 * self.t)));
        }
        Ok(())
    }
}

/// Identical-valuation instance of order `6m`; the first matching case of
/// the layout wins where cases overlap.
pub fn from_3partition(tp: &ThreePartitionInstance) -> Result<Instance> {
    tp.validate()?;
    let m = tp.m();
    Instance::from_fn(6 * m, |_, j, k| {
        // 1-based item and round
        let (j, k) = (j + 1, k + 1);
        if j == k && j <= 3 * m {
            tp.a[j - 1]
        } else if (j == 3 * m - 1 && k <= 2 * m + 1) || (j == 3 * m && k < 3 * m) {
            tp.t
        } else {
            0
        }
    })
}

/// Witness for a 3-partition `parts` (0-based indices into `a`): part `i`
/// goes on the diagonal to agent `i`, the `T` cells of the two special items
/// go to the remaining agents one each, and the rest is extended.
pub fn partition_to_fair_allocation(tp: &ThreePartitionInstance, parts: &[Vec<usize>]) -> Result<Allocation> {
    tp.validate()?;
    let m = tp.m();
    if parts.len() != m {
        return Err(invalid(format!("need {m} parts")));
    }
    let mut used = vec![false; 3 * m];
    for (i, part) in parts.iter().enumerate() {
        if part.len() != 3 || part.iter().map(|&j| tp.a.get(j).copied().unwrap_or(0)).sum::<u64>() != tp.t {
            return Err(invalid(format!("part {} must hold three numbers summing to T", i + 1)));
        }
        for &j in part {
            if std::mem::replace(&mut used[j], true) {
                return Err(invalid(format!("index {} used twice", j + 1)));
            }
        }
    }
    let n = 6 * m;
    let mut a = Allocation::empty(n);
    let mut put = |j: usize, k: usize, i: usize| -> Result<()> {
        // 1-based item, round and agent
        match a.get(j - 1, k - 1) {
            Some(h) if h != i - 1 => Err(invalid(format!(
                "cell ({j}, {k}) claimed by agents {} and {i}; the layout needs m >= 3",
                h + 1
            ))),
            _ => {
                a.assign(j - 1, k - 1, i - 1);
                Ok(())
            }
        }
    };
    for (i, part) in parts.iter().enumerate() {
        for &j in part {
            put(j + 1, j + 1, i + 1)?;
        }
    }
    for k in 1..=2 * m + 1 {
        put(3 * m - 1, k, m + k)?;
    }
    for k in 1..=3 * m - 1 {
        put(3 * m, k, 3 * m + 1 + k)?;
    }
    if !a.is_feasible() {
        return Err(invalid("3-partition witness layout is not a partial Latin square; the layout needs m >= 3"));
    }
    extend_allocation(&a)
}
