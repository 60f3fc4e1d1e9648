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

//! Rounding of a fractional configuration-LP solution to a partial
//! allocation: sample one bundle per agent, then resolve contested cells in
//! favour of the highest value (smallest agent index on ties).
//!
//! The derandomized variant fixes agents in index order, each time keeping
//! the support bundle that maximizes the exact conditional expected welfare.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config_lp::{marginals, FractionalSolution, Marginals};
use crate::error::{Error, Result};
use crate::instance::{utilitarian_welfare, Allocation, Bundle, Instance};

/// Allowed deviation of an agent's total weight from 1.
pub const WEIGHT_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct RoundingOutcome {
    pub allocation: Allocation,
    pub welfare: u64,
    /// Seed of the randomized run; `None` when derandomized.
    pub seed: Option<u64>,
}

/// Rejects solutions whose per-agent weights do not sum to one, or whose
/// bundles fall outside the instance.
pub fn validate_solution(inst: &Instance, sol: &FractionalSolution) -> Result<()> {
    let n = inst.n();
    if sol.n != n {
        return Err(Error::DimensionMismatch { expected: n, found: sol.n });
    }
    let mut total = vec![0.0; n];
    for c in &sol.columns {
        if c.agent >= n {
            return Err(Error::InvalidSolution(format!("agent {} out of range", c.agent + 1)));
        }
        if !(c.weight >= -WEIGHT_TOLERANCE) || !c.weight.is_finite() {
            return Err(Error::InvalidSolution(format!("negative weight {}", c.weight)));
        }
        if c.bundle.cells().iter().any(|&(j, k)| j >= n || k >= n) {
            return Err(Error::InvalidSolution("bundle cell out of range".into()));
        }
        total[c.agent] += c.weight;
    }
    for (i, t) in total.iter().enumerate() {
        if (t - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::InvalidSolution(format!(
                "weights of agent {} sum to {t}",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Awards each cell to the holder with the largest value, smallest index
/// first among equals.
pub fn resolve_contention(inst: &Instance, bundles: &[Bundle]) -> Allocation {
    let n = inst.n();
    let mut a = Allocation::empty(n);
    for (i, b) in bundles.iter().enumerate() {
        for &(j, k) in b.cells() {
            match a.get(j, k) {
                Some(w) if inst.value(w, j, k) >= inst.value(i, j, k) => {}
                _ => a.assign(j, k, i),
            }
        }
    }
    a
}

fn outcome(inst: &Instance, bundles: &[Bundle], seed: Option<u64>) -> Result<RoundingOutcome> {
    let allocation = resolve_contention(inst, bundles);
    debug_assert!(allocation.is_feasible());
    let welfare = utilitarian_welfare(inst, &allocation)?;
    Ok(RoundingOutcome { allocation, welfare, seed })
}

/// One independent draw per agent, each from its own ChaCha stream of `seed`.
pub fn sample_bundles(sol: &FractionalSolution, seed: u64) -> Vec<Bundle> {
    (0..sol.n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let cols: Vec<_> = sol.agent_columns(i).collect();
            let total: f64 = cols.iter().map(|c| c.weight.max(0.0)).sum();
            let mut r = rng.gen::<f64>() * total;
            for c in &cols {
                r -= c.weight.max(0.0);
                if r < 0.0 {
                    return c.bundle.clone();
                }
            }
            cols.last().map(|c| c.bundle.clone()).unwrap_or_default()
        })
        .collect()
}

pub fn round_randomized(inst: &Instance, sol: &FractionalSolution, seed: u64) -> Result<RoundingOutcome> {
    validate_solution(inst, sol)?;
    outcome(inst, &sample_bundles(sol, seed), Some(seed))
}

pub fn round_derandomized(inst: &Instance, sol: &FractionalSolution) -> Result<RoundingOutcome> {
    Ok(round_derandomized_traced(inst, sol)?.0)
}

/// Derandomized rounding that also returns the conditional expectation
/// before any agent is fixed and after each agent is fixed (`n + 1` values).
pub fn round_derandomized_traced(
    inst: &Instance,
    sol: &FractionalSolution,
) -> Result<(RoundingOutcome, Vec<f64>)> {
    validate_solution(inst, sol)?;
    let x = marginals(sol);
    let mut fixed: Vec<Bundle> = Vec::with_capacity(inst.n());
    let mut trace = vec![expectation(inst, &x, &fixed)];
    for i in 0..inst.n() {
        let mut best: Option<(f64, Bundle)> = None;
        for c in sol.agent_columns(i).filter(|c| c.weight > 0.0) {
            fixed.push(c.bundle.clone());
            let e = expectation(inst, &x, &fixed);
            fixed.pop();
            if best.as_ref().is_none_or(|(b, _)| e > *b) {
                best = Some((e, c.bundle.clone()));
            }
        }
        let (e, bundle) = best.unwrap_or((trace[i], Bundle::empty()));
        fixed.push(bundle);
        trace.push(e);
    }
    Ok((outcome(inst, &fixed, None)?, trace))
}

/// Expected welfare of randomized rounding when agents `0..fixed.len()` hold
/// the given bundles and the remaining agents still sample from `sol`.
pub fn conditional_expectation(inst: &Instance, sol: &FractionalSolution, fixed: &[Bundle]) -> f64 {
    expectation(inst, &marginals(sol), fixed)
}

fn expectation(inst: &Instance, x: &Marginals, fixed: &[Bundle]) -> f64 {
    let n = inst.n();
    let mut held = vec![false; fixed.len() * n * n];
    for (i, b) in fixed.iter().enumerate() {
        for &(j, k) in b.cells() {
            held[(i * n + j) * n + k] = true;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut total = 0.0;
    for j in 0..n {
        for k in 0..n {
            order.sort_by(|&a, &b| inst.value(b, j, k).cmp(&inst.value(a, j, k)).then(a.cmp(&b)));
            let mut none_before = 1.0;
            for &a in &order {
                let v = inst.value(a, j, k);
                if v == 0 || none_before == 0.0 {
                    break;
                }
                let p = if a < fixed.len() {
                    if held[(a * n + j) * n + k] { 1.0 } else { 0.0 }
                } else {
                    x.get(a, j, k).clamp(0.0, 1.0)
                };
                total += v as f64 * p * none_before;
                none_before *= 1.0 - p;
            }
        }
    }
    total
}
