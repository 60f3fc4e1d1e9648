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

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected order {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),
    #[error("allocation is not feasible")]
    Infeasible,
    #[error("unknown notion {0:?}")]
    UnknownNotion(String),
    #[error("order {n} exceeds the oracle limit {limit}")]
    OracleLimit { n: usize, limit: usize },
    #[error("time limit exceeded")]
    TimeLimit,
    #[error("need at least {needed} colors, got {given}")]
    TooFewColors { needed: usize, given: usize },
    #[error("column generation hit the iteration cap {iterations}; best bound so far {bound}")]
    IterationLimit { iterations: usize, bound: f64 },
    #[error("LP solver failure: {0}")]
    Lp(String),
    #[error("fractional solution invalid: {0}")]
    InvalidSolution(String),
    #[error("extension precondition violated: |M'| + |R'| = {} + {} > {n} (items {items:?}, rounds {rounds:?})", items.len(), rounds.len())]
    ExtensionPrecondition {
        n: usize,
        items: Vec<usize>,
        rounds: Vec<usize>,
    },
    #[error("internal error: {0}")]
    Internal(String),
    #[error("invalid reduction input: {0}")]
    InvalidReduction(String),
    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
