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

//! Solvers for allocating `n` items to `n` agents over `n` rounds under the
//! Latin square constraint.
//!
//! An allocation is a (partial) Latin square whose rows are items, whose
//! columns are rounds and whose symbols are agents. The crate provides the
//! data model and fairness predicates, a configuration LP solved by column
//! generation, randomized and derandomized rounding, Ryser-style extension of
//! partial allocations, FPT solvers, exact oracles and instance generators for
//! the hardness constructions.

pub mod bench;
pub mod complete;
pub mod config_lp;
mod error;
pub mod extension;
pub mod fpt;
pub mod instance;
pub mod matching;
pub mod oracle;
pub mod reductions;
pub mod rounding;
mod simplex;

pub use error::{Error, Result};
pub use instance::{
    Allocation, AllocationClass, Bundle, Efficiency, Fairness, Instance, Mode, Objective,
};
