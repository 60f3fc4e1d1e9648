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

//! Benchmark runner producing one CSV row per (instance, algorithm).

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::complete::{solve_complete_approx, solve_partial_approx, RoundingMode};
use crate::config_lp::solve_configuration_lp;
use crate::error::{Error, Result};
use crate::fpt::{solve_exact_enumeration, solve_fpt_with, FptOptions};
use crate::instance::{examples, Instance, Mode, Objective};

pub const CSV_HEADER: &str = "family,n,seed,algorithm,value,lp_bound,oracle_value,ratio,wall_ms";

pub const FAMILIES: [&str; 5] = ["random", "binary", "sparse", "example1", "example2"];
pub const ALGORITHMS: [&str; 4] = ["partial-approx", "complete-approx", "fpt", "exact"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default)]
    pub families: Vec<String>,
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default = "all_algorithms")]
    pub algorithms: Vec<String>,
    /// Record wall time; off makes repeated runs byte-identical.
    #[serde(default = "yes")]
    pub timing: bool,
}

fn all_algorithms() -> Vec<String> {
    ALGORITHMS.iter().map(|s| s.to_string()).collect()
}

fn yes() -> bool {
    true
}

/// Instance of a named family; the worked examples ignore `n` and `seed`.
pub fn family_instance(family: &str, n: usize, seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n as u64);
    match family {
        "random" => Instance::from_fn(n, |_, _, _| rng.gen_range(0..10)),
        "binary" => Instance::from_fn(n, |_, _, _| rng.gen_range(0..2)),
        "sparse" => {
            let picks: Vec<(usize, usize, usize)> = (0..2)
                .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)))
                .collect();
            let vals: Vec<u64> = (0..2).map(|_| rng.gen_range(1..10)).collect();
            Instance::from_fn(n, |i, j, k| {
                picks.iter().zip(&vals).filter(|(p, _)| **p == (i, j, k)).map(|(_, v)| *v).sum()
            })
        }
        "example1" => Ok(examples::partial_beats_complete()),
        "example2" => Ok(examples::identical_diagonal()),
        other => Err(Error::InvalidInstance(format!("unknown family {other:?}"))),
    }
}

fn fmt_ratio(value: u64, oracle: Option<u64>) -> String {
    match oracle {
        Some(0) if value == 0 => "1.000000".into(),
        Some(0) | None => String::new(),
        Some(o) => format!("{:.6}", value as f64 / o as f64),
    }
}

/// Runs every (family, size, seed, algorithm) combination.
pub fn run_bench(cfg: &BenchConfig) -> Result<String> {
    for a in &cfg.algorithms {
        if !ALGORITHMS.contains(&a.as_str()) {
            return Err(Error::InvalidInstance(format!("unknown algorithm {a:?}")));
        }
    }
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for family in &cfg.families {
        let fixed = family.starts_with("example");
        let sizes: Vec<usize> = if fixed { vec![2] } else { cfg.sizes.clone() };
        for &n in &sizes {
            for &seed in &cfg.seeds {
                let inst = family_instance(family, n, seed)?;
                let lp = solve_configuration_lp(&inst)?.0.objective;
                for alg in &cfg.algorithms {
                    let start = Instant::now();
                    let mode = if alg == "complete-approx" { Mode::Complete } else { Mode::Partial };
                    let run = match alg.as_str() {
                        "partial-approx" => solve_partial_approx(&inst, RoundingMode::Derandomized).map(|o| o.welfare),
                        "complete-approx" => solve_complete_approx(&inst, RoundingMode::Derandomized).map(|o| o.welfare),
                        "fpt" => solve_fpt_with(&inst, mode, &FptOptions { seed, ..FptOptions::default() }).map(|o| o.value),
                        _ => solve_exact_enumeration(&inst, Objective::Umax, mode).map(|(_, v)| v),
                    };
                    // an exhaustive step past its order limit leaves the row blank
                    let value = match run {
                        Ok(v) => Some(v),
                        Err(Error::OracleLimit { .. }) => None,
                        Err(e) => return Err(e),
                    };
                    let wall = start.elapsed();
                    let oracle = match solve_exact_enumeration(&inst, Objective::Umax, mode) {
                        Ok((_, v)) => Some(v),
                        Err(Error::OracleLimit { .. }) => None,
                        Err(e) => return Err(e),
                    };
                    let _ = writeln!(
                        out,
                        "{family},{n},{seed},{alg},{},{lp:.9},{},{},{}",
                        value.map(|v| v.to_string()).unwrap_or_default(),
                        oracle.map(|v| v.to_string()).unwrap_or_default(),
                        value.map(|v| fmt_ratio(v, oracle)).unwrap_or_default(),
                        if cfg.timing { format!("{:.3}", wall.as_secs_f64() * 1e3) } else { String::new() },
                    );
                }
            }
        }
    }
    Ok(out)
}
