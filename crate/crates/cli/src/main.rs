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

//! `lsalloc`: command-line front end for the Latin square allocation solvers.
//!
//! Results go to stdout as JSON (CSV for `bench`). Failures print a one-line
//! JSON object `{"error": kind, "message": text}` on stderr and exit with 1
//! for usage and input errors, 2 for solver errors.

use std::fs;
use std::io::{self, Read};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use serde_json::{json, Value};

use lsalloc::bench::{run_bench, BenchConfig};
use lsalloc::complete::{solve_complete_approx_with, solve_partial_approx_with, RoundingMode};
use lsalloc::config_lp::{solve_configuration_lp_with, LpOptions};
use lsalloc::extension::extend;
use lsalloc::fpt::{solve_exact_with, solve_fpt_with, ExactLimits, FptOptions};
use lsalloc::instance::{efficiency_check, fairness_check, utilitarian_welfare};
use lsalloc::oracle::{exists_fair_complete_with, FairSearchOptions};
use lsalloc::reductions::{
    allocation_to_partition, assignment_to_allocation, assignment_to_allocation_with_picks, from_3partition,
    from_3sat, from_maxmin, from_partial_latin_square, partition_to_allocation, partition_to_fair_allocation,
    Formula3SAT, MaxMinInstance, ThreePartitionInstance,
};
use lsalloc::{Allocation, Efficiency, Error, Fairness, Instance, Mode, Objective};

#[derive(Parser, Debug)]
#[command(name = "lsalloc", version, about = "Latin square allocation solvers")]
struct Cli {
    /// Worker threads for parallel sections (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve an instance with one of the algorithms.
    Solve(SolveArgs),
    /// Configuration LP upper bound.
    Lp(LpArgs),
    /// Extend a partial allocation to a complete one.
    Extend(ExtendArgs),
    /// Evaluate a fairness or efficiency notion on an allocation.
    Check(CheckArgs),
    /// Exact optimum by exhaustive search.
    Exact(ExactArgs),
    /// Search for a complete allocation satisfying a fairness notion.
    FairExists(FairArgs),
    /// Generate an instance from a hardness construction.
    Generate(GenerateArgs),
    /// Map a certificate of the source problem to an allocation.
    Witness(WitnessArgs),
    /// Run a benchmark configuration and print CSV.
    Bench(BenchArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Algorithm {
    PartialApprox,
    CompleteApprox,
    Fpt,
    Exact,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ObjectiveArg {
    Umax,
    Emax,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Partial,
    Complete,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Family {
    Pls,
    #[value(name = "3sat")]
    Sat,
    Maxmin,
    #[value(name = "3partition")]
    Partition,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Umax => Objective::Umax,
            ObjectiveArg::Emax => Objective::Emax,
        }
    }
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Partial => Mode::Partial,
            ModeArg::Complete => Mode::Complete,
        }
    }
}

#[derive(Args, Debug)]
struct InstanceArg {
    /// Instance JSON file; stdin when omitted.
    #[arg(long)]
    instance: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExactKnobs {
    /// Largest order the exhaustive search accepts.
    #[arg(long)]
    limit_n: Option<usize>,
    /// Wall-clock limit for exhaustive search, in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
}

impl ExactKnobs {
    fn limits(&self, mode: Mode) -> Result<ExactLimits, CliError> {
        let mut l = ExactLimits::default();
        if let Some(n) = self.limit_n {
            match mode {
                Mode::Partial => l.partial = n,
                Mode::Complete => l.complete = n,
            }
        }
        if let Some(t) = self.time_limit {
            if !(t.is_finite() && t >= 0.0) {
                return Err(CliError::usage(format!("invalid --time-limit {t}")));
            }
            l.deadline = Some(Instant::now() + Duration::from_secs_f64(t));
        }
        Ok(l)
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    input: InstanceArg,
    #[arg(long, value_enum)]
    algorithm: Algorithm,
    #[arg(long, value_enum, default_value = "umax")]
    objective: ObjectiveArg,
    /// Allocation class; defaults to complete for complete-approx, else partial.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Randomized rounding with this seed (default: derandomized); also seeds fpt.
    #[arg(long, conflicts_with = "derandomize")]
    seed: Option<u64>,
    /// Derandomized rounding (the default).
    #[arg(long)]
    derandomize: bool,
    /// Failure probability of the fpt solver.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// LP pricing tolerance.
    #[arg(long, default_value_t = 1e-9)]
    epsilon: f64,
    #[command(flatten)]
    exact: ExactKnobs,
}

#[derive(Args, Debug)]
struct LpArgs {
    #[command(flatten)]
    input: InstanceArg,
    #[arg(long, default_value_t = 1e-9)]
    epsilon: f64,
}

#[derive(Args, Debug)]
struct ExtendArgs {
    /// Allocation JSON file.
    #[arg(long = "in")]
    alloc: PathBuf,
    #[command(flatten)]
    input: InstanceArg,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// EF, EF1, EFX, PROP, PROP1, PROPX, EQ, EQ1, EQX, non_wasteful,
    /// pareto_optimal or feasible.
    #[arg(long)]
    notion: String,
    /// Weak variants of EFX, EQX and PROPX (positively valued goods only).
    #[arg(long)]
    weak: bool,
    #[arg(long = "in")]
    alloc: PathBuf,
    #[command(flatten)]
    input: InstanceArg,
}

#[derive(Args, Debug)]
struct ExactArgs {
    #[command(flatten)]
    input: InstanceArg,
    #[arg(long, value_enum, default_value = "umax")]
    objective: ObjectiveArg,
    #[arg(long, value_enum, default_value = "partial")]
    mode: ModeArg,
    #[command(flatten)]
    exact: ExactKnobs,
}

#[derive(Args, Debug)]
struct FairArgs {
    #[command(flatten)]
    input: InstanceArg,
    #[arg(long)]
    notion: String,
    #[arg(long)]
    weak: bool,
    /// Disable bound pruning (same answers, slower).
    #[arg(long)]
    no_pruning: bool,
    #[arg(long)]
    limit_n: Option<usize>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Family parameters as JSON; stdin when omitted.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Partial or complete variant of the 3sat construction.
    #[arg(long, value_enum, default_value = "partial")]
    variant: ModeArg,
}

#[derive(Args, Debug)]
struct WitnessArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long)]
    params: PathBuf,
    /// Certificate JSON; stdin when omitted.
    #[arg(long)]
    certificate: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "partial")]
    variant: ModeArg,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Bench configuration JSON; stdin when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug)]
struct CliError {
    kind: &'static str,
    message: String,
    code: u8,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { kind: "usage", message: message.into(), code: 1 }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (kind, code) = match &e {
            Error::Json(_) => ("json", 1),
            Error::DimensionMismatch { .. } => ("dimension_mismatch", 1),
            Error::InvalidInstance(_) => ("invalid_instance", 1),
            Error::InvalidAllocation(_) => ("invalid_allocation", 1),
            Error::UnknownNotion(_) => ("unknown_notion", 1),
            Error::InvalidReduction(_) => ("invalid_reduction", 1),
            Error::Infeasible => ("infeasible", 1),
            Error::OracleLimit { .. } => ("oracle_limit", 2),
            Error::TimeLimit => ("time_limit", 2),
            Error::IterationLimit { .. } => ("iteration_limit", 2),
            Error::ExtensionPrecondition { .. } => ("extension_precondition", 1),
            _ => ("solver", 2),
        };
        CliError { kind, message: e.to_string(), code }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError { kind: "json", message: e.to_string(), code: 1 }
    }
}

fn read_source(path: Option<&PathBuf>) -> Result<String, CliError> {
    match path {
        Some(p) => fs::read_to_string(p).map_err(|e| CliError {
            kind: "io",
            message: format!("{}: {e}", p.display()),
            code: 1,
        }),
        None => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).map_err(|e| CliError {
                kind: "io",
                message: format!("stdin: {e}"),
                code: 1,
            })?;
            Ok(s)
        }
    }
}

fn load_instance(arg: &InstanceArg) -> Result<Instance, CliError> {
    Ok(Instance::from_json(&read_source(arg.instance.as_ref())?)?)
}

fn load_allocation(path: &PathBuf) -> Result<Allocation, CliError> {
    Ok(Allocation::from_json(&read_source(Some(path))?)?)
}

fn fixed9(x: f64) -> Box<RawValue> {
    RawValue::from_string(format!("{x:.9}")).expect("a decimal literal is valid JSON")
}

/// Allocation fields followed by extra result fields, in one object.
#[derive(Serialize)]
struct WithAllocation<T: Serialize> {
    n: usize,
    grid: Value,
    #[serde(flatten)]
    extra: T,
}

fn with_allocation<T: Serialize>(a: &Allocation, extra: T) -> Result<String, CliError> {
    if !a.is_feasible() {
        return Err(Error::Internal("refusing to emit an infeasible allocation".into()).into());
    }
    let v = a.to_json_value();
    Ok(serde_json::to_string(&WithAllocation { n: a.n(), grid: v["grid"].clone(), extra })?)
}

fn ratio(value: u64, bound: f64) -> f64 {
    if bound <= 0.0 {
        1.0
    } else {
        value as f64 / bound
    }
}

fn lp_options(epsilon: f64) -> Result<LpOptions, CliError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(CliError::usage(format!("invalid --epsilon {epsilon}")));
    }
    Ok(LpOptions { epsilon, ..LpOptions::default() })
}

fn solve(args: &SolveArgs) -> Result<String, CliError> {
    let inst = load_instance(&args.input)?;
    let rounding = match args.seed {
        Some(s) if args.algorithm != Algorithm::Fpt => RoundingMode::Randomized(s),
        _ => RoundingMode::Derandomized,
    };
    let lp = lp_options(args.epsilon)?;
    match args.algorithm {
        Algorithm::PartialApprox => {
            if args.mode == Some(ModeArg::Complete) || args.objective == ObjectiveArg::Emax {
                return Err(CliError::usage("partial-approx solves partial umax only"));
            }
            let out = solve_partial_approx_with(&inst, rounding, &lp)?;
            #[derive(Serialize)]
            struct R {
                welfare: u64,
                lp_bound: Box<RawValue>,
                ratio: f64,
                seed: Option<u64>,
            }
            with_allocation(
                &out.allocation,
                R { welfare: out.welfare, lp_bound: fixed9(out.lp_bound), ratio: ratio(out.welfare, out.lp_bound), seed: out.seed },
            )
        }
        Algorithm::CompleteApprox => {
            if args.mode == Some(ModeArg::Partial) || args.objective == ObjectiveArg::Emax {
                return Err(CliError::usage("complete-approx solves complete umax only"));
            }
            let out = solve_complete_approx_with(&inst, rounding, &lp)?;
            #[derive(Serialize)]
            struct R {
                welfare: u64,
                lp_bound: Box<RawValue>,
                ratio: f64,
                block_chosen: Option<usize>,
                partial_welfare: u64,
            }
            with_allocation(
                &out.allocation,
                R {
                    welfare: out.welfare,
                    lp_bound: fixed9(out.lp_bound),
                    ratio: ratio(out.welfare, out.lp_bound),
                    block_chosen: out.block_chosen,
                    partial_welfare: out.partial_welfare,
                },
            )
        }
        Algorithm::Fpt => {
            if args.objective == ObjectiveArg::Emax {
                return Err(CliError::usage("fpt solves umax only"));
            }
            if !(args.delta > 0.0 && args.delta < 1.0) {
                return Err(CliError::usage(format!("--delta must lie in (0, 1), got {}", args.delta)));
            }
            let mode: Mode = args.mode.unwrap_or(ModeArg::Partial).into();
            let opts = FptOptions {
                delta: args.delta,
                seed: args.seed.unwrap_or(0),
                limits: args.exact.limits(mode)?,
                ..FptOptions::default()
            };
            let out = solve_fpt_with(&inst, mode, &opts)?;
            with_allocation(
                &out.allocation,
                json!({
                    "value": out.value,
                    "welfare": out.value,
                    "delta": args.delta,
                    "enumerated": out.enumerated,
                    "deterministic": out.deterministic,
                }),
            )
        }
        Algorithm::Exact => {
            let mode: Mode = args.mode.unwrap_or(ModeArg::Partial).into();
            let (a, value) = solve_exact_with(&inst, args.objective.into(), mode, &args.exact.limits(mode)?)?;
            with_allocation(&a, json!({ "value": value, "welfare": utilitarian_welfare(&inst, &a)? }))
        }
    }
}

fn lp(args: &LpArgs) -> Result<String, CliError> {
    let inst = load_instance(&args.input)?;
    let report = solve_configuration_lp_with(&inst, &lp_options(args.epsilon)?)?;
    #[derive(Serialize)]
    struct R {
        lp_bound: Box<RawValue>,
        columns: usize,
        iterations: usize,
    }
    Ok(serde_json::to_string(&R {
        lp_bound: fixed9(report.solution.objective),
        columns: report.columns,
        iterations: report.iterations,
    })?)
}

fn check(args: &CheckArgs) -> Result<String, CliError> {
    let inst = load_instance(&args.input)?;
    let a = load_allocation(&args.alloc)?;
    inst.check_order(&a)?;
    let key = args.notion.to_ascii_lowercase().replace('-', "_");
    let satisfied = match key.as_str() {
        "feasible" => a.is_feasible(),
        "non_wasteful" => efficiency_check(&inst, &a, Efficiency::NonWasteful)?,
        "pareto_optimal" => efficiency_check(&inst, &a, Efficiency::ParetoOptimal)?,
        _ => fairness_check(&inst, &a, args.notion.parse::<Fairness>()?, args.weak)?,
    };
    Ok(json!({ "notion": args.notion, "satisfied": satisfied }).to_string())
}

fn exact(args: &ExactArgs) -> Result<String, CliError> {
    let inst = load_instance(&args.input)?;
    let mode: Mode = args.mode.into();
    let (a, value) = solve_exact_with(&inst, args.objective.into(), mode, &args.exact.limits(mode)?)?;
    with_allocation(&a, json!({ "value": value }))
}

fn fair_exists(args: &FairArgs) -> Result<String, CliError> {
    let inst = load_instance(&args.input)?;
    let notion: Fairness = args.notion.parse()?;
    let opts = FairSearchOptions {
        weak: args.weak,
        pruning: !args.no_pruning,
        limit: args.limit_n.unwrap_or(FairSearchOptions::default().limit),
    };
    let found = exists_fair_complete_with(&inst, notion, &opts)?;
    Ok(json!({
        "notion": notion.name(),
        "exists": found.is_some(),
        "witness": found.map(|a| a.to_json_value()),
    })
    .to_string())
}

fn generate(args: &GenerateArgs) -> Result<String, CliError> {
    let params = read_source(args.params.as_ref())?;
    let inst = match args.family {
        Family::Pls => from_partial_latin_square(&Allocation::from_json(&params)?)?,
        Family::Sat => {
            let f: Formula3SAT = serde_json::from_str(&params)?;
            from_3sat(&Formula3SAT::new(f.num_vars, f.clauses)?, args.variant.into())?
        }
        Family::Maxmin => {
            let mm: MaxMinInstance = serde_json::from_str(&params)?;
            from_maxmin(&mm)?
        }
        Family::Partition => {
            let tp: ThreePartitionInstance = serde_json::from_str(&params)?;
            from_3partition(&tp)?
        }
    };
    Ok(inst.to_json())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SatCertificate {
    assignment: Vec<bool>,
    /// 1-based literal position per clause.
    #[serde(default)]
    picks: Option<Vec<usize>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MaxMinCertificate {
    /// 1-based owner per item; alternatively an allocation to read back.
    #[serde(default)]
    owner: Option<Vec<usize>>,
    #[serde(default)]
    allocation: Option<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionCertificate {
    /// Triples of 1-based indices.
    parts: Vec<Vec<usize>>,
}

fn one_based(v: &[usize], what: &str) -> Result<Vec<usize>, CliError> {
    v.iter()
        .map(|&x| x.checked_sub(1).ok_or_else(|| CliError::usage(format!("{what} indices are 1-based"))))
        .collect()
}

fn witness(args: &WitnessArgs) -> Result<String, CliError> {
    let params = read_source(Some(&args.params))?;
    let cert = read_source(args.certificate.as_ref())?;
    match args.family {
        Family::Pls => Err(CliError::usage("pls has no witness map; use extend or exact")),
        Family::Sat => {
            let f: Formula3SAT = serde_json::from_str(&params)?;
            let f = Formula3SAT::new(f.num_vars, f.clauses)?;
            let c: SatCertificate = serde_json::from_str(&cert)?;
            let a = match c.picks {
                Some(p) => assignment_to_allocation_with_picks(&f, &c.assignment, args.variant.into(), &one_based(&p, "pick")?)?,
                None => assignment_to_allocation(&f, &c.assignment, args.variant.into())?,
            };
            with_allocation(&a, json!({}))
        }
        Family::Maxmin => {
            let mm: MaxMinInstance = serde_json::from_str(&params)?;
            let mm = MaxMinInstance::new(mm.utilities)?;
            let c: MaxMinCertificate = serde_json::from_str(&cert)?;
            match (c.owner, c.allocation) {
                (Some(owner), None) => {
                    let a = partition_to_allocation(&mm, &one_based(&owner, "owner")?)?;
                    with_allocation(&a, json!({}))
                }
                (None, Some(alloc)) => {
                    let a = Allocation::from_json(&alloc.to_string())?;
                    let owner = allocation_to_partition(&mm, &a)?;
                    let value = mm.egalitarian(&owner);
                    Ok(json!({
                        "owner": owner.iter().map(|i| i + 1).collect::<Vec<_>>(),
                        "value": value,
                    })
                    .to_string())
                }
                _ => Err(CliError::usage("maxmin certificate needs exactly one of owner, allocation")),
            }
        }
        Family::Partition => {
            let tp: ThreePartitionInstance = serde_json::from_str(&params)?;
            let c: PartitionCertificate = serde_json::from_str(&cert)?;
            let parts = c.parts.iter().map(|p| one_based(p, "part")).collect::<Result<Vec<_>, _>>()?;
            let a = partition_to_fair_allocation(&tp, &parts)?;
            with_allocation(&a, json!({}))
        }
    }
}

fn bench(args: &BenchArgs) -> Result<String, CliError> {
    let cfg: BenchConfig = serde_json::from_str(&read_source(args.config.as_ref())?)?;
    let csv = run_bench(&cfg)?;
    Ok(csv.trim_end().to_string())
}

fn run(cli: &Cli) -> Result<String, CliError> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::usage(format!("--threads: {e}")))?;
    }
    match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Lp(a) => lp(a),
        Command::Extend(a) => {
            let inst = load_instance(&a.input)?;
            let alloc = load_allocation(&a.alloc)?;
            Ok(extend(&inst, &alloc)?.to_json())
        }
        Command::Check(a) => check(a),
        Command::Exact(a) => exact(a),
        Command::FairExists(a) => fair_exists(a),
        Command::Generate(a) => generate(a),
        Command::Witness(a) => witness(a),
        Command::Bench(a) => bench(a),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", json!({ "error": e.kind, "message": e.message }));
    ExitCode::from(e.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            return fail(CliError::usage(first));
        }
    };
    match run(&cli) {
        Ok(out) => {
            println!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}
