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

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use serde_json::Value;
use tempfile::TempDir;

const EX1: &str = r#"{"n":2,"values":[[[1,0],[0,0]],[[0,0],[0,1]]]}"#;
const EX2: &str = r#"{"n":2,"values":[[[1,0],[0,1]],[[1,0],[0,1]]]}"#;

struct Sandbox(TempDir);

impl Sandbox {
    fn new() -> Self {
        Sandbox(tempfile::tempdir().unwrap())
    }

    fn file(&self, name: &str, body: &str) -> PathBuf {
        let p = self.0.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }
}

fn lsalloc(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_lsalloc"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.unwrap_or("").as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn ok_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn err_json(out: &Output, code: i32) -> Value {
    assert_eq!(out.status.code(), Some(code), "stdout: {}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8_lossy(&out.stderr);
    assert_eq!(text.trim_end().lines().count(), 1, "{text}");
    serde_json::from_str(text.trim_end()).unwrap()
}

#[test]
fn exact_on_worked_instance() {
    let s = Sandbox::new();
    let p = s.file("ex1.json", EX1);
    let v = ok_json(&lsalloc(&["exact", "--objective", "umax", "--mode", "partial", "--instance", p.to_str().unwrap()], None));
    assert_eq!(v["value"], 2);
    let v = ok_json(&lsalloc(&["exact", "--objective", "emax", "--mode", "complete"], Some(EX1)));
    assert_eq!(v["value"], 0);
}

#[test]
fn check_ef_on_identical_instance() {
    let s = Sandbox::new();
    let inst = s.file("ex2.json", EX2);
    let alloc = s.file("a.json", r#"{"n":2,"grid":[[1,2],[2,1]]}"#);
    let v = ok_json(&lsalloc(
        &["check", "--notion", "EF", "--instance", inst.to_str().unwrap(), "--in", alloc.to_str().unwrap()],
        None,
    ));
    assert_eq!(v["satisfied"], false);
    let v = ok_json(&lsalloc(&["check", "--notion", "feasible", "--in", alloc.to_str().unwrap()], Some(EX2)));
    assert_eq!(v["satisfied"], true);
}

#[test]
fn lp_bound_printed_with_nine_decimals() {
    let out = lsalloc(&["lp"], Some(r#"{"n":2,"values":[[[0,0],[0,0]],[[0,0],[0,0]]]}"#));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(text.contains(r#""lp_bound":0.000000000"#), "{text}");
    assert_eq!(ok_json(&out)["lp_bound"], 0.0);
}

#[test]
fn solve_variants() {
    let v = ok_json(&lsalloc(&["solve", "--algorithm", "partial-approx"], Some(EX1)));
    assert_eq!(v["welfare"], 2);
    assert_eq!(v["ratio"], 1.0);
    let v = ok_json(&lsalloc(&["solve", "--algorithm", "partial-approx", "--seed", "7"], Some(EX1)));
    assert_eq!(v["seed"], 7);
    let v = ok_json(&lsalloc(&["solve", "--algorithm", "complete-approx", "--derandomize"], Some(EX1)));
    assert_eq!(v["welfare"], 1);
    assert!(v["block_chosen"].is_number());
    let v = ok_json(&lsalloc(&["solve", "--algorithm", "fpt", "--delta", "0.1", "--mode", "partial"], Some(EX1)));
    assert_eq!(v["value"], 2);
    let v = ok_json(&lsalloc(&["--threads", "1", "solve", "--algorithm", "exact", "--objective", "emax"], Some(EX1)));
    assert_eq!(v["value"], 1);
}

#[test]
fn extend_completes() {
    let s = Sandbox::new();
    let alloc = s.file("a.json", r#"{"n":3,"grid":[[2,0,0],[0,0,0],[0,0,0]]}"#);
    let v = ok_json(&lsalloc(&["extend", "--in", alloc.to_str().unwrap()], Some(&format!(
        r#"{{"n":3,"values":{}}}"#,
        serde_json::to_string(&vec![vec![vec![0; 3]; 3]; 3]).unwrap()
    ))));
    assert_eq!(v["grid"][0][0], 2);
    assert!(v["grid"].as_array().unwrap().iter().flat_map(|r| r.as_array().unwrap()).all(|x| x.as_u64().unwrap() > 0));
}

#[test]
fn fair_exists_on_identical_instance() {
    let v = ok_json(&lsalloc(&["fair-exists", "--notion", "EQ"], Some(EX2)));
    assert_eq!(v["exists"], false);
    assert!(v["witness"].is_null());
    let zero = r#"{"n":2,"values":[[[0,0],[0,0]],[[0,0],[0,0]]]}"#;
    let v = ok_json(&lsalloc(&["fair-exists", "--notion", "efx", "--no-pruning"], Some(zero)));
    assert_eq!(v["exists"], true);
}

#[test]
fn generate_and_witness() {
    let s = Sandbox::new();
    let mm = s.file("mm.json", r#"{"utilities":[[1,0],[0,1]]}"#);
    let v = ok_json(&lsalloc(&["generate", "--family", "maxmin", "--params", mm.to_str().unwrap()], None));
    assert_eq!(v["n"], 4);
    let w = ok_json(&lsalloc(&["witness", "--family", "maxmin", "--params", mm.to_str().unwrap()], Some(r#"{"owner":[1,2]}"#)));
    assert_eq!(w["grid"][0][0], 1);
    assert_eq!(w["grid"][1][1], 2);

    let tp = s.file("tp.json", r#"{"a":[4,4,4],"t":12}"#);
    let v = ok_json(&lsalloc(&["generate", "--family", "3partition", "--params", tp.to_str().unwrap()], None));
    assert_eq!(v["n"], 6);

    let sat = s.file(
        "f.json",
        r#"{"num_vars":6,"clauses":[[1,2,3],[1,2,4],[3,5,6],[4,5,6],[-1,-2,-3],[-1,-2,-4],[-3,-5,-6],[-4,-5,-6]]}"#,
    );
    let v = ok_json(&lsalloc(&["generate", "--family", "3sat", "--params", sat.to_str().unwrap()], None));
    assert_eq!(v["n"], 38);
    let w = ok_json(&lsalloc(
        &["witness", "--family", "3sat", "--params", sat.to_str().unwrap()],
        Some(r#"{"assignment":[true,false,true,true,true,false]}"#),
    ));
    assert_eq!(w["n"], 38);

    let pls = ok_json(&lsalloc(&["generate", "--family", "pls"], Some(r#"{"n":2,"grid":[[0,0],[0,0]]}"#)));
    assert_eq!(pls["values"][1][1][1], 1);
}

#[test]
fn errors_are_one_line_json() {
    let e = err_json(&lsalloc(&["frobnicate"], None), 1);
    assert_eq!(e["error"], "usage");
    let e = err_json(&lsalloc(&["lp", "--bogus-flag"], None), 1);
    assert_eq!(e["error"], "usage");
    let e = err_json(&lsalloc(&["lp"], Some("{not json")), 1);
    assert_eq!(e["error"], "json");
    let e = err_json(&lsalloc(&["lp"], Some(r#"{"n":3,"values":[[[0]]]}"#)), 1);
    assert_eq!(e["error"], "dimension_mismatch");
    let e = err_json(&lsalloc(&["check", "--notion", "EFY", "--in", "/nonexistent"], Some(EX1)), 1);
    assert_eq!(e["error"], "io");
    let big = format!(r#"{{"n":5,"values":{}}}"#, serde_json::to_string(&vec![vec![vec![1; 5]; 5]; 5]).unwrap());
    let e = err_json(&lsalloc(&["exact", "--mode", "partial"], Some(&big)), 2);
    assert_eq!(e["error"], "oracle_limit");
    let s = Sandbox::new();
    let clash = s.file("clash.json", r#"{"n":2,"grid":[[1,1],[0,0]]}"#);
    let e = err_json(&lsalloc(&["extend", "--in", clash.to_str().unwrap()], Some(EX1)), 1);
    assert_eq!(e["error"], "infeasible");
    let e = err_json(&lsalloc(&["solve", "--algorithm", "partial-approx", "--seed", "1", "--derandomize"], Some(EX1)), 1);
    assert_eq!(e["error"], "usage");
}

#[test]
fn bench_header_and_determinism() {
    let out = lsalloc(&["bench"], Some("{}"));
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "family,n,seed,algorithm,value,lp_bound,oracle_value,ratio,wall_ms\n");
    let cfg = r#"{"families":["random","example1"],"sizes":[3],"seeds":[1,2],"timing":false}"#;
    let a = lsalloc(&["bench"], Some(cfg));
    let b = lsalloc(&["bench", "--threads", "2"], Some(cfg));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 4 + 2 * 4);
}

#[test]
fn round_trip_through_cli() {
    let v = ok_json(&lsalloc(&["generate", "--family", "pls"], Some(r#"{"n":3,"grid":[[1,0,0],[0,2,0],[0,0,0]]}"#)));
    let text = v.to_string();
    let again = ok_json(&lsalloc(&["generate", "--family", "pls"], Some(r#"{"n":3,"grid":[[1,0,0],[0,2,0],[0,0,0]]}"#)));
    assert_eq!(again.to_string(), text);
    let inst = lsalloc::Instance::from_json(&text).unwrap();
    assert_eq!(lsalloc::Instance::from_json(&inst.to_json()).unwrap(), inst);
}
