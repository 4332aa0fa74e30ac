use std::path::Path;
use std::process::{Command, Output};

use ddid_cli::generate::{generate, write_all, FamilyKind, GenSpec};
use ddid_cli::instance_file::{FamilySpec, InstanceFile, Variant};
use ddid_core::oracle::{cu_bruteforce, OracleLimits};

fn ddid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddid")).args(args).env_remove("DDID_TIME_LIMIT").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const CU_A: &str =
    r#"{"variant":"CU","n":6,"c":[1,2,3,4,5,6],"p":3,"b":1,"gamma":2,"family":{"kind":"selection","q":2}}"#;
const CU_A_Q0: &str =
    r#"{"variant":"CU","n":6,"c":[1,2,3,4,5,6],"p":3,"b":1,"gamma":2,"family":{"kind":"selection","q":0}}"#;
const OU_A_KP: &str = r#"{"variant":"OU","n":4,"c_bar":[1,2,3,4],"c_hat":[10,1,1,1],"gamma":1,"family":{"kind":"knapsack","a":[5,1,1,1],"C":2}}"#;

#[test]
fn solve_anchor_instances() {
    let dir = tempfile::tempdir().unwrap();
    let cu = write(dir.path(), "cu.json", CU_A);
    let o = ddid(&["solve", &cu, "--algo", "theorem"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["value"], 8.0);
    assert_eq!(v["status"], "optimal");
    assert_eq!(v["query_set"], serde_json::json!([2, 3]));
    assert!(v["time_s"].as_f64().unwrap() >= 0.0);

    for algo in ["milp", "bruteforce"] {
        let v = json(&ddid(&["solve", &cu, "--algo", algo]));
        assert_eq!(v["value"], 8.0, "{algo}");
    }

    let ou = write(dir.path(), "ou.json", OU_A_KP);
    let o = ddid(&["solve", &ou, "--algo", "alg1"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["value"], 2.0);
    assert_eq!(v["query_set"], serde_json::json!([2]));
    // Alg1 is the default for OU knapsack instances.
    let d = json(&ddid(&["solve", &ou]));
    assert_eq!((&d["value"], &d["query_set"]), (&v["value"], &v["query_set"]));
}

#[test]
fn infeasible_instance_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "q0.json", CU_A_Q0);
    let o = ddid(&["solve", &f]);
    assert_eq!(o.status.code(), Some(2));
    let v = json(&o);
    assert!(v["value"].is_null());
    assert_eq!(v["status"], "infeasible");
}

#[test]
fn bad_inputs_are_diagnosed() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.json", r#"{"variant":"CU","n":6,"#);
    let o = ddid(&["solve", &f]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("malformed instance JSON"));

    let f = write(
        dir.path(),
        "short.json",
        r#"{"variant":"CU","n":3,"c":[1,2],"p":1,"b":0,"gamma":1,"family":{"kind":"selection","q":1}}"#,
    );
    let o = ddid(&["solve", &f]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("expected n = 3"));

    // Incompatible method and family is a usage error.
    let cu = write(dir.path(), "cu.json", CU_A);
    let o = ddid(&["solve", &cu, "--algo", "alg1"]);
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&o.stderr).contains("does not apply"));
    let ou = write(dir.path(), "ou.json", OU_A_KP);
    assert_eq!(ddid(&["solve", &ou, "--algo", "theorem"]).status.code(), Some(64));
    assert_eq!(ddid(&["solve", &cu, "--backend", "gurobi"]).status.code(), Some(64));
    assert_eq!(ddid(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(ddid(&["generate", "--n", "21", "--out", dir.path().to_str().unwrap()]).status.code(), Some(64));
    assert_eq!(ddid(&["verify", "--max-n", "30"]).status.code(), Some(64));
}

#[test]
fn lp_file_backend_writes_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let cu = write(dir.path(), "cu.json", CU_A);
    let lp = dir.path().join("model.lp");
    let backend = format!("lpfile:{}", lp.display());
    let o = ddid(&["solve", &cu, "--algo", "milp", "--backend", &backend]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["status"], "error");
    let text = std::fs::read_to_string(&lp).unwrap();
    assert!(text.contains("w_1"));
}

#[test]
fn generation_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = ddid(&["generate", "--seed", "42", "--n", "20", "--count", "10", "--out", d.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    // Two p rules times two Γ rules.
    assert_eq!(names.len(), 40);
    for name in names {
        let x = std::fs::read(a.path().join(&name)).unwrap();
        let y = std::fs::read(b.path().join(&name)).unwrap();
        assert_eq!(x, y, "{name:?}");
        let f = InstanceFile::parse(std::str::from_utf8(&x).unwrap()).unwrap();
        assert_eq!(f.n, 20);
        let meta = f.meta.unwrap();
        assert_eq!((meta.rng.as_str(), meta.seed), ("ChaCha20", 42));
    }
    let other = GenSpec { seed: 43, ns: vec![20], ..GenSpec::default() };
    let base = GenSpec { seed: 42, ns: vec![20], ..GenSpec::default() };
    assert_ne!(generate(&other).unwrap(), generate(&base).unwrap());
}

#[test]
fn one_cell_of_ten() {
    let spec = GenSpec { ns: vec![20], p_divs: vec![10], gamma_divs: vec![10], count: 10, ..GenSpec::default() };
    let files = generate(&spec).unwrap();
    assert_eq!(files.len(), 10);
    assert!(files.iter().all(|f| f.n == 20 && f.p == Some(2) && f.gamma == 2));
    for f in &files {
        f.load().unwrap();
        assert_eq!(InstanceFile::parse(&f.to_json()).unwrap(), *f);
    }
}

#[test]
fn generated_values_stay_in_range() {
    for (variant, family) in
        [(Variant::Cu, FamilyKind::Knapsack), (Variant::Ou, FamilyKind::Knapsack), (Variant::Cu, FamilyKind::Selection)]
    {
        let spec = GenSpec {
            seed: 9,
            ns: vec![10, 20],
            p_divs: vec![5],
            gamma_divs: vec![5],
            count: 340,
            variant,
            family,
            q_div: 5,
        };
        let mut draws = 0;
        let mut seen_lo = false;
        let mut seen_hi = false;
        for f in generate(&spec).unwrap() {
            let n = f.n;
            let vectors: Vec<&Vec<f64>> = [&f.c, &f.c_bar, &f.c_hat].into_iter().flatten().collect();
            for v in vectors.iter().copied().chain(match &f.family {
                FamilySpec::Knapsack { a, .. } => Some(a),
                _ => None,
            }) {
                assert_eq!(v.len(), n);
                for &x in v {
                    assert!(x == x.trunc() && (0.0..=50.0).contains(&x), "{x}");
                    seen_lo |= x == 0.0;
                    seen_hi |= x == 50.0;
                    draws += 1;
                }
            }
            if variant == Variant::Cu {
                let b = f.b.unwrap();
                assert!((1..=n).contains(&b));
            }
            match &f.family {
                FamilySpec::Knapsack { a, capacity } => {
                    let total: f64 = a.iter().sum();
                    assert!(*capacity >= 1.0 && *capacity <= total.max(1.0) && *capacity == capacity.trunc());
                }
                FamilySpec::Selection { q } => assert_eq!(*q, n / 5),
                FamilySpec::Explicit { .. } => unreachable!(),
            }
        }
        assert!(draws >= 10_000, "{draws}");
        assert!(seen_lo && seen_hi, "both endpoints are drawn");
    }
}

#[test]
fn divisibility_is_required() {
    let spec = GenSpec { ns: vec![25], p_divs: vec![10], ..GenSpec::default() };
    assert!(spec.validate().is_err());
    let spec = GenSpec { ns: vec![20], count: 0, ..GenSpec::default() };
    assert!(spec.validate().is_err());
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn bench_small_cell_cross_checks() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("records.jsonl");
    let o = ddid(&[
        "bench",
        "--seed",
        "3",
        "--n",
        "20",
        "--p-div",
        "10",
        "--gamma-div",
        "10",
        "--jobs",
        "2",
        "--time-limit",
        "60",
        "--records",
        rec.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0].join(","), "n,p,gamma,avg_time_s,n_solved,n_timeout,n_infeasible");
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[1][..3], ["20", "2", "2"]);
    assert_eq!(&rows[1][4..], ["10", "0", "0"]);

    // Every value agrees with enumeration.
    let spec = GenSpec { seed: 3, ns: vec![20], p_divs: vec![10], gamma_divs: vec![10], ..GenSpec::default() };
    let files = generate(&spec).unwrap();
    let records: Vec<serde_json::Value> =
        std::fs::read_to_string(&rec).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 10);
    let lim = OracleLimits { max_n: 20, max_subsets: 1 << 22 };
    for (f, r) in files.iter().zip(&records) {
        assert_eq!(r["id"], f.id.clone().unwrap());
        assert_eq!(r["backend"], "builtin");
        assert_eq!(r["c_digest"], f.cost_digest());
        let loaded = f.load().unwrap();
        let ddid_cli::instance_file::Problem::Cu(inst) = &loaded.problem else { unreachable!() };
        let bf = cu_bruteforce(inst, &loaded.family, &lim).unwrap().map(|s| s.1);
        assert_eq!(r["value"].as_f64(), bf, "{}", r["id"]);
    }
}

#[test]
fn bench_counts_infeasible_and_timeouts() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.json", CU_A);
    write(dir.path(), "b.json", CU_A_Q0);
    let o = ddid(&["bench", "--instances", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][0..3], ["6", "3", "2"]);
    assert_eq!(rows[1][4..], ["1", "0", "1"]);

    // Large nontrivial instances cannot finish in a millisecond.
    let spec = GenSpec { seed: 5, ns: vec![100], p_divs: vec![5], gamma_divs: vec![5], count: 3, ..GenSpec::default() };
    let mut files = generate(&spec).unwrap();
    for f in &mut files {
        f.b = Some(1);
    }
    let big = tempfile::tempdir().unwrap();
    write_all(&files, big.path()).unwrap();
    let rec = big.path().join("records.jsonl");
    let o = Command::new(env!("CARGO_BIN_EXE_ddid"))
        .args(["bench", "--instances", big.path().to_str().unwrap(), "--records", rec.to_str().unwrap()])
        .env("DDID_TIME_LIMIT", "0.001")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[1], ["100", "20", "20", "0.001000", "0", "3", "0"]);
    for line in std::fs::read_to_string(&rec).unwrap().lines() {
        let r: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(r["status"], "timeout");
        assert_eq!(r["time_s"], 0.001);
    }
}

#[test]
fn bench_rows_match_cells() {
    let o = ddid(&["bench", "--variant", "ou", "--n", "20,40", "--gamma-div", "10,5", "--count", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1 + 4);
    for r in &rows[1..] {
        assert_eq!(r[1], "");
        assert_eq!(r[4], "4");
    }
}

#[test]
fn verify_passes_and_is_deterministic() {
    let a = ddid(&["verify", "--trials", "60", "--seed", "11"]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    let b = ddid(&["verify", "--trials", "60", "--seed", "11"]);
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).ends_with("21 suites, 0 failed\n"));
}

#[test]
fn verify_defaults_pass() {
    let o = ddid(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("verify: max_n=8 trials=200 seed=0\n"));
}

#[test]
fn verify_catches_a_planted_bug() {
    let o = ddid(&["verify", "--trials", "50", "--inject", "psi-off-by-one"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("FAIL ou/closed-form-vs-enumeration"), "{out}");
    assert!(out.contains("minimal counterexample"));
}
