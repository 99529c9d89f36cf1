// Acceptance suite. Runs without the libtest harness so that every
// criterion prints exactly one PASS/FAIL line, then exits non-zero if any
// failed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use jointprob::behavior::{enumerate_deterministic_vertices, pr_box, Behavior, Scenario};
use jointprob::certificate::CertificateFile;
use jointprob::induction::{estimate_m, ToyMachineConfig};
use jointprob::io::{read_behavior, BehaviorFile};
use jointprob::membership::{encode_lf, sample_mixture};
use jointprob::rational::{int, parse_rational, ratio, Rational, RationalizeOptions};
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_jointprob");

struct Run {
    code: i32,
    stdout: String,
}

/// In-process CLI call.
fn cli(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("jointprob").chain(args.iter().copied());
    let code = jointprob::cli::run(argv, &mut out, &mut err);
    if code == 1 || code == 2 {
        panic!("{args:?} exited {code}: {}", String::from_utf8_lossy(&err));
    }
    Run {
        code,
        stdout: String::from_utf8(out).expect("utf-8 output"),
    }
}

fn cli_json(args: &[&str]) -> (i32, Value) {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    let r = cli(&full);
    (r.code, serde_json::from_str(&r.stdout).expect("json report"))
}

/// Subprocess CLI call; returns exit code and raw stdout bytes.
fn binary(args: &[&str]) -> (i32, Vec<u8>) {
    let o = Command::new(BIN).args(args).output().expect("spawn binary");
    (o.status.code().unwrap_or(-1), o.stdout)
}

fn q(v: &Value) -> Rational {
    parse_rational(v.as_str().expect("rational string"), &RationalizeOptions::default()).expect("rational")
}

fn write(dir: &Path, name: &str, b: &Behavior) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, BehaviorFile::from_behavior(b).to_json()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

// Binary 2x2 deterministic boxes by hand: a_x, b_y bits.
fn hand_vertices() -> Vec<Behavior> {
    let sc = Scenario::binary(2, 2);
    let mut out = Vec::new();
    for bits in 0u32..16 {
        let a = [bits & 1, (bits >> 1) & 1];
        let b = [(bits >> 2) & 1, (bits >> 3) & 1];
        let t = Behavior::from_fn(sc, |x, y, oa, ob| {
            int(i64::from(oa as u32 == a[x - 1] && ob as u32 == b[y - 1]))
        });
        out.push(t);
    }
    out
}

fn c1_fine(dir: &Path) -> String {
    let sc = Scenario::binary(2, 2);
    let verts = enumerate_deterministic_vertices(&sc, 1 << 20).unwrap();
    let mut cases: Vec<Behavior> = hand_vertices();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    cases.extend((0..200).map(|_| sample_mixture(sc, &verts, &mut rng)));
    let mut infeasible = 0;
    for (i, b) in cases.iter().enumerate() {
        let p = write(dir, &format!("c1_{i}.json"), b);
        let j = cli(&["check-joint", s(&p)]).code;
        let l = cli(&["check-ld", s(&p)]).code;
        assert_eq!(j, l, "case {i}: check-joint exit {j}, check-ld exit {l}");
        infeasible += usize::from(l == 3);
    }
    format!("216 cases agree, {infeasible} infeasible")
}

fn c2_pr_box(dir: &Path) -> String {
    let p = write(dir, "pr.json", &pr_box());
    for cmd in ["check-joint", "check-ld"] {
        let (code, j) = cli_json(&[cmd, s(&p)]);
        assert_eq!(code, 3, "{cmd}");
        assert_eq!(j["verified"], Value::Bool(true));
        assert_eq!(j["certificate"]["verdict"], "infeasible");
    }
    let (code, j) = cli_json(&["extract-ineq", s(&p), "--test", "ld"]);
    assert_eq!(code, 3);
    let n = &j["normalized"];
    let eval = |b: &Behavior| -> Rational {
        let mut acc = Rational::zero();
        for x in 1..=2 {
            for y in 1..=2 {
                let rows = &n["coefficients"][format!("{x},{y}")];
                for a in 0..2 {
                    for bb in 0..2 {
                        acc += q(&rows[a][bb]) * b.p(x, y, a, bb);
                    }
                }
            }
        }
        acc
    };
    let best = hand_vertices().iter().map(eval).max().unwrap();
    assert!(best <= int(2), "vertex max {best}");
    assert_eq!(eval(&pr_box()), int(4));
    format!("certificates verified; functional max on vertices {best}, PR box 4")
}

fn c3_sequential() -> String {
    let (code, j) = cli_json(&["ld-sw-test", "--settings-a", "2", "--settings-b", "2", "--samples", "200", "--seed", "7"]);
    assert_eq!(code, 0);
    assert_eq!(j["reversals"], 1);
    assert_eq!(j["vertices_checked"], 16);
    assert_eq!(j["samples_checked"], 200);
    assert_eq!(j["disagreements"].as_array().unwrap().len(), 0);
    format!("0 disagreements over 16 vertices + 200 samples ({} infeasible)", j["infeasible_cases"])
}

fn c4_chsh() -> String {
    let (_, e) = cli_json(&["quantum", "optimize", "--seed", "1"]);
    let v = e["value"].as_f64().unwrap();
    assert!(v >= 2.828427 - 1e-6, "entangled {v}");
    let mut worst = 0.0f64;
    for seed in 1..=3 {
        let (_, p) = cli_json(&["quantum", "optimize", "--seed", &seed.to_string(), "--product"]);
        worst = worst.max(p["value"].as_f64().unwrap());
    }
    assert!(worst <= 2.0 + 1e-9, "product {worst}");
    format!("entangled {v:.9}, product max {worst:.9}")
}

fn c5_lf(dir: &Path) -> String {
    let out = dir.join("lf.json");
    let (code, j) = cli_json(&["quantum", "lf-search", "--seed", "2024", "--budget", "1000", "--behavior-out", s(&out)]);
    assert_eq!(code, 3);
    let beh = read_behavior(&out, &RationalizeOptions::default()).unwrap();
    assert!(beh.scenario().friend_on_a && beh.scenario().settings_a == 3 && beh.scenario().settings_b == 3);
    // re-encode and check the Farkas conditions here, densely
    let (enc, _) = encode_lf(&beh).unwrap();
    let p = &enc.problem;
    let cert: CertificateFile = serde_json::from_value(j["check"]["certificate"].clone()).unwrap();
    let CertificateFile::Infeasible { functional } = cert else {
        panic!("search returned a feasible certificate");
    };
    let y: Vec<Rational> = functional.iter().map(|t| q(&Value::String(t.clone()))).collect();
    assert_eq!(y.len(), p.rows().len());
    let mut ya = vec![Rational::zero(); p.variable_count()];
    let mut yb = Rational::zero();
    for (row, yi) in p.rows().iter().zip(&y) {
        for (col, c) in &row.coeffs {
            ya[*col] += c * yi;
        }
        yb += &row.rhs * yi;
    }
    for (col, v) in ya.iter().enumerate() {
        assert!(if p.is_nonnegative(col) { !v.is_negative() } else { v.is_zero() }, "column {col}");
    }
    assert!(yb.is_negative());
    // and the standalone checker agrees on the written file
    assert_eq!(cli(&["check-lf", s(&out)]).code, 3);
    format!("found at candidate {}, yb = {yb}", j["index"])
}

fn c6_duplication() -> String {
    for n in 1..=8u64 {
        let (_, j) = cli_json(&["dup", "binomial", "--N", &n.to_string(), "--M", "2"]);
        assert_eq!(q(&j["tails"]), ratio(1, 3), "N={n}");
    }
    for m in 1..=10i64 {
        for n in [1u64, 4] {
            let (_, j) = cli_json(&["dup", "binomial", "--N", &n.to_string(), "--M", &m.to_string()]);
            assert_eq!(q(&j["tails"]), ratio(1, m + 1), "M={m} N={n}");
        }
        let (code, j) = cli_json(&["dup", "cp-check", "--M", &m.to_string(), "--rule-f", "elga", "--rule-w", "reflection"]);
        assert_eq!(q(&j["freya_tails"]), ratio(1, m + 1));
        assert_eq!(q(&j["wigner_tails"]), ratio(1, 2));
        assert_eq!(code, if m == 1 { 0 } else { 3 }, "M={m}");
        let (code, _) = cli_json(&["dup", "cp-check", "--M", &m.to_string(), "--rule-f", "reflection", "--rule-w", "reflection"]);
        assert_eq!(code, 0);
    }
    "P(T) = 1/(M+1) for all grid points; inconsistency flagged exactly for M >= 2".into()
}

fn c7_monte_carlo() -> String {
    let (_, j) = cli_json(&[
        "dup", "simulate", "--N", "200", "--M", "2", "--runs", "10000", "--seed", "11", "--eps", "1/20",
    ]);
    let eps = ratio(1, 20);
    let want = [
        ("freya", "tails_fraction", ratio(1, 3)),
        ("wigner", "tails_fraction", ratio(1, 2)),
        ("freya", "mean_profit", eps.clone()),
        ("wigner", "mean_profit", eps - ratio(1, 6)),
    ];
    let mut zs = Vec::new();
    for (role, quantity, exact) in want {
        let e = j["estimates"]
            .as_array()
            .unwrap()
            .iter()
            .find(|e| e["role"] == role && e["quantity"] == quantity)
            .unwrap();
        assert_eq!(q(&e["exact"]), exact, "{role} {quantity}");
        let truth = jointprob::rational::to_f64(&exact);
        let z = (e["empirical"].as_f64().unwrap() - truth) / e["std_error"].as_f64().unwrap();
        assert!(z.abs() <= 4.0, "{role} {quantity}: z = {z}");
        zs.push(format!("{role}/{quantity} z={z:.2}"));
    }
    zs.join(", ")
}

fn c8_induction() -> String {
    let cfg = ToyMachineConfig::new(14, 10_000).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let lx = rng.random_range(0..10);
        let ly = rng.random_range(1..6);
        let x: Vec<bool> = (0..lx).map(|_| rng.random()).collect();
        let mut xy = x.clone();
        xy.extend((0..ly).map(|_| rng.random::<bool>()));
        assert!(estimate_m(&xy, &cfg).unwrap().mass() <= estimate_m(&x, &cfg).unwrap().mass());
    }
    let mut prev = Rational::zero();
    for n in [2usize, 4, 8, 12] {
        let (_, j) = cli_json(&["induct", "cond", &"1".repeat(n), "1111", "--max-len", "14"]);
        let v = q(&j["conditional"]);
        assert!(v >= prev, "n={n}: {v} < {prev}");
        prev = v;
    }
    let x = "01".repeat(8);
    let bb = |rule: &str| {
        cli_json(&[
            "induct", "bb", "--x", &x, "--y-oo", "01010101", "--seed", "7", "--n-oo", "1", "--n-bb", "1000",
            "--rule", rule, "--max-len", "14",
        ])
        .1
    };
    assert_eq!(q(&bb("indifference")["p_bb"]), ratio(1000, 1001));
    let ind = bb("induction");
    let (po, pb) = (q(&ind["p_oo"]), q(&ind["p_bb"]));
    assert!(po > pb, "P(OO) {po} vs P(BB) {pb}");
    format!("100 pairs monotone; conditional ends at {prev}; induction P(OO) = {po}")
}

fn c9_reproducible(dir: &Path) -> String {
    let rows = |tag: &str| dir.join(format!("rows_{tag}.csv"));
    let lf = |tag: &str| dir.join(format!("lf_{tag}.json"));
    let commands: Vec<(&str, Box<dyn Fn(&str) -> Vec<String>>)> = vec![
        ("ld-sw-test", Box::new(|_: &str| sv(&["ld-sw-test", "--samples", "50", "--seed", "3"]))),
        ("quantum optimize", Box::new(|_: &str| sv(&["quantum", "optimize", "--seed", "5", "--iterations", "4000"]))),
        (
            "quantum lf-search",
            Box::new(move |t: &str| {
                let mut v = sv(&["quantum", "lf-search", "--seed", "9", "--budget", "50", "--behavior-out"]);
                v.push(s(&lf(t)).to_string());
                v
            }),
        ),
        (
            "dup simulate",
            Box::new(move |t: &str| {
                let mut v = sv(&["dup", "simulate", "--N", "30", "--M", "3", "--runs", "500", "--seed", "2", "--rows-out"]);
                v.push(s(&rows(t)).to_string());
                v
            }),
        ),
        ("induct bb", Box::new(|_: &str| sv(&["induct", "bb", "--x", "0110", "--y-oo", "0110", "--seed", "4", "--max-len", "12"]))),
    ];
    let mut checked = 0;
    for (name, make) in &commands {
        for fmt in ["json", "csv"] {
            let mut outputs = Vec::new();
            for tag in ["a", "b"] {
                let mut args = vec!["--format".to_string(), fmt.to_string()];
                args.extend(make(&format!("{fmt}_{tag}")));
                let refs: Vec<&str> = args.iter().map(String::as_str).collect();
                let (code, out) = binary(&refs);
                assert!(code == 0 || code == 3, "{name}: exit {code}");
                outputs.push(out);
            }
            assert_eq!(outputs[0], outputs[1], "{name} --format {fmt}");
            checked += 1;
        }
    }
    for fmt in ["json", "csv"] {
        let read = |p: PathBuf| std::fs::read(p).unwrap();
        assert_eq!(read(rows(&format!("{fmt}_a"))), read(rows(&format!("{fmt}_b"))));
        assert_eq!(read(lf(&format!("{fmt}_a"))), read(lf(&format!("{fmt}_b"))));
        checked += 2;
    }
    format!("{checked} output pairs byte-identical")
}

fn sv(a: &[&str]) -> Vec<String> {
    a.iter().map(|s| s.to_string()).collect()
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let dir = tmp.path();
    type Check<'a> = Box<dyn Fn() -> String + 'a>;
    let criteria: Vec<(u32, &str, Duration, Check)> = vec![
        (1, "joint/LD agreement", Duration::from_secs(60), Box::new(|| c1_fine(dir))),
        (2, "PR box infeasible, tight inequality", Duration::from_secs(60), Box::new(|| c2_pr_box(dir))),
        (3, "LD/sequential equivalence", Duration::from_secs(300), Box::new(c3_sequential)),
        (4, "quantum CHSH", Duration::from_secs(60), Box::new(c4_chsh)),
        (5, "certified LF violation", Duration::from_secs(900), Box::new(|| c5_lf(dir))),
        (6, "duplication exact calculus", Duration::from_secs(5), Box::new(c6_duplication)),
        (7, "duplication Monte Carlo", Duration::from_secs(120), Box::new(c7_monte_carlo)),
        (8, "induction toy", Duration::from_secs(600), Box::new(c8_induction)),
        (9, "reproducibility", Duration::from_secs(600), Box::new(|| c9_reproducible(dir))),
    ];
    // keep panic messages for the summary lines only
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, name, limit, check) in &criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check));
        let took = start.elapsed();
        let line = match result {
            Ok(detail) if took <= *limit => format!("PASS criterion {n} ({name}): {detail} [{:.1}s]", took.as_secs_f64()),
            Ok(detail) => {
                failed += 1;
                format!("FAIL criterion {n} ({name}): over time limit {limit:?}; {detail} [{:.1}s]", took.as_secs_f64())
            }
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                format!("FAIL criterion {n} ({name}): {msg} [{:.1}s]", took.as_secs_f64())
            }
        };
        println!("{line}");
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
