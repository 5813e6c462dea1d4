use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn setcsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_setcsp"))
        .args(args)
        .env_remove("SETCSP_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "{e}: {}\n{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn compile_to(dir: &TempDir, circuit: &str) -> String {
    let path = dir.path().join(format!("{circuit}.json"));
    let out = setcsp(&[
        "compile",
        fixture(&format!("circuits/{circuit}")).to_str().unwrap(),
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    path.to_string_lossy().into_owned()
}

#[test]
fn compile_four_wire_example() {
    let dir = TempDir::new().unwrap();
    let labels = dir.path().join("labels.json");
    let out = setcsp(&[
        "compile",
        fixture("circuits/four_wire.circuit").to_str().unwrap(),
        "--labels",
        labels.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let inst = json(&out);
    assert_eq!(inst["n"], 7);
    assert_eq!(inst["constraints"].as_array().unwrap().len(), 6);
    let labels: Vec<String> =
        serde_json::from_str(&std::fs::read_to_string(labels).unwrap()).unwrap();
    assert_eq!(
        labels,
        ["clock:0", "clock:1", "prop:1", "prop:2", "prop:3", "out"]
    );
}

#[test]
fn compile_rejects_bad_circuits() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.circuit");
    std::fs::write(&bad, "circuit p=2 a=0 q=0\nNOT 0\nCNOT 0\n").unwrap();
    let out = setcsp(&["compile", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));

    let single = dir.path().join("single.circuit");
    std::fs::write(&single, "circuit p=1 a=0 q=0\nNOT 0\n").unwrap();
    let out = setcsp(&["compile", single.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unsupported"));
    assert!(stderr(&out).contains("pad circuit"));
}

#[test]
fn embed_and_decide() {
    let out = setcsp(&["embed", fixture("xor.csp.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let inst = json(&out);
    let groups = inst["constraints"][0]["y"].as_array().unwrap();
    assert_eq!(groups.len(), 2);
    assert!(groups.iter().all(|g| g.as_array().unwrap().len() == 1));

    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{"n": 2, "constraints": []}"#).unwrap();
    assert_eq!(
        setcsp(&["embed", empty.to_str().unwrap()]).status.code(),
        Some(2)
    );

    let embedded = dir.path().join("sat3.json");
    let out = setcsp(&[
        "embed",
        fixture("sat3.csp.json").to_str().unwrap(),
        "--output",
        embedded.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = setcsp(&["decide", embedded.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["result"], "satisfiable");
}

#[test]
fn eval_history_and_singletons() {
    let dir = TempDir::new().unwrap();
    let inst = compile_to(&dir, "four_wire.circuit");
    let out = setcsp(&[
        "eval",
        &inst,
        fixture("history_four_wire.set").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["total"], "0/1");

    let xor = dir.path().join("xor.json");
    std::fs::write(
        &xor,
        setcsp(&["embed", fixture("xor.csp.json").to_str().unwrap()]).stdout,
    )
    .unwrap();
    for (s, expected) in [("00", "1/1"), ("01", "0/1")] {
        let set = dir.path().join("one.set");
        std::fs::write(&set, format!("{s}\n")).unwrap();
        let out = setcsp(&["eval", xor.to_str().unwrap(), set.to_str().unwrap()]);
        assert_eq!(json(&out)["total"], expected, "{s}");
    }

    let empty = dir.path().join("empty.set");
    std::fs::write(&empty, "# nothing\n").unwrap();
    assert_eq!(
        setcsp(&["eval", &inst, empty.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    let dup = dir.path().join("dup.set");
    std::fs::write(&dup, "0001110\n0001110\n").unwrap();
    assert_eq!(
        setcsp(&["eval", &inst, dup.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn decide_always_reject_is_unsatisfiable() {
    let dir = TempDir::new().unwrap();
    let inst = compile_to(&dir, "always_reject.circuit");
    let out = setcsp(&["decide", &inst]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["result"], "unsatisfiable");
    let out = setcsp(&["brutemin", &inst]);
    let min = json(&out)["min"].as_str().unwrap().to_owned();
    let (p, q) = min.split_once('/').unwrap();
    let (p, q): (u64, u64) = (p.parse().unwrap(), q.parse().unwrap());
    // At least the soundness bound 1/(10 (T+1) q m) = 1/180.
    assert!(180 * p >= q, "{min}");
}

#[test]
fn verify_accepts_clean_witness_and_needs_a_seed() {
    let dir = TempDir::new().unwrap();
    let inst = compile_to(&dir, "four_wire.circuit");
    let args = [
        "verify",
        inst.as_str(),
        "--witness",
        "0001110",
        "--epsilon",
        "1/4",
    ];
    assert_eq!(setcsp(&args).status.code(), Some(2));
    let out = setcsp(&[&args[..], &["--seed", "5"]].concat());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(json(&out)["verdict"], "accept");

    let out = setcsp(&[
        "verify",
        inst.as_str(),
        "--witness",
        "0001110",
        "--seed",
        "5",
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "instance without epsilon needs --epsilon"
    );
}

#[test]
fn verify_rejects_on_the_frustrated_instance() {
    let input = fixture("frustrated4.json");
    let out = setcsp(&[
        "verify",
        input.to_str().unwrap(),
        "--witness",
        "0011",
        "--seed",
        "9",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["verdict"], "reject");
    assert!(v["first_hit_trial"].is_u64());
}

#[test]
fn conductance_of_cube() {
    let out = setcsp(&[
        "conductance",
        fixture("hypercube3.graph.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["conductance"], "1/3");
}

#[test]
fn reduce_then_escape_check() {
    let dir = TempDir::new().unwrap();
    let graph = dir.path().join("g.json");
    let out = setcsp(&[
        "reduce",
        fixture("frustrated4.json").to_str().unwrap(),
        "--output",
        graph.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let g: Value = serde_json::from_str(&std::fs::read_to_string(&graph).unwrap()).unwrap();
    assert_eq!(g["epsilon"], "1/8");
    assert_eq!(g["degree_bound"], 4);
    assert_eq!(g["marked"].as_array().unwrap().len(), 12);

    let out = setcsp(&[
        "escape-check",
        fixture("hypercube3.graph.json").to_str().unwrap(),
        "--set",
        "1,2,3,4,5,6,7",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["status"]["result"], "holds");
}

#[test]
fn runs_replay_byte_for_byte() {
    let dir = TempDir::new().unwrap();
    let manifest = dir.path().join("m.json");
    let input = fixture("frustrated4.json");
    let args = [
        "verify",
        input.to_str().unwrap(),
        "--witness",
        "1111",
        "--audit",
        "--trials-override",
        "50",
        "--manifest",
        manifest.to_str().unwrap(),
    ];
    let run = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_setcsp"))
            .args(args)
            .env("SETCSP_SEED", seed)
            .output()
            .unwrap()
    };
    let first = run("21");
    let m: Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["subcommand"], "verify");
    assert_eq!(m["seed"], 21);
    assert_eq!(m["parameters"]["trials_override"], 50);
    let argv: Vec<String> = m["argv"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a.as_str().unwrap().to_owned())
        .collect();
    let replay = Command::new(&argv[0])
        .args(&argv[1..])
        .env("SETCSP_SEED", m["seed"].to_string())
        .output()
        .unwrap();
    assert_eq!(first.stdout, replay.stdout);
    assert_eq!(json(&first)["trials"], 50);
}
