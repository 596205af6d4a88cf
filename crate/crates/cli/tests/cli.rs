//! End-to-end tests of the `relgw` binary: frozen command lines, their
//! expected stdout, the exit-code contract, and byte-level determinism.

use std::process::Command;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_relgw"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("no signal"),
        String::from_utf8(out.stdout).expect("utf8 stdout"),
        String::from_utf8(out.stderr).expect("utf8 stderr"),
    )
}

fn stdout_of(args: &[&str]) -> String {
    let (code, out, err) = run(args);
    assert_eq!(code, 0, "{args:?} failed: {err}");
    out
}

#[test]
fn ring_product_pairing_and_overflow() {
    assert_eq!(stdout_of(&["ring", "mult", "--n", "2", "1@1", "1@-1"]), "[H]@0\n");
    assert_eq!(stdout_of(&["ring", "pair", "--n", "2", "1@1", "h^1@-1"]), "1\n");

    let (code, _, err) = run(&["ring", "mult", "--n", "2", "1@1", "1@2", "--window", "2"]);
    assert_eq!(code, 3, "window overflow must exit 3");
    assert!(err.contains("overflows"));

    let (code, _, _) = run(&["ring", "mult", "--n", "2", "1@@1", "1@1"]);
    assert_eq!(code, 2, "parse errors must exit 2");
}

#[test]
fn ring_degree_and_table() {
    assert_eq!(stdout_of(&["ring", "degree", "--n", "2", "h@2"]), "(2, 1)\n");

    let out = stdout_of(&["ring", "table", "--n", "1", "--window", "1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["n"], 1);
    assert!(v["entries"].as_array().unwrap().len() > 4);
}

#[test]
fn graph_commands_cover_dimensions_and_classes() {
    assert_eq!(
        stdout_of(&["graphs", "vdim", "--n", "2", "--degree", "1", "--legs", "0", "--mu", "1"]),
        "2\n"
    );

    let (code, _, err) =
        run(&["graphs", "vdim", "--n", "2", "--degree", "1", "--legs", "0", "--mu", "1,1"]);
    assert_eq!(code, 2, "unbalanced contact orders must exit 2");
    assert!(err.contains("sum"));

    let out = stdout_of(&[
        "graphs", "enumerate", "--n", "2", "--degree", "1", "--legs", "0", "--mu", "2,-1",
        "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let list = v.as_array().unwrap();
    assert_eq!(list.len(), 2);
    for g in list {
        assert!(g["aut"].is_u64());
        assert_eq!(g["vdim"], 2);
        assert_eq!(g["class"], serde_json::json!([{"coef": "1", "powers": {}}]));
    }
}

#[test]
fn graph_class_accepts_json_input() {
    let graph = serde_json::json!({
        "n": 2,
        "vertices": [
            {"side": "zero", "degree": 0, "legs": [],
             "roots": [{"weight": 2, "kind": "mark", "label": 1},
                       {"weight": -1, "kind": "mark", "label": 2},
                       {"weight": -1, "kind": "node"}]},
            {"side": "inf", "degree": 1, "legs": [],
             "roots": [{"weight": 1, "kind": "node"}]}
        ],
        "edges": [[[0, 0], [0, 0]]]
    });
    let dir = std::env::temp_dir().join("relgw-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("graph.json");
    std::fs::write(&path, serde_json::to_string(&graph).unwrap()).unwrap();

    let out = stdout_of(&["graphs", "class", "--input", path.to_str().unwrap(), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["aut"], 1);
    assert_eq!(v["class"], serde_json::json!([{"coef": "1", "powers": {}}]));

    std::fs::write(&path, "{\"n\": 2}").unwrap();
    let (code, _, _) = run(&["graphs", "class", "--input", path.to_str().unwrap()]);
    assert_eq!(code, 2, "malformed graph JSON must exit 2");
}

#[test]
fn quantum_product_reproduces_the_seed_relation() {
    assert_eq!(stdout_of(&["quantum", "product", "--n", "2", "1@1", "H^2@0"]), "q * [1]@0\n");
    assert_eq!(
        stdout_of(&["quantum", "product", "--n", "2", "H@0", "H^2@0"]),
        "q * [1]@-1\n"
    );
}

#[test]
fn quantum_verify_reports_zero_mismatches() {
    let out = stdout_of(&["quantum", "verify", "--n", "3", "--window", "4", "--qmax", "3"]);
    assert!(out.starts_with("OK (entries: "), "unexpected report: {out}");
    assert!(out.trim_end().ends_with("mismatches: 0)"));

    let out = stdout_of(&[
        "quantum", "verify", "--n", "2", "--window", "3", "--qmax", "2", "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["mismatches"], serde_json::json!([]));
    assert!(v["determined"].as_u64().unwrap() > 0);
}

#[test]
fn quantum_identities_hold_on_small_inputs() {
    let out = stdout_of(&[
        "quantum", "wdvv", "--n", "2", "--degree", "1", "H@0", "H@0", "H@0", "H@0",
    ]);
    assert_eq!(out, "exchange residual = 0\n");

    let out = stdout_of(&["quantum", "trr", "--n", "2", "--degree", "1", "1:H@0", "H@0", "H^2@0"]);
    assert_eq!(out, "recursion residual = 0\n");

    assert_eq!(
        stdout_of(&["quantum", "threepoint", "--n", "2", "--degree", "0", "H@0", "H@0", "1@0"]),
        "1\n"
    );
}

#[test]
fn virasoro_bracket_symplectic_and_margin() {
    assert_eq!(
        stdout_of(&["virasoro", "bracket", "-1", "1"]),
        "2*l_0 : exact on interior window\n"
    );
    assert_eq!(stdout_of(&["virasoro", "symplectic", "0"]), "max residual = 0\n");

    let (code, _, err) = run(&["virasoro", "bracket", "1", "2", "--zmin", "-1", "--zmax", "1"]);
    assert_eq!(code, 5, "insufficient margin must exit 5");
    assert!(err.contains("window margin"));
}

#[test]
fn virasoro_genus_zero_and_anomaly() {
    let out = stdout_of(&["virasoro", "genus0", "--op", "L-1", "--window", "2", "--qmax", "2"]);
    assert_eq!(out.lines().next().unwrap(), "all determined coefficients vanish");

    let out = stdout_of(&["virasoro", "genus0", "--op", "L0", "--window", "2", "--qmax", "2"]);
    assert_eq!(out.lines().next().unwrap(), "all determined coefficients vanish");

    let out = stdout_of(&["virasoro", "anomaly", "--cutoffs", "2..5", "--format", "json"]);
    let rows: serde_json::Value = serde_json::from_str(&out).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0]["difference"], serde_json::Value::Null);
    let first = rows[1]["difference"].as_str().unwrap();
    assert_ne!(first, "0");
    for row in &rows[2..] {
        assert_eq!(row["difference"].as_str().unwrap(), first);
    }
}

#[test]
fn identical_invocations_give_identical_bytes() {
    let verify = ["quantum", "verify", "--n", "2", "--window", "3", "--qmax", "2", "--format", "json"];
    assert_eq!(stdout_of(&verify), stdout_of(&verify));

    let enumerate = [
        "graphs", "enumerate", "--n", "2", "--degree", "2", "--legs", "1", "--mu", "1,1",
        "--format", "json",
    ];
    assert_eq!(stdout_of(&enumerate), stdout_of(&enumerate));
}

#[test]
fn config_file_defaults_yield_to_flags() {
    let dir = std::env::temp_dir().join("relgw-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("defaults.conf");
    std::fs::write(&path, "n = 3\nwindow = 2\nformat = json\n# comment\n").unwrap();
    let path = path.to_str().unwrap();

    let out = stdout_of(&["--config", path, "ring", "mult", "1@1", "1@-1"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["n"], 3);
    assert_eq!(v["product"], serde_json::json!({"[H]@0": "1"}));

    let out = stdout_of(&["--config", path, "ring", "mult", "1@1", "1@-1", "--n", "2", "--format", "text"]);
    assert_eq!(out, "[H]@0\n");

    std::fs::write(dir.join("bad.conf"), "n = x\n").unwrap();
    let bad = dir.join("bad.conf");
    let (code, _, _) = run(&["--config", bad.to_str().unwrap(), "ring", "table"]);
    assert_eq!(code, 2, "bad config must exit 2");
}

#[test]
fn invalid_global_configuration_is_rejected() {
    let (code, _, _) = run(&["ring", "table", "--n", "0"]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&["ring", "table", "--window", "0"]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&["virasoro", "symplectic", "0", "--zmin", "1"]);
    assert_eq!(code, 2);
}
