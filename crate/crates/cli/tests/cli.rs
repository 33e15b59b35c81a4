use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dioexp"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dioexp-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn report(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn zero_matrix_is_infinite() {
    let d = scratch("zero");
    let m = write(&d, "zero.mat", "0 0\n0 0\n");
    let out = d.join("r.json");
    let o = run(&["exponent", "--matrix", m.to_str().unwrap(), "--height", "100", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["schema"], "dioexp.report/1");
    assert_eq!(r["payload"]["estimate"], "inf");
    assert_eq!(r["estimate_kind"], "exact");
    assert!(d.join("r.manifest.json").exists());
}

#[test]
fn decimal_entries_are_exact() {
    let d = scratch("decimal");
    let a = write(&d, "a.mat", "0.25\n");
    let b = write(&d, "b.mat", "1/4\n");
    let (ra, rb) = (d.join("a.json"), d.join("b.json"));
    for (m, r) in [(&a, &ra), (&b, &rb)] {
        let o = run(&["exponent", "--matrix", m.to_str().unwrap(), "--height", "50", "--out", r.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(report(&ra)["payload"], report(&rb)["payload"]);
}

#[test]
fn malformed_input_exits_two() {
    let d = scratch("bad");
    let m = write(&d, "bad.mat", "1 2\n1/0 3\n");
    let o = run(&["exponent", "--matrix", m.to_str().unwrap(), "--height", "5", "--out", d.join("r.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.mat:2"), "{err}");
    let o = run(&["exponent", "--matrix", d.join("missing.mat").to_str().unwrap(), "--height", "5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["exponent", "--height", "5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn subspace_reports_every_order() {
    let d = scratch("subspace");
    let m = write(&d, "a.mat", "3/7 -2/5\n1/3 5/11\n");
    let out = d.join("s.json");
    let o = run(&[
        "subspace", "--A", m.to_str().unwrap(), "--orders", "1,2", "--height", "40", "--closed-form-2x2", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    let orders = r["payload"]["orders"].as_array().unwrap();
    assert_eq!(orders.len(), 2);
    assert_eq!(r["payload"]["closed_form_2x2"]["matches_general"], true);
    // order-two witnesses are HNF bases of rank-2 subgroups of Z^4
    let w = &orders[1]["curve"]["records"][0]["witness"];
    assert_eq!(w.as_array().unwrap().len(), 2);
    assert_eq!(w[0].as_array().unwrap().len(), 4);
    assert_eq!(r["payload"]["equality"]["applies"], false);
}

#[test]
fn budget_exhaustion_keeps_partial_curve() {
    let d = scratch("budget");
    let m = write(&d, "a.mat", "3/7 -2/5\n");
    let out = d.join("b.json");
    let o = run(&[
        "--budget-nodes", "100", "exponent", "--matrix", m.to_str().unwrap(), "--height", "10000", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let r = report(&out);
    assert_eq!(r["complete"], false);
    assert!(r["payload"]["curve"]["exhausted_height"].as_u64().unwrap() < 10000);
}

#[test]
fn reports_do_not_depend_on_workers() {
    let d = scratch("workers");
    let m = write(&d, "a.mat", "3/7 -2/5\n1/3 5/11\n");
    let map = write(&d, "id.json", r#"{"dim_in": 1, "components": [[[1.0, [1]]]]}"#);
    let mut texts = Vec::new();
    for w in ["1", "8"] {
        let s = d.join(format!("s{w}.json"));
        let v = d.join(format!("v{w}.json"));
        let o = run(&["--workers", w, "subspace", "--A", m.to_str().unwrap(), "--height", "25", "--out", s.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        let o = run(&[
            "--workers", w, "--seed", "11", "nondiv", "verify", "--map", map.to_str().unwrap(), "--t", "3", "--eps-grid",
            "0.125,0.0625", "--samples", "20000", "--out", v.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        texts.push((std::fs::read(&s).unwrap(), std::fs::read(&v).unwrap()));
    }
    assert!(texts[0] == texts[1]);
}

#[test]
fn nondiv_marking_has_no_violations() {
    let d = scratch("marking");
    let out = d.join("m.json");
    let o = run(&["nondiv", "marking", "--k", "3", "--grid", "12", "--rho", "1", "--eps", "1/2,1/16", "--lambda", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["payload"]["violations"].as_array().unwrap().len(), 0);
    assert_eq!(r["payload"]["checks"], 288);
}

#[test]
fn selftest_passes() {
    let d = scratch("selftest");
    let o = run(&["selftest", "--out", d.join("t.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn output_dir_from_environment() {
    let d = scratch("env");
    let v = write(&d, "y.txt", "2/7\n");
    let o = bin()
        .env("DIOEXP_OUT_DIR", &d)
        .args(["flow", "--vector", v.to_str().unwrap(), "--lambda-max", "64"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(d.join("flow.json").exists());
    let table = std::fs::read_to_string(d.join("flow.tsv")).unwrap();
    assert!(table.starts_with("lambda t delta2 c_record"));
}
