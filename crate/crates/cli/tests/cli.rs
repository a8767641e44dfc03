use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_treebridge"));
    c.env_remove("TREEBRIDGE_OUT");
    c
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn ok_json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

const DATA5: &str = "((1,2):0.5,(3,4):0.3,5);
((1,2):0.4,(3,4):0.5,5);
((1,2):0.6,(3,5):0.2,4);
((1,2):0.3,(3,4):0.2,5);
((1,3):0.1,(2,4):0.2,5);
";

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn geodesic_same_orthant() {
    let d = tempfile::tempdir().unwrap();
    let v = ok_json(&run(&["geodesic", "x1=((a,b):1,(c,d):2,e);", "x2=((a,b):4,(c,d):6,e);", "points=3"], d.path()));
    assert_eq!(v["distance"], 5.0);
    assert_eq!(v["simple"], true);
    assert_eq!(v["points"].as_array().unwrap().len(), 3);
    assert!(d.path().join("geodesic.json").exists());
    assert!(d.path().join("geodesic.config").exists());
}

#[test]
fn infer_is_deterministic_and_trace_has_expected_rows() {
    let d = tempfile::tempdir().unwrap();
    let data = write(d.path(), "data.nwk", DATA5);
    let args = |o: &str| {
        vec![
            "infer".to_string(),
            format!("data_path={data}"),
            "m=4".into(),
            "iters=70".into(),
            "burnin=10".into(),
            "thin=3".into(),
            "--seed".into(),
            "7".into(),
            "--out".into(),
            d.path().join(o).to_str().unwrap().into(),
        ]
    };
    let a = bin().args(args("a")).output().unwrap();
    let b = bin().args(args("b")).output().unwrap();
    let va = ok_json(&a);
    ok_json(&b);
    for f in ["trace.csv", "x0_samples.nwk", "infer_summary.json"] {
        let x = std::fs::read(d.path().join("a").join(f)).unwrap();
        let y = std::fs::read(d.path().join("b").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
    let trace = std::fs::read_to_string(d.path().join("a/trace.csv")).unwrap();
    let rows: Vec<&str> = trace.lines().skip(1).collect();
    assert_eq!(rows.len(), (70 - 10) / 3);
    let iters: Vec<usize> = rows.iter().map(|r| r.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(iters.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(va["samples"], 20);
    assert_eq!(va["data"]["n"], 5);

    // the snapshot reproduces the run
    let snap = d.path().join("a/infer.config");
    let c = bin()
        .args(["infer", "--config", snap.to_str().unwrap(), "--out"])
        .arg(d.path().join("c"))
        .output()
        .unwrap();
    ok_json(&c);
    assert_eq!(
        std::fs::read(d.path().join("a/trace.csv")).unwrap(),
        std::fs::read(d.path().join("c/trace.csv")).unwrap()
    );
    assert_eq!(
        std::fs::read_to_string(snap).unwrap(),
        std::fs::read_to_string(d.path().join("c/infer.config")).unwrap()
    );
}

#[test]
fn walk_topology_diversity_grows_with_dispersion() {
    let d = tempfile::tempdir().unwrap();
    let x0 = "(1:0.1,(((2:0.1,4:0.1):0.8,10:0.1):1.0,((((6:0.1,8:0.1):1.6,3:0.1):0.6,7:0.1):0.35,5:0.1):1.45):1.9,9:0.1);";
    let mut counts = Vec::new();
    for t0 in ["0.01", "0.1", "0.3", "0.5"] {
        let o = d.path().join(t0);
        let v = ok_json(&run(
            &["simulate-walk", &format!("x0={x0}"), &format!("t0={t0}"), "m=50", "walks=10000", "record_steps=false"],
            &o,
        ));
        counts.push(v["distinct_topologies"].as_u64().unwrap());
        let ends = std::fs::read_to_string(o.join("endpoints.nwk")).unwrap();
        assert_eq!(ends.lines().count(), 10000);
    }
    assert!(counts.windows(2).all(|w| w[0] < w[1]), "{counts:?}");
}

#[test]
fn sample_bridge_outputs() {
    let d = tempfile::tempdir().unwrap();
    let v = ok_json(&run(
        &[
            "sample-bridge",
            "x0=((1,2):0.5,(3,4):0.3,5);",
            "x_star=((1,3):0.4,(2,4):0.2,5);",
            "t0=0.5",
            "m=6",
            "iters=100",
            "burnin=20",
            "thin=20",
        ],
        d.path(),
    ));
    assert_eq!(v["samples"], 4);
    let trace = std::fs::read_to_string(d.path().join("bridge_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 101);
    let dump = std::fs::read_to_string(d.path().join("bridges.nwk")).unwrap();
    let blocks: Vec<&str> = dump.trim_end().split("\n\n").collect();
    assert_eq!(blocks.len(), 4);
    assert!(blocks.iter().all(|b| b.lines().count() == 7));
}

#[test]
fn marginal_single_step_is_exact_and_flags_work() {
    let d = tempfile::tempdir().unwrap();
    // every datum one simple step from x0
    let near: String = DATA5.lines().take(4).map(|l| format!("{l}\n")).collect();
    let data = write(d.path(), "data.nwk", &near);
    let x0 = "((1,2):0.45,(3,4):0.3,5);";
    let mut totals = Vec::new();
    for method in ["chib", "tunnel", "stepping-stone"] {
        let v = ok_json(&run(
            &["marginal", &format!("data_path={data}"), "--method", method, "--x0", x0, "--t0", "0.4", "--m", "1"],
            &d.path().join(method),
        ));
        assert_eq!(v["se"], 0.0);
        totals.push(v["total"].as_f64().unwrap());
    }
    assert!(totals.iter().all(|&t| t == totals[0]));
    let taxa = treebridge::TaxonSet::numbered(5).unwrap();
    let x0t = treebridge::treespace::parse_newick(x0, &taxa).unwrap();
    let exact: f64 = near
        .lines()
        .map(|l| treebridge::kernels::ggf_log_density(&treebridge::treespace::parse_newick(l, &taxa).unwrap(), &x0t, 0.4))
        .sum();
    assert!((totals[0] - exact).abs() < 1e-9, "{} {exact}", totals[0]);

    let v = ok_json(&run(
        &["marginal", &format!("data_path={data}"), "method=chib", &format!("x0={x0}"), "t0=0.4", "m=3", "m1=100", "m2=100", "h=5", "k=10", "burnin=20", "thin=2", "bootstrap=20", "repeats=3"],
        &d.path().join("small"),
    ));
    assert_eq!(v["repeat_totals"].as_array().unwrap().len(), 3);
    assert!(v["total"].as_f64().unwrap().is_finite());
    assert_eq!(v["per_datum"].as_array().unwrap().len(), 4);
}

#[test]
fn exact4_masses_sum_to_one() {
    let d = tempfile::tempdir().unwrap();
    let v = ok_json(&run(&["exact4", "x0=((1,2):0.5,3,4);", "t0=0.25", "points=50"], d.path()));
    let total: f64 = v["axes"].as_array().unwrap().iter().map(|a| a["mass"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let csv = std::fs::read_to_string(d.path().join("exact4.csv")).unwrap();
    assert_eq!(csv.lines().count(), 151);
}

#[test]
fn summarize_and_load_errors() {
    let d = tempfile::tempdir().unwrap();
    let same = write(d.path(), "same.nwk", &"((a,b):1,(c,d):2,e);\n".repeat(9));
    let v = ok_json(&run(&["summarize", &format!("data_path={same}")], d.path()));
    assert_eq!((v["n"].as_u64(), v["distinct_topologies"].as_u64(), v["modal_count"].as_u64()), (Some(9), Some(1), Some(9)));
    let empty = write(d.path(), "empty.nwk", "\n");
    let o = run(&["summarize", &format!("data_path={empty}")], d.path());
    assert_eq!(o.status.code(), Some(5));
    let bad = write(d.path(), "bad.nwk", "((a,b):1,c,d);\n((a,b:1,c,d);\n");
    let o = run(&["summarize", &format!("data_path={bad}")], d.path());
    assert_eq!(o.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn exit_codes_are_distinct() {
    let d = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| run(args, d.path()).status.code();
    assert_eq!(code(&["summarize", "nope=1"]), Some(3));
    assert_eq!(code(&["summarize"]), Some(3));
    assert_eq!(code(&["summarize", "data_path=/definitely/not/here"]), Some(4));
    assert_eq!(code(&["geodesic", "x1=((a,b", "x2=(a,b,c,d);"]), Some(5));
    // an unresolved source cannot start a bridge
    assert_eq!(code(&["sample-bridge", "x0=(1,2,3,4,5);", "x_star=((1,2):1,(3,4):1,5);", "t0=1"]), Some(6));
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(2));
}

#[test]
fn output_dir_from_environment() {
    let d = tempfile::tempdir().unwrap();
    let o = bin()
        .env("TREEBRIDGE_OUT", d.path())
        .args(["geodesic", "x1=((a,b):1,c,d);", "x2=((a,c):1,b,d);"])
        .output()
        .unwrap();
    let v = ok_json(&o);
    assert_eq!(v["distance"], 2.0);
    assert_eq!(v["cone_path"], true);
    assert!(d.path().join("geodesic.json").exists());
}
