use std::process::{Command, Output};

use sixvertex::{BigFloat, Real, Scalar};

fn sixvertex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sixvertex"))
        .args(args)
        .env_remove("SIXVERTEX_PRECISION_BITS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn value(args: &[&str]) -> BigFloat {
    let o = sixvertex(args);
    assert!(o.status.success(), "{}", stderr(&o));
    BigFloat::parse(stdout(&o).trim(), 512).unwrap()
}

fn rel(a: &BigFloat, b: &BigFloat) -> f64 {
    ((a.clone() - b).abs() / b.abs()).to_f64()
}

#[test]
fn isotropic_first_order_partition() {
    let o = sixvertex(&["partition", "--phase", "d", "--gamma", "1.0471975511965976", "--t", "0", "--n", "1", "--route", "det"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "1.5\n");
}

#[test]
fn symmetric_count_at_size_four() {
    let o = sixvertex(&["enumerate", "--size", "4", "--count-only", "--symmetric"]);
    assert_eq!(stdout(&o), "10\n");
    let o = sixvertex(&["enumerate", "--size", "5", "--count-only"]);
    assert_eq!(stdout(&o), "429\n");
}

#[test]
fn dump_asm_lines() {
    let o = sixvertex(&["enumerate", "--size", "3", "--dump-asm"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 7);
    assert!(lines.contains(&"0,1,0,1,-1,1,0,1,0"));
    for l in lines {
        let s: i32 = l.split(',').map(|x| x.parse::<i32>().unwrap()).sum();
        assert_eq!(s, 3);
    }
}

#[test]
fn histogram_csv_header() {
    let o = sixvertex(&["enumerate", "--size", "4", "--format", "csv"]);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n1,n2,n3,n4,n5,n6,multiplicity"));
    let total: u64 = lines.map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 42);
}

#[test]
fn routes_agree() {
    for (phase, g, t) in [("d", "pi/5", "0.1"), ("af", "1.2", "0.3"), ("f", "0.5", "1.0")] {
        for n in 1..=6 {
            let n = n.to_string();
            let base = ["partition", "--phase", phase, "--gamma", g, "--t", t, "--n", &n, "--digits", "70"];
            let det = value(&[&base[..], &["--route", "det"]].concat());
            let norms = value(&[&base[..], &["--route", "norms"]].concat());
            assert!(rel(&det, &norms) < 1e-60, "{phase} n={n}");
            if n.parse::<usize>().unwrap() <= 3 {
                let en = value(&[&base[..], &["--route", "enum"]].concat());
                assert!(rel(&det, &en) < 1e-60, "{phase} n={n}");
            }
        }
    }
}

#[test]
fn json_partition_and_determinism() {
    let args = ["partition", "--phase", "af", "--gamma", "1.2", "--t", "0.3", "--n", "2", "--format", "json"];
    let a = sixvertex(&args);
    let b = sixvertex(&args);
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["route"], "det");
    assert_eq!(v["precision_bits"], 256);
    assert!(v["z_ht"].as_str().unwrap().len() > 70);
}

#[test]
fn precision_from_environment() {
    let run = |bits: &str| {
        Command::new(env!("CARGO_BIN_EXE_sixvertex"))
            .args(["theta", "--gamma", "1.2", "--z", "0.4", "--format", "csv"])
            .env("SIXVERTEX_PRECISION_BITS", bits)
            .output()
            .unwrap()
    };
    let short = stdout(&run("64"));
    let long = stdout(&run("512"));
    assert!(long.len() > short.len() + 4 * 100);
    assert!(short.starts_with("quantity,value\nq,"));
}

#[test]
fn norms_table() {
    let o = sixvertex(&["norms", "--phase", "f", "--gamma", "0.5", "--t", "1.0", "--family", "dw", "--kmax", "4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[0].starts_with("0 "));
}

#[test]
fn asym_report_shape() {
    let o = sixvertex(&["asym", "--phase", "d", "--gamma", "pi/3", "--t", "0", "--n", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["phase", "params", "predicted", "fitted", "residuals"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["predicted"]["C"], "unknown");
    let f: f64 = v["predicted"]["F"].as_str().unwrap().parse().unwrap();
    assert!((f - 1.125).abs() < 1e-15);
}

#[test]
fn out_of_domain_names_the_invariant() {
    let o = sixvertex(&["partition", "--phase", "f", "--gamma", "1.0", "--t", "0.5", "--n", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gamma < t"), "{}", stderr(&o));
    let o = sixvertex(&["partition", "--phase", "d", "--gamma", "1.7", "--t", "0.1", "--n", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gamma < pi/2"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(sixvertex(&["partition", "--bogus"]).status.code(), Some(2));
    assert_eq!(sixvertex(&["enumerate", "--size", "20", "--count-only"]).status.code(), Some(2));
    assert_eq!(sixvertex(&["asym", "--phase", "d", "--gamma", "0.5", "--t", "0"]).status.code(), Some(2));
}

#[test]
fn fast_suite_passes() {
    let o = sixvertex(&["verify", "--suite", "fast"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let reports = v.as_array().unwrap();
    assert!(reports.len() > 100);
    let names: Vec<&str> = reports.iter().map(|r| r["name"].as_str().unwrap()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert!(reports.iter().all(|r| r["pass"] == true));
}

#[test]
fn failing_check_exits_one() {
    // the ferroelectric partial products miss their closed-form limits
    let o = sixvertex(&["verify", "--suite", "full", "--only", "asymptotics/f/constants", "--format", "plain", "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL ferro_constant/dw"));
}

#[test]
fn selecting_nothing_is_a_usage_error() {
    let o = sixvertex(&["verify", "--only", "no-such-check"]);
    assert_eq!(o.status.code(), Some(2));
}
