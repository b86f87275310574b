use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_kernel-spectra"));
    c.env_remove("KERNEL_SPECTRA_THREADS");
    c
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn simulate_writes_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let (code, _, err) = run(&[
            "simulate", "--kernel", "sign", "--p", "40", "--n", "400", "--seed", "1", "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
    }
    let (ta, tb) = (std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
    let strip = |s: &str| s.lines().filter(|l| !l.starts_with("# out=")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&ta), strip(&tb));
    let data = data_lines(&ta);
    assert_eq!(data[0], "lambda");
    assert_eq!(data.len(), 401);
    assert!(ta.contains("# p,n,model,kernel,seed"));
}

#[test]
fn embedded_config_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.csv");
    let (code, _, _) = run(&[
        "simulate", "--kernel", "power_odd:r=0.25", "--n", "300", "--gamma", "0.5", "--seed", "7", "--model",
        "hypercube", "--out", first.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let (code, again, err) = run(&["simulate", "--config", first.to_str().unwrap(), "--out", "/dev/stdout"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(data_lines(&std::fs::read_to_string(&first).unwrap()), data_lines(&again));
}

#[test]
fn thread_count_does_not_change_numbers() {
    let args = ["simulate", "--kernel", "sign", "--p", "50", "--n", "200", "--seed", "3"];
    let one = bin().args(args).env("KERNEL_SPECTRA_THREADS", "1").output().unwrap();
    let (_, many, _) = run(&[&args[..], &["--threads", "4"]].concat());
    let one = String::from_utf8(one.stdout).unwrap();
    assert_eq!(data_lines(&one), data_lines(&many));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["density", "--kernel", "nonsense"]).0, 2);
    assert_eq!(run(&["density", "--a", "1", "--nu", "0.5", "--gamma", "1"]).0, 2);
    assert_eq!(run(&["simulate", "--kernel", "sign", "--p", "10"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["simulate", "--kernel", "sign", "--p", "10", "--n", "9000"]).0, 3);
    let (code, _, err) = run(&["compare", "--kernel", "sign", "--p", "100", "--n", "400", "--theory-gamma", "3"]);
    assert_eq!(code, 1, "{err}");
    assert_eq!(run(&["--version"]).0, 0);
}

#[test]
fn density_json_and_csv_agree() {
    let (_, csv, _) = run(&["density", "--kernel", "sign", "--gamma", "0.1", "--grid", "-5,15,101"]);
    let (_, json, _) = run(&["density", "--kernel", "sign", "--gamma", "0.1", "--grid", "-5,15,101", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let rho: Vec<f64> = v["curve"]["rho"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let from_csv: Vec<f64> = data_lines(&csv)[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(rho, from_csv);
    assert_eq!(v["config"]["kernel"], "sign");
    assert!(v["config"]["version"].is_string());
}

#[test]
fn compare_report_fields() {
    let (code, out, err) = run(&[
        "compare", "--kernel", "sign", "--p", "200", "--n", "800", "--format", "json", "--trials", "2",
    ]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["per_seed"].as_array().unwrap().len(), 2);
    assert_eq!(v["metrics"]["seeds_used"].as_array().unwrap().len(), 2);
    assert!(v["metrics"]["cdf_sup_distance"].as_f64().unwrap() <= 0.05);
    assert_eq!(v["tolerances"]["cdf_sup_distance"], 0.05);
}

#[test]
fn power_even_against_semicircle() {
    let (code, out, err) = run(&[
        "compare", "--kernel", "power_even:r=0.25", "--p", "500", "--n", "1000", "--a", "0", "--nu", "0.2161",
        "--format", "json",
    ]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["pass"], true);
}

#[test]
fn concentration_sweep_reports_seeds() {
    let (code, out, err) = run(&["sweep", "--kind", "concentration", "--sizes", "40,80", "--trials", "20", "--seed", "2"]);
    assert_eq!(code, 0, "{err}");
    let seeds = out.lines().find(|l| l.starts_with("# child-seeds=")).unwrap();
    assert_eq!(seeds.split(',').count(), 20);
    assert_eq!(data_lines(&out)[0], "n,p,std");
}
