//! End-to-end runs of the command-line binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_isotwirl"))
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("isotwirl-it-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read_series(path: &Path) -> Vec<(f64, f64)> {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split(',').map(|x| x.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect()
}

fn sorted_files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

const SMALL_ORACLE: &str = "\
[model]
kind = cb
omegas = 0.41, 1.37

[twirl]
ensembles = haar, clifford, doped(2, 0.5)
probes = loschmidt2, purity2

[time]
t_min = 0.1
t_max = 5
points = 3

[oracle]
enabled = true
samples = 1000
";

#[test]
fn output_is_byte_identical_across_thread_counts() {
    let dir = scratch("det");
    let scn = dir.join("s.txt");
    fs::write(&scn, SMALL_ORACLE).unwrap();
    let a = dir.join("a");
    let b = dir.join("b");
    run_ok(&["--threads", "1", "run", scn.to_str().unwrap(), "--out", a.to_str().unwrap(), "--seed", "9"]);
    run_ok(&["--threads", "3", "run", scn.to_str().unwrap(), "--out", b.to_str().unwrap(), "--seed", "9"]);
    let files = sorted_files(&a);
    assert_eq!(files, sorted_files(&b));
    assert!(files.contains(&"oracle_purity2_clifford.csv".to_string()));
    assert!(files.contains(&"loschmidt2_doped_k2_th0.500000.csv".to_string()));
    for f in &files {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = dir.join("c");
    run_ok(&["run", scn.to_str().unwrap(), "--out", c.to_str().unwrap(), "--seed", "10"]);
    assert_ne!(
        fs::read(a.join("oracle_purity2_haar.csv")).unwrap(),
        fs::read(c.join("oracle_purity2_haar.csv")).unwrap()
    );
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn empty_probe_list_writes_only_form_factors() {
    let dir = scratch("sff");
    let scn = dir.join("s.txt");
    fs::write(
        &scn,
        "[spectral]\naverage = gue\nd = 64\n[twirl]\nprobes =\n[time]\nt_min = 1\nt_max = 100\npoints = 5\n",
    )
    .unwrap();
    let out = dir.join("o");
    run_ok(&["run", scn.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let files = sorted_files(&out);
    assert_eq!(
        files,
        ["manifest.json", "sff_g2.csv", "sff_g2_2t.csv", "sff_g3_re.csv", "sff_g3tilde.csv", "sff_g4.csv"]
    );
    let header = fs::read_to_string(out.join("sff_g2.csv")).unwrap();
    assert!(header.starts_with("t,value\n"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["d"], 64);
    assert_eq!(manifest["probes"].as_array().unwrap().len(), 0);
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn toric_clifford_echo_saturates_above_haar() {
    let dir = scratch("toric");
    let scenario = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/toric_loschmidt.txt");
    run_ok(&["run", scenario.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    let min = |f: &str| read_series(&dir.join(f)).iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let haar = min("loschmidt2_haar.csv");
    let cliff = min("loschmidt2_clifford.csv");
    assert!(haar > 0.0 && cliff > 5.0 * haar, "haar {haar}, clifford {cliff}");
    assert!(dir.join("plot.gp").exists());
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn scenario_errors_name_line_and_field() {
    let dir = scratch("diag");
    let scn = dir.join("bad.txt");
    fs::write(&scn, "[model]\nkind = cb\nomegas = 1, 2\nbogus = 3\n").unwrap();
    let out = bin().args(["run", scn.to_str().unwrap(), "--out", dir.join("o").to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.txt:4: [model] bogus"), "{err}");
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn tables_write_exact_weingarten_values() {
    let dir = scratch("tables");
    run_ok(&["tables", "8", "--out", dir.to_str().unwrap()]);
    let w = fs::read_to_string(dir.join("weingarten_d8.csv")).unwrap();
    let first = w.lines().nth(1).unwrap();
    // Plain Weingarten at the identity: (d⁴ − 8d² + 6) / (d²(d²−1)(d²−4)(d²−9)).
    assert!(first.starts_with("Id,plain,"), "{first}");
    let exact = first.split(',').nth(2).unwrap();
    let (p, q) = exact.split_once('/').unwrap();
    let value = p.parse::<f64>().unwrap() / q.parse::<f64>().unwrap();
    let d2 = 64.0;
    let expected = (d2 * d2 - 8.0 * d2 + 6.0) / (d2 * (d2 - 1.0) * (d2 - 4.0) * (d2 - 9.0));
    assert!((value - expected).abs() < 1e-15 * expected);
    assert!(dir.join("xi_eigenvalues_d8.csv").exists());
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn verify_runs_selected_criteria() {
    let out = run_ok(&["verify", "--only", "4"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("C04 RESULT: PASS"), "{text}");
    assert!(text.contains("1/1 criteria PASS"));
}
