use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rkep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rkep")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn figure_instance(dir: &Path) -> PathBuf {
    let path = dir.join("figure1.json");
    let out = rkep(&["generate", "--preset", "figure1", "--out", s(&path)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

const HEADER: &str = "instance,K,L,rv,ra,policy,algorithm,opt,total_s,heur_pct,master_pct,re_pct,cg_pct,ssf_pct,\
firstS,secondS,heur_true,cg_true,ssf_iters,dom_scen,robust_value,hsp_pct";

#[test]
fn solve_writes_artifacts() {
    let dir = scratch("solve_artifacts");
    let inst = figure_instance(&dir);
    let out_dir = dir.join("out");
    let out = rkep(&[
        "solve", "--instance", s(&inst), "--K", "4", "--L", "4", "--rv", "1", "--ra", "1", "--out", s(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["run_log.jsonl", "worst_case.json", "solution.json", "stats.csv"] {
        assert!(out_dir.join(f).exists(), "{f} missing");
    }
    let stats = fs::read_to_string(out_dir.join("stats.csv")).unwrap();
    let mut lines = stats.lines();
    assert_eq!(lines.next(), Some(HEADER));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 22);
    assert_eq!(row[7], "1");
    assert!(!row[8].is_empty(), "timing recorded by default");

    let solution: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("solution.json")).unwrap()).unwrap();
    let worst: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("worst_case.json")).unwrap()).unwrap();
    assert_eq!(solution["robust_value"], worst["value"]);
    assert_eq!(row[20], solution["robust_value"].to_string());
    for line in fs::read_to_string(out_dir.join("run_log.jsonl")).unwrap().lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
}

#[test]
fn solve_is_byte_identical_without_timing() {
    let dir = scratch("solve_determinism");
    let inst = dir.join("random.json");
    assert!(rkep(&["generate", "--pairs", "9", "--ndds", "1", "--seed", "11", "--out", s(&inst)]).status.success());
    let run = |name: &str| {
        let out_dir = dir.join(name);
        let out = rkep(&[
            "solve", "--instance", s(&inst), "--rv", "1", "--ra", "2", "--algorithm", "hsa-me", "--tr", "2", "--seed", "5",
            "--no-timing", "--out", s(&out_dir),
        ]);
        assert_eq!(out.status.code(), Some(0));
        out_dir
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["run_log.jsonl", "worst_case.json", "solution.json", "stats.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn oracle_agrees_on_figure_one() {
    let dir = scratch("oracle_agree");
    let inst = figure_instance(&dir);
    for mode in ["robust", "second-stage"] {
        for alg in ["basic", "fbsa-mb", "fbsa-me", "hsa-mb", "hsa-me"] {
            let out = rkep(&[
                "oracle", "--instance", s(&inst), "--K", "4", "--L", "4", "--rv", "1", "--ra", "1", "--algorithm", alg, "--mode", mode,
            ]);
            let stdout = String::from_utf8_lossy(&out.stdout);
            assert_eq!(out.status.code(), Some(0), "{mode} {alg}: {stdout}");
            assert!(stdout.starts_with("agree"));
        }
    }
}

#[test]
fn batch_is_ordered_and_survives_errors() {
    let dir = scratch("batch");
    figure_instance(&dir);
    assert!(rkep(&["generate", "--seed", "3", "--format", "edgelist", "--out", s(&dir.join("r3.txt"))]).status.success());
    let manifest = dir.join("manifest.json");
    fs::write(
        &manifest,
        r#"{"instances": [{"path": "figure1.json"}, {"path": "missing.json"}, {"path": "r3.txt", "format": "edgelist"}],
            "K": [3, 4], "L": [3], "rv": [1], "ra": [1], "ra_frac": [0.5],
            "policy": ["full", "first-stage-only"], "algorithm": ["fbsa-mb", "hsa-me"], "tr": 2}"#,
    )
    .unwrap();
    let run = |jobs: &str, name: &str| {
        let out_dir = dir.join(name);
        let out = rkep(&["batch", "--manifest", s(&manifest), "--jobs", jobs, "--no-timing", "--out", s(&out_dir)]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        out_dir
    };
    let (serial, parallel) = (run("1", "serial"), run("4", "parallel"));
    let results = fs::read_to_string(serial.join("results.csv")).unwrap();
    assert_eq!(results, fs::read_to_string(parallel.join("results.csv")).unwrap());
    assert_eq!(
        fs::read(serial.join("profile.csv")).unwrap(),
        fs::read(parallel.join("profile.csv")).unwrap()
    );
    let rows: Vec<&str> = results.lines().skip(1).collect();
    assert_eq!(rows.len(), 3 * 2 * 2 * 2 * 2);
    assert!(rows[..16].iter().all(|r| r.starts_with("figure1.json,")));
    assert!(rows[16..32].iter().all(|r| r.starts_with("missing.json,") && r.contains(",error,")));
    assert!(rows[32..].iter().all(|r| r.starts_with("r3.txt,") && r.contains(",1,,")));
}

#[test]
fn empty_manifest_gives_header_only() {
    let dir = scratch("batch_empty");
    let manifest = dir.join("manifest.json");
    fs::write(&manifest, r#"{"instances": []}"#).unwrap();
    let out = rkep(&["batch", "--manifest", s(&manifest), "--out", s(&dir.join("out"))]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read_to_string(dir.join("out/results.csv")).unwrap(), format!("{HEADER}\n"));
}

#[test]
fn exit_codes() {
    let dir = scratch("exit_codes");
    let inst = figure_instance(&dir);
    let out_dir = dir.join("out");
    assert_eq!(rkep(&["solve", "--nonsense"]).status.code(), Some(2));
    assert_eq!(rkep(&["solve", "--instance", s(&inst), "--K", "1", "--out", s(&out_dir)]).status.code(), Some(3));
    let broken = dir.join("broken.json");
    fs::write(&broken, "{\"vertices\": 3").unwrap();
    assert_eq!(rkep(&["solve", "--instance", s(&broken), "--out", s(&out_dir)]).status.code(), Some(3));
    let out = rkep(&[
        "solve", "--instance", s(&inst), "--K", "4", "--L", "4", "--rv", "1", "--ra", "1", "--time-limit", "0.000000001", "--out",
        s(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn edge_list_instances_solve() {
    let dir = scratch("edgelist");
    let json = figure_instance(&dir);
    let text = dir.join("figure1.txt");
    assert!(rkep(&["generate", "--preset", "figure1", "--format", "edgelist", "--out", s(&text)]).status.success());
    let solve = |path: &Path, format: &str, name: &str| {
        let out_dir = dir.join(name);
        let out = rkep(&[
            "solve", "--instance", s(path), "--format", format, "--K", "4", "--L", "4", "--rv", "1", "--ra", "1", "--no-timing",
            "--out", s(&out_dir),
        ]);
        assert_eq!(out.status.code(), Some(0));
        fs::read_to_string(out_dir.join("solution.json")).unwrap()
    };
    assert_eq!(solve(&json, "json", "a"), solve(&text, "edgelist", "b"));
}
