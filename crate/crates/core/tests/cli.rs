use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hkens::partition_io::parse_partition;
use hkens::report::Report;

fn hkens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hkens")).args(args).output().unwrap()
}

fn breast() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/breast-cancer-wisconsin.csv")
}

fn toy(dir: &Path) -> PathBuf {
    let path = dir.join("toy.csv");
    fs::write(&path, "x,y\n0,0\n0.5,0.2\n0.1,0.6\n9,9\n9.4,9.3\n8.8,9.5\n").unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn toy_run_is_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let input = toy(dir.path());
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = hkens(&[
            "run", "--input", s(&input), "--k", "2", "--threshold", "3", "--ensemble-size", "2", "--seed", "7",
            "--out", s(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push((
            fs::read(out.join("partition.txt")).unwrap(),
            fs::read(out.join("report.txt")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    let ids = parse_partition(std::str::from_utf8(&outputs[0].0).unwrap()).unwrap();
    assert_eq!(ids.len(), 6);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("blobs.csv");
    assert!(hkens(&["gen-synth", "--out", s(&input), "--seed", "4"]).status.success());
    let mut reports = Vec::new();
    for threads in ["0", "4"] {
        let out = dir.path().join(format!("t{threads}"));
        let o = Command::new(env!("CARGO_BIN_EXE_hkens"))
            .env("HKENS_THREADS", threads)
            .args(["run", "--input", s(&input), "--label-col", "label", "--k", "4", "--d", "5", "--seed", "4"])
            .args(["--threshold", "40", "--out", s(&out)])
            .output()
            .unwrap();
        assert!(o.status.success());
        reports.push(fs::read(out.join("report.txt")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn breast_cancer_report_and_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let base_dir = dir.path().join("base");
    let data = breast();
    let common = ["--input", s(&data), "--label-col", "class", "--k", "2", "--seed", "1"];
    let o = hkens(&[&["run"][..], &common, &["--out", s(&run_dir), "--write-members"]].concat());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = hkens(&[&["kmeans-baseline"][..], &common, &["--out", s(&base_dir)]].concat());
    assert!(o.status.success());

    let run = Report::read(&run_dir.join("report.txt")).unwrap();
    let base = Report::read(&base_dir.join("report.txt")).unwrap();
    assert_eq!(run.get("dim"), Some("9"));
    assert_eq!(run.get("n"), Some("699"));
    assert_eq!(run.get("missing_cells"), Some("16"));
    for r in [&run, &base] {
        assert!(r.get_f64("final.objective").is_some());
        assert!(r.get_f64("final.purity").is_some());
        assert!(r.get_f64("final.rand_index").is_some());
    }
    assert!(run_dir.join("members/member-1.txt").exists());

    let o = hkens(&[
        "metrics", "--input", s(&breast()), "--label-col", "class", "--partition", s(&run_dir.join("partition.txt")),
    ]);
    assert!(o.status.success());
    let metrics = Report::parse(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(metrics.get("final.objective"), run.get("final.objective"));
}

#[test]
fn orclus_only_and_members_commands() {
    let dir = tempfile::tempdir().unwrap();
    let input = toy(dir.path());
    let out = dir.path().join("o");
    assert!(hkens(&["orclus-only", "--input", s(&input), "--k", "2", "--out", s(&out)]).status.success());
    assert_eq!(Report::read(&out.join("report.txt")).unwrap().get("final.k"), Some("2"));
    let out = dir.path().join("m");
    let o = hkens(&["members", "--input", s(&input), "--k", "2", "--ensemble-size", "2", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("members/member-2.txt").exists());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let input = toy(dir.path());
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "k = 3\nthreshold = 3\nensemble_size = 2\nconsensus = \"co-association\"\n").unwrap();
    let out = dir.path().join("o");
    let o = hkens(&["run", "--input", s(&input), "--config", s(&cfg), "--k", "2", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = Report::read(&out.join("report.txt")).unwrap();
    assert_eq!(r.get("config.k"), Some("2"));
    assert_eq!(r.get("config.threshold"), Some("3"));
    assert_eq!(r.get("config.consensus"), Some("co-association"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let input = toy(dir.path());
    let out = dir.path().join("o");
    let code = |args: &[&str]| hkens(args).status.code();
    assert_eq!(code(&["run", "--input", s(&input), "--k", "1", "--out", s(&out)]), Some(2));
    assert_eq!(code(&["run", "--input", s(&input), "--k", "2", "--d", "3", "--out", s(&out)]), Some(2));
    assert_eq!(code(&["run", "--input", s(&input), "--out", s(&out)]), Some(2));
    assert_eq!(code(&["run", "--input", "missing.csv", "--k", "2", "--out", s(&out)]), Some(3));
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "a,b\n1,2\n3,oops\n").unwrap();
    let o = hkens(&["run", "--input", s(&bad), "--k", "2", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 3, column 2"));
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "bogus = 1\n").unwrap();
    assert_eq!(code(&["run", "--input", s(&input), "--config", s(&cfg), "--out", s(&out)]), Some(2));
    assert_eq!(
        code(&["metrics", "--input", s(&input), "--partition", s(&dir.path().join("none.txt"))]),
        Some(3)
    );
}
