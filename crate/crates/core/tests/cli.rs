use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fracda_core::harness::{read_sweep_csv, RunReport, SWEEP_SCHEMA};

const SMALL: &str = r#"
seed = 11

[grid]
dim = 2
n = 16

[phys]
nu = 0.01
alpha = 1.25
mu = 5.0

[interpolant]
kind = "modal"
param = 4

[forcing]
kind = "modes"
modes = [{ k = [0, 2], amplitude = [[0.0, -0.5], [0.0, 0.0]] }]

[initial.u]
kind = "random"
slope = 1.0
l2 = 0.5

[initial.v]
kind = "zero"

[stepper]
dt = 0.005
t_end = 0.5
record_every = 2
checkpoint_every = 40

[report]
corpus_size = 20
"#;

fn fracda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracda")).args(args).output().expect("spawn fracda")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn presets() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../presets")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn same_config_gives_identical_series() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = fracda(&["--out", s(out), "run", "--config", s(&cfg)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(fs::read(a.join("series.csv")).unwrap(), fs::read(b.join("series.csv")).unwrap());
    assert_eq!(fs::read(a.join("v_final.ckpt")).unwrap(), fs::read(b.join("v_final.ckpt")).unwrap());
    for f in ["config.toml", "report.toml", "plot.gp", "u_final.ckpt"] {
        assert!(a.join(f).exists(), "missing {f}");
    }
}

#[test]
fn resume_from_checkpoint_reproduces_the_tail() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let full = tmp.path().join("full");
    assert!(fracda(&["--out", s(&full), "run", "--config", s(&cfg)]).status.success());
    let ckpt = full.join("checkpoints").join("step_00000040");
    assert!(ckpt.join("u.ckpt").exists() && ckpt.join("v.ckpt").exists());

    let resumed = tmp.path().join("resumed");
    let o = fracda(&["--out", s(&resumed), "run", "--config", s(&cfg), "--resume", s(&ckpt)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    assert_eq!(fs::read(full.join("u_final.ckpt")).unwrap(), fs::read(resumed.join("u_final.ckpt")).unwrap());
    assert_eq!(fs::read(full.join("v_final.ckpt")).unwrap(), fs::read(resumed.join("v_final.ckpt")).unwrap());
    // Every resumed row (except the energy residual, which is a finite
    // difference over a different window) equals the matching full-run row.
    let rows = |p: &Path| -> Vec<Vec<String>> {
        fs::read_to_string(p.join("series.csv"))
            .unwrap()
            .lines()
            .skip(2)
            .map(|l| l.split(',').map(String::from).collect())
            .collect()
    };
    let (a, b) = (rows(&full), rows(&resumed));
    assert!(!b.is_empty());
    let offset = a.iter().position(|r| r[0] == b[0][0]).expect("resume time present in full series");
    assert_eq!(a.len() - offset, b.len());
    for (x, y) in a[offset..].iter().zip(&b) {
        for (i, (p, q)) in x.iter().zip(y).enumerate() {
            if i != 6 {
                assert_eq!(p, q, "column {i} at t={}", x[0]);
            }
        }
    }
}

#[test]
fn report_subcommand_recomputes_the_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let out = tmp.path().join("run");
    assert!(fracda(&["--out", s(&out), "run", "--config", s(&cfg)]).status.success());
    let o = fracda(&["report", "--run", s(&out)]);
    assert!(o.status.success());
    let orig = RunReport::from_toml(&fs::read_to_string(out.join("report.toml")).unwrap()).unwrap();
    let again = RunReport::from_toml(&fs::read_to_string(out.join("report.recomputed.toml")).unwrap()).unwrap();
    assert_eq!(orig.threshold, again.threshold);
    assert_eq!(orig.decay_l2, again.decay_l2);
    assert_eq!(orig.absorbing_ball, again.absorbing_ball);
}

#[test]
fn strict_admissibility_rejects_alpha_one_in_3d() {
    let cfg = presets().join("inadmissible_3d.toml");
    let tmp = tempfile::tempdir().unwrap();
    let o = fracda(&["--strict-admissibility", "--out", s(tmp.path()), "run", "--config", s(&cfg)]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("inadmissible"));

    let o = fracda(&["--out", s(tmp.path()), "run", "--config", s(&cfg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = RunReport::from_toml(&fs::read_to_string(tmp.path().join("report.toml")).unwrap()).unwrap();
    assert!(!report.run.admissible);
}

#[test]
fn inadmissible_config_without_opt_in_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.replace("dim = 2\nn = 16", "dim = 3\nn = 8").replace("alpha = 1.25", "alpha = 1.0");
    let text = text.replace("param = 4", "param = 2").replace("k = [0, 2], amplitude = [[0.0, -0.5], [0.0, 0.0]]", "k = [0, 2, 0], amplitude = [[0.0, -0.5], [0.0, 0.0], [0.0, 0.0]]");
    let cfg = write_config(tmp.path(), "bad.toml", &text);
    let o = fracda(&["--out", s(tmp.path()), "run", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_configs_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        SMALL.replace("seed = 11", "seed = 11\nunknown_key = 1"),
        SMALL.replace("mu = 5.0", "mu = 500.0"),
        SMALL.replace("param = 4", "param = 9"),
        SMALL.replace("nu = 0.01", "nu = -1.0"),
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = write_config(tmp.path(), &format!("bad{i}.toml"), text);
        let o = fracda(&["--out", s(&tmp.path().join(format!("o{i}"))), "run", "--config", s(&cfg)]);
        assert_eq!(o.status.code(), Some(2), "case {i}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn empty_sweep_writes_only_the_header() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let out = tmp.path().join("sweep");
    let o = fracda(&["--out", s(&out), "sweep", "--config", s(&cfg), "--sweep", "mu="]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "{text}");
    assert_eq!(lines[0], SWEEP_SCHEMA);
    assert!(lines[1].starts_with("index,mu,status,"));
}

#[test]
fn sweep_rows_follow_the_grid_order() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", &SMALL.replace("t_end = 0.5", "t_end = 0.1"));
    let out = tmp.path().join("sweep");
    let o = fracda(&[
        "--threads", "2", "--out", s(&out), "sweep", "--config", s(&cfg), "--sweep", "mu=0,5", "--sweep", "param=2,4",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_sweep_csv(fs::File::open(out.join("summary.csv")).unwrap()).unwrap();
    assert_eq!(&header[..3], ["index", "mu", "param"]);
    let params: Vec<(String, String)> = rows.iter().map(|r| (r[1].clone(), r[2].clone())).collect();
    let want = [("0", "2"), ("0", "4"), ("5", "2"), ("5", "4")];
    assert_eq!(params.len(), 4);
    for ((a, b), (x, y)) in params.iter().zip(want) {
        assert_eq!((a.as_str(), b.as_str()), (x, y));
    }
    for i in 0..4 {
        assert!(out.join(format!("run_{i:03}")).join("report.toml").exists());
    }
}

#[test]
fn verify_flags_corrupted_reality() {
    let o = fracda(&["verify", "--suite", "core"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let o = fracda(&["verify", "--suite", "core", "--corrupt-reality"]);
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("FAIL core.reality_symmetry")), "{stdout}");
}

#[test]
fn verify_interp_and_inequalities_pass() {
    let tmp = tempfile::tempdir().unwrap();
    for suite in ["interp", "inequalities"] {
        let o = fracda(&["--out", s(tmp.path()), "verify", "--suite", suite]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    }
    let records = fracda_core::diagnostics::read_records_csv(fs::File::open(tmp.path().join("inequalities.csv")).unwrap())
        .unwrap();
    assert!(records.iter().any(|r| r.name == "kato_ponce"));
    assert!(records.iter().all(|r| r.ratio.is_finite()));
}

#[test]
fn unknown_suite_is_rejected() {
    assert_eq!(fracda(&["verify", "--suite", "nope"]).status.code(), Some(2));
}
