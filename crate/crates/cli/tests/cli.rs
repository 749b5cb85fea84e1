use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn thermpeps(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermpeps"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&read(&dir.join("manifest.json"))).unwrap()
}

const SMALL_RUN: &[&str] = &[
    "--h-frac",
    "0.5",
    "--D",
    "2",
    "--M",
    "6",
    "--dbeta",
    "0.05",
    "--beta-max",
    "0.2",
    "--log",
    "warn",
];

fn evolve_infinite(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["evolve-infinite", "--out", out.to_str().unwrap()];
    args.extend_from_slice(SMALL_RUN);
    args.extend_from_slice(extra);
    thermpeps(&args)
}

#[test]
fn oracle_check_passes_on_two_by_two() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("oracle");
    let o = thermpeps(&[
        "oracle-check",
        "--lattice",
        "2x2",
        "--beta",
        "0.2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let checks = read(&out.join("checks.csv"));
    assert!(checks.starts_with("check,value,tolerance,pass\n"));
    assert_eq!(checks.lines().count(), 8);
    assert!(checks.lines().skip(1).all(|l| l.ends_with(",true")), "{checks}");
    let m = manifest(&out);
    assert_eq!(m["status"], "ok");
    assert_eq!(m["subcommand"], "oracle-check");
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert!(read(&out.join("config.ini")).contains("lattice = 2x2"));
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("x");
    let out = out.to_str().unwrap();
    // no field
    let o = thermpeps(&["evolve-infinite", "--out", out, "--dbeta", "0.1", "--beta-max", "1"]);
    assert_eq!(code(&o), 2);
    // both spellings of the field
    let o = thermpeps(&[
        "evolve-infinite",
        "--out",
        out,
        "--h",
        "1",
        "--h-frac",
        "0.5",
        "--dbeta",
        "0.1",
        "--beta-max",
        "1",
    ]);
    assert_eq!(code(&o), 2);
    // unknown key in the file
    let cfg = tmp.path().join("bad.ini");
    std::fs::write(&cfg, "h = 1\nbogus = 3\n").unwrap();
    let o = thermpeps(&["evolve-infinite", "--out", out, "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
    // invalid values are caught by validation
    let o = thermpeps(&["onsager-bench", "--out", out, "--M", "0"]);
    assert_eq!(code(&o), 2);
    let o = thermpeps(&[
        "evolve-finite",
        "--out",
        out,
        "--N",
        "3",
        "--h",
        "1",
        "--dbeta",
        "0.1",
        "--beta-max",
        "1",
        "--pairs",
        "0:0-3:3",
    ]);
    assert_eq!(code(&o), 2);
    let o = thermpeps(&["no-such-command"]);
    assert_eq!(code(&o), 2);
    // nothing ran, so nothing was written
    assert!(!Path::new(out).exists());
}

#[test]
fn oversized_oracle_lattice_exits_with_four() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("big");
    let o = thermpeps(&["oracle-check", "--lattice", "5x5", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(manifest(&out)["status"], "failed");
}

#[test]
fn unconverged_update_exits_with_three() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let o = thermpeps(&[
        "evolve-infinite",
        "--out",
        out.to_str().unwrap(),
        "--h-frac",
        "0.5",
        "--D",
        "2",
        "--M",
        "6",
        "--dbeta",
        "0.05",
        "--beta-max",
        "0.2",
        "--tol-w",
        "1e-300",
        "--max-outer",
        "2",
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m["status"], "failed");
    assert!(m["error"].as_str().unwrap().contains("isometry"));
}

#[test]
fn echoed_config_reproduces_the_run() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let o = evolve_infinite(&a, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let traj = read(&a.join("trajectory.csv"));
    let lines: Vec<&str> = traj.lines().collect();
    assert_eq!(lines[0], "beta,Z,X,merit,env_iters");
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("0.200000000000,"));

    let cfg = a.join("config.ini");
    let o = thermpeps(&[
        "evolve-infinite",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(read(&b.join("trajectory.csv")), traj);
    assert_eq!(
        std::fs::read(a.join("checkpoint.bin")).unwrap(),
        std::fs::read(b.join("checkpoint.bin")).unwrap()
    );
    assert_eq!(manifest(&a)["config_hash"], manifest(&b)["config_hash"]);

    // flags beat the file
    let c = tmp.path().join("c");
    let o = thermpeps(&[
        "evolve-infinite",
        "--config",
        cfg.to_str().unwrap(),
        "--beta-max",
        "0.1",
        "--out",
        c.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(read(&c.join("trajectory.csv")).lines().count(), 3);
    assert_ne!(manifest(&a)["config_hash"], manifest(&c)["config_hash"]);
}

#[test]
fn resume_checks_the_model() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    assert_eq!(code(&evolve_infinite(&a, &[])), 0);
    let ck = a.join("checkpoint.bin");

    // resuming a finished run adds nothing
    let b = tmp.path().join("b");
    let o = evolve_infinite(&b, &["--resume", ck.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(&b.join("trajectory.csv")), read(&a.join("trajectory.csv")));
    assert!(manifest(&b)["resumed_from"]
        .as_str()
        .unwrap()
        .ends_with("checkpoint.bin"));

    let o = evolve_infinite(
        &tmp.path().join("c"),
        &["--delta", "0.1", "--resume", ck.to_str().unwrap()],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn correlator_reads_an_infinite_checkpoint() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    assert_eq!(code(&evolve_infinite(&a, &[])), 0);
    let out = tmp.path().join("corr");
    let o = thermpeps(&[
        "correlator",
        "--checkpoint",
        a.join("checkpoint.bin").to_str().unwrap(),
        "--r-max",
        "12",
        "--tail",
        "2:8",
        "--power",
        "1:4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = read(&out.join("correlator.csv"));
    let rows: Vec<Vec<f64>> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(table.lines().next(), Some("R,Czz"));
    assert_eq!(rows.len(), 13);
    // short-range order above the transition: positive and decaying
    assert!(
        rows.windows(2).skip(1).all(|w| w[1][1] < w[0][1] && w[1][1] > 0.0),
        "{table}"
    );
    let fits = read(&out.join("fits.csv"));
    assert!(fits.starts_with("kind,xi,eta,amplitude,window_lo,window_hi,residual\ntransfer,"));
    assert!(fits.contains("\nexponential,") && fits.contains("\npower,"));
}

#[test]
fn finite_run_writes_zero_based_site_labels() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("fin");
    let o = thermpeps(&[
        "evolve-finite",
        "--N",
        "3",
        "--h-frac",
        "0.6667",
        "--D",
        "2",
        "--dbeta",
        "0.05",
        "--beta-max",
        "0.2",
        "--sample-stride",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&out.join("correlators.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "beta,site1,site2,value");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0.100000000000,0:0,2:2,"));
    assert!(out.join("checkpoint.bin").exists());
}

#[test]
fn onsager_bench_uses_the_output_root() {
    let tmp = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_thermpeps"))
        .args(["onsager-bench", "--M", "4,6", "--beta", "0.6", "--log", "warn"])
        .env("THERMPEPS_OUTPUT_ROOT", tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dirs: Vec<_> = std::fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(dirs.len(), 1);
    let dir = &dirs[0];
    let name = dir.file_name().unwrap().to_str().unwrap();
    assert!(name.starts_with("onsager-bench-") && name.len() == "onsager-bench-".len() + 12);
    let csv = read(&dir.join("scaling.csv"));
    assert_eq!(csv.lines().next(), Some("M,xi,Z,eta,env_iters"));
    assert_eq!(csv.lines().count(), 3);
    let z: f64 = csv.lines().nth(2).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((z - 0.973_608_667).abs() < 1e-3, "{csv}");
    assert!(read(&dir.join("scaling_fit.csv")).starts_with("quantity,prefactor,exponent\nxi,"));
}
