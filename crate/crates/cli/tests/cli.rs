//! End-to-end checks of the `expanse` binary: exit codes, determinism of
//! the artifacts, and the report command.

use std::fs;
use std::path::Path;
use std::process::Command;

fn expanse() -> Command {
    Command::new(env!("CARGO_BIN_EXE_expanse"))
}

fn write_affine_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("affine.conf");
    fs::write(
        &path,
        "[run]\nscenario = affine\n\n[gas]\ngamma = 1.5\ndelta = 1e-2\n\n[background]\nt_end = 200\n",
    )
    .unwrap();
    path
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    entries
}

#[test]
fn identical_configs_give_byte_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_affine_config(tmp.path());
    for sub in ["a", "b"] {
        let status = expanse()
            .arg("run")
            .arg(&cfg)
            .arg("--out")
            .arg(tmp.path().join(sub))
            .status()
            .unwrap();
        assert!(status.success(), "run {sub} failed");
    }
    let a = read_dir_bytes(&tmp.path().join("a"));
    let b = read_dir_bytes(&tmp.path().join("b"));
    assert!(!a.is_empty());
    assert_eq!(a, b, "artifacts differ between identical runs");
}

#[test]
fn thread_flag_does_not_affect_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_affine_config(tmp.path());
    for (sub, threads) in [("t1", "1"), ("t4", "4")] {
        let status = expanse()
            .arg("--threads")
            .arg(threads)
            .arg("run")
            .arg(&cfg)
            .arg("--out")
            .arg(tmp.path().join(sub))
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(
        read_dir_bytes(&tmp.path().join("t1")),
        read_dir_bytes(&tmp.path().join("t4"))
    );
}

#[test]
fn bad_config_exits_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.conf");
    fs::write(&cfg, "[run]\nscenario = warp\n").unwrap();
    let status = expanse().arg("run").arg(&cfg).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let status = expanse()
        .arg("run")
        .arg(tmp.path().join("missing.conf"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn invalid_gas_parameters_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("gas.conf");
    fs::write(&cfg, "[run]\nscenario = affine\n[gas]\ngamma = 0.5\n").unwrap();
    let status = expanse().arg("run").arg(&cfg).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn report_renders_run_and_rejects_empty_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_affine_config(tmp.path());
    let out = tmp.path().join("out");
    assert!(expanse()
        .arg("run")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let rep = expanse().arg("report").arg(&out).output().unwrap();
    assert!(rep.status.success());
    let text = String::from_utf8(rep.stdout).unwrap();
    assert!(text.contains("invariant checks"), "report output: {text}");
    assert!(text.contains("energy-conservation"));

    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let rep = expanse().arg("report").arg(&empty).status().unwrap();
    assert_eq!(rep.code(), Some(2));
}
