//! Process-level behaviour of the `fraclab` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fraclab"))
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("fraclab-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

const SMALL: [&str; 6] = ["--set", "solve.born_modes=12", "--set", "solve.kernel_modes_1d=64", "--set", "solve.ibp_modes_1d=64"];

#[test]
fn rerun_is_byte_identical() {
    let (a, b) = (scratch("rerun-a"), scratch("rerun-b"));
    let mut args = vec!["solve", "--quiet"];
    args.extend(SMALL);
    let oa = run(&args, &a);
    let ob = bin().args(&args).arg("--out").arg(&b).env("FRACLAB_THREADS", "2").output().unwrap();
    assert_eq!(oa.status.code(), Some(0), "{}", String::from_utf8_lossy(&oa.stdout));
    assert_eq!(ob.status.code(), Some(0));
    let (fa, fb) = (csv_files(&a), csv_files(&b));
    assert_eq!(fa.len(), 4);
    assert_eq!(fa, fb);
    let text = String::from_utf8(fa[0].1.clone()).unwrap();
    assert!(text.starts_with("# fraclab "));
    assert!(text.contains("# config-sha256: "));
    assert!(text.contains("# check: "));
}

#[test]
fn tolerance_failure_exits_one_and_names_check() {
    let out = scratch("fail");
    let mut args = vec!["solve", "--set", "solve.poisson_modes=[32, 33]"];
    args.extend(SMALL);
    let o = run(&args, &out);
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("FAIL criterion  2"), "{stdout}");
    assert!(stdout.contains("failed check: exp_cos: residual reduction 32->33"), "{stdout}");
}

#[test]
fn config_errors_exit_two() {
    let out = scratch("config");
    for args in [
        vec!["solve", "--set", "s=1.5"],
        vec!["solve", "--set", "no_such_key=1"],
        vec!["solve", "--config", "/nonexistent/fraclab.toml"],
        vec!["solve", "--set", "schema=99"],
    ] {
        let o = run(&args, &out);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let bad = out.join("bad.toml");
    std::fs::write(&bad, "s = [unclosed").unwrap();
    let o = run(&["solve", "--config", bad.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["solve", "--quiet"]).env("FRACLAB_THREADS", "zero").arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().arg("bogus").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_is_read() {
    let out = scratch("file");
    let cfg = out.join("c.toml");
    std::fs::write(&cfg, "schema = 1\nseed = 3\n[solve]\nborn_modes = 12\nkernel_modes_1d = 64\nibp_modes_1d = 64\n").unwrap();
    let o = run(&["solve", "--quiet", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("c04_born.csv")).unwrap();
    assert!(text.contains("# seed: 3"));
}
