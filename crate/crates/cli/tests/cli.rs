use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn maxlab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn out_dir(o: &Output) -> PathBuf {
    let s = stdout(o);
    let line = s.lines().find(|l| l.starts_with("outputs: ")).expect("outputs line");
    PathBuf::from(line.trim_start_matches("outputs: "))
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn exact_survivor_law_example() {
    let tmp = tempfile::tempdir().unwrap();
    let o = maxlab(tmp.path(), &["exact", "--map", "doubling", "--ball", "0:1/4", "--n", "2"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("5/8") && s.contains("0.625"), "{s}");
    assert!(s.contains("config_hash="));
}

#[test]
fn classify_example() {
    let tmp = tempfile::tempdir().unwrap();
    let o = maxlab(tmp.path(), &["classify", "--family", "cloglog:1.5", "--theta", "1"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("Converges (SymbolicRule)"));
}

#[test]
fn theta_example() {
    let tmp = tempfile::tempdir().unwrap();
    let o = maxlab(
        tmp.path(),
        &["theta", "--map", "doubling", "--center", "0", "--q", "1", "--mu-target", "1e-3"],
    );
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("closed form 0.5, exact 1/2, estimate"), "{s}");
    assert!(s.contains(" ± "));
}

#[test]
fn manifest_rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 4] = [
        &["theta", "--map", "doubling", "--center", "1/3", "--q", "2", "--steps", "20000", "--orbits", "5"],
        &["simulate", "--system", "doubling", "--center", "golden", "--threshold", "cloglog:1", "--n-max", "5000", "--n-min", "50", "--orbits", "20"],
        &["blocking", "--map", "doubling", "--ball", "0:1/8", "--l", "6,7", "--s", "1/2", "--t", "1"],
        &["philipp", "--orbits", "5", "--n-grid", "100,1000"],
    ];
    for args in runs {
        let first = maxlab(tmp.path(), args);
        assert!(first.status.success(), "{args:?}: {}", String::from_utf8_lossy(&first.stderr));
        let dir = out_dir(&first);
        let before = files(&dir);
        let manifest = dir.join("manifest.json");
        let again = maxlab(tmp.path(), &[args[0], "--manifest", manifest.to_str().unwrap()]);
        assert!(again.status.success());
        assert_eq!(stdout(&again), stdout(&first));
        assert_eq!(out_dir(&again), dir);
        assert_eq!(files(&dir), before);
        let generic = maxlab(tmp.path(), &["experiment", "--manifest", manifest.to_str().unwrap()]);
        assert_eq!(stdout(&generic), stdout(&first));
    }
}

#[test]
fn worker_count_only_changes_wall_time() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "eah", "--system", "doubling", "--center", "golden", "--threshold", "cloglog:2", "--n-max", "20000",
        "--n-min", "100", "--orbits", "30",
    ];
    let one = maxlab(a.path(), &[&args[..], &["--workers", "1"]].concat());
    let four = maxlab(b.path(), &[&args[..], &["--workers", "4"]].concat());
    let (da, db) = (out_dir(&one), out_dir(&four));
    assert_eq!(da.strip_prefix(a.path()).unwrap(), db.strip_prefix(b.path()).unwrap());
    assert_eq!(files(&da), files(&db));
}

#[test]
fn seed_override_changes_the_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["theta", "--map", "doubling", "--center", "0", "--steps", "20000", "--orbits", "2"];
    let a = maxlab(tmp.path(), &args);
    let b = maxlab(tmp.path(), &[&args[..], &["--seed", "5"]].concat());
    assert_ne!(out_dir(&a), out_dir(&b));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = maxlab(tmp.path(), &["exact", "--map", "nope", "--ball", "0:1/4", "--n", "2"]);
    assert_eq!(bad.status.code(), Some(2));
    let missing = maxlab(tmp.path(), &["classify"]);
    assert_eq!(missing.status.code(), Some(2));
    let unparsable = maxlab(tmp.path(), &["exact", "--n", "x"]);
    assert_eq!(unparsable.status.code(), Some(2));
    let cap = maxlab(tmp.path(), &["exact", "--map", "doubling", "--recurrence", "1/8", "--n", "40"]);
    assert_eq!(cap.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&cap.stderr).contains("branch cap"));

    let ok = maxlab(tmp.path(), &["exact", "--map", "doubling", "--ball", "0:1/4", "--n", "1"]);
    let manifest = out_dir(&ok).join("manifest.json");
    let wrong = maxlab(tmp.path(), &["philipp", "--manifest", manifest.to_str().unwrap()]);
    assert_eq!(wrong.status.code(), Some(2));
}

#[test]
fn output_root_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_maxlab"))
        .args(["classify", "--family", "power:0.5"])
        .env("MAXLAB_OUT", tmp.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(out_dir(&o).starts_with(tmp.path()));
    assert!(out_dir(&o).join("summary.json").exists());
}
