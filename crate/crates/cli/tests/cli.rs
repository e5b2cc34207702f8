use std::path::Path;
use std::process::{Command, Output};

fn snngx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snngx")).args(args).output().expect("spawn snngx")
}

fn ok(args: &[&str]) -> String {
    let out = snngx(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Generates data, trains and quantizes a small network under `dir`.
fn prepare(dir: &Path) {
    let data = dir.join("data.sngx");
    let float = dir.join("float.json");
    let q8 = dir.join("q8.json");
    ok(&[
        "gen-data", "--classes", "2", "--features", "16", "--timesteps", "10", "--samples-per-class", "20",
        "--seed", "3", "--out", s(&data),
    ]);
    ok(&["train", "--data", s(&data), "--arch", "16F-16F-2F", "--epochs", "5", "--seed", "1", "--out", s(&float)]);
    ok(&["quantize", "--network", s(&float), "--out", s(&q8)]);
}

fn encrypt(dir: &Path, out: &Path, workers: &str) -> String {
    ok(&[
        "encrypt", "--network", s(&dir.join("q8.json")), "--data", s(&dir.join("data.sngx")), "--epsilon", "12",
        "--enc-samples", "8", "--seed", "5", "--max-workers", workers, "--out-dir", s(out),
    ])
}

#[test]
fn pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepare(d);
    let stdout = encrypt(d, &d.join("enc"), "2");
    for field in ["final accuracy", "distance", "genome length", "key"] {
        assert!(stdout.contains(field), "missing `{field}` in {stdout}");
    }
    for f in ["config.json", "key.json", "encrypted.json", "report.json", "report.csv"] {
        assert!(d.join("enc").join(f).is_file(), "{f} not written");
    }
    let enc = d.join("enc/encrypted.json");
    let key = d.join("enc/key.json");
    let data = d.join("data.sngx");
    let dec = d.join("decrypted.json");
    ok(&["decrypt", "--network", s(&enc), "--key", s(&key), "--out", s(&dec)]);
    let plain = ok(&["eval", "--network", s(&d.join("q8.json")), "--data", s(&data)]);
    let restored = ok(&["eval", "--network", s(&dec), "--data", s(&data)]);
    let keyed = ok(&["eval", "--network", s(&enc), "--key", s(&key), "--data", s(&data)]);
    assert_eq!(plain, restored);
    assert_eq!(plain, keyed);
    let hw = ok(&["hwsim", "--network", s(&enc), "--key", s(&key), "--data", s(&data)]);
    let fixed = ok(&["eval", "--network", s(&dec), "--data", s(&data), "--fixed"]);
    let acc = |t: &str| t.split_whitespace().nth(1).unwrap().to_string();
    assert_eq!(acc(&hw), acc(&fixed));
    let cost = ok(&["cost", "--published"]);
    assert!(cost.lines().count() > 1);
    let cx = ok(&["attack-complexity", "--n", "64", "--k-max", "4"]);
    assert_eq!(cx.lines().count(), 6);
}

#[test]
fn encryption_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepare(d);
    encrypt(d, &d.join("w1"), "1");
    encrypt(d, &d.join("w4"), "4");
    for f in ["key.json", "encrypted.json", "report.csv"] {
        let a = std::fs::read(d.join("w1").join(f)).unwrap();
        let b = std::fs::read(d.join("w4").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between 1 and 4 workers");
    }
}

#[test]
fn exit_codes_separate_validation_from_runtime_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.sngx");
    std::fs::write(&bad, b"NOPE0000").unwrap();
    let out = snngx(&["eval", "--network", s(&bad), "--data", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[E_"));

    let missing = dir.path().join("missing.json");
    let out = snngx(&["eval", "--network", s(&missing), "--data", s(&missing)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn refuses_to_overwrite_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepare(d);
    let q8 = d.join("q8.json");
    let before = std::fs::read(&q8).unwrap();
    let out = snngx(&["quantize", "--network", s(&d.join("float.json")), "--out", s(&d.join("float.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(std::fs::read(&q8).unwrap(), before);
}
