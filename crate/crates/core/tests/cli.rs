use std::path::Path;
use std::process::{Command, Output};

fn reviewchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reviewchain"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = reviewchain(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn cost_table_defaults() {
    let out = ok(&["cost"]);
    assert!(out.contains("$747"), "{out}");
    assert!(out.contains("$0.247"), "{out}");
    assert!(out.contains("$3,287"), "{out}");
    assert!(out.contains("$1.09"), "{out}");

    let json: serde_json::Value = serde_json::from_str(&ok(&["cost", "--json", "--gwei", "1"])).unwrap();
    let rows = json.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["gas"], 168_818_750);
}

#[test]
fn cost_rejects_bad_rate() {
    let out = reviewchain(&["cost", "--eth-usd", "lots"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--eth-usd"));
}

#[test]
fn template_run_and_list() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.toml");
    let template = ok(&["scenario", "template"]);
    let small = template.replace("reviews = 100", "reviews = 8");
    assert_ne!(small, template);
    std::fs::write(&config, small).unwrap();

    let out_dir = dir.path().join("run");
    std::fs::create_dir(&out_dir).unwrap();
    let report = ok(&[
        "scenario",
        "run",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "4",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(report.contains("rating: security=Good trust=Medium cost=Medium"), "{report}");
    for f in ["chain.ndjson", "config.toml", "report.txt", "report.json"] {
        assert!(Path::new(&out_dir).join(f).exists(), "missing {f}");
    }

    for reader in ["local", "remote"] {
        let listed = ok(&[
            "reviews",
            "list",
            "--dir",
            out_dir.to_str().unwrap(),
            "--product",
            "app-0",
            "--reader",
            reader,
            "--json",
        ]);
        let listed: serde_json::Value = serde_json::from_str(&listed).unwrap();
        let listed = listed.as_array().unwrap();
        assert!(!listed.is_empty());
        assert!(listed.iter().all(|r| r["status"]["status"] == "verified"));
    }
}

#[test]
fn keystore_create_and_open() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("key.json");
    let seed = "00".repeat(32);
    let created = ok(&[
        "keystore",
        "create",
        "--seed",
        &seed,
        "--passphrase",
        "pw",
        "--preset",
        "light",
        "--out",
        file.to_str().unwrap(),
    ]);
    assert!(created.contains("de67406f7ae7006bdc8ce2231fe88f230a856b3b"), "{created}");
    let opened = ok(&["keystore", "open", "--file", file.to_str().unwrap(), "--passphrase", "pw"]);
    assert_eq!(created, opened);
    let wrong = reviewchain(&["keystore", "open", "--file", file.to_str().unwrap(), "--passphrase", "px"]);
    assert!(!wrong.status.success());
}
