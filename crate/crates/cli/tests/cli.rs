mod common;

use std::thread;
use std::time::Duration;

use common::*;
use securetrack_backend::Database;
use serde_json::{json, Value};

fn s(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn estimate_memory_examples() {
    for (args, want) in [
        (vec!["--uniform", "100"], "21.88 KB\n"),
        (vec!["--uniform", "0"], "0.00 KB\n"),
        (vec!["--days", "1,0,0,0,0,0,0,0,0,0,0,0,0,0"], "0.02 KB\n"),
    ] {
        let out = cli(&[&["estimate-memory"], args.as_slice()].concat());
        assert!(out.status.success());
        assert_eq!(stdout(&out), want);
    }
}

#[test]
fn estimate_memory_usage_errors() {
    for args in [
        vec![],
        vec!["--days", "1,2,3"],
        vec!["--uniform", "-1"],
        vec!["--uniform", "1", "--days", "1"],
    ] {
        let out = cli(&[&["estimate-memory"], args.as_slice()].concat());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(stdout(&out).is_empty());
        assert!(!stderr(&out).is_empty());
    }
}

#[test]
fn sim_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["sim", "run", s(&scenario("triangle.toml")), "-o", s(dir.path())]);
    assert!(out.status.success(), "{}", stderr(&out));
    let names: Vec<_> = tree(dir.path()).into_iter().map(|(n, _)| n).collect();
    assert_eq!(
        names,
        ["1.strk", "2.strk", "3.strk", "summary.json", "trace.jsonl"]
    );
    let summary: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(summary["stores"]["3"]["size"], 2);
    assert_eq!(summary["stores"]["3"]["peers"], json!([1, 2]));
    assert_eq!(summary["stores"]["1"]["size"], 1);
    let on_disk: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(on_disk, summary);
}

#[test]
fn sim_run_text_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&[
        "sim",
        "run",
        s(&scenario("two_apart.toml")),
        "-o",
        s(dir.path()),
        "--format",
        "text",
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("trace.txt")).unwrap();
    assert!(text.lines().next().unwrap().contains("Transmitting"));
}

#[test]
fn sim_run_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = cli(&[
            "sim",
            "run",
            s(&scenario("classroom.toml")),
            "-o",
            s(d.path()),
            "--seed",
            "7",
        ]);
        assert!(out.status.success());
    }
    assert_eq!(tree(a.path()), tree(b.path()));
}

#[test]
fn sim_run_bad_config_touches_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("out");
    let out = cli(&["sim", "run", "/nonexistent/triangle.toml", "-o", s(&target)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nonexistent"));
    assert!(!target.exists());

    let bad = dir.path().join("bad.toml");
    std::fs::write(
        &bad,
        "schema = 1\nduration = 60\n[[devices]]\nid = 0\nx = 0.0\ny = 0.0\n",
    )
    .unwrap();
    let out = cli(&["sim", "run", s(&bad), "-o", s(&target)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!target.exists());

    let out = cli(&["sim", "run", s(&scenario("triangle.toml"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_reports() {
    let out = cli(&["sim", "verify", s(&scenario("triangle.toml"))]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "detected 2\nmissed 0\nspurious 0\n");

    // the 30 s pass is neither detected nor missed
    let out = cli(&["sim", "verify", s(&scenario("short_contact.toml"))]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert_eq!(stdout(&out), "detected 0\nmissed 0\nspurious 0\n");

    let out = cli(&["sim", "verify", s(&scenario("two_apart.toml")), "--band", "0.5"]);
    assert!(out.status.success());
    let out = cli(&["sim", "verify", s(&scenario("two_apart.toml")), "--band", "7"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_existing_dumps() {
    let dir = tempfile::tempdir().unwrap();
    assert!(
        cli(&["sim", "run", s(&scenario("triangle.toml")), "-o", s(dir.path())])
            .status
            .success()
    );
    let ok = cli(&[
        "sim",
        "verify",
        s(&scenario("triangle.toml")),
        "--from",
        s(dir.path()),
    ]);
    assert!(ok.status.success());

    let path = dir.path().join("3.strk");
    let mut bytes = std::fs::read(&path).unwrap();
    bytes[22] ^= 0x40;
    std::fs::write(&path, &bytes).unwrap();
    let bad = cli(&[
        "sim",
        "verify",
        s(&scenario("triangle.toml")),
        "--from",
        s(dir.path()),
    ]);
    assert_ne!(bad.status.code(), Some(0));

    // a missing device store, and a store emptied of contacts
    std::fs::remove_file(&path).unwrap();
    assert_eq!(
        cli(&[
            "sim",
            "verify",
            s(&scenario("triangle.toml")),
            "--from",
            s(dir.path())
        ])
        .status
        .code(),
        Some(1)
    );
    let empty = tempfile::tempdir().unwrap();
    assert!(
        cli(&["sim", "run", s(&scenario("two_apart.toml")), "-o", s(empty.path())])
            .status
            .success()
    );
    std::fs::copy(empty.path().join("1.strk"), dir.path().join("1.strk")).unwrap();
    std::fs::copy(dir.path().join("2.strk"), dir.path().join("3.strk")).unwrap();
    let out = cli(&[
        "sim",
        "verify",
        s(&scenario("triangle.toml")),
        "--from",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn device_decrypt_rows() {
    let dir = tempfile::tempdir().unwrap();
    assert!(
        cli(&["sim", "run", s(&scenario("triangle.toml")), "-o", s(dir.path())])
            .status
            .success()
    );
    let dump = dir.path().join("3.strk");

    let out = cli(&["device", "decrypt", s(&dump), "--node-id", "3"]);
    assert!(out.status.success());
    let peers: Vec<_> = stdout(&out)
        .lines()
        .map(|l| l.split('\t').next().unwrap().to_owned())
        .collect();
    assert_eq!(peers, ["1", "2"]);

    let wrong = cli(&["device", "decrypt", s(&dump), "--node-id", "4"]);
    assert_eq!(wrong.status.code(), Some(1));
    assert!(stderr(&wrong).contains("PadError"));

    let empty = tempfile::tempdir().unwrap();
    assert!(
        cli(&["sim", "run", s(&scenario("two_apart.toml")), "-o", s(empty.path())])
            .status
            .success()
    );
    let out = cli(&[
        "device",
        "decrypt",
        s(&empty.path().join("1.strk")),
        "--node-id",
        "1",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).is_empty());

    assert_eq!(
        cli(&["device", "decrypt", s(&dump), "--node-id", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        cli(&["device", "decrypt", "/nonexistent.strk", "--node-id", "3"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn serve_health_and_shutdown_flush() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("db.snap");
    let notices = dir.path().join("notices.log");
    let svc = Service::start(&["--db", s(&db), "--notifier", &format!("file:{}", s(&notices))]);
    let client = reqwest::blocking::Client::new();
    let health = client.get(format!("{}/healthz", svc.url)).send().unwrap();
    assert!(health.status().is_success());
    let resp = client
        .post(format!("{}/students", svc.url))
        .json(&json!({"student_id": "S1", "contact_info": "s1@uni.edu", "node_id": 1}))
        .send()
        .unwrap();
    assert_eq!(resp.status(), 201);
    assert!(svc.stop().success());
    assert!(Database::load(&db).unwrap().student("S1").is_some());
}

#[test]
fn serve_port_in_use() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("db.snap");
    let holder = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = holder.local_addr().unwrap().to_string();
    let out = cli(&["serve", "--listen", &addr, "--db", s(&db)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains(&addr));
}

#[test]
fn serve_rejects_bad_notifier() {
    let out = cli(&["serve", "--db", "x.snap", "--notifier", "smtp"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn killed_under_load_leaves_parseable_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("db.snap");
    let svc = Service::start(&["--db", s(&db), "--notifier", "memory"]);
    let url = svc.url.clone();
    let writers: Vec<_> = (0..4)
        .map(|w| {
            let url = url.clone();
            thread::spawn(move || {
                let client = reqwest::blocking::Client::new();
                for i in 0..10_000u64 {
                    let id = w * 100_000 + i + 1;
                    let body =
                        json!({"student_id": format!("S{id}"), "contact_info": "x@uni.edu", "node_id": id});
                    if client.post(format!("{url}/students")).json(&body).send().is_err() {
                        break;
                    }
                }
            })
        })
        .collect();
    thread::sleep(Duration::from_millis(700));
    drop(svc); // SIGKILL
    for w in writers {
        w.join().unwrap();
    }
    let reloaded = Database::load(&db).expect("snapshot parses after kill");
    assert!(reloaded.students().count() > 0);
    let stray: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name() != "db.snap" && !e.file_name().to_string_lossy().ends_with(".tmp"))
        .collect();
    assert!(stray.is_empty());
}
