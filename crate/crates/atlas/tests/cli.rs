use std::fs;
use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use atlas_core::surprise::run_surprise_range;
use atlas_core::{MetricKind, ModelSpec};
use serde_json::Value;

const NYT: &str = "date,county,state,fips,cases,deaths
2021-01-01,Adams,Ohio,39001,10,0
2021-01-01,Allen,Ohio,39003,40,1
2021-01-02,Adams,Ohio,39001,12,0
2021-01-02,Allen,Ohio,39003,47,1
2021-01-03,Adams,Ohio,39001,15,1
2021-01-03,Allen,Ohio,39003,51,2
";

const CENSUS: &str = "fips,population\n39001,27000\n39003,102000\n";

fn atlas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atlas"))
        .args(args)
        .env_remove("ATLAS_DATA_DIR")
        .env_remove("ATLAS_PORT")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {:?}", String::from_utf8_lossy(&o.stdout)))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        let f = Self {
            dir: tempfile::tempdir().unwrap(),
        };
        fs::write(f.path("nyt.csv"), NYT).unwrap();
        fs::write(f.path("census.csv"), CENSUS).unwrap();
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn data(&self) -> PathBuf {
        self.path("data")
    }

    fn ingest(&self, source: &str, file: &str, extra: &[&str]) -> Output {
        let data = self.data();
        let file = self.path(file);
        let mut args = vec!["ingest", "--source", source, "--file", s(&file), "--data-dir", s(&data)];
        args.extend_from_slice(extra);
        atlas(&args)
    }

    fn load(&self) {
        assert_eq!(code(&self.ingest("census", "census.csv", &[])), 0);
        assert_eq!(code(&self.ingest("nyt", "nyt.csv", &[])), 0);
    }

    fn compute(&self, out: &str, extra: &[&str]) -> Output {
        let data = self.data();
        let out = self.path(out);
        let mut args = vec!["compute", "--data-dir", s(&data), "--out", s(&out)];
        args.extend_from_slice(extra);
        atlas(&args)
    }
}

#[test]
fn ingest_valid_file() {
    let f = Fixture::new();
    let o = f.ingest("nyt", "nyt.csv", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = stdout_json(&o);
    assert_eq!(report["rows"], 6);
    assert_eq!(report["accepted"], 6);
    assert_eq!(report["source"], "nyt");
    assert!(f.data().join("snapshot.json").is_file());
}

#[test]
fn ingest_with_bad_row_is_partial() {
    let f = Fixture::new();
    fs::write(f.path("bad.csv"), format!("{NYT}2021-01-04,Adams,Ohio,39001,many,1\n")).unwrap();
    let o = f.ingest("nyt", "bad.csv", &[]);
    assert_eq!(code(&o), 2);
    let report = stdout_json(&o);
    assert_eq!(report["rejected"]["malformed"], 1);
    assert_eq!(report["accepted"], 6);
    // The good rows were loaded.
    let out = f.path("export.csv");
    let e = atlas(&["export", "--data-dir", s(&f.data()), "--out", s(&out)]);
    assert_eq!(code(&e), 0);
    assert!(fs::read_to_string(&out)
        .unwrap()
        .contains("39001,cases_cum,2021-01-03,15"));
}

#[test]
fn strict_ingest_loads_nothing() {
    let f = Fixture::new();
    fs::write(f.path("bad.csv"), format!("{NYT}not-a-date,Adams,Ohio,39001,1,1\n")).unwrap();
    let o = f.ingest("nyt", "bad.csv", &["--strict"]);
    assert_eq!(code(&o), 2);
    stdout_json(&o);
    assert!(!f.data().join("snapshot.json").exists());
}

#[test]
fn ingest_missing_file_or_schema_is_an_error() {
    let f = Fixture::new();
    let o = f.ingest("nyt", "absent.csv", &[]);
    assert_eq!(code(&o), 1);
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent.csv"));

    fs::write(f.path("renamed.csv"), "date,county,state,fips,cases,dead\n").unwrap();
    let o = f.ingest("nyt", "renamed.csv", &[]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("deaths"));
}

#[test]
fn cdc_column_mapping() {
    let f = Fixture::new();
    fs::write(
        f.path("cdc.csv"),
        "Date,Location,Administered,Series_Complete_Yes\n01/05/2021,OH,1000,10\n01/06/2021,OH,1500,40\n",
    )
    .unwrap();
    fs::write(
        f.path("columns.json"),
        r#"{"date":"Date","state":"Location","doses_administered":"Administered",
            "people_fully_vaccinated":"Series_Complete_Yes","date_format":"%m/%d/%Y"}"#,
    )
    .unwrap();
    let columns = f.path("columns.json");
    let o = f.ingest("cdc", "cdc.csv", &["--columns", s(&columns)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["accepted"], 2);
    let o = f.ingest("cdc", "cdc.csv", &[]);
    assert_eq!(code(&o), 1);
}

#[test]
fn compute_outputs() {
    let f = Fixture::new();
    f.load();
    let o = f.compute(
        "single.jsonl",
        &["--metric", "cases_daily", "--models", "population_proportional"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = stdout_json(&o);
    assert_eq!(summary["frames"], 3);
    let frames = atlas::frames::read_jsonl(fs::read(f.path("single.jsonl")).unwrap().as_slice()).unwrap();
    assert!(frames
        .iter()
        .flat_map(|f| &f.entries)
        .all(|e| e.surprise == 0.0 && e.signed == 0.0));

    // Re-read output equals the in-memory frames.
    let o = f.compute(
        "all.jsonl",
        &["--metric", "cases_cum", "--from", "2021-01-01", "--to", "2021-01-03"],
    );
    assert_eq!(code(&o), 0);
    let store = atlas::store::Store::open_existing(f.data()).unwrap();
    let models = ModelSpec::default_set(false);
    let want = run_surprise_range(
        MetricKind::CasesCum,
        "2021-01-01".parse().unwrap(),
        "2021-01-03".parse().unwrap(),
        &models,
        &store.snapshot(),
    )
    .unwrap();
    let got = atlas::frames::read_jsonl(fs::read(f.path("all.jsonl")).unwrap().as_slice()).unwrap();
    assert_eq!(got, want);

    // Same command twice, identical files.
    f.compute(
        "again.jsonl",
        &["--metric", "cases_cum", "--from", "2021-01-01", "--to", "2021-01-03"],
    );
    assert_eq!(
        fs::read(f.path("all.jsonl")).unwrap(),
        fs::read(f.path("again.jsonl")).unwrap()
    );

    let o = f.compute("frames.csv", &["--metric", "deaths_daily", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(f.path("frames.csv")).unwrap();
    assert!(csv.starts_with("date,metric,fips,observed,expected,surprise,signed\n"));
    assert_eq!(csv.lines().count(), 1 + 3 * 2);
}

#[test]
fn compute_exit_codes() {
    let f = Fixture::new();
    f.load();
    let o = f.compute(
        "x.jsonl",
        &["--metric", "cases_daily", "--from", "2025-01-01", "--to", "2025-02-01"],
    );
    assert_eq!(code(&o), 3);
    assert!(!f.path("x.jsonl").exists());
    let o = f.compute("x.jsonl", &["--metric", "vax_doses_cum"]);
    assert_eq!(code(&o), 3);
    let o = f.compute("x.jsonl", &["--metric", "cases_daily", "--models", "bogus"]);
    assert_eq!(code(&o), 1);
    let o = f.compute(
        "x.jsonl",
        &["--metric", "cases_daily", "--from", "2021-02-01", "--to", "2021-01-01"],
    );
    assert_eq!(code(&o), 1);
    let o = f.compute("x.jsonl", &["--metric", "nope"]);
    assert_eq!(code(&o), 1);
    let empty = tempfile::tempdir().unwrap();
    let out = empty.path().join("x.jsonl");
    let o = atlas(&[
        "compute",
        "--data-dir",
        s(&empty.path().join("none")),
        "--metric",
        "cases_daily",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn data_dir_from_environment() {
    let f = Fixture::new();
    let file = f.path("nyt.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_atlas"))
        .args(["ingest", "--source", "nyt", "--file", s(&file)])
        .env("ATLAS_DATA_DIR", f.data())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(f.data().join("snapshot.json").is_file());
}

#[test]
fn export_formats() {
    let f = Fixture::new();
    f.load();
    let csv = f.path("out.csv");
    let o = atlas(&["export", "--data-dir", s(&f.data()), "--out", s(&csv)]);
    assert_eq!(code(&o), 0);
    stdout_json(&o);
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("region,metric,date,value\n"));
    assert!(text.contains("39003,cases_daily,2021-01-03,4\n"));
    let json = f.path("out.json");
    let o = atlas(&[
        "export",
        "--data-dir",
        s(&f.data()),
        "--format",
        "json",
        "--out",
        s(&json),
    ]);
    assert_eq!(code(&o), 0);
    let back: atlas_core::Snapshot = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    let store = atlas::store::Store::open_existing(f.data()).unwrap();
    assert_eq!(back.version(), store.snapshot().version());
    assert_eq!(
        back.iter_series().collect::<Vec<_>>(),
        store.snapshot().iter_series().collect::<Vec<_>>()
    );
}

#[test]
fn demo_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = atlas(&["demo", "--out", s(out)]);
        assert_eq!(code(&o), 0);
        assert_eq!(stdout_json(&o)["demo"]["counties"], 50);
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 7);
    for name in names {
        assert_eq!(
            fs::read(a.join(&name)).unwrap(),
            fs::read(b.join(&name)).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn demo_with_ingest_and_bad_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("demo");
    let o = atlas(&["demo", "--out", s(&out), "--ingest"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    let reports = v["ingested"].as_array().unwrap();
    assert_eq!(reports.len(), 5);
    assert!(reports.iter().all(|r| r["rejected"].as_object().unwrap().is_empty()));
    assert!(out.join("data/snapshot.json").is_file());

    // A path below a regular file cannot be created.
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = atlas(&["demo", "--out", s(&blocker.join("sub"))]);
    assert_eq!(code(&o), 1);
    assert!(o.stdout.is_empty());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&atlas(&[])), 1);
    assert_eq!(code(&atlas(&["frobnicate"])), 1);
    assert_eq!(code(&atlas(&["ingest", "--source", "nyt"])), 1);
    assert_eq!(code(&atlas(&["ingest", "--source", "bbc", "--file", "x"])), 1);
    assert_eq!(code(&atlas(&["--help"])), 0);
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

fn http_get(port: u16, path: &str) -> Option<(u16, String)> {
    let mut stream = TcpStream::connect(("127.0.0.1", port)).ok()?;
    stream.set_read_timeout(Some(Duration::from_secs(5))).ok()?;
    write!(
        stream,
        "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n"
    )
    .ok()?;
    let mut text = String::new();
    stream.read_to_string(&mut text).ok()?;
    let status = text.split_whitespace().nth(1)?.parse().ok()?;
    let body = text.split_once("\r\n\r\n")?.1.to_string();
    Some((status, body))
}

fn wait_for(port: u16, path: &str) -> (u16, String) {
    let deadline = Instant::now() + Duration::from_secs(20);
    loop {
        if let Some(r) = http_get(port, path) {
            return r;
        }
        assert!(Instant::now() < deadline, "service did not come up");
        std::thread::sleep(Duration::from_millis(50));
    }
}

fn serve(config: &Path, port: u16) -> Child {
    Command::new(env!("CARGO_BIN_EXE_atlas"))
        .args(["serve", "--config", s(config)])
        .env("ATLAS_PORT", port.to_string())
        .env_remove("ATLAS_DATA_DIR")
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap()
}

fn write_config(f: &Fixture) -> PathBuf {
    fs::write(
        f.path("boundaries.geojson"),
        r#"{"type":"FeatureCollection","features":[{"type":"Feature","properties":{"fips":"39001"},"geometry":null}]}"#,
    )
    .unwrap();
    let p = f.path("config.json");
    fs::write(
        &p,
        r#"{"data_dir": "data", "boundaries": "boundaries.geojson", "reload_interval_ms": 100}"#,
    )
    .unwrap();
    p
}

#[cfg(unix)]
#[test]
fn serve_reloads_and_stops_on_sigint() {
    let f = Fixture::new();
    assert_eq!(code(&f.ingest("census", "census.csv", &[])), 0);
    let config = write_config(&f);
    let port = free_port();
    let mut child = serve(&config, port);
    let (status, body) = wait_for(port, "/meta");
    assert_eq!(status, 200);
    let v0 = serde_json::from_str::<Value>(&body).unwrap()["version"]
        .as_u64()
        .unwrap();

    // A second instance on the same port fails to bind.
    let clash = Command::new(env!("CARGO_BIN_EXE_atlas"))
        .args(["serve", "--config", s(&config)])
        .env("ATLAS_PORT", port.to_string())
        .output()
        .unwrap();
    assert_eq!(code(&clash), 1);

    // Ingest from another process; the service picks it up.
    assert_eq!(code(&f.ingest("nyt", "nyt.csv", &[])), 0);
    let deadline = Instant::now() + Duration::from_secs(20);
    loop {
        let (_, body) = wait_for(port, "/meta");
        let meta: Value = serde_json::from_str(&body).unwrap();
        if meta["version"].as_u64().unwrap() > v0 {
            assert_eq!(meta["min_date"], "2021-01-01");
            break;
        }
        assert!(Instant::now() < deadline, "snapshot was not reloaded");
        std::thread::sleep(Duration::from_millis(100));
    }

    let kill = Command::new("kill")
        .args(["-INT", &child.id().to_string()])
        .status()
        .unwrap();
    assert!(kill.success());
    let status = child.wait().unwrap();
    assert_eq!(status.code(), Some(0));
    let mut err = String::new();
    child.stderr.take().unwrap().read_to_string(&mut err).unwrap();
    assert!(err.contains("listening"), "{err}");
}

#[test]
fn serve_rejects_bad_config() {
    let f = Fixture::new();
    fs::write(f.path("broken.json"), r#"{"data_dir": "data", "boundaries": "#).unwrap();
    let o = atlas(&["serve", "--config", s(&f.path("broken.json"))]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("broken.json"));

    fs::write(
        f.path("unknown.json"),
        r#"{"data_dir": "data", "boundaries": "b.geojson", "colour": 1}"#,
    )
    .unwrap();
    assert_eq!(code(&atlas(&["serve", "--config", s(&f.path("unknown.json"))])), 1);

    // Boundary file missing.
    fs::write(
        f.path("nob.json"),
        r#"{"data_dir": "data", "boundaries": "missing.geojson"}"#,
    )
    .unwrap();
    assert_eq!(code(&atlas(&["serve", "--config", s(&f.path("nob.json"))])), 1);

    fs::write(
        f.path("port.json"),
        r#"{"port": 0, "data_dir": "data", "boundaries": "b.geojson"}"#,
    )
    .unwrap();
    assert_eq!(code(&atlas(&["serve", "--config", s(&f.path("port.json"))])), 1);
    assert_eq!(code(&atlas(&["serve", "--config", s(&f.path("absent.json"))])), 1);
}
