use std::process::{Command, Output};

use popgen_core::session::SESSION_CSV_HEADER;
use popgen_core::stats::BATCH_CSV_HEADER;
use serde_json::Value;

fn popgen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_popgen"))
        .args(args)
        .env_remove("POPGEN_BIND")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn printed_seed(out: &Output) -> String {
    let err = String::from_utf8_lossy(&out.stderr);
    err.lines()
        .find_map(|l| l.strip_prefix("seed: "))
        .expect("seed printed on stderr")
        .to_string()
}

#[test]
fn simulate_is_reproducible() {
    let args = [
        "simulate",
        "--kind",
        "ideal",
        "--n",
        "50",
        "--generations",
        "5",
        "--seed",
        "42",
    ];
    let a = popgen(&args);
    let b = popgen(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(printed_seed(&a), "42");
}

#[test]
fn printed_seed_replays_run() {
    let a = popgen(&["simulate", "--kind", "drift", "--generations", "30", "--format", "csv"]);
    let seed = printed_seed(&a);
    let b = popgen(&[
        "simulate",
        "--kind",
        "drift",
        "--generations",
        "30",
        "--format",
        "csv",
        "--seed",
        &seed,
    ]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn fixed_start_is_constant() {
    let out = stdout_json(&popgen(&[
        "simulate",
        "--kind",
        "drift",
        "--p0",
        "1.0",
        "--generations",
        "8",
        "--seed",
        "1",
    ]));
    let traj = &out["trajectory"];
    assert_eq!(traj["status"]["status"], "fixed");
    for g in traj["generations"].as_array().unwrap() {
        assert_eq!(g["freqs"]["p"], 1.0);
    }
}

#[test]
fn deterministic_lethal_selection_one_generation() {
    let out = stdout_json(&popgen(&[
        "simulate",
        "--kind",
        "selection",
        "--fitness",
        "1,1,0",
        "--mode",
        "deterministic",
        "--p0",
        "0.5",
        "--generations",
        "1",
        "--seed",
        "0",
    ]));
    let gens = out["trajectory"]["generations"].as_array().unwrap();
    assert_eq!(gens.len(), 2);
    let q = gens[1]["freqs"]["q"].as_f64().unwrap();
    assert!((q - 1.0 / 3.0).abs() < 1e-12, "{q}");
}

#[test]
fn simulate_csv_layout() {
    let out = popgen(&[
        "simulate",
        "--kind",
        "gene-flow",
        "--migration",
        "0.1",
        "--migrant-freq",
        "1",
        "--counts",
        "0,10,40",
        "--seed",
        "2",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(SESSION_CSV_HEADER));
    assert!(lines.next().unwrap().starts_with("0,0,10,40,50,0.1,0.9,"));
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn usage_errors_exit_1() {
    for args in [
        &["simulate", "--bogus"][..],
        &["simulate", "--fitness", "1,1"],
        &["simulate", "--kind", "exp9"],
        &["simulate", "--p0", "1.5", "--seed", "1"],
        &["simulate", "--n", "0", "--seed", "1"],
        &["batch", "--study", "lln", "--replicates", "1", "--seed", "1"],
        &["frobnicate"],
    ] {
        let out = popgen(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn runtime_errors_exit_2() {
    let out = popgen(&["export", "--session", "/nonexistent/session.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn batch_lln_scaling() {
    let out = popgen(&[
        "batch",
        "--study",
        "lln",
        "--sizes",
        "50,5000",
        "--replicates",
        "4000",
        "--seed",
        "8",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>().join(","),
        BATCH_CSV_HEADER
    );
    let sd: Vec<f64> = rdr.records().map(|r| r.unwrap()[5].parse().unwrap()).collect();
    let ratio = sd[0] / sd[1];
    assert!((ratio - 10.0).abs() < 1.0, "{ratio}");
}

#[test]
fn batch_fixation_json() {
    let out = stdout_json(&popgen(&[
        "batch",
        "--study",
        "fixation",
        "--n",
        "10",
        "--replicates",
        "4000",
        "--seed",
        "4",
        "--format",
        "json",
    ]));
    let f = out["report"]["rows"][0]["fixation_fraction"].as_f64().unwrap();
    assert!((f - 0.5).abs() < 0.03, "{f}");
}

#[test]
fn analyze_counts() {
    let out = stdout_json(&popgen(&["analyze", "--counts", "30,40,30", "--counts", "25,50,25"]));
    let rows = out["rows"].as_array().unwrap();
    assert_eq!(rows[0]["derived"]["chi_square"]["statistic"], 4.0);
    assert_eq!(rows[1]["derived"]["sqrt_method"]["p"], 0.5);
}

#[test]
fn analyze_reads_ledger_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let sim = popgen(&[
        "simulate",
        "--kind",
        "drift",
        "--seed",
        "6",
        "--format",
        "csv",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(sim.status.success());
    assert!(sim.stdout.is_empty());
    let out = popgen(&["analyze", "--input", path.to_str().unwrap(), "--format", "csv"]);
    assert!(out.status.success());
    let original = std::fs::read_to_string(&path)
        .unwrap()
        .replace(",automatic,", ",manual,");
    assert_eq!(String::from_utf8(out.stdout).unwrap(), original);
}

#[test]
fn export_from_store_and_document() {
    let dir = tempfile::tempdir().unwrap();
    let store = popgen_core::SessionStore::with_directory(dir.path()).unwrap();
    let kind = popgen_core::ExperimentKind::Drift;
    let mut s =
        popgen_core::ExperimentSession::create(kind, popgen_core::SimulationParams::new(kind).with_seed(9)).unwrap();
    s.record_manual_counts(0, popgen_core::GenotypeCounts::new(10, 30, 10), None)
        .unwrap();
    s.auto_step().unwrap();
    store.save_session(&s).unwrap();

    let id = s.id().to_string();
    let out = popgen(&["export", "--store", dir.path().to_str().unwrap(), "--id", &id]);
    assert!(out.status.success());
    assert_eq!(out.stdout, s.export_csv().unwrap());

    let doc = dir.path().join(format!("{id}.json"));
    let out = popgen(&["export", "--session", doc.to_str().unwrap()]);
    assert_eq!(out.stdout, s.export_csv().unwrap());

    let out = popgen(&["export", "--store", dir.path().to_str().unwrap(), "--id", "missing"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bind_address_port_override() {
    use popgen_cli::commands::{bind_address, ServeArgs};
    let args = ServeArgs {
        bind: "0.0.0.0:8080".into(),
        port: Some(9000),
        store_dir: None,
        static_dir: None,
    };
    assert_eq!(bind_address(&args), "0.0.0.0:9000");
}

#[test]
fn serve_on_busy_port_fails_at_startup() {
    let held = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = held.local_addr().unwrap().to_string();
    let out = popgen(&["serve", "--bind", &addr]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot bind"));
}
