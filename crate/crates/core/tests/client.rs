use std::path::Path;
use std::time::{Duration, Instant};

use serde_json::json;
use simherd::client::{ClientError, Locator, ServerSession};
use simherd::server::{RunningServer, Server, ServerConfig};

fn start() -> (RunningServer, ServerSession) {
    let server = Server::bind(&ServerConfig {
        port: 0,
        workers: 2,
        ..ServerConfig::default()
    })
    .unwrap()
    .spawn();
    let session = ServerSession::connect(&server.addr.to_string()).unwrap();
    (server, session)
}

#[test]
fn locator_forms() {
    assert_eq!(
        Locator::parse("addr:127.0.0.1:9000"),
        Locator::Address("127.0.0.1:9000".into())
    );
    assert_eq!(
        Locator::parse("/opt/simherd"),
        Locator::Binary("/opt/simherd".into())
    );
}

// Transliteration of the classic Fire timing script: 20 runs, random
// density, poll until 100 ticks or no burning cells.
#[test]
fn fire_polling_script() {
    let (server, n) = start();
    let mut workspaces = Vec::new();
    for i in 0..20 {
        let ws = n.new_workspace().unwrap();
        ws.open_model("./Fire.nlogo").unwrap();
        ws.command(&format!("random-seed {i}")).unwrap();
        ws.command("set density random 99").unwrap();
        ws.command("setup").unwrap();
        ws.command("repeat 100 [go]").unwrap();
        workspaces.push(ws);
    }
    let deadline = Instant::now() + Duration::from_secs(60);
    let mut finished = 0;
    while !workspaces.is_empty() {
        assert!(Instant::now() < deadline);
        workspaces.retain(|ws| {
            let ticks = ws.report("ticks").unwrap().parse::<f64>().unwrap() as i64;
            let stop = ws.report("not any? turtles").unwrap().to_lowercase();
            if ticks == 100 || stop == "true" {
                let burned: f64 = ws.report("burned-trees").unwrap().parse().unwrap();
                assert!(burned >= 0.0);
                finished += 1;
                false
            } else {
                true
            }
        });
    }
    assert_eq!(finished, 20);
    assert_eq!(n.get_all().len(), 20);
    n.delete_all().unwrap();
    assert!(n.list_workspaces().unwrap().is_empty());
    n.stop().unwrap();
    server.stop();
}

// The sensitivity driver's problem construction: drop the last two
// (non-numeric) widgets, keep [min, max], remove initial counts.
#[test]
fn sensitivity_problem_from_ranges() {
    let (server, n) = start();
    let ws = n.new_workspace().unwrap();
    ws.open_model("models/Wolf Sheep Predation.nlogo").unwrap();
    let names = ws.get_param_names().unwrap();
    let ranges = ws.get_param_ranges().unwrap();
    let mut problem_names = vec!["random-seed".to_string()];
    let mut bounds = vec![vec![1.0, 100000.0]];
    problem_names.extend(names[..names.len() - 2].iter().cloned());
    bounds.extend(
        ranges[..ranges.len() - 2]
            .iter()
            .map(|r| r.iter().step_by(2).map(|v| v.as_f64().unwrap()).collect()),
    );
    for drop in ["initial-number-wolves", "initial-number-sheep"] {
        let i = problem_names.iter().position(|x| x == drop).unwrap();
        problem_names.remove(i);
        bounds.remove(i);
    }
    assert_eq!(problem_names.len(), 6);
    assert_eq!(bounds[2], [1.0, 20.0]);
    assert_eq!(problem_names[2], "sheep-reproduce");
    n.stop().unwrap();
    server.stop();
}

#[test]
fn scheduled_results_and_errors() {
    let (server, n) = start();
    let ws = n.new_workspace().unwrap();
    ws.open_model("Wolf Sheep Predation.nlogo").unwrap();
    ws.command("random-seed 7 setup").unwrap();
    ws.schedule_reporters_and_run(&["ticks", "count sheep"], 0, 10, 50, "go")
        .unwrap();
    let rows = loop {
        let rows = ws.get_scheduled_reporter_results().unwrap();
        if !rows.is_empty() {
            break rows;
        }
        std::thread::sleep(Duration::from_millis(2));
    };
    let ticks: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(ticks, ["0", "10", "20", "30", "40", "50"]);

    let err = ws.command("ask turtles [die]").unwrap_err();
    assert_eq!(err.code(), Some("syntax"));
    let err = n.workspace(99).report("ticks").unwrap_err();
    assert_eq!(err.code(), Some("not-found"));
    assert!(err.to_string().starts_with("not-found: "));
    let err = n.call("frobnicate", json!({})).unwrap_err();
    assert_eq!(err.code(), Some("unknown-op"));
    n.stop().unwrap();
    server.stop();
}

#[test]
fn calls_after_stop_are_disconnected() {
    let (server, n) = start();
    let ws = n.new_workspace().unwrap();
    n.stop().unwrap();
    assert_eq!(ws.report("ticks").unwrap_err(), ClientError::Disconnected);
    assert_eq!(n.list_workspaces().unwrap_err(), ClientError::Disconnected);
    // A session that only connected leaves the server up.
    let other = ServerSession::connect(&server.addr.to_string()).unwrap();
    assert_eq!(other.list_workspaces().unwrap(), vec![ws.id]);
    other.stop().unwrap();
    server.stop();
}

#[test]
fn transcript_records_wire_lines() {
    let (server, n) = start();
    n.record_transcript();
    let ws = n.new_workspace().unwrap();
    ws.open_model("fire").unwrap();
    ws.command("set density 50 setup").unwrap();
    assert_eq!(ws.report("ticks").unwrap(), "0");
    let t = n.transcript();
    assert_eq!(t.len(), 8);
    assert_eq!(t[0], r#"{"id":1,"op":"new_workspace","args":{}}"#);
    assert_eq!(t[1], r#"{"id":1,"ok":true,"result":0}"#);
    assert_eq!(
        t[6],
        r#"{"id":4,"op":"report","args":{"text":"ticks","workspace":0}}"#
    );
    assert_eq!(t[7], r#"{"id":4,"ok":true,"result":"0"}"#);
    n.stop().unwrap();
    server.stop();
}

#[test]
fn spawned_binary_is_shut_down() {
    let bin = Path::new(env!("CARGO_BIN_EXE_simherd"));
    let n = ServerSession::spawn(bin).unwrap();
    assert!(n.owns_server());
    let addr = n.addr().to_string();
    let ws = n.new_workspace().unwrap();
    ws.open_model("fire").unwrap();
    ws.command("setup").unwrap();
    n.stop().unwrap();
    assert!(std::net::TcpStream::connect(&addr).is_err());
}

#[test]
fn spawn_reports_bad_path() {
    let err = ServerSession::spawn(Path::new("/nonexistent/simherd")).unwrap_err();
    assert!(matches!(err, ClientError::Spawn { .. }), "{err}");
    let err = ServerSession::connect("127.0.0.1:1").unwrap_err();
    assert!(matches!(err, ClientError::Connect { .. }), "{err}");
}
