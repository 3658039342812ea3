use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::time::{Duration, Instant};

use simherd::server::{RunningServer, Server, ServerConfig};

fn start(workers: usize) -> RunningServer {
    Server::bind(&ServerConfig {
        port: 0,
        workers,
        max_workspaces: 8,
        ..ServerConfig::default()
    })
    .unwrap()
    .spawn()
}

struct Conn {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl Conn {
    fn open(server: &RunningServer) -> Conn {
        let s = TcpStream::connect(server.addr).unwrap();
        Conn {
            writer: s.try_clone().unwrap(),
            reader: BufReader::new(s),
        }
    }

    fn send(&mut self, line: &str) -> String {
        self.writer.write_all(format!("{line}\n").as_bytes()).unwrap();
        let mut out = String::new();
        self.reader.read_line(&mut out).unwrap();
        out.trim_end().to_string()
    }

    fn expect(&mut self, line: &str, response: &str) {
        assert_eq!(self.send(line), response, "request {line}");
    }
}

const WSP_NAMES: &str = r#"["initial-number-sheep","sheep-gain-from-food","sheep-reproduce","initial-number-wolves","wolf-gain-from-food","wolf-reproduce","grass-regrowth-time","model-version","show-energy?"]"#;
const WSP_RANGES: &str = r#"[[0.0,1.0,250.0],[0.0,1.0,50.0],[1.0,1.0,20.0],[0.0,1.0,250.0],[0.0,1.0,100.0],[0.0,1.0,20.0],[0.0,1.0,100.0],["sheep-wolves","sheep-wolves-grass"],[false,true]]"#;

#[test]
fn golden_transcript() {
    let t0 = Instant::now();
    let server = start(2);
    let mut c = Conn::open(&server);
    c.expect(
        r#"{"id":1,"op":"list_workspaces","args":{}}"#,
        r#"{"id":1,"ok":true,"result":[]}"#,
    );
    c.expect(
        r#"{"id":2,"op":"new_workspace","args":{}}"#,
        r#"{"id":2,"ok":true,"result":0}"#,
    );
    c.expect(
        r#"{"id":3,"op":"new_workspace"}"#,
        r#"{"id":3,"ok":true,"result":1}"#,
    );
    c.expect(
        r#"{"id":4,"op":"list_workspaces","args":{}}"#,
        r#"{"id":4,"ok":true,"result":[0,1]}"#,
    );
    c.expect(
        r#"{"id":5,"op":"report","args":{"workspace":0,"text":"ticks"}}"#,
        r#"{"id":5,"ok":false,"error":"runtime: no model is open"}"#,
    );
    c.expect(
        r#"{"id":6,"op":"open_model","args":{"workspace":0,"path":"models/Wolf Sheep Predation.nlogo"}}"#,
        r#"{"id":6,"ok":true,"result":null}"#,
    );
    c.expect(
        r#"{"id":7,"op":"get_param_names","args":{"workspace":0}}"#,
        &format!(r#"{{"id":7,"ok":true,"result":{WSP_NAMES}}}"#),
    );
    c.expect(
        r#"{"id":8,"op":"get_param_ranges","args":{"workspace":0}}"#,
        &format!(r#"{{"id":8,"ok":true,"result":{WSP_RANGES}}}"#),
    );
    c.expect(
        r#"{"id":9,"op":"report","args":{"workspace":0,"text":"ticks"}}"#,
        r#"{"id":9,"ok":false,"error":"runtime: the model has not been set up yet"}"#,
    );
    c.expect(
        r#"{"id":10,"op":"command","args":{"workspace":0,"text":"random-seed 7 setup"}}"#,
        r#"{"id":10,"ok":true,"result":null}"#,
    );
    c.expect(
        r#"{"id":11,"op":"report","args":{"workspace":0,"text":"count sheep"}}"#,
        r#"{"id":11,"ok":true,"result":"100"}"#,
    );
    c.expect(
        r#"{"id":12,"op":"report","args":{"workspace":0,"text":"model-version"}}"#,
        r#"{"id":12,"ok":true,"result":"\"sheep-wolves-grass\""}"#,
    );
    c.expect(
        r#"{"id":13,"op":"command","args":{"workspace":0,"text":"ask turtles [die]"}}"#,
        r#"{"id":13,"ok":false,"error":"syntax: syntax error at offset 0 near 'ask': unsupported NetLogo construct 'ask'"}"#,
    );
    c.expect(
        r#"{"id":14,"op":"command","args":{"workspace":0,"text":"set wolf-reproduce 21"}}"#,
        r#"{"id":14,"ok":false,"error":"runtime: wolf-reproduce = 21 is outside [0, 20]"}"#,
    );
    c.expect(
        r#"{"id":15,"op":"report","args":{"workspace":0,"text":"count unicorns"}}"#,
        r#"{"id":15,"ok":false,"error":"runtime: unknown breed unicorns"}"#,
    );
    c.expect(
        r#"{"id":16,"op":"set_params_random","args":{"workspace":0}}"#,
        r#"{"id":16,"ok":true,"result":null}"#,
    );
    c.expect(
        r#"{"id":17,"op":"get_scheduled_reporter_results","args":{"workspace":0}}"#,
        r#"{"id":17,"ok":true,"result":[]}"#,
    );
    c.expect(
        r#"{"id":18,"op":"command","args":{"workspace":0,"text":"random-seed 7 set initial-number-sheep 20 set initial-number-wolves 0 set max-sheep 1000000000 setup"}}"#,
        r#"{"id":18,"ok":true,"result":null}"#,
    );
    c.expect(
        r#"{"id":19,"op":"schedule_reporters_and_run","args":{"workspace":0,"reporters":["ticks","count wolves"],"start_at_tick":0,"interval_ticks":1,"stop_at_tick":-1,"go_command":"go"}}"#,
        r#"{"id":19,"ok":true,"result":null}"#,
    );
    c.expect(
        r#"{"id":20,"op":"schedule_reporters_and_run","args":{"workspace":0,"reporters":["ticks"]}}"#,
        r#"{"id":20,"ok":false,"error":"busy: workspace 0 already has a scheduled run in progress"}"#,
    );
    c.expect(
        r#"{"id":21,"op":"get_scheduled_reporter_results","args":{"workspace":0}}"#,
        r#"{"id":21,"ok":true,"result":[]}"#,
    );
    while c
        .send(r#"{"id":0,"op":"report","args":{"workspace":0,"text":"ticks"}}"#)
        .ends_with(r#""0"}"#)
    {
        std::thread::sleep(Duration::from_millis(1));
    }
    c.expect(
        r#"{"id":22,"op":"command","args":{"workspace":0,"text":"stop"}}"#,
        r#"{"id":22,"ok":true,"result":null}"#,
    );
    let stopped = c.send(r#"{"id":23,"op":"get_scheduled_reporter_results","args":{"workspace":0}}"#);
    assert!(
        stopped.starts_with(r#"{"id":23,"ok":true,"result":[["0","0"],["1","0"]"#),
        "{stopped}"
    );
    c.expect(
        r#"{"id":24,"op":"get_scheduled_reporter_results","args":{"workspace":0}}"#,
        r#"{"id":24,"ok":true,"result":[]}"#,
    );

    // A bounded run: empty until finished, then every row exactly once.
    c.expect(
        r#"{"id":25,"op":"open_model","args":{"workspace":1,"path":"Fire.nlogo"}}"#,
        r#"{"id":25,"ok":true,"result":null}"#,
    );
    c.expect(
        r#"{"id":26,"op":"command","args":{"workspace":1,"text":"set density 99 setup"}}"#,
        r#"{"id":26,"ok":true,"result":null}"#,
    );
    c.expect(
        r#"{"id":27,"op":"schedule_reporters_and_run","args":{"workspace":1,"reporters":["ticks"],"start_at_tick":2,"interval_ticks":4,"stop_at_tick":14}}"#,
        r#"{"id":27,"ok":true,"result":null}"#,
    );
    let mut id = 28;
    let rows = loop {
        let r = c.send(&format!(
            r#"{{"id":{id},"op":"get_scheduled_reporter_results","args":{{"workspace":1}}}}"#
        ));
        if r != format!(r#"{{"id":{id},"ok":true,"result":[]}}"#) {
            break r;
        }
        id += 1;
        std::thread::sleep(Duration::from_millis(1));
    };
    assert_eq!(
        rows,
        format!(r#"{{"id":{id},"ok":true,"result":[["2"],["6"],["10"],["14"]]}}"#)
    );
    c.expect(
        r#"{"id":100,"op":"get_scheduled_reporter_results","args":{"workspace":1}}"#,
        r#"{"id":100,"ok":true,"result":[]}"#,
    );
    c.expect(
        r#"{"id":101,"op":"report","args":{"workspace":1,"text":"ticks"}}"#,
        r#"{"id":101,"ok":true,"result":"14"}"#,
    );
    c.expect(
        r#"{"id":102,"op":"close_model","args":{"workspace":1}}"#,
        r#"{"id":102,"ok":true,"result":null}"#,
    );
    c.expect(
        r#"{"id":103,"op":"command","args":{"workspace":1,"text":"setup"}}"#,
        r#"{"id":103,"ok":false,"error":"runtime: no model is open"}"#,
    );
    c.expect(
        r#"{"id":104,"op":"delete_workspace","args":{"workspace":1}}"#,
        r#"{"id":104,"ok":true,"result":null}"#,
    );
    c.expect(
        r#"{"id":105,"op":"delete_workspace","args":{"workspace":1}}"#,
        r#"{"id":105,"ok":false,"error":"not-found: workspace 1 does not exist"}"#,
    );
    c.expect(
        r#"{"id":106,"op":"delete_all_workspaces","args":{}}"#,
        r#"{"id":106,"ok":true,"result":null}"#,
    );
    c.expect(
        r#"{"id":107,"op":"new_workspace","args":{}}"#,
        r#"{"id":107,"ok":true,"result":2}"#,
    );
    c.expect(
        r#"{"id":108,"op":"teleport","args":{}}"#,
        r#"{"id":108,"ok":false,"error":"unknown-op: teleport"}"#,
    );
    c.expect(
        r#"{"id":109,"op":"open_model","args":{"workspace":2}}"#,
        r#"{"id":109,"ok":false,"error":"bad-request: missing string argument 'path'"}"#,
    );
    c.expect(
        r#"{"id":110,"op":"open_model","args":{"workspace":2,"path":"Ants.nlogo"}}"#,
        r#"{"id":110,"ok":false,"error":"runtime: unknown model \"Ants.nlogo\" (known: wolf-sheep-predation, fire)"}"#,
    );
    assert!(c
        .send("{oops")
        .starts_with(r#"{"id":null,"ok":false,"error":"bad-request: invalid JSON"#));
    c.expect(
        r#"{"id":111,"op":"shutdown","args":{}}"#,
        r#"{"id":111,"ok":true,"result":null}"#,
    );
    let addr = server.addr;
    server.join();
    assert!(
        TcpStream::connect(addr).is_err(),
        "second connection must be refused"
    );
    assert!(t0.elapsed() < Duration::from_secs(5));
}

#[test]
fn long_command_is_acknowledged_before_it_finishes() {
    let server = start(1);
    let mut c = Conn::open(&server);
    c.send(r#"{"id":1,"op":"new_workspace"}"#);
    c.send(r#"{"id":2,"op":"open_model","args":{"workspace":0,"path":"Wolf Sheep Predation.nlogo"}}"#);
    c.send(r#"{"id":3,"op":"command","args":{"workspace":0,"text":"set initial-number-wolves 0 set max-sheep 1000000000 setup"}}"#);
    c.expect(
        r#"{"id":4,"op":"command","args":{"workspace":0,"text":"repeat 100 [go]"}}"#,
        r#"{"id":4,"ok":true,"result":null}"#,
    );
    let r = c.send(r#"{"id":5,"op":"report","args":{"workspace":0,"text":"ticks"}}"#);
    let ticks: u64 = serde_json::from_str::<serde_json::Value>(&r).unwrap()["result"]
        .as_str()
        .unwrap()
        .parse()
        .unwrap();
    assert!(ticks <= 100);
    // Later commands run after the queued repeat.
    c.send(r#"{"id":6,"op":"command","args":{"workspace":0,"text":"go"}}"#);
    let deadline = Instant::now() + Duration::from_secs(20);
    loop {
        let r = c.send(r#"{"id":7,"op":"report","args":{"workspace":0,"text":"ticks"}}"#);
        if r == r#"{"id":7,"ok":true,"result":"101"}"# {
            break;
        }
        assert!(Instant::now() < deadline, "{r}");
        std::thread::sleep(Duration::from_millis(2));
    }
    server.stop();
}

#[test]
fn response_ids_pair_per_connection() {
    let server = start(2);
    let handles: Vec<_> = (0..4)
        .map(|k| {
            let mut c = Conn::open(&server);
            std::thread::spawn(move || {
                for i in 0..50 {
                    let id = k * 1000 + i;
                    let r = c.send(&format!(r#"{{"id":{id},"op":"list_workspaces"}}"#));
                    assert!(r.starts_with(&format!(r#"{{"id":{id},"ok":true"#)), "{r}");
                }
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    server.stop();
}

#[test]
fn capacity_counts_live_workspaces() {
    let server = start(1);
    let mut c = Conn::open(&server);
    for i in 0..8 {
        c.expect(
            &format!(r#"{{"id":{i},"op":"new_workspace"}}"#),
            &format!(r#"{{"id":{i},"ok":true,"result":{i}}}"#),
        );
    }
    c.expect(
        r#"{"id":9,"op":"new_workspace"}"#,
        r#"{"id":9,"ok":false,"error":"capacity: workspace limit of 8 reached"}"#,
    );
    c.send(r#"{"id":10,"op":"delete_workspace","args":{"workspace":3}}"#);
    c.expect(
        r#"{"id":11,"op":"new_workspace"}"#,
        r#"{"id":11,"ok":true,"result":8}"#,
    );
    server.stop();
}

#[test]
fn shutdown_with_active_runs_is_prompt() {
    let server = start(2);
    let mut c = Conn::open(&server);
    for w in 0..8 {
        c.send(r#"{"id":1,"op":"new_workspace"}"#);
        c.send(&format!(
            r#"{{"id":2,"op":"open_model","args":{{"workspace":{w},"path":"Wolf Sheep Predation.nlogo"}}}}"#
        ));
        c.send(&format!(r#"{{"id":3,"op":"command","args":{{"workspace":{w},"text":"set initial-number-wolves 0 set max-sheep 1000000000 setup"}}}}"#));
        c.send(&format!(
            r#"{{"id":4,"op":"schedule_reporters_and_run","args":{{"workspace":{w},"reporters":["ticks"]}}}}"#
        ));
    }
    let t = Instant::now();
    c.expect(
        r#"{"id":5,"op":"shutdown"}"#,
        r#"{"id":5,"ok":true,"result":null}"#,
    );
    server.join();
    assert!(t.elapsed() < Duration::from_secs(2), "{:?}", t.elapsed());
}
