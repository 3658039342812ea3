use std::ffi::{c_char, CStr, CString};
use std::ptr;

use simherd_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    simherd_string_free(s);
    out
}

unsafe fn last_error() -> String {
    CStr::from_ptr(simherd_last_error()).to_str().unwrap().to_string()
}

#[test]
fn local_workspace_round_trip() {
    unsafe {
        let mut ws = ptr::null_mut();
        assert_eq!(simherd_workspace_new(3, &mut ws), SimherdStatus::Ok);
        assert_eq!(
            simherd_workspace_open_model(ws, c("Fire.nlogo").as_ptr()),
            SimherdStatus::Ok
        );
        assert_eq!(
            simherd_workspace_command(ws, c("set density 99 setup repeat 200 [go]").as_ptr()),
            SimherdStatus::Ok
        );
        let mut v = ptr::null_mut();
        assert_eq!(
            simherd_workspace_report(ws, c("not any? turtles").as_ptr(), &mut v),
            SimherdStatus::Ok
        );
        assert_eq!(take(v), "true");

        assert_eq!(
            simherd_workspace_command(ws, c("ask turtles [die]").as_ptr()),
            SimherdStatus::Syntax
        );
        assert!(last_error().contains("ask"));
        assert_eq!(
            simherd_workspace_report(ws, c("count unicorns").as_ptr(), &mut v),
            SimherdStatus::Runtime
        );
        assert_eq!(
            simherd_workspace_command(ws, ptr::null()),
            SimherdStatus::NullArgument
        );
        simherd_workspace_free(ws);
    }
}

#[test]
fn server_and_session() {
    unsafe {
        let mut server = ptr::null_mut();
        assert_eq!(
            simherd_server_start(ptr::null(), 0, 2, &mut server),
            SimherdStatus::Ok
        );
        let addr = take(simherd_server_addr(server));
        let mut session = ptr::null_mut();
        let loc = c(&format!("addr:{addr}"));
        assert_eq!(
            simherd_session_start(loc.as_ptr(), &mut session),
            SimherdStatus::Ok
        );

        let mut id = u64::MAX;
        assert_eq!(simherd_session_new_workspace(session, &mut id), SimherdStatus::Ok);
        assert_eq!(id, 0);
        assert_eq!(
            simherd_session_open_model(session, id, c("wolf-sheep-predation").as_ptr()),
            SimherdStatus::Ok
        );
        assert_eq!(
            simherd_session_command(session, id, c("random-seed 5 setup").as_ptr()),
            SimherdStatus::Ok
        );
        assert_eq!(
            simherd_session_schedule(
                session,
                id,
                c(r#"["ticks","count wolves"]"#).as_ptr(),
                0,
                5,
                20,
                ptr::null()
            ),
            SimherdStatus::Ok
        );
        let rows: Vec<Vec<String>> = loop {
            let mut out = ptr::null_mut();
            assert_eq!(simherd_session_results(session, id, &mut out), SimherdStatus::Ok);
            let rows: Vec<Vec<String>> = serde_json::from_str(&take(out)).unwrap();
            if !rows.is_empty() {
                break rows;
            }
            std::thread::sleep(std::time::Duration::from_millis(2));
        };
        let ticks: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
        assert_eq!(ticks, ["0", "5", "10", "15", "20"]);

        let mut v = ptr::null_mut();
        assert_eq!(
            simherd_session_report(session, 42, c("ticks").as_ptr(), &mut v),
            SimherdStatus::NotFound
        );
        assert!(last_error().starts_with("not-found: "));
        assert_eq!(simherd_session_delete_workspace(session, id), SimherdStatus::Ok);

        simherd_session_free(session);
        simherd_server_free(server);

        let mut dead = ptr::null_mut();
        assert_eq!(
            simherd_session_start(loc.as_ptr(), &mut dead),
            SimherdStatus::Connect
        );
        assert!(dead.is_null());
    }
}

#[test]
fn analysis_functions() {
    unsafe {
        let sheep = [10.0, 10.0, 10.0];
        let wolves = [5.0, 5.0, 5.0];
        let mut score = 0.0;
        assert_eq!(
            simherd_stability_score(sheep.as_ptr(), wolves.as_ptr(), 3, &mut score),
            SimherdStatus::Ok
        );
        assert_eq!(score, 1e6);

        let problem = c(r#"{"num_vars":2,"names":["a","b"],"bounds":[[0,1],[10,20]]}"#);
        let mut out = ptr::null_mut();
        assert_eq!(
            simherd_saltelli_sample(problem.as_ptr(), 4, -1, &mut out),
            SimherdStatus::Ok
        );
        let rows: Vec<Vec<f64>> = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(rows.len(), 4 * 6);
        assert_eq!(rows[0], [0.375, 13.75]);

        let y: Vec<f64> = rows.iter().map(|r| r[0] * 3.0 + r[1] / 10.0).collect();
        assert_eq!(
            simherd_sobol_analyze(problem.as_ptr(), y.as_ptr(), y.len(), &mut out),
            SimherdStatus::Ok
        );
        let r: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(r["s1_with_interactions"].as_array().unwrap().len(), 3);

        assert_eq!(
            simherd_sobol_analyze(problem.as_ptr(), y.as_ptr(), 5, &mut out),
            SimherdStatus::InvalidArgument
        );
        let bad = c(r#"{"num_vars":2}"#);
        assert_eq!(
            simherd_saltelli_sample(bad.as_ptr(), 4, -1, &mut out),
            SimherdStatus::InvalidArgument
        );
        assert!(last_error().starts_with("problem_json"));
    }
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/simherd.h");
    let src = include_str!("../src/lib.rs");
    let exports: Vec<&str> = src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 20);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("typedef struct SimherdSession SimherdSession;"));
}

// Compiles a C program against the generated header and the static
// library built alongside this test.
#[cfg(unix)]
#[test]
fn c_program_links_and_runs() {
    use std::path::PathBuf;
    use std::process::Command;

    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libsimherd_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: static library or C compiler unavailable");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "score 1000000.0\n");
}
