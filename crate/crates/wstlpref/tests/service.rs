use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde_json::Value;
use wstlpref::cli::{run, Cli};
use wstlpref::format::{load_weights, DatasetFile, PreferenceFile, ResultFile};
use wstlpref::serve::{Elicitation, RunningService, Service};
use wstlpref::session::{LoadedSession, Session, Side};
use wstlpref::{store, Error};
use wstlpref_core::learn::{count_satisfied, PreferenceDataset};
use wstlpref_core::wstl_robustness;

fn cli(args: &[&str]) -> String {
    let mut argv = vec!["wstlpref"];
    argv.extend_from_slice(args);
    run(Cli::try_parse_from(argv).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A 5-pair stop-scenario pair set; returns the pairs file path.
fn pair_set(dir: &Path) -> PathBuf {
    let d = dir.join("d.json");
    let p = dir.join("p.json");
    cli(&[
        "simulate",
        "--scenario",
        "stop",
        "--n",
        "20",
        "--seed",
        "3",
        "--out",
        s(&d),
    ]);
    cli(&[
        "pairs",
        "--dataset",
        s(&d),
        "--n-pairs",
        "5",
        "--seed",
        "4",
        "--out",
        s(&p),
    ]);
    p
}

fn start(session: &Path, pairs: &Path, ui: Option<PathBuf>) -> RunningService {
    let loaded = LoadedSession::open_or_create(session, pairs, "alice".into(), 17).unwrap();
    Service::bind("127.0.0.1:0", Elicitation::new(loaded, ui))
        .unwrap()
        .spawn(4)
}

struct Client {
    agent: ureq::Agent,
    base: String,
}

impl Client {
    fn new(svc: &RunningService) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .into();
        Client {
            agent,
            base: format!("http://{}", svc.local_addr()),
        }
    }

    fn get(&self, path: &str) -> (u16, String) {
        let mut r = self.agent.get(format!("{}{path}", self.base)).call().unwrap();
        (r.status().as_u16(), r.body_mut().read_to_string().unwrap())
    }

    fn post(&self, path: &str, body: &str) -> (u16, String) {
        let mut r = self
            .agent
            .post(format!("{}{path}", self.base))
            .header("Content-Type", "application/json")
            .send(body)
            .unwrap();
        (r.status().as_u16(), r.body_mut().read_to_string().unwrap())
    }

    fn json(&self, path: &str) -> Value {
        let (code, body) = self.get(path);
        assert_eq!(code, 200, "{path}: {body}");
        serde_json::from_str(&body).unwrap()
    }

    fn choose(&self, i: usize, side: &str) -> Value {
        let (code, body) = self.post(
            &format!("/api/pairs/{i}/choice"),
            &format!(r#"{{"choice": "{side}"}}"#),
        );
        assert_eq!(code, 200, "{body}");
        serde_json::from_str(&body).unwrap()
    }
}

#[test]
fn choices_are_read_back_and_out_of_range_pairs_are_404() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = pair_set(dir.path());
    let svc = start(&dir.path().join("s.json"), &pairs, None);
    let c = Client::new(&svc);

    let summary = c.json("/api/session");
    assert_eq!(summary["id"], "alice");
    assert_eq!(summary["scenario"], "stop");
    assert_eq!(summary["total"], 5);
    assert_eq!(summary["answered"], 0);
    assert_eq!(summary["marker"], 20.0);

    let pair = c.json("/api/pairs/2");
    assert_eq!(pair["index"], 2);
    assert!(pair["answered"].is_null());
    let left = &pair["left"];
    assert_eq!(left["time"].as_array().unwrap().len(), 60);
    assert_eq!(left["series"]["x"].as_array().unwrap().len(), 60);
    assert!(left["flags"]["b"]
        .as_array()
        .unwrap()
        .iter()
        .all(Value::is_boolean));

    let after = c.choose(2, "right");
    assert_eq!(after["answered"], 1);
    assert_eq!(after["progress"], 0.2);
    assert_eq!(c.json("/api/session")["answered"], 1);
    assert_eq!(c.json("/api/pairs/2")["answered"], "right");

    // Re-answering overwrites without changing the count.
    c.choose(2, "left");
    assert_eq!(c.json("/api/pairs/2")["answered"], "left");
    assert_eq!(c.json("/api/session")["answered"], 1);

    assert_eq!(c.get("/api/pairs/5").0, 404);
    assert_eq!(c.get("/api/pairs/-1").0, 404);
    assert_eq!(c.post("/api/pairs/9/choice", r#"{"choice": "left"}"#).0, 404);
    assert_eq!(c.post("/api/pairs/1/choice", r#"{"choice": "up"}"#).0, 400);
    assert_eq!(c.post("/api/pairs/1/choice", "not json").0, 400);
    assert_eq!(c.get("/api/nothing").0, 404);
    assert_eq!(c.json("/api/session")["answered"], 1);
    svc.shutdown();
}

#[test]
fn placement_follows_the_session_seed() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = pair_set(dir.path());
    let a = LoadedSession::create(&dir.path().join("a.json"), &pairs, "a".into(), 1).unwrap();
    let b = LoadedSession::create(&dir.path().join("b.json"), &pairs, "b".into(), 1).unwrap();
    assert_eq!(a.session.swapped, b.session.swapped);
    let differs = (2..40)
        .any(|seed| Session::new("x".into(), None, String::new(), 5, seed).swapped != a.session.swapped);
    assert!(differs);
}

// Scripted participant: picks the side with the higher robustness under `w`.
#[test]
fn completed_session_exports_preferences_that_learn_accepts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let pairs = pair_set(d);
    // Scripting valuation, drawn the same way as hidden labels.
    cli(&[
        "label",
        "--pairs",
        s(&pairs),
        "--seed",
        "8",
        "--weights-out",
        s(&d.join("w.json")),
        "--out",
        s(&d.join("unused.json")),
    ]);
    let (phi, w) = load_weights(&d.join("w.json")).unwrap();
    let dataset: DatasetFile = store::load(&d.join("d.json")).unwrap();
    let data = dataset.decode(&d.join("d.json")).unwrap();
    let r = |id: &str| wstl_robustness(&data.signals[data.index[id]], &phi, &w, 0).unwrap();

    let session_path = d.join("s.json");
    let svc = start(&session_path, &pairs, None);
    let c = Client::new(&svc);
    assert_eq!(c.get("/api/export").0, 409);

    let session = LoadedSession::open(&session_path).unwrap();
    for i in 0..5 {
        let (left, right) = session.placement(i).unwrap();
        c.choose(i, if r(left) > r(right) { "left" } else { "right" });
    }
    let summary = c.json("/api/session");
    assert_eq!(summary["complete"], true);
    assert_eq!(summary["progress"], 1.0);
    let (code, exported) = c.get("/api/export");
    assert_eq!(code, 200);
    assert_eq!(c.get("/api/export").1, exported);
    svc.shutdown();

    let prefs_path = d.join("exported.json");
    fs::write(&prefs_path, &exported).unwrap();
    let prefs: PreferenceFile = store::load(&prefs_path).unwrap();
    for p in &prefs.pairs {
        assert!(r(&p.preferred) > r(&p.rejected));
    }

    let out = cli(&[
        "learn",
        "--method",
        "rs",
        "--preferences",
        s(&prefs_path),
        "--n-samples",
        "200",
        "--out",
        s(&d.join("r.json")),
    ]);
    assert!(out.starts_with("satisfied "), "{out}");
    let result: ResultFile = store::load(&d.join("r.json")).unwrap();
    assert_eq!(result.total_pairs, 5);
    let ds = PreferenceDataset::new(&data.signals, prefs.index_pairs(&data).unwrap()).unwrap();
    assert_eq!(count_satisfied(&ds, &phi, &w).unwrap(), 5);

    // The session file itself is also accepted, and gives the same labels.
    cli(&[
        "learn",
        "--method",
        "rs",
        "--session",
        s(&session_path),
        "--n-samples",
        "200",
        "--out",
        s(&d.join("r2.json")),
    ]);
    let r2: ResultFile = store::load(&d.join("r2.json")).unwrap();
    assert_eq!(r2.valuation, result.valuation);
}

#[test]
fn choices_survive_a_restart_and_export_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = pair_set(dir.path());
    let session_path = dir.path().join("s.json");
    let svc = start(&session_path, &pairs, None);
    let c = Client::new(&svc);
    c.choose(0, "left");
    c.choose(3, "right");
    // Simulate a crash: no shutdown handshake, the file is all that remains.
    drop(c);
    let reopened = LoadedSession::open(&session_path).unwrap();
    assert_eq!(reopened.session.answered(), 2);
    assert_eq!(reopened.session.chosen_side(0).unwrap(), Some(Side::Left));
    assert_eq!(reopened.session.chosen_side(3).unwrap(), Some(Side::Right));
    assert_eq!(reopened.session.revision, 2);
    svc.shutdown();

    let svc = start(&session_path, &pairs, None);
    let c = Client::new(&svc);
    assert_eq!(c.json("/api/session")["answered"], 2);
    for i in [1, 2, 4] {
        c.choose(i, "left");
    }
    let exported = c.get("/api/export").1;
    svc.shutdown();

    // Same choices in a second session file give the same bytes.
    let copy = dir.path().join("copy.json");
    let mut other = LoadedSession::create(&copy, &pairs, "bob".into(), 17).unwrap();
    for (i, side) in [
        (0, Side::Left),
        (3, Side::Right),
        (1, Side::Left),
        (2, Side::Left),
        (4, Side::Left),
    ] {
        other.submit(i, side).unwrap();
    }
    assert_eq!(
        String::from_utf8(store::to_bytes(&other.export().unwrap())).unwrap(),
        exported
    );
}

#[test]
fn concurrent_choices_are_all_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = pair_set(dir.path());
    let session_path = dir.path().join("s.json");
    let svc = start(&session_path, &pairs, None);
    let base = Client::new(&svc).base;
    std::thread::scope(|scope| {
        for t in 0..10 {
            let base = base.clone();
            scope.spawn(move || {
                let agent: ureq::Agent = ureq::Agent::config_builder()
                    .http_status_as_error(false)
                    .build()
                    .into();
                let side = if t % 2 == 0 { "left" } else { "right" };
                let r = agent
                    .post(format!("{base}/api/pairs/{}/choice", t % 5))
                    .header("Content-Type", "application/json")
                    .send(format!(r#"{{"choice": "{side}"}}"#))
                    .unwrap();
                assert_eq!(r.status().as_u16(), 200);
            });
        }
    });
    svc.shutdown();
    let s = LoadedSession::open(&session_path).unwrap().session;
    assert_eq!(s.revision, 10);
    assert!(s.is_complete());
}

#[test]
fn corrupt_or_mismatched_session_files_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = pair_set(dir.path());
    let path = dir.path().join("s.json");
    fs::write(&path, "{\"kind\": \"session\", \"version\": 1, \"id\": ").unwrap();
    assert!(matches!(
        LoadedSession::open_or_create(&path, &pairs, "x".into(), 0),
        Err(Error::Json { .. })
    ));

    LoadedSession::create(&path, &pairs, "x".into(), 0).unwrap();
    let mut v: Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    v["choices"].as_array_mut().unwrap().pop();
    fs::write(&path, serde_json::to_vec(&v).unwrap()).unwrap();
    let err = LoadedSession::open(&path).unwrap_err();
    assert!(err.to_string().contains("choices"), "{err}");

    let out =
        run(Cli::try_parse_from(["wstlpref", "learn", "--method", "rs", "--session", s(&path)]).unwrap());
    assert!(out.is_err());
}

#[test]
fn incomplete_session_cannot_be_learned_from() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = pair_set(dir.path());
    let path = dir.path().join("s.json");
    let mut session = LoadedSession::create(&path, &pairs, "x".into(), 0).unwrap();
    session.submit(0, Side::Left).unwrap();
    let err =
        run(Cli::try_parse_from(["wstlpref", "learn", "--method", "rs", "--session", s(&path)]).unwrap())
            .unwrap_err();
    assert!(
        matches!(
            err,
            Error::IncompleteSession {
                answered: 1,
                total: 5
            }
        ),
        "{err}"
    );
}

#[test]
fn busy_port_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = pair_set(dir.path());
    let svc = start(&dir.path().join("s.json"), &pairs, None);
    let loaded = LoadedSession::open(&dir.path().join("s.json")).unwrap();
    let err = Service::bind(&svc.local_addr().to_string(), Elicitation::new(loaded, None)).unwrap_err();
    assert!(matches!(err, Error::Bind { .. }), "{err}");
    svc.shutdown();
}

#[test]
fn static_assets_are_served_from_the_ui_directory() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = pair_set(dir.path());
    let svc = start(&dir.path().join("s.json"), &pairs, None);
    let c = Client::new(&svc);
    let (code, body) = c.get("/");
    assert_eq!(code, 200);
    assert!(body.contains("/api"));
    assert_eq!(c.get("/app.js").0, 404);
    svc.shutdown();

    let ui = dir.path().join("ui");
    fs::create_dir_all(ui.join("assets")).unwrap();
    fs::write(ui.join("index.html"), "<html>ui</html>").unwrap();
    fs::write(ui.join("assets/app.js"), "console.log(1)").unwrap();
    fs::write(dir.path().join("secret.txt"), "no").unwrap();
    let svc = start(&dir.path().join("s.json"), &pairs, Some(ui));
    let c = Client::new(&svc);
    assert_eq!(c.get("/"), (200, "<html>ui</html>".to_owned()));
    assert_eq!(c.get("/assets/app.js"), (200, "console.log(1)".to_owned()));
    assert_eq!(c.get("/../secret.txt").0, 404);
    assert_eq!(c.get("/%2e%2e/secret.txt").0, 404);
    svc.shutdown();
}
