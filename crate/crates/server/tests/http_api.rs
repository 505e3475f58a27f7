use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use binsort_core::classifier::{BinKind, GroundTruthClassifier};
use binsort_core::device::Capacities;
use binsort_core::simulator::{generate_synthetic_corpus, run_scenario, ImageLibrary, Scenario, SimOptions};
use binsort_core::telemetry::{
    read_log, BinLevels, BinRecord, BinStatus, Clock, Envelope, EventLogEntry, Registration, StepClock,
    TelemetryMessage, TelemetryService,
};
use binsort_server::{watch, BackgroundServer, HttpClient, StreamFrame};
use chrono::{TimeZone, Utc};

fn clock() -> Arc<dyn Clock> {
    Arc::new(StepClock::new(Utc.with_ymd_and_hms(2026, 3, 1, 8, 0, 0).unwrap(), 250))
}

fn any_port() -> SocketAddr {
    "127.0.0.1:0".parse().unwrap()
}

fn start(service: Arc<TelemetryService>, token: Option<&str>) -> BackgroundServer {
    BackgroundServer::start(any_port(), service, token.map(String::from)).unwrap()
}

fn record(id: &str, locate: &str) -> BinRecord {
    BinRecord::new(id, "2026-02-01T09:00:00Z", locate)
}

fn status(id: &str, seq: u64, r: u8, n: u8) -> Envelope {
    Envelope {
        seq,
        message: TelemetryMessage::StatusUpdate {
            bin_id: id.into(),
            levels: BinLevels { recyclable: r, non_recyclable: n },
            status: BinStatus::Normal,
        },
    }
}

fn full(id: &str, seq: u64) -> Envelope {
    Envelope { seq, message: TelemetryMessage::FullAlert { bin_id: id.into(), bin: BinKind::Recyclable } }
}

/// Collects frames until `n` have arrived or two seconds pass.
fn collect(server: &str, since: Option<u64>, token: Option<&str>, n: usize) -> Vec<StreamFrame> {
    let runtime = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    let mut frames = Vec::new();
    runtime.block_on(async {
        let run = watch(server, since, token, |f| {
            frames.push(f);
            frames.len() < n
        });
        let _ = tokio::time::timeout(Duration::from_secs(2), run).await;
    });
    frames
}

fn events(frames: &[StreamFrame]) -> Vec<EventLogEntry> {
    frames
        .iter()
        .filter_map(|f| match f {
            StreamFrame::Event(e) => Some(e.clone()),
            StreamFrame::Gap(_) => None,
        })
        .collect()
}

#[test]
fn register_list_get_remove() {
    let service = Arc::new(TelemetryService::in_memory(clock()));
    let server = start(service.clone(), None);
    let client = HttpClient::new(&server.url(), None).unwrap();

    for (i, id) in ["bin-03", "bin-01", "bin-02"].iter().enumerate() {
        let reply = client.register(&record(id, &format!("hall {i}")), None).unwrap();
        assert_eq!(reply, Registration::Created { offset: i as u64 + 1 });
    }
    assert_eq!(client.register(&record("bin-01", "hall 1"), None).unwrap(), Registration::Unchanged);

    let ids: Vec<String> = client.list_bins().unwrap().into_iter().map(|b| b.id).collect();
    assert_eq!(ids, ["bin-03", "bin-01", "bin-02"], "registration order");

    let before = service.registry().snapshot();
    let err = client.register(&record("bin-01", "somewhere else"), None).unwrap_err();
    assert_eq!(err.kind(), Some("conflict"));
    assert_eq!(service.registry().snapshot(), before);

    assert_eq!(client.get_bin("bin-02").unwrap().locate, "hall 2");
    assert_eq!(client.remove_bin("bin-02").unwrap(), 4);
    assert_eq!(client.list_bins().unwrap().len(), 2);
    assert_eq!(client.get_bin("bin-02").unwrap_err().kind(), Some("not_found"));
    assert_eq!(client.remove_bin("bin-02").unwrap_err().kind(), Some("not_found"));
}

#[test]
fn wire_field_names_are_exact() {
    let service = Arc::new(TelemetryService::in_memory(clock()));
    let server = start(service, None);
    let client = HttpClient::new(&server.url(), None).unwrap();
    let mut r = record("bin-01", "lobby");
    r.description = "by the stairs".into();
    r.image = Some("https://example.org/bin-01.jpg".into());
    client.register(&r, None).unwrap();

    let body: serde_json::Value =
        reqwest::blocking::get(format!("{}/bins/bin-01", server.url())).unwrap().json().unwrap();
    let mut keys: Vec<&str> = body.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(keys, ["date", "description", "id", "image", "locate", "status"]);
    assert_eq!(body["status"], "normal");
}

#[test]
fn status_updates_alerts_and_duplicates() {
    let service = Arc::new(TelemetryService::in_memory(clock()));
    let server = start(service.clone(), None);
    let client = HttpClient::new(&server.url(), None).unwrap();
    client.register(&record("bin-01", "lobby"), Some(1)).unwrap();

    client.put_status(&status("bin-01", 2, 40, 10)).unwrap();
    client.put_status(&full("bin-01", 3)).unwrap();
    assert_eq!(client.get_bin("bin-01").unwrap().status, BinStatus::Full);
    assert_eq!(client.bin_state("bin-01").unwrap().levels.unwrap().recyclable, 100);

    let head = service.head();
    let snapshot = service.registry().snapshot();
    let err = client.put_status(&full("bin-01", 3)).unwrap_err();
    assert_eq!(err.kind(), Some("duplicate"));
    assert_eq!(service.head(), head);
    assert_eq!(service.registry().snapshot(), snapshot);

    client.put_status(&status("bin-01", 4, 0, 10)).unwrap();
    assert_eq!(client.get_bin("bin-01").unwrap().status, BinStatus::Normal);

    assert_eq!(client.put_status(&status("bin-09", 1, 0, 0)).unwrap_err().kind(), Some("not_found"));
    assert_eq!(client.put_status(&status("bin-01", 9, 101, 0)).unwrap_err().kind(), Some("validation"));
}

#[test]
fn status_path_must_match_message() {
    let service = Arc::new(TelemetryService::in_memory(clock()));
    let server = start(service.clone(), None);
    let client = HttpClient::new(&server.url(), None).unwrap();
    client.register(&record("bin-01", "lobby"), None).unwrap();
    let response = reqwest::blocking::Client::new()
        .put(format!("{}/bins/bin-02/status", server.url()))
        .json(&status("bin-01", 1, 0, 0))
        .send()
        .unwrap();
    assert_eq!(response.status().as_u16(), 400);
    assert_eq!(service.head(), 1);
}

#[test]
fn bearer_token_gate() {
    let service = Arc::new(TelemetryService::in_memory(clock()));
    let server = start(service, Some("s3cret"));
    let anonymous = HttpClient::new(&server.url(), None).unwrap();
    let wrong = HttpClient::new(&server.url(), Some("nope".into())).unwrap();
    let good = HttpClient::new(&server.url(), Some("s3cret".into())).unwrap();
    assert_eq!(anonymous.list_bins().unwrap_err().kind(), Some("unauthorized"));
    assert_eq!(wrong.list_bins().unwrap_err().kind(), Some("unauthorized"));
    good.register(&record("bin-01", "lobby"), None).unwrap();
    assert_eq!(good.list_bins().unwrap().len(), 1);

    assert!(events(&collect(&server.url(), Some(0), None, 1)).is_empty());
    assert_eq!(events(&collect(&server.url(), Some(0), Some("s3cret"), 1)).len(), 1);
}

#[test]
fn since_zero_replays_the_log_file_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.log");
    let service = Arc::new(TelemetryService::open(&path, clock()).unwrap());
    let server = start(service.clone(), None);
    let client = HttpClient::new(&server.url(), None).unwrap();
    client.register(&record("bin-01", "lobby"), Some(1)).unwrap();
    client.put_status(&status("bin-01", 2, 10, 0)).unwrap();
    client.put_status(&status("bin-01", 3, 20, 5)).unwrap();
    client.put_status(&full("bin-01", 4)).unwrap();
    client.remove_bin("bin-01").unwrap();

    let frames = collect(&server.url(), Some(0), None, 5);
    assert_eq!(events(&frames), read_log(&path).unwrap());
    let offsets: Vec<u64> = events(&frames).iter().map(|e| e.offset).collect();
    assert_eq!(offsets, [1, 2, 3, 4, 5]);

    let tail = collect(&server.url(), Some(3), None, 2);
    assert_eq!(events(&tail), read_log(&path).unwrap()[3..]);
}

#[test]
fn live_events_reach_every_subscriber_identically() {
    let service = Arc::new(TelemetryService::in_memory(clock()));
    let server = start(service.clone(), None);
    let client = HttpClient::new(&server.url(), None).unwrap();
    client.register(&record("bin-01", "lobby"), Some(1)).unwrap();

    let url = server.url();
    let watchers: Vec<_> = (0..2)
        .map(|_| {
            let url = url.clone();
            std::thread::spawn(move || collect(&url, None, None, 3))
        })
        .collect();
    let deadline = std::time::Instant::now() + Duration::from_secs(2);
    while service.subscriber_count() < 2 && std::time::Instant::now() < deadline {
        std::thread::sleep(Duration::from_millis(5));
    }
    client.put_status(&status("bin-01", 2, 50, 0)).unwrap();
    client.put_status(&full("bin-01", 3)).unwrap();
    client.put_status(&full("bin-01", 3)).unwrap_err();
    client.put_status(&status("bin-01", 4, 0, 0)).unwrap();

    let seen: Vec<Vec<EventLogEntry>> = watchers.into_iter().map(|w| events(&w.join().unwrap())).collect();
    assert_eq!(seen[0], seen[1]);
    assert_eq!(seen[0], service.log()[1..]);
    assert_eq!(seen[0].iter().filter(|e| e.payload.kind() == "full").count(), 1);
}

#[test]
fn resume_past_head_gets_a_gap_notice_then_live_events() {
    let service = Arc::new(TelemetryService::in_memory(clock()));
    let server = start(service.clone(), None);
    let client = HttpClient::new(&server.url(), None).unwrap();
    client.register(&record("bin-01", "lobby"), Some(1)).unwrap();

    let url = server.url();
    let watcher = std::thread::spawn(move || collect(&url, Some(40), None, 2));
    while service.subscriber_count() < 1 {
        std::thread::sleep(Duration::from_millis(5));
    }
    client.put_status(&full("bin-01", 2)).unwrap();
    let frames = watcher.join().unwrap();
    assert_eq!(frames.len(), 2);
    assert!(matches!(frames[0], StreamFrame::Gap(g) if g.requested == 40 && g.head == 1));
    assert!(matches!(&frames[1], StreamFrame::Event(e) if e.offset == 2 && e.payload.kind() == "full"));
}

#[test]
fn restart_reproduces_state_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.log");
    let service = Arc::new(TelemetryService::open(&path, clock()).unwrap());
    let server = start(service.clone(), None);
    let client = HttpClient::new(&server.url(), None).unwrap();
    for (i, id) in ["bin-01", "bin-02", "bin-03"].iter().enumerate() {
        client.register(&record(id, &format!("floor {i}")), Some(1)).unwrap();
        client.put_status(&status(id, 2, 30 * i as u8, 10)).unwrap();
    }
    client.put_status(&full("bin-02", 3)).unwrap();
    client.remove_bin("bin-03").unwrap();
    let listing = reqwest::blocking::get(format!("{}/bins", server.url())).unwrap().bytes().unwrap();
    let snapshot = service.registry().snapshot();
    server.stop().unwrap();
    drop(service);

    let reopened = Arc::new(TelemetryService::open(&path, clock()).unwrap());
    assert_eq!(reopened.registry().snapshot(), snapshot);
    let server = start(reopened, None);
    let relisting = reqwest::blocking::get(format!("{}/bins", server.url())).unwrap().bytes().unwrap();
    assert_eq!(relisting, listing);
}

#[test]
fn stop_closes_open_streams() {
    let service = Arc::new(TelemetryService::in_memory(clock()));
    let server = start(service.clone(), None);
    let url = server.url();
    let watcher = std::thread::spawn(move || collect(&url, None, None, 10));
    while service.subscriber_count() < 1 {
        std::thread::sleep(Duration::from_millis(5));
    }
    let started = std::time::Instant::now();
    server.stop().unwrap();
    assert!(watcher.join().unwrap().is_empty());
    assert!(started.elapsed() < Duration::from_secs(2));
}

#[test]
fn simulated_device_reports_over_http() {
    let service = Arc::new(TelemetryService::in_memory(clock()));
    let server = start(service.clone(), None);
    let corpus = generate_synthetic_corpus(11, 3);
    let library = ImageLibrary::new(corpus.clone());
    let scenario = Scenario::random(5, 30, &corpus, Capacities { recyclable: 4, non_recyclable: 4 }, 3.0);
    let oracle = GroundTruthClassifier::new(&corpus);
    let options = SimOptions::default();

    let sink = HttpClient::new(&server.url(), None).unwrap();
    let trace = run_scenario(&scenario, &library, &oracle, sink, &options).unwrap();

    let log = service.log();
    assert_eq!(log.len(), trace.messages.len(), "every message landed once");
    let alerts = log.iter().filter(|e| e.payload.kind() == "full").count();
    assert_eq!(alerts, trace.full_alerts(BinKind::Recyclable) + trace.full_alerts(BinKind::NonRecyclable));
    let seqs: Vec<Option<u64>> = log.iter().map(|e| e.payload.seq()).collect();
    let sent: Vec<Option<u64>> = trace.messages.iter().map(|m| Some(m.seq)).collect();
    assert_eq!(seqs, sent);
}
