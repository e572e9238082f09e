use std::io::{Cursor, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use fftree_client::{fetch_factor_archive, unpack, ArchiveKind, FetchConfig, FetchError};
use zip::write::SimpleFileOptions;

const FACTORS_CSV: &str = "This file was created using the 202504 CRSP database.\n\n\
     ,Mkt-RF,SMB,HML,RF\n20150501,  1.04, -0.20,  0.29,  0.000\n20150504,  0.31,  0.11, -0.47,  0.000\n\n";

fn zip_of(entries: &[(&str, &str)]) -> Vec<u8> {
    let mut w = zip::ZipWriter::new(Cursor::new(Vec::new()));
    for (name, body) in entries {
        w.start_file(*name, SimpleFileOptions::default()).unwrap();
        w.write_all(body.as_bytes()).unwrap();
    }
    w.finish().unwrap().into_inner()
}

enum Reply {
    Ok(Vec<u8>),
    Status(u16),
    Hang,
    Drop,
}

/// Serves one scripted reply per connection, then closes the port.
struct Server {
    url: String,
    hits: Arc<AtomicUsize>,
    handle: Option<thread::JoinHandle<()>>,
}

impl Server {
    fn start(replies: Vec<Reply>) -> Server {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!(
            "http://{}/ftp/F-F_Research_Data_Factors_daily_CSV.zip",
            listener.local_addr().unwrap()
        );
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = hits.clone();
        let handle = thread::spawn(move || {
            for reply in replies {
                let Ok((stream, _)) = listener.accept() else {
                    return;
                };
                counter.fetch_add(1, Ordering::SeqCst);
                respond(stream, reply);
            }
        });
        Server {
            url,
            hits,
            handle: Some(handle),
        }
    }

    fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    fn finish(mut self) {
        self.handle.take().unwrap().join().unwrap();
    }
}

fn respond(mut stream: TcpStream, reply: Reply) {
    let mut buf = [0u8; 4096];
    let mut request = Vec::new();
    while !request.windows(4).any(|w| w == b"\r\n\r\n") {
        match stream.read(&mut buf) {
            Ok(0) | Err(_) => return,
            Ok(n) => request.extend_from_slice(&buf[..n]),
        }
    }
    match reply {
        Reply::Ok(body) => {
            let head = format!(
                "HTTP/1.1 200 OK\r\nContent-Type: application/zip\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                body.len()
            );
            let _ = stream.write_all(head.as_bytes());
            let _ = stream.write_all(&body);
        }
        Reply::Status(code) => {
            let head =
                format!("HTTP/1.1 {code} Nope\r\nContent-Length: 0\r\nConnection: close\r\n\r\n");
            let _ = stream.write_all(head.as_bytes());
        }
        Reply::Hang => thread::sleep(Duration::from_millis(1500)),
        Reply::Drop => {}
    }
}

fn config(url: &str, dir: &std::path::Path) -> FetchConfig {
    FetchConfig {
        url: url.to_string(),
        destination: dir.to_path_buf(),
        timeout: Duration::from_secs(5),
        expected_kind: ArchiveKind::DailyFactors,
        refresh: false,
    }
}

#[test]
fn zip_fixture_round_trip() {
    let server = Server::start(vec![Reply::Ok(zip_of(&[("F-F.CSV", FACTORS_CSV)]))]);
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&server.url, dir.path());
    assert_eq!(fetch_factor_archive(&cfg).unwrap(), FACTORS_CSV.as_bytes());
    assert!(cfg.cache_path().exists());
    server.finish();
}

#[test]
fn two_entries_are_rejected() {
    let two = zip_of(&[("a.csv", FACTORS_CSV), ("b.csv", FACTORS_CSV)]);
    assert!(matches!(unpack(&two), Err(FetchError::MultipleEntries(2))));
    let server = Server::start(vec![Reply::Ok(two)]);
    let dir = tempfile::tempdir().unwrap();
    let err = fetch_factor_archive(&config(&server.url, dir.path())).unwrap_err();
    assert!(matches!(err, FetchError::MultipleEntries(2)), "{err}");
    server.finish();
}

#[test]
fn warm_cache_needs_no_network() {
    let server = Server::start(vec![Reply::Ok(zip_of(&[("F-F.CSV", FACTORS_CSV)]))]);
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&server.url, dir.path());
    let first = fetch_factor_archive(&cfg).unwrap();
    server.finish();
    // the port is closed now, so any request would fail
    let second = fetch_factor_archive(&cfg).unwrap();
    let third = fetch_factor_archive(&cfg).unwrap();
    assert_eq!(first, second);
    assert_eq!(second, third);

    let mut refresh = cfg.clone();
    refresh.refresh = true;
    assert!(matches!(
        fetch_factor_archive(&refresh),
        Err(FetchError::Network { .. })
    ));
    // a failed refresh leaves the cached copy intact
    assert_eq!(fetch_factor_archive(&cfg).unwrap(), first);
}

#[test]
fn refresh_downloads_again() {
    let server = Server::start(vec![
        Reply::Ok(zip_of(&[("F-F.CSV", FACTORS_CSV)])),
        Reply::Ok(FACTORS_CSV.replace("1.04", "2.08").into_bytes()),
    ]);
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(&server.url, dir.path());
    fetch_factor_archive(&cfg).unwrap();
    cfg.refresh = true;
    let updated = fetch_factor_archive(&cfg).unwrap();
    assert!(String::from_utf8(updated).unwrap().contains("2.08"));
    assert_eq!(server.hits(), 2);
    server.finish();
}

#[test]
fn one_retry_after_dropped_connection() {
    let server = Server::start(vec![
        Reply::Drop,
        Reply::Ok(zip_of(&[("F-F.CSV", FACTORS_CSV)])),
    ]);
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        fetch_factor_archive(&config(&server.url, dir.path())).unwrap(),
        FACTORS_CSV.as_bytes()
    );
    assert_eq!(server.hits(), 2);
    server.finish();
}

#[test]
fn http_errors_and_timeouts() {
    let server = Server::start(vec![Reply::Status(404), Reply::Status(404)]);
    let dir = tempfile::tempdir().unwrap();
    let err = fetch_factor_archive(&config(&server.url, dir.path())).unwrap_err();
    assert!(matches!(err, FetchError::Network { .. }), "{err}");
    server.finish();

    let server = Server::start(vec![Reply::Hang, Reply::Hang]);
    let mut cfg = config(&server.url, dir.path());
    cfg.timeout = Duration::from_millis(300);
    let err = fetch_factor_archive(&cfg).unwrap_err();
    assert!(matches!(err, FetchError::Timeout { .. }), "{err}");
    assert!(!cfg.cache_path().exists());
    server.finish();
}

#[test]
fn wrong_file_kind_is_reported() {
    let server = Server::start(vec![Reply::Ok(zip_of(&[("F-F.CSV", FACTORS_CSV)]))]);
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(&server.url, dir.path());
    cfg.expected_kind = ArchiveKind::SixPortfolios;
    assert!(matches!(
        fetch_factor_archive(&cfg),
        Err(FetchError::WrongKind(ArchiveKind::SixPortfolios))
    ));
    server.finish();
}

#[test]
fn concurrent_callers_share_one_download() {
    let server = Server::start(vec![Reply::Ok(zip_of(&[("F-F.CSV", FACTORS_CSV)]))]);
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&server.url, dir.path());
    let results: Vec<Vec<u8>> = thread::scope(|s| {
        let handles: Vec<_> = (0..6)
            .map(|_| s.spawn(|| fetch_factor_archive(&cfg).unwrap()))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert!(results.iter().all(|r| r == FACTORS_CSV.as_bytes()));
    assert_eq!(server.hits(), 1);
    server.finish();
}
