use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use citefind::domain::PaperDate;
use citefind::gateway::{Gateway, GatewayConfig, GatewayError, SearchQuery, SortOrder};

/// Minimal HTTP/1.1 server. `respond` maps (request number, path) to
/// (status, extra headers, body).
fn serve<F>(respond: F) -> (String, Arc<AtomicUsize>)
where
    F: Fn(usize, &str) -> (u16, &'static str, String) + Send + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            if reader.read_line(&mut request_line).is_err() {
                continue;
            }
            let mut line = String::new();
            while reader.read_line(&mut line).map(|n| n > 2).unwrap_or(false) {
                line.clear();
            }
            let path = request_line.split_whitespace().nth(1).unwrap_or("/").to_string();
            let n = counter.fetch_add(1, Ordering::SeqCst);
            let (status, headers, body) = respond(n, &path);
            let reply = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n{headers}\r\n{body}",
                body.len()
            );
            let _ = stream.write_all(reply.as_bytes());
        }
    });
    (base, hits)
}

fn api_paper(id: &str, date: &str, cites: u64) -> String {
    format!(
        r#"{{"paperId":"{id}","title":"Paper {id}","abstract":null,"citationCount":{cites},"publicationDate":"{date}","year":null,"openAccessPdf":null}}"#
    )
}

fn config(base: &str) -> GatewayConfig {
    let mut c = GatewayConfig::live(Some(base.to_string()));
    c.requests_per_second = 1000.0;
    c.retry_backoff = Duration::from_millis(5);
    c.timeout = Duration::from_secs(5);
    c
}

fn query(q: &str) -> SearchQuery {
    SearchQuery { query: q.into(), sort: SortOrder::Relevance, issued_for: "test".into() }
}

#[test]
fn live_search_retries_rate_limits_and_filters() {
    let (base, hits) = serve(|n, path| {
        if n == 0 {
            return (429, "Retry-After: 0\r\n", "{}".into());
        }
        assert!(path.starts_with("/paper/search?"), "{path}");
        let data = [
            api_paper("src", "2015-12-10", 1),
            api_paper("old", "2014-01-01", 50),
            api_paper("new", "2017-06-01", 9),
            r#"{"paperId":"undated","title":"U","citationCount":3}"#.to_string(),
        ];
        let body = if path.contains("offset=0") { format!(r#"{{"data":[{}]}}"#, data.join(",")) } else { r#"{"data":[]}"#.into() };
        (200, "", body)
    });
    let gw = Gateway::from_config(&config(&base)).unwrap();
    let out = gw.search(&query("residual"), "src", PaperDate::new(2015, 12, 10).unwrap(), 10).unwrap();
    let ids: Vec<&str> = out.results.iter().map(|p| p.paper_id.as_str()).collect();
    assert_eq!(ids, ["old"]);
    assert!(hits.load(Ordering::SeqCst) >= 2);
}

#[test]
fn server_errors_exhaust_three_attempts() {
    let (base, hits) = serve(|_, _| (503, "", "{}".into()));
    let gw = Gateway::from_config(&config(&base)).unwrap();
    let err = gw.search(&query("x"), "s", PaperDate::from_year(2020).unwrap(), 10).unwrap_err();
    assert!(matches!(err, GatewayError::ProviderFailure(_)), "{err:?}");
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[test]
fn disk_cache_survives_a_new_gateway() {
    let (base, hits) = serve(|_, path| {
        if path.starts_with("/paper/abc") {
            (200, "", api_paper("abc", "2010-01-01", 7))
        } else {
            (404, "", "{}".into())
        }
    });
    let cache = tempfile::tempdir().unwrap();
    let mut c = config(&base);
    c.cache_dir = Some(cache.path().to_path_buf());
    let first = Gateway::from_config(&c).unwrap();
    assert_eq!(first.get_paper("abc").unwrap().citation_count, 7);
    assert!(matches!(first.get_paper("missing"), Err(GatewayError::NotFound(_))));
    let before = hits.load(Ordering::SeqCst);
    let second = Gateway::from_config(&c).unwrap();
    assert_eq!(second.get_paper("abc").unwrap().citation_count, 7);
    assert!(matches!(second.get_paper("missing"), Err(GatewayError::NotFound(_))));
    assert_eq!(hits.load(Ordering::SeqCst), before);
}
