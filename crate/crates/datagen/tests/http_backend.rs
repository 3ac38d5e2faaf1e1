use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use instrir_datagen::backend::{BackendError, HttpBackend, LmBackend, ModelParams};

/// Serves one canned HTTP response per entry and hands back each request body.
fn serve(responses: Vec<(u16, String)>) -> (String, mpsc::Receiver<(String, String)>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body) in responses {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut head = String::new();
            let mut content_length = 0usize;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    content_length = v.trim().parse().unwrap();
                }
                head.push_str(&line);
            }
            let mut buf = vec![0; content_length];
            reader.read_exact(&mut buf).unwrap();
            tx.send((head, String::from_utf8(buf).unwrap())).unwrap();
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (url, rx)
}

#[test]
fn sends_chat_completions_and_reads_content() {
    let reply = r#"{"choices":[{"index":0,"message":{"role":"assistant","content":"{\"instruction\": \"x\"}"}}]}"#;
    let (url, rx) = serve(vec![(200, reply.to_string())]);
    std::env::set_var("INSTRIR_TEST_KEY", "sk-test");
    let backend = HttpBackend::new(&url, "INSTRIR_TEST_KEY", Duration::from_secs(5));
    let mut params = ModelParams::new("gen-model");
    params.temperature = 0.25;
    let out = backend.complete(&params.request("sys", "user text".into())).unwrap();
    assert_eq!(out, r#"{"instruction": "x"}"#);

    let (head, body) = rx.recv().unwrap();
    assert!(head.starts_with("POST /v1/chat/completions "), "{head}");
    assert!(head.to_ascii_lowercase().contains("authorization: bearer sk-test"));
    let json: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(json["model"], "gen-model");
    assert_eq!(json["temperature"], 0.25);
    assert_eq!(json["messages"][0]["role"], "system");
    assert_eq!(json["messages"][0]["content"], "sys");
    assert_eq!(json["messages"][1]["role"], "user");
    assert_eq!(json["messages"][1]["content"], "user text");
}

#[test]
fn status_codes_map_to_error_kinds() {
    let (url, _rx) = serve(vec![(429, "{}".into()), (503, "{}".into()), (400, "{}".into())]);
    let backend = HttpBackend::new(&url, "INSTRIR_UNSET_KEY_VAR", Duration::from_secs(5));
    let req = ModelParams::new("m").request("s", "u".into());
    assert!(matches!(backend.complete(&req), Err(BackendError::Transient(_))));
    assert!(matches!(backend.complete(&req), Err(BackendError::Transient(_))));
    assert!(matches!(backend.complete(&req), Err(BackendError::Fatal(_))));
}

#[test]
fn unreachable_host_is_retryable() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let backend = HttpBackend::new(&format!("http://127.0.0.1:{port}"), "X", Duration::from_secs(2));
    let err = backend.complete(&ModelParams::new("m").request("s", "u".into())).unwrap_err();
    assert!(err.is_retryable(), "{err:?}");
}
