use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;

use rfsearch::http::{HttpConfig, HttpDesigner};
use rfsearch_core::actions::ActionKind;
use rfsearch_core::designer::{generate, Designer, DesignerError};
use rfsearch_core::prompts::{PromptBundle, PromptMeta, SYSTEM_PROMPT};
use serde_json::{json, Value};

struct Seen {
    headers: Vec<String>,
    body: Value,
}

/// Serve one canned `(status, body)` per connection, in order, and report
/// what each request carried.
fn serve(replies: Vec<(u16, String)>) -> (String, mpsc::Receiver<Seen>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, reply) in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut headers = Vec::new();
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end().to_string();
                if line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                headers.push(line);
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            let _ = tx.send(Seen { headers, body: serde_json::from_slice(&body).unwrap_or(Value::Null) });
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                reply.len()
            )
            .unwrap();
        }
    });
    (url, rx)
}

fn completion(text: &str) -> String {
    json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string()
}

fn prompt() -> PromptBundle {
    PromptBundle {
        kind: ActionKind::Init,
        system_text: SYSTEM_PROMPT.to_string(),
        user_text: "write a reward".into(),
        placeholders_resolved: Default::default(),
        meta: PromptMeta::default(),
    }
}

fn config(url: &str) -> HttpConfig {
    HttpConfig {
        temperature: 0.7,
        backoff_ms: 0,
        ..HttpConfig::new(url, "test-model")
    }
}

#[test]
fn sends_chat_messages_and_parses_reply() {
    let (url, rx) = serve(vec![(200, completion("{idea} ```\ncomponent a = 1.0;\n```"))]);
    let d = HttpDesigner::with_key(config(&url), Some("sk-test".into()));
    let resp = generate(&d, &prompt(), 5).unwrap();
    assert_eq!(resp.parsed_thought.as_deref(), Some("idea"));
    assert_eq!(resp.parsed_code.as_deref(), Some("component a = 1.0;"));

    let seen = rx.recv().unwrap();
    assert!(seen.headers.iter().any(|h| h.eq_ignore_ascii_case("authorization: Bearer sk-test")), "{:?}", seen.headers);
    assert_eq!(seen.body["model"], "test-model");
    assert_eq!(seen.body["temperature"], 0.7);
    assert_eq!(seen.body["seed"], 5);
    assert_eq!(
        seen.body["messages"],
        json!([
            {"role": "system", "content": SYSTEM_PROMPT},
            {"role": "user", "content": "write a reward"},
        ])
    );
}

#[test]
fn transient_failures_are_retried() {
    let (url, rx) = serve(vec![(500, "{}".into()), (429, "{}".into()), (200, completion("ok"))]);
    let d = HttpDesigner::with_key(config(&url), None);
    assert_eq!(d.complete(&prompt(), 0).unwrap(), "ok");
    let seen: Vec<Seen> = rx.iter().take(3).collect();
    assert!(seen.iter().all(|s| !s.headers.iter().any(|h| h.to_ascii_lowercase().starts_with("authorization"))));
}

#[test]
fn retries_are_bounded() {
    let (url, _rx) = serve(vec![(503, "{}".into()), (503, "{}".into()), (503, "down".into())]);
    let d = HttpDesigner::with_key(config(&url), None);
    match d.complete(&prompt(), 0) {
        Err(DesignerError::Transport(msg)) => assert!(msg.contains("503") && msg.contains("down"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn client_errors_are_not_retried() {
    let (url, rx) = serve(vec![(401, "bad key".into())]);
    let d = HttpDesigner::with_key(config(&url), Some("x".into()));
    assert!(matches!(d.complete(&prompt(), 0), Err(DesignerError::Transport(_))));
    assert_eq!(rx.iter().count(), 1);
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/", listener.local_addr().unwrap());
    drop(listener);
    let d = HttpDesigner::with_key(HttpConfig { retries: 1, ..config(&url) }, None);
    assert!(matches!(d.complete(&prompt(), 0), Err(DesignerError::Transport(_))));
}
