//! The HTTP API end to end: start the service on a free port, load the lamp
//! scenario, ask why the lamp is on, follow the advice and ask again.
//!
//! ```text
//! cargo run -p cfexplain-service --example http_session
//! ```

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};

use cfexplain::Settings;
use cfexplain_service::{router, AppState, SessionStore};
use serde_json::{json, Value};

fn call(addr: SocketAddr, method: &str, path: &str, body: &str) -> (u16, Value) {
    let mut stream = TcpStream::connect(addr).unwrap();
    write!(
        stream,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Length: {}\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut text = String::new();
    stream.read_to_string(&mut text).unwrap();
    let (head, body) = text.split_once("\r\n\r\n").unwrap();
    (head.split(' ').nth(1).unwrap().parse().unwrap(), serde_json::from_str(body).unwrap_or(Value::Null))
}

fn client(addr: SocketAddr) {
    let (_, created) = call(addr, "POST", "/sessions", include_str!("../../core/scenarios/lamp.json"));
    let id = created["id"].as_str().unwrap();
    println!("session {id}, lamp is {}", created["state"]["lamp"]);

    let ask = json!({"device": "lamp", "foil": "off", "kind": "both"}).to_string();
    let (_, report) = call(addr, "POST", &format!("/sessions/{id}/explanations"), &ask);
    for e in report["explanations"].as_array().unwrap() {
        println!("  {}", e["text"].as_str().unwrap());
    }

    // Apply the suggested change.
    let change = &report["ranked"][0]["changes"][0];
    let event = json!({"entity": change["entity"], "value": change["value"]}).to_string();
    let (_, step) = call(addr, "POST", &format!("/sessions/{id}/events"), &event);
    println!("after {event}: lamp is {}, fired {}", step["state"]["lamp"], step["firings"]);

    let (status, err) = call(addr, "POST", &format!("/sessions/{id}/explanations"), &ask);
    println!("asking again: {status} {}", err["code"]);
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let app = router(AppState::new(SessionStore::in_memory(Default::default()), Settings::default()));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    tokio::spawn(async move { axum::serve(listener, app).await });
    tokio::task::spawn_blocking(move || client(addr)).await.unwrap();
    Ok(())
}
