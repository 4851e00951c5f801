//! Starts the scoring API on a free loopback port, sends one request with a
//! plain TCP client, and shuts down.
//!
//!     cargo run --example serve_api

use std::io::{Read, Write};
use std::net::TcpStream;

use deceptive_risk::service::{serve, ServiceConfig};

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    tokio::spawn(serve(listener, ServiceConfig::shipped()));

    let body = r#"{"case": {"category": "roach-motel",
        "ratings": {"uf": "high", "pk": "high", "se": "high"},
        "consequences": ["time_wasting", "financial_loss"]}}"#;
    let response = tokio::task::spawn_blocking(move || -> std::io::Result<String> {
        let mut stream = TcpStream::connect(addr)?;
        write!(
            stream,
            "POST /api/compare HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\n\
             Content-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        )?;
        let mut out = String::new();
        stream.read_to_string(&mut out)?;
        Ok(out)
    })
    .await??;
    let json = response.split("\r\n\r\n").nth(1).unwrap_or_default();
    println!("POST http://{addr}/api/compare");
    println!("{json}");
    Ok(())
}
