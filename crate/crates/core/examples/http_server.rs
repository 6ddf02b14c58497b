//! Serve the API with an ephemeral key and in-memory storage.
//!
//!     cargo run --example http_server -- 127.0.0.1:8080 [demo-ui-dir]
//!
//! Then, from another shell:
//!
//!     honeyauth register --username alice --password 'correct horse' --position 2
//!     honeyauth login --username alice --password 'correct horse'
//!     honeyauth mailbox --username alice
//!     honeyauth otp --session <token> --otp <second code>

use std::net::SocketAddr;
use std::sync::Arc;

use honeyauth::service::{http, ServiceBuilder, ServiceConfig};

#[tokio::main]
async fn main() -> std::io::Result<()> {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .init();
    let mut args = std::env::args().skip(1);
    let addr: SocketAddr = args
        .next()
        .unwrap_or_else(|| "127.0.0.1:8080".into())
        .parse()
        .expect("socket address");
    let ui = args.next().map(Into::into);

    let service = ServiceBuilder::in_memory(ServiceConfig::default())
        .build()
        .expect("default config is valid");
    http::serve(Arc::new(service), addr, ui).await
}
