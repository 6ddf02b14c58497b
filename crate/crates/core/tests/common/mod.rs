#![allow(dead_code)]

use std::net::SocketAddr;
use std::sync::Arc;

use honeyauth::ids::SessionId;
use honeyauth::service::{http, AuthService, ServiceBuilder, ServiceConfig};
use honeyauth::time::{ManualClock, Millis};
use honeyauth::vault::KdfParams;

pub const T0: Millis = Millis(1_750_000_000_000);
pub const PASSWORD: &str = "correct horse battery";

pub fn fast_config() -> ServiceConfig {
    ServiceConfig {
        kdf: KdfParams::insecure_fast(),
        ..ServiceConfig::default()
    }
}

pub fn service_with(config: ServiceConfig) -> (AuthService, Arc<ManualClock>) {
    let clock = Arc::new(ManualClock::new(T0));
    let svc = ServiceBuilder::in_memory(config)
        .clock(clock.clone())
        .build()
        .unwrap();
    (svc, clock)
}

pub fn service() -> (AuthService, Arc<ManualClock>) {
    service_with(fast_config())
}

/// The OTPs mailed for `sid`, in set order.
pub fn mailed_otps(svc: &AuthService, user: &str, sid: &SessionId) -> Vec<String> {
    svc.mailbox()
        .expect("mock mailbox")
        .messages(user)
        .into_iter()
        .find(|m| &m.session_id == sid)
        .expect("mail for session")
        .otps
        .iter()
        .map(|o| o.as_str().to_string())
        .collect()
}

/// A six-digit value that is not in `set`.
pub fn non_member(set: &[String], seed: u32) -> String {
    (seed..)
        .map(|i| format!("{:06}", (i as u64 * 7919) % 1_000_000))
        .find(|c| !set.contains(c))
        .unwrap()
}

/// Serves `svc` on an ephemeral local port from a background runtime.
pub fn spawn_http(svc: Arc<AuthService>) -> String {
    let (tx, rx) = std::sync::mpsc::channel::<SocketAddr>();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            http::serve_on(listener, svc, None).await.unwrap();
        });
    });
    format!("http://{}", rx.recv().unwrap())
}
