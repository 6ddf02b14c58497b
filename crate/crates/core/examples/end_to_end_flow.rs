//! The whole service in-process: register, log in, read the mock mail,
//! pass with the honeytoken, then get locked out by a decoy.

use honeyauth::service::{AuthService, ServiceBuilder, ServiceConfig};

fn otps_for(svc: &AuthService, user: &str) -> Vec<String> {
    let mail = svc.read_mailbox(user).unwrap().pop().unwrap();
    mail.otps.iter().map(|o| o.as_str().to_string()).collect()
}

fn main() {
    let svc = ServiceBuilder::in_memory(ServiceConfig::default())
        .build()
        .unwrap();
    svc.register("alice", "correct horse battery", 3).unwrap();

    let sid = svc.login("alice", "correct horse battery").unwrap();
    let otps = otps_for(&svc, "alice");
    println!("mail:   {otps:?}");
    println!("typo:   {}", svc.submit_otp(&sid, "000000").unwrap());
    println!("third:  {}", svc.submit_otp(&sid, &otps[2]).unwrap());

    let sid = svc.login("alice", "correct horse battery").unwrap();
    let otps = otps_for(&svc, "alice");
    println!("first:  {}", svc.submit_otp(&sid, &otps[0]).unwrap());
    println!(
        "login:  {:?}",
        svc.login("alice", "correct horse battery").err()
    );

    svc.unlock("alice").unwrap();
    println!("after unlock, locked = {}", svc.is_locked("alice").unwrap());
    println!("ledger: {}", svc.ledger().verify());
    for alert in svc.validator().alerts() {
        println!("alert:  {:?} session {}", alert.kind, alert.session_id);
    }
}
