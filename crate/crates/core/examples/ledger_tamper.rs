//! Build a small chain file, corrupt one byte, and verify it.
//!
//!     cargo run --example ledger_tamper -- /tmp/chain.dat

use honeyauth::ids::{SessionId, UserRef};
use honeyauth::ledger::{verify_bytes, BlockPayload, Ledger};
use honeyauth::otp::{generate_otp_set, OtpConfig};
use honeyauth::time::Millis;
use honeyauth::validator::envelope_aad;
use honeyauth::vault::{HoneytokenPayload, Vault};
use rand::rngs::OsRng;

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("honeyauth-example-chain.dat"));
    let _ = std::fs::remove_file(&path);

    let vault = Vault::ephemeral();
    let user = UserRef([1; 32]);
    {
        let ledger = Ledger::open(&path).unwrap();
        for t in 1..=5 {
            let sid = SessionId::random(&mut OsRng);
            let set =
                generate_otp_set(&OtpConfig::default(), 1, sid, Millis(t), &mut OsRng).unwrap();
            let payload = HoneytokenPayload::from_otp_set(&set, &mut OsRng);
            let sealed = vault
                .seal(&payload, vault.active_key(), &envelope_aad(&sid, &user))
                .unwrap();
            let block = ledger
                .append_block(
                    &BlockPayload {
                        user_ref: user,
                        session_id: sid,
                        sealed,
                    },
                    Millis(t),
                )
                .unwrap();
            println!("block {} {}", block.index, hex::encode(&block.hash[..8]));
        }
    }

    let mut bytes = std::fs::read(&path).unwrap();
    println!("intact:   {}", verify_bytes(&bytes));

    // Somewhere in the middle of the file, well past genesis.
    let at = bytes.len() / 2;
    bytes[at] ^= 0x10;
    println!("flipped byte {at}");
    println!("tampered: {}", verify_bytes(&bytes));

    std::fs::write(&path, &bytes).unwrap();
    match Ledger::open(&path) {
        Ok(_) => println!("opened anyway?"),
        Err(e) => println!("open refused: {e}"),
    }
}
