//! Seal a honeytoken payload, open it again, and watch a one-bit change in
//! the ciphertext or the associated data get rejected.

use honeyauth::ids::{SessionId, UserRef};
use honeyauth::otp::{generate_otp_set, OtpConfig};
use honeyauth::time::Millis;
use honeyauth::validator::{classify_otp, envelope_aad};
use honeyauth::vault::{HoneytokenPayload, Vault};
use rand::rngs::OsRng;

fn main() {
    let vault = Vault::ephemeral();
    let user = UserRef([7; 32]);
    let sid = SessionId::random(&mut OsRng);
    let set = generate_otp_set(&OtpConfig::default(), 2, sid, Millis(0), &mut OsRng).unwrap();
    let payload = HoneytokenPayload::from_otp_set(&set, &mut OsRng);
    let aad = envelope_aad(&sid, &user);

    let sealed = vault.seal(&payload, vault.active_key(), &aad).unwrap();
    println!("key id      {}", sealed.key_id);
    println!("nonce       {}", hex::encode(sealed.nonce));
    println!("ciphertext  {} bytes", sealed.ciphertext.len());

    let opened = vault.unseal(&sealed, vault.active_key(), &aad).unwrap();
    for otp in &set.otps {
        println!(
            "  {} -> {:?}",
            otp.as_str(),
            classify_otp(otp.as_str(), &opened)
        );
    }

    let mut flipped = sealed.clone();
    flipped.ciphertext[0] ^= 1;
    println!(
        "flipped ciphertext bit: {:?}",
        vault.unseal(&flipped, vault.active_key(), &aad).err()
    );

    let other = envelope_aad(&SessionId::random(&mut OsRng), &user);
    println!(
        "other session's aad:    {:?}",
        vault.unseal(&sealed, vault.active_key(), &other).err()
    );
}
