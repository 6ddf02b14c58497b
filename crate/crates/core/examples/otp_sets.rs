//! Issue a few OTP sets and show where the honeytoken sits in each.
//!
//!     cargo run --example otp_sets -- 5 8

use honeyauth::ids::SessionId;
use honeyauth::otp::{generate_otp_set, OtpConfig};
use honeyauth::time::{Clock, SystemClock};
use rand::rngs::OsRng;

fn main() {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<usize>().expect("numeric argument"));
    let n = args.next().unwrap_or(3);
    let digits = args.next().unwrap_or(6) as u32;
    let config = OtpConfig {
        n,
        otp_digits: digits,
        ..OtpConfig::default()
    };

    for position in 1..=n {
        let set = generate_otp_set(
            &config,
            position,
            SessionId::random(&mut OsRng),
            SystemClock.now(),
            &mut OsRng,
        )
        .expect("valid config");
        let cells: Vec<String> = set
            .otps
            .iter()
            .enumerate()
            .map(|(i, otp)| {
                if i + 1 == position {
                    format!("[{}]", otp.as_str())
                } else {
                    format!(" {} ", otp.as_str())
                }
            })
            .collect();
        println!(
            "position {position}: {}  expires {}",
            cells.join(" "),
            set.expires_at()
        );
    }
}
