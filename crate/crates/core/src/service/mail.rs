//! OTP delivery. The default channel is an in-memory mailbox that stands in
//! for the user's email client.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::ids::SessionId;
use crate::otp::{Otp, OtpSet};
use crate::time::Millis;

#[derive(Debug, Error)]
pub enum DeliveryError {
    #[error("delivery channel unavailable")]
    Unavailable,
    #[error("delivery failed: {0}")]
    Failed(String),
}

/// One login's OTPs, in set order. Position matters: the recipient picks
/// the OTP at their registered position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MailMessage {
    pub recipient: String,
    pub session_id: SessionId,
    pub otps: Vec<Otp>,
    pub sent_at: Millis,
}

impl MailMessage {
    pub fn for_set(recipient: &str, set: &OtpSet, sent_at: Millis) -> Self {
        Self {
            recipient: recipient.to_string(),
            session_id: set.session_id,
            otps: set.otps.clone(),
            sent_at,
        }
    }

    pub fn body(&self) -> String {
        let mut body = String::from("Your one-time passwords for this sign-in:\n\n");
        for (i, otp) in self.otps.iter().enumerate() {
            body.push_str(&format!("  {}. {}\n", i + 1, otp));
        }
        body.push_str("\nEnter only the one at your chosen position.\n");
        body
    }
}

pub trait DeliveryChannel: Send + Sync {
    fn deliver(&self, message: &MailMessage) -> Result<(), DeliveryError>;

    /// Withdraws a delivered message if the channel can. Returns whether it
    /// did.
    fn retract(&self, _message: &MailMessage) -> bool {
        false
    }

    /// The readable mailbox behind this channel, if there is one.
    fn mailbox(&self) -> Option<&MockMailbox> {
        None
    }
}

#[derive(Debug, Default)]
pub struct MockMailbox {
    boxes: Mutex<HashMap<String, Vec<MailMessage>>>,
    down: AtomicBool,
}

impl MockMailbox {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fault injection: while unavailable every delivery fails.
    pub fn set_available(&self, up: bool) {
        self.down.store(!up, Ordering::SeqCst);
    }

    pub fn messages(&self, recipient: &str) -> Vec<MailMessage> {
        self.boxes
            .lock()
            .expect("mailbox poisoned")
            .get(recipient)
            .cloned()
            .unwrap_or_default()
    }

    pub fn total(&self) -> usize {
        self.boxes
            .lock()
            .expect("mailbox poisoned")
            .values()
            .map(Vec::len)
            .sum()
    }
}

impl DeliveryChannel for MockMailbox {
    fn deliver(&self, message: &MailMessage) -> Result<(), DeliveryError> {
        if self.down.load(Ordering::SeqCst) {
            return Err(DeliveryError::Unavailable);
        }
        self.boxes
            .lock()
            .expect("mailbox poisoned")
            .entry(message.recipient.clone())
            .or_default()
            .push(message.clone());
        Ok(())
    }

    fn retract(&self, message: &MailMessage) -> bool {
        let mut boxes = self.boxes.lock().expect("mailbox poisoned");
        let Some(inbox) = boxes.get_mut(&message.recipient) else {
            return false;
        };
        match inbox.iter().rposition(|m| m == message) {
            Some(i) => {
                inbox.remove(i);
                true
            }
            None => false,
        }
    }

    fn mailbox(&self) -> Option<&MockMailbox> {
        Some(self)
    }
}

#[cfg(feature = "smtp")]
pub use smtp::SmtpChannel;

#[cfg(feature = "smtp")]
mod smtp {
    use std::time::Duration;

    use lettre::message::header::ContentType;
    use lettre::{Message, SmtpTransport, Transport};

    use super::{DeliveryChannel, DeliveryError, MailMessage};

    /// Plain SMTP submission to a relay (TLS is expected to be handled by the
    /// relay or a local forwarder). Recipients are the usernames, which must
    /// then be mail addresses.
    pub struct SmtpChannel {
        transport: SmtpTransport,
        from: String,
    }

    impl SmtpChannel {
        pub fn new(relay: &str, from: &str, timeout: Duration) -> Result<Self, DeliveryError> {
            let (host, port) = match relay.rsplit_once(':') {
                Some((h, p)) => (
                    h,
                    p.parse::<u16>()
                        .map_err(|_| DeliveryError::Failed(format!("bad relay port in {relay}")))?,
                ),
                None => (relay, 25),
            };
            let transport = SmtpTransport::builder_dangerous(host)
                .port(port)
                .timeout(Some(timeout))
                .build();
            Ok(Self {
                transport,
                from: from.to_string(),
            })
        }
    }

    impl DeliveryChannel for SmtpChannel {
        fn deliver(&self, message: &MailMessage) -> Result<(), DeliveryError> {
            let fail = |e: &dyn std::fmt::Display| DeliveryError::Failed(e.to_string());
            let email = Message::builder()
                .from(self.from.parse().map_err(|e| fail(&e))?)
                .to(message.recipient.parse().map_err(|e| fail(&e))?)
                .subject("Your sign-in codes")
                .header(ContentType::TEXT_PLAIN)
                .body(message.body())
                .map_err(|e| fail(&e))?;
            self.transport.send(&email).map_err(|e| fail(&e))?;
            Ok(())
        }
    }
}
