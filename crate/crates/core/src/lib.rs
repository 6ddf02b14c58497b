//! Two-factor authentication with honeytokens.
//!
//! Each login issues N one-time passwords. Exactly one, at a position the
//! user picked when registering, is valid; entering any other locks the
//! account. The valid OTP travels sealed from the issuing side to the
//! validator over an append-only hash-chained ledger.
//!
//! Entry points: [`service::AuthService`] for the whole flow,
//! [`service::http::router`] to serve it, and the lower layers
//! ([`otp`], [`vault`], [`ledger`], [`validator`]) for use on their own.

pub mod accounts;
pub mod bench;
pub mod cli;
pub mod codec;
pub mod ids;
pub mod ledger;
pub mod otp;
pub mod service;
pub mod time;
pub mod validator;
pub mod vault;
