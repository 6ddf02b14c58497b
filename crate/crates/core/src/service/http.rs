//! JSON-over-HTTP front end for [`AuthService`].
//!
//! | route | success | failures |
//! |---|---|---|
//! | `POST /register` | 201 | 409, 400 |
//! | `POST /login` | 200 `{session_id}` | 401, 423 |
//! | `POST /otp` | 200 `{outcome, remaining?}` | 423 `Locked`, 410 `SessionInvalid`, 404 |
//! | `GET /demo/mailbox/{username}` | 200 list | 403, 404 |
//! | `GET /healthz` | 200 | |
//!
//! Errors are `{"error": code, "message": text}`.

use std::io;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

use super::{AuthService, MailMessage, ServiceError};
use crate::ids::SessionId;
use crate::validator::ValidationOutcome;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegisterRequest {
    pub username: String,
    pub password: String,
    pub honeytoken_position: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoginRequest {
    pub username: String,
    pub password: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoginResponse {
    pub session_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OtpRequest {
    pub session_id: String,
    pub otp: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OtpResponse {
    pub outcome: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remaining: Option<u32>,
}

impl OtpResponse {
    pub fn to_outcome(&self) -> Option<ValidationOutcome> {
        Some(match self.outcome.as_str() {
            "Authenticated" => ValidationOutcome::Authenticated,
            "Locked" => ValidationOutcome::Locked,
            "Retry" => ValidationOutcome::Retry {
                remaining: self.remaining?,
            },
            "SessionInvalid" => ValidationOutcome::SessionInvalid,
            _ => return None,
        })
    }
}

impl From<ValidationOutcome> for OtpResponse {
    fn from(o: ValidationOutcome) -> Self {
        Self {
            outcome: o.kind().to_string(),
            remaining: match o {
                ValidationOutcome::Retry { remaining } => Some(remaining),
                _ => None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MailboxEntry {
    pub recipient: String,
    pub session_id: String,
    pub otps: Vec<String>,
    pub sent_at: u64,
}

impl From<&MailMessage> for MailboxEntry {
    fn from(m: &MailMessage) -> Self {
        Self {
            recipient: m.recipient.clone(),
            session_id: m.session_id.to_string(),
            otps: m.otps.iter().map(|o| o.as_str().to_string()).collect(),
            sent_at: m.sent_at.as_u64(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub n_otps: usize,
    pub demo_mode: bool,
}

enum ApiError {
    Service(ServiceError),
    Malformed(String),
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        Self::Service(e)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::Malformed(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code, message) = match self {
            Self::Service(e) => (
                StatusCode::from_u16(e.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR),
                e.code().to_string(),
                e.to_string(),
            ),
            Self::Malformed(m) => (StatusCode::BAD_REQUEST, "malformed-request".to_string(), m),
        };
        (
            status,
            Json(ErrorBody {
                error: code,
                message,
            }),
        )
            .into_response()
    }
}

type Shared = State<Arc<AuthService>>;

/// Runs blocking service work (password hashing, file I/O) off the reactor.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))?
        .map_err(ApiError::from)
}

async fn register(
    State(svc): Shared,
    body: Result<Json<RegisterRequest>, JsonRejection>,
) -> Result<StatusCode, ApiError> {
    let Json(req) = body?;
    blocking(move || svc.register(&req.username, &req.password, req.honeytoken_position)).await?;
    Ok(StatusCode::CREATED)
}

async fn login(
    State(svc): Shared,
    body: Result<Json<LoginRequest>, JsonRejection>,
) -> Result<Json<LoginResponse>, ApiError> {
    let Json(req) = body?;
    let sid = blocking(move || svc.login(&req.username, &req.password)).await?;
    Ok(Json(LoginResponse {
        session_id: sid.to_string(),
    }))
}

async fn otp(
    State(svc): Shared,
    body: Result<Json<OtpRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<OtpResponse>), ApiError> {
    let Json(req) = body?;
    let sid: SessionId = req
        .session_id
        .parse()
        .map_err(|_| ApiError::Malformed("session_id is not a valid session token".into()))?;
    let outcome = blocking(move || svc.submit_otp(&sid, &req.otp)).await?;
    let status = match outcome {
        ValidationOutcome::Authenticated | ValidationOutcome::Retry { .. } => StatusCode::OK,
        ValidationOutcome::Locked => StatusCode::LOCKED,
        ValidationOutcome::SessionInvalid => StatusCode::GONE,
    };
    Ok((status, Json(outcome.into())))
}

async fn mailbox(
    State(svc): Shared,
    Path(username): Path<String>,
) -> Result<Json<Vec<MailboxEntry>>, ApiError> {
    let messages = blocking(move || svc.read_mailbox(&username)).await?;
    Ok(Json(messages.iter().map(MailboxEntry::from).collect()))
}

async fn healthz(State(svc): Shared) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        n_otps: svc.config().n_otps,
        demo_mode: svc.config().demo_mode,
    })
}

/// Builds the router. With `demo_ui`, unmatched paths are served as static
/// files from that directory.
pub fn router(service: Arc<AuthService>, demo_ui: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/register", post(register))
        .route("/login", post(login))
        .route("/otp", post(otp))
        .route("/demo/mailbox/{username}", get(mailbox))
        .route("/healthz", get(healthz))
        .with_state(service);
    match demo_ui {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves on an already-bound listener until ctrl-c.
pub async fn serve_on(
    listener: TcpListener,
    service: Arc<AuthService>,
    demo_ui: Option<PathBuf>,
) -> io::Result<()> {
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(service, demo_ui))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

pub async fn serve(
    service: Arc<AuthService>,
    addr: SocketAddr,
    demo_ui: Option<PathBuf>,
) -> io::Result<()> {
    serve_on(TcpListener::bind(addr).await?, service, demo_ui).await
}
