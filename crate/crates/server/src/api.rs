use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use binsort_core::telemetry::{
    BinRecord, BinState, Envelope, Registration, Subscription, TelemetryError, TelemetryMessage, TelemetryService,
};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::watch;

use crate::stream::StreamFrame;

#[derive(Clone)]
pub(crate) struct AppState {
    service: Arc<TelemetryService>,
    token: Option<Arc<str>>,
    closing: Arc<watch::Sender<bool>>,
}

/// Error reply: `{"error": "not_found", "message": "..."}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

struct ApiError(StatusCode, &'static str, String);

impl From<TelemetryError> for ApiError {
    fn from(e: TelemetryError) -> Self {
        let (status, kind) = match &e {
            TelemetryError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            TelemetryError::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
            TelemetryError::Duplicate { .. } => (StatusCode::CONFLICT, "duplicate"),
            TelemetryError::Validation(_) => (StatusCode::BAD_REQUEST, "validation"),
            TelemetryError::Corrupt(_) | TelemetryError::Io(_) | TelemetryError::Json(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "internal")
            }
        };
        ApiError(status, kind, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody { error: self.1.to_string(), message: self.2 };
        (self.0, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// The full route table over `service`.
pub fn router(service: Arc<TelemetryService>, token: Option<String>) -> Router {
    app(service, token, Arc::new(watch::channel(false).0))
}

pub(crate) fn app(service: Arc<TelemetryService>, token: Option<String>, closing: Arc<watch::Sender<bool>>) -> Router {
    let state = AppState { service, token: token.map(Arc::from), closing };
    Router::new()
        .route("/bins", post(register).get(list))
        .route("/bins/{id}", get(get_bin).delete(remove))
        .route("/bins/{id}/status", get(bin_state).put(put_status))
        .route("/events", get(events))
        .layer(middleware::from_fn_with_state(state.clone(), require_token))
        .with_state(state)
}

async fn require_token(State(state): State<AppState>, request: Request, next: Next) -> Response {
    let Some(expected) = state.token.as_deref() else {
        return next.run(request).await;
    };
    let bearer = request
        .headers()
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "));
    let query = request
        .uri()
        .query()
        .into_iter()
        .flat_map(|q| q.split('&'))
        .find_map(|pair| pair.strip_prefix("token="));
    if bearer == Some(expected) || query == Some(expected) {
        next.run(request).await
    } else {
        ApiError(StatusCode::UNAUTHORIZED, "unauthorized", "missing or wrong bearer token".into()).into_response()
    }
}

#[derive(Deserialize)]
struct RegisterBody {
    #[serde(flatten)]
    record: BinRecord,
    #[serde(default)]
    seq: Option<u64>,
}

async fn register(State(state): State<AppState>, Json(body): Json<RegisterBody>) -> ApiResult<Response> {
    let reply = state.service.register_bin(body.record, body.seq)?;
    let status = match reply {
        Registration::Created { .. } => StatusCode::CREATED,
        Registration::Unchanged => StatusCode::OK,
    };
    Ok((status, Json(reply)).into_response())
}

async fn list(State(state): State<AppState>) -> Json<Vec<BinRecord>> {
    Json(state.service.list_bins())
}

async fn get_bin(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<BinRecord>> {
    Ok(Json(state.service.get_bin(&id)?))
}

async fn bin_state(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<BinState>> {
    Ok(Json(state.service.bin_state(&id)?))
}

async fn remove(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<serde_json::Value>> {
    let offset = state.service.remove_bin(&id)?;
    Ok(Json(json!({ "offset": offset })))
}

async fn put_status(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(envelope): Json<Envelope>,
) -> ApiResult<Json<serde_json::Value>> {
    if matches!(envelope.message, TelemetryMessage::Register { .. }) {
        return Err(ApiError(StatusCode::BAD_REQUEST, "validation", "register through POST /bins".into()));
    }
    if envelope.message.bin_id() != id {
        return Err(ApiError(
            StatusCode::BAD_REQUEST,
            "validation",
            format!("message is for `{}`, not `{id}`", envelope.message.bin_id()),
        ));
    }
    let offset = state.service.update_status(&envelope)?;
    Ok(Json(json!({ "offset": offset })))
}

#[derive(Deserialize)]
struct EventsQuery {
    since: Option<u64>,
}

async fn events(State(state): State<AppState>, Query(query): Query<EventsQuery>, ws: WebSocketUpgrade) -> Response {
    // Subscribe before the upgrade completes so nothing logged in between is missed.
    let subscription = state.service.subscribe(query.since);
    let closing = state.closing.subscribe();
    ws.on_upgrade(move |socket| pump(socket, subscription, closing))
}

async fn pump(mut socket: WebSocket, mut subscription: Subscription, mut closing: watch::Receiver<bool>) {
    if *closing.borrow_and_update() {
        return;
    }
    if let Some(gap) = subscription.gap() {
        if send(&mut socket, &StreamFrame::Gap(gap)).await.is_err() {
            return;
        }
    }
    loop {
        tokio::select! {
            event = subscription.recv() => match event {
                Some(entry) => {
                    if send(&mut socket, &StreamFrame::Event(entry)).await.is_err() {
                        return;
                    }
                }
                None => break,
            },
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | Some(Err(_)) | None => return,
                Some(Ok(_)) => {}
            },
            _ = closing.changed() => break,
        }
    }
    let _ = socket.send(Message::Close(None)).await;
}

async fn send(socket: &mut WebSocket, frame: &StreamFrame) -> Result<(), axum::Error> {
    socket.send(Message::Text(frame.to_json().into())).await
}
