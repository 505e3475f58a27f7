use std::time::Duration;

use binsort_core::telemetry::{
    BinRecord, BinState, DeliveryError, Envelope, Registration, TelemetryMessage, TelemetrySink,
};
use reqwest::blocking::{Client, RequestBuilder, Response};
use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde_json::json;
use thiserror::Error;

use crate::api::ErrorBody;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("server replied {status}: {body:?}")]
    Status { status: u16, body: Option<ErrorBody> },
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
}

impl ClientError {
    /// The `error` kind of a structured error reply.
    pub fn kind(&self) -> Option<&str> {
        match self {
            ClientError::Status { body: Some(b), .. } => Some(&b.error),
            _ => None,
        }
    }
}

/// Blocking client for the HTTP API. Also a [`TelemetrySink`] for devices.
#[derive(Debug, Clone)]
pub struct HttpClient {
    base: String,
    token: Option<String>,
    http: Client,
}

impl HttpClient {
    /// `base` is `http://host:port`; a bare `host:port` gets `http://` added.
    pub fn new(base: &str, token: Option<String>) -> Result<Self, ClientError> {
        let base = base.trim_end_matches('/');
        let base = if base.contains("://") { base.to_string() } else { format!("http://{base}") };
        let http = Client::builder().timeout(Duration::from_secs(10)).build()?;
        Ok(Self { base, token, http })
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn register(&self, record: &BinRecord, seq: Option<u64>) -> Result<Registration, ClientError> {
        let mut body = serde_json::to_value(record).expect("record serializes");
        if let Some(seq) = seq {
            body["seq"] = json!(seq);
        }
        decode(self.auth(self.http.post(self.url("/bins")).json(&body)).send()?)
    }

    pub fn list_bins(&self) -> Result<Vec<BinRecord>, ClientError> {
        decode(self.auth(self.http.get(self.url("/bins"))).send()?)
    }

    pub fn get_bin(&self, id: &str) -> Result<BinRecord, ClientError> {
        decode(self.auth(self.http.get(self.url(&format!("/bins/{id}")))).send()?)
    }

    pub fn bin_state(&self, id: &str) -> Result<BinState, ClientError> {
        decode(self.auth(self.http.get(self.url(&format!("/bins/{id}/status")))).send()?)
    }

    /// Returns the offset of the `removed` event.
    pub fn remove_bin(&self, id: &str) -> Result<u64, ClientError> {
        offset(decode(self.auth(self.http.delete(self.url(&format!("/bins/{id}")))).send()?)?)
    }

    /// Sends a status update, full alert or heartbeat; returns the event offset.
    pub fn put_status(&self, envelope: &Envelope) -> Result<u64, ClientError> {
        let path = format!("/bins/{}/status", envelope.message.bin_id());
        offset(decode(self.auth(self.http.put(self.url(&path)).json(envelope)).send()?)?)
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn auth(&self, request: RequestBuilder) -> RequestBuilder {
        match &self.token {
            Some(token) => request.bearer_auth(token),
            None => request,
        }
    }
}

fn decode<T: DeserializeOwned>(response: Response) -> Result<T, ClientError> {
    let status = response.status();
    if status.is_success() {
        return Ok(response.json()?);
    }
    let body = response.json::<ErrorBody>().ok();
    Err(ClientError::Status { status: status.as_u16(), body })
}

fn offset(value: serde_json::Value) -> Result<u64, ClientError> {
    value.get("offset").and_then(|o| o.as_u64()).ok_or(ClientError::Status {
        status: StatusCode::OK.as_u16(),
        body: Some(ErrorBody { error: "malformed".into(), message: format!("no offset in {value}") }),
    })
}

/// A duplicate reply means an earlier attempt already landed.
impl TelemetrySink for HttpClient {
    fn send(&mut self, envelope: &Envelope) -> Result<(), DeliveryError> {
        let result = match &envelope.message {
            TelemetryMessage::Register { record } => self.register(record, Some(envelope.seq)).map(drop),
            _ => self.put_status(envelope).map(drop),
        };
        match result {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == Some("duplicate") => Ok(()),
            Err(e) => Err(DeliveryError(e.to_string())),
        }
    }
}
