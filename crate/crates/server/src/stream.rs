use binsort_core::telemetry::{EventLogEntry, GapNotice};
use futures_util::{SinkExt, StreamExt};
use serde_json::Value;
use thiserror::Error;
use tokio_tungstenite::tungstenite::client::IntoClientRequest;
use tokio_tungstenite::tungstenite::http::HeaderValue;
use tokio_tungstenite::tungstenite::Message;

/// One text frame of `/events`: a logged event, or a notice that the
/// requested resume offset is past the head and the stream is live only.
///
/// A gap notice is `{"type": "gap", "requested": N, "head": H}`.
#[derive(Debug, Clone, PartialEq)]
pub enum StreamFrame {
    Gap(GapNotice),
    Event(EventLogEntry),
}

impl StreamFrame {
    pub fn to_json(&self) -> String {
        match self {
            StreamFrame::Gap(g) => {
                serde_json::json!({ "type": "gap", "requested": g.requested, "head": g.head }).to_string()
            }
            StreamFrame::Event(e) => serde_json::to_string(e).expect("event serializes"),
        }
    }

    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        let value: Value = serde_json::from_str(text)?;
        if value.get("type").and_then(Value::as_str) == Some("gap") {
            Ok(StreamFrame::Gap(serde_json::from_value(value)?))
        } else {
            Ok(StreamFrame::Event(serde_json::from_value(value)?))
        }
    }
}

#[derive(Debug, Error)]
pub enum WatchError {
    #[error("bad server address `{0}`")]
    Address(String),
    #[error(transparent)]
    WebSocket(#[from] tokio_tungstenite::tungstenite::Error),
    #[error("malformed frame: {0}")]
    Frame(#[from] serde_json::Error),
}

/// Streams `/events` from `server` (an `http://` base URL), calling `on_frame`
/// for every frame until it returns `false` or the server closes the stream.
pub async fn watch(
    server: &str,
    since: Option<u64>,
    token: Option<&str>,
    mut on_frame: impl FnMut(StreamFrame) -> bool,
) -> Result<(), WatchError> {
    let base = server.trim_end_matches('/');
    let ws_base = if let Some(rest) = base.strip_prefix("http://") {
        format!("ws://{rest}")
    } else if let Some(rest) = base.strip_prefix("https://") {
        format!("wss://{rest}")
    } else if base.starts_with("ws://") || base.starts_with("wss://") {
        base.to_string()
    } else {
        format!("ws://{base}")
    };
    let url = match since {
        Some(offset) => format!("{ws_base}/events?since={offset}"),
        None => format!("{ws_base}/events"),
    };
    let mut request = url.as_str().into_client_request().map_err(|_| WatchError::Address(server.to_string()))?;
    if let Some(token) = token {
        let value = HeaderValue::from_str(&format!("Bearer {token}")).map_err(|_| WatchError::Address(server.into()))?;
        request.headers_mut().insert("authorization", value);
    }
    let (mut socket, _) = tokio_tungstenite::connect_async(request).await?;
    while let Some(message) = socket.next().await {
        match message? {
            Message::Text(text) => {
                if !on_frame(StreamFrame::parse(&text)?) {
                    let _ = socket.close(None).await;
                    break;
                }
            }
            Message::Close(_) => break,
            Message::Ping(data) => socket.send(Message::Pong(data)).await?,
            _ => {}
        }
    }
    Ok(())
}
