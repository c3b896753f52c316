use std::time::Duration;

use thiserror::Error;

use crate::EndpointProfile;

/// Status and body of one HTTP exchange.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawResponse {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransportError {
    #[error("request timed out")]
    Timeout,
    #[error("connection failed: {0}")]
    Connect(String),
    #[error("{0}")]
    Other(String),
}

impl TransportError {
    pub fn is_transient(&self) -> bool {
        matches!(self, TransportError::Timeout | TransportError::Connect(_))
    }
}

/// Sends one JSON body to an endpoint.
pub trait Transport: Send + Sync {
    fn post(
        &self,
        profile: &EndpointProfile,
        api_key: Option<&str>,
        body: &serde_json::Value,
    ) -> Result<RawResponse, TransportError>;
}

/// Blocking HTTP(S) transport.
pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        HttpTransport { agent }
    }
}

impl Transport for HttpTransport {
    fn post(
        &self,
        profile: &EndpointProfile,
        api_key: Option<&str>,
        body: &serde_json::Value,
    ) -> Result<RawResponse, TransportError> {
        let mut req = self.agent.post(&profile.url).header("Content-Type", "application/json");
        if let Some(key) = api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(map_ureq)?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(map_ureq)?;
        Ok(RawResponse { status, body })
    }
}

fn map_ureq(e: ureq::Error) -> TransportError {
    match e {
        ureq::Error::Timeout(_) => TransportError::Timeout,
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => TransportError::Timeout,
        ureq::Error::Io(io) => TransportError::Connect(io.to_string()),
        ureq::Error::ConnectionFailed | ureq::Error::HostNotFound => {
            TransportError::Connect(e.to_string())
        }
        other => TransportError::Other(other.to_string()),
    }
}

/// Transport backed by a closure; used for offline stubs and tests.
pub struct FnTransport<F>(pub F);

impl<F> Transport for FnTransport<F>
where
    F: Fn(&serde_json::Value) -> Result<RawResponse, TransportError> + Send + Sync,
{
    fn post(
        &self,
        _profile: &EndpointProfile,
        _api_key: Option<&str>,
        body: &serde_json::Value,
    ) -> Result<RawResponse, TransportError> {
        (self.0)(body)
    }
}

/// Refuses every request; a cache-only client.
pub struct OfflineTransport;

impl Transport for OfflineTransport {
    fn post(
        &self,
        _profile: &EndpointProfile,
        _api_key: Option<&str>,
        _body: &serde_json::Value,
    ) -> Result<RawResponse, TransportError> {
        Err(TransportError::Other("offline: request not in cache".into()))
    }
}
