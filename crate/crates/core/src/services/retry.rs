use std::future::Future;
use std::time::Duration;

use rand::Rng;
use reqwest::StatusCode;

use super::ServiceError;

/// Retry budget with exponential backoff and full jitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl RetryPolicy {
    pub fn new(max_retries: u32) -> Self {
        Self {
            max_retries,
            base_delay: Duration::from_secs(1),
            max_delay: Duration::from_secs(60),
        }
    }

    /// No sleeping between attempts; for tests.
    pub fn immediate(max_retries: u32) -> Self {
        Self {
            max_retries,
            base_delay: Duration::ZERO,
            max_delay: Duration::ZERO,
        }
    }

    /// Upper bound of the sleep before retry number `retry` (1-based).
    pub fn ceiling(&self, retry: u32) -> Duration {
        let factor = 1u32.checked_shl(retry.saturating_sub(1)).unwrap_or(u32::MAX);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }

    pub fn delay(&self, retry: u32) -> Duration {
        let ceiling = self.ceiling(retry);
        if ceiling.is_zero() {
            return ceiling;
        }
        let nanos = rand::rng().random_range(0..=ceiling.as_nanos() as u64);
        Duration::from_nanos(nanos)
    }

    /// Run `op` until it succeeds, fails permanently, or the budget is spent.
    pub(crate) async fn run<T, F, Fut>(&self, service: &'static str, mut op: F) -> Result<T, ServiceError>
    where
        F: FnMut() -> Fut,
        Fut: Future<Output = Result<T, Attempt>>,
    {
        let mut attempts = 0;
        loop {
            attempts += 1;
            match op().await {
                Ok(v) => return Ok(v),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Transient(msg)) => {
                    if attempts > self.max_retries {
                        return Err(ServiceError::RemoteExhausted {
                            service,
                            attempts,
                            last: msg,
                        });
                    }
                    tracing::debug!(service, attempts, error = %msg, "retrying");
                    tokio::time::sleep(self.delay(attempts)).await;
                }
            }
        }
    }
}

pub(crate) enum Attempt {
    Transient(String),
    Fatal(ServiceError),
}

pub(crate) fn is_transient(status: StatusCode) -> bool {
    status == StatusCode::REQUEST_TIMEOUT
        || status == StatusCode::TOO_MANY_REQUESTS
        || status.is_server_error()
}

/// Send a JSON request and decode a JSON response, classifying failures.
pub(crate) async fn send_json(
    service: &'static str,
    req: reqwest::RequestBuilder,
) -> Result<serde_json::Value, Attempt> {
    let resp = req
        .send()
        .await
        .map_err(|e| Attempt::Transient(e.to_string()))?;
    let status = resp.status();
    let body = resp
        .text()
        .await
        .map_err(|e| Attempt::Transient(e.to_string()))?;
    if !status.is_success() {
        if is_transient(status) {
            return Err(Attempt::Transient(format!("HTTP {status}: {body}")));
        }
        return Err(Attempt::Fatal(ServiceError::Rejected {
            service,
            status: status.as_u16(),
            body,
        }));
    }
    serde_json::from_str(&body).map_err(|e| {
        Attempt::Fatal(ServiceError::BadResponse {
            service,
            detail: format!("invalid JSON ({e})"),
        })
    })
}
