use std::sync::Mutex;

use async_trait::async_trait;
use recprover::services::{ServiceError, SearchService, TheoremHit};

/// Returns the same hits for every request, or fails when built with
/// [`FakeSearch::failing`].
#[derive(Default)]
pub struct FakeSearch {
    hits: Vec<TheoremHit>,
    fail: bool,
    requests: Mutex<Vec<Vec<String>>>,
}

impl FakeSearch {
    pub fn new(hits: Vec<TheoremHit>) -> Self {
        Self {
            hits,
            ..Self::default()
        }
    }

    pub fn failing() -> Self {
        Self {
            fail: true,
            ..Self::default()
        }
    }

    pub fn hit(name: &str, statement: &str) -> TheoremHit {
        TheoremHit {
            full_name: name.into(),
            statement: statement.into(),
            source_package: "Mathlib".into(),
            score: 1.0,
        }
    }

    /// Query lists received, in order.
    pub fn requests(&self) -> Vec<Vec<String>> {
        self.requests.lock().unwrap().clone()
    }
}

#[async_trait]
impl SearchService for FakeSearch {
    async fn search_theorems(&self, queries: &[String]) -> Result<Vec<TheoremHit>, ServiceError> {
        self.requests.lock().unwrap().push(queries.to_vec());
        if self.fail {
            return Err(ServiceError::RemoteExhausted {
                service: "search",
                attempts: 1,
                last: "connection refused".into(),
            });
        }
        Ok(self.hits.clone())
    }
}
