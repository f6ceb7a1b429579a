use std::collections::HashMap;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::retry::{send_json, RetryPolicy};
use super::ServiceError;

/// Maximum number of hits passed on to the sketching prompt.
pub const HINT_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremHit {
    pub full_name: String,
    pub statement: String,
    #[serde(alias = "package")]
    pub source_package: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchConfig {
    pub url: String,
    pub package_filters: Vec<String>,
    pub max_retries: u32,
}

#[async_trait]
pub trait SearchService: Send + Sync {
    async fn search_theorems(&self, queries: &[String]) -> Result<Vec<TheoremHit>, ServiceError>;
}

/// Merge per-query hit lists: keep the best score per name, drop packages
/// outside `filters` (no filter keeps everything), sort by score then name,
/// cap at `cap`.
pub fn merge_hits(
    per_query: impl IntoIterator<Item = Vec<TheoremHit>>,
    filters: &[String],
    cap: usize,
) -> Vec<TheoremHit> {
    let mut best: HashMap<String, TheoremHit> = HashMap::new();
    for hit in per_query.into_iter().flatten() {
        if !filters.is_empty() && !filters.contains(&hit.source_package) {
            continue;
        }
        match best.get(&hit.full_name) {
            Some(prev) if prev.score >= hit.score => {}
            _ => {
                best.insert(hit.full_name.clone(), hit);
            }
        }
    }
    let mut hits: Vec<TheoremHit> = best.into_values().collect();
    hits.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.full_name.cmp(&b.full_name)));
    hits.truncate(cap);
    hits
}

/// `GET {url}/search?q=<query>&pkg=<csv>` returning
/// `{"results": [{"full_name", "statement", "package", "score"}]}`.
pub struct HttpSearchClient {
    http: reqwest::Client,
    cfg: SearchConfig,
    base_delay: Duration,
}

impl HttpSearchClient {
    pub fn new(cfg: SearchConfig) -> Self {
        Self {
            http: reqwest::Client::new(),
            cfg,
            base_delay: Duration::from_secs(1),
        }
    }

    pub fn with_base_delay(mut self, d: Duration) -> Self {
        self.base_delay = d;
        self
    }

    async fn one(&self, query: &str) -> Result<Vec<TheoremHit>, ServiceError> {
        let url = format!("{}/search", self.cfg.url.trim_end_matches('/'));
        let pkg = self.cfg.package_filters.join(",");
        let policy = RetryPolicy {
            base_delay: self.base_delay,
            ..RetryPolicy::new(self.cfg.max_retries)
        };
        let value = policy
            .run("search", || {
                let req = self.http.get(&url).query(&[("q", query), ("pkg", pkg.as_str())]);
                send_json("search", req)
            })
            .await?;
        let results = value.get("results").cloned().unwrap_or(Value::Array(Vec::new()));
        serde_json::from_value(results).map_err(|e| ServiceError::BadResponse {
            service: "search",
            detail: e.to_string(),
        })
    }
}

#[async_trait]
impl SearchService for HttpSearchClient {
    async fn search_theorems(&self, queries: &[String]) -> Result<Vec<TheoremHit>, ServiceError> {
        let queries: Vec<&String> = queries.iter().filter(|q| !q.trim().is_empty()).collect();
        if queries.is_empty() {
            return Err(ServiceError::EmptyRequest("search queries"));
        }
        let lists = futures::future::try_join_all(queries.iter().map(|q| self.one(q))).await?;
        Ok(merge_hits(lists, &self.cfg.package_filters, HINT_CAP))
    }
}
