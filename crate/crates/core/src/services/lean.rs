use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Semaphore;

use super::retry::{send_json, RetryPolicy};
use super::ServiceError;
use crate::ast::{ast_from_value, AstNode, Position, SorryInfo};

pub const DEFAULT_VERIFY_PATH: &str = "/api/check";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    #[serde(alias = "information")]
    Info,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: Position,
    pub end: Option<Position>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: Option<Span>,
}

impl Diagnostic {
    pub fn error(message: impl Into<String>, span: Option<Span>) -> Self {
        Self {
            severity: Severity::Error,
            message: message.into(),
            span,
        }
    }
}

/// Outcome of checking one Lean unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationResult {
    /// No error diagnostics and no server-side error.
    pub passed: bool,
    /// Passed and free of `sorry`.
    pub complete: bool,
    pub diagnostics: Vec<Diagnostic>,
    pub sorries: usize,
    pub time: f64,
}

impl VerificationResult {
    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error)
    }

    pub fn success() -> Self {
        Self {
            passed: true,
            complete: true,
            diagnostics: Vec::new(),
            sorries: 0,
            time: 0.0,
        }
    }

    pub fn failure(diagnostics: Vec<Diagnostic>) -> Self {
        Self {
            passed: false,
            complete: false,
            diagnostics,
            sorries: 0,
            time: 0.0,
        }
    }
}

#[derive(Deserialize)]
struct RawPos {
    line: u32,
    column: u32,
}

impl From<RawPos> for Position {
    fn from(p: RawPos) -> Self {
        Position::new(p.line, p.column)
    }
}

#[derive(Deserialize)]
struct RawMessage {
    severity: Severity,
    #[serde(default)]
    pos: Option<RawPos>,
    #[serde(default, alias = "endPos")]
    end_pos: Option<RawPos>,
    #[serde(default)]
    data: String,
}

#[derive(Deserialize, Default)]
struct RawReplResponse {
    #[serde(default)]
    messages: Vec<RawMessage>,
    #[serde(default)]
    sorries: Vec<Value>,
}

#[derive(Deserialize)]
struct RawCheckResult {
    #[serde(default)]
    error: Option<String>,
    #[serde(default)]
    response: Option<RawReplResponse>,
    #[serde(default)]
    time: Option<f64>,
}

fn is_sorry_warning(d: &Diagnostic) -> bool {
    d.severity == Severity::Warning && d.message.contains("declaration uses 'sorry'")
}

/// Decode one entry of the verification response:
///
/// ```json
/// {"results": [{"custom_id": "0", "error": null, "time": 0.8,
///   "response": {"messages": [{"severity": "error", "pos": {..}, "endPos": {..}, "data": ".."}],
///                "sorries": [{"pos": {..}, "goal": ".."}]}}]}
/// ```
pub fn parse_verify_response(value: &Value) -> Result<VerificationResult, ServiceError> {
    let bad = |detail: String| ServiceError::BadResponse {
        service: "verify",
        detail,
    };
    let first = value
        .get("results")
        .and_then(|r| r.get(0))
        .ok_or_else(|| bad("response has no results[0]".into()))?;
    let raw: RawCheckResult = serde_json::from_value(first.clone()).map_err(|e| bad(e.to_string()))?;
    let response = raw.response.unwrap_or_default();
    let mut diagnostics: Vec<Diagnostic> = response
        .messages
        .into_iter()
        .map(|m| Diagnostic {
            severity: m.severity,
            message: m.data,
            span: m.pos.map(|p| Span {
                start: p.into(),
                end: m.end_pos.map(Into::into),
            }),
        })
        .collect();
    if let Some(err) = raw.error.filter(|e| !e.is_empty()) {
        diagnostics.push(Diagnostic::error(err, None));
    }
    let passed = !diagnostics.iter().any(|d| d.severity == Severity::Error);
    let sorry_warnings = diagnostics.iter().filter(|d| is_sorry_warning(d)).count();
    let sorries = response.sorries.len().max(sorry_warnings);
    Ok(VerificationResult {
        passed,
        complete: passed && sorries == 0,
        diagnostics,
        sorries,
        time: raw.time.unwrap_or(0.0),
    })
}

/// Module names become file paths on the server, so only dotted
/// alphanumeric components are allowed.
pub fn is_valid_module_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .split('.')
            .all(|c| !c.is_empty() && c.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_'))
}

#[async_trait]
pub trait LeanService: Send + Sync {
    async fn verify(&self, code: &str, timeout_secs: u64) -> Result<VerificationResult, ServiceError>;

    async fn fetch_ast(
        &self,
        code: &str,
        module_name: &str,
        timeout_secs: u64,
    ) -> Result<(AstNode, Vec<SorryInfo>), ServiceError>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeanServerConfig {
    pub url: String,
    pub verify_path: String,
    pub max_retries: u32,
    /// Cap on in-flight AST exports from this client.
    pub max_concurrent_ast: usize,
}

impl LeanServerConfig {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            verify_path: DEFAULT_VERIFY_PATH.into(),
            max_retries: 5,
            max_concurrent_ast: 4,
        }
    }
}

/// Result of exporting one existing module.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleAst {
    pub module: String,
    pub ast: Option<AstNode>,
    pub error: Option<String>,
    pub time: f64,
}

pub struct HttpLeanClient {
    http: reqwest::Client,
    cfg: LeanServerConfig,
    ast_slots: Arc<Semaphore>,
    base_delay: Duration,
}

impl HttpLeanClient {
    pub fn new(cfg: LeanServerConfig) -> Self {
        Self {
            http: reqwest::Client::new(),
            ast_slots: Arc::new(Semaphore::new(cfg.max_concurrent_ast.max(1))),
            cfg,
            base_delay: Duration::from_secs(1),
        }
    }

    pub fn with_base_delay(mut self, d: Duration) -> Self {
        self.base_delay = d;
        self
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.cfg.url.trim_end_matches('/'), path)
    }

    fn policy(&self) -> RetryPolicy {
        RetryPolicy {
            base_delay: self.base_delay,
            ..RetryPolicy::new(self.cfg.max_retries)
        }
    }

    async fn post(&self, service: &'static str, path: &str, body: &Value, timeout_secs: u64) -> Result<Value, ServiceError> {
        let url = self.url(path);
        // Leave the server room to report its own timeout.
        let timeout = Duration::from_secs(timeout_secs.saturating_add(30));
        self.policy()
            .run(service, || send_json(service, self.http.post(&url).timeout(timeout).json(body)))
            .await
    }

    /// Export ASTs of modules already known to the server.
    pub async fn fetch_module_asts(
        &self,
        modules: &[String],
        one: bool,
        timeout_secs: u64,
    ) -> Result<Vec<ModuleAst>, ServiceError> {
        if let Some(bad) = modules.iter().find(|m| !is_valid_module_name(m)) {
            return Err(ServiceError::InvalidModuleName(bad.clone()));
        }
        let _permit = self.ast_slots.acquire().await.expect("semaphore never closed");
        let body = json!({"modules": modules, "one": one, "timeout": timeout_secs});
        let value = self.post("ast", "/api/ast", &body, timeout_secs).await?;
        parse_module_asts(&value)
    }
}

fn parse_module_asts(value: &Value) -> Result<Vec<ModuleAst>, ServiceError> {
    let results = value
        .get("results")
        .and_then(Value::as_array)
        .ok_or_else(|| ServiceError::BadResponse {
            service: "ast",
            detail: "response has no results array".into(),
        })?;
    results
        .iter()
        .map(|r| {
            let ast = match r.get("ast") {
                None | Some(Value::Null) => None,
                Some(tree) => Some(
                    ast_from_value(tree.clone())
                        .map_err(|e| ServiceError::BadResponse {
                            service: "ast",
                            detail: e.to_string(),
                        })?
                        .0,
                ),
            };
            Ok(ModuleAst {
                module: r.get("module").and_then(Value::as_str).unwrap_or_default().to_string(),
                ast,
                error: r.get("error").and_then(Value::as_str).map(str::to_owned),
                time: r.get("time").and_then(Value::as_f64).unwrap_or(0.0),
            })
        })
        .collect()
}

/// Decode an `/api/ast_code` response.
pub(crate) fn parse_ast_code_response(mut value: Value) -> Result<(AstNode, Vec<SorryInfo>), ServiceError> {
    if let Some(err) = value.get("error").and_then(Value::as_str).filter(|e| !e.is_empty()) {
        return Err(ServiceError::AstExportFailed(err.to_string()));
    }
    if matches!(value.get("ast"), None | Some(Value::Null)) {
        return Err(ServiceError::AstExportFailed("response carries no AST".into()));
    }
    if let Some(obj) = value.as_object_mut() {
        obj.retain(|k, _| k == "ast" || k == "sorries");
    }
    ast_from_value(value).map_err(|e| ServiceError::BadResponse {
        service: "ast",
        detail: e.to_string(),
    })
}

#[async_trait]
impl LeanService for HttpLeanClient {
    async fn verify(&self, code: &str, timeout_secs: u64) -> Result<VerificationResult, ServiceError> {
        if code.trim().is_empty() {
            return Err(ServiceError::EmptyRequest("lean code"));
        }
        let body = json!({
            "codes": [{"custom_id": "0", "code": code}],
            "timeout": timeout_secs,
        });
        let value = self.post("verify", &self.cfg.verify_path, &body, timeout_secs).await?;
        parse_verify_response(&value)
    }

    async fn fetch_ast(
        &self,
        code: &str,
        module_name: &str,
        timeout_secs: u64,
    ) -> Result<(AstNode, Vec<SorryInfo>), ServiceError> {
        if !is_valid_module_name(module_name) {
            return Err(ServiceError::InvalidModuleName(module_name.to_string()));
        }
        let _permit = self.ast_slots.acquire().await.expect("semaphore never closed");
        let body = json!({"code": code, "module_name": module_name, "timeout": timeout_secs});
        let value = self.post("ast", "/api/ast_code", &body, timeout_secs).await?;
        parse_ast_code_response(value)
    }
}
