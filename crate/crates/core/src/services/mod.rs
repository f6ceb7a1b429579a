//! Clients for the chat backends, the Lean verification/AST server and the
//! theorem-search server.
//!
//! Each client is a trait with one HTTP implementation so the orchestrator
//! can be driven by scripted backends in tests.

mod chat;
mod lean;
mod retry;
mod search;

pub use chat::{AgentRole, ChatBackendConfig, ChatClient, ChatMessage, ChatRole, HttpChatClient};
pub use lean::{
    is_valid_module_name, parse_verify_response, Diagnostic, HttpLeanClient, LeanService, ModuleAst,
    LeanServerConfig, Severity, Span, VerificationResult, DEFAULT_VERIFY_PATH,
};
pub use retry::RetryPolicy;
pub use search::{merge_hits, HttpSearchClient, SearchConfig, SearchService, TheoremHit, HINT_CAP};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{service}: gave up after {attempts} attempt(s): {last}")]
    RemoteExhausted {
        service: &'static str,
        attempts: u32,
        last: String,
    },
    #[error("{service}: request rejected with HTTP {status}: {body}")]
    Rejected {
        service: &'static str,
        status: u16,
        body: String,
    },
    #[error("{service}: unexpected response: {detail}")]
    BadResponse { service: &'static str, detail: String },
    #[error("invalid module name `{0}`")]
    InvalidModuleName(String),
    #[error("AST export failed: {0}")]
    AstExportFailed(String),
    #[error("empty request: {0}")]
    EmptyRequest(&'static str),
}

impl ServiceError {
    /// True when the remote side could not be reached or kept failing, as
    /// opposed to a malformed exchange.
    pub fn is_unavailable(&self) -> bool {
        matches!(self, ServiceError::RemoteExhausted { .. })
    }
}
