use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use async_trait::async_trait;
use recprover::ast::{parse_ast, AstNode, Position, SorryInfo};
use recprover::lean_source::count_sorries;
use recprover::services::{Diagnostic, LeanService, ServiceError, Severity, Span, VerificationResult};

use crate::export::fake_ast_export;

/// A tactic name the fake checker rejects.
pub const FAIL_MARKER: &str = "bad_tactic";

/// Rule-based stand-in for the Lean server.
///
/// Exact-code fixtures win. Otherwise code mentioning [`FAIL_MARKER`] has
/// an error on that line, code with `sorry` passes incompletely, and
/// anything else is a complete proof.
#[derive(Default)]
pub struct FakeLean {
    fixtures: Mutex<HashMap<String, VerificationResult>>,
    verified: Mutex<Vec<String>>,
    verify_calls: AtomicUsize,
    ast_calls: AtomicUsize,
    down: AtomicBool,
}

impl FakeLean {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_fixture(self, code: impl Into<String>, result: VerificationResult) -> Self {
        self.fixtures.lock().unwrap().insert(code.into(), result);
        self
    }

    /// Every call fails as if the server were unreachable.
    pub fn set_down(&self, down: bool) {
        self.down.store(down, Ordering::SeqCst);
    }

    pub fn verify_calls(&self) -> usize {
        self.verify_calls.load(Ordering::SeqCst)
    }

    pub fn ast_calls(&self) -> usize {
        self.ast_calls.load(Ordering::SeqCst)
    }

    /// Code submitted for verification, in order.
    pub fn verified(&self) -> Vec<String> {
        self.verified.lock().unwrap().clone()
    }

    /// The verdict the rules give, without recording a call.
    pub fn check(&self, code: &str) -> VerificationResult {
        if let Some(r) = self.fixtures.lock().unwrap().get(code) {
            return r.clone();
        }
        check_code(code)
    }

    fn unavailable(&self, service: &'static str) -> Result<(), ServiceError> {
        if self.down.load(Ordering::SeqCst) {
            return Err(ServiceError::RemoteExhausted {
                service,
                attempts: 1,
                last: "connection refused".into(),
            });
        }
        Ok(())
    }
}

/// The fake checker's rules, shared with the fake HTTP server.
pub(crate) fn check_code(code: &str) -> VerificationResult {
    let mut diagnostics = Vec::new();
    for (i, line) in code.split('\n').enumerate() {
        if let Some(b) = line.find(FAIL_MARKER) {
            let col = line[..b].chars().count() as u32;
            let start = Position::new(i as u32 + 1, col);
            let end = Position::new(i as u32 + 1, col + FAIL_MARKER.chars().count() as u32);
            diagnostics.push(Diagnostic::error(
                format!("unknown tactic '{FAIL_MARKER}'"),
                Some(Span { start, end: Some(end) }),
            ));
        }
    }
    if !diagnostics.is_empty() {
        return VerificationResult::failure(diagnostics);
    }
    let sorries = count_sorries(code);
    if sorries == 0 {
        return VerificationResult::success();
    }
    VerificationResult {
        passed: true,
        complete: false,
        diagnostics: vec![Diagnostic {
            severity: Severity::Warning,
            message: "declaration uses 'sorry'".into(),
            span: None,
        }],
        sorries,
        time: 0.0,
    }
}

#[async_trait]
impl LeanService for FakeLean {
    async fn verify(&self, code: &str, _timeout_secs: u64) -> Result<VerificationResult, ServiceError> {
        self.verify_calls.fetch_add(1, Ordering::SeqCst);
        self.unavailable("verify")?;
        self.verified.lock().unwrap().push(code.to_string());
        Ok(self.check(code))
    }

    async fn fetch_ast(
        &self,
        code: &str,
        _module_name: &str,
        _timeout_secs: u64,
    ) -> Result<(AstNode, Vec<SorryInfo>), ServiceError> {
        self.ast_calls.fetch_add(1, Ordering::SeqCst);
        self.unavailable("ast")?;
        parse_ast(&fake_ast_export(code).to_string()).map_err(|e| ServiceError::AstExportFailed(e.to_string()))
    }
}
