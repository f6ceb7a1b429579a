//! Test doubles for the recprover services: scripted chat backends, a
//! rule-based Lean checker with a fake AST exporter, canned search, and
//! small HTTP servers that speak the real wire formats.

mod chat;
mod export;
mod http;
mod lean;
mod search;

pub use chat::{lean_block, prove_with, statement_in, theorem_name_in, ChatCall, ScriptedChat};
pub use export::fake_ast_export;
pub use http::{fake_lean_server, scripted_chat_server, ScriptedServer, ServedRequest};
pub use lean::{FakeLean, FAIL_MARKER};
pub use search::FakeSearch;

use std::sync::Arc;

use recprover::orchestrator::Services;

/// Bundle fakes into the orchestrator's service set.
pub fn services(chat: Arc<ScriptedChat>, lean: Arc<FakeLean>, search: Arc<FakeSearch>) -> Services {
    Services { chat, lean, search }
}
