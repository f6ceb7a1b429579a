use std::sync::Mutex;

use async_trait::async_trait;
use recprover::lean_source::{declaration_name, extract_code_block, indent_lines, split_source};
use recprover::services::{AgentRole, ChatClient, ChatMessage, ServiceError};

/// One request seen by [`ScriptedChat`].
#[derive(Debug, Clone)]
pub struct ChatCall {
    pub role: AgentRole,
    pub messages: Vec<ChatMessage>,
    /// Calls made for this role before this one.
    pub index: usize,
}

impl ChatCall {
    pub fn last_prompt(&self) -> &str {
        self.messages.last().map_or("", |m| m.content.as_str())
    }

    /// Name of the theorem the first prompt is about.
    pub fn theorem(&self) -> Option<String> {
        theorem_name_in(&self.messages)
    }
}

type Script = dyn Fn(&ChatCall) -> Result<String, ServiceError> + Send + Sync;

/// A chat backend answering from a closure, recording every call.
pub struct ScriptedChat {
    script: Box<Script>,
    calls: Mutex<Vec<ChatCall>>,
}

impl ScriptedChat {
    pub fn new(script: impl Fn(&ChatCall) -> Result<String, ServiceError> + Send + Sync + 'static) -> Self {
        Self {
            script: Box::new(script),
            calls: Mutex::new(Vec::new()),
        }
    }

    /// Every role answers with the text `f` returns.
    pub fn replying(f: impl Fn(&ChatCall) -> String + Send + Sync + 'static) -> Self {
        Self::new(move |c| Ok(f(c)))
    }

    pub fn calls(&self, role: AgentRole) -> usize {
        self.calls.lock().unwrap().iter().filter(|c| c.role == role).count()
    }

    pub fn total_calls(&self) -> usize {
        self.calls.lock().unwrap().len()
    }

    pub fn transcript(&self) -> Vec<ChatCall> {
        self.calls.lock().unwrap().clone()
    }

    /// True if any prompt sent so far contains `needle`.
    pub fn saw(&self, needle: &str) -> bool {
        self.calls
            .lock()
            .unwrap()
            .iter()
            .any(|c| c.messages.iter().any(|m| m.content.contains(needle)))
    }
}

#[async_trait]
impl ChatClient for ScriptedChat {
    async fn complete(&self, role: AgentRole, messages: &[ChatMessage]) -> Result<String, ServiceError> {
        let call = {
            let mut calls = self.calls.lock().unwrap();
            let index = calls.iter().filter(|c| c.role == role).count();
            let call = ChatCall {
                role,
                messages: messages.to_vec(),
                index,
            };
            calls.push(call.clone());
            call
        };
        (self.script)(&call)
    }
}

/// `code` inside a `lean4` fence.
pub fn lean_block(code: &str) -> String {
    format!("Here is the code.\n\n```lean4\n{}\n```\n", code.trim_end())
}

/// Name of the theorem in the last fenced block of the first message: the
/// statement a prompt is about always follows any worked example.
pub fn theorem_name_in(messages: &[ChatMessage]) -> Option<String> {
    let block = extract_code_block(&messages.first()?.content).ok()?;
    declaration_name(&block)
}

/// The declaration, without preamble, in the last fenced block of the
/// first message.
pub fn statement_in(messages: &[ChatMessage]) -> Option<String> {
    let block = extract_code_block(&messages.first()?.content).ok()?;
    Some(split_source(&block).body)
}

/// A fenced reply that keeps the prompt's theorem statement and proves it
/// with `tactics`.
pub fn prove_with(call: &ChatCall, tactics: &str) -> String {
    let stmt = statement_in(&call.messages).expect("prompt carries a theorem");
    let head = stmt.trim_end().strip_suffix("sorry").unwrap_or(&stmt).trim_end();
    lean_block(&format!("{head}\n{}", indent_lines(tactics, 2)))
}
