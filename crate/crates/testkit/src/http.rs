//! Local HTTP servers for exercising the real clients.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{any, post};
use axum::{Json, Router};
use recprover::services::{ChatMessage, VerificationResult};
use serde_json::{json, Value};

use crate::export::fake_ast_export;
use crate::lean::check_code;

/// A request as the server saw it.
#[derive(Debug, Clone)]
pub struct ServedRequest {
    pub method: String,
    pub path: String,
    pub query: HashMap<String, String>,
    pub body: Value,
}

#[derive(Clone)]
struct Script {
    replies: Arc<Vec<(u16, Value)>>,
    seen: Arc<Mutex<Vec<ServedRequest>>>,
}

/// Answers every request with the next scripted `(status, body)`; the last
/// entry repeats once the script runs out.
pub struct ScriptedServer {
    pub url: String,
    seen: Arc<Mutex<Vec<ServedRequest>>>,
}

impl ScriptedServer {
    pub async fn start(replies: Vec<(u16, Value)>) -> Self {
        assert!(!replies.is_empty(), "a scripted server needs at least one reply");
        let seen = Arc::new(Mutex::new(Vec::new()));
        let state = Script {
            replies: Arc::new(replies),
            seen: seen.clone(),
        };
        let app = Router::new().fallback(any(scripted)).with_state(state);
        Self {
            url: serve(app).await,
            seen,
        }
    }

    pub fn hits(&self) -> usize {
        self.seen.lock().unwrap().len()
    }

    pub fn requests(&self) -> Vec<ServedRequest> {
        self.seen.lock().unwrap().clone()
    }
}

async fn scripted(
    State(s): State<Script>,
    method: Method,
    uri: Uri,
    Query(query): Query<HashMap<String, String>>,
    body: Bytes,
) -> Response {
    let body = serde_json::from_slice(&body).unwrap_or(Value::Null);
    let n = {
        let mut seen = s.seen.lock().unwrap();
        seen.push(ServedRequest {
            method: method.to_string(),
            path: uri.path().to_string(),
            query,
            body,
        });
        seen.len() - 1
    };
    let (status, reply) = s.replies[n.min(s.replies.len() - 1)].clone();
    (StatusCode::from_u16(status).expect("valid status"), Json(reply)).into_response()
}

async fn serve(app: Router) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.expect("bind loopback");
    let addr = listener.local_addr().expect("local addr");
    tokio::spawn(async move {
        axum::serve(listener, app).await.ok();
    });
    format!("http://{addr}")
}

fn wire_result(r: &VerificationResult) -> Value {
    let messages: Vec<Value> = r
        .diagnostics
        .iter()
        .map(|d| {
            let mut m = json!({"severity": d.severity, "data": d.message});
            if let Some(s) = d.span {
                m["pos"] = json!(s.start);
                m["endPos"] = json!(s.end);
            }
            m
        })
        .collect();
    let sorries: Vec<Value> = (0..r.sorries).map(|_| json!({"goal": "⊢ ?"})).collect();
    json!({"results": [{"custom_id": "0", "error": null, "time": 0.01,
        "response": {"messages": messages, "sorries": sorries}}]})
}

async fn lean_check(Json(body): Json<Value>) -> Json<Value> {
    let code = body.pointer("/codes/0/code").and_then(Value::as_str).unwrap_or_default();
    Json(wire_result(&check_code(code)))
}

async fn lean_ast_code(Json(body): Json<Value>) -> Json<Value> {
    let code = body.get("code").and_then(Value::as_str).unwrap_or_default();
    let mut out = fake_ast_export(code);
    out["error"] = Value::Null;
    out["time"] = json!(0.01);
    Json(out)
}

/// A Lean server applying the [`crate::FakeLean`] rules over HTTP at
/// `/api/check` and `/api/ast_code`. Returns its base URL.
pub async fn fake_lean_server() -> String {
    let app = Router::new()
        .route("/api/check", post(lean_check))
        .route("/api/ast_code", post(lean_ast_code));
    serve(app).await
}

type ChatScript = dyn Fn(&str, &[ChatMessage]) -> String + Send + Sync;

/// An OpenAI-style `/chat/completions` endpoint answering from `script`,
/// which receives the requested model name and the messages.
pub async fn scripted_chat_server(script: impl Fn(&str, &[ChatMessage]) -> String + Send + Sync + 'static) -> String {
    let script: Arc<ChatScript> = Arc::new(script);
    let app = Router::new()
        .route("/chat/completions", post(chat))
        .with_state(script);
    serve(app).await
}

async fn chat(State(script): State<Arc<ChatScript>>, Json(body): Json<Value>) -> Json<Value> {
    let model = body.get("model").and_then(Value::as_str).unwrap_or_default();
    let messages: Vec<ChatMessage> =
        serde_json::from_value(body.get("messages").cloned().unwrap_or(Value::Null)).unwrap_or_default();
    let text = script(model, &messages);
    Json(json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]}))
}
