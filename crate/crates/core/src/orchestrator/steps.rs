//! Per-action work, split so that only `execute` touches the network:
//! `prepare` reads the tree, `execute` calls one service, `apply` writes
//! the result back.

use crate::agents::{
    build_error_annotation, generate_theorem_name, parse_judgement, parse_search_queries, render_hints_section,
    render_prompt, PromptKind, PromptVars, Verdict,
};
use crate::ast::{extract_subgoals, AstNode, SorryInfo, Subgoal};
use crate::lean_source::{
    extract_code_block, normalize_preamble, replace_subgoal, split_source, statement_header, statement_with_sorry,
    LeanSource,
};
use crate::proof_state::{Attempt, FailureReason, NodeId, NodeStatus, Outcome, ProofNode, ProofTree};
use crate::services::{
    AgentRole, ChatMessage, ChatRole, ServiceError, TheoremHit, VerificationResult, HINT_CAP,
};

use super::{ActionKind, RunOptions, Services};

pub(crate) enum Job {
    Nothing,
    Chat { role: AgentRole, messages: Vec<ChatMessage> },
    Verify { code: String },
    Ast { code: String },
    Search { queries: Vec<String> },
    Abort(FailureReason),
}

pub(crate) enum JobResult {
    Nothing,
    Chat {
        messages: Vec<ChatMessage>,
        reply: Result<String, ServiceError>,
    },
    Verify {
        code: String,
        result: Result<VerificationResult, ServiceError>,
    },
    Ast(Result<(AstNode, Vec<SorryInfo>), ServiceError>),
    Search(Result<Vec<TheoremHit>, ServiceError>),
    Abort(FailureReason),
}

/// What applying one action did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Applied {
    pub summary: String,
    /// Set when the run is over: the verified proof, or why it stopped.
    pub finish: Option<Result<String, FailureReason>>,
}

impl Applied {
    fn ok(summary: impl Into<String>) -> Self {
        Self {
            summary: summary.into(),
            finish: None,
        }
    }

    fn end(summary: impl Into<String>, finish: Result<String, FailureReason>) -> Self {
        Self {
            summary: summary.into(),
            finish: Some(finish),
        }
    }
}

fn render(kind: PromptKind, vars: PromptVars) -> Result<String, FailureReason> {
    render_prompt(kind, &vars).map_err(|e| FailureReason::ServiceError(e.to_string()))
}

fn assistant_turns(thread: &[ChatMessage]) -> usize {
    thread.iter().filter(|m| m.role == ChatRole::Assistant).count()
}

fn last_is_assistant(thread: &[ChatMessage]) -> bool {
    thread.last().is_some_and(|m| m.role == ChatRole::Assistant)
}

fn hints_section(n: &ProofNode) -> String {
    render_hints_section(&n.hints, HINT_CAP)
}

pub(crate) fn prepare(tree: &ProofTree, kind: ActionKind, id: NodeId) -> Job {
    let Ok(n) = tree.node(id) else {
        return Job::Abort(FailureReason::ServiceError(format!("unknown node {id}")));
    };
    let chat = |role, messages| Job::Chat { role, messages };
    let built = (|| -> Result<Job, FailureReason> {
        Ok(match kind {
            ActionKind::Formalize => {
                let informal = n.informal_statement.clone().unwrap_or_default();
                let prompt = render(
                    PromptKind::Formalizer,
                    PromptVars {
                        formal_statement_name: Some(generate_theorem_name(&informal)),
                        informal_statement: Some(informal),
                        ..Default::default()
                    },
                )?;
                chat(AgentRole::Formalizer, vec![ChatMessage::user(prompt)])
            }
            ActionKind::SyntaxCheck => Job::Verify {
                code: n.unit(n.candidate.as_deref().unwrap_or_default()),
            },
            ActionKind::SemanticCheck => {
                let prompt = render(
                    PromptKind::SemanticCheck,
                    PromptVars {
                        informal_statement: n.informal_statement.clone(),
                        formal_statement: Some(n.statement().to_string()),
                        ..Default::default()
                    },
                )?;
                chat(AgentRole::Semantics, vec![ChatMessage::user(prompt)])
            }
            ActionKind::Prove => {
                let mut thread = n.prover_thread.clone();
                if thread.is_empty() {
                    let unit = n.unit(n.statement());
                    thread.push(ChatMessage::user(render(
                        PromptKind::ProverInitial,
                        PromptVars {
                            formal_statement: Some(unit.trim().to_string()),
                            ..Default::default()
                        },
                    )?));
                }
                chat(AgentRole::Prover, thread)
            }
            ActionKind::Verify | ActionKind::SketchCheck => Job::Verify {
                code: n.unit(n.candidate.as_deref().unwrap_or_default()),
            },
            ActionKind::ParseAst => Job::Ast {
                code: n.unit(n.proof_attempt.as_deref().unwrap_or_default()),
            },
            ActionKind::ExtractSubgoals => Job::Ast {
                code: n.unit(n.sketch.as_deref().unwrap_or_default()),
            },
            ActionKind::GenQueries => {
                let vars = PromptVars {
                    formal_theorem: Some(n.statement().to_string()),
                    ..Default::default()
                };
                if n.backtracked {
                    let mut thread = n.decomposer_thread.clone();
                    thread.push(ChatMessage::user(render(PromptKind::QueryBacktrack, vars)?));
                    chat(AgentRole::SearchQuery, thread)
                } else {
                    chat(AgentRole::SearchQuery, vec![ChatMessage::user(render(PromptKind::QueryInitial, vars)?)])
                }
            }
            ActionKind::Lookup => Job::Search {
                queries: n.queries.clone(),
            },
            ActionKind::Sketch => {
                let mut thread = n.decomposer_thread.clone();
                if thread.is_empty() {
                    thread.push(ChatMessage::user(render(
                        PromptKind::DecomposerInitial,
                        PromptVars {
                            theorem_hints_section: Some(hints_section(n)),
                            formal_theorem: Some(n.statement().to_string()),
                            ..Default::default()
                        },
                    )?));
                } else if last_is_assistant(&thread) {
                    // A new decomposition after an earlier one was abandoned.
                    thread.push(ChatMessage::user(render(
                        PromptKind::DecomposerBacktrack,
                        PromptVars {
                            prev_round_num: Some(assistant_turns(&thread).to_string()),
                            theorem_hints_section: Some(hints_section(n)),
                            ..Default::default()
                        },
                    )?));
                }
                chat(AgentRole::Decomposer, thread)
            }
            ActionKind::Backtrack => Job::Nothing,
            ActionKind::Reconstruct => match tree.reconstruct(id) {
                Ok(code) => Job::Verify { code },
                Err(e) => Job::Abort(FailureReason::FinalVerification(e.to_string())),
            },
        })
    })();
    built.unwrap_or_else(Job::Abort)
}

pub(crate) async fn execute(job: Job, services: &Services, opts: &RunOptions) -> JobResult {
    match job {
        Job::Nothing => JobResult::Nothing,
        Job::Abort(r) => JobResult::Abort(r),
        Job::Chat { role, messages } => {
            let reply = services.chat.complete(role, &messages).await;
            JobResult::Chat { messages, reply }
        }
        Job::Verify { code } => {
            let result = services.lean.verify(&code, opts.lean_timeout_secs).await;
            JobResult::Verify { code, result }
        }
        Job::Ast { code } => JobResult::Ast(
            services
                .lean
                .fetch_ast(&code, &opts.module_name, opts.lean_timeout_secs)
                .await,
        ),
        Job::Search { queries } => JobResult::Search(services.search.search_theorems(&queries).await),
    }
}

fn last_user(messages: &[ChatMessage]) -> String {
    messages
        .iter()
        .rev()
        .find(|m| m.role == ChatRole::User)
        .map(|m| m.content.clone())
        .unwrap_or_default()
}

fn fail_node(tree: &mut ProofTree, id: NodeId, reason: FailureReason) -> Applied {
    let summary = format!("failed: {reason}");
    if let Ok(n) = tree.node_mut(id) {
        n.status = NodeStatus::Failed;
        n.failure = Some(reason);
    }
    Applied::ok(summary)
}

fn service_failure(tree: &mut ProofTree, id: NodeId, e: &ServiceError) -> Applied {
    fail_node(tree, id, FailureReason::ServiceError(e.to_string()))
}

pub(crate) fn apply(tree: &mut ProofTree, kind: ActionKind, id: NodeId, result: JobResult) -> Applied {
    if tree.node(id).is_err() {
        return Applied::ok("skipped: node no longer exists");
    }
    if let JobResult::Abort(reason) = result {
        return match kind {
            ActionKind::Reconstruct => Applied::end(format!("failed: {reason}"), Err(reason)),
            _ => fail_node(tree, id, reason),
        };
    }
    match (kind, result) {
        (ActionKind::Formalize, JobResult::Chat { messages, reply }) => formalized(tree, id, messages, reply),
        (ActionKind::SyntaxCheck, JobResult::Verify { code, result }) => syntax_checked(tree, id, code, result),
        (ActionKind::SemanticCheck, JobResult::Chat { messages, reply }) => semantics_checked(tree, id, messages, reply),
        (ActionKind::Prove, JobResult::Chat { messages, reply }) => proved(tree, id, messages, reply),
        (ActionKind::Verify, JobResult::Verify { code, result }) => verified(tree, id, code, result),
        (ActionKind::ParseAst, JobResult::Ast(result)) => parsed(tree, id, result),
        (ActionKind::GenQueries, JobResult::Chat { messages, reply }) => queried(tree, id, messages, reply),
        (ActionKind::Lookup, JobResult::Search(result)) => looked_up(tree, id, result),
        (ActionKind::Sketch, JobResult::Chat { messages, reply }) => sketched(tree, id, messages, reply),
        (ActionKind::SketchCheck, JobResult::Verify { code, result }) => sketch_checked(tree, id, code, result),
        (ActionKind::ExtractSubgoals, JobResult::Ast(result)) => extracted(tree, id, result),
        (ActionKind::Backtrack, _) => match tree.prune_subtree(id) {
            Ok(()) => Applied::ok("subtree pruned; re-decomposing"),
            Err(e) => fail_node(tree, id, FailureReason::ServiceError(e.to_string())),
        },
        (ActionKind::Reconstruct, JobResult::Verify { code, result }) => match result {
            Ok(v) if v.passed && v.complete => Applied::end("final verification passed", Ok(code)),
            Ok(v) => {
                let reason = FailureReason::FinalVerification(build_error_annotation(&code, &v));
                Applied::end("final verification failed", Err(reason))
            }
            Err(e) => Applied::end("final verification unavailable", Err(FailureReason::ServiceError(e.to_string()))),
        },
        (kind, _) => fail_node(
            tree,
            id,
            FailureReason::ServiceError(format!("internal: unexpected result for {kind}")),
        ),
    }
}

/// A formalization round was rejected: retry from the start or give up.
fn formalization_failed(tree: &mut ProofTree, id: NodeId, attempt: Attempt, summary: String) -> Applied {
    let limit = tree.limits.formalizer_max_retries;
    let _ = tree.record_attempt(id, attempt);
    let n = tree.node_mut(id).expect("checked by apply");
    n.candidate = None;
    if n.informal_statement.is_none() || n.counters.formalize_retries >= limit {
        return fail_node(tree, id, FailureReason::FormalizationExhausted);
    }
    n.status = NodeStatus::AwaitingFormalization;
    Applied::ok(summary)
}

fn formalized(tree: &mut ProofTree, id: NodeId, messages: Vec<ChatMessage>, reply: Result<String, ServiceError>) -> Applied {
    let prompt = last_user(&messages);
    let reply = match reply {
        Ok(r) => r,
        Err(e) => {
            let summary = format!("formalizer unavailable: {e}");
            return formalization_failed(tree, id, Attempt::new(AgentRole::Formalizer, prompt, e.to_string(), Outcome::Failure), summary);
        }
    };
    let parsed = extract_code_block(&reply).and_then(|block| {
        let src = split_source(&block);
        let body = statement_with_sorry(&src.body)?;
        Ok(LeanSource::new(normalize_preamble(&src.preamble).render(), body))
    });
    match parsed {
        Ok(src) => {
            let _ = tree.record_attempt(id, Attempt::new(AgentRole::Formalizer, prompt, reply, Outcome::Pending));
            let n = tree.node_mut(id).expect("checked by apply");
            n.candidate = Some(src.body.clone());
            n.formal = Some(src);
            n.status = NodeStatus::AwaitingSyntaxCheck;
            Applied::ok("statement drafted")
        }
        Err(e) => {
            let summary = format!("no usable statement: {e}");
            formalization_failed(tree, id, Attempt::new(AgentRole::Formalizer, prompt, reply, Outcome::Failure), summary)
        }
    }
}

fn syntax_checked(
    tree: &mut ProofTree,
    id: NodeId,
    code: String,
    result: Result<VerificationResult, ServiceError>,
) -> Applied {
    let v = match result {
        Ok(v) => v,
        Err(e) => return service_failure(tree, id, &e),
    };
    if !v.passed {
        let note = build_error_annotation(&code, &v);
        let attempt = Attempt::new(AgentRole::Formalizer, code, note, Outcome::Failure).with_verification(v);
        return formalization_failed(tree, id, attempt, "statement does not compile".into());
    }
    let _ = tree.record_attempt(
        id,
        Attempt::new(AgentRole::Formalizer, code, "", Outcome::Success).with_verification(v.clone()),
    );
    let n = tree.node_mut(id).expect("checked by apply");
    let candidate = n.candidate.take().unwrap_or_default();
    if let Some(f) = n.formal.as_mut() {
        f.body = candidate;
    }
    n.last_verification = Some(v);
    n.status = if n.informal_statement.is_some() {
        NodeStatus::AwaitingSemanticCheck
    } else {
        NodeStatus::AwaitingProof
    };
    Applied::ok("statement compiles")
}

fn semantics_checked(
    tree: &mut ProofTree,
    id: NodeId,
    messages: Vec<ChatMessage>,
    reply: Result<String, ServiceError>,
) -> Applied {
    let prompt = last_user(&messages);
    let reply = match reply {
        Ok(r) => r,
        Err(e) => {
            let summary = format!("semantic checker unavailable: {e}");
            return formalization_failed(tree, id, Attempt::new(AgentRole::Semantics, prompt, e.to_string(), Outcome::Failure), summary);
        }
    };
    match parse_judgement(&reply) {
        Ok(j) if j.verdict == Verdict::Appropriate => {
            let _ = tree.record_attempt(id, Attempt::new(AgentRole::Semantics, prompt, reply, Outcome::Success));
            tree.node_mut(id).expect("checked by apply").status = NodeStatus::AwaitingProof;
            Applied::ok("statement judged appropriate")
        }
        verdict => {
            let summary = match verdict {
                Ok(_) => "statement judged inappropriate".to_string(),
                Err(e) => format!("unreadable judgement: {e}"),
            };
            formalization_failed(tree, id, Attempt::new(AgentRole::Semantics, prompt, reply, Outcome::Failure), summary)
        }
    }
}

/// Header of a returned declaration must match the node's statement.
fn same_statement(n: &ProofNode, body: &str) -> Result<(), String> {
    let want = statement_header(n.statement());
    match statement_header(body) {
        Some(got) if Some(&got) == want.as_ref() => Ok(()),
        Some(got) => Err(format!(
            "the theorem statement was changed; expected `{}` but got `{got}`",
            want.unwrap_or_default()
        )),
        None => Err("the code block contains no theorem declaration".into()),
    }
}

/// Pull a declaration out of a reply that must keep the node's statement.
fn declaration_from_reply(n: &ProofNode, reply: &str) -> Result<String, String> {
    let block = extract_code_block(reply).map_err(|e| e.to_string())?;
    let body = split_source(&block).body;
    same_statement(n, &body)?;
    Ok(body)
}

fn proved(tree: &mut ProofTree, id: NodeId, mut messages: Vec<ChatMessage>, reply: Result<String, ServiceError>) -> Applied {
    let prompt = last_user(&messages);
    let reply = match reply {
        Ok(r) => r,
        Err(e) => {
            tree.node_mut(id).expect("checked by apply").prover_thread = messages;
            return prover_failed(tree, id, Attempt::new(AgentRole::Prover, prompt, e.to_string(), Outcome::Failure), &e.to_string());
        }
    };
    messages.push(ChatMessage::assistant(reply.clone()));
    let n = tree.node_mut(id).expect("checked by apply");
    n.prover_thread = messages;
    match declaration_from_reply(n, &reply) {
        Ok(body) => {
            n.candidate = Some(body);
            n.status = NodeStatus::AwaitingVerification;
            let _ = tree.record_attempt(id, Attempt::new(AgentRole::Prover, prompt, reply, Outcome::Pending));
            Applied::ok("proof drafted")
        }
        Err(why) => prover_failed(tree, id, Attempt::new(AgentRole::Prover, prompt, reply, Outcome::Failure), &why),
    }
}

fn verified(tree: &mut ProofTree, id: NodeId, code: String, result: Result<VerificationResult, ServiceError>) -> Applied {
    let v = match result {
        Ok(v) => v,
        Err(e) => return service_failure(tree, id, &e),
    };
    if v.passed && v.complete {
        let _ = tree.record_attempt(
            id,
            Attempt::new(AgentRole::Prover, code, "", Outcome::Success).with_verification(v.clone()),
        );
        let n = tree.node_mut(id).expect("checked by apply");
        n.proof_attempt = n.candidate.take();
        n.last_verification = Some(v);
        n.status = NodeStatus::AwaitingAstParse;
        return Applied::ok("proof verified");
    }
    let note = build_error_annotation(&code, &v);
    tree.node_mut(id).expect("checked by apply").last_verification = Some(v.clone());
    let attempt = Attempt::new(AgentRole::Prover, code, note.clone(), Outcome::Failure).with_verification(v);
    prover_failed(tree, id, attempt, &note)
}

/// Charge a failed proof round; continue the pass with a correction prompt,
/// start a new pass, or hand the node to decomposition.
fn prover_failed(tree: &mut ProofTree, id: NodeId, attempt: Attempt, error: &str) -> Applied {
    let limits = tree.limits;
    let _ = tree.record_attempt(id, attempt);
    let n = tree.node_mut(id).expect("checked by apply");
    n.candidate = None;
    if n.counters.self_correction_in_pass > 0 {
        if last_is_assistant(&n.prover_thread) {
            let prompt = render(
                PromptKind::ProverCorrection,
                PromptVars {
                    prev_round_num: Some(assistant_turns(&n.prover_thread).to_string()),
                    error_message_for_prev_round: Some(error.to_string()),
                    ..Default::default()
                },
            );
            match prompt {
                Ok(p) => n.prover_thread.push(ChatMessage::user(p)),
                Err(r) => return fail_node(tree, id, r),
            }
        }
        n.status = NodeStatus::AwaitingProof;
        return Applied::ok("proof rejected; correcting");
    }
    n.prover_thread.clear();
    if n.counters.passes_used < limits.prover_max_pass {
        n.status = NodeStatus::AwaitingProof;
        return Applied::ok(format!("pass {} ended", n.counters.passes_used));
    }
    if n.depth >= limits.max_depth {
        return fail_node(tree, id, FailureReason::DepthExceeded);
    }
    n.status = NodeStatus::AwaitingQueryGen;
    n.query_attempts = 0;
    Applied::ok("prover budget spent; decomposing")
}

fn parsed(tree: &mut ProofTree, id: NodeId, result: Result<(AstNode, Vec<SorryInfo>), ServiceError>) -> Applied {
    let summary = match result {
        Ok(_) => "proven".to_string(),
        Err(e) if e.is_unavailable() => return service_failure(tree, id, &e),
        Err(e) => {
            tracing::warn!(node = %id, error = %e, "proof AST not exported");
            format!("proven (AST not exported: {e})")
        }
    };
    if let Err(e) = tree.mark_proven(id) {
        return fail_node(tree, id, FailureReason::ServiceError(e.to_string()));
    }
    Applied::ok(summary)
}

fn queried(tree: &mut ProofTree, id: NodeId, messages: Vec<ChatMessage>, reply: Result<String, ServiceError>) -> Applied {
    let prompt = last_user(&messages);
    let (response, queries) = match reply {
        Ok(r) => {
            let q = parse_search_queries(&r).unwrap_or_default();
            (r, q)
        }
        Err(e) => (e.to_string(), Vec::new()),
    };
    let outcome = if queries.is_empty() { Outcome::Failure } else { Outcome::Success };
    let _ = tree.record_attempt(id, Attempt::new(AgentRole::SearchQuery, prompt, response, outcome));
    let n = tree.node_mut(id).expect("checked by apply");
    n.query_attempts += 1;
    if !queries.is_empty() {
        let summary = format!("{} queries", queries.len());
        n.queries = queries;
        n.status = NodeStatus::AwaitingLookup;
        return Applied::ok(summary);
    }
    if n.query_attempts < 2 {
        return Applied::ok("no queries; asking again");
    }
    n.queries.clear();
    n.hints.clear();
    n.status = NodeStatus::AwaitingSketch;
    Applied::ok("no queries; sketching without hints")
}

fn looked_up(tree: &mut ProofTree, id: NodeId, result: Result<Vec<TheoremHit>, ServiceError>) -> Applied {
    let n = tree.node_mut(id).expect("checked by apply");
    n.status = NodeStatus::AwaitingSketch;
    match result {
        Ok(hits) => {
            let summary = format!("{} hints", hits.len());
            n.hints = hits;
            Applied::ok(summary)
        }
        Err(e) => {
            tracing::warn!(node = %id, error = %e, "theorem search failed");
            n.hints.clear();
            Applied::ok(format!("search failed, no hints: {e}"))
        }
    }
}

fn sketched(tree: &mut ProofTree, id: NodeId, mut messages: Vec<ChatMessage>, reply: Result<String, ServiceError>) -> Applied {
    let prompt = last_user(&messages);
    let reply = match reply {
        Ok(r) => r,
        Err(e) => {
            tree.node_mut(id).expect("checked by apply").decomposer_thread = messages;
            return sketch_failed(tree, id, Attempt::new(AgentRole::Decomposer, prompt, e.to_string(), Outcome::Failure), &e.to_string());
        }
    };
    messages.push(ChatMessage::assistant(reply.clone()));
    let n = tree.node_mut(id).expect("checked by apply");
    n.decomposer_thread = messages;
    match declaration_from_reply(n, &reply) {
        Ok(body) => {
            n.candidate = Some(body);
            n.status = NodeStatus::AwaitingSketchCheck;
            let _ = tree.record_attempt(id, Attempt::new(AgentRole::Decomposer, prompt, reply, Outcome::Pending));
            Applied::ok("sketch drafted")
        }
        Err(why) => sketch_failed(tree, id, Attempt::new(AgentRole::Decomposer, prompt, reply, Outcome::Failure), &why),
    }
}

fn sketch_checked(tree: &mut ProofTree, id: NodeId, code: String, result: Result<VerificationResult, ServiceError>) -> Applied {
    let v = match result {
        Ok(v) => v,
        Err(e) => return service_failure(tree, id, &e),
    };
    if !v.passed {
        let note = build_error_annotation(&code, &v);
        let attempt = Attempt::new(AgentRole::Decomposer, code, note.clone(), Outcome::Failure).with_verification(v);
        return sketch_failed(tree, id, attempt, &note);
    }
    let _ = tree.record_attempt(
        id,
        Attempt::new(AgentRole::Decomposer, code, "", Outcome::Success).with_verification(v.clone()),
    );
    let n = tree.node_mut(id).expect("checked by apply");
    let candidate = n.candidate.take();
    n.status = NodeStatus::AwaitingAstParse;
    if v.complete {
        // The sketch closed every goal itself.
        n.proof_attempt = candidate;
        n.last_verification = Some(v);
        return Applied::ok("sketch is a complete proof");
    }
    n.sketch = candidate;
    n.last_verification = Some(v);
    Applied::ok("sketch compiles")
}

/// Charge a rejected sketch; ask for a correction or give the node up.
fn sketch_failed(tree: &mut ProofTree, id: NodeId, attempt: Attempt, error: &str) -> Applied {
    let limit = tree.limits.decomposer_self_correction;
    let _ = tree.record_attempt(id, attempt);
    let n = tree.node_mut(id).expect("checked by apply");
    n.candidate = None;
    n.sketch = None;
    if n.counters.sketch_corrections_used >= limit {
        return fail_node(tree, id, FailureReason::SketchExhausted);
    }
    if last_is_assistant(&n.decomposer_thread) {
        let prompt = render(
            PromptKind::DecomposerCorrection,
            PromptVars {
                prev_round_num: Some(assistant_turns(&n.decomposer_thread).to_string()),
                error_message_for_prev_round: Some(error.to_string()),
                ..Default::default()
            },
        );
        match prompt {
            Ok(p) => n.decomposer_thread.push(ChatMessage::user(p)),
            Err(r) => return fail_node(tree, id, r),
        }
    }
    n.status = NodeStatus::AwaitingSketch;
    Applied::ok("sketch rejected; correcting")
}

/// Subgoals of a checked sketch, each confirmed to have a splice site.
fn subgoals_of(sketch: &str, ast: &AstNode, sorries: &[SorryInfo]) -> Result<Vec<Subgoal>, String> {
    let subgoals = extract_subgoals(ast, sorries).map_err(|e| e.to_string())?;
    if subgoals.is_empty() {
        return Err("the sketch has no `have … := by sorry` subgoals".into());
    }
    for s in &subgoals {
        replace_subgoal(sketch, &s.name, "sorry").map_err(|e| e.to_string())?;
    }
    Ok(subgoals)
}

fn extracted(tree: &mut ProofTree, id: NodeId, result: Result<(AstNode, Vec<SorryInfo>), ServiceError>) -> Applied {
    let (ast, sorries) = match result {
        Ok(r) => r,
        Err(e) if e.is_unavailable() => return service_failure(tree, id, &e),
        Err(e) => {
            let why = e.to_string();
            return sketch_failed(tree, id, Attempt::new(AgentRole::Decomposer, "AST export", why.clone(), Outcome::Failure), &why);
        }
    };
    let sketch = tree.node(id).expect("checked by apply").sketch.clone().unwrap_or_default();
    match subgoals_of(&sketch, &ast, &sorries) {
        Ok(subgoals) => {
            for s in &subgoals {
                if let Err(e) = tree.add_child(id, s) {
                    return fail_node(tree, id, FailureReason::ServiceError(e.to_string()));
                }
            }
            tree.node_mut(id).expect("checked by apply").status = NodeStatus::AwaitingChildren;
            let names: Vec<&str> = subgoals.iter().map(|s| s.name.as_str()).collect();
            Applied::ok(format!("subgoals: {}", names.join(", ")))
        }
        Err(why) => sketch_failed(tree, id, Attempt::new(AgentRole::Decomposer, sketch, why.clone(), Outcome::Failure), &why),
    }
}
