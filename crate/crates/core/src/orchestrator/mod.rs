//! The supervisor: picks the next action from the proof tree, runs it
//! against the services, and applies the result.
//!
//! Service calls for a batch of same-kind, same-depth actions run
//! concurrently; every tree mutation happens on the coordinating task.

mod log;
mod steps;

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use futures::stream::{self, StreamExt};
use serde::Serialize;

pub use crate::config::Limits;
pub use log::{read_run_log, LogEntry, RunLog};

use crate::lean_source::LeanSource;
use crate::proof_state::{Counters, FailureReason, NodeId, NodeStatus, ProofTree, TreeError};
use crate::services::{ChatClient, LeanService, SearchService};
use steps::{Applied, Job};

pub const DEFAULT_MODULE_NAME: &str = "User.Code";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ActionKind {
    Formalize,
    SyntaxCheck,
    SemanticCheck,
    Prove,
    Verify,
    ParseAst,
    GenQueries,
    Lookup,
    Sketch,
    SketchCheck,
    ExtractSubgoals,
    Backtrack,
    Reconstruct,
}

impl ActionKind {
    /// Lower runs first.
    pub fn priority(self) -> u8 {
        match self {
            ActionKind::Backtrack => 0,
            ActionKind::Formalize => 1,
            ActionKind::SyntaxCheck => 2,
            ActionKind::SemanticCheck => 3,
            ActionKind::Prove => 4,
            ActionKind::Verify => 5,
            ActionKind::ParseAst => 6,
            ActionKind::GenQueries | ActionKind::Lookup => 7,
            ActionKind::Sketch | ActionKind::SketchCheck | ActionKind::ExtractSubgoals => 8,
            ActionKind::Reconstruct => 9,
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Conclusion {
    Success,
    Failure { node: NodeId, reason: FailureReason },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Step { kind: ActionKind, node: NodeId },
    Finish(Conclusion),
}

impl Action {
    pub fn step(kind: ActionKind, node: NodeId) -> Self {
        Action::Step { kind, node }
    }

    pub fn kind(&self) -> Option<ActionKind> {
        match self {
            Action::Step { kind, .. } => Some(*kind),
            Action::Finish(_) => None,
        }
    }

    pub fn node(&self) -> Option<NodeId> {
        match self {
            Action::Step { node, .. } => Some(*node),
            Action::Finish(_) => None,
        }
    }
}

/// The action a node's status calls for, if it can act on its own.
pub fn node_action(tree: &ProofTree, id: NodeId) -> Option<ActionKind> {
    let n = tree.nodes.get(&id)?;
    Some(match n.status {
        NodeStatus::AwaitingFormalization => ActionKind::Formalize,
        NodeStatus::AwaitingSyntaxCheck => ActionKind::SyntaxCheck,
        NodeStatus::AwaitingSemanticCheck => ActionKind::SemanticCheck,
        NodeStatus::AwaitingProof => ActionKind::Prove,
        NodeStatus::AwaitingVerification => ActionKind::Verify,
        NodeStatus::AwaitingAstParse if n.sketch.is_some() => ActionKind::ExtractSubgoals,
        NodeStatus::AwaitingAstParse => ActionKind::ParseAst,
        NodeStatus::AwaitingQueryGen => ActionKind::GenQueries,
        NodeStatus::AwaitingLookup => ActionKind::Lookup,
        NodeStatus::AwaitingSketch => ActionKind::Sketch,
        NodeStatus::AwaitingSketchCheck => ActionKind::SketchCheck,
        NodeStatus::AwaitingChildren | NodeStatus::Proven | NodeStatus::Failed => return None,
    })
}

/// Resolve a node that needed decomposition where it may not decompose
/// further: re-decompose a backtrackable ancestor, or give up.
pub fn handle_depth_overflow(tree: &ProofTree, node: NodeId) -> Action {
    let reason = tree
        .nodes
        .get(&node)
        .and_then(|n| n.failure.clone())
        .unwrap_or(FailureReason::DepthExceeded);
    match tree.find_backtrack_ancestor(node) {
        Ok(Some(a)) => Action::step(ActionKind::Backtrack, a),
        _ => Action::Finish(Conclusion::Failure { node, reason }),
    }
}

fn resolve_failure(tree: &ProofTree, node: NodeId) -> Action {
    let reason = tree.nodes[&node].failure.clone().unwrap_or(FailureReason::Stalled);
    match reason {
        FailureReason::DepthExceeded | FailureReason::SketchExhausted => handle_depth_overflow(tree, node),
        reason => Action::Finish(Conclusion::Failure { node, reason }),
    }
}

/// Every action that could run now, best first: by priority, then depth,
/// then creation order.
pub fn ready_actions(tree: &ProofTree) -> Vec<Action> {
    let by_depth = |a: &NodeId| (tree.nodes[a].depth, *a);
    if let Some(failed) = tree
        .iter()
        .filter(|n| n.status == NodeStatus::Failed)
        .map(|n| n.id)
        .min_by_key(by_depth)
    {
        return vec![resolve_failure(tree, failed)];
    }
    if tree.root_node().status == NodeStatus::Proven {
        return vec![Action::step(ActionKind::Reconstruct, tree.root)];
    }
    let mut ready: Vec<(u8, u32, NodeId, ActionKind)> = tree
        .iter()
        .filter_map(|n| node_action(tree, n.id).map(|k| (k.priority(), n.depth, n.id, k)))
        .collect();
    if ready.is_empty() {
        return vec![Action::Finish(Conclusion::Failure {
            node: tree.root,
            reason: FailureReason::Stalled,
        })];
    }
    ready.sort();
    ready.into_iter().map(|(_, _, id, k)| Action::step(k, id)).collect()
}

/// The single highest-priority action.
pub fn next_action(tree: &ProofTree) -> Action {
    ready_actions(tree).swap_remove(0)
}

/// Leading actions sharing the first one's kind and depth, at most `cap`.
pub fn next_batch(tree: &ProofTree, cap: usize) -> Vec<Action> {
    let ready = ready_actions(tree);
    let first = ready[0].clone();
    let Action::Step { kind, node } = first else {
        return vec![first];
    };
    if matches!(kind, ActionKind::Backtrack | ActionKind::Reconstruct) {
        return vec![first];
    }
    let depth = tree.nodes[&node].depth;
    ready
        .into_iter()
        .take_while(|a| a.kind() == Some(kind) && a.node().is_some_and(|n| tree.nodes[&n].depth == depth))
        .take(cap.max(1))
        .collect()
}

#[derive(Clone)]
pub struct Services {
    pub chat: Arc<dyn ChatClient>,
    pub lean: Arc<dyn LeanService>,
    pub search: Arc<dyn SearchService>,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Concurrent service calls per batch.
    pub workers: usize,
    pub lean_timeout_secs: u64,
    pub module_name: String,
    /// Rewritten after every batch when set.
    pub checkpoint: Option<PathBuf>,
    pub run_log: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: 4,
            lean_timeout_secs: 300,
            module_name: DEFAULT_MODULE_NAME.to_string(),
            checkpoint: None,
            run_log: None,
        }
    }
}

/// Hooks for watching a run.
pub trait RunObserver: Send + Sync {
    fn on_dispatch(&self, _tree: &ProofTree, _batch: &[Action]) {}
    fn on_event(&self, _entry: &LogEntry) {}
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailureReport {
    pub node: NodeId,
    pub reason: FailureReason,
    pub depth: u32,
    pub subgoal: Option<String>,
    pub statement: String,
    pub counters: Counters,
    pub limits: Limits,
}

impl FailureReport {
    fn new(tree: &ProofTree, node: NodeId, reason: FailureReason) -> Self {
        let n = tree.nodes.get(&node).unwrap_or_else(|| tree.root_node());
        Self {
            node,
            reason,
            depth: n.depth,
            subgoal: n.name.clone(),
            statement: n
                .formal
                .as_ref()
                .map(|f| f.body.clone())
                .or_else(|| n.informal_statement.clone())
                .unwrap_or_default(),
            counters: n.counters,
            limits: tree.limits,
        }
    }
}

impl fmt::Display for FailureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.counters;
        let l = &self.limits;
        writeln!(f, "proof search failed: {}", self.reason)?;
        write!(f, "node {} at depth {}", self.node, self.depth)?;
        if let Some(s) = &self.subgoal {
            write!(f, " (subgoal `{s}`)")?;
        }
        writeln!(f)?;
        writeln!(f, "formalization rounds: {}/{}", c.formalize_retries, l.formalizer_max_retries)?;
        writeln!(f, "prover passes: {}/{}", c.passes_used, l.prover_max_pass)?;
        writeln!(f, "sketch corrections: {}/{}", c.sketch_corrections_used, l.decomposer_self_correction)?;
        writeln!(f, "re-decompositions: {}/{}", c.decompositions_used, l.decomposition_budget())?;
        writeln!(f, "maximum depth: {}", l.max_depth)?;
        if !self.statement.is_empty() {
            writeln!(f, "\nstatement:\n{}", self.statement)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunOutcome {
    /// A complete unit (preamble and proof) that passed final verification.
    Proved(String),
    Failed(FailureReport),
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub outcome: RunOutcome,
    pub tree: ProofTree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProveOutcome {
    Proven,
    /// The pass ended without a proof; more passes remain.
    PassExhausted,
    NeedsDecomposition,
    Failed,
}

pub struct Orchestrator {
    services: Services,
    options: RunOptions,
    observers: Vec<Arc<dyn RunObserver>>,
}

impl Orchestrator {
    pub fn new(services: Services, options: RunOptions) -> Self {
        Self {
            services,
            options,
            observers: Vec::new(),
        }
    }

    pub fn with_observer(mut self, o: Arc<dyn RunObserver>) -> Self {
        self.observers.push(o);
        self
    }

    pub fn options(&self) -> &RunOptions {
        &self.options
    }

    pub async fn prove_informal(&self, statement: &str, limits: Limits) -> RunReport {
        self.run(ProofTree::new_informal(statement, limits)).await
    }

    pub async fn prove_formal(&self, source: LeanSource, limits: Limits) -> RunReport {
        self.run(ProofTree::new_formal(source, limits)).await
    }

    /// Drive `tree` until a conclusion. Also used to resume a checkpoint.
    pub async fn run(&self, mut tree: ProofTree) -> RunReport {
        let mut log = RunLog::open(self.options.run_log.as_deref());
        loop {
            let batch = next_batch(&tree, self.options.workers);
            for o in &self.observers {
                o.on_dispatch(&tree, &batch);
            }
            if let [Action::Finish(c)] = batch.as_slice() {
                let outcome = match c {
                    Conclusion::Failure { node, reason } => {
                        RunOutcome::Failed(FailureReport::new(&tree, *node, reason.clone()))
                    }
                    // Success is only reached through Reconstruct below.
                    Conclusion::Success => RunOutcome::Failed(FailureReport::new(&tree, tree.root, FailureReason::Stalled)),
                };
                self.emit(&mut log, tree.root, "Finish", &outcome_label(&outcome));
                self.save(&tree);
                return RunReport { outcome, tree };
            }
            let results = self.execute_batch(&tree, &batch).await;
            for (kind, node, result) in results {
                let applied = steps::apply(&mut tree, kind, node, result);
                self.emit(&mut log, node, &kind.to_string(), &applied.summary);
                if let Some(end) = applied.finish {
                    let outcome = match end {
                        Ok(proof) => RunOutcome::Proved(proof),
                        Err(reason) => RunOutcome::Failed(FailureReport::new(&tree, node, reason)),
                    };
                    self.emit(&mut log, tree.root, "Finish", &outcome_label(&outcome));
                    self.save(&tree);
                    return RunReport { outcome, tree };
                }
            }
            debug_assert!(tree.validate().is_ok(), "{:?}", tree.validate());
            self.save(&tree);
        }
    }

    async fn execute_batch(&self, tree: &ProofTree, batch: &[Action]) -> Vec<(ActionKind, NodeId, steps::JobResult)> {
        let jobs: Vec<(ActionKind, NodeId, Job)> = batch
            .iter()
            .filter_map(|a| match a {
                Action::Step { kind, node } => Some((*kind, *node, steps::prepare(tree, *kind, *node))),
                Action::Finish(_) => None,
            })
            .collect();
        let mut results: Vec<_> = stream::iter(jobs)
            .map(|(kind, node, job)| async move { (kind, node, steps::execute(job, &self.services, &self.options).await) })
            .buffer_unordered(self.options.workers.max(1))
            .collect()
            .await;
        results.sort_by_key(|(_, node, _)| *node);
        results
    }

    /// Run one action on one node, serially.
    pub async fn step(&self, tree: &mut ProofTree, kind: ActionKind, node: NodeId) -> Applied {
        let job = steps::prepare(tree, kind, node);
        let result = steps::execute(job, &self.services, &self.options).await;
        let applied = steps::apply(tree, kind, node, result);
        let entry = LogEntry::now(node, &kind.to_string(), &applied.summary);
        for o in &self.observers {
            o.on_event(&entry);
        }
        applied
    }

    async fn drive(&self, tree: &mut ProofTree, node: NodeId, keep_going: impl Fn(&ProofTree) -> bool) -> Result<(), TreeError> {
        loop {
            tree.node(node)?;
            if !keep_going(tree) {
                return Ok(());
            }
            let Some(kind) = node_action(tree, node) else {
                return Ok(());
            };
            if self.step(tree, kind, node).await.finish.is_some() {
                return Ok(());
            }
        }
    }

    /// Formalize, syntax-check and semantic-check `node` until it awaits a
    /// proof or its budget is spent.
    pub async fn run_formalization(&self, tree: &mut ProofTree, node: NodeId) -> Result<(), FailureReason> {
        self.drive(tree, node, |t| {
            matches!(
                t.nodes[&node].status,
                NodeStatus::AwaitingFormalization | NodeStatus::AwaitingSyntaxCheck | NodeStatus::AwaitingSemanticCheck
            )
        })
        .await
        .map_err(|e| FailureReason::ServiceError(e.to_string()))?;
        let n = &tree.nodes[&node];
        match n.status {
            NodeStatus::Failed => Err(n.failure.clone().unwrap_or(FailureReason::FormalizationExhausted)),
            _ => Ok(()),
        }
    }

    fn prove_outcome(tree: &ProofTree, node: NodeId) -> ProveOutcome {
        match tree.nodes[&node].status {
            NodeStatus::AwaitingAstParse | NodeStatus::Proven => ProveOutcome::Proven,
            NodeStatus::AwaitingQueryGen => ProveOutcome::NeedsDecomposition,
            NodeStatus::Failed if tree.nodes[&node].failure == Some(FailureReason::DepthExceeded) => {
                ProveOutcome::NeedsDecomposition
            }
            NodeStatus::AwaitingProof | NodeStatus::AwaitingVerification => ProveOutcome::PassExhausted,
            _ => ProveOutcome::Failed,
        }
    }

    fn proving(tree: &ProofTree, node: NodeId) -> bool {
        matches!(
            tree.nodes[&node].status,
            NodeStatus::AwaitingProof | NodeStatus::AwaitingVerification
        )
    }

    /// One prover pass: the initial prompt and its corrections.
    pub async fn run_prover_pass(&self, tree: &mut ProofTree, node: NodeId) -> ProveOutcome {
        let Ok(start) = tree.node(node).map(|n| n.counters.passes_used) else {
            return ProveOutcome::Failed;
        };
        let _ = self
            .drive(tree, node, |t| Self::proving(t, node) && t.nodes[&node].counters.passes_used == start)
            .await;
        Self::prove_outcome(tree, node)
    }

    /// Prover passes until a proof verifies or the pass budget is spent.
    pub async fn run_prover(&self, tree: &mut ProofTree, node: NodeId) -> ProveOutcome {
        if tree.node(node).is_err() {
            return ProveOutcome::Failed;
        }
        let _ = self.drive(tree, node, |t| Self::proving(t, node)).await;
        Self::prove_outcome(tree, node)
    }

    /// Queries, lookup, sketching and extraction for one node; returns the
    /// children created (none when the sketch was already a full proof).
    pub async fn run_decomposition(&self, tree: &mut ProofTree, node: NodeId) -> Result<Vec<NodeId>, FailureReason> {
        self.drive(tree, node, |t| {
            let n = &t.nodes[&node];
            matches!(
                n.status,
                NodeStatus::AwaitingQueryGen
                    | NodeStatus::AwaitingLookup
                    | NodeStatus::AwaitingSketch
                    | NodeStatus::AwaitingSketchCheck
            ) || (n.status == NodeStatus::AwaitingAstParse && n.sketch.is_some())
        })
        .await
        .map_err(|e| FailureReason::ServiceError(e.to_string()))?;
        let n = &tree.nodes[&node];
        match n.status {
            NodeStatus::Failed => Err(n.failure.clone().unwrap_or(FailureReason::SketchExhausted)),
            _ => Ok(n.children.clone()),
        }
    }

    fn emit(&self, log: &mut RunLog, node: NodeId, action: &str, outcome: &str) {
        let entry = LogEntry::now(node, action, outcome);
        tracing::info!(node = %node, action, outcome, "step");
        log.write(&entry);
        for o in &self.observers {
            o.on_event(&entry);
        }
    }

    fn save(&self, tree: &ProofTree) {
        if let Some(path) = &self.options.checkpoint {
            if let Err(e) = tree.save_checkpoint(path) {
                tracing::warn!(path = %path.display(), error = %e, "checkpoint not written");
            }
        }
    }
}

fn outcome_label(o: &RunOutcome) -> String {
    match o {
        RunOutcome::Proved(_) => "success".into(),
        RunOutcome::Failed(r) => format!("failure: {}", r.reason),
    }
}
